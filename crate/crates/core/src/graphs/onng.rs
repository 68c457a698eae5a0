use crate::error::{GeoError, Result};
use crate::graphs::{Edge, WeightFunction, WeightedTree};
use crate::point_process::{lex_cmp, PointConfiguration, Region};
use crate::spatial::KdTree;

fn time_marks(config: &PointConfiguration) -> Result<&[f64]> {
    config.time_marks().ok_or(GeoError::MarkMismatch {
        expected: "time",
        got: config.mark_variant().name(),
    })
}

/// Arrival rank of each point: by time mark, ties broken by coordinates
/// then index.
pub(crate) fn arrival_ranks(config: &PointConfiguration, times: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by(|&a, &b| {
        times[a]
            .total_cmp(&times[b])
            .then_with(|| lex_cmp(config.point(a), config.point(b)))
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// For every point, the nearest point that arrived before it (`None` for
/// the first arrival).
pub fn onng_parents(config: &PointConfiguration) -> Result<Vec<Option<usize>>> {
    let times = time_marks(config)?;
    let rank = arrival_ranks(config, times);
    let tree = KdTree::new(config);
    Ok((0..config.len())
        .map(|i| {
            if rank[i] == 0 {
                None
            } else {
                let r = rank[i];
                tree.nearest_filtered(config.point(i), |j| rank[j] < r).map(|(j, _)| j)
            }
        })
        .collect())
}

/// On-line nearest neighbour graph: in arrival order, the second vertex is
/// joined to the first and every later vertex to its nearest predecessor.
pub fn build_onng(config: &PointConfiguration) -> Result<WeightedTree> {
    let parents = onng_parents(config)?;
    let edges = parents
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|j| Edge::between(config, i, j)))
        .collect();
    Ok(WeightedTree::from_parts(config.clone(), edges))
}

/// `sum over vertices v in C of sum over edges e at v of w(|e|)`. An edge
/// with both endpoints in `C` is counted twice; `window = None` means `C`
/// is the whole vertex set.
pub fn onng_length(tree: &WeightedTree, w: &WeightFunction, window: Option<&Region>) -> Result<f64> {
    let base = tree.base();
    if let Some(r) = window {
        if r.dim() != base.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: base.dim(),
                got: r.dim(),
            });
        }
    }
    let inside = |i: usize| window.map_or(true, |r| r.contains(base.point(i)));
    Ok(tree
        .edges()
        .iter()
        .map(|e| {
            let k = inside(e.a) as u8 + inside(e.b) as u8;
            if k == 0 {
                0.0
            } else {
                k as f64 * w.eval(e.length)
            }
        })
        .sum())
}
