//! Euclidean minimal spanning trees.
//!
//! Batch construction is Kruskal over a certified candidate edge set:
//! k-nearest-neighbour edges give a first spanning tree with longest edge
//! `M`, and every point whose k-th neighbour is not farther than `M`
//! contributes all its edges of length `<= M`. The candidate set then holds
//! every edge of length `<= M`, which contains the exact tree, so the
//! output equals complete-graph Kruskal edge for edge (ties included).
//!
//! Incremental insertion is the add-and-delete scheme: attach the new
//! vertex by its first candidate edge, then add the remaining candidate
//! edges one at a time, each time deleting the longest edge of the cycle
//! it closes.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::graphs::{Edge, UnionFind, WeightFunction, WeightedTree};
use crate::point_process::{dist, dist_inf, lex_cmp, Mark, Point, PointConfiguration};
use crate::spatial::{KdTree, BRUTE_FORCE_BELOW};

const CANDIDATE_K: usize = 16;

fn kruskal(n: usize, mut candidates: Vec<Edge>) -> (Vec<Edge>, bool) {
    candidates.sort_by(Edge::key_cmp);
    let mut uf = UnionFind::new(n);
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for e in candidates {
        if uf.union(e.a, e.b) {
            out.push(e);
            if out.len() + 1 == n {
                break;
            }
        }
    }
    let spanning = out.len() + 1 >= n;
    (out, spanning)
}

/// Kruskal over the complete graph, `O(n^2 log n)`.
pub fn build_mst_brute(config: &PointConfiguration) -> WeightedTree {
    let n = config.len();
    let mut cands = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            cands.push(Edge::between(config, i, j));
        }
    }
    let (edges, _) = kruskal(n, cands);
    WeightedTree::from_parts(config.clone(), edges)
}

/// Exact Euclidean MST; ties broken by `(length, endpoint indices)`.
pub fn build_mst_kruskal(config: &PointConfiguration) -> WeightedTree {
    let n = config.len();
    if n < BRUTE_FORCE_BELOW {
        return build_mst_brute(config);
    }
    let tree = KdTree::new(config);
    let mut k = CANDIDATE_K;
    loop {
        let kk = k.min(n - 1);
        let mut cands = Vec::with_capacity(n * kk);
        let mut kth = vec![0.0f64; n];
        for i in 0..n {
            let nn = tree.knn(config.point(i), kk + 1);
            for &(j, _) in &nn {
                if j != i {
                    cands.push(Edge::between(config, i, j));
                }
            }
            kth[i] = nn.last().map_or(0.0, |x| x.1);
        }
        dedup(&mut cands);
        let (first, spanning) = kruskal(n, cands.clone());
        if !spanning {
            if kk + 1 >= n {
                unreachable!("complete candidate graph is connected");
            }
            k *= 2;
            continue;
        }
        let longest = first.iter().map(|e| e.length).fold(0.0, f64::max);
        let mut extra = false;
        for i in 0..n {
            if kk + 1 < n && kth[i] <= longest {
                extra = true;
                for j in tree.within(config.point(i), longest) {
                    if j != i {
                        cands.push(Edge::between(config, i, j));
                    }
                }
            }
        }
        if !extra {
            return WeightedTree::from_parts(config.clone(), first);
        }
        dedup(&mut cands);
        let (edges, _) = kruskal(n, cands);
        return WeightedTree::from_parts(config.clone(), edges);
    }
}

fn dedup(cands: &mut Vec<Edge>) {
    cands.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    cands.dedup_by(|x, y| x.a == y.a && x.b == y.b);
}

/// `sum over tree edges of w(|e|)`.
pub fn mst_length(tree: &WeightedTree, w: &WeightFunction) -> f64 {
    tree.total(w)
}

/// Maximum vertex degree (0 for trees without edges).
pub fn max_degree(tree: &WeightedTree) -> usize {
    tree.degrees().into_iter().max().unwrap_or(0)
}

/// Order in which the candidate edges `{x, y}` are fed to the
/// add-and-delete scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertionOrder {
    /// By sup-norm distance to `x`. Runs on a configuration and on its
    /// restriction to a cube centered at `x` then share a common prefix.
    Chebyshev,
    /// By Euclidean distance to `x`; same property for balls.
    Euclidean,
}

impl InsertionOrder {
    fn bound(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            InsertionOrder::Chebyshev => dist_inf(x, y),
            InsertionOrder::Euclidean => dist(x, y),
        }
    }
}

/// One add-and-delete step: the edge `e_i` attached to the new vertex and
/// the longest cycle edge deleted afterwards (none at step 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionStep {
    pub added: Edge,
    pub removed: Option<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionTrace {
    pub order: InsertionOrder,
    /// Index of the inserted point in the augmented configuration.
    pub new_index: usize,
    pub steps: Vec<InsertionStep>,
}

impl InsertionTrace {
    /// Lengths of the removed edges `f_1, f_2, ...`.
    pub fn removed_lengths(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter_map(|s| s.removed.map(|e| e.length))
            .collect()
    }

    /// Add-one cost read off the trace:
    /// `sum_i w(|e_i|) - sum_i w(|f_i|)`.
    pub fn add_one_cost(&self, w: &WeightFunction) -> f64 {
        let added: f64 = self.steps.iter().map(|s| w.eval(s.added.length)).sum();
        let removed: f64 = self
            .steps
            .iter()
            .filter_map(|s| s.removed)
            .map(|e| w.eval(e.length))
            .sum();
        added - removed
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(Edge);

impl Eq for Key {}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.key_cmp(&other.0)
    }
}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// `MST(U + {p})` from `MST(U)` by add-and-delete in Chebyshev order.
/// The base configuration must be unmarked.
pub fn mst_insert(tree: &WeightedTree, p: &Point) -> Result<(WeightedTree, InsertionTrace)> {
    mst_insert_ordered(tree, p, Mark::None, InsertionOrder::Chebyshev)
}

pub fn mst_insert_ordered(
    tree: &WeightedTree,
    p: &Point,
    mark: Mark,
    order: InsertionOrder,
) -> Result<(WeightedTree, InsertionTrace)> {
    let base = tree.base();
    let config = base.add_point(p, mark)?;
    let n = base.len();
    let x = n;
    let xp = p.coords();

    // candidate order: (bound, euclidean length, coordinates)
    let mut cand: Vec<(f64, f64, usize)> = (0..n)
        .map(|j| (order.bound(xp, base.point(j)), dist(xp, base.point(j)), j))
        .collect();
    cand.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then_with(|| lex_cmp(base.point(a.2), base.point(b.2)))
    });

    let mut trace = InsertionTrace {
        order,
        new_index: x,
        steps: Vec::with_capacity(n),
    };
    if n == 0 {
        return Ok((WeightedTree::from_parts(config, Vec::new()), trace));
    }

    let mut adj: Vec<Vec<(usize, Edge)>> = vec![Vec::new(); n + 1];
    let mut keys: BTreeSet<Key> = BTreeSet::new();
    for e in tree.edges() {
        adj[e.a].push((e.b, *e));
        adj[e.b].push((e.a, *e));
        keys.insert(Key(*e));
    }

    let first = Edge::new(x, cand[0].2, cand[0].1);
    adj[x].push((cand[0].2, first));
    adj[cand[0].2].push((x, first));
    keys.insert(Key(first));
    trace.steps.push(InsertionStep {
        added: first,
        removed: None,
    });

    let mut prev = vec![usize::MAX; n + 1];
    let mut prev_edge: Vec<Option<Edge>> = vec![None; n + 1];
    let mut stack = Vec::new();
    let mut saturated = false;
    for &(bound, len, y) in &cand[1..] {
        let e = Edge::new(x, y, len);
        if !saturated {
            let longest = keys.iter().next_back().map_or(0.0, |k| k.0.length);
            // the tree's longest edge never grows, and bounds only grow
            if bound > longest {
                saturated = true;
            }
        }
        if saturated {
            trace.steps.push(InsertionStep {
                added: e,
                removed: Some(e),
            });
            continue;
        }
        // tree path y -> x
        prev.iter_mut().for_each(|v| *v = usize::MAX);
        stack.clear();
        stack.push(y);
        prev[y] = y;
        while let Some(v) = stack.pop() {
            if v == x {
                break;
            }
            for &(w, ew) in &adj[v] {
                if prev[w] == usize::MAX {
                    prev[w] = v;
                    prev_edge[w] = Some(ew);
                    stack.push(w);
                }
            }
        }
        let mut worst = e;
        let mut v = x;
        while v != y {
            let ev = prev_edge[v].expect("tree is connected");
            if ev.key_cmp(&worst).is_gt() {
                worst = ev;
            }
            v = prev[v];
        }
        if worst.key_cmp(&e).is_ne() {
            adj[worst.a].retain(|&(w, _)| w != worst.b);
            adj[worst.b].retain(|&(w, _)| w != worst.a);
            keys.remove(&Key(worst));
            adj[x].push((y, e));
            adj[y].push((x, e));
            keys.insert(Key(e));
        }
        trace.steps.push(InsertionStep {
            added: e,
            removed: Some(worst),
        });
    }

    let edges: Vec<Edge> = keys.into_iter().map(|k| k.0).collect();
    Ok((WeightedTree::from_parts(config, edges), trace))
}

/// Outcome of a minimax check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub passed: bool,
    /// A pair whose tree path is not minimax.
    pub witness: Option<(usize, usize)>,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimaxMode {
    /// Decide over all paths of the complete graph; at most 12 points.
    Exhaustive,
    /// Compare against this many random simple paths per pair.
    Sampled { paths: usize, seed: u64 },
}

/// Checks that every tree path minimises the maximal edge length among all
/// paths between its endpoints in the complete graph.
pub fn verify_minimax(tree: &WeightedTree, mode: MinimaxMode) -> Result<MinimaxReport> {
    let cfg = tree.base();
    let n = cfg.len();
    if let MinimaxMode::Exhaustive = mode {
        if n > 12 {
            return Err(GeoError::param("mode", "exhaustive minimax check is limited to 12 points"));
        }
    }
    let adj = tree.adjacency();
    let mut pairs = 0;
    for s in 0..n {
        let tree_max = path_maxima(&adj, s);
        for t in s + 1..n {
            pairs += 1;
            let bound = tree_max[t];
            let beaten = match mode {
                MinimaxMode::Exhaustive => reachable_below(cfg, s, t, bound),
                MinimaxMode::Sampled { paths, seed } => {
                    let mut rng = crate::point_process::SeedState::new(seed, (s * n + t) as u64).rng();
                    (0..paths).any(|_| random_path_max(cfg, s, t, &mut rng) < bound)
                }
            };
            if beaten {
                return Ok(MinimaxReport {
                    passed: false,
                    witness: Some((s, t)),
                    pairs_checked: pairs,
                });
            }
        }
    }
    Ok(MinimaxReport {
        passed: true,
        witness: None,
        pairs_checked: pairs,
    })
}

/// Maximal edge length on the tree path from `s` to every vertex.
fn path_maxima(adj: &[Vec<(usize, f64)>], s: usize) -> Vec<f64> {
    let mut best = vec![f64::NAN; adj.len()];
    best[s] = 0.0;
    let mut stack = vec![s];
    while let Some(v) = stack.pop() {
        for &(w, len) in &adj[v] {
            if best[w].is_nan() {
                best[w] = best[v].max(len);
                stack.push(w);
            }
        }
    }
    best
}

/// Whether some path of the complete graph joins `s` and `t` using only
/// edges strictly shorter than `bound`.
fn reachable_below(cfg: &PointConfiguration, s: usize, t: usize, bound: f64) -> bool {
    let n = cfg.len();
    let mut seen = vec![false; n];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(v) = stack.pop() {
        if v == t {
            return true;
        }
        for w in 0..n {
            if !seen[w] && dist(cfg.point(v), cfg.point(w)) < bound {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

fn random_path_max<R: Rng>(cfg: &PointConfiguration, s: usize, t: usize, rng: &mut R) -> f64 {
    let mut inner: Vec<usize> = (0..cfg.len()).filter(|&v| v != s && v != t).collect();
    inner.shuffle(rng);
    let k = rng.random_range(0..=inner.len());
    let mut prev = s;
    let mut worst = 0.0f64;
    for &v in inner[..k].iter().chain(std::iter::once(&t)) {
        worst = worst.max(dist(cfg.point(prev), cfg.point(v)));
        prev = v;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{sample_poisson, Region, SeedState};

    fn chain() -> PointConfiguration {
        PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]]).unwrap()
    }

    #[test]
    fn collinear_chain() {
        let t = build_mst_kruskal(&chain());
        let mut lens: Vec<f64> = t.edges().iter().map(|e| e.length).collect();
        lens.sort_by(f64::total_cmp);
        assert_eq!(lens, vec![1.0, 2.0]);
        assert_eq!(mst_length(&t, &WeightFunction::Identity), 3.0);
        assert_eq!(mst_length(&t, &WeightFunction::IndicatorLe(1.5)), 1.0);
        assert_eq!(mst_length(&t, &WeightFunction::Power(2.0)), 5.0);
        assert_eq!(max_degree(&t), 2);
    }

    #[test]
    fn unit_square_corners() {
        let c = PointConfiguration::from_points(
            2,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        let t = build_mst_kruskal(&c);
        // brute force over all 16 spanning trees of K4
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
        let mut best = f64::INFINITY;
        let mut count = 0;
        for mask in 0u32..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            let chosen: Vec<(usize, usize)> = (0..6).filter(|b| mask >> b & 1 == 1).map(|b| pairs[b]).collect();
            if let Ok(tr) = WeightedTree::from_edges(c.clone(), chosen) {
                count += 1;
                best = best.min(tr.total(&WeightFunction::Identity));
            }
        }
        assert_eq!(count, 16);
        assert_eq!(best, 3.0);
        assert_eq!(mst_length(&t, &WeightFunction::Identity), 3.0);
        assert!(matches!(max_degree(&t), 2 | 3));
    }

    #[test]
    fn insert_into_chain() {
        let t = build_mst_kruskal(&chain());
        let (t2, trace) = mst_insert(&t, &Point::from([2.0, 0.0])).unwrap();
        assert!(t2.edges().iter().all(|e| e.length == 1.0));
        assert_eq!(mst_length(&t2, &WeightFunction::Identity), 3.0);
        let dropped: Vec<&InsertionStep> = trace
            .steps
            .iter()
            .filter(|s| s.removed.is_some_and(|f| f != s.added))
            .collect();
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].removed.unwrap().length, 2.0);
        assert_eq!(trace.add_one_cost(&WeightFunction::Identity), 0.0);
        assert!(mst_insert(&t, &Point::from([1.0, 0.0])).is_err());
    }

    #[test]
    fn insert_into_tiny_bases() {
        let empty = build_mst_kruskal(&PointConfiguration::empty(2));
        let (t, trace) = mst_insert(&empty, &Point::from([0.0, 0.0])).unwrap();
        assert!(t.edges().is_empty() && trace.steps.is_empty());
        let (t2, _) = mst_insert(&t, &Point::from([0.0, 2.0])).unwrap();
        assert_eq!(t2.edges().len(), 1);
        assert_eq!(t2.edges()[0].length, 2.0);
    }

    #[test]
    fn certified_candidates_match_complete_graph() {
        for (dim, seed) in [(2, 1u64), (2, 2), (3, 3)] {
            let w = Region::cube(Point::origin(dim), 7.0).unwrap();
            let c = sample_poisson(&w, 1.0, SeedState::new(seed, 0)).unwrap();
            assert!(c.len() > 150);
            assert_eq!(build_mst_kruskal(&c).edge_set(), build_mst_brute(&c).edge_set());
        }
        // strongly clustered input: kNN graph alone is disconnected
        let mut pts = Vec::new();
        for i in 0..40 {
            pts.push(vec![0.001 * i as f64, 0.0]);
            pts.push(vec![100.0 + 0.001 * i as f64, 3.0]);
        }
        let c = PointConfiguration::from_points(2, &pts).unwrap();
        assert_eq!(build_mst_kruskal(&c).edge_set(), build_mst_brute(&c).edge_set());
    }

    #[test]
    fn minimax_detects_corruption() {
        let w = Region::cube(Point::origin(2), 1.5).unwrap();
        let c = sample_poisson(&w, 1.0, SeedState::new(5, 3)).unwrap();
        let c = c.select(&(0..8.min(c.len())).collect::<Vec<_>>());
        let t = build_mst_kruskal(&c);
        assert!(verify_minimax(&t, MinimaxMode::Exhaustive).unwrap().passed);
        // swap in a non-tree edge and drop the longest edge of its cycle
        let n = c.len();
        let set = t.edge_set();
        let (u, v) = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|p| !set.contains(p))
            .unwrap();
        let adj = t.adjacency();
        // path u -> v
        let mut prev = vec![usize::MAX; n];
        prev[u] = u;
        let mut st = vec![u];
        while let Some(a) = st.pop() {
            for &(b, _) in &adj[a] {
                if prev[b] == usize::MAX {
                    prev[b] = a;
                    st.push(b);
                }
            }
        }
        let mut worst = (0, 0, -1.0);
        let mut cur = v;
        while cur != u {
            let p = prev[cur];
            let l = dist(c.point(cur), c.point(p));
            if l > worst.2 {
                worst = (p.min(cur), p.max(cur), l);
            }
            cur = p;
        }
        let mut edges: Vec<(usize, usize)> = set.into_iter().filter(|&e| e != (worst.0, worst.1)).collect();
        edges.push((u, v));
        let bad = WeightedTree::from_edges(c.clone(), edges).unwrap();
        let rep = verify_minimax(&bad, MinimaxMode::Exhaustive).unwrap();
        assert!(!rep.passed);
        assert!(rep.witness.is_some());
        let sampled = verify_minimax(&bad, MinimaxMode::Sampled { paths: 1000, seed: 1 }).unwrap();
        assert!(!sampled.passed);
    }

    #[test]
    fn two_point_tree_passes() {
        let c = PointConfiguration::from_points(2, &[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = build_mst_kruskal(&c);
        let rep = verify_minimax(&t, MinimaxMode::Exhaustive).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.pairs_checked, 1);
    }

    #[test]
    fn star_has_degree_four() {
        // center near all leaves, leaves pairwise far apart
        let c = PointConfiguration::from_points(
            2,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.05], vec![-1.1, 0.0], vec![0.0, -1.15]],
        )
        .unwrap();
        let t = build_mst_kruskal(&c);
        assert_eq!(t.edge_set(), build_mst_brute(&c).edge_set());
        assert_eq!(max_degree(&t), 4);
    }
}
