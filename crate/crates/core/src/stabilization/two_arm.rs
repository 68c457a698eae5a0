use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::graphs::{InsertionTrace, UnionFind};
use crate::point_process::{Mark, Point, PointConfiguration, Region};
use crate::spatial::KdTree;

use super::{mst_insertion_trace, TwoScalePair, Window};

/// Number of components of the graph joining points of `pts` within
/// distance `r` that contain a point satisfying `near_a` and one
/// satisfying `near_b`.
fn crossing_components(
    pts: &PointConfiguration,
    r: f64,
    near_a: impl Fn(&[f64]) -> bool,
    near_b: impl Fn(&[f64]) -> bool,
) -> usize {
    let n = pts.len();
    let mut uf = UnionFind::new(n);
    let tree = KdTree::new(pts);
    for i in 0..n {
        for j in tree.within(pts.point(i), r) {
            if j > i {
                uf.union(i, j);
            }
        }
    }
    let mut flags = vec![(false, false); n];
    for i in 0..n {
        let root = uf.find(i);
        let p = pts.point(i);
        flags[root].0 |= near_a(p);
        flags[root].1 |= near_b(p);
    }
    flags.iter().filter(|f| f.0 && f.1).count()
}

/// At least two components of the Boolean set `O_{u/2}` restricted to
/// `outer \ inner` touch both `∂inner` and `∂outer`. Components are read
/// off the graph joining centres within `u` over all points whose
/// `u/2`-ball meets the closed annulus.
pub fn two_arm_event_boolean(
    config: &PointConfiguration,
    x: &Point,
    inner: &Region,
    outer: &Region,
    u: f64,
) -> Result<bool> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(GeoError::param("u", "must be positive"));
    }
    if !outer.contains_region(inner) {
        return Err(GeoError::param("inner", "must be contained in outer"));
    }
    if !inner.contains(x.coords()) {
        return Err(GeoError::param("x", "must lie in the inner region"));
    }
    let h = 0.5 * u;
    let keep: Vec<usize> = (0..config.len())
        .filter(|&i| {
            let p = config.point(i);
            outer.distance_to(p) <= h && (!inner.contains(p) || inner.boundary_distance(p) <= h)
        })
        .collect();
    let pts = config.select(&keep);
    let count = crossing_components(
        &pts,
        u,
        |p| inner.boundary_distance(p) <= h,
        |p| outer.boundary_distance(p) <= h,
    );
    Ok(count >= 2)
}

/// At least two components of the radius-`r` graph on the points of the
/// cube shell `C_N \ C_a` (half-sides `N`, `a`, centred at `center`) come
/// within `r` of both `C_a` and the complement of `C_N`.
pub fn two_arm_event_components(
    config: &PointConfiguration,
    r: f64,
    a: f64,
    big_n: f64,
    center: &Point,
) -> Result<bool> {
    if !(r > 0.0 && r <= a && a <= big_n) {
        return Err(GeoError::param("r, a, N", "need 0 < r <= a <= N"));
    }
    let inner = Region::cube(center.clone(), a)?;
    let outer = Region::cube(center.clone(), big_n)?;
    let keep: Vec<usize> = (0..config.len())
        .filter(|&i| {
            let p = config.point(i);
            outer.contains(p) && !inner.contains(p)
        })
        .collect();
    let pts = config.select(&keep);
    let count = crossing_components(
        &pts,
        r,
        |p| inner.distance_to(p) <= r,
        |p| outer.boundary_distance(p) <= r,
    );
    Ok(count >= 2)
}

/// One removed-edge mismatch `|f_i| < u < |f~_i|` between the insertion
/// traces in `B_n` and in `A_x`, and whether the two-arm event fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchCheck {
    pub step: usize,
    pub outer_removed: f64,
    pub inner_removed: f64,
    pub u: f64,
    pub fired: bool,
}

/// Runs the paired add-and-delete traces of `x` in `B_n` and `A_x` (cube
/// windows, Chebyshev order) and checks every mismatch with
/// [`mismatch_checks`].
pub fn mst_mismatch_two_arm(
    config: &PointConfiguration,
    pair: &TwoScalePair,
    x: &Point,
) -> Result<Vec<MismatchCheck>> {
    let outer_w = Window::single(pair.outer.clone());
    let inner_w = pair.inner_window(x)?;
    let c = config.restrict(&pair.outer)?;
    let outer = mst_insertion_trace(&c, &outer_w, x, Mark::None)?;
    let inner = mst_insertion_trace(&c, &inner_w, x, Mark::None)?;
    mismatch_checks(&c, pair, x, &outer, &inner)
}

/// For every paired step with `|f_i| < |f~_i|`, evaluates the two-arm event
/// at two scales `u` in between: one just above `|f_i|` and the midpoint.
/// The annulus is the Euclidean ball of radius `1.6 u` around `x` inside
/// `A_x` shrunk by `u`; scales where that annulus is empty are skipped.
/// `x` must lie in the shrunk outer window.
pub fn mismatch_checks(
    config: &PointConfiguration,
    pair: &TwoScalePair,
    x: &Point,
    outer: &InsertionTrace,
    inner: &InsertionTrace,
) -> Result<Vec<MismatchCheck>> {
    let shrunk = pair.shrunk_outer()?;
    if !shrunk.contains(x.coords()) || pair.is_degenerate() {
        return Err(GeoError::param("x", "must lie in the shrunk outer window"));
    }
    let local = pair.local_region(x)?;
    let mut out = Vec::new();
    for (i, (so, si)) in outer.steps.iter().zip(&inner.steps).enumerate() {
        let (Some(fo), Some(fi)) = (so.removed, si.removed) else {
            continue;
        };
        if !(fo.length < fi.length) {
            continue;
        }
        let gap = fi.length - fo.length;
        for u in [fo.length + 0.01 * gap, fo.length + 0.5 * gap] {
            if !(u > 0.0) || 1.6 * u >= local.scale() - u {
                continue;
            }
            let ring_in = Region::ball(x.clone(), 1.6 * u)?;
            let ring_out = local.shrink(u)?;
            let fired = two_arm_event_boolean(config, x, &ring_in, &ring_out, u)?;
            out.push(MismatchCheck {
                step: i,
                outer_removed: fo.length,
                inner_removed: fi.length,
                u,
                fired,
            });
        }
    }
    Ok(out)
}
