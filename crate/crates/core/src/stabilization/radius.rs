use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::graphs::{build_mst_kruskal, mst_insert_ordered, InsertionOrder};
use crate::point_process::{dist, dist_inf, Mark, Point, PointConfiguration, Region};

/// Samples per free axis on each face of `∂B_u(x)`, chosen so that every
/// boundary point lies within `u / 350` of its sample.
fn face_resolution(d: usize) -> usize {
    match d {
        1 => 1,
        2 => 175,
        _ => 248,
    }
}

/// Largest distance from a face cell to its center sample.
fn cell_radius(d: usize, u: f64) -> f64 {
    let m = face_resolution(d) as f64;
    0.5 * (u / m) * ((d - 1) as f64).sqrt()
}

/// Lens shrink factor used to certify a whole cell of boundary points.
const CERT_FACTOR: f64 = 0.74;

/// `x` is surrounded by a wall at scale `u` in `window`: each `x'` on the
/// boundary of the cube of side `u` centred at `x` (within the window) has
/// a configuration point of the window in the lens
/// `S_{3s/4}(x) ∩ S_{3s/4}(x')`, `s = |x - x'|`.
///
/// The boundary is covered by cells of radius `δ <= u / 350` and a cell is
/// accepted when some point lies in the lens with radii `0.74 s_k` around
/// its center `x'_k`; this implies the exact lens condition for every `x'`
/// in the cell. The test can therefore return `false` on a wall but never
/// `true` without one.
pub fn wall_event(config: &PointConfiguration, x: &Point, u: f64, window: &Region) -> Result<bool> {
    let d = x.dim();
    if d != config.dim() || d != window.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: window.dim(),
            got: d,
        });
    }
    if !(d >= 1 && d <= 3) {
        return Err(GeoError::UnsupportedDimension(d));
    }
    if !(u > 0.0 && u < 2.0 * window.scale()) {
        return Err(GeoError::param("u", "scale must lie in (0, 2 * window scale)"));
    }
    let xp = x.coords();
    let half = 0.5 * u;
    let delta = cell_radius(d, u);
    let s_max = half * (d as f64).sqrt();
    let cand: Vec<&[f64]> = config
        .points()
        .filter(|z| window.contains(z) && dist(z, xp) < CERT_FACTOR * s_max)
        .collect();

    let m = face_resolution(d);
    let cells = m.pow(d as u32 - 1);
    let mut xk = vec![0.0; d];
    for axis in 0..d {
        for side in [-1.0, 1.0] {
            for cell in 0..cells {
                let mut c = cell;
                for (k, v) in xk.iter_mut().enumerate() {
                    if k == axis {
                        *v = xp[k] + side * half;
                    } else {
                        let i = c % m;
                        c /= m;
                        *v = xp[k] - half + u * (i as f64 + 0.5) / m as f64;
                    }
                }
                if window.distance_to(&xk) > delta {
                    continue;
                }
                let r = CERT_FACTOR * dist(xp, &xk);
                if !cand.iter().any(|z| dist(z, xp) < r && dist(z, &xk) < r) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Side length `R` of the smallest cube centred at `x` holding every edge
/// of `MST((C|_W) + x)` incident to `x`: twice the largest sup-norm
/// distance to a neighbour, `0` without neighbours.
pub fn mst_attachment_radius(config: &PointConfiguration, x: &Point, window: &Region) -> Result<f64> {
    if !window.contains(x.coords()) {
        return Err(GeoError::param("x", "must lie in the window"));
    }
    let c = config.restrict(window)?;
    let mark = match c.mark_variant() {
        crate::point_process::MarkVariant::None => Mark::None,
        _ => return Err(GeoError::MarkMismatch { expected: "none", got: c.mark_variant().name() }),
    };
    let tree = build_mst_kruskal(&c);
    let (t, trace) = mst_insert_ordered(&tree, x, mark, InsertionOrder::Chebyshev)?;
    let v = trace.new_index;
    let r = t
        .edges()
        .iter()
        .filter(|e| e.touches(v))
        .map(|e| dist_inf(x.coords(), t.base().point(e.other(v))))
        .fold(0.0, f64::max);
    Ok(2.0 * r)
}

/// Cones of half-angle `π/6` covering `R^d` (`d = 2, 3`), realised as the
/// nearest-axis cells of a direction set whose covering radius is below
/// `π/6`.
#[derive(Debug, Clone)]
pub struct ConeCover {
    dim: usize,
    axes: Vec<[f64; 3]>,
}

impl ConeCover {
    pub fn for_dim(d: usize) -> Result<&'static ConeCover> {
        static D2: OnceLock<ConeCover> = OnceLock::new();
        static D3: OnceLock<ConeCover> = OnceLock::new();
        match d {
            2 => Ok(D2.get_or_init(|| {
                let axes = (0..6)
                    .map(|k| {
                        let a = PI / 6.0 + k as f64 * PI / 3.0;
                        [a.cos(), a.sin(), 0.0]
                    })
                    .collect();
                ConeCover { dim: 2, axes }
            })),
            3 => Ok(D3.get_or_init(|| {
                let c = ConeCover {
                    dim: 3,
                    axes: icosahedral_directions(),
                };
                assert!(c.covering_angle(20_000) < PI / 6.0, "cone cover check failed");
                c
            })),
            _ => Err(GeoError::UnsupportedDimension(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.axes[j][..self.dim]
    }

    /// Cone of a nonzero direction: its nearest axis (lowest index on ties).
    pub fn cone_of(&self, v: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, a) in self.axes.iter().enumerate() {
            let dot: f64 = v.iter().zip(a).map(|(p, q)| p * q).sum();
            if dot > best.0 {
                best = (dot, j);
            }
        }
        best.1
    }

    /// Largest angle from a probe direction to its nearest axis over a
    /// Fibonacci lattice (circle in `d = 2`) of `probes` directions.
    pub fn covering_angle(&self, probes: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..probes {
            let v: [f64; 3] = if self.dim == 2 {
                let a = 2.0 * PI * i as f64 / probes as f64;
                [a.cos(), a.sin(), 0.0]
            } else {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / probes as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = PI * (3.0 - 5f64.sqrt()) * i as f64;
                [r * phi.cos(), r * phi.sin(), z]
            };
            let j = self.cone_of(&v);
            let dot: f64 = v.iter().zip(&self.axes[j]).map(|(p, q)| p * q).sum();
            worst = worst.max(dot.clamp(-1.0, 1.0).acos());
        }
        worst
    }
}

/// The 12 icosahedron and 20 dodecahedron vertex directions.
fn icosahedral_directions() -> Vec<[f64; 3]> {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut raw: Vec<[f64; 3]> = Vec::new();
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            raw.push([0.0, s1, s2 * g]);
            raw.push([s1, s2 * g, 0.0]);
            raw.push([s2 * g, 0.0, s1]);
            raw.push([0.0, s1 * g, s2 / g]);
            raw.push([s1 * g, s2 / g, 0.0]);
            raw.push([s2 / g, 0.0, s1 * g]);
            for s3 in [-1.0, 1.0] {
                raw.push([s1, s2, s3]);
            }
        }
    }
    raw.into_iter()
        .map(|v| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect()
}

/// `2 max_j R_j` where `R_j` is the distance from `x` to the nearest point
/// of cone `j` (apex `x`) with time mark below `t`; `+∞` when some cone
/// holds no such point.
pub fn onng_stabilization_radius(config: &PointConfiguration, x: &Point, t: f64) -> Result<f64> {
    let cover = ConeCover::for_dim(config.dim())?;
    if x.dim() != config.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: config.dim(),
            got: x.dim(),
        });
    }
    if config.is_empty() {
        return Ok(f64::INFINITY);
    }
    let times = config.time_marks().ok_or(GeoError::MarkMismatch {
        expected: "time",
        got: config.mark_variant().name(),
    })?;
    let xp = x.coords();
    let mut best = vec![f64::INFINITY; cover.len()];
    let mut v = vec![0.0; xp.len()];
    for (i, &ti) in times.iter().enumerate() {
        if ti >= t {
            continue;
        }
        let p = config.point(i);
        let r = dist(p, xp);
        if r == 0.0 {
            continue;
        }
        for k in 0..v.len() {
            v[k] = p[k] - xp[k];
        }
        let j = cover.cone_of(&v);
        best[j] = best[j].min(r);
    }
    Ok(2.0 * best.into_iter().fold(0.0, f64::max))
}

/// Stabilization radii, one per replica. A censored entry only records
/// that the radius exceeds `censored_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSample {
    pub values: Vec<f64>,
    pub censored: Vec<bool>,
    pub censored_at: f64,
}

impl RadiusSample {
    /// Radii above `censored_at` (including `+∞`) are stored censored.
    pub fn from_radii(radii: &[f64], censored_at: f64) -> Result<Self> {
        if !(censored_at > 0.0) {
            return Err(GeoError::param("censored_at", "must be positive"));
        }
        if radii.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(GeoError::param("radii", "must be nonnegative"));
        }
        let censored: Vec<bool> = radii.iter().map(|&r| r > censored_at).collect();
        let values = radii.iter().map(|&r| r.min(censored_at)).collect();
        Ok(RadiusSample {
            values,
            censored,
            censored_at,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|c| **c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub u: f64,
    pub survival: f64,
    pub std_err: f64,
}

/// Minimum number of informative radii at the smallest threshold.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Empirical `P[R > u]` per threshold. Censored radii count as exceeding
/// thresholds below the censoring point and are dropped above it. Errors
/// are Wilson half-widths at one standard deviation.
pub fn estimate_radius_tail(sample: &RadiusSample, thresholds: &[f64]) -> Result<Vec<TailPoint>> {
    let informative = |u: f64| {
        sample
            .values
            .iter()
            .zip(&sample.censored)
            .filter(|(_, &c)| !c || sample.censored_at > u)
            .count()
    };
    let lowest = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    if thresholds.is_empty() || informative(lowest.max(0.0)) < MIN_TAIL_SAMPLES {
        return Err(GeoError::InsufficientData(format!(
            "need at least {MIN_TAIL_SAMPLES} informative radii at the smallest threshold"
        )));
    }
    thresholds
        .iter()
        .map(|&u| {
            if u < 0.0 {
                return Ok(TailPoint {
                    u,
                    survival: 1.0,
                    std_err: 0.0,
                });
            }
            let mut n = 0usize;
            let mut hit = 0usize;
            for (&v, &c) in sample.values.iter().zip(&sample.censored) {
                if c {
                    if sample.censored_at > u {
                        n += 1;
                        hit += 1;
                    }
                } else {
                    n += 1;
                    hit += (v > u) as usize;
                }
            }
            if n == 0 {
                return Err(GeoError::InsufficientData(format!("no informative radii at u = {u}")));
            }
            let nf = n as f64;
            let p = hit as f64 / nf;
            let std_err = (p * (1.0 - p) / nf + 1.0 / (4.0 * nf * nf)).sqrt() / (1.0 + 1.0 / nf);
            Ok(TailPoint { u, survival: p, std_err })
        })
        .collect()
}
