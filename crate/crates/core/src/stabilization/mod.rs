//! Add-one costs, two-scale discrepancies, stabilization radii and the
//! geometric events that control them.
//!
//! A functional `F` only sees the configuration restricted to its window,
//! so `D_x F(B) = F((C + x)|_B) - F(C|_B)` when `x` lies in `B` and zero
//! otherwise. The local window of a site `x` is `A_x = (x + b B_0) ∩ B`,
//! with `B_0` the base shape of `B`.

mod gamma;
mod radius;
mod two_arm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::graphs::{
    build_mst_kruskal, build_onng, geometric_components, mst_insert_ordered, mst_length, onng_length,
    onng_parents, InsertionOrder, InsertionTrace, WeightFunction,
};
use crate::point_process::{
    dist2, lex_cmp, sample_marked_poisson_with, sample_poisson_with, Mark, MarkVariant, Point,
    PointConfiguration, Region, SeedState, Shape,
};
use crate::shot_noise::{excursion_volume, smoothed_perimeter, smoothed_volume, FieldSample, Grid, KernelSpec, SmoothTest};
use crate::spatial::KdTree;

pub use gamma::{gamma2_plugin, gamma_geometric, non_disjoint_measure, Gammas};
pub use radius::{
    estimate_radius_tail, mst_attachment_radius, onng_stabilization_radius, wall_event, ConeCover,
    RadiusSample, TailPoint,
};
pub use two_arm::{mismatch_checks, mst_mismatch_two_arm, two_arm_event_boolean, two_arm_event_components, MismatchCheck};

/// Intersection of regions; the first region is the primary one (its shape
/// drives shape-dependent choices and, for field functionals, the grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    regions: Vec<Region>,
}

impl Window {
    pub fn single(r: Region) -> Self {
        Window { regions: vec![r] }
    }

    pub fn intersection(regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(GeoError::param("window", "needs at least one region"));
        }
        Ok(Window { regions })
    }

    pub fn primary(&self) -> &Region {
        &self.regions[0]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn is_single(&self) -> bool {
        self.regions.len() == 1
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.regions.iter().all(|r| r.contains(p))
    }

    pub fn restrict(&self, config: &PointConfiguration) -> Result<PointConfiguration> {
        let mut c = config.restrict(&self.regions[0])?;
        for r in &self.regions[1..] {
            c = c.restrict(r)?;
        }
        Ok(c)
    }
}

impl From<Region> for Window {
    fn from(r: Region) -> Self {
        Window::single(r)
    }
}

/// Level parameter of an excursion-volume functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcursionLevel {
    /// `|{X >= u}|`
    Threshold(f64),
    /// `int Phi(X)`
    Smooth(SmoothTest),
}

/// Shot-noise discretisation shared by the field functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSetup {
    pub kernel: KernelSpec,
    pub spacing: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

/// A geometric functional `(configuration, window) -> real`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    /// Double-sum ONNG length over vertices in `sub_window` (the whole
    /// window when absent). Needs time marks.
    OnngLength {
        weight: WeightFunction,
        #[serde(default)]
        sub_window: Option<Region>,
    },
    MstLength { weight: WeightFunction },
    ComponentCount { r: f64 },
    /// Needs sign marks.
    ExcursionVolume { field: FieldSetup, level: ExcursionLevel },
    /// Needs sign marks.
    ExcursionPerimeter { field: FieldSetup, test: SmoothTest },
}

impl FunctionalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionalSpec::OnngLength { weight, .. } | FunctionalSpec::MstLength { weight } => weight.validate(),
            FunctionalSpec::ComponentCount { r } => {
                if *r > 0.0 && r.is_finite() {
                    Ok(())
                } else {
                    Err(GeoError::param("r", "connection radius must be positive"))
                }
            }
            FunctionalSpec::ExcursionVolume { field, .. } | FunctionalSpec::ExcursionPerimeter { field, .. } => {
                if field.spacing > 0.0 && field.spacing.is_finite() {
                    Ok(())
                } else {
                    Err(GeoError::param("spacing", "grid spacing must be positive"))
                }
            }
        }
    }

    /// Mark variant the functional reads.
    pub fn mark_variant(&self) -> MarkVariant {
        match self {
            FunctionalSpec::OnngLength { .. } => MarkVariant::Time,
            FunctionalSpec::ExcursionVolume { .. } | FunctionalSpec::ExcursionPerimeter { .. } => MarkVariant::Sign,
            _ => MarkVariant::None,
        }
    }

    fn has_zero_weight(&self) -> bool {
        match self {
            FunctionalSpec::OnngLength { weight, .. } | FunctionalSpec::MstLength { weight } => weight.is_zero(),
            _ => false,
        }
    }

    /// `F(C|_B)`.
    pub fn evaluate(&self, config: &PointConfiguration, region: &Region) -> Result<f64> {
        self.evaluate_in(config, &Window::single(region.clone()))
    }

    pub fn evaluate_in(&self, config: &PointConfiguration, window: &Window) -> Result<f64> {
        let c = window.restrict(config)?;
        self.evaluate_restricted(&c, window)
    }

    fn evaluate_restricted(&self, c: &PointConfiguration, window: &Window) -> Result<f64> {
        match self {
            FunctionalSpec::OnngLength { weight, sub_window } => {
                let tree = build_onng(c)?;
                onng_length(&tree, weight, sub_window.as_ref())
            }
            FunctionalSpec::MstLength { weight } => Ok(mst_length(&build_mst_kruskal(c), weight)),
            FunctionalSpec::ComponentCount { r } => Ok(geometric_components(c, *r)?.count as f64),
            FunctionalSpec::ExcursionVolume { field, level } => {
                let (fs, grid) = field_parts(c, field, window)?;
                match level {
                    ExcursionLevel::Threshold(u) => excursion_volume(&fs, *u, &grid),
                    ExcursionLevel::Smooth(t) => smoothed_volume(&fs, t, &grid),
                }
            }
            FunctionalSpec::ExcursionPerimeter { field, test } => {
                let (fs, grid) = field_parts(c, field, window)?;
                smoothed_perimeter(&fs, test, &grid)
            }
        }
    }
}

fn field_parts(c: &PointConfiguration, field: &FieldSetup, window: &Window) -> Result<(FieldSample, Grid)> {
    if !window.is_single() {
        return Err(GeoError::param("window", "field functionals need a single-region window"));
    }
    let fs = FieldSample::new(c.clone(), field.kernel, field.cutoff)?;
    let grid = Grid::new(window.primary().clone(), field.spacing)?;
    Ok((fs, grid))
}

fn check_mark(config: &PointConfiguration, m: Mark) -> Result<()> {
    if !config.is_empty() && m.variant() != config.mark_variant() {
        return Err(GeoError::MarkMismatch {
            expected: config.mark_variant().name(),
            got: m.variant().name(),
        });
    }
    Ok(())
}

/// `D_x F(B)`.
pub fn add_one_cost(f: &FunctionalSpec, config: &PointConfiguration, b: &Region, x: &Point, m: Mark) -> Result<f64> {
    add_one_cost_in(f, config, &Window::single(b.clone()), x, m)
}

/// `D_x F` on an intersection window.
pub fn add_one_cost_in(
    f: &FunctionalSpec,
    config: &PointConfiguration,
    window: &Window,
    x: &Point,
    m: Mark,
) -> Result<f64> {
    check_mark(config, m)?;
    if !window.contains(x.coords()) {
        return Ok(0.0);
    }
    let c = window.restrict(config)?;
    if c.position_of(x.coords()).is_some() {
        return Err(GeoError::DuplicatePoint(c.len()));
    }
    match f {
        FunctionalSpec::MstLength { weight } => Ok(mst_trace(&c, window, x, m)?.add_one_cost(weight)),
        FunctionalSpec::OnngLength { weight, sub_window } => {
            let Mark::Time(t) = m else {
                return Err(GeoError::MarkMismatch {
                    expected: "time",
                    got: m.variant().name(),
                });
            };
            if c.is_empty() {
                return Ok(0.0);
            }
            onng_local_cost(&c, x, t, weight, sub_window.as_ref())
        }
        FunctionalSpec::ComponentCount { r } => {
            let lab = geometric_components(&c, *r)?;
            let tree = KdTree::new(&c);
            let mut touched: Vec<usize> = tree.within(x.coords(), *r).into_iter().map(|i| lab.labels[i]).collect();
            touched.sort_unstable();
            touched.dedup();
            Ok(1.0 - touched.len() as f64)
        }
        _ => {
            let with = c.add_point(x, m)?;
            Ok(f.evaluate_restricted(&with, window)? - f.evaluate_restricted(&c, window)?)
        }
    }
}

fn insertion_order(window: &Window) -> InsertionOrder {
    match window.primary().shape() {
        Shape::Cube => InsertionOrder::Chebyshev,
        Shape::Ball => InsertionOrder::Euclidean,
    }
}

fn mst_trace(c: &PointConfiguration, window: &Window, x: &Point, m: Mark) -> Result<InsertionTrace> {
    let tree = build_mst_kruskal(c);
    Ok(mst_insert_ordered(&tree, x, m, insertion_order(window))?.1)
}

/// Add-and-delete trace of inserting `x` into the MST of `C|_W`.
pub fn mst_insertion_trace(config: &PointConfiguration, window: &Window, x: &Point, m: Mark) -> Result<InsertionTrace> {
    check_mark(config, m)?;
    mst_trace(&window.restrict(config)?, window, x, m)
}

/// ONNG add-one cost from the edges that actually change: the new edge of
/// `x` and the re-attachment of every later vertex now closer to `x` than
/// to its parent. Terms are summed in coordinate order, so two windows
/// that see the same neighbourhood of `x` give bitwise-equal results.
fn onng_local_cost(
    c: &PointConfiguration,
    x: &Point,
    t: f64,
    w: &WeightFunction,
    sub: Option<&Region>,
) -> Result<f64> {
    let times = c.time_marks().ok_or(GeoError::MarkMismatch {
        expected: "time",
        got: c.mark_variant().name(),
    })?;
    let xp = x.coords();
    let before_x = |j: usize| times[j].total_cmp(&t).then_with(|| lex_cmp(c.point(j), xp)).is_lt();
    let in_c = |p: &[f64]| sub.map_or(true, |r| r.contains(p)) as u8 as f64;
    let parents = onng_parents(c)?;
    let tree = KdTree::new(c);

    let mut terms: Vec<(&[f64], f64)> = Vec::new();
    if let Some((p, d)) = tree.nearest_filtered(xp, before_x) {
        terms.push((xp, (in_c(xp) + in_c(c.point(p))) * w.eval(d)));
    }
    for y in 0..c.len() {
        if before_x(y) {
            continue;
        }
        let yp = c.point(y);
        let to_x = dist2(yp, xp);
        let old = parents[y].map(|p| (p, dist2(yp, c.point(p))));
        if old.is_some_and(|(_, d2)| d2 <= to_x) {
            continue;
        }
        let mut v = (in_c(yp) + in_c(xp)) * w.eval(to_x.sqrt());
        if let Some((p, d2)) = old {
            v -= (in_c(yp) + in_c(c.point(p))) * w.eval(d2.sqrt());
        }
        terms.push((yp, v));
    }
    terms.sort_by(|a, b| lex_cmp(a.0, b.0));
    Ok(terms.iter().map(|t| t.1).sum())
}

/// `D_x F^y(B) = D_x F((C + y)|_B)`.
#[allow(clippy::too_many_arguments)]
pub fn add_one_cost_augmented(
    f: &FunctionalSpec,
    config: &PointConfiguration,
    b: &Region,
    x: &Point,
    mx: Mark,
    y: &Point,
    my: Mark,
) -> Result<f64> {
    add_one_cost_augmented_in(f, config, &Window::single(b.clone()), x, mx, y, my)
}

#[allow(clippy::too_many_arguments)]
pub fn add_one_cost_augmented_in(
    f: &FunctionalSpec,
    config: &PointConfiguration,
    window: &Window,
    x: &Point,
    mx: Mark,
    y: &Point,
    my: Mark,
) -> Result<f64> {
    if x == y {
        return Err(GeoError::param("y", "must differ from x"));
    }
    let with_y = config.add_point(y, my)?;
    add_one_cost_in(f, &with_y, window, x, mx)
}

/// Outer window `B_n`, local scale `b_n` and boundary margin factor
/// `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoScalePair {
    pub outer: Region,
    pub inner_scale: f64,
    pub theta: f64,
}

impl TwoScalePair {
    pub fn new(outer: Region, inner_scale: f64, theta: f64) -> Result<Self> {
        if !(inner_scale > 0.0) || !inner_scale.is_finite() {
            return Err(GeoError::param("inner_scale", "must be positive"));
        }
        if !(theta >= 1.0) || !theta.is_finite() {
            return Err(GeoError::param("theta", "margin factor must be at least 1"));
        }
        Ok(TwoScalePair {
            outer,
            inner_scale,
            theta,
        })
    }

    /// Whether the local window coincides with the outer one
    /// (`b_n >= n`).
    pub fn is_degenerate(&self) -> bool {
        self.inner_scale >= self.outer.scale()
    }

    /// `A_x = (x + b_n B_0) ∩ B_n`; the whole of `B_n` when `b_n >= n`.
    pub fn inner_window(&self, x: &Point) -> Result<Window> {
        if self.is_degenerate() {
            return Ok(Window::single(self.outer.clone()));
        }
        let local = Region::new(self.outer.shape(), x.clone(), self.inner_scale)?;
        if self.outer.contains_region(&local) {
            Ok(Window::single(local))
        } else {
            Window::intersection(vec![local, self.outer.clone()])
        }
    }

    /// Local region `x + b_n B_0` before intersecting with `B_n`.
    pub fn local_region(&self, x: &Point) -> Result<Region> {
        Region::new(self.outer.shape(), x.clone(), self.inner_scale)
    }

    /// `B_n` shrunk by `theta b_n`; sites there have `A_x` inside `B_n`.
    pub fn shrunk_outer(&self) -> Result<Region> {
        self.outer.shrink(self.theta * self.inner_scale)
    }

    /// `k^d` evenly spaced sites of the shrunk window (ball windows keep
    /// the grid points inside); the center alone when the shrunk window
    /// is empty or `b_n >= n`.
    pub fn site_grid(&self, k: usize) -> Vec<Point> {
        let d = self.outer.dim();
        let center = self.outer.center().clone();
        let shrunk = match self.shrunk_outer() {
            Ok(r) if !self.is_degenerate() && k > 1 => r,
            _ => return vec![center],
        };
        let s = shrunk.scale();
        let mut out = Vec::new();
        let total = k.pow(d as u32);
        for mut f in 0..total {
            let mut p = Vec::with_capacity(d);
            for c in center.coords() {
                let i = f % k;
                f /= k;
                p.push(c - s + 2.0 * s * i as f64 / (k - 1) as f64);
            }
            if shrunk.contains(&p) {
                out.push(Point::new(p).expect("finite"));
            }
        }
        out
    }
}

/// `|D_x F(B_n) - D_x F(A_x)|`.
pub fn two_scale_discrepancy(
    f: &FunctionalSpec,
    config: &PointConfiguration,
    pair: &TwoScalePair,
    x: &Point,
    m: Mark,
) -> Result<f64> {
    if !pair.outer.contains(x.coords()) {
        return Err(GeoError::param("x", "site must lie in the outer window"));
    }
    let outer = add_one_cost(f, config, &pair.outer, x, m)?;
    let inner = add_one_cost_in(f, config, &pair.inner_window(x)?, x, m)?;
    Ok((outer - inner).abs())
}

/// `|D_x F^y(B_n) - D_x F^y(A_x)|`.
pub fn two_scale_discrepancy_augmented(
    f: &FunctionalSpec,
    config: &PointConfiguration,
    pair: &TwoScalePair,
    (x, mx): (&Point, Mark),
    (y, my): (&Point, Mark),
) -> Result<f64> {
    if !pair.outer.contains(x.coords()) {
        return Err(GeoError::param("x", "site must lie in the outer window"));
    }
    let outer = add_one_cost_augmented(f, config, &pair.outer, x, mx, y, my)?;
    let inner = add_one_cost_augmented_in(f, config, &pair.inner_window(x)?, x, mx, y, my)?;
    Ok((outer - inner).abs())
}

/// Per-site Monte Carlo summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteEstimate {
    pub site: Vec<f64>,
    /// Second site for pair estimates.
    pub partner: Option<Vec<f64>>,
    pub mean: f64,
    pub std_err: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    pub per_site: Vec<SiteEstimate>,
    /// Largest per-site mean.
    pub sup_estimate: f64,
}

/// Fewest replicas accepted by the estimators.
pub const MIN_REPLICAS: usize = 30;

fn draw_mark<R: rand::Rng>(variant: MarkVariant, rng: &mut R) -> Mark {
    match variant {
        MarkVariant::None => Mark::None,
        MarkVariant::Time => Mark::Time(crate::point_process::open_unit(rng)),
        MarkVariant::Sign => Mark::Sign(if rng.random::<bool>() { 1 } else { -1 }),
    }
}

/// Poisson sample on `region` carrying the marks `f` reads, plus the rng
/// positioned after the sample.
pub fn sample_for(
    f: &FunctionalSpec,
    region: &Region,
    intensity: f64,
    seed: SeedState,
) -> Result<(PointConfiguration, rand_chacha::ChaCha8Rng)> {
    let mut rng = seed.rng();
    let c = match f.mark_variant() {
        MarkVariant::None => sample_poisson_with(region, intensity, &mut rng)?,
        v => sample_marked_poisson_with(region, intensity, v, &mut rng)?,
    };
    Ok((c, rng))
}

fn summarize(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, (var / n as f64).sqrt(), n)
}

fn replica_error(seed: SeedState, e: GeoError) -> GeoError {
    GeoError::param(
        "replica",
        format!("failed at seed ({}, {}): {e}", seed.root_seed, seed.stream_index),
    )
}

/// Monte Carlo estimate of `E|D_x F(B_n) - D_x F(A_x)|` per site, sharing
/// one unit-intensity configuration per replica across sites and scales.
/// Replica `k` uses stream `k` of `seed`.
pub fn estimate_psi(
    f: &FunctionalSpec,
    pair: &TwoScalePair,
    sites: &[Point],
    replicas: usize,
    seed: SeedState,
) -> Result<DiscrepancyEstimate> {
    estimate_psi_at(f, pair, sites, replicas, seed, 1.0)
}

/// [`estimate_psi`] at a given intensity.
pub fn estimate_psi_at(
    f: &FunctionalSpec,
    pair: &TwoScalePair,
    sites: &[Point],
    replicas: usize,
    seed: SeedState,
    intensity: f64,
) -> Result<DiscrepancyEstimate> {
    if replicas < MIN_REPLICAS {
        return Err(GeoError::InsufficientData(format!("need at least {MIN_REPLICAS} replicas")));
    }
    f.validate()?;
    if let Some(s) = sites.iter().find(|s| !pair.outer.contains(s.coords())) {
        return Err(GeoError::param("sites", format!("site {:?} outside the outer window", s.coords())));
    }
    let zero = f.has_zero_weight();
    let rows: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.with_stream(k);
            if zero {
                return Ok(vec![0.0; sites.len()]);
            }
            let (c, mut rng) = sample_for(f, &pair.outer, intensity, s).map_err(|e| replica_error(s, e))?;
            sites
                .iter()
                .map(|x| {
                    let m = draw_mark(f.mark_variant(), &mut rng);
                    two_scale_discrepancy(f, &c, pair, x, m).map_err(|e| replica_error(s, e))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_site: Vec<SiteEstimate> = sites
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let (mean, std_err, replicas) = summarize(rows.iter().map(|r| r[j]));
            SiteEstimate {
                site: x.coords().to_vec(),
                partner: None,
                mean,
                std_err,
                replicas,
            }
        })
        .collect();
    let sup_estimate = per_site.iter().map(|s| s.mean).fold(0.0, f64::max);
    Ok(DiscrepancyEstimate { per_site, sup_estimate })
}

/// Monte Carlo estimate of `E|D_x F^y(B_n) - D_x F^y(A_x)|` for pairs with
/// disjoint local regions.
pub fn estimate_phi(
    f: &FunctionalSpec,
    pair: &TwoScalePair,
    site_pairs: &[(Point, Point)],
    replicas: usize,
    seed: SeedState,
) -> Result<DiscrepancyEstimate> {
    if replicas < MIN_REPLICAS {
        return Err(GeoError::InsufficientData(format!("need at least {MIN_REPLICAS} replicas")));
    }
    f.validate()?;
    for (x, y) in site_pairs {
        if pair.local_region(x)?.intersects(&pair.local_region(y)?) {
            return Err(GeoError::param(
                "site_pairs",
                format!("local regions of {:?} and {:?} overlap", x.coords(), y.coords()),
            ));
        }
        if !pair.outer.contains(x.coords()) {
            return Err(GeoError::param("site_pairs", "x outside the outer window"));
        }
    }
    let zero = f.has_zero_weight();
    let rows: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.with_stream(k);
            if zero {
                return Ok(vec![0.0; site_pairs.len()]);
            }
            let (c, mut rng) = sample_for(f, &pair.outer, 1.0, s).map_err(|e| replica_error(s, e))?;
            site_pairs
                .iter()
                .map(|(x, y)| {
                    let mx = draw_mark(f.mark_variant(), &mut rng);
                    let my = draw_mark(f.mark_variant(), &mut rng);
                    two_scale_discrepancy_augmented(f, &c, pair, (x, mx), (y, my)).map_err(|e| replica_error(s, e))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_site: Vec<SiteEstimate> = site_pairs
        .iter()
        .enumerate()
        .map(|(j, (x, y))| {
            let (mean, std_err, replicas) = summarize(rows.iter().map(|r| r[j]));
            SiteEstimate {
                site: x.coords().to_vec(),
                partner: Some(y.coords().to_vec()),
                mean,
                std_err,
                replicas,
            }
        })
        .collect();
    let sup_estimate = per_site.iter().map(|s| s.mean).fold(0.0, f64::max);
    Ok(DiscrepancyEstimate { per_site, sup_estimate })
}
