use rayon::prelude::*;

use crate::error::{GeoError, Result};
use crate::graphs::{build_mst_kruskal, mst_insert_ordered, onng_length, InsertionOrder};
use crate::point_process::{
    sample_marked_poisson, sample_poisson, Mark, MarkVariant, Point, Region, SeedState,
};
use crate::stabilization::{
    estimate_psi_at, estimate_radius_tail, mismatch_checks, mst_attachment_radius, mst_insertion_trace,
    onng_stabilization_radius, sample_for, wall_event, DiscrepancyEstimate, ExcursionLevel, FieldSetup,
    FunctionalSpec, RadiusSample, SiteEstimate, TailPoint, TwoScalePair,
};
use crate::stats::{
    bootstrap_se, covariance_matrix, empirical_dk, empirical_dw, standardize, variance_scaling_fit, SampleSet,
    VectorSampleSet,
};

use super::report::{Report, ReportRow, TwoArmSummary};
use super::spec::{ExperimentKind, ExperimentSpec, PsiTarget, RadiusKind};

/// Bootstrap resamples behind `d_k_std_err`.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Runs a campaign. Scale `j` draws replica `k` from
/// `SeedState::new(seed, 0).derive(j).with_stream(k)`; replicas run on the
/// current rayon pool and are aggregated in index order, so the report does
/// not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate().map_err(|e| match e {
        super::spec::SpecError::Domain { field, reason } => GeoError::InvalidParameter { name: field, reason },
        other => GeoError::param("spec", other.to_string()),
    })?;
    let base = SeedState::new(spec.seed, 0);
    let mut rows = Vec::new();
    for (j, &n) in spec.scales.iter().enumerate() {
        let seed = base.derive(j as u64);
        let window = Region::new(spec.shape, Point::origin(spec.dimension), n)?;
        match spec.experiment {
            ExperimentKind::OnngClt
            | ExperimentKind::MstClt
            | ExperimentKind::ComponentsClt
            | ExperimentKind::ShotnoiseClt => rows.push(clt_row(spec, n, &window, seed)?),
            ExperimentKind::MstMultivariate => rows.extend(multivariate_rows(spec, n, &window, seed)?),
            ExperimentKind::PsiDecay => rows.push(psi_row(spec, n, &window, seed)?),
            ExperimentKind::RadiusTails => rows.push(radius_row(spec, n, &window, seed)?),
            ExperimentKind::TwoArmFrequency => rows.push(two_arm_row(spec, n, &window, seed)?),
        }
    }
    let variance_fit = match spec.experiment {
        ExperimentKind::OnngClt | ExperimentKind::MstClt | ExperimentKind::ComponentsClt | ExperimentKind::ShotnoiseClt => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n, r.variance)).collect();
            variance_scaling_fit(&pts).ok()
        }
        _ => None,
    };
    Ok(Report {
        experiment: spec.experiment,
        spec_hash: spec.hash(),
        seed: spec.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        rows,
        variance_fit,
    })
}

fn replica_error(s: SeedState, e: GeoError) -> GeoError {
    GeoError::param(
        "replica",
        format!("failed at seed ({}, {}): {e}", s.root_seed, s.stream_index),
    )
}

/// Maps `job` over replica streams `0..replicas` in parallel, keeping order.
fn replicate<T, F>(replicas: usize, seed: SeedState, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedState) -> Result<T> + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.with_stream(k);
            job(s).map_err(|e| replica_error(s, e))
        })
        .collect()
}

fn field_setup(spec: &ExperimentSpec) -> FieldSetup {
    FieldSetup {
        kernel: spec.kernel,
        spacing: spec.spacing,
        cutoff: spec.cutoff,
    }
}

fn shot_noise_functional(spec: &ExperimentSpec) -> FunctionalSpec {
    let level = match spec.smooth {
        Some(t) => ExcursionLevel::Smooth(t),
        None => ExcursionLevel::Threshold(spec.level),
    };
    FunctionalSpec::ExcursionVolume {
        field: field_setup(spec),
        level,
    }
}

/// Functional evaluated by a scalar CLT campaign.
pub fn clt_functional(spec: &ExperimentSpec) -> Option<FunctionalSpec> {
    Some(match spec.experiment {
        ExperimentKind::OnngClt => FunctionalSpec::OnngLength {
            weight: spec.weight.clone(),
            sub_window: None,
        },
        ExperimentKind::MstClt => FunctionalSpec::MstLength { weight: spec.weight.clone() },
        ExperimentKind::ComponentsClt => FunctionalSpec::ComponentCount { r: spec.radius },
        ExperimentKind::ShotnoiseClt => shot_noise_functional(spec),
        _ => return None,
    })
}

/// Functional whose discrepancy a `psi_decay` campaign estimates.
pub fn psi_functional(spec: &ExperimentSpec) -> FunctionalSpec {
    match spec.target {
        PsiTarget::Mst => FunctionalSpec::MstLength { weight: spec.weight.clone() },
        PsiTarget::Onng => FunctionalSpec::OnngLength {
            weight: spec.weight.clone(),
            sub_window: None,
        },
        PsiTarget::Components => FunctionalSpec::ComponentCount { r: spec.radius },
        PsiTarget::ShotNoise => shot_noise_functional(spec),
    }
}

/// Row with moments, standardized distances and a bootstrap error for
/// `d_k`. A constant sample gives no distances.
fn scalar_row(n: f64, inner: f64, values: Vec<f64>, volume: f64, seed: SeedState) -> Result<ReportRow> {
    let replicas = values.len();
    let s = SampleSet::new(values, format!("n={n}"))?;
    let (mean, variance) = (s.mean(), s.variance());
    let (mut d_k, mut d_w, mut d_k_std_err) = (None, None, None);
    let mut notes = String::new();
    if variance > 0.0 {
        let z = standardize(&s)?;
        d_k = Some(empirical_dk(&z)?);
        d_w = Some(empirical_dw(&z)?);
        d_k_std_err = Some(bootstrap_se(s.values(), BOOTSTRAP_RESAMPLES, seed.derive(u64::MAX), |v| {
            SampleSet::new(v.to_vec(), "boot")
                .and_then(|b| standardize(&b))
                .and_then(|b| empirical_dk(&b))
                .unwrap_or(1.0)
        }));
    } else {
        notes.push_str("constant sample");
    }
    Ok(ReportRow {
        n,
        inner_scale: inner,
        replicas,
        component: None,
        mean,
        variance,
        var_per_volume: variance / volume,
        d_k,
        d_w,
        d_k_std_err,
        psi_sup: None,
        psi_std_err: None,
        radius_tail: None,
        censored: None,
        discrepancy: None,
        covariance: None,
        two_arm: None,
        notes,
    })
}

fn clt_row(spec: &ExperimentSpec, n: f64, window: &Region, seed: SeedState) -> Result<ReportRow> {
    let f = clt_functional(spec).expect("scalar campaign");
    let values = replicate(spec.replicas, seed, |s| {
        let (c, _) = sample_for(&f, window, spec.intensity, s)?;
        f.evaluate(&c, window)
    })?;
    scalar_row(n, spec.inner_scale(n), values, window.volume(), seed)
}

/// One row per nested sub-window `c_i B_n`. Coordinate `i` is the MST
/// double sum `sum_{e} (1[e^- in c_i B_n] + 1[e^+ in c_i B_n]) w(|e|)` over
/// the MST of the whole window.
fn multivariate_rows(spec: &ExperimentSpec, n: f64, window: &Region, seed: SeedState) -> Result<Vec<ReportRow>> {
    let subs: Vec<Region> = spec
        .sub_windows
        .iter()
        .map(|c| window.with_scale(c * n))
        .collect::<Result<_>>()?;
    let rows = replicate(spec.replicas, seed, |s| {
        let c = sample_poisson(window, spec.intensity, s)?;
        let tree = build_mst_kruskal(&c);
        subs.iter()
            .map(|r| onng_length(&tree, &spec.weight, Some(r)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let vs = VectorSampleSet::new(subs.len(), rows)?;
    let cov = covariance_matrix(&vs)?;
    let mut out = Vec::with_capacity(subs.len());
    for (i, r) in subs.iter().enumerate() {
        let mut row = scalar_row(n, spec.inner_scale(n), vs.column(i), r.volume(), seed.derive(i as u64))?;
        row.component = Some(i);
        row.covariance = Some(cov.clone());
        out.push(row);
    }
    Ok(out)
}

/// `k^d` cell centres of a regular grid over the bounding cube of `window`,
/// kept when inside `window`.
fn full_window_sites(window: &Region, k: usize) -> Vec<Point> {
    let d = window.dim();
    let n = window.scale();
    let c = window.center().coords();
    let step = 2.0 * n / k as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let p: Vec<f64> = (0..d).map(|a| c[a] - n + (idx[a] as f64 + 0.5) * step).collect();
        if window.contains(&p) {
            out.push(Point::new(p).expect("finite"));
        }
        let mut a = 0;
        while a < d {
            idx[a] += 1;
            if idx[a] < k {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
        if a == d {
            break;
        }
    }
    out
}

/// Sites of a two-scale campaign at scale `n`.
pub fn campaign_sites(spec: &ExperimentSpec, pair: &TwoScalePair) -> Vec<Point> {
    if spec.full_window_sites {
        full_window_sites(&pair.outer, spec.sites_per_axis)
    } else {
        pair.site_grid(spec.sites_per_axis)
    }
}

fn discrepancy_row(n: f64, inner: f64, replicas: usize, est: DiscrepancyEstimate, volume: f64, notes: String) -> ReportRow {
    let k = est.per_site.len().max(1) as f64;
    let mean = est.per_site.iter().map(|s| s.mean).sum::<f64>() / k;
    let variance = est
        .per_site
        .iter()
        .map(|s| s.std_err * s.std_err * s.replicas as f64)
        .sum::<f64>()
        / k;
    let psi_std_err = est
        .per_site
        .iter()
        .filter(|s| s.mean == est.sup_estimate)
        .map(|s| s.std_err)
        .next()
        .unwrap_or(0.0);
    ReportRow {
        n,
        inner_scale: inner,
        replicas,
        component: None,
        mean,
        variance,
        var_per_volume: variance / volume,
        d_k: None,
        d_w: None,
        d_k_std_err: None,
        psi_sup: Some(est.sup_estimate),
        psi_std_err: Some(psi_std_err),
        radius_tail: None,
        censored: None,
        discrepancy: Some(est),
        covariance: None,
        two_arm: None,
        notes,
    }
}

fn psi_row(spec: &ExperimentSpec, n: f64, window: &Region, seed: SeedState) -> Result<ReportRow> {
    let b = spec.inner_scale(n);
    let pair = TwoScalePair::new(window.clone(), b, spec.theta)?;
    let sites = campaign_sites(spec, &pair);
    let f = psi_functional(spec);
    let est = estimate_psi_at(&f, &pair, &sites, spec.replicas, seed, spec.intensity)?;
    let notes = format!("sites={}", sites.len());
    Ok(discrepancy_row(n, b, spec.replicas, est, window.volume(), notes))
}

fn radius_row(spec: &ExperimentSpec, n: f64, window: &Region, seed: SeedState) -> Result<ReportRow> {
    let x = Point::origin(spec.dimension);
    let b = spec.inner_scale(n);
    let (values, tail, censored) = match spec.radius_kind {
        RadiusKind::Onng | RadiusKind::MstAttachment => {
            let censored_at = if spec.radius_kind == RadiusKind::Onng { 2.0 * n } else { n };
            let radii = replicate(spec.replicas, seed, |s| match spec.radius_kind {
                RadiusKind::Onng => {
                    let c = sample_marked_poisson(window, spec.intensity, MarkVariant::Time, s)?;
                    onng_stabilization_radius(&c, &x, spec.time_mark)
                }
                _ => {
                    let c = sample_poisson(window, spec.intensity, s)?;
                    mst_attachment_radius(&c, &x, window)
                }
            })?;
            let sample = RadiusSample::from_radii(&radii, censored_at)?;
            let tail = estimate_radius_tail(&sample, &spec.thresholds)?;
            let censored = sample.censored_count();
            (sample.values, tail, censored)
        }
        RadiusKind::WallFailure => {
            let umax = spec.thresholds.iter().copied().fold(0.0, f64::max);
            let local = Region::cube(x.clone(), n.min(umax))?;
            let fails = replicate(spec.replicas, seed, |s| {
                let c = sample_poisson(&local, spec.intensity, s)?;
                spec.thresholds
                    .iter()
                    .map(|&u| wall_event(&c, &x, u, window).map(|w| !w))
                    .collect::<Result<Vec<bool>>>()
            })?;
            let r = fails.len() as f64;
            let tail = spec
                .thresholds
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let p = fails.iter().filter(|f| f[i]).count() as f64 / r;
                    TailPoint {
                        u,
                        survival: p,
                        std_err: (p * (1.0 - p) / r).sqrt(),
                    }
                })
                .collect();
            let counts = fails.iter().map(|f| f.iter().filter(|b| **b).count() as f64).collect();
            (counts, tail, 0)
        }
    };
    let mut row = scalar_row(n, b, values, window.volume(), seed)?;
    row.d_k = None;
    row.d_w = None;
    row.d_k_std_err = None;
    row.radius_tail = Some(tail);
    row.censored = Some(censored);
    row.notes = match spec.radius_kind {
        RadiusKind::WallFailure => "mean and variance of the number of failed thresholds".into(),
        _ => format!("censored={censored}"),
    };
    Ok(row)
}

fn two_arm_row(spec: &ExperimentSpec, n: f64, window: &Region, seed: SeedState) -> Result<ReportRow> {
    let b = spec.inner_scale(n);
    let pair = TwoScalePair::new(window.clone(), b, spec.theta)?;
    let sites = pair.site_grid(spec.sites_per_axis);
    let checkable = !pair.is_degenerate();
    struct Site {
        discrepancy: f64,
        mismatched_steps: usize,
        checks: usize,
        fired: usize,
    }
    let per_replica = replicate(spec.replicas, seed, |s| {
        let c = sample_poisson(window, spec.intensity, s)?;
        let tree = build_mst_kruskal(&c);
        sites
            .iter()
            .map(|x| {
                let outer = mst_insert_ordered(&tree, x, Mark::None, InsertionOrder::Chebyshev)?.1;
                let inner = mst_insertion_trace(&c, &pair.inner_window(x)?, x, Mark::None)?;
                let discrepancy = (outer.add_one_cost(&spec.weight) - inner.add_one_cost(&spec.weight)).abs();
                let mismatched_steps = outer
                    .steps
                    .iter()
                    .zip(&inner.steps)
                    .filter(|(o, i)| matches!((o.removed, i.removed), (Some(fo), Some(fi)) if fo.length < fi.length))
                    .count();
                let checks = if checkable {
                    mismatch_checks(&c, &pair, x, &outer, &inner)?
                } else {
                    Vec::new()
                };
                Ok(Site {
                    discrepancy,
                    mismatched_steps,
                    checks: checks.len(),
                    fired: checks.iter().filter(|m| m.fired).count(),
                })
            })
            .collect::<Result<Vec<Site>>>()
    })?;
    let mut summary = TwoArmSummary {
        pairs: 0,
        pairs_with_mismatch: 0,
        mismatched_steps: 0,
        checks: 0,
        fired: 0,
        violations: 0,
    };
    for s in per_replica.iter().flatten() {
        summary.pairs += 1;
        summary.pairs_with_mismatch += (s.mismatched_steps > 0) as usize;
        summary.mismatched_steps += s.mismatched_steps;
        summary.checks += s.checks;
        summary.fired += s.fired;
        summary.violations += s.checks - s.fired;
    }
    let per_site = sites
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let v: Vec<f64> = per_replica.iter().map(|r| r[j].discrepancy).collect();
            let m = v.len() as f64;
            let mean = v.iter().sum::<f64>() / m;
            let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (m - 1.0);
            SiteEstimate {
                site: x.coords().to_vec(),
                partner: None,
                mean,
                std_err: (var / m).sqrt(),
                replicas: v.len(),
            }
        })
        .collect::<Vec<_>>();
    let sup_estimate = per_site.iter().map(|s| s.mean).fold(0.0, f64::max);
    let notes = format!(
        "mismatches={} checks={} violations={}",
        summary.mismatched_steps, summary.checks, summary.violations
    );
    let mut row = discrepancy_row(
        n,
        b,
        spec.replicas,
        DiscrepancyEstimate { per_site, sup_estimate },
        window.volume(),
        notes,
    );
    row.two_arm = Some(summary);
    Ok(row)
}
