use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graphs::{
    build_mst_brute, build_mst_kruskal, geometric_components, max_degree, mst_insert, verify_minimax, MinimaxMode,
};
use crate::point_process::{sample_poisson, Point, PointConfiguration, Region, SeedState};
use crate::shot_noise::KernelSpec;
use crate::spatial::KdTree;
use crate::stabilization::{add_one_cost, mst_attachment_radius, wall_event, FunctionalSpec};
use crate::stats::{empirical_dk, std_normal_quantile, SampleSet};

use super::run::run_experiment;
use super::spec::{ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> InvariantOutcome {
    InvariantOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

fn random_config<R: Rng>(rng: &mut R, d: usize, k: usize, half: f64) -> PointConfiguration {
    let pts: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-half..half)).collect())
        .collect();
    PointConfiguration::from_points(d, &pts).expect("finite points")
}

fn mst_oracle(seed: SeedState, instances: usize) -> Result<InvariantOutcome> {
    let mut rng = seed.rng();
    let mut bad = 0;
    for _ in 0..instances {
        let d = rng.random_range(2..=3);
        let k = rng.random_range(5..=60);
        let c = random_config(&mut rng, d, k, 5.0);
        let p = Point::new((0..d).map(|_| rng.random_range(-5.0..5.0)).collect())?;
        let (inserted, _) = mst_insert(&build_mst_kruskal(&c), &p)?;
        let fresh = build_mst_kruskal(&c.add_point(&p, crate::point_process::Mark::None)?);
        bad += (inserted.coordinate_edge_set() != fresh.coordinate_edge_set()) as usize;
    }
    Ok(outcome(
        "mst_insert_matches_kruskal",
        bad == 0,
        format!("{bad} mismatches in {instances} instances"),
    ))
}

fn minimax(seed: SeedState, instances: usize) -> Result<InvariantOutcome> {
    let mut rng = seed.rng();
    let mut bad = 0;
    for _ in 0..instances {
        let k = rng.random_range(2..=10);
        let c = random_config(&mut rng, 2, k, 3.0);
        bad += !verify_minimax(&build_mst_brute(&c), MinimaxMode::Exhaustive)?.passed as usize;
    }
    Ok(outcome("mst_paths_minimax", bad == 0, format!("{bad} violations")))
}

fn degree(seed: SeedState, instances: usize) -> Result<InvariantOutcome> {
    let mut rng = seed.rng();
    let mut worst = 0;
    for _ in 0..instances {
        let c = random_config(&mut rng, 2, 200, 7.0);
        worst = worst.max(max_degree(&build_mst_kruskal(&c)));
    }
    Ok(outcome("mst_degree_at_most_6", worst <= 6, format!("max degree {worst}")))
}

fn wall_attachment(seed: SeedState, replicas: usize) -> Result<InvariantOutcome> {
    let window = Region::cube(Point::origin(2), 6.0)?;
    let x = Point::origin(2);
    let (mut walls, mut bad) = (0, 0);
    for k in 0..replicas as u64 {
        let c = sample_poisson(&window, 1.0, seed.with_stream(k))?;
        let r = mst_attachment_radius(&c, &x, &window)?;
        for u in [4.0, 6.0, 8.0] {
            if wall_event(&c, &x, u, &window)? {
                walls += 1;
                bad += (r > u) as usize;
            }
        }
    }
    Ok(outcome(
        "wall_implies_attachment_radius",
        bad == 0,
        format!("{bad} violations among {walls} walls"),
    ))
}

fn component_bound(seed: SeedState, instances: usize) -> Result<InvariantOutcome> {
    let mut rng = seed.rng();
    let mut bad = 0;
    for _ in 0..instances {
        let k = rng.random_range(0..40);
        let c = random_config(&mut rng, 2, k, 3.0);
        let x = Point::new(vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])?;
        let r = rng.random_range(0.1..2.0);
        let b = Region::cube(Point::origin(2), 3.0)?;
        let cost = add_one_cost(&FunctionalSpec::ComponentCount { r }, &c, &b, &x, crate::point_process::Mark::None)?;
        let labels = geometric_components(&c, r)?.labels;
        let mut adj: Vec<usize> = KdTree::new(&c).within(x.coords(), r).into_iter().map(|i| labels[i]).collect();
        adj.sort_unstable();
        adj.dedup();
        bad += (cost > 1.0 || cost < -(adj.len() as f64)) as usize;
    }
    Ok(outcome("component_add_one_bounds", bad == 0, format!("{bad} violations")))
}

fn kernel_gradient(seed: SeedState, probes: usize) -> InvariantOutcome {
    let mut rng = seed.rng();
    let g = KernelSpec::PolynomialDecay { c_g: 1.0, delta: 3.0 };
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let v = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let grad = g.gradient(&v);
        for a in 0..2 {
            let h = 1e-5 * (1.0 + v[a].abs());
            let (mut p, mut m) = (v, v);
            p[a] += h;
            m[a] -= h;
            let fd = (g.value(&p) - g.value(&m)) / (2.0 * h);
            let scale = grad.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1e-300);
            worst = worst.max((fd - grad[a]).abs() / scale);
        }
    }
    outcome(
        "kernel_gradient_finite_differences",
        worst <= 1e-6,
        format!("max relative error {worst:.3e}"),
    )
}

fn quantile_dk() -> Result<InvariantOutcome> {
    let n = 1000;
    let v: Vec<f64> = (0..n).map(|i| std_normal_quantile((i as f64 + 0.5) / n as f64)).collect();
    let dk = empirical_dk(&SampleSet::new(v, "quantiles")?)?;
    let err = (dk - 0.5 / n as f64).abs();
    Ok(outcome("dk_of_quantile_sample", err <= 1e-12, format!("error {err:.3e}")))
}

fn determinism(seed: u64) -> Result<InvariantOutcome> {
    let mut spec = ExperimentSpec::new(ExperimentKind::ComponentsClt);
    spec.scales = vec![4.0, 6.0];
    spec.replicas = 40;
    spec.seed = seed;
    let a = run_experiment(&spec)?.to_json();
    let b = run_experiment(&spec)?.to_json();
    Ok(outcome("campaign_determinism", a == b, format!("{} bytes", a.len())))
}

/// Runs the invariant suite. `effort` scales every instance count.
pub fn run_invariants(seed: u64, effort: usize) -> Result<Vec<InvariantOutcome>> {
    let base = SeedState::new(seed, 0);
    let e = effort.max(1);
    Ok(vec![
        mst_oracle(base.derive(1), 50 * e)?,
        minimax(base.derive(2), 20 * e)?,
        degree(base.derive(3), 20 * e)?,
        wall_attachment(base.derive(4), 20 * e)?,
        component_bound(base.derive(5), 200 * e)?,
        kernel_gradient(base.derive(6), 100 * e),
        quantile_dk()?,
        determinism(seed)?,
    ])
}
