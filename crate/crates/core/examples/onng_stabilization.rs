//! Online nearest-neighbour graph: cone stabilization radius and the
//! vanishing two-scale discrepancy inside it.
//!
//! `cargo run --example onng_stabilization`

use geostab::graphs::{build_onng, WeightFunction};
use geostab::point_process::{sample_marked_poisson, Mark, MarkVariant, Point, Region, SeedState};
use geostab::stabilization::{onng_stabilization_radius, two_scale_discrepancy, ConeCover, FunctionalSpec, TwoScalePair};

fn main() -> geostab::Result<()> {
    let n = 16.0;
    let outer = Region::cube(Point::origin(2), n)?;
    let pair = TwoScalePair::new(outer.clone(), n.powf(0.75), 1.1)?;
    let f = FunctionalSpec::OnngLength { weight: WeightFunction::Identity, sub_window: None };
    let cover = ConeCover::for_dim(2)?;
    println!("{} cones, covering angle {:.2} deg", cover.len(), cover.covering_angle(10_000).to_degrees());

    let x = Point::origin(2);
    let (mut stable, mut zero) = (0, 0);
    for k in 0..40 {
        let c = sample_marked_poisson(&outer, 1.0, MarkVariant::Time, SeedState::new(5, k))?;
        let t = 0.1 + 0.8 * (k as f64 / 40.0);
        let r = onng_stabilization_radius(&c, &x, t)?;
        let d = two_scale_discrepancy(&f, &c, &pair, &x, Mark::Time(t))?;
        if r <= pair.inner_scale {
            stable += 1;
            zero += (d == 0.0) as usize;
        }
        if k < 5 {
            let len = build_onng(&c)?.total(&WeightFunction::Identity);
            println!("t = {t:.2}: radius {r:.3}, discrepancy {d:.3e}, ONNG length {len:.1}");
        }
    }
    println!("radius <= b_n = {:.3} in {stable} of 40 draws; discrepancy zero in {zero} of those", pair.inner_scale);
    Ok(())
}
