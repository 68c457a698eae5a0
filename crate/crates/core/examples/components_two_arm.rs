//! Component counts of the radius-r graph, their add-one costs, and the
//! two-arm crossing event of the Boolean model.
//!
//! `cargo run --example components_two_arm`

use geostab::graphs::geometric_components;
use geostab::point_process::{sample_poisson, Mark, Point, Region, SeedState};
use geostab::stabilization::{add_one_cost, two_arm_event_boolean, two_arm_event_components, FunctionalSpec};

fn main() -> geostab::Result<()> {
    let window = Region::cube(Point::origin(2), 10.0)?;
    let r = 0.8;
    let c = sample_poisson(&window, 1.0, SeedState::new(21, 0))?;
    let lab = geometric_components(&c, r)?;
    let largest = lab.sizes().into_iter().max().unwrap_or(0);
    println!("{} points, {} components, largest {largest}", c.len(), lab.count);

    let f = FunctionalSpec::ComponentCount { r };
    let mut hist = std::collections::BTreeMap::new();
    for i in 0..400 {
        let x = Point::new(vec![-9.5 + (i % 20) as f64, -9.5 + (i / 20) as f64])?;
        *hist.entry(add_one_cost(&f, &c, &window, &x, Mark::None)? as i64).or_insert(0) += 1;
    }
    println!("add-one costs over a 20x20 grid of insertions: {hist:?}");

    let x = Point::origin(2);
    let inner = Region::ball(x.clone(), 1.5)?;
    let outer = Region::cube(x.clone(), 6.0)?;
    for u in [0.6, 1.0, 1.4] {
        println!(
            "u = {u}: Boolean two-arm {}, shell two-arm {}",
            two_arm_event_boolean(&c, &x, &inner, &outer, u)?,
            two_arm_event_components(&c, u, 2.0, 6.0, &x)?
        );
    }
    Ok(())
}
