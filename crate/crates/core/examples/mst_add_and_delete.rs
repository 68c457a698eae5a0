//! Incremental MST insertion against a rebuild, the add-one cost read
//! off the insertion trace, and the bounded-degree property.
//!
//! `cargo run --example mst_add_and_delete`

use geostab::graphs::{build_mst_kruskal, max_degree, mst_insert, WeightFunction};
use geostab::point_process::{sample_poisson, Mark, Point, Region, SeedState};

fn main() -> geostab::Result<()> {
    let window = Region::cube(Point::origin(2), 12.0)?;
    let config = sample_poisson(&window, 1.0, SeedState::new(11, 0))?;
    let tree = build_mst_kruskal(&config);
    let x = Point::new(vec![0.3, -1.7])?;

    let (grown, trace) = mst_insert(&tree, &x)?;
    let rebuilt = build_mst_kruskal(&config.add_point(&x, Mark::None)?);
    println!("{} points, {} steps in the add-and-delete trace", config.len(), trace.steps.len());
    println!("matches a rebuild: {}", grown.coordinate_edge_set() == rebuilt.coordinate_edge_set());

    let w = WeightFunction::Identity;
    println!(
        "add-one cost from trace {:.6}, from totals {:.6}",
        trace.add_one_cost(&w),
        rebuilt.total(&w) - tree.total(&w)
    );
    let removed = trace.removed_lengths();
    let shown: Vec<String> = removed.iter().take(8).map(|l| format!("{l:.3}")).collect();
    println!("{} removed edges, first few: {}", removed.len(), shown.join(" "));
    println!("max degree {} (planar bound 6)", max_degree(&grown));
    Ok(())
}
