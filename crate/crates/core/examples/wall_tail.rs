//! Wall events around a site, the attachment radius they bound, and the
//! empirical tail of wall failures.
//!
//! `cargo run --release --example wall_tail`

use geostab::point_process::{sample_poisson, Point, Region, SeedState};
use geostab::stabilization::{mst_attachment_radius, wall_event};

fn main() -> geostab::Result<()> {
    let window = Region::cube(Point::origin(2), 10.0)?;
    let x = Point::origin(2);
    let us = [2.0, 4.0, 6.0, 8.0, 10.0];
    let replicas = 400;
    let mut fails = [0usize; 5];
    let mut worst_ratio: f64 = 0.0;
    for k in 0..replicas {
        let c = sample_poisson(&window, 1.0, SeedState::new(31, k))?;
        let radius = mst_attachment_radius(&c, &x, &window)?;
        for (i, &u) in us.iter().enumerate() {
            if wall_event(&c, &x, u, &window)? {
                worst_ratio = worst_ratio.max(radius / u);
            } else {
                fails[i] += 1;
            }
        }
    }
    println!("   u   P[no wall]   log P / u^2");
    for (u, f) in us.iter().zip(fails) {
        let p = f as f64 / replicas as f64;
        println!("{u:4.0}   {p:9.4}   {:10.4}", p.ln() / (u * u));
    }
    println!("largest attachment radius / u under a wall: {worst_ratio:.3} (never above 1)");
    Ok(())
}
