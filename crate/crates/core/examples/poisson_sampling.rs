//! Seeded Poisson samples on cubes and balls, with and without marks.
//!
//! `cargo run --example poisson_sampling`

use geostab::point_process::{sample_marked_poisson, sample_poisson, MarkVariant, Point, Region, SeedState};

fn main() -> geostab::Result<()> {
    let cube = Region::cube(Point::origin(2), 10.0)?;
    let ball = Region::ball(Point::origin(3), 4.0)?;
    let seed = SeedState::new(7, 0);

    for (name, region) in [("cube", &cube), ("ball", &ball)] {
        let counts: Vec<usize> = (0..200)
            .map(|k| sample_poisson(region, 1.5, seed.with_stream(k)).map(|c| c.len()))
            .collect::<geostab::Result<_>>()?;
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        println!(
            "{name}: volume {:.2}, expected count {:.1}, mean over 200 samples {mean:.1}",
            region.volume(),
            1.5 * region.volume()
        );
    }

    let a = sample_poisson(&cube, 1.0, seed)?;
    let b = sample_poisson(&cube, 1.0, seed)?;
    assert_eq!(a, b);
    println!("same seed, same sample: {} points", a.len());

    let inner = Region::cube(Point::origin(2), 3.0)?;
    println!("restricted to half-side 3: {} points", a.restrict(&inner)?.len());

    let marked = sample_marked_poisson(&cube, 1.0, MarkVariant::Time, seed.with_stream(1))?;
    let times = marked.time_marks().expect("time marks");
    let first = times
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    println!("earliest arrival at {:?} (t = {:.4})", marked.point(first), times[first]);
    Ok(())
}
