//! Signed shot-noise field, excursion volume and perimeter, and the
//! coarea identity for the smoothed perimeter.
//!
//! `cargo run --release --example shot_noise_excursions`

use std::f64::consts::PI;

use geostab::point_process::{sample_marked_poisson, Mark, MarkVariant, Point, PointConfiguration, Region, SeedState};
use geostab::shot_noise::{
    excursion_volume, integrate_against, perimeter_marching, smoothed_perimeter, smoothed_volume, FieldSample, Grid,
    KernelSpec, SmoothTest,
};

fn main() -> geostab::Result<()> {
    let kernel = KernelSpec::PolynomialDecay { c_g: 1.0, delta: 3.0 };

    // One positive source: {g >= 1/8} is the unit disc.
    let one = PointConfiguration::from_marked_points(2, &[vec![0.0, 0.0]], &[Mark::Sign(1)])?;
    let fs = FieldSample::new(one, kernel, None)?;
    let grid = Grid::new(Region::cube(Point::origin(2), 2.0)?, 0.02)?;
    println!(
        "single source: volume {:.4} (pi = {:.4}), perimeter {:.4} (2 pi = {:.4})",
        excursion_volume(&fs, 0.125, &grid)?,
        PI,
        perimeter_marching(&fs, 0.125, &grid)?,
        2.0 * PI
    );

    let window = Region::cube(Point::origin(2), 6.0)?;
    let sources = sample_marked_poisson(&window, 1.0, MarkVariant::Sign, SeedState::new(41, 0))?;
    let fs = FieldSample::new(sources, kernel, Some(kernel.default_cutoff(2)))?;
    let grid = Grid::new(window, 0.05)?;
    let test = SmoothTest::normalized(0.1, 0.4)?;
    for u in [-0.2, 0.0, 0.125, 0.3] {
        println!(
            "u = {u:6.3}: volume {:8.3}, perimeter {:8.3}",
            excursion_volume(&fs, u, &grid)?,
            perimeter_marching(&fs, u, &grid)?
        );
    }
    let sp = smoothed_perimeter(&fs, &test, &grid)?;
    let co = integrate_against(&test, |u| perimeter_marching(&fs, u, &grid).unwrap());
    println!("smoothed perimeter {sp:.3}, integrated level perimeters {co:.3}");
    println!("smoothed volume {:.3}", smoothed_volume(&fs, &test, &grid)?);
    Ok(())
}
