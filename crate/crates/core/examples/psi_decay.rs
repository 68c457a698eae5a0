//! Two-scale discrepancy estimates for the component count as the
//! window grows, with the geometric variance-bound terms.
//!
//! `cargo run --release --example psi_decay`

use geostab::point_process::{Point, Region, SeedState, Shape};
use geostab::stabilization::{estimate_psi, gamma_geometric, FunctionalSpec, TwoScalePair};

fn main() -> geostab::Result<()> {
    let f = FunctionalSpec::ComponentCount { r: 0.8 };
    println!("   n     b_n    sup psi    std err   gamma4");
    for (j, n) in [8.0f64, 12.0, 16.0, 24.0].into_iter().enumerate() {
        let b = n.sqrt();
        let pair = TwoScalePair::new(Region::cube(Point::origin(2), n)?, b, 1.1)?;
        let sites = pair.site_grid(3);
        let est = estimate_psi(&f, &pair, &sites, 200, SeedState::new(51, j as u64))?;
        let se = est
            .per_site
            .iter()
            .find(|s| s.mean == est.sup_estimate)
            .map_or(0.0, |s| s.std_err);
        let sigma = (2.0 * n).powi(2).sqrt();
        let g = gamma_geometric(n, b, 2, &[sigma], Shape::Cube)?;
        println!("{n:4.0}  {b:6.3}  {:9.5}  {se:9.5}  {:.3e}", est.sup_estimate, g.gamma4);
    }

    let n = 8.0;
    let full = TwoScalePair::new(Region::cube(Point::origin(2), n)?, n, 1.1)?;
    let est = estimate_psi(&f, &full, &full.site_grid(3), 30, SeedState::new(52, 0))?;
    println!("b_n = n: sup psi = {}", est.sup_estimate);
    Ok(())
}
