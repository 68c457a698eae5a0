//! A small CLT campaign built in code, run, and written as CSV and JSON.
//!
//! `cargo run --release --example clt_campaign -- [out-dir]`

use geostab::harness::{emit_spec, run_experiment, write_report, ExperimentKind, ExperimentSpec, OutputFormat};

fn main() -> geostab::Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::MstClt);
    spec.scales = vec![6.0, 8.0, 12.0, 16.0];
    spec.replicas = 200;
    spec.seed = 2024;
    println!("{}", emit_spec(&spec));

    let report = run_experiment(&spec)?;
    for row in &report.rows {
        println!(
            "n = {:4}: mean {:9.3}  var/|B_n| {:.4}  d_K {:.4}  d_W {:.4}",
            row.n,
            row.mean,
            row.var_per_volume,
            row.d_k.unwrap_or(f64::NAN),
            row.d_w.unwrap_or(f64::NAN)
        );
    }
    if let Some(fit) = report.variance_fit {
        println!("log variance vs log n: slope {:.3} (R^2 {:.3})", fit.slope, fit.r_squared);
    }

    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("geostab-reports"));
    for f in [OutputFormat::Csv, OutputFormat::Json] {
        println!("wrote {}", write_report(&report, dir.as_ref(), f)?.display());
    }
    Ok(())
}
