use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use geostab::graphs::{build_mst_kruskal, build_onng, geometric_components, max_degree, onng_length, WeightFunction};
use geostab::harness::{load_cached, parse_spec, run_invariants, run_experiment, write_report, OutputFormat};
use geostab::point_process::{sample_marked_poisson, MarkVariant, Point, PointConfiguration, Region, SeedState, Shape};
use geostab::shot_noise::{excursion_volume, perimeter_marching, write_field_csv, FieldSample, Grid, KernelSpec};
use geostab::GeoError;

#[derive(Parser)]
#[command(name = "geostab", version, about = "Poisson functionals and stabilization diagnostics")]
struct Cli {
    /// Root seed (overrides the seed of a spec file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files (default: stdout, or `reports` for `run`)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output format (default csv)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowShape {
    Cube,
    Ball,
}

#[derive(Clone, Copy, ValueEnum)]
enum Marks {
    None,
    Time,
    Sign,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Half-side (cube) or radius (ball).
    #[arg(long, default_value_t = 8.0)]
    scale: f64,
    #[arg(long, value_enum, default_value = "cube")]
    shape: WindowShape,
    #[arg(long, default_value_t = 1.0)]
    intensity: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a Poisson process and print its points.
    Sample {
        #[command(flatten)]
        w: WindowArgs,
        #[arg(long, value_enum, default_value = "none")]
        marks: Marks,
    },
    /// Total length and maximal degree of the MST of a sample.
    Mst {
        #[command(flatten)]
        w: WindowArgs,
    },
    /// Total length of the online nearest-neighbour graph of a sample.
    Onng {
        #[command(flatten)]
        w: WindowArgs,
    },
    /// Components of the radius-r geometric graph of a sample.
    Components {
        #[command(flatten)]
        w: WindowArgs,
        #[arg(long, default_value_t = 0.8)]
        r: f64,
    },
    /// Excursion volume and perimeter of a signed shot-noise field.
    Shotnoise {
        #[command(flatten)]
        w: WindowArgs,
        #[arg(long, default_value_t = 0.125)]
        level: f64,
        #[arg(long, default_value_t = 0.05)]
        spacing: f64,
        /// Decay exponent of `(1 + |x|)^-delta`.
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        /// Write the field on the grid to this CSV file.
        #[arg(long)]
        dump_field: Option<PathBuf>,
    },
    /// Run a campaign spec file and write its report.
    Run { spec_file: PathBuf },
    /// Run the invariant suite.
    Verify {
        /// Multiplier on the number of random instances.
        #[arg(long, default_value_t = 1)]
        effort: usize,
    },
}

enum Failure {
    Spec(String),
    Runtime(String),
}

impl From<GeoError> for Failure {
    fn from(e: GeoError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn window(w: &WindowArgs) -> Result<Region, Failure> {
    let shape = match w.shape {
        WindowShape::Cube => Shape::Cube,
        WindowShape::Ball => Shape::Ball,
    };
    Region::new(shape, Point::origin(w.dim), w.scale).map_err(|e| Failure::Spec(e.to_string()))
}

fn sample(w: &WindowArgs, marks: MarkVariant, seed: u64) -> Result<(Region, PointConfiguration), Failure> {
    let r = window(w)?;
    let c = sample_marked_poisson(&r, w.intensity, marks, SeedState::new(seed, 0))
        .map_err(|e| Failure::Spec(e.to_string()))?;
    Ok((r, c))
}

/// Prints `text` or writes it to `<out_dir>/<name>`.
fn emit(out_dir: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match out_dir {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(dir) => {
            let path = dir.join(name);
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, text))
                .map_err(|e| Failure::Runtime(format!("I/O error at {}: {e}", path.display())))?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

/// Renders one summary record as a one-row CSV or a JSON object.
fn summary(format: Format, fields: &[(&str, serde_json::Value)]) -> String {
    match format {
        Format::Json => {
            let m: serde_json::Map<String, serde_json::Value> =
                fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            format!("{}\n", serde_json::to_string_pretty(&m).expect("json"))
        }
        Format::Csv => {
            let head: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let vals: Vec<String> = fields
                .iter()
                .map(|f| match &f.1 {
                    serde_json::Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap()),
                    serde_json::Value::String(s) => s.clone(),
                    v => v.to_string(),
                })
                .collect();
            format!("{}\n{}\n", head.join(","), vals.join(","))
        }
    }
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format.unwrap_or(Format::Csv);
    let out = cli.out_dir.as_deref();
    match cli.cmd {
        Cmd::Sample { w, marks } => {
            let variant = match marks {
                Marks::None => MarkVariant::None,
                Marks::Time => MarkVariant::Time,
                Marks::Sign => MarkVariant::Sign,
            };
            let (_, c) = sample(&w, variant, seed)?;
            let text = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&c).expect("json")),
                Format::Csv => {
                    let axes: Vec<String> = (0..w.dim).map(|k| format!("x{k}")).collect();
                    let mut s = axes.join(",");
                    if variant != MarkVariant::None {
                        s.push_str(",mark");
                    }
                    s.push('\n');
                    for i in 0..c.len() {
                        let mut row: Vec<String> = c.point(i).iter().map(|v| format!("{v:.16e}")).collect();
                        match (c.time_marks(), c.sign_marks()) {
                            (Some(t), _) => row.push(format!("{:.16e}", t[i])),
                            (_, Some(sg)) => row.push(sg[i].to_string()),
                            _ => {}
                        }
                        s.push_str(&row.join(","));
                        s.push('\n');
                    }
                    s
                }
            };
            emit(out, &format!("sample.{}", ext(format)), &text)
        }
        Cmd::Mst { w } => {
            let (_, c) = sample(&w, MarkVariant::None, seed)?;
            let t = build_mst_kruskal(&c);
            let text = summary(
                format,
                &[
                    ("points", json!(c.len())),
                    ("edges", json!(t.edges().len())),
                    ("length", json!(t.total(&WeightFunction::Identity))),
                    ("max_degree", json!(max_degree(&t))),
                ],
            );
            emit(out, &format!("mst.{}", ext(format)), &text)
        }
        Cmd::Onng { w } => {
            let (_, c) = sample(&w, MarkVariant::Time, seed)?;
            let t = build_onng(&c)?;
            let text = summary(
                format,
                &[
                    ("points", json!(c.len())),
                    ("edges", json!(t.edges().len())),
                    ("length", json!(t.total(&WeightFunction::Identity))),
                    ("double_sum", json!(onng_length(&t, &WeightFunction::Identity, None)?)),
                ],
            );
            emit(out, &format!("onng.{}", ext(format)), &text)
        }
        Cmd::Components { w, r } => {
            let (_, c) = sample(&w, MarkVariant::None, seed)?;
            let lab = geometric_components(&c, r).map_err(|e| Failure::Spec(e.to_string()))?;
            let largest = lab.sizes().into_iter().max().unwrap_or(0);
            let text = summary(
                format,
                &[
                    ("points", json!(c.len())),
                    ("r", json!(r)),
                    ("components", json!(lab.count)),
                    ("largest", json!(largest)),
                ],
            );
            emit(out, &format!("components.{}", ext(format)), &text)
        }
        Cmd::Shotnoise {
            w,
            level,
            spacing,
            delta,
            dump_field,
        } => {
            let kernel = KernelSpec::PolynomialDecay { c_g: 1.0, delta };
            let (r, c) = sample(&w, MarkVariant::Sign, seed)?;
            let fs = FieldSample::new(c, kernel, None).map_err(|e| Failure::Spec(e.to_string()))?;
            let grid = Grid::new(r, spacing).map_err(|e| Failure::Spec(e.to_string()))?;
            if let Some(path) = dump_field {
                let file = std::fs::File::create(&path)
                    .map_err(|e| Failure::Runtime(format!("I/O error at {}: {e}", path.display())))?;
                write_field_csv(&fs, &grid, std::io::BufWriter::new(file))
                    .map_err(|e| Failure::Runtime(format!("I/O error at {}: {e}", path.display())))?;
            }
            let mut fields = vec![
                ("sources", json!(fs.sources().len())),
                ("level", json!(level)),
                ("volume", json!(excursion_volume(&fs, level, &grid)?)),
            ];
            if w.dim == 2 {
                fields.push(("perimeter", json!(perimeter_marching(&fs, level, &grid)?)));
            }
            emit(out, &format!("shotnoise.{}", ext(format)), &summary(format, &fields))
        }
        Cmd::Run { spec_file } => {
            let text = std::fs::read_to_string(&spec_file)
                .map_err(|e| Failure::Spec(format!("cannot read {}: {e}", spec_file.display())))?;
            let mut spec = parse_spec(&text).map_err(|e| Failure::Spec(e.to_string()))?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let format: OutputFormat = cli
                .format
                .map(Into::into)
                .or(spec.format)
                .unwrap_or(OutputFormat::Csv);
            let dir = cli
                .out_dir
                .clone()
                .or(spec.output_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("reports"));
            let report = match load_cached(&spec, &dir) {
                Some(r) => {
                    eprintln!("reusing cached report {}", r.spec_hash);
                    r
                }
                None => {
                    let r = run_experiment(&spec)?;
                    write_report(&r, &dir, OutputFormat::Json)?;
                    r
                }
            };
            let path = write_report(&report, &dir, format)?;
            println!("{}", path.display());
            Ok(())
        }
        Cmd::Verify { effort } => {
            let results = run_invariants(seed, effort)?;
            let mut failed = 0;
            for o in &results {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                failed += !o.passed as usize;
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} invariants failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
