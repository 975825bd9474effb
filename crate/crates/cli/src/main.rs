use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use renormlab::analysis::{dentability_report, ug_witness, witness_sweep};
use renormlab::biortho::{extract_system, CoordinateStream, FunctionalStream, ListStream, ShiftedAverageStream};
use renormlab::cascade::{build_cascade, cascade_eval, cascade_invariant_report, final_bound_report, CascadeNorm};
use renormlab::directions::direction_set;
use renormlab::psi::SeedParams;
use renormlab::seed_norm::{seed_eval, SeedNorm};
use renormlab::smooth::combined;
use renormlab::verify::{emit_figure_data, exit_code, run_verify_all, write_file, RunConfig};
use renormlab::{NormOracle, RenormError, Report, Result, SparseVector};

/// Renormings of c0: seed norms, smooth combinations and cascades.
#[derive(Parser)]
#[command(name = "renormlab", version)]
struct Cli {
    /// JSON run config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verification section and write the report bundle.
    VerifyAll {
        /// Bundle path (overrides the config); stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for the CSV tables.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Evaluate the seed norm with x0 = f0 = e_i.
    SeedEval {
        #[arg(long)]
        vector: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        x0: usize,
    },
    /// Evaluate the smooth combination of two norms.
    Combine {
        #[arg(long)]
        vector: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// sup | seed:<i> | lp:<p> | scaled:<c>
        #[arg(long, default_value = "sup")]
        n1: String,
        #[arg(long, default_value = "seed:1")]
        n2: String,
    },
    #[command(subcommand)]
    Cascade(CascadeCommand),
    /// Non-uniform Gateaux witnesses of the cascade norm.
    Witness {
        /// Direction; the full direction set when omitted.
        #[arg(long)]
        direction: Option<String>,
        #[arg(long, num_args = 1.., default_values_t = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])]
        tau: Vec<f64>,
    },
    /// Certified small slices of the cascade ball.
    Dentability {
        #[arg(long, num_args = 1.., default_values_t = [0.5, 0.1, 0.01])]
        radius: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Extract an almost biorthogonal system from a functional stream.
    Extract {
        /// coordinate | shifted-average | path to {"functionals": [...]}
        #[arg(long, default_value = "shifted-average")]
        stream: String,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = renormlab::biortho::DEFAULT_SEARCH_BUDGET)]
        budget: usize,
    },
    /// Grid of psi and the seed norm on a two-coordinate section, as CSV.
    FigureData {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CascadeCommand {
    /// Build and validate the cascade.
    Build,
    /// Evaluate the cascade norm and its stabilization index.
    Eval {
        #[arg(long)]
        vector: String,
    },
    /// Stage invariants and the final bound on random samples.
    Check(CheckArgs),
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 4.0)]
    bound: f64,
}

/// Printed JSON plus whether the verification behind it passed.
struct Outcome {
    body: Option<String>,
    pass: bool,
}

impl Outcome {
    fn value(v: Value, pass: bool) -> Result<Self> {
        let body = serde_json::to_string_pretty(&v).map_err(|e| RenormError::Internal(e.to_string()))?;
        Ok(Outcome { body: Some(body), pass })
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => {
            let mut cfg = RunConfig::default();
            cfg.apply_env()?;
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn parse_norm(spec: &str, cfg: &RunConfig) -> Result<NormOracle> {
    let bad = || {
        RenormError::Parameter(format!(
            "unknown norm {spec:?}; use sup, seed:<i>, lp:<p> or scaled:<c>"
        ))
    };
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match kind {
        "sup" => Ok(NormOracle::sup()),
        "seed" => {
            let i = arg.parse::<usize>().map_err(|_| bad())?;
            Ok(SeedNorm::new(SeedParams::coordinate(i, cfg.delta)?).oracle())
        }
        "lp" => NormOracle::section_lp(num(arg)?, cfg.dim),
        "scaled" => NormOracle::sup().scaled(num(arg)?),
        _ => Err(bad()),
    }
}

fn cascade(cfg: &RunConfig) -> Result<CascadeNorm> {
    build_cascade(cfg.cascade_config())
}

fn report_json(r: &Report) -> Value {
    serde_json::to_value(r).unwrap_or(Value::Null)
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::VerifyAll { out, csv_dir } => {
            let mut paths = cfg.output.clone();
            if out.is_some() {
                paths.bundle = out;
            }
            if csv_dir.is_some() {
                paths.csv_dir = csv_dir;
            }
            let bundle = run_verify_all(&cfg);
            for s in &bundle.sections {
                eprintln!("{:<12} {}", s.id, if s.pass { "pass" } else { "FAIL" });
            }
            if let Some(f) = &bundle.first_failure {
                eprintln!("first failure: {f}");
            }
            let body = if paths.bundle.is_none() {
                Some(bundle.to_json()?)
            } else {
                None
            };
            bundle.write(&paths)?;
            Ok(Outcome {
                body: body.map(|b| b.trim_end().to_string()),
                pass: bundle.pass,
            })
        }
        Command::SeedEval { vector, delta, x0 } => {
            let y = SparseVector::parse(&vector)?;
            let s = SeedNorm::new(SeedParams::coordinate(x0, delta.unwrap_or(cfg.delta))?);
            let v = seed_eval(&s, &y)?;
            Outcome::value(
                json!({ "value": v.value, "branch": v.branch.as_str(), "psi": v.psi }),
                true,
            )
        }
        Command::Combine { vector, eps, n1, n2 } => {
            let x = SparseVector::parse(&vector)?;
            let c = combined(&parse_norm(&n1, &cfg)?, &parse_norm(&n2, &cfg)?, eps)?;
            let (v, u1, u2) = c.eval_parts(&x)?;
            Outcome::value(json!({ "value": v, "n1": u1, "n2": u2 }), true)
        }
        Command::Cascade(sub) => {
            let cn = cascade(&cfg)?;
            match sub {
                CascadeCommand::Build => Outcome::value(
                    json!({
                        "delta": cn.delta(),
                        "alpha": cn.alpha(),
                        "product": cn.product(),
                        "eta_bound": cn.config().eta_bound(),
                        "stage_budget": cn.stage_budget(),
                        "validated_stages": cn.materialized(),
                    }),
                    true,
                ),
                CascadeCommand::Eval { vector } => {
                    let x = SparseVector::parse(&vector)?;
                    let (v, n) = cascade_eval(&cn, &x)?;
                    Outcome::value(json!({ "value": v, "stabilized_at": n }), true)
                }
                CascadeCommand::Check(a) => {
                    let inv = cascade_invariant_report(&cn, cfg.dim, a.samples, cfg.seed)?;
                    let fb = final_bound_report(&cn, a.bound, cfg.dim, a.samples, cfg.seed)?;
                    let pass = inv.pass && fb.pass;
                    Outcome::value(
                        json!({ "invariants": report_json(&inv), "final_bound": report_json(&fb) }),
                        pass,
                    )
                }
            }
        }
        Command::Witness { direction, tau } => {
            let cn = cascade(&cfg)?;
            match direction {
                Some(h) => {
                    let h = SparseVector::parse(&h)?;
                    let rows = tau
                        .iter()
                        .map(|&t| ug_witness(&cn, &h, t))
                        .collect::<Result<Vec<_>>>()?;
                    let pass = rows.iter().all(|w| w.pass);
                    Outcome::value(json!({ "witnesses": rows }), pass)
                }
                None => {
                    let (rows, report) = witness_sweep(&cn, &direction_set()?, &tau)?;
                    Outcome::value(
                        json!({ "witnesses": rows, "report": report_json(&report) }),
                        report.pass,
                    )
                }
            }
        }
        Command::Dentability { radius, points } => {
            let cn = cascade(&cfg)?;
            let (rows, report) = dentability_report(&cn, &radius, cfg.dim, points, cfg.seed)?;
            Outcome::value(json!({ "slices": rows, "report": report_json(&report) }), report.pass)
        }
        Command::Extract { stream, eps, k, budget } => {
            let s: Box<dyn FunctionalStream> = match stream.as_str() {
                "coordinate" => Box::new(CoordinateStream),
                "shifted-average" => Box::new(ShiftedAverageStream),
                path => {
                    let text = std::fs::read_to_string(path).map_err(|e| RenormError::Io(format!("{path}: {e}")))?;
                    let list: ListStream = serde_json::from_str(&text)?;
                    Box::new(ListStream::new(list.functionals)?)
                }
            };
            let sys = extract_system(s.as_ref(), eps, k, budget)?;
            Outcome::value(
                serde_json::to_value(&sys).map_err(|e| RenormError::Internal(e.to_string()))?,
                true,
            )
        }
        Command::FigureData { out } => {
            let csv = emit_figure_data(&cfg)?;
            match out.or(cfg.output.figure.clone()) {
                Some(p) => {
                    write_file(&p, &csv)?;
                    Ok(Outcome { body: None, pass: true })
                }
                None => Ok(Outcome {
                    body: Some(csv.trim_end().to_string()),
                    pass: true,
                }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            if let Some(b) = o.body {
                println!("{b}");
            }
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
