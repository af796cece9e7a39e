//! `mld`: command-line driver for joint gas/power maximal load delivery.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 solver failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mld_core::analyze::{
    gap_report, histogram, pareto_sweep, performance_profile, profile_grid, read_exact_csv, read_results_csv,
    run_batch, run_batch_certified, write_exact_csv, write_results_csv, Aggregates,
};
use mld_core::micp::{assemble, write_lp, DumpManifest, MldVariant, DEFAULT_EPSILON};
use mld_core::netmodel::{parse_joint_network, JointNetwork};
use mld_core::scenario::{read_scenarios, sample_nk_with, write_scenarios, NkOptions, PoolMode};
use mld_core::solve::{solve_mld, SolveStatus, SolverOptions};
use mld_core::verify::{
    exact_residuals_with_tol, recover_point, rounding_heuristic, CandidatePoint, HeuristicOutcome, DEFAULT_RESIDUAL_TOL,
};

#[derive(Parser)]
#[command(
    name = "mld",
    version,
    about = "Maximal load delivery for joint gas and power networks"
)]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a network document and list every invariant violation.
    Validate { network: PathBuf },
    /// Solve one MLD problem and print the result as JSON.
    Mld {
        network: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the exact-model point recovered by the rounding heuristic
        /// here (for `verify`).
        #[arg(long)]
        point_out: Option<PathBuf>,
    },
    /// N−k scenario generation and batch runs.
    Nk {
        #[command(subcommand)]
        command: NkCommand,
    },
    /// Pareto sweep: power-first, weighted over the lambda grid, gas-first.
    Pareto {
        network: PathBuf,
        scenarios: PathBuf,
        /// Comma-separated, strictly increasing values in (0, 1).
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reports computed from a results CSV.
    Report {
        results: PathBuf,
        kind: ReportKind,
        /// Exact-point CSV written by `nk run --exact-out` (required for gaps).
        #[arg(long)]
        exact: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact residuals of a candidate point, as JSON.
    Verify {
        network: PathBuf,
        point: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_TOL)]
        tol: f64,
    },
    /// Write the relaxed instance as LP text plus a JSON manifest of its
    /// convex constraints (`<prefix>.lp`, `<prefix>.json`).
    Dump {
        network: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum NkCommand {
    /// Sample seeded N−k scenarios as JSON lines.
    Gen {
        network: PathBuf,
        #[arg(long, default_value_t = 0.15)]
        ratio: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Separate k for gas arcs and power branches.
        #[arg(long)]
        per_network: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve every scenario and write the results CSV.
    Run {
        network: PathBuf,
        scenarios: PathBuf,
        #[command(flatten)]
        variant: VariantArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also run the rounding heuristic and write exact points here.
        #[arg(long)]
        exact_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantKind {
    GasFirst,
    PowerFirst,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Hist,
    Profile,
    Gaps,
    Summary,
}

#[derive(Args)]
struct VariantArgs {
    #[arg(long, value_enum)]
    variant: VariantKind,
    /// Weight of the gas measure; required for `weighted`.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

impl VariantArgs {
    fn build(&self) -> Result<MldVariant, Failure> {
        let v = match (self.variant, self.lambda) {
            (VariantKind::Weighted, Some(l)) => MldVariant::weighted(l).usage()?,
            (VariantKind::Weighted, None) => return Err(Failure::usage(anyhow!("--lambda is required for weighted"))),
            (_, Some(_)) => return Err(Failure::usage(anyhow!("--lambda only applies to weighted"))),
            (VariantKind::GasFirst, None) => MldVariant::gas_first(),
            (VariantKind::PowerFirst, None) => MldVariant::power_first(),
        };
        let v = v.with_epsilon(self.epsilon);
        v.check().usage()?;
        Ok(v)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Per-solve wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    node_limit: usize,
    /// Ignore the time limit so results depend only on the input.
    #[arg(long)]
    deterministic: bool,
}

impl SolverArgs {
    fn options(&self, epsilon: f64) -> Result<SolverOptions, Failure> {
        let opts = SolverOptions {
            rel_gap_tol: self.gap_tol,
            node_limit: self.node_limit,
            time_limit_s: Some(self.time_limit),
            deterministic: self.deterministic,
            epsilon_lex: epsilon,
            ..Default::default()
        };
        opts.check().usage()?;
        Ok(opts)
    }
}

/// An error tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn solver(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 1,
            error: e.into(),
        })
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }
    fn solver(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 3,
            error: e.into(),
        })
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .data()
}

fn load_network(path: &Path) -> Result<JointNetwork, Failure> {
    parse_joint_network(&read_text(path)?)
        .with_context(|| format!("network {}", path.display()))
        .data()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .data()?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    Ok(BufReader::new(
        File::open(path)
            .with_context(|| format!("opening {}", path.display()))
            .data()?,
    ))
}

/// Write one line to stdout; a closed pipe is not an error.
fn emit(line: &str) -> Result<(), Failure> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure {
            code: 2,
            error: e.into(),
        }),
        _ => Ok(()),
    }
}

fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { network } => {
            let text = read_text(&network)?;
            let net: JointNetwork = serde_json::from_str(&text)
                .with_context(|| format!("network {}", network.display()))
                .data()?;
            let violations = net.validate();
            if violations.is_empty() {
                emit(&format!(
                    "ok: {} ({} buses, {} branches, {} junctions, {} arcs, {} links)",
                    net.meta.name,
                    net.power.buses.len(),
                    net.power.branches.len(),
                    net.gas.junctions.len(),
                    net.gas.num_arcs(),
                    net.links.len()
                ))?;
                return Ok(());
            }
            for v in &violations {
                emit(&v.to_string())?;
            }
            Err(Failure {
                code: 2,
                error: anyhow!("{} invariant violation(s)", violations.len()),
            })
        }
        Command::Mld {
            network,
            variant,
            solver,
            point_out,
        } => {
            let net = load_network(&network)?;
            let v = variant.build()?;
            let opts = solver.options(v.epsilon)?;
            let res = solve_mld(&net, &v, &opts).solver()?;
            let last = res.stages.last().expect("at least one stage");
            let summary = serde_json::json!({
                "network": net.meta.name,
                "variant": mld_core::analyze::variant_label(&v),
                "status": res.status.as_str(),
                "eta_g": json_number(res.eta_g),
                "eta_p": json_number(res.eta_p),
                "objective": json_number(res.objective),
                "eta_star": res.eta_star.map(json_number),
                "dual_bound": json_number(last.dual_bound),
                "gap": json_number(last.gap),
                "nodes": res.nodes(),
                "cuts": res.cuts(),
                "time_s": res.wall_time_s(),
            });
            emit(&serde_json::to_string_pretty(&summary).expect("json"))?;
            if let (Some(path), Some(x)) = (point_out, &res.point) {
                let inst = assemble(&net, &v).solver()?;
                let pt = match rounding_heuristic(&net, &inst, x, &opts, 1e-6).solver()? {
                    HeuristicOutcome {
                        point: Some(pt),
                        certified,
                        ..
                    } => {
                        log::info!("recovered point certified: {certified}");
                        pt
                    }
                    _ => recover_point(&net, &inst, x),
                };
                std::fs::write(&path, serde_json::to_string_pretty(&pt).expect("json"))
                    .with_context(|| format!("writing {}", path.display()))
                    .data()?;
            }
            if res.status == SolveStatus::NumericalFailure {
                return Err(Failure {
                    code: 3,
                    error: anyhow!("solver failed to certify a bound"),
                });
            }
            Ok(())
        }
        Command::Nk { command } => match command {
            NkCommand::Gen {
                network,
                ratio,
                count,
                seed,
                per_network,
                output,
            } => {
                let net = load_network(&network)?;
                let opts = NkOptions {
                    ratio,
                    base_seed: seed,
                    count,
                    mode: if per_network {
                        PoolMode::PerNetwork
                    } else {
                        PoolMode::Pooled
                    },
                };
                let scen = sample_nk_with(&net, &opts).usage()?;
                let mut out = open_output(output.as_deref())?;
                write_scenarios(&mut out, &scen).data()?;
                out.flush().data()?;
                log::info!(
                    "wrote {} scenarios with k = {}",
                    scen.len(),
                    scen.first().map_or(0, |s| s.k)
                );
                Ok(())
            }
            NkCommand::Run {
                network,
                scenarios,
                variant,
                solver,
                workers,
                exact_out,
                output,
            } => {
                let net = load_network(&network)?;
                let scen = read_scenarios(open_input(&scenarios)?).data()?;
                let v = variant.build()?;
                let opts = solver.options(v.epsilon)?;
                let (batch, exact) = if exact_out.is_some() {
                    let (b, e) = run_batch_certified(&net, &scen, &v, &opts, workers).solver()?;
                    (b, Some(e))
                } else {
                    (run_batch(&net, &scen, &v, &opts, workers).solver()?, None)
                };
                let mut out = open_output(output.as_deref())?;
                write_results_csv(&mut out, &batch.records).data()?;
                out.flush().data()?;
                if let (Some(path), Some(e)) = (exact_out, exact) {
                    let mut w = open_output(Some(&path))?;
                    write_exact_csv(&mut w, &e).data()?;
                    w.flush().data()?;
                }
                let a = &batch.aggregates;
                eprintln!(
                    "{} scenarios: converged {:.2}%, limit {:.2}%, infeasible {:.2}%; mean eta_g {:.6}, eta_p {:.6}",
                    a.count, a.converged_pct, a.limit_pct, a.infeasible_pct, a.mean_eta_g, a.mean_eta_p
                );
                Ok(())
            }
        },
        Command::Pareto {
            network,
            scenarios,
            lambdas,
            workers,
            solver,
            output,
        } => {
            let net = load_network(&network)?;
            let scen = read_scenarios(open_input(&scenarios)?).data()?;
            let opts = solver.options(DEFAULT_EPSILON)?;
            let curve = pareto_sweep(&net, &scen, &lambdas, &opts, workers).map_err(|e| match e {
                mld_core::analyze::AnalyzeError::InvalidGrid(_) => Failure::usage(e.into()),
                e => Failure {
                    code: 3,
                    error: e.into(),
                },
            })?;
            let mut out = open_output(output.as_deref())?;
            let mut w = csv::Writer::from_writer(&mut out);
            for p in &curve {
                w.serialize(p).data()?;
            }
            w.flush().data()?;
            drop(w);
            out.flush().data()?;
            Ok(())
        }
        Command::Report {
            results,
            kind,
            exact,
            bins,
            output,
        } => {
            let records = read_results_csv(open_input(&results)?).data()?;
            let solved: Vec<_> = records.iter().filter(|r| r.status == SolveStatus::Optimal).collect();
            let mut out = open_output(output.as_deref())?;
            let io_err = |e: io::Error| Failure {
                code: 2,
                error: e.into(),
            };
            match kind {
                ReportKind::Hist => {
                    writeln!(out, "measure,bin_lo,bin_hi,percent").map_err(io_err)?;
                    for (name, vals) in [
                        ("eta_g", solved.iter().map(|r| r.eta_g * 100.0).collect::<Vec<_>>()),
                        ("eta_p", solved.iter().map(|r| r.eta_p * 100.0).collect::<Vec<_>>()),
                    ] {
                        let vals: Vec<f64> = vals.into_iter().map(|v| v.clamp(0.0, 100.0)).collect();
                        for b in histogram(&vals, bins).data()? {
                            writeln!(out, "{name},{},{},{}", b.lo, b.hi, b.percent).map_err(io_err)?;
                        }
                    }
                }
                ReportKind::Profile => {
                    writeln!(out, "time_s,solved").map_err(io_err)?;
                    for (t, n) in performance_profile(&records, &profile_grid(&records)) {
                        writeln!(out, "{t},{n}").map_err(io_err)?;
                    }
                }
                ReportKind::Gaps => {
                    let Some(exact) = exact else {
                        return Err(Failure::usage(anyhow!("gaps needs --exact <exact.csv>")));
                    };
                    let ex = read_exact_csv(open_input(&exact)?).data()?;
                    let gaps = gap_report(&records, &ex).data()?;
                    writeln!(out, "index,relaxed,exact,gap_pct").map_err(io_err)?;
                    for g in &gaps {
                        writeln!(out, "{},{},{},{}", g.index, g.relaxed, g.exact, g.gap_pct).map_err(io_err)?;
                    }
                    if !gaps.is_empty() {
                        let mean = gaps.iter().map(|g| g.gap_pct).sum::<f64>() / gaps.len() as f64;
                        eprintln!("{} compared, mean relative gap {mean:.4}%", gaps.len());
                    }
                }
                ReportKind::Summary => {
                    let a = Aggregates::from_records(&records);
                    writeln!(out, "{}", serde_json::to_string_pretty(&a).expect("json")).map_err(io_err)?;
                }
            }
            out.flush().map_err(io_err)?;
            Ok(())
        }
        Command::Verify { network, point, tol } => {
            let net = load_network(&network)?;
            let pt: CandidatePoint = serde_json::from_str(&read_text(&point)?)
                .with_context(|| format!("point {}", point.display()))
                .data()?;
            let report = exact_residuals_with_tol(&net, &pt, tol).data()?;
            let out = serde_json::json!({
                "feasible": report.is_feasible(),
                "max_residual": report.max_residual(),
                "report": report,
            });
            emit(&serde_json::to_string_pretty(&out).expect("json"))?;
            Ok(())
        }
        Command::Dump {
            network,
            variant,
            output,
        } => {
            let net = load_network(&network)?;
            let v = variant.build()?;
            let inst = assemble(&net, &v).data()?;
            let lp = output.with_extension("lp");
            let manifest = output.with_extension("json");
            std::fs::write(&lp, write_lp(&inst))
                .with_context(|| format!("writing {}", lp.display()))
                .data()?;
            std::fs::write(&manifest, DumpManifest::of(&inst).to_json())
                .with_context(|| format!("writing {}", manifest.display()))
                .data()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
