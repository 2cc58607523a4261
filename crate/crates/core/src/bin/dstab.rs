//! `dstab`: analyze, stabilize and sweep descriptor pairs; generate instances.
//!
//! Exit status: `analyze` returns 0 for an admissible pair and 1 otherwise;
//! every command returns 2 on input or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dstab::gallery::{Fixture, InstanceSpec};
use dstab::io::{
    self, InputInfo, OutputPaths, ResultSummary, RunReport, SweepSummary, SweepTableRow,
};
use dstab::numerics::{self, Tolerances};
use dstab::param::ParamState;
use dstab::pencil::{self, MatrixPair};
use dstab::solver::{self, SolveResult, SolverConfig, SweepMode};
use dstab::DMatrix;

#[derive(Parser)]
#[command(name = "dstab", version, about = "Nearest admissible descriptor pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report regularity, index, stability and the finite spectrum of (E, A).
    Analyze {
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        tol: TolFlags,
    },
    /// Compute a nearby admissible pair with rank(Ê) = r.
    Stabilize {
        #[command(flatten)]
        input: PairInput,
        /// Target rank of Ê; defaults to the numerical rank of E.
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        solve: SolveFlags,
        /// Write the per-iteration error history as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Start from a saved parameter state (JSON) instead of the default.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Prefix for `<prefix>.Ehat`, `<prefix>.Ahat` and `<prefix>.state.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for several ranks and keep the best.
    Sweep {
        #[command(flatten)]
        input: PairInput,
        /// `full`, `auto`, or a comma-separated list such as `3,4,5`.
        #[arg(long, default_value = "full")]
        ranks: String,
        #[command(flatten)]
        solve: SolveFlags,
        /// Prefix for the best pair's output files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the E and A files of a test instance.
    Gen {
        #[command(subcommand)]
        family: Family,
        /// Files are written to `<prefix>.E` and `<prefix>.A`.
        #[arg(long, global = true, default_value = "instance")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Family {
    /// (I_n, grcar(n, k))
    Grcar {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// (I_n, alpha e e^T)
    Ones {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
    },
    /// (identity with p leading zeros, grcar(n, k))
    RankdefE {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// A named small pair, e.g. `ex1` or `ex1_index2:0.1`.
    Fixture {
        #[arg(long)]
        name: String,
    },
}

#[derive(Args)]
struct PairInput {
    /// E matrix file; the identity when omitted.
    #[arg(long = "e")]
    e_path: Option<PathBuf>,
    /// A matrix file.
    #[arg(long = "a")]
    a_path: PathBuf,
}

#[derive(Args)]
struct TolFlags {
    #[arg(long, default_value_t = Tolerances::default().rank_rtol)]
    rank_rtol: f64,
    #[arg(long, default_value_t = Tolerances::default().eig_atol)]
    eig_atol: f64,
    #[arg(long, default_value_t = Tolerances::default().stability_tol)]
    stability_tol: f64,
}

impl TolFlags {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank_rtol: self.rank_rtol,
            eig_atol: self.eig_atol,
            stability_tol: self.stability_tol,
        }
    }
}

#[derive(Args)]
struct SolveFlags {
    #[arg(long, default_value_t = SolverConfig::default().max_outer_iters)]
    max_iter: usize,
    /// Wall-clock budget per solve, in seconds.
    #[arg(long, default_value_t = SolverConfig::default().time_limit_seconds)]
    time_limit: f64,
    /// Stop when e(i) - e(i+1) <= tol * e(i).
    #[arg(long, default_value_t = SolverConfig::default().rel_decrease_tol)]
    tol: f64,
    /// Fast-gradient steps on (U, B) per outer iteration.
    #[arg(long, default_value_t = SolverConfig::default().inner_fgm_steps)]
    inner_steps: usize,
    #[command(flatten)]
    tol_flags: TolFlags,
}

impl SolveFlags {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_outer_iters: self.max_iter,
            time_limit_seconds: self.time_limit,
            rel_decrease_tol: self.tol,
            inner_fgm_steps: self.inner_steps,
            tolerances: self.tol_flags.tolerances(),
            ..SolverConfig::default()
        }
    }
}

/// Failure that maps to exit status 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn load_pair(input: &PairInput) -> Result<MatrixPair, InputError> {
    let a = io::read_matrix(&input.a_path)?;
    let e = match &input.e_path {
        Some(p) => io::read_matrix(p)?,
        None => DMatrix::identity(a.nrows(), a.nrows()),
    };
    Ok(MatrixPair::new(e, a)?)
}

fn input_info(input: &PairInput, pair: &MatrixPair, tol: &Tolerances) -> InputInfo {
    InputInfo {
        e_path: input.e_path.as_ref().map(|p| p.display().to_string()),
        a_path: input.a_path.display().to_string(),
        n: pair.n(),
        rank_e: numerics::numerical_rank(pair.e(), tol).unwrap_or(0),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn summary(res: &SolveResult) -> ResultSummary {
    ResultSummary {
        r: res.state.r(),
        error: res.error,
        termination: res.termination,
        iterations: res.iterations,
        elapsed_s: res.elapsed_s,
        warnings: res.warnings.clone(),
    }
}

fn write_solution(
    res: &SolveResult,
    prefix: &Path,
    outputs: &mut OutputPaths,
) -> Result<(), InputError> {
    let e_hat = with_suffix(prefix, ".Ehat");
    let a_hat = with_suffix(prefix, ".Ahat");
    let state = with_suffix(prefix, ".state.json");
    io::write_matrix(&e_hat, res.pair.e())?;
    io::write_matrix(&a_hat, res.pair.a())?;
    let json = serde_json::to_string_pretty(&res.state)?;
    std::fs::write(&state, json).map_err(|e| InputError(format!("{}: {e}", state.display())))?;
    outputs.e_hat = Some(e_hat.display().to_string());
    outputs.a_hat = Some(a_hat.display().to_string());
    outputs.state = Some(state.display().to_string());
    Ok(())
}

fn print_report(report: &RunReport) -> Result<(), InputError> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, InputError> {
    match cli.command {
        Command::Analyze { input, tol } => {
            let tol = tol.tolerances();
            tol.validate()?;
            let pair = load_pair(&input)?;
            let report = pencil::analyze_admissibility(&pair, &tol);
            let admissible = report.admissible;
            print_report(&RunReport {
                schema: io::REPORT_SCHEMA,
                command: "analyze".into(),
                input: input_info(&input, &pair, &tol),
                tolerances: tol,
                config: None,
                result: None,
                sweep: None,
                outputs: OutputPaths::default(),
                admissibility: report,
            })?;
            Ok(ExitCode::from(if admissible { 0 } else { 1 }))
        }
        Command::Stabilize {
            input,
            rank,
            solve,
            trace,
            init,
            out,
        } => {
            let cfg = solve.config();
            cfg.validate()?;
            let pair = load_pair(&input)?;
            let info = input_info(&input, &pair, &cfg.tolerances);
            let res = match init {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
                    let state: ParamState = serde_json::from_str(&text)?;
                    if let Some(r) = rank {
                        if r != state.r() {
                            return Err(InputError(format!(
                                "--rank {r} disagrees with the initial state (r = {})",
                                state.r()
                            )));
                        }
                    }
                    solver::bcd_solve_from(&pair, state, &cfg)?
                }
                None => {
                    let r = rank.unwrap_or(info.rank_e.max(1));
                    solver::bcd_solve(&pair, r, &cfg)?
                }
            };
            let mut outputs = OutputPaths::default();
            if let Some(path) = trace {
                io::write_trace_csv(&path, &res.trace)?;
                outputs.trace = Some(path.display().to_string());
            }
            if let Some(prefix) = out {
                write_solution(&res, &prefix, &mut outputs)?;
            }
            print_report(&RunReport {
                schema: io::REPORT_SCHEMA,
                command: "stabilize".into(),
                input: info,
                tolerances: cfg.tolerances,
                result: Some(summary(&res)),
                config: Some(cfg),
                sweep: None,
                outputs,
                admissibility: res.report.clone(),
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            input,
            ranks,
            solve,
            out,
        } => {
            let cfg = solve.config();
            cfg.validate()?;
            let mode = parse_ranks(&ranks)?;
            let pair = load_pair(&input)?;
            let info = input_info(&input, &pair, &cfg.tolerances);
            let outcome = solver::rank_sweep(&pair, &cfg, &mode)?;
            let best_r = outcome.best_rank();
            let mut outputs = OutputPaths::default();
            if let Some(prefix) = out {
                write_solution(&outcome.best, &prefix, &mut outputs)?;
            }
            let rows = outcome
                .table
                .iter()
                .map(|row| SweepTableRow {
                    row: row.clone(),
                    best: row.r == best_r,
                })
                .collect();
            print_report(&RunReport {
                schema: io::REPORT_SCHEMA,
                command: "sweep".into(),
                input: info,
                tolerances: cfg.tolerances,
                result: Some(summary(&outcome.best)),
                config: Some(cfg),
                sweep: Some(SweepSummary {
                    mode: ranks,
                    best_r,
                    rows,
                }),
                outputs,
                admissibility: outcome.best.report.clone(),
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { family, out } => {
            let spec = match family {
                Family::Grcar { n, k } => InstanceSpec::Grcar { n, k },
                Family::Ones { n, alpha } => InstanceSpec::ScaledOnes { n, alpha },
                Family::RankdefE { n, p, k } => InstanceSpec::RankdefIdentity { n, p, k },
                Family::Fixture { name } => InstanceSpec::Fixture {
                    fixture: name.parse::<Fixture>()?,
                },
            };
            let pair = spec.build()?;
            let e_path = with_suffix(&out, ".E");
            let a_path = with_suffix(&out, ".A");
            io::write_matrix(&e_path, pair.e())?;
            io::write_matrix(&a_path, pair.a())?;
            let tol = Tolerances::default();
            let facts = serde_json::json!({
                "instance": spec,
                "e_path": e_path.display().to_string(),
                "a_path": a_path.display().to_string(),
                "n": pair.n(),
                "rank_e": numerics::numerical_rank(pair.e(), &tol)?,
            });
            println!("{}", serde_json::to_string_pretty(&facts)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_ranks(s: &str) -> Result<SweepMode, InputError> {
    match s {
        "full" => Ok(SweepMode::Full),
        "auto" | "adaptive" => Ok(SweepMode::Adaptive),
        list => {
            let ranks = list
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| {
                    InputError(format!(
                        "--ranks expects full, auto or a list like 3,4,5; got `{list}`"
                    ))
                })?;
            Ok(SweepMode::List(ranks))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("dstab: {msg}");
            ExitCode::from(2)
        }
    }
}
