//! `qcost` command line.
//!
//! Exit codes: 0 success, 2 bad input (parse, validation, arguments),
//! 3 solver failure or disagreement, 4 extension construction failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, KrausChannel};
use crate::cost::{self, heuristic_upper_bound, lower_bound, CostConfig, CostError, CostResult, Strategy};
use crate::dilation::{extension_channel, optimal_extension, DilationError};
use crate::io::{self, FormatError};
use crate::oracle::oracle_fidelity;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_DILATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qcost", version, about = "Time-energy cost of quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cost ||K|| in radians with its certified bracket.
    Cost(SolveArgs),
    /// Worst-case entanglement fidelity cos ||K||, optionally against the sampling oracle.
    Fidelity {
        #[command(flatten)]
        solve: SolveArgs,
        /// Sample this many entangled inputs and report the sampled minimum.
        #[arg(long, value_name = "SAMPLES")]
        oracle: Option<usize>,
    },
    /// Trace lower bound, computed cost and phase-heuristic upper bound.
    Bounds(SolveArgs),
    /// Write a minimal-cost unitary extension of the channel.
    Dilate {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a channel file from a built-in family.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Channel file.
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Trace-preservation tolerance for the input channel.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print a single JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Sdp,
    Subgrad,
    Closed,
}

impl From<MethodArg> for Strategy {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Strategy::Auto,
            MethodArg::Sdp => Strategy::Sdp,
            MethodArg::Subgrad => Strategy::Supergradient,
            MethodArg::Closed => Strategy::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Depolarizing,
    Projector,
    Random,
    Identity,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long)]
    n: usize,
    /// Depolarizing strength.
    #[arg(long)]
    p: Option<f64>,
    /// Projector rank.
    #[arg(long)]
    r: Option<usize>,
    /// Number of Kraus operators of a random channel.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid channel: {0}")]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(_) | CliError::Channel(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::Cost(e) => cost_exit_code(e),
            CliError::Dilation(DilationError::Cost(e)) => cost_exit_code(e),
            CliError::Dilation(DilationError::Channel(_)) => EXIT_INPUT,
            CliError::Dilation(_) => EXIT_DILATION,
        }
    }
}

fn cost_exit_code(e: &CostError) -> i32 {
    match e {
        CostError::NoClosedForm | CostError::InvalidConfig(_) => EXIT_INPUT,
        _ => EXIT_SOLVER,
    }
}

/// Everything a subcommand reports. Absent quantities are `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub n: usize,
    pub d: usize,
    /// Trace vector of the canonical Kraus form, as `[re, im]` pairs.
    pub traces: Vec<[f64; 2]>,
    pub angle: f64,
    pub cos: f64,
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    pub fidelity_oracle: Option<f64>,
    pub residuals: Residuals,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|sdp - supergradient|` in cosine units, when both ran.
    pub solver_gap: Option<f64>,
    /// Sampled fidelity minus `cos ||K||`.
    pub oracle_gap: Option<f64>,
    /// Max entry difference between the Choi matrices of the extension and the input.
    pub choi: Option<f64>,
    /// Max entry of `U^dagger U - I` for the written extension.
    pub unitarity: Option<f64>,
    /// Max-norm of the written extension.
    pub maxnorm: Option<f64>,
}

/// Parses `args` (program name first), runs the command on the process's
/// standard streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Cost(args) => {
            let start = Instant::now();
            let (ch, res) = solve(&args)?;
            let report = report(&ch, &res, start);
            emit(out, &report, args.json, |r| {
                vec![
                    ("angle", fixed(r.angle)),
                    ("cos", fixed(r.cos)),
                    ("method", r.method.clone()),
                    ("lower", fixed(r.lower)),
                    ("upper", fixed(r.upper)),
                ]
            });
        }
        Command::Fidelity { solve: args, oracle } => {
            let start = Instant::now();
            let (ch, res) = solve(&args)?;
            let mut report = report(&ch, &res, start);
            if let Some(samples) = oracle {
                if samples == 0 {
                    return Err(CliError::Usage("--oracle needs at least one sample".into()));
                }
                let est = oracle_fidelity(&ch, samples, args.seed);
                report.fidelity_oracle = Some(est.value);
                report.residuals.oracle_gap = Some(est.value - res.cos_value);
            }
            report.wall_time_s = start.elapsed().as_secs_f64();
            emit(out, &report, args.json, |r| {
                let mut lines = vec![("fidelity", fixed(r.cos)), ("angle", fixed(r.angle))];
                if let (Some(f), Some(g)) = (r.fidelity_oracle, r.residuals.oracle_gap) {
                    lines.push(("oracle", fixed(f)));
                    lines.push(("gap", format!("{g:.3e}")));
                }
                lines
            });
        }
        Command::Bounds(args) => {
            let start = Instant::now();
            let (ch, res) = solve(&args)?;
            let mut report = report(&ch, &res, start);
            report.lower = lower_bound(&ch);
            report.upper = heuristic_upper_bound(&ch);
            emit(out, &report, args.json, |r| {
                vec![
                    ("lower", fixed(r.lower)),
                    ("cost", fixed(r.angle)),
                    ("upper", fixed(r.upper)),
                ]
            });
        }
        Command::Dilate { solve: args, out: file } => {
            let start = Instant::now();
            let (ch, res) = solve(&args)?;
            let ext = optimal_extension(&ch, &res)?;
            io::write_unitary(&file, &ext.u)?;
            let back = extension_channel(&ext.u, ch.dim())?;
            let mut report = report(&ch, &res, start);
            let eye = crate::matops::ComplexMatrix::identity(ext.u.rows());
            report.residuals.choi = Some(back.choi().max_abs_diff(&ch.choi()));
            report.residuals.unitarity = Some(ext.u.adjoint_mul(&ext.u).max_abs_diff(&eye));
            report.residuals.maxnorm = Some(ext.maxnorm);
            report.wall_time_s = start.elapsed().as_secs_f64();
            emit(out, &report, args.json, |r| {
                vec![
                    ("maxnorm", fixed(ext.maxnorm)),
                    ("angle", fixed(r.angle)),
                    ("residual", format!("{:.3e}", r.residuals.choi.unwrap_or(0.0))),
                    ("written", file.display().to_string()),
                ]
            });
        }
        Command::Gen(args) => gen(&args, out)?,
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<(KrausChannel, CostResult), CliError> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let ch = io::read_channel(&args.file, args.tol)?;
    let cfg = CostConfig {
        seed: args.seed,
        ..CostConfig::with_strategy(args.method.into())
    };
    let res = cost::cost(&ch, &cfg)?;
    Ok((ch, res))
}

fn report(ch: &KrausChannel, res: &CostResult, start: Instant) -> RunReport {
    RunReport {
        n: ch.dim(),
        d: ch.num_ops(),
        traces: ch
            .canonical_form()
            .trace_vector()
            .iter()
            .map(|z| [z.re, z.im])
            .collect(),
        angle: res.angle,
        cos: res.cos_value,
        method: res.method.to_string(),
        lower: res.lower_bracket,
        upper: res.upper_bracket,
        fidelity_oracle: None,
        residuals: Residuals {
            solver_gap: res.solver_gap,
            ..Residuals::default()
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.12}")
}

fn emit<F>(out: &mut dyn Write, report: &RunReport, json: bool, lines: F)
where
    F: FnOnce(&RunReport) -> Vec<(&'static str, String)>,
{
    // a closed stdout is not worth an exit code of its own
    if json {
        let _ = writeln!(out, "{}", serde_json::to_string(report).expect("report serializes"));
        return;
    }
    for (key, value) in lines(report) {
        let _ = writeln!(out, "{key:<9}{value}");
    }
}

fn gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let need = |what: &str| CliError::Usage(format!("family needs --{what}"));
    let ch = match args.family {
        Family::Depolarizing => channel::depolarizing(args.n, args.p.ok_or_else(|| need("p"))?)?,
        Family::Projector => channel::projector_family(args.n, args.r.ok_or_else(|| need("r"))?)?,
        Family::Random => channel::random_channel(args.n, args.d.ok_or_else(|| need("d"))?, args.seed)?,
        Family::Identity => channel::identity_channel(args.n)?,
    };
    if !ch.validate(channel::STRICT_TOL) {
        return Err(CliError::Usage(format!(
            "generated channel misses trace preservation at {:e}",
            channel::STRICT_TOL
        )));
    }
    match &args.out {
        Some(path) => write_file(path, &ch)?,
        None => {
            let _ = write!(out, "{}", io::channel_to_json(&ch));
        }
    }
    Ok(())
}

fn write_file(path: &Path, ch: &KrausChannel) -> Result<(), CliError> {
    Ok(io::write_channel(path, ch)?)
}
