//! `tocq` command-line front-end.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tocq::dynamics::GateKind;
use tocq::smoothing::{InitialPulse, Objective};
use tocq::state_prep::StructureLabel;

mod commands;
mod config;
mod io;

use config::{parse_angle, parse_bracket, parse_grid, FileConfig, Grid};
use io::Outputs;

/// Bad user input (flags, files); exits with code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(
    name = "tocq",
    version,
    about = "Time-optimal control of a driven qubit"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "TOCQ_OUT_DIR", default_value = "tocq-out")]
    out: PathBuf,
    /// TOML config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for restarts (per-task seeds are derived from it).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// C + 1 at or below this counts as reached.
    #[arg(long, global = true)]
    tol_fidelity: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Time-optimal state preparation between two Bloch points.
    StatePrep(StatePrepArgs),
    /// Minimum-time X / Y / population-transfer gate.
    Xgate(XgateArgs),
    /// Fidelity-preserving smoothing of the gate pulse.
    Smooth(SmoothArgs),
    /// Audit a pulse file against the maximum principle.
    Verify(VerifyArgs),
    /// Fourier spectrum of a pulse file.
    Spectrum(SpectrumArgs),
    /// Parameter sweeps written as CSV.
    Sweep(SweepArgs),
    /// Regenerate a standard dataset.
    Repro(ReproArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::StatePrep(_) => "state-prep",
            Command::Xgate(_) => "xgate",
            Command::Smooth(_) => "smooth",
            Command::Verify(_) => "verify",
            Command::Spectrum(_) => "spectrum",
            Command::Sweep(_) => "sweep",
            Command::Repro(_) => "repro",
        }
    }
}

#[derive(Args, Serialize, Clone)]
pub struct Endpoints {
    /// Initial polar angle (radians, or e.g. `0.7pi`).
    #[arg(long, value_parser = parse_angle, default_value = "0.7pi")]
    pub theta_init: f64,
    #[arg(long, value_parser = parse_angle, default_value = "0")]
    pub phi_init: f64,
    #[arg(long, value_parser = parse_angle, default_value = "0.35pi")]
    pub theta_target: f64,
    #[arg(long, value_parser = parse_angle, default_value = "pi")]
    pub phi_target: f64,
}

#[derive(Args, Serialize)]
pub struct StatePrepArgs {
    #[command(flatten)]
    pub endpoints: Endpoints,
    #[arg(long)]
    pub umax: f64,
    /// Longest duration scanned (default 2π/u_max).
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Restrict the search, e.g. `BB-6+,BSB+-`.
    #[arg(long, value_delimiter = ',')]
    pub structures: Vec<StructureLabel>,
    /// Trajectory samples.
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateArg {
    X,
    Y,
    Pt,
}

impl From<GateArg> for GateKind {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::X => GateKind::X,
            GateArg::Y => GateKind::Y,
            GateArg::Pt => GateKind::Pt,
        }
    }
}

#[derive(Args, Serialize)]
pub struct XgateArgs {
    #[arg(long, required_unless_present = "sweep")]
    pub umax: Option<f64>,
    #[arg(long, value_enum, default_value = "x")]
    pub gate: GateArg,
    /// u_max grid `lo:hi:n`; writes a CSV row per point.
    #[arg(long, value_parser = parse_grid, conflicts_with = "umax")]
    pub sweep: Option<Grid>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Tanh,
    Third,
    Constrained,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Bb,
    Rabi,
}

impl From<InitArg> for InitialPulse {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Bb => InitialPulse::BangBang,
            InitArg::Rabi => InitialPulse::Rabi,
        }
    }
}

#[derive(Args, Serialize)]
pub struct SmoothArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub umax: f64,
    /// Duration in units of T_Rabi = π/u_max. Tanh and third-harmonic runs
    /// search the minimum perfect-gate time when omitted.
    #[arg(long)]
    pub t_over_trabi: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    /// Grid size for the constrained scheme.
    #[arg(long)]
    pub nt: Option<usize>,
    /// smooth, power or mixed:<w>.
    #[arg(long)]
    pub objective: Option<Objective>,
    /// Starting pulse for the constrained scheme.
    #[arg(long, value_enum, default_value = "bb")]
    pub init: InitArg,
    /// Harmonics written to spectrum.csv.
    #[arg(long, default_value_t = 40)]
    pub harmonics: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostArg {
    X,
    Y,
    Pt,
    /// State preparation between the --theta/--phi endpoints.
    Sp,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    /// Pulse CSV with header `t,u`.
    #[arg(long)]
    pub pulse: PathBuf,
    /// Control bound (default: the largest |u| in the file).
    #[arg(long)]
    pub umax: Option<f64>,
    #[arg(long, value_enum, default_value = "x")]
    pub cost: CostArg,
    #[command(flatten)]
    pub endpoints: Endpoints,
}

#[derive(Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    /// Normalization (default: the largest |u| in the file).
    #[arg(long)]
    pub umax: Option<f64>,
    #[arg(long, default_value_t = 40)]
    pub harmonics: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Minimum gate time per u_max.
    Xgate,
    /// Time-optimal structure per u_max.
    StatePrep,
    /// Tanh minimum perfect-gate time per u_max.
    Tanh,
    /// Third-harmonic minimum perfect-gate time per u_max.
    Third,
    /// Rabi-pulse gate error per u_max.
    Rabi,
    /// Constrained smoothing per T/T_Rabi at fixed u_max.
    Constrained,
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    /// Grid `lo:hi:n` of u_max (of T/T_Rabi for `constrained`).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    /// Fixed u_max for `constrained`.
    #[arg(long, default_value_t = 0.2)]
    pub umax: f64,
    #[arg(long, value_enum, default_value = "x")]
    pub gate: GateArg,
    #[arg(long, default_value_t = 4.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "bb")]
    pub init: InitArg,
    #[command(flatten)]
    pub endpoints: Endpoints,
    /// Also bisect the singular-arc onset inside `lo:hi` (state-prep only).
    #[arg(long, value_parser = parse_bracket)]
    pub critical: Option<(f64, f64)>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
pub enum ReproTarget {
    /// Rabi gate error over u_max, plus a Rabi pulse file.
    RabiCurve,
    /// T*/T_Rabi and ω_eff over u_max, including the small-u limit.
    GateRatio,
    /// State-preparation structures and singular-arc onsets.
    StatePrepPlateaus,
    /// Third-harmonic minimum times.
    ThirdHarmonic,
    /// Tanh gate error against T/T_Rabi at β = 4, and minimum times.
    TanhScan,
    /// Spectra of the bang-bang and tanh gate pulses at u_max = 0.2.
    Spectra,
    /// Converged smoothness cost against T/T_Rabi, both initial pulses.
    SmoothCost,
    All,
}

#[derive(Args, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub target: ReproTarget,
}

/// Manifest written next to every run's outputs.
#[derive(Serialize)]
struct RunRecord<'a> {
    subcommand: &'a str,
    args: &'a Command,
    config: &'a FileConfig,
    version: &'static str,
    seed: u64,
    jobs: usize,
    wall_clock_s: f64,
    outputs: Vec<String>,
}

pub struct Ctx {
    pub cfg: FileConfig,
    pub out: Outputs,
    pub jobs: usize,
}

impl Ctx {
    /// Run `f` on a pool of `jobs` workers.
    pub fn pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()?;
        Ok(pool.install(f))
    }
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let mut cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    cfg.apply_seed(seed);
    if let Some(tol) = cli.tol_fidelity {
        if !(tol > 0.0) {
            return Err(Invalid(format!("--tol-fidelity must be positive, got {tol}")).into());
        }
        cfg.state_prep.tol_fidelity = tol;
        cfg.xgate.tol_fidelity = tol;
        cfg.smoothing.tol_fidelity = tol;
        cfg.constrained.tol_fidelity = tol;
    }
    let jobs = match cli.jobs {
        Some(0) => return Err(Invalid("--jobs must be at least 1".into()).into()),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let mut ctx = Ctx {
        cfg,
        out: Outputs::new(cli.out.clone())?,
        jobs,
    };
    match &cli.command {
        Command::StatePrep(a) => commands::state_prep(&mut ctx, a)?,
        Command::Xgate(a) => commands::xgate(&mut ctx, a)?,
        Command::Smooth(a) => commands::smooth(&mut ctx, a)?,
        Command::Verify(a) => commands::verify(&mut ctx, a)?,
        Command::Spectrum(a) => commands::spectrum(&mut ctx, a)?,
        Command::Sweep(a) => commands::sweep(&mut ctx, a)?,
        Command::Repro(a) => commands::repro(&mut ctx, a)?,
    }
    let mut outputs = ctx.out.files.clone();
    outputs.push("run.json".into());
    let record = RunRecord {
        subcommand: cli.command.name(),
        args: &cli.command,
        config: &ctx.cfg,
        version: env!("CARGO_PKG_VERSION"),
        seed: ctx.cfg.seed,
        jobs,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs,
    };
    ctx.out.json("run.json", &record)?;
    println!(
        "wrote {} files to {}",
        ctx.out.files.len(),
        ctx.out.dir.display()
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<tocq::Error>() {
            return match e {
                tocq::Error::Domain(_) | tocq::Error::Validation(_) => 2,
                tocq::Error::Optimization(_) | tocq::Error::NotFound(_) => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
