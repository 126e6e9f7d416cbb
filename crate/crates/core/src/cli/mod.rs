//! The `halfwave-lab` command line.
//!
//! ```text
//! halfwave-lab simulate  --grid 64 --box 10 --k 1 --mu 1 --init gaussian:1,1 --T 0.05 --dt 1e-3 --out run1/
//! halfwave-lab picard    --grid 64 --box 10 --k 1 --mu -1 --init constant:0.1 --nodes 64 --tol 1e-10 --out run2/
//! halfwave-lab verify    --suite wiener --trials 100 --seed 7 --out v1/
//! halfwave-lab norms     --grid 64 --box 10 --init gaussian:1,1 --out n1/
//! halfwave-lab calibrate --grid 64 --box 10 --k 1 --trials 200 --out c1/
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
//! Every run directory receives a `manifest.json`, also on failure.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::evolver::Splitting;
use crate::picard::{Direction, InitialIterate};
use crate::propagator::SimulationParams;
use crate::spectral::GridSpec;
pub use config::Settings;
use output::RunDir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "halfwave-lab",
    version,
    about = "Half-wave Schrodinger simulator and estimate checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split-step evolution with a mass/energy time series and snapshots.
    Simulate(SimulateArgs),
    /// Picard iteration of the Duhamel map.
    Picard(PicardArgs),
    /// Ensemble checks of the linear, Duhamel and Lipschitz estimates.
    Verify(VerifyArgs),
    /// Norms of the initial data and the anisotropic scaling probe.
    Norms(NormsArgs),
    /// Empirical constant of the energy-space product estimate.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON settings file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Points per axis, `N` or `NXxNY`.
    #[arg(long)]
    grid: Option<String>,
    /// Half-period of the box, `L` or `LXxLY`.
    #[arg(long = "box")]
    box_size: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<i8>,
    /// Initial data, e.g. `gaussian:1,1` or `constant:0.1`.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            grid: self.grid.clone(),
            box_size: self.box_size.clone(),
            k: self.k,
            mu: self.mu,
            init: self.init.clone(),
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Steps between time-series rows.
    #[arg(long)]
    cadence: Option<usize>,
    /// Time-series rows between snapshots.
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long, value_parser = parse_splitting)]
    splitting: Option<Splitting>,
    #[arg(long)]
    backward: bool,
}

#[derive(Debug, Args)]
struct PicardArgs {
    #[command(flatten)]
    common: Common,
    /// Horizon; defaults to the existence time from the smallness conditions.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Constant C of the energy estimates.
    #[arg(long)]
    constant: Option<f64>,
    /// Measure C from a random ensemble instead.
    #[arg(long)]
    calibrate: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_parser = parse_initial_iterate)]
    initial_iterate: Option<InitialIterate>,
    #[arg(long)]
    no_dealias: bool,
    #[arg(long)]
    backward: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// linear, wiener, energy, contraction or all.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    band: Option<i64>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    calibrate: bool,
}

#[derive(Debug, Args)]
struct NormsArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated exponents for the L^q probe.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    band: Option<i64>,
}

fn parse_splitting(s: &str) -> Result<Splitting, String> {
    match s {
        "lnl" => Ok(Splitting::Lnl),
        "nln" => Ok(Splitting::Nln),
        _ => Err(format!("unknown splitting `{s}` (lnl or nln)")),
    }
}

fn parse_initial_iterate(s: &str) -> Result<InitialIterate, String> {
    match s {
        "free" => Ok(InitialIterate::FreeEvolution),
        "zero" => Ok(InitialIterate::Zero),
        _ => Err(format!("unknown initial iterate `{s}` (free or zero)")),
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

fn backward(b: bool) -> Option<Direction> {
    b.then_some(Direction::Backward)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Picard(_) => "picard",
            Command::Verify(_) => "verify",
            Command::Norms(_) => "norms",
            Command::Calibrate(_) => "calibrate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(a) => &a.common,
            Command::Picard(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Norms(a) => &a.common,
            Command::Calibrate(a) => &a.common,
        }
    }

    fn flag_settings(&self) -> Settings {
        let mut s = self.common().settings();
        match self {
            Command::Simulate(a) => {
                s.horizon = a.horizon;
                s.dt = a.dt;
                s.cadence = a.cadence;
                s.snapshot_every = a.snapshot_every;
                s.splitting = a.splitting;
                s.direction = backward(a.backward);
            }
            Command::Picard(a) => {
                s.horizon = a.horizon;
                s.nodes = a.nodes;
                s.tol = a.tol;
                s.max_iter = a.max_iter;
                s.constant = a.constant;
                s.calibrate = flag(a.calibrate);
                s.trials = a.trials;
                s.initial_iterate = a.initial_iterate;
                s.dealias = a.no_dealias.then_some(false);
                s.direction = backward(a.backward);
            }
            Command::Verify(a) => {
                s.suite = a.suite.clone();
                s.trials = a.trials;
                s.horizon = a.horizon;
                s.nodes = a.nodes;
                s.radius = a.radius;
                s.band = a.band;
                s.constant = a.constant;
                s.calibrate = flag(a.calibrate);
            }
            Command::Norms(a) => {
                s.q = a.q.clone();
            }
            Command::Calibrate(a) => {
                s.trials = a.trials;
                s.band = a.band;
            }
        }
        s
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    status: &'static str,
    exit_code: i32,
    reason: Option<&'static str>,
    message: Option<String>,
    details: Option<serde_json::Value>,
    grid: Option<GridSpec>,
    params: Option<SimulationParams>,
    seed: u64,
    settings: &'a Settings,
    outputs: &'a [String],
    wall_clock_seconds: f64,
}

/// What a command reports back for the manifest.
pub(crate) struct RunInfo {
    pub grid: Option<GridSpec>,
    pub params: Option<SimulationParams>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Format { .. } => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn error_details(e: &Error) -> Option<serde_json::Value> {
    match e {
        Error::NonConvergence {
            iterations,
            last_distance,
            ratios,
        } => Some(serde_json::json!({
            "iterations": iterations,
            "last_distance": last_distance,
            "ratios": ratios,
        })),
        _ => None,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let command = cli.command;

    let mut settings = Settings::default();
    let mut early_error = None;
    if let Some(path) = &command.common().config {
        match Settings::from_file(path) {
            Ok(file) => settings = file,
            Err(e) => early_error = Some(e),
        }
    }
    settings.overlay(&command.flag_settings());

    let mut dir = match RunDir::create(&command.common().out) {
        Ok(dir) => dir,
        Err(e) => {
            eprintln!("error: cannot create output directory: {e}");
            return EXIT_IO;
        }
    };

    let result = match early_error {
        Some(e) => Err(e),
        None => match &command {
            Command::Simulate(_) => commands::simulate(&settings, &mut dir),
            Command::Picard(_) => commands::picard(&settings, &mut dir),
            Command::Verify(_) => commands::verify(&settings, &mut dir),
            Command::Norms(_) => commands::norms(&settings, &mut dir),
            Command::Calibrate(_) => commands::calibrate(&settings, &mut dir),
        },
    };

    let (info, status, code, reason, message, details) = match &result {
        Ok(info) => (Some(info), "ok", EXIT_OK, None, None, None),
        Err(e) => {
            eprintln!("error: {e}");
            (
                None,
                "error",
                exit_code(e),
                Some(e.reason()),
                Some(e.to_string()),
                error_details(e),
            )
        }
    };
    let outputs = dir.outputs().to_vec();
    let manifest = Manifest {
        tool: "halfwave-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        status,
        exit_code: code,
        reason,
        message,
        details,
        grid: info
            .and_then(|i| i.grid)
            .or_else(|| settings.grid_spec().ok()),
        params: info.and_then(|i| i.params),
        seed: settings.seed(),
        settings: &settings,
        outputs: &outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    match dir.write_json("manifest.json", &manifest) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            EXIT_IO
        }
    }
}
