//! `fput`: simulate homogeneous and disordered FPUT-α lattices, reproduce
//! recurrence breakdown, blow-up, the two-mode reduction and chaos scans.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 integration failure,
//! 4 unexpected blow-up.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fput",
    version,
    about = "FPUT-α lattice simulation and analysis",
    arg_required_else_help = true
)]
struct Cli {
    /// Flat TOML config file; command-line flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: $FPUT_OUT_DIR or ./fput-out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed for disorder and deviation vectors
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensembles: 0 = all cores, 1 = sequential
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write t, x, p samples
    Simulate(ModelArgs),
    /// Integrate and write normal-mode energies (optionally truncated)
    ModeEnergies(ModeEnergiesArgs),
    /// Equilibria, stability and phase portrait of the reduced system
    TwoMode(TwoModeArgs),
    /// Region classification and bifurcation thresholds
    Bifurcation(TwoModeArgs),
    /// Ensemble sweep of the reduced coupling coefficients over tolerance
    SweepCoefficients(SweepArgs),
    /// Classify disorder realizations as regular or chaotic per chain size
    ChaosScan(ChaosScanArgs),
    /// Recurrence peaks of the lowest-mode energy
    Recurrence(ModelArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::ModeEnergies(_) => "mode-energies",
            Command::TwoMode(_) => "two-mode",
            Command::Bifurcation(_) => "bifurcation",
            Command::SweepCoefficients(_) => "sweep-coefficients",
            Command::ChaosScan(_) => "chaos-scan",
            Command::Recurrence(_) => "recurrence",
        }
    }
}

#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct ModelArgs {
    /// Number of particles
    #[arg(long)]
    n: Option<usize>,
    /// Nonlinear coupling strength
    #[arg(long)]
    alpha: Option<f64>,
    /// Disorder tolerance percentage
    #[arg(long)]
    tau: Option<f64>,
    /// Model variant: auto | homogeneous | disordered
    #[arg(long)]
    variant: Option<String>,
    /// Integrator: auto | yoshida | rk8
    #[arg(long)]
    integrator: Option<String>,
    /// Symplectic step size
    #[arg(long)]
    dt: Option<f64>,
    /// Adaptive absolute tolerance
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Adaptive relative tolerance
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Integration horizon
    #[arg(long)]
    t_final: Option<f64>,
    /// Sampling interval
    #[arg(long)]
    stride: Option<f64>,
    /// Blow-up radius on max |x_j|
    #[arg(long)]
    escape_radius: Option<f64>,
}

#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct ModeEnergiesArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Keep only the first m modes active (0 = full system)
    #[arg(long)]
    modes: Option<usize>,
}

#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct TwoModeArgs {
    /// Reduced coupling Ã (default: extracted from the lattice model)
    #[arg(long)]
    a_tilde: Option<f64>,
    /// Reduced coupling B̃ (default: extracted from the lattice model)
    #[arg(long)]
    b_tilde: Option<f64>,
    /// Conserved constant C (default: canonical initial condition)
    #[arg(long)]
    c: Option<f64>,
    /// Chain size fixing r₁² = (N+1)/8 and extraction
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Tolerance used when extracting Ã, B̃ from a disorder realization
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delta_min: Option<f64>,
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long)]
    delta_steps: Option<usize>,
    #[arg(long)]
    theta_steps: Option<usize>,
    /// Slow-time span of the plotted trajectory
    #[arg(long)]
    slow_span: Option<f64>,
    /// Envelope-coordinate hand-off span at the singular start
    #[arg(long)]
    handoff: Option<f64>,
    /// Slow-time direction of the trajectory (-1 follows T = εt, ε < 0)
    #[arg(long)]
    direction: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct SweepArgs {
    /// Tolerance grid: "start:stop:step" or comma list
    #[arg(long)]
    tau_grid: Option<String>,
    /// Realizations per tolerance
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct ChaosScanArgs {
    /// Comma list of chain sizes
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Indicator horizon
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Deviation renormalization interval
    #[arg(long)]
    renorm_interval: Option<f64>,
    /// Also export indicator series of realization 0 per chain size
    #[arg(long)]
    export_series: bool,
}

fn merge_model_args(cfg: &mut RunConfig, a: &ModelArgs) {
    macro_rules! set {
        ($($f:ident),+) => { $(if let Some(v) = &a.$f { cfg.$f = v.clone(); })+ };
    }
    set!(
        n,
        alpha,
        tau,
        variant,
        integrator,
        dt,
        abs_tol,
        rel_tol,
        t_final,
        stride,
        escape_radius
    );
}

fn merge_two_mode_args(cfg: &mut RunConfig, a: &TwoModeArgs) {
    macro_rules! set {
        ($($f:ident),+) => { $(if let Some(v) = &a.$f { cfg.$f = v.clone(); })+ };
    }
    set!(
        a_tilde,
        b_tilde,
        c,
        n,
        alpha,
        tau,
        delta_min,
        delta_max,
        delta_steps,
        theta_steps,
        slow_span,
        handoff,
        direction
    );
}

fn resolve_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    match &cli.command {
        Some(Command::Simulate(a)) | Some(Command::Recurrence(a)) => merge_model_args(&mut cfg, a),
        Some(Command::ModeEnergies(a)) => {
            merge_model_args(&mut cfg, &a.model);
            if let Some(m) = a.modes {
                cfg.modes = m;
            }
        }
        Some(Command::TwoMode(a)) | Some(Command::Bifurcation(a)) => {
            merge_two_mode_args(&mut cfg, a)
        }
        Some(Command::SweepCoefficients(a)) => {
            if let Some(v) = &a.tau_grid {
                cfg.tau_grid = v.clone();
            }
            if let Some(v) = a.realizations {
                cfg.realizations = v;
            }
            if let Some(v) = a.n {
                cfg.n = v;
            }
            if let Some(v) = a.alpha {
                cfg.alpha = v;
            }
        }
        Some(Command::ChaosScan(a)) => {
            macro_rules! set {
                ($($f:ident),+) => { $(if let Some(v) = &a.$f { cfg.$f = v.clone(); })+ };
            }
            set!(
                n_list,
                tau,
                realizations,
                horizon,
                alpha,
                dt,
                abs_tol,
                rel_tol,
                renorm_interval
            );
            if a.export_series {
                cfg.export_series = true;
            }
        }
        None => {}
    }
    if let Some(cmd) = &cli.command {
        cfg.command = cmd.name().to_string();
    }
    if cfg.command.is_empty() {
        anyhow::bail!("no command given on the command line or in the config file");
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if cfg.out.as_os_str().is_empty() {
        cfg.out = std::env::var_os("FPUT_OUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("fput-out"));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!(
            "error: cannot create output directory {}: {e}",
            cfg.out.display()
        );
        return ExitCode::from(2);
    }

    let started = Instant::now();
    let result = commands::dispatch(&cfg);
    let wall = started.elapsed().as_secs_f64();

    let manifest_path = cfg.out.join("manifest.toml");
    if let Err(e) = std::fs::write(&manifest_path, cfg.manifest_text(wall)) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(2);
    }

    match result {
        Ok(commands::Outcome::Success) => {
            println!("done in {wall:.2}s; outputs in {}", cfg.out.display());
            ExitCode::SUCCESS
        }
        Ok(commands::Outcome::BlowUpDetected(t)) => {
            eprintln!("blow-up detected at t = {t}; outputs truncated at escape");
            ExitCode::from(4)
        }
        Err(commands::CliError::InvalidConfig(msg)) => {
            eprintln!("invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Integration(msg)) => {
            eprintln!("integration failure: {msg}");
            ExitCode::from(3)
        }
        Err(commands::CliError::Io(msg)) => {
            eprintln!("output error: {msg}");
            ExitCode::from(2)
        }
    }
}
