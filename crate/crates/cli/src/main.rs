//! `starkplan` command-line front end.
//!
//! Exit status: 0 on success, 2 for bad input or domain errors, 3 when a fit
//! does not converge, 1 for anything else (including a failed `--verify-paper`).

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "starkplan", version, about = "Fit, model and plan Stark-tuned emitter pairs")]
pub struct Cli {
    /// Print a machine-readable JSON summary instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one PLE peak.
    FitPle(FitPleArgs),
    /// Fit a cavity reflection spectrum and report Q.
    FitCavity(FitCavityArgs),
    /// Fit a single-exponential decay.
    FitDecay(FitDecayArgs),
    /// Fit shift and linewidth laws to peak positions versus bias.
    FitStark(FitStarkArgs),
    /// Fit hole width versus pump power.
    FitHoleburn(FitHoleburnArgs),
    /// Background-corrected pulsed g2 from two timestamp files.
    G2(G2Args),
    /// HOM visibility for two emitters.
    Hom(HomArgs),
    /// Joint excitation probability on a (gamma ratio, detuning) grid.
    PexcMap(PexcMapArgs),
    /// Choose pairs and bias voltages from an emitter file.
    Plan(PlanArgs),
    /// Largest ensemble fraction inside a tuning window.
    Fraction(FractionArgs),
    /// Joule heating audit of the device.
    Thermal(ThermalArgs),
    /// Generate seeded synthetic data.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PeakShape {
    GaussLorentz,
    Voigt,
    SkewedVoigt,
}

#[derive(Args, Debug)]
pub struct FitPleArgs {
    /// CSV with `frequency_ghz,intensity[,sigma]`.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "gauss-lorentz")]
    pub shape: PeakShape,
    /// Fit without a constant baseline.
    #[arg(long)]
    pub no_baseline: bool,
    /// Write the full fit result as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the fitted curve on the data grid as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitCavityArgs {
    /// CSV with `frequency_ghz,reflectance[,sigma]`.
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitDecayArgs {
    /// CSV with `time_ns,counts`.
    pub input: PathBuf,
    #[arg(long)]
    pub no_baseline: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitStarkArgs {
    /// CSV with `voltage_v,center_ghz,width_ghz` and optional `center_err_ghz,width_err_ghz`.
    pub input: PathBuf,
    /// Onset voltage; points at or above it are excluded.
    #[arg(long, allow_hyphen_values = true)]
    pub v_threshold_v: f64,
    /// Most negative voltage included in the fit.
    #[arg(long, allow_hyphen_values = true)]
    pub v_min_v: f64,
    #[arg(long, default_value = "fit")]
    pub id: String,
    /// Write an emitter file with the fitted response.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitHoleburnArgs {
    /// CSV with `power_uw,width_ghz[,sigma]`.
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct G2Args {
    /// CSV with a `time_ns` column, detector 1.
    pub detector1: PathBuf,
    /// CSV with a `time_ns` column, detector 2.
    pub detector2: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    pub period_ns: f64,
    /// Coincidence window around each peak.
    #[arg(long, default_value_t = 40.0)]
    pub bin_ns: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background1_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background2_hz: f64,
    /// Acquisition time; defaults to the last timestamp.
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub max_peak: i64,
    /// Write the corrected histogram as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HomArgs {
    /// Radiative lifetime seen by the interferometer.
    #[arg(long, default_value_t = 458.0)]
    pub tau_prime_ns: f64,
    #[arg(long)]
    pub fwhm1_ghz: f64,
    #[arg(long)]
    pub fwhm2_ghz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub detuning_ghz: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gate_ns: f64,
}

#[derive(Args, Debug)]
pub struct PexcMapArgs {
    /// Linewidth of the fixed emitter.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_fixed: f64,
    #[arg(long, default_value_t = 0.01)]
    pub ratio_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub ratio_max: f64,
    /// Log-spaced gamma ratio samples.
    #[arg(long, default_value_t = 81)]
    pub ratio_points: usize,
    #[arg(long, default_value_t = 3.0)]
    pub delta_max: f64,
    /// Linearly spaced normalised detuning samples from 0.
    #[arg(long, default_value_t = 61)]
    pub delta_points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub floor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ObjectiveArg {
    LogSum,
    Sum,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Emitter file (`emitters.json`).
    pub emitters: PathBuf,
    /// JSON with planner constraints.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Allow blue-shifting targets (positive bias).
    #[arg(long)]
    pub allow_blue_shift: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FractionArgs {
    /// CSV with `frequency_ghz,intensity`.
    pub input: PathBuf,
    /// Tuning window width; repeat for several.
    #[arg(long, required = true)]
    pub window_ghz: Vec<f64>,
    /// Constant subtracted before normalising.
    #[arg(long, default_value_t = 0.0)]
    pub background: f64,
}

#[derive(Args, Debug)]
pub struct ThermalArgs {
    /// Compare each step with the published values and fail beyond the tolerance.
    #[arg(long)]
    pub verify_paper: bool,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// JSON overriding the device geometry.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// JSON overriding the material constants.
    #[arg(long)]
    pub materials: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// PLE scan from a scenario file.
    Ple(SimPleArgs),
    /// Cavity reflection spectrum from a JSON spec.
    Reflection(SimReflectionArgs),
    /// Single-exponential decay histogram.
    Decay(SimDecayArgs),
    /// Two-detector timestamp streams.
    G2(SimG2Args),
}

#[derive(Args, Debug)]
pub struct SimPleArgs {
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimReflectionArgs {
    /// JSON with `params`, `grid`, `scale` and optional `noise`.
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimDecayArgs {
    #[arg(long)]
    pub tau_ns: f64,
    /// Counts per ns at t = 0.
    #[arg(long, default_value_t = 100.0)]
    pub amplitude: f64,
    /// Counts per bin.
    #[arg(long, default_value_t = 0.0)]
    pub background: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub start_ns: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bin_ns: f64,
    #[arg(long, default_value_t = 1000)]
    pub bins: usize,
    /// Draw Poisson counts instead of expected values.
    #[arg(long)]
    pub poisson: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimG2Args {
    /// Emitter photon rate per detector.
    #[arg(long)]
    pub emitter_rate_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub g2_zero: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background1_hz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background2_hz: f64,
    #[arg(long, default_value_t = 100.0)]
    pub period_ns: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lifetime_ns: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out1: PathBuf,
    #[arg(long)]
    pub out2: PathBuf,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<starkplan::Error>() {
        Some(err) if err.is_non_convergence() => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("STARKPLAN_THREADS") {
        let n: usize =
            v.trim().parse().map_err(|_| anyhow::anyhow!("STARKPLAN_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            anyhow::bail!("STARKPLAN_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = configure_threads().and_then(|_| commands::run(&cli.command));
    match result {
        Ok(report) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&report.summary).expect("summary serialises")
            } else {
                report.text
            };
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if report.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
