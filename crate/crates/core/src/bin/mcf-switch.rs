//! Scenario-driven simulator CLI for the four-core core-selective switch.
//!
//! Each subcommand runs one reproducible experiment and writes a CSV power
//! trace plus a JSON report into the output directory. Validation failures
//! exit nonzero with a machine-readable JSON error on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcf_switch::error::Result;
use mcf_switch::metrics::PowerTrace;
use mcf_switch::scenario::calibrate::CalibratedParams;
use mcf_switch::scenario::{
    run_ber_sweep, run_network, run_stabilization, run_switching, run_wdm_sweep, trace_to_csv,
    ScenarioConfig, ScenarioReport,
};

#[derive(Parser)]
#[command(
    name = "mcf-switch",
    about = "Discrete-time simulator of a four-core fiber core-selective switch",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Scenario configuration file (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the RNG seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory for trace.csv and report.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override the simulated duration, seconds.
    #[arg(long, value_name = "S")]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Free-running drift followed by active stabilization.
    Stabilize(CommonOpts),
    /// Round-robin core switching; measures dwell and rise time.
    Switch(CommonOpts),
    /// BER vs received power, back-to-back and per output core.
    BerSweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Monte-Carlo bits for the counting spot checks.
        #[arg(long, default_value_t = 1_000_000)]
        mc_bits: u64,
        /// Power grid: start dBm.
        #[arg(long, default_value_t = -32.0, allow_hyphen_values = true)]
        power_min: f64,
        /// Power grid: stop dBm.
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        power_max: f64,
        /// Power grid step, dB.
        #[arg(long, default_value_t = 0.5)]
        power_step: f64,
    },
    /// Visibility vs wavelength with controls frozen at the reference.
    WdmSweep(CommonOpts),
    /// Two loopback links with a mid-run switch command.
    Network(CommonOpts),
    /// Derive and print the calibrated default parameters.
    Calibrate,
}

fn load_config(opts: &CommonOpts) -> Result<ScenarioConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(d) = opts.duration {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(
    opts: &CommonOpts,
    trace: Option<&PowerTrace>,
    report: &ScenarioReport,
) -> Result<()> {
    std::fs::create_dir_all(&opts.out)?;
    if let Some(trace) = trace {
        std::fs::write(opts.out.join("trace.csv"), trace_to_csv(trace))?;
    }
    let json = report.to_json()?;
    std::fs::write(opts.out.join("report.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stabilize(opts) => {
            let cfg = load_config(&opts)?;
            let (trace, report) = run_stabilization(&cfg)?;
            write_outputs(&opts, Some(&trace), &report)
        }
        Command::Switch(opts) => {
            let cfg = load_config(&opts)?;
            let (trace, report) = run_switching(&cfg)?;
            write_outputs(&opts, Some(&trace), &report)
        }
        Command::BerSweep {
            common,
            mc_bits,
            power_min,
            power_max,
            power_step,
        } => {
            let cfg = load_config(&common)?;
            if !(power_step > 0.0) || power_max < power_min {
                return Err(mcf_switch::error::Error::Config(
                    "power grid requires power_min <= power_max and power_step > 0".into(),
                ));
            }
            let n = ((power_max - power_min) / power_step).round() as usize + 1;
            let grid: Vec<f64> = (0..n).map(|i| power_min + i as f64 * power_step).collect();
            let report = run_ber_sweep(&cfg, &grid, mc_bits)?;
            write_outputs(&common, None, &report)
        }
        Command::WdmSweep(opts) => {
            let cfg = load_config(&opts)?;
            let report = run_wdm_sweep(&cfg)?;
            write_outputs(&opts, None, &report)
        }
        Command::Network(opts) => {
            let cfg = load_config(&opts)?;
            let (trace, report) = run_network(&cfg)?;
            write_outputs(&opts, Some(&trace), &report)
        }
        Command::Calibrate => {
            let params = CalibratedParams::derive();
            let json = serde_json::to_string_pretty(&params)
                .map_err(|e| mcf_switch::error::Error::Parse(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{{\"error\": {:?}}}", e.to_string());
            ExitCode::from(2)
        }
    }
}
