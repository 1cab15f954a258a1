use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcmimo::harness::{self, FrameStatus, Profile, SimConfig};
use rcmimo::{Error, Result};

#[derive(Parser)]
#[command(version, about = "MIMO-OFDM symbol detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file with every configuration field (overrides --profile)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "desk", value_parser = ["desk", "paper"])]
    profile: String,
}

#[derive(Subcommand)]
enum Command {
    /// SER sweep over the configured SNR grid, written as CSV
    Sweep,
    /// Simulate one frame and dump the RC posteriors of every coordinate
    Frame {
        /// SNR in dB (first grid point when absent)
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        frame_index: usize,
    },
    /// Run the oracle checks
    Selftest,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => harness::load_config(p)?,
        None => SimConfig::profile(cli.profile.parse::<Profile>()?),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    match cli.command {
        Command::Sweep => {
            let total = cfg.snr_grid_db.len() * cfg.frames_per_point;
            let mut done = 0;
            let outcome = harness::sweep_with(&cfg, |_, _, _| {
                done += 1;
                log::info!("frame {done}/{total}");
            })?;
            for bad in &outcome.invalid {
                eprintln!("invalid frame at {} dB (index {}, seed {}): {}", bad.snr_db, bad.frame_index, bad.seed, bad.reason);
            }
            match &cli.out {
                Some(p) => harness::write_results(&outcome.records, p),
                None => harness::write_results_to(&outcome.records, std::io::stdout().lock()),
            }
        }
        Command::Frame { snr, frame_index } => {
            let snr = snr.unwrap_or(cfg.snr_grid_db[0]);
            let seed = harness::frame_seed(cfg.master_seed, 0, frame_index);
            let trace = harness::trace_frame(&cfg, snr, seed)?;
            for c in &trace.result.counts {
                eprintln!("{}: {}/{} symbol errors", c.detector, c.errors, c.total);
            }
            if let FrameStatus::Invalid(reason) = &trace.result.status {
                return Err(Error::Numeric(format!("frame seed {seed}: {reason}")));
            }
            harness::write_frame_dump(&trace, output(&cli.out)?)
        }
        Command::Selftest => {
            let checks = harness::selftest::run_all()?;
            let mut out = output(&cli.out)?;
            for c in &checks {
                writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            match checks.iter().find(|c| !c.passed) {
                Some(c) => Err(Error::Numeric(format!("selftest failed: {}", c.name))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
