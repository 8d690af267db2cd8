use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use aasenv::commands;
use aasenv::config::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "aasenv",
    about = "Spatial envelope analysis of radiated power for active antenna arrays",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override a config key: dot path, e.g. --set pa.alpha_re=-0.02
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Override the master seed from [seed].
    #[arg(long)]
    seed: Option<u64>,

    /// Compute budget in processed samples (angles × phases × samples).
    #[arg(long)]
    budget: Option<u128>,
}

impl CommonOpts {
    fn load(&self) -> Result<(ScenarioConfig, String)> {
        let cfg = ScenarioConfig::load(&self.config, &self.set)?;
        let name = self
            .config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        Ok((cfg, name))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write analytic envelope cuts for every regime plus margined bounds.
    Envelope {
        #[command(flatten)]
        common: CommonOpts,
        /// Output directory (cuts/, spectra/, reports/ created inside).
        #[arg(long)]
        out: PathBuf,
        /// Shift cuts so boresight reads 0 dB.
        #[arg(long)]
        normalize_boresight: bool,
    },
    /// Run the waveform oracle against the analytic envelopes.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// Optional output directory for reports and sweep exports.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fault-injection hook: shift analytic envelopes by this many dB.
        #[arg(long, hide = true, default_value_t = 0.0)]
        corrupt_envelope_db: f64,
    },
    /// Two-user spatial dispersion cuts, IM directions and bound check.
    Mu {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        normalize_boresight: bool,
    },
    /// Dump branch-level component spectra and region classification.
    Psd {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        out: PathBuf,
        /// Branch to decompose, 1-based.
        #[arg(long, default_value_t = 2)]
        branch: usize,
        /// Also write the branch output waveform as iq64.
        #[arg(long)]
        dump_iq: bool,
    },
    /// Print the canonical form of the configuration.
    ConfigDump {
        #[command(flatten)]
        common: CommonOpts,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Envelope {
            common,
            out,
            normalize_boresight,
        } => {
            let (cfg, name) = common.load()?;
            let report = commands::run_envelope(
                &cfg,
                &name,
                &out,
                common.seed,
                common.budget,
                normalize_boresight,
            )?;
            println!(
                "envelope: wrote {} regime cuts and bounds to {}",
                report.regimes.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Validate {
            common,
            out,
            corrupt_envelope_db,
        } => {
            let (cfg, name) = common.load()?;
            let report = commands::run_validate(
                &cfg,
                &name,
                out.as_deref(),
                common.seed,
                common.budget,
                corrupt_envelope_db,
            )?;
            print!("{}", report.render_text());
            Ok(report.pass)
        }
        Command::Mu {
            common,
            out,
            normalize_boresight,
        } => {
            let (cfg, name) = common.load()?;
            let report = commands::run_mu(
                &cfg,
                &name,
                &out,
                common.seed,
                common.budget,
                normalize_boresight,
            )?;
            println!(
                "mu: bound {} across {} bands, cuts written to {}",
                if report.pass { "holds" } else { "VIOLATED" },
                report.bounds.len(),
                out.display()
            );
            Ok(report.pass)
        }
        Command::Psd {
            common,
            out,
            branch,
            dump_iq,
        } => {
            let (cfg, name) = common.load()?;
            commands::run_psd(
                &cfg,
                &name,
                &out,
                common.seed,
                common.budget,
                branch,
                dump_iq,
            )?;
            println!("psd: spectra written to {}", out.display());
            Ok(true)
        }
        Command::ConfigDump { common, out } => {
            let (cfg, _) = common.load()?;
            let text = commands::run_config_dump(&cfg, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
