use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathmetrics::commands::{self, exit_code, RunOptions, EXIT_OK};
use pathmetrics::io::manifest::Finding;
use pathmetrics::metrics::MetricRegistry;
use pathmetrics::synth::{self, SynthOptions};
use pathmetrics::{Config, Error};

/// Intelligibility metrics and benchmark harness for pathological speech.
///
/// Exit codes: 0 ok, 1 runtime error, 2 validation error, 3 config error.
#[derive(Parser)]
#[command(name = "pathmetrics", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a manifest and everything it references; exit 0 iff no errors.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Score utterances and write one CSV per metric and protocol.
    Score(RunArgs),
    /// Build the correlation report from existing score files.
    Report(RunArgs),
    /// Score, then report.
    Run(RunArgs),
    /// Generate the synthetic benchmark corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Pathological speakers.
        #[arg(long, default_value_t = 10)]
        speakers: usize,
        #[arg(long, default_value_t = 3)]
        controls: usize,
    },
    /// List registered metrics.
    Metrics,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated protocol names [default: all in the manifest].
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<String>>,
    /// Comma-separated metric names [default: all registered; for report,
    /// all with score files].
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Scoring threads.
    #[arg(long, env = "PATHMETRICS_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Output directory; scores go to <out>/scores/<protocol>/<metric>.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// TOML config file; `--set` overrides are applied on top.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted config override such as beam.alpha=0.8 or dtw.radius=0.3.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn options(self) -> Result<RunOptions, Error> {
        let base = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Ok(RunOptions {
            manifest: self.manifest,
            protocols: self.protocols,
            metrics: self.metrics,
            workers: self.workers,
            out: self.out,
            config: base.with_overrides(&self.overrides)?,
        })
    }
}

fn print_findings(findings: &[Finding]) {
    for f in findings {
        println!("{f}");
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let registry = MetricRegistry::with_defaults();
    match cli.command {
        Command::Validate { manifest } => {
            let findings = commands::cmd_validate(&manifest)?;
            print_findings(&findings);
            println!("ok: {} warning(s)", findings.len());
        }
        Command::Score(args) => {
            let written = commands::cmd_score(&args.options()?, &registry)?;
            println!("wrote {} score file(s)", written.len());
        }
        Command::Report(args) => {
            let opts = args.options()?;
            let report = commands::cmd_report(&opts, &registry)?;
            println!("wrote report for {} metric/protocol cell(s) to {}", report.reports.len(), opts.out.display());
        }
        Command::Run(args) => {
            let opts = args.options()?;
            commands::cmd_score(&opts, &registry)?;
            let report = commands::cmd_report(&opts, &registry)?;
            println!("wrote report for {} metric/protocol cell(s) to {}", report.reports.len(), opts.out.display());
        }
        Command::Synth { out, seed, speakers, controls } => {
            let opts = SynthOptions {
                seed,
                pathological: speakers,
                controls,
                ..SynthOptions::default()
            };
            let manifest = synth::generate(&out, &opts)?;
            println!("{}", manifest.display());
        }
        Command::Metrics => {
            for m in registry.all() {
                println!("{}\t{}\t{}", m.name(), m.family(), m.polarity());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            if let Error::Validation(findings) = &e {
                print_findings(findings);
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
