//! Batch front end for the curriculum pipeline: `analyze`, `rank`, `train`,
//! `baseline` and `report`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::BaselineKind;
pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cassl",
    version,
    about = "Sensitivity-driven curriculum learning over discretized controls"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in experiment preset (desk, full).
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => ExperimentConfig::desk(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineArg {
    Random,
    Staged,
    RandomCurriculum,
}

impl From<BaselineArg> for BaselineKind {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Random => BaselineKind::Random,
            BaselineArg::Staged => BaselineKind::Staged,
            BaselineArg::RandomCurriculum => BaselineKind::RandomCurriculum,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect the initial quasi-random design and estimate Sobol indices.
    Analyze(RunArgs),
    /// Build a curriculum from a sensitivity report.
    Rank {
        /// `sensitivity.json` from `analyze`, or a bare report.
        report: PathBuf,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Comma-separated order to compare the flattened curriculum against.
        #[arg(long, value_delimiter = ',', value_name = "DIMS")]
        expect: Option<Vec<String>>,
    },
    /// Run the staged curriculum training loop.
    Train(RunArgs),
    /// Run a comparison baseline.
    Baseline {
        #[arg(value_enum)]
        kind: BaselineArg,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Summarize run reports into CSV tables.
    Report {
        #[arg(required = true, value_name = "RUN_REPORT")]
        runs: Vec<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

/// Executes one command, returning a short summary for the terminal.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let cfg = args.resolve()?;
            let f = commands::analyze_cmd(&cfg)?;
            let fmt = |v: &[f64]| {
                v.iter()
                    .map(|x| format!("{x:.3}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            Ok(format!(
                "{} rows on {}\ndims {}\ns1   {}\nst   {}\nwrote {}",
                f.design_rows,
                f.environment,
                f.report.dims.join(" "),
                fmt(&f.report.s1),
                fmt(&f.report.st),
                cfg.out_dir.join("sensitivity.json").display()
            ))
        }
        Command::Rank {
            report,
            out,
            expect,
        } => {
            let f = commands::rank_cmd(&report, expect, &out)?;
            let mut s = format!("order {}", f.flat_order.join(" "));
            if let Some(c) = &f.comparison {
                s += &format!(
                    "\nexpected {} ({} deviations)",
                    c.expected.join(" "),
                    c.deviations.len()
                );
            }
            Ok(s + &format!("\nwrote {}", out.join("curriculum.json").display()))
        }
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let f = commands::train_cmd(&cfg)?;
            Ok(run_summary(&cfg, &f))
        }
        Command::Baseline { kind, args } => {
            let cfg = args.resolve()?;
            let f = commands::baseline_cmd(&cfg, kind.into())?;
            Ok(run_summary(&cfg, &f))
        }
        Command::Report { runs, out } => {
            let (summary, _) = commands::report_cmd(&runs, &out)?;
            let mut s = String::from("method runs seen novel");
            for m in &summary {
                s += &format!("\n{} {} {:.3} {:.3}", m.method, m.runs, m.seen, m.novel);
            }
            Ok(s + &format!("\nwrote {}", out.join("comparison.csv").display()))
        }
    }
}

fn run_summary(cfg: &ExperimentConfig, f: &output::RunFile) -> String {
    let r = &f.report;
    let mut s = format!(
        "{} seed {}: {} training trials",
        r.method, r.seed, r.training_evaluations
    );
    if !r.flat_order.is_empty() {
        s += &format!("\ncurriculum {}", r.flat_order.join(" "));
    }
    if let Some(cp) = r.final_checkpoint() {
        s += &format!("\nseen {:.3} novel {:.3}", cp.seen.rate, cp.novel.rate);
    }
    s + &format!("\nwrote {}", cfg.out_dir.display())
}
