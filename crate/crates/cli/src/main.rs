use std::path::{Path, PathBuf};
use std::process::ExitCode;

use careercast::cohort::CohortKind;
use careercast::config::{parse_cohorts, parse_years, RunConfig};
use careercast::features::MissingWarPolicy;
use careercast::pipeline::{run, Command};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "careercast",
    version,
    about = "Forecast late-career WAR from the first six seasons"
)]
struct Cli {
    /// Run configuration (key = value lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out`, the report directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// batters, pitchers or both.
    #[arg(long, global = true, value_parser = |s: &str| parse_cohorts(s).map(Cohorts))]
    cohort: Option<Cohorts>,
    /// Target seasons, e.g. `7..11` or `7,9`.
    #[arg(long, global = true, value_parser = |s: &str| parse_years(s).map(Years))]
    years: Option<Years>,
    /// Value for a missing target-season WAR: zero, -0.5 or -1.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_policy)]
    policy: Option<MissingWarPolicy>,
    /// More logging (-v info, -vv debug); RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Step,
}

// clap reads a bare `Vec` as a repeated argument; these are single values
#[derive(Clone, Debug)]
struct Cohorts(Vec<CohortKind>);

#[derive(Clone, Debug)]
struct Years(Vec<u32>);

#[derive(Subcommand, Debug, Clone, Copy)]
enum Step {
    /// Load and merge the raw tables, writing rejects.csv.
    Ingest,
    /// Build the batter and pitcher cohorts and the cleaning report.
    Cohort,
    /// Build and scale feature matrices and targets.
    Features,
    /// Recursive feature elimination per target season.
    Select,
    /// Grid search every model on the retained features.
    Tune,
    /// Fit the tuned models and save them under models/.
    Train,
    /// Score models and the delta baseline on the test players.
    Evaluate,
    /// Fit the aging curve and write delta-method predictions.
    Baseline,
    /// Write a synthetic league in the input format.
    Synth,
    /// Every stage through evaluation.
    All,
}

impl Step {
    fn command(self) -> Command {
        match self {
            Step::Ingest => Command::Ingest,
            Step::Cohort => Command::Cohort,
            Step::Features => Command::Features,
            Step::Select => Command::Select,
            Step::Tune => Command::Tune,
            Step::Train => Command::Train,
            Step::Evaluate => Command::Evaluate,
            Step::Baseline => Command::Baseline,
            Step::Synth => Command::Synth,
            Step::All => Command::All,
        }
    }
}

fn parse_policy(s: &str) -> Result<MissingWarPolicy, String> {
    MissingWarPolicy::parse(s).ok_or_else(|| format!("expected zero, -0.5 or -1, got {s:?}"))
}

fn load_config(cli: &Cli) -> careercast::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::from_text("", &std::env::current_dir().unwrap_or_else(|_| Path::new(".").into()))?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(c) = &cli.cohort {
        cfg.cohorts = c.0.clone();
    }
    if let Some(y) = &cli.years {
        cfg.years = y.0.clone();
    }
    if let Some(p) = cli.policy {
        cfg.policy = p;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let cmd = cli.command.command();
    let result = load_config(&cli).and_then(|cfg| run(&cfg, cmd).map(|s| (cfg, s)));
    match result {
        Ok((cfg, summary)) => {
            if cmd == Command::Cohort {
                for r in &summary.cohort_reports {
                    println!("{}", r.pretty());
                }
            }
            if let Some(report) = &summary.evaluation {
                print!("{}", report.pretty());
            }
            println!(
                "{cmd}: {} files written under {}",
                summary.artifacts.len(),
                cfg.out.display()
            );
            if cmd == Command::Synth {
                println!("synthetic tables in {}", cfg.synth_dir().display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("careercast: {e}");
            ExitCode::from(1)
        }
    }
}
