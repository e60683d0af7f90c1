//! `cogtrack` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{
    evaluate, fresh_q_table, histogram_to_csv, metrics_to_csv, run_episode, run_to_csv, summary_to_csv,
    train_qlearning, calibrate_discretizer, SeedPlan, SummaryRow,
};
use crate::fileio::write_atomic;
use crate::policy::{Discretizer, Policy, PolicySpec, QTable};
use crate::trajectory::{generate_trajectory, write_trajectory_csv, TruthPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const DEFAULT_ROSTER: &str = "fixed:1e6,fixed:5e6,scaling,qlearn,qlearn-lookahead";

#[derive(Debug, Parser)]
#[command(
    name = "cogtrack",
    version,
    about = "Adaptive bandwidth selection for a radar tracking a ballistic target",
    after_help = "Policies: fixed:<hz> | scaling | qlearn | qlearn-lookahead.\n\
                  Learned policies without --qtable are calibrated and trained from --seed first."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment config; missing fields take defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base seed for every random draw (default: episode.seed from the config).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Policy spec, comma-separated for `compare`.
    #[arg(long, global = true, value_name = "NAME", value_delimiter = ',')]
    pub policy: Vec<PolicySpec>,

    /// Q-table JSON to load instead of training.
    #[arg(long, global = true, value_name = "PATH")]
    pub qtable: Option<PathBuf>,

    /// Number of runs (calibration, training or evaluation, by subcommand).
    #[arg(long, global = true, value_name = "N")]
    pub runs: Option<usize>,

    /// Transmissions per episode.
    #[arg(long, global = true, value_name = "N")]
    pub transmissions: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the configured trajectory as CSV (`--seed` picks the maneuver draw).
    GenerateTrajectory,
    /// Pilot runs over every fixed action; writes discretizer edges JSON.
    Calibrate,
    /// Calibrate and train a Q-table (`--policy qlearn|qlearn-lookahead`).
    Train,
    /// Evaluate one policy; writes metrics and histogram CSVs.
    Evaluate,
    /// Evaluate a list of policies on the same seeds; writes a summary CSV.
    Compare,
    /// One seeded run of one policy; writes the per-step CSV.
    Trace,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgesDoc {
    pub pred_var_edges: Vec<f64>,
    pub meas_var_edges: Vec<f64>,
}

impl From<&Discretizer> for EdgesDoc {
    fn from(d: &Discretizer) -> Self {
        Self {
            pred_var_edges: d.pred_var_edges.clone(),
            meas_var_edges: d.meas_var_edges.clone(),
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
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
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

struct Session {
    cfg: ExperimentConfig,
    seed: u64,
    trajectory: Vec<TruthPoint>,
}

impl Session {
    fn open(cli: &Cli) -> std::result::Result<Self, CliError> {
        let mut cfg = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = cli.transmissions {
            cfg.episode.n_transmissions = n;
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let seed = cli.seed.unwrap_or(cfg.episode.seed);
        let trajectory = generate_trajectory(&cfg.trajectory, cfg.trajectory_seed)?;
        Ok(Self { cfg, seed, trajectory })
    }

    fn seeds(&self) -> SeedPlan {
        SeedPlan::from_seed(self.seed)
    }

    fn trained_table(&self, lookahead: bool, qtable: Option<&Path>) -> Result<QTable> {
        if let Some(path) = qtable {
            return QTable::load(path);
        }
        let seeds = self.seeds();
        let table = fresh_q_table(&self.trajectory, &self.cfg, seeds.calibration)?;
        train_qlearning(
            &self.trajectory,
            table,
            lookahead,
            self.cfg.training_runs,
            &self.cfg,
            seeds.training,
        )
    }

    fn policy(&self, spec: PolicySpec, qtable: Option<&Path>) -> Result<Policy> {
        match spec {
            PolicySpec::Fixed(b) => Policy::fixed(b, &self.cfg.radar),
            PolicySpec::Scaling => Ok(Policy::scaling(&self.cfg.radar)),
            PolicySpec::QLearn => Ok(Policy::qlearning(self.trained_table(false, qtable)?, false)),
            PolicySpec::QLearnLookahead => Ok(Policy::qlearning(self.trained_table(true, qtable)?, true)),
        }
    }
}

fn single_policy(cli: &Cli, default: Option<PolicySpec>) -> std::result::Result<PolicySpec, CliError> {
    match (cli.policy.as_slice(), default) {
        ([one], _) => Ok(*one),
        ([], Some(d)) => Ok(d),
        ([], None) => Err(CliError::Usage("--policy is required".into())),
        _ => Err(CliError::Usage("this subcommand takes exactly one --policy".into())),
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), CliError> {
    let mut session = Session::open(cli)?;
    let out = &cli.out;
    match cli.command {
        Command::GenerateTrajectory => {
            let seed = cli.seed.unwrap_or(session.cfg.trajectory_seed);
            let traj = generate_trajectory(&session.cfg.trajectory, seed)?;
            write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
        }
        Command::Calibrate => {
            let runs = cli.runs.unwrap_or(session.cfg.calibration_runs);
            let d = calibrate_discretizer(&session.trajectory, &session.cfg, runs, session.seeds().calibration)?;
            let json = serde_json::to_string_pretty(&EdgesDoc::from(&d)).map_err(Error::from)?;
            write_atomic(&out.join("edges.json"), json.as_bytes())?;
        }
        Command::Train => {
            let spec = single_policy(cli, Some(PolicySpec::QLearnLookahead))?;
            if !spec.is_learned() {
                return Err(CliError::Usage(format!("cannot train policy {spec}")));
            }
            if let Some(n) = cli.runs {
                session.cfg.training_runs = n;
            }
            let lookahead = spec == PolicySpec::QLearnLookahead;
            let seeds = session.seeds();
            let table = match &cli.qtable {
                Some(path) => QTable::load(path)?,
                None => fresh_q_table(&session.trajectory, &session.cfg, seeds.calibration)?,
            };
            let table = train_qlearning(
                &session.trajectory,
                table,
                lookahead,
                session.cfg.training_runs,
                &session.cfg,
                seeds.training,
            )?;
            table.save(&out.join("qtable.json"))?;
        }
        Command::Evaluate => {
            let spec = single_policy(cli, None)?;
            let runs = cli.runs.unwrap_or(session.cfg.evaluation_runs);
            let policy = session.policy(spec, cli.qtable.as_deref())?;
            let (_, report) = evaluate(&session.trajectory, &policy, runs, &session.cfg, session.seeds().evaluation)?;
            let label = spec.label();
            write_atomic(&out.join(format!("metrics_{label}.csv")), &metrics_to_csv(&report)?)?;
            write_atomic(&out.join(format!("histogram_{label}.csv")), &histogram_to_csv(&report.histogram)?)?;
        }
        Command::Compare => {
            let specs: Vec<PolicySpec> = if cli.policy.is_empty() {
                DEFAULT_ROSTER.split(',').map(|s| s.parse()).collect::<Result<_>>()?
            } else {
                cli.policy.clone()
            };
            let runs = cli.runs.unwrap_or(session.cfg.evaluation_runs);
            let mut summary = Vec::with_capacity(specs.len());
            for spec in specs {
                let policy = session.policy(spec, cli.qtable.as_deref())?;
                let (_, report) =
                    evaluate(&session.trajectory, &policy, runs, &session.cfg, session.seeds().evaluation)?;
                let label = spec.label();
                write_atomic(&out.join(format!("metrics_{label}.csv")), &metrics_to_csv(&report)?)?;
                write_atomic(&out.join(format!("histogram_{label}.csv")), &histogram_to_csv(&report.histogram)?)?;
                summary.push(SummaryRow {
                    policy: spec.to_string(),
                    runs: report.runs,
                    full_track_successes: report.full_track_successes,
                    pooled_mse: report.pooled_mse,
                });
            }
            write_atomic(&out.join("summary.csv"), &summary_to_csv(&summary)?)?;
        }
        Command::Trace => {
            let spec = single_policy(cli, None)?;
            let mut policy = session.policy(spec, cli.qtable.as_deref())?;
            let result = run_episode(&session.trajectory, &mut policy, &session.cfg, session.seeds().evaluation, false)?;
            write_atomic(&out.join(format!("trace_{}.csv", spec.label())), &run_to_csv(&result)?)?;
        }
    }
    Ok(())
}
