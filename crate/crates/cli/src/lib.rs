//! Experiment orchestration for `qjump`: configuration, subcommand dispatch
//! and artifact output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, ExperimentKind, InitialState, ModelSource, RunParams};
pub use error::{CliError, CliResult};
pub use output::{emit_plot_data, RunMetadata};

pub const DEFAULT_OUT: &str = "qjump-out";
pub const OUT_ENV: &str = "QJUMP_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "qjump",
    version,
    about = "Three-scale quantum trajectories and their jump-process limit"
)]
pub struct Cli {
    /// Experiment config JSON; command-line flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $QJUMP_OUT, then ./qjump-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for ensembles [default: all cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the QND, identifiability and decoherence assumptions.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Exit with status 2 when an assumption fails.
        #[arg(long)]
        strict: bool,
    },
    /// Jump-rate matrix of the limiting Markov chain.
    Rates {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Projector, pseudo-inverse and homogenized generator.
    Homog {
        #[command(flatten)]
        model: ModelArgs,
        /// Also write the full superoperator matrices.
        #[arg(long)]
        full: bool,
    },
    /// Distance between the exact and limiting semigroups over a γ grid.
    Compare {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        /// Evaluation time.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Ensemble of quantum trajectories.
    Sim(SimArgs),
    /// Sample paths and marginals of the limiting jump process.
    Jump(JumpArgs),
    /// Path diagnostics from trajectory CSVs written by `sim`.
    Metrics(MetricsArgs),
    /// Single long run of the three-level weak-coupling model.
    Fig1(Fig1Args),
    /// Run the experiment described by --config as is.
    Run,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// `fig1`, `rabi`, or a model JSON file.
    #[arg(long)]
    pub model: Option<String>,
    /// Overrides the model's γ.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// Requested step; capped at 1e-2/γ².
    #[arg(long)]
    pub h: Option<f64>,
    /// Number of trajectories.
    #[arg(long)]
    pub n: Option<usize>,
    /// Save every stride-th step (the final step is always saved).
    #[arg(long)]
    pub stride: Option<usize>,
    /// coherent, mixed or pointer:<i>.
    #[arg(long)]
    pub rho0: Option<InitialState>,
    /// Append full density matrices to the trajectory CSVs.
    #[arg(long)]
    pub save_states: bool,
}

#[derive(Debug, Args)]
pub struct JumpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `from-model` or a rate-matrix JSON file written by `rates`.
    #[arg(long)]
    pub rates: Option<String>,
    /// Initial distribution; defaults to the diagonal of --rho0.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long)]
    pub rho0: Option<InitialState>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Trajectory CSV files.
    pub trajectories: Vec<String>,
    /// Model used for the conditional-variation and law diagnostics.
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub mz_horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Moving-average window in steps.
    #[arg(long)]
    pub smooth: Option<usize>,
    /// Requested step; capped at 1e-2/γ².
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rho0: Option<InitialState>,
    /// Also render SVG line plots.
    #[arg(long)]
    pub svg: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ModelArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.model {
            cfg.model = Some(ModelSource::Reference(m));
        }
        if self.gamma.is_some() {
            cfg.params.gamma = self.gamma;
        }
    }
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Validate { .. } => ExperimentKind::Validate,
            Command::Rates { .. } => ExperimentKind::Rates,
            Command::Homog { .. } => ExperimentKind::Homog,
            Command::Compare { .. } => ExperimentKind::Compare,
            Command::Sim(_) => ExperimentKind::Sim,
            Command::Jump(_) => ExperimentKind::Jump,
            Command::Metrics(_) => ExperimentKind::Metrics,
            Command::Fig1(_) => ExperimentKind::Fig1,
            Command::Run => return None,
        })
    }

    fn apply(self, cfg: &mut ExperimentConfig) {
        let p = &mut cfg.params;
        match self {
            Command::Validate { model, tol, strict } => {
                set(&mut p.tol, tol);
                p.strict |= strict;
                model.apply(cfg);
            }
            Command::Rates { model } => model.apply(cfg),
            Command::Homog { model, full } => {
                p.full |= full;
                model.apply(cfg);
            }
            Command::Compare {
                model,
                gammas,
                t_end,
            } => {
                set(&mut p.gammas, gammas);
                set(&mut p.t_end, t_end);
                model.apply(cfg);
            }
            Command::Sim(a) => {
                set(&mut p.t_end, a.t_end);
                set(&mut p.h, a.h);
                set(&mut p.n, a.n);
                set(&mut p.stride, a.stride);
                set(&mut p.rho0, a.rho0);
                p.save_states |= a.save_states;
                a.model.apply(cfg);
            }
            Command::Jump(a) => {
                if a.rates.is_some() {
                    p.rates = a.rates;
                }
                if a.mu.is_some() {
                    p.mu = a.mu;
                }
                set(&mut p.rho0, a.rho0);
                set(&mut p.t_end, a.t_end);
                set(&mut p.n, a.n);
                a.model.apply(cfg);
            }
            Command::Metrics(a) => {
                if !a.trajectories.is_empty() {
                    p.trajectories = a.trajectories;
                }
                set(&mut p.epsilon, a.epsilon);
                set(&mut p.radius, a.radius);
                set(&mut p.mz_horizon, a.mz_horizon);
                if a.tau.is_some() {
                    p.tau = a.tau;
                }
                a.model.apply(cfg);
            }
            Command::Fig1(a) => {
                if a.gamma.is_some() {
                    p.gamma = a.gamma;
                }
                set(&mut p.steps, a.steps);
                set(&mut p.smooth, a.smooth);
                set(&mut p.h, a.h);
                set(&mut p.rho0, a.rho0);
                p.svg |= a.svg;
            }
            Command::Run => {}
        }
    }
}

impl Cli {
    /// Merges the config file (if any) with the command-line flags.
    pub fn experiment(self) -> CliResult<(ExperimentConfig, PathBuf)> {
        let base = self
            .config
            .as_deref()
            .map(ExperimentConfig::load)
            .transpose()?;
        let kind = self.command.kind();
        let mut cfg = match (base, kind) {
            (Some(c), Some(k)) if c.kind != k => {
                return Err(CliError::validation(format!(
                    "config describes a `{}` experiment but `{k}` was requested",
                    c.kind
                )))
            }
            (Some(c), _) => c,
            (None, Some(k)) => ExperimentConfig::new(k),
            (None, None) => return Err(CliError::validation("`run` needs --config")),
        };
        self.command.apply(&mut cfg);
        set(&mut cfg.params.seed, self.seed);
        let out = self
            .out
            .or_else(|| cfg.out.as_ref().map(PathBuf::from))
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        cfg.out = Some(out.to_string_lossy().into_owned());
        Ok((cfg, out))
    }
}
