//! Experiment configuration: a versioned JSON document that fully determines
//! the numerical output of a run.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qjump_core::{models, DensityMatrix, ThreeScaleModel};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Validate,
    Rates,
    Homog,
    Compare,
    Sim,
    Jump,
    Metrics,
    Fig1,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant serializes");
        write!(f, "{}", s.as_str().expect("string tag"))
    }
}

/// A built-in model name, a path to a model JSON file, or the model itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Reference(String),
    Inline(Box<ThreeScaleModel>),
}

impl ModelSource {
    pub fn load(&self) -> CliResult<ThreeScaleModel> {
        match self {
            ModelSource::Inline(m) => Ok((**m).clone()),
            ModelSource::Reference(name) => match name.as_str() {
                "fig1" => Ok(models::fig1(1.0)),
                "rabi" => Ok(models::rabi(1.0)),
                path => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::Io(format!("reading model {path}: {e}")))?;
                    serde_json::from_str(&text)
                        .map_err(|e| CliError::validation(format!("model file {path}: {e}")))
                }
            },
        }
    }

    fn missing_file(&self) -> Option<&str> {
        match self {
            ModelSource::Reference(name) if !matches!(name.as_str(), "fig1" | "rabi") => {
                (!Path::new(name).exists()).then_some(name.as_str())
            }
            _ => None,
        }
    }
}

/// Initial state: `coherent` (uniform superposition), `mixed`, or
/// `pointer:i` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialState {
    Coherent,
    Mixed,
    Pointer(usize),
}

impl InitialState {
    pub fn build(self, d: usize) -> CliResult<DensityMatrix> {
        match self {
            InitialState::Coherent => Ok(DensityMatrix::maximally_coherent(d)),
            InitialState::Mixed => Ok(DensityMatrix::maximally_mixed(d)),
            InitialState::Pointer(i) if i < d => Ok(DensityMatrix::pointer(d, i)),
            InitialState::Pointer(i) => Err(CliError::validation(format!(
                "pointer index {i} out of range for dimension {d}"
            ))),
        }
    }
}

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coherent" => Ok(InitialState::Coherent),
            "mixed" => Ok(InitialState::Mixed),
            _ => s
                .strip_prefix("pointer:")
                .and_then(|i| i.parse().ok())
                .map(InitialState::Pointer)
                .ok_or_else(|| {
                    format!("unknown initial state {s:?}; use coherent, mixed or pointer:<i>")
                }),
        }
    }
}

impl TryFrom<String> for InitialState {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<InitialState> for String {
    fn from(s: InitialState) -> String {
        match s {
            InitialState::Coherent => "coherent".into(),
            InitialState::Mixed => "mixed".into(),
            InitialState::Pointer(i) => format!("pointer:{i}"),
        }
    }
}

/// Run parameters. Each subcommand reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    /// Overrides the model's `γ`.
    pub gamma: Option<f64>,
    pub t_end: f64,
    /// Requested step; the effective step is `min(h, 10⁻²/γ²)`.
    pub h: f64,
    pub n: usize,
    pub seed: u64,
    pub stride: usize,
    pub gammas: Vec<f64>,
    pub rho0: InitialState,
    pub mu: Option<Vec<f64>>,
    /// `from-model` or a path to a rate-matrix JSON file.
    pub rates: Option<String>,
    pub tol: f64,
    pub strict: bool,
    pub full: bool,
    pub epsilon: f64,
    pub radius: f64,
    pub tau: Option<f64>,
    pub mz_horizon: f64,
    pub trajectories: Vec<String>,
    pub save_states: bool,
    pub steps: usize,
    pub smooth: usize,
    pub svg: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            gamma: None,
            t_end: 1.0,
            h: 1e-3,
            n: 100,
            seed: 0,
            stride: 100,
            gammas: vec![3.0, 10.0, 30.0, 100.0],
            rho0: InitialState::Coherent,
            mu: None,
            rates: None,
            tol: 1e-10,
            strict: false,
            full: false,
            epsilon: 0.2,
            radius: 0.2,
            tau: None,
            mz_horizon: qjump_core::metrics::DEFAULT_MZ_HORIZON,
            trajectories: Vec::new(),
            save_states: false,
            steps: 1_000_000,
            smooth: 1000,
            svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSource>,
    #[serde(default)]
    pub params: RunParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind,
            model: None,
            params: RunParams::default(),
            out: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(format!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; hashing and persistence both use it.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of [`Self::to_json`], lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        let p = &self.params;
        let positive = [
            ("t_end", p.t_end),
            ("h", p.h),
            ("tol", p.tol),
            ("epsilon", p.epsilon),
            ("radius", p.radius),
            ("mz_horizon", p.mz_horizon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("n", p.n),
            ("stride", p.stride),
            ("steps", p.steps),
            ("smooth", p.smooth),
        ] {
            if v == 0 {
                return Err(CliError::validation(format!("{name} must be positive")));
            }
        }
        if let Some(g) = p.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(CliError::validation(format!(
                    "gamma must be positive, got {g}"
                )));
            }
        }
        if let Some(tau) = p.tau {
            if !(tau > 0.0) {
                return Err(CliError::validation(format!(
                    "tau must be positive, got {tau}"
                )));
            }
        }
        if p.gammas.is_empty() {
            return Err(CliError::validation("gamma grid is empty"));
        }
        if let Some(g) = p.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(CliError::validation(format!(
                "gamma grid entries must be positive, got {g}"
            )));
        }
        if let Some(path) = self.model.as_ref().and_then(ModelSource::missing_file) {
            return Err(CliError::validation(format!(
                "model file {path} does not exist"
            )));
        }
        if let Some(r) = p.rates.as_deref().filter(|r| *r != "from-model") {
            if !Path::new(r).exists() {
                return Err(CliError::validation(format!(
                    "rates file {r} does not exist"
                )));
            }
        }
        if let Some(t) = p
            .trajectories
            .iter()
            .find(|t| !Path::new(t.as_str()).exists())
        {
            return Err(CliError::validation(format!(
                "trajectory file {t} does not exist"
            )));
        }
        let needs_model = !matches!(self.kind, ExperimentKind::Fig1 | ExperimentKind::Metrics)
            && !(self.kind == ExperimentKind::Jump
                && p.rates.as_deref().is_some_and(|r| r != "from-model"));
        if needs_model && self.model.is_none() {
            return Err(CliError::validation(format!(
                "`{}` needs a model",
                self.kind
            )));
        }
        Ok(())
    }

    /// The configured model with the `γ` override applied.
    pub fn model(&self) -> CliResult<ThreeScaleModel> {
        let source = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::validation(format!("`{}` needs a model", self.kind)))?;
        let m = source.load()?;
        Ok(match self.params.gamma {
            Some(g) => m.with_gamma(g)?,
            None => m,
        })
    }
}
