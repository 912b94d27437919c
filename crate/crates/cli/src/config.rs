//! Experiment parameters from command-line flags and an optional flat JSON
//! config file. Keys in the file are the long flag names; flags override
//! file values.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use saddlelab_core::flow::IntegratorConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    EscapeSweep,
    GdStall,
    CompareOrbits,
    StableManifold,
    TaylorCheck,
    GlobalBound,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::EscapeSweep => "escape-sweep",
            Experiment::GdStall => "gd-stall",
            Experiment::CompareOrbits => "compare-orbits",
            Experiment::StableManifold => "stable-manifold",
            Experiment::TaylorCheck => "taylor-check",
            Experiment::GlobalBound => "global-bound",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Experiment::EscapeSweep | Experiment::StableManifold | Experiment::TaylorCheck | Experiment::GlobalBound
        )
    }

    /// Parameter keys the experiment reads, beyond the integrator tolerances
    /// and `function`, `seed`, `out`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Simulate => &["x0", "flow", "alpha", "n-steps", "t-max"],
            Experiment::EscapeSweep => &["saddle", "r", "C", "n-ic", "t-max"],
            Experiment::GdStall => &["saddle", "r", "eps", "theta", "x0", "t-max"],
            Experiment::CompareOrbits => &["x0", "n-grid", "t-max"],
            Experiment::StableManifold => &["saddle", "r", "n-ic", "x0", "t-max"],
            Experiment::TaylorCheck => &["saddle", "C1", "C2", "r-hat", "n-samples"],
            Experiment::GlobalBound => &["R", "r", "nu", "C", "n-ic"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowChoice {
    Gd,
    Ngd,
    DiscreteGd,
    DiscreteNgd,
}

const COMMON_KEYS: &[&str] = &[
    "function",
    "seed",
    "out",
    "grad-stop",
    "abs-tol",
    "rel-tol",
    "max-step",
    "event-time-tol",
    "divergence-radius",
];

/// Every tunable of an experiment run. Each field is both a long flag and a
/// key of the JSON config file.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Catalog function, e.g. quadratic:diag:1,-1 or trig-multiwell:2.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// Seed for every randomized draw; mandatory for randomized experiments.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Base directory for run output directories.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Ball radius.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Escape-time constant (must exceed 4).
    #[arg(long = "C", allow_negative_numbers = true)]
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Number of initial conditions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ic: Option<usize>,
    /// Integration horizon.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Gradient norm at which a critical point counts as reached.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_stop: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_time_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_radius: Option<f64>,
    /// Initial point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Critical point location, comma separated (default: the origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saddle: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowChoice>,
    /// Step size of the discrete iterations.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Inner ball radii, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Angle of the initial point on the sphere, measured from the first axis.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Radius of the ball B_R(0) holding the initial conditions.
    #[arg(long = "R", allow_negative_numbers = true)]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<f64>,
    /// Gradient lower bound away from critical points (estimated if absent).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[arg(long = "C1", allow_negative_numbers = true)]
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[arg(long = "C2", allow_negative_numbers = true)]
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_hat: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Arc-length grid size for orbit comparison.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<usize>,
}

impl Params {
    /// Reads a config file. The optional `experiment` key must name `expected`.
    pub fn from_file(path: &Path, expected: Experiment) -> Result<Params, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{}: config must be a JSON object", path.display())))?;
        if let Some(exp) = obj.remove("experiment") {
            let named: Experiment = serde_json::from_value(exp.clone())
                .map_err(|_| CliError::Config(format!("{}: unknown experiment {exp}", path.display())))?;
            if named != expected {
                return Err(CliError::Config(format!(
                    "{}: config is for experiment {}, not {}",
                    path.display(),
                    named.name(),
                    expected.name()
                )));
            }
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `overrides` replaced.
    pub fn overridden_by(&self, overrides: &Params) -> Params {
        let mut base = self.to_map();
        base.extend(overrides.to_map());
        serde_json::from_value(Value::Object(base)).expect("merged params deserialize")
    }

    pub fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self).expect("params serialize") {
            Value::Object(m) => m,
            _ => unreachable!("params serialize to an object"),
        }
    }

    /// Rejects keys the experiment does not use and a missing seed for
    /// randomized experiments.
    pub fn validate_for(&self, experiment: Experiment) -> Result<(), CliError> {
        for key in self.to_map().keys() {
            if !COMMON_KEYS.contains(&key.as_str()) && !experiment.keys().contains(&key.as_str()) {
                return Err(CliError::Config(format!("parameter {key} is not used by {}", experiment.name())));
            }
        }
        if experiment.is_randomized() && self.seed.is_none() {
            return Err(CliError::Config(format!("{} requires --seed", experiment.name())));
        }
        if self.function.is_none() {
            return Err(CliError::Config(format!("{} requires --function", experiment.name())));
        }
        Ok(())
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let mut cfg = IntegratorConfig::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.t_max, self.t_max);
        set(&mut cfg.grad_stop, self.grad_stop);
        set(&mut cfg.abs_tol, self.abs_tol);
        set(&mut cfg.rel_tol, self.rel_tol);
        set(&mut cfg.max_step, self.max_step);
        set(&mut cfg.event_time_tol, self.event_time_tol);
        set(&mut cfg.divergence_radius, self.divergence_radius);
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Positive finite parameter check.
pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn required<T: Clone>(name: &str, v: &Option<T>) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Config(format!("missing required parameter {name}")))
}
