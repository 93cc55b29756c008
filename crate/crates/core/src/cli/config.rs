//! Strict JSON run configuration.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Issue, Result};
use crate::sim::NoiseModel;
use crate::system::{self, DesignWeights, LinearSystem, ValidatedConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub weights: WeightsBlock,
    #[serde(default)]
    pub design: DesignBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub sim: Option<SimBlock>,
}

/// Matrices as arrays of rows.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `tr(W V)`, one SDP.
    Trace,
    /// `-tr(W_eps^{-1} V^{-1})`, sequential SDPs.
    TraceInv,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Trace => "trace",
            Metric::TraceInv => "trace_inv",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_metric() -> Metric {
    Metric::Trace
}

fn default_max_iters() -> usize {
    crate::traceinv::DEFAULT_MAX_ITERS
}

impl Default for DesignBlock {
    fn default() -> Self {
        Self {
            metric: default_metric(),
            max_iters: default_max_iters(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub lambdas: Vec<f64>,
}

/// A real pole or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum PoleSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl PoleSpec {
    pub fn value(self) -> Complex64 {
        match self {
            PoleSpec::Real(re) => Complex64::new(re, 0.0),
            PoleSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    #[serde(default = "default_magnitude")]
    pub magnitude: f64,
    /// Angular frequencies; `k / 5` for `k = 1..5` when absent.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
}

fn default_magnitude() -> f64 {
    0.01
}

impl Default for NoiseBlock {
    fn default() -> Self {
        Self {
            magnitude: default_magnitude(),
            frequencies: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub poles: Vec<PoleSpec>,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub xhat0: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Noise phases and placement; phases are zero when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SimBlock {
    pub fn noise_model(&self, outputs: usize, seed: Option<u64>) -> NoiseModel {
        let frequencies = match &self.noise.frequencies {
            Some(f) => f.clone(),
            None => NoiseModel::band_limited(outputs, None).frequencies,
        };
        NoiseModel::new(outputs, self.noise.magnitude, frequencies, seed)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.poles.iter().map(|p| p.value()).collect()
    }

    pub fn vector(v: &Option<Vec<f64>>) -> Option<DVector<f64>> {
        v.as_ref().map(|v| DVector::from_column_slice(v))
    }
}

fn issue(field: &str, message: impl Into<String>) -> Issue {
    Issue {
        field: field.into(),
        message: message.into(),
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], issues: &mut Vec<Issue>) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            issues.push(issue(
                field,
                format!("row {} has {} entries, expected {cols}", i + 1, row.len()),
            ));
            return DMatrix::zeros(0, 0);
        }
    }
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

fn qualify(field: &str) -> String {
    match field {
        "A" | "B" | "C" => format!("system.{field}"),
        "Q" | "R" | "V" | "lambda" | "epsilon" | "delta" => format!("weights.{field}"),
        other => other.to_string(),
    }
}

impl RunConfig {
    /// Reads and parses; unreadable or malformed files become
    /// [`Error::Config`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![issue("config", format!("{}: {e}", path.display()))]))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(vec![issue("config", e.to_string())]))?;
        Ok(cfg)
    }

    /// Shape, symmetry, definiteness and controllability checks, with every
    /// violation reported against its JSON field.
    pub fn validate(&self) -> Result<ValidatedConfig> {
        let mut issues = Vec::new();
        let a = matrix("system.A", &self.system.a, &mut issues);
        let b = matrix("system.B", &self.system.b, &mut issues);
        let c = matrix("system.C", &self.system.c, &mut issues);
        let q = matrix("weights.Q", &self.weights.q, &mut issues);
        let r = matrix("weights.R", &self.weights.r, &mut issues);
        let v = matrix("weights.V", &self.weights.v, &mut issues);
        if self.design.max_iters == 0 {
            issues.push(issue("design.max_iters", "must be positive"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.lambdas.is_empty() {
                issues.push(issue("sweep.lambdas", "must not be empty"));
            }
            if sweep.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
                issues.push(issue("sweep.lambdas", "entries must be finite and nonnegative"));
            }
        }
        if !issues.is_empty() {
            return Err(Error::Config(issues));
        }
        let sys = LinearSystem { a, b, c };
        let weights = DesignWeights {
            q,
            r,
            v,
            lambda: self.weights.lambda,
            epsilon: self.weights.epsilon,
            delta: self.weights.delta,
        };
        let validated = system::validate(&sys, &weights).map_err(|e| match e {
            Error::Config(issues) => Error::Config(
                issues
                    .into_iter()
                    .map(|i| Issue {
                        field: qualify(&i.field),
                        message: i.message,
                    })
                    .collect(),
            ),
            other => other,
        })?;
        if let Some(sim) = &self.sim {
            let mut issues = Vec::new();
            let n = validated.system.states();
            if sim.poles.len() != n {
                issues.push(issue(
                    "sim.poles",
                    format!("expected {n} poles, got {}", sim.poles.len()),
                ));
            }
            for (name, v) in [("sim.x0", &sim.x0), ("sim.xhat0", &sim.xhat0)] {
                if let Some(v) = v {
                    if v.len() != n {
                        issues.push(issue(name, format!("expected {n} entries, got {}", v.len())));
                    }
                }
            }
            for (name, v) in [("sim.horizon", sim.horizon), ("sim.dt", sim.dt)] {
                if let Some(v) = v {
                    if !(v.is_finite() && v > 0.0) {
                        issues.push(issue(name, "must be positive"));
                    }
                }
            }
            if !issues.is_empty() {
                return Err(Error::Config(issues));
            }
        }
        Ok(validated)
    }

    /// Sweep grid, falling back to the single configured budget.
    pub fn lambdas(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) => s.lambdas.clone(),
            None => vec![self.weights.lambda],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOUBLE_INTEGRATOR: &str = r#"{
        "system": {"A": [[0, 1], [0, 0]], "B": [[1], [1]], "C": [[1, 0]]},
        "weights": {"Q": [[0.2, 0], [0, 0.2]], "R": [[1]], "V": [[1, 0], [0, 1]],
                    "lambda": 0.01, "epsilon": 1e-4, "delta": 1e-3},
        "design": {"metric": "trace_inv"},
        "sim": {"poles": [-2, [-1, 0]]}
    }"#;

    #[test]
    fn parses_and_matches_preset() {
        let cfg = RunConfig::parse(DOUBLE_INTEGRATOR).unwrap();
        let v = cfg.validate().unwrap();
        let (sys, w) = crate::presets::double_integrator();
        assert_eq!(v.system, sys);
        assert_eq!(v.weights, w);
        assert_eq!(cfg.design.metric, Metric::TraceInv);
        assert_eq!(cfg.lambdas(), vec![0.01]);
        assert_eq!(cfg.sim.unwrap().poles()[1], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = DOUBLE_INTEGRATOR.replace("\"delta\"", "\"detla\"");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("detla"), "{err}");
    }

    #[test]
    fn ragged_rows_name_the_field() {
        let text = DOUBLE_INTEGRATOR.replace("[[0, 1], [0, 0]]", "[[0, 1], [0]]");
        let err = RunConfig::parse(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("system.A: row 2"), "{err}");
    }

    #[test]
    fn weight_issues_are_qualified() {
        let text = DOUBLE_INTEGRATOR.replace("\"R\": [[1]]", "\"R\": [[-1]]");
        let err = RunConfig::parse(&text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("weights.R"), "{err}");
    }
}
