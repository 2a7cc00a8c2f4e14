//! Run configuration: one JSON document with sections `nfunction`, `bumps`, `domain`,
//! `solver` and `sweep`.

use std::path::Path;

use philap_core::{
    default_bump_builder, validate, BumpNonlinearity, MinimizeOptions, NFunctionError,
    NFunctionSpec, NonlinearityError, PiecewisePolynomial, ShootOptions,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Schema(String),
    #[error(transparent)]
    NFunction(#[from] NFunctionError),
    #[error("phi fails its structural hypotheses: {0}")]
    PhiHypotheses(String),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

impl ConfigError {
    /// Whether the failure is a violated hypothesis on `φ` or `f` (as opposed to a
    /// malformed or unreadable file).
    pub fn is_hypothesis_failure(&self) -> bool {
        match self {
            ConfigError::NFunction(NFunctionError::InvalidParameter(_))
            | ConfigError::PhiHypotheses(_) => true,
            ConfigError::Nonlinearity(e) => !e.violations().is_empty(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub nfunction: NFunctionSpec,
    pub bumps: BumpConfig,
    pub domain: DomainConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// Either the canonical tent family (`amplitudes`) or an explicit piecewise-linear
/// `f` through `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    pub radius: f64,
    /// Grid nodes, shared by the energy and the shooting paths.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub scan_points: usize,
    pub boundary_tol: f64,
    pub delta2_t_min: f64,
    pub delta2_t_max: f64,
    pub delta2_samples: usize,
    pub norm_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let m = MinimizeOptions::default();
        let s = ShootOptions::default();
        Self {
            tol: m.tol,
            max_iter: m.max_iter,
            scan_points: s.scan_points,
            boundary_tol: s.boundary_tol,
            delta2_t_min: 1e-3,
            delta2_t_max: 50.0,
            delta2_samples: 400,
            norm_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Double `λ` from `start` until the ordered chain appears (giving up past
    /// `max`), then bisect until the bracket width is at most `rel_width·λ_hi`.
    Auto {
        #[serde(default = "default_start")]
        start: f64,
        #[serde(default = "default_max")]
        max: f64,
        #[serde(default = "default_rel_width")]
        rel_width: f64,
    },
    /// Evaluate exactly these values.
    Grid { lambdas: Vec<f64> },
}

fn default_start() -> f64 {
    1.0
}

fn default_max() -> f64 {
    1e6
}

fn default_rel_width() -> f64 {
    0.01
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig::Auto {
            start: default_start(),
            max: default_max(),
            rel_width: default_rel_width(),
        }
    }
}

impl Config {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_str(text)?;
        config.check_schema()?;
        Ok(config)
    }

    /// Range checks that serde cannot express.
    pub fn check_schema(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Schema(m));
        let d = &self.domain;
        if d.dimension == 0 {
            return bad("domain.dimension must be at least 1".into());
        }
        if !(d.radius.is_finite() && d.radius > 0.0) {
            return bad(format!("domain.radius must be positive, got {}", d.radius));
        }
        if d.nodes < 17 {
            return bad(format!("domain.nodes must be at least 17, got {}", d.nodes));
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.boundary_tol > 0.0 && s.norm_tol > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        if s.max_iter == 0 || s.scan_points < 2 || s.delta2_samples < 3 {
            return bad("solver.max_iter, scan_points and delta2_samples are too small".into());
        }
        if !(s.delta2_t_min > 0.0 && s.delta2_t_max > s.delta2_t_min) {
            return bad("solver.delta2_t_min/t_max must satisfy 0 < t_min < t_max".into());
        }
        match (&self.bumps.amplitudes, &self.bumps.nodes) {
            (Some(_), Some(_)) => return bad("bumps: give amplitudes or nodes, not both".into()),
            (None, None) => return bad("bumps: one of amplitudes or nodes is required".into()),
            _ => {}
        }
        match &self.sweep {
            SweepConfig::Grid { lambdas } => {
                if lambdas.is_empty() {
                    return bad("sweep.lambdas must not be empty".into());
                }
                if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return bad("sweep.lambdas must be finite and non-negative".into());
                }
            }
            SweepConfig::Auto {
                start,
                max,
                rel_width,
            } => {
                if !(*start > 0.0 && max > start && *rel_width > 0.0 && *rel_width < 1.0) {
                    return bad("sweep auto needs 0 < start < max and 0 < rel_width < 1".into());
                }
            }
        }
        Ok(())
    }

    /// Validated `φ`, including the sampled structural hypotheses.
    pub fn nfunction(&self) -> Result<NFunctionSpec, ConfigError> {
        self.nfunction.validate()?;
        let h = self.nfunction.check_hypotheses();
        if !h.all() {
            return Err(ConfigError::PhiHypotheses(format!("{h:?}")));
        }
        Ok(self.nfunction.clone())
    }

    /// Validated bump nonlinearity.
    pub fn bumps(&self) -> Result<BumpNonlinearity, ConfigError> {
        let b = &self.bumps;
        let bn = match (&b.amplitudes, &b.nodes) {
            (Some(amp), _) => default_bump_builder(&b.a, &b.b, amp)?,
            (None, Some(nodes)) => validate(
                b.a.clone(),
                b.b.clone(),
                PiecewisePolynomial::linear(nodes)?,
            )?,
            (None, None) => return Err(ConfigError::Schema("bumps: missing f".into())),
        };
        Ok(bn)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            ..MinimizeOptions::default()
        }
    }

    pub fn shoot_options(&self) -> ShootOptions {
        ShootOptions {
            n_steps: self.domain.nodes - 1,
            scan_points: self.solver.scan_points,
            boundary_tol: self.solver.boundary_tol,
            ..ShootOptions::default()
        }
    }

    /// The reference setup: `φ ≡ 1`, `N = 1`, `R = 1`, tent family `a = (1, 3, 5)`,
    /// `b = (2, 4)`, automatic sweep.
    pub fn reference() -> Self {
        Config {
            nfunction: NFunctionSpec::power(2.0).expect("p = 2 is valid"),
            bumps: BumpConfig {
                a: vec![1.0, 3.0, 5.0],
                b: vec![2.0, 4.0],
                amplitudes: Some(vec![2.0, 1.0]),
                nodes: None,
            },
            domain: DomainConfig {
                dimension: 1,
                radius: 1.0,
                nodes: default_nodes(),
            },
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}
