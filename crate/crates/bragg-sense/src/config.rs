//! Run configuration: a TOML file with `[physics]`, `[numerics]` and
//! `[output]` sections. Every key is optional; unknown keys are rejected.
//!
//! Keys left unset take a per-experiment default, and the resolved
//! configuration is echoed next to the results so a run can be replayed.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RabiMap,
    Fringe,
    SensitivitySweep,
    ValidatePert,
    PulseShape,
    Optimize,
}

impl Experiment {
    pub fn tag(self) -> &'static str {
        match self {
            Experiment::RabiMap => "rabi-map",
            Experiment::Fringe => "fringe",
            Experiment::SensitivitySweep => "sensitivity-sweep",
            Experiment::ValidatePert => "validate-pert",
            Experiment::PulseShape => "pulse-shape",
            Experiment::Optimize => "optimize",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    AnalyticVsOnly,
    Perturbative,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    #[default]
    Box,
    Blackman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquatorKeyword {
    Equator,
}

/// A number or the keyword `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Keyword(AutoKeyword),
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Keyword(AutoKeyword::Auto)
    }
}

/// Rotation α in rad, or `"equator"` for α = -α₀(χ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Value(f64),
    Keyword(EquatorKeyword),
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Keyword(EquatorKeyword::Equator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// Either an explicit list or `{ start, stop, count }` with both ends included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(Linspace),
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, count: usize) -> Self {
        Grid::Range(Linspace { start, stop, count })
    }

    pub fn points(&self, key: &str) -> Result<Vec<f64>, AppError> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => match r.count {
                0 => Vec::new(),
                1 => vec![r.start],
                n => (0..n).map(|k| r.start + (r.stop - r.start) * k as f64 / (n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(AppError::Config(format!("{key}: grid is empty")));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(AppError::Config(format!("{key}: grid contains a non-finite value")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    /// Peak coupling ε for single-point experiments.
    pub eps: Option<f64>,
    /// Coupling grid for sweeps.
    pub eps_grid: Option<Grid>,
    pub sigma_q: Option<f64>,
    pub n_atoms: Option<u64>,
    /// Twisting strength χ; `"auto"` is the squeezing optimum χ₀(N).
    pub chi: Option<AutoOr>,
    pub alpha: Option<AlphaSpec>,
    /// Interrogation time ω_k T; `"auto"` is 10³/ε.
    pub lambda_t: Option<AutoOr>,
    pub shape: Option<ShapeKind>,
    /// Inclusive class range of the numeric backend.
    pub classes: Option<[i32; 2]>,
    pub backend: Option<BackendKind>,
    /// Momentum of the single-momentum experiments.
    pub q: Option<f64>,
    pub q_grid: Option<Grid>,
    /// Pulse area of the single-pulse experiments.
    pub tau: Option<f64>,
    pub tau_grid: Option<Grid>,
    pub phi_grid: Option<Grid>,
    /// Position grid in units of the displacement ħkT/m.
    pub z_grid: Option<Grid>,
    /// Interferometer phase of the position densities.
    pub position_phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub nodes: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Significant digits of CSV values.
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub physics: Physics,
    pub numerics: Numerics,
    pub output: Output,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(format!("invalid configuration: {}", e.message().trim())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Fills every unset key with its default for `exp`.
    pub fn resolve(mut self, exp: Experiment) -> Result<Self, AppError> {
        use Experiment::*;
        let p = &mut self.physics;
        p.eps.get_or_insert(match exp {
            RabiMap => 1.5,
            ValidatePert => 0.2,
            _ => 0.1,
        });
        p.eps_grid.get_or_insert_with(|| match exp {
            Optimize => Grid::linspace(0.1, 0.5, 9),
            _ => Grid::linspace(0.02, 1.0, 50),
        });
        p.sigma_q.get_or_insert(if exp == Fringe { 0.05 } else { 0.005 });
        p.n_atoms.get_or_insert(20_000);
        p.chi.get_or_insert_with(AutoOr::default);
        p.alpha.get_or_insert_with(AlphaSpec::default);
        p.lambda_t.get_or_insert_with(AutoOr::default);
        p.shape.get_or_insert_with(ShapeKind::default);
        p.classes.get_or_insert([-2, 3]);
        p.backend.get_or_insert(match exp {
            Fringe => BackendKind::AnalyticVsOnly,
            RabiMap | PulseShape | ValidatePert => BackendKind::Numeric,
            _ => BackendKind::Perturbative,
        });
        p.q.get_or_insert(0.02);
        p.q_grid.get_or_insert_with(|| match exp {
            PulseShape => Grid::linspace(-0.25, 0.25, 201),
            _ => Grid::linspace(-0.5, 0.5, 101),
        });
        p.tau.get_or_insert(PI);
        p.tau_grid.get_or_insert_with(|| Grid::linspace(0.0, 2.0 * PI, 65));
        p.phi_grid.get_or_insert_with(|| Grid::linspace(-PI, PI, 101));
        p.z_grid.get_or_insert_with(|| Grid::linspace(-0.5, 2.5, 15_001));
        p.position_phi.get_or_insert(0.0);
        let n = &mut self.numerics;
        n.nodes.get_or_insert(200);
        n.rtol.get_or_insert(1e-10);
        n.atol.get_or_insert(1e-12);
        n.fd_step.get_or_insert(bragg_core::mzi_core::FD_STEP);
        let o = &mut self.output;
        o.dir.get_or_insert_with(|| PathBuf::from("results"));
        o.format.get_or_insert_with(Format::default);
        o.precision.get_or_insert(12);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), AppError> {
        let p = &self.physics;
        let bad = |key: &str, why: &str| Err(AppError::Config(format!("{key}: {why}")));
        if !matches!(p.eps, Some(e) if e > 0.0 && e.is_finite()) {
            return bad("physics.eps", "must be positive");
        }
        if let Some(g) = &p.eps_grid {
            if g.points("physics.eps_grid")?.iter().any(|&e| e <= 0.0) {
                return bad("physics.eps_grid", "values must be positive");
            }
        }
        if p.n_atoms == Some(0) {
            return bad("physics.n_atoms", "must be positive");
        }
        if let Some(AutoOr::Value(l)) = p.lambda_t {
            if !(l > 0.0 && l.is_finite()) {
                return bad("physics.lambda_t", "must be positive");
            }
        }
        if let Some(AutoOr::Value(c)) = p.chi {
            if !(c >= 0.0 && c.is_finite()) {
                return bad("physics.chi", "must be non-negative");
            }
        }
        if let Some(q) = p.q {
            if !(-0.5..=0.5).contains(&q) {
                return bad("physics.q", "must lie in [-0.5, 0.5]");
            }
        }
        for (key, g) in [("physics.q_grid", &p.q_grid), ("physics.tau_grid", &p.tau_grid), ("physics.phi_grid", &p.phi_grid), ("physics.z_grid", &p.z_grid)] {
            if let Some(g) = g {
                g.points(key)?;
            }
        }
        match self.output.precision {
            Some(d) if !(1..=17).contains(&d) => return bad("output.precision", "must be between 1 and 17"),
            _ => {}
        }
        if self.numerics.nodes.is_some_and(|n| n < 32) {
            return bad("numerics.nodes", "must be at least 32");
        }
        Ok(())
    }
}
