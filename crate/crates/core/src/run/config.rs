//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doublephase::PropagationOptions;
use crate::engine::{linspace, NewtonOptions};
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, HarmonicOscillator, Kerr, Morse, Nelson};
use crate::quadrature::NelsonGridSpec;
use crate::reference::{FdGrid, PoincareOptions};

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn one() -> f64 {
    1.0
}

/// Model and its parameters, selected by `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    Kerr {
        #[serde(default = "one")]
        omega0: f64,
        chi: f64,
    },
    Morse {
        chi: f64,
    },
    Nelson {
        mu: f64,
    },
}

impl ModelConfig {
    pub fn build(&self, hbar: f64) -> Result<Box<dyn HamiltonianModel>> {
        Ok(match *self {
            ModelConfig::Harmonic { omega } => Box::new(HarmonicOscillator::new(omega, hbar)?),
            ModelConfig::Kerr { omega0, chi } => Box::new(Kerr::new(omega0, chi, hbar)?),
            ModelConfig::Morse { chi } => Box::new(Morse::new(chi, hbar)?),
            ModelConfig::Nelson { mu } => Box::new(Nelson::new(mu, hbar)?),
        })
    }
}

/// Which columns of the observables table to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Semiclassical,
    Quantum,
    Classical,
    #[default]
    All,
}

impl Method {
    pub fn semiclassical(self) -> bool {
        matches!(self, Method::Semiclassical | Method::All)
    }

    pub fn quantum(self) -> bool {
        matches!(self, Method::Quantum | Method::All)
    }

    pub fn classical(self) -> bool {
        matches!(self, Method::Classical | Method::All)
    }
}

/// `count` evenly spaced thermal times from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

/// Nelson grid rule; the Monte Carlo seed is the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NelsonRule {
    GaussHermite {
        n: usize,
    },
    MonteCarlo {
        samples: usize,
        #[serde(default = "default_burn_in")]
        burn_in_fraction: f64,
        #[serde(default = "default_proposal")]
        proposal_scale: f64,
    },
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_proposal() -> f64 {
    0.9
}

impl NelsonRule {
    pub fn spec(&self, seed: u64) -> NelsonGridSpec {
        match *self {
            NelsonRule::GaussHermite { n } => NelsonGridSpec::GaussHermite { n },
            NelsonRule::MonteCarlo { samples, burn_in_fraction, proposal_scale } => {
                NelsonGridSpec::MonteCarlo { samples, seed, burn_in_fraction, proposal_scale }
            }
        }
    }
}

/// Midpoint grid resolution per model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Gauss–Legendre nodes in the action (harmonic, Kerr).
    pub radial_nodes: usize,
    /// Trapezoid nodes in the angle (harmonic, Kerr).
    pub radial_angles: usize,
    /// Radial extent, in e-folds of the thermal weight.
    pub radial_efolds: f64,
    pub morse_n_p: usize,
    pub morse_n_q: usize,
    pub nelson: NelsonRule,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 96,
            radial_angles: 2,
            radial_efolds: 50.0,
            morse_n_p: 300,
            morse_n_q: 300,
            nelson: NelsonRule::GaussHermite { n: 8 },
        }
    }
}

/// Finite-difference box for the Nelson quantum reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    /// Number of eigenvalues computed.
    pub levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { x_range: [-4.5, 4.5], y_range: [-4.0, 5.0], nx: 160, ny: 160, levels: 120 }
    }
}

impl FdConfig {
    pub fn grid(&self) -> FdGrid {
        FdGrid {
            x_range: (self.x_range[0], self.x_range[1]),
            y_range: (self.y_range[0], self.y_range[1]),
            nx: self.nx,
            ny: self.ny,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    /// Levels kept from closed-form spectra without an upper bound.
    pub levels: usize,
    pub fd: FdConfig,
    /// Relative Boltzmann weight of the highest level below which a
    /// truncated spectrum is trusted.
    pub tail: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self { levels: 4000, fd: FdConfig::default(), tail: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisConfig {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    pub theta: f64,
    pub p: AxisConfig,
    pub q: AxisConfig,
}

impl Default for WignerConfig {
    fn default() -> Self {
        let axis = AxisConfig { min: -4.0, max: 4.0, n: 81 };
        Self { theta: 1.0, p: axis, q: axis }
    }
}

/// Surface of section settings; initial conditions use the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareConfig {
    pub energy: f64,
    pub n_trajectories: usize,
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        let d = PoincareOptions::default();
        Self { energy: d.energy, n_trajectories: d.n_trajectories, t_max: d.t_max, rel_tol: d.rel_tol, abs_tol: d.abs_tol }
    }
}

impl PoincareConfig {
    pub fn options(&self, seed: u64) -> PoincareOptions {
        PoincareOptions {
            energy: self.energy,
            n_trajectories: self.n_trajectories,
            t_max: self.t_max,
            seed,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Rows written for spectra without an upper bound.
    pub levels: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { levels: 20 }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_range: Option<ThetaRange>,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    /// Write measured wall times; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    /// Default output path; `--out` overrides it. Not embedded in outputs.
    #[serde(default, skip_serializing)]
    pub output: Option<String>,
    #[serde(default)]
    pub propagation: PropagationOptions,
    #[serde(default)]
    pub newton: NewtonOptions,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quantum: QuantumConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
    #[serde(default)]
    pub poincare: PoincareConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    /// A configuration with every setting at its default.
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            hbar: 1.0,
            theta: Vec::new(),
            theta_range: None,
            method: Method::All,
            seed: default_seed(),
            threads: 0,
            record_timing: false,
            output: None,
            propagation: PropagationOptions::default(),
            newton: NewtonOptions::default(),
            grid: GridConfig::default(),
            quantum: QuantumConfig::default(),
            wigner: WignerConfig::default(),
            poincare: PoincareConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Resolved settings as one line of JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// Thermal times from `theta` or `theta_range`, in the given order.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        let list = match (&self.theta[..], self.theta_range) {
            ([], None) => return Err(config_error("no thermal times: set `theta` or `theta_range`")),
            ([], Some(r)) => {
                if r.count == 0 {
                    return Err(config_error("`theta_range.count` must be positive"));
                }
                linspace(r.start, r.stop, r.count)
            }
            (list, None) => list.to_vec(),
            (_, Some(_)) => return Err(config_error("set only one of `theta` and `theta_range`")),
        };
        if list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(config_error("thermal times must be positive and finite"));
        }
        Ok(list)
    }

    /// Checks every setting that does not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(config_error("`hbar` must be positive"));
        }
        self.model.build(self.hbar)?;
        self.propagation.validate()?;
        if self.theta_range.is_some() || !self.theta.is_empty() {
            self.thetas()?;
        }
        let g = &self.grid;
        if g.radial_nodes == 0 || g.radial_angles == 0 || g.morse_n_p == 0 || g.morse_n_q == 0 {
            return Err(config_error("grid resolutions must be positive"));
        }
        if !(g.radial_efolds > 0.0) {
            return Err(config_error("`grid.radial_efolds` must be positive"));
        }
        match g.nelson {
            NelsonRule::GaussHermite { n } if n == 0 => return Err(config_error("`grid.nelson.n` must be positive")),
            NelsonRule::MonteCarlo { samples, burn_in_fraction, proposal_scale } => {
                if samples == 0 || !(burn_in_fraction >= 0.0) || !(proposal_scale > 0.0) {
                    return Err(config_error("Monte Carlo grid needs samples > 0, burn_in_fraction >= 0, proposal_scale > 0"));
                }
            }
            _ => {}
        }
        let q = &self.quantum;
        if q.levels == 0 || q.fd.nx < 3 || q.fd.ny < 3 || q.fd.levels == 0 || !(q.tail > 0.0 && q.tail < 1.0) {
            return Err(config_error("quantum settings: levels > 0, fd grid >= 3 points per axis, 0 < tail < 1"));
        }
        if !(q.fd.x_range[1] > q.fd.x_range[0] && q.fd.y_range[1] > q.fd.y_range[0]) {
            return Err(config_error("finite-difference ranges must be increasing"));
        }
        let w = &self.wigner;
        if !(w.theta > 0.0 && w.theta.is_finite()) {
            return Err(config_error("`wigner.theta` must be positive"));
        }
        for axis in [w.p, w.q] {
            if axis.n < 2 || !(axis.max > axis.min) {
                return Err(config_error("Wigner axes need n >= 2 and max > min"));
            }
        }
        let p = &self.poincare;
        if p.n_trajectories == 0 || !(p.t_max > 0.0) || !(p.energy > 0.0) {
            return Err(config_error("Poincaré settings: n_trajectories > 0, t_max > 0, energy > 0"));
        }
        if self.spectrum.levels == 0 {
            return Err(config_error("`spectrum.levels` must be positive"));
        }
        Ok(())
    }
}
