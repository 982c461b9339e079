//! Experiment configuration read from TOML.

use std::path::PathBuf;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use vk_ribbon::plate2d::PlateOptions;
use vk_ribbon::profile::Function1D;
use vk_ribbon::ribbon1d::{Constraints1D, Load1D, ModelKind};
use vk_ribbon::solver::SolverOptions;
use vk_ribbon::sweep::SweepOptions;
use vk_ribbon::{Material, QuadForm2};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub material: MaterialConfig,
    pub geometry: Geometry,
    pub model: ModelConfig,
    pub eps: Vec<f64>,
    pub loads: Load1D,
    pub solver: SolverOptions,
    pub plate: PlateOptions,
    pub density: DensityConfig,
    pub alpha: AlphaConfig,
    pub recovery: RecoveryConfig,
    pub gradcheck: GradcheckConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            material: MaterialConfig::default(),
            geometry: Geometry::default(),
            model: ModelConfig::default(),
            eps: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            loads: Load1D::default(),
            solver: SolverOptions::default(),
            plate: PlateOptions::default(),
            density: DensityConfig::default(),
            alpha: AlphaConfig::default(),
            recovery: RecoveryConfig::default(),
            gradcheck: GradcheckConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Either Lamé constants or an explicit 3×3 representation of `Q2` in the
/// basis `(a11, a22, √2 a12)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub rep: Option<[[f64; 3]; 3]>,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self {
            mu: Some(1.0),
            lambda: Some(1.0),
            rep: None,
        }
    }
}

impl MaterialConfig {
    /// The isotropic material, if one was given.
    pub fn isotropic(&self) -> Result<Option<Material>, CliError> {
        match (self.mu, self.lambda) {
            (Some(mu), Some(lambda)) => Ok(Some(Material::new(mu, lambda)?)),
            _ => Ok(None),
        }
    }

    pub fn quad_form(&self) -> Result<QuadForm2, CliError> {
        match (&self.rep, self.isotropic()?) {
            (Some(r), _) => Ok(QuadForm2::new(Matrix3::from_fn(|i, j| r[i][j]))?),
            (None, Some(m)) => Ok(QuadForm2::isotropic(&m)?),
            (None, None) => Err(CliError::config("material needs both mu and lambda, or rep")),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        match (self.mu, self.lambda, &self.rep) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            (Some(_), Some(_), Some(_)) => {
                return Err(CliError::config("material: give either mu/lambda or rep, not both"))
            }
            _ => return Err(CliError::config("material needs both mu and lambda, or rep")),
        }
        self.quad_form()
            .map(|_| ())
            .map_err(|e| CliError::config(format!("material: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// Strip length; the interval is `(-ell/2, ell/2)`.
    pub ell: f64,
    /// Elements of the ribbon mesh.
    pub n1d: usize,
    /// Plate elements along `x1` per unit length.
    pub nx_per_length: usize,
    /// Plate elements across the strip.
    pub ny: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            ell: 1.0,
            n1d: 64,
            nx_per_length: 16,
            ny: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub constraints: Constraints1D,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Lvk,
            constraints: Constraints1D::ZeroAverage,
        }
    }
}

/// Uniform `(κ, τ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            kappa_min: -2.0,
            kappa_max: 2.0,
            tau_min: -2.0,
            tau_max: 2.0,
            points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 1,
        }
    }
}

/// Ribbon data for the recovery check, and the strip quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoveryConfig {
    pub w: Function1D,
    pub theta: Function1D,
    pub xi1: Function1D,
    pub xi2: Function1D,
    /// Subtract means (and the mean slope of `w`) so the data satisfy the
    /// zero-average conditions.
    pub normalize: bool,
    pub cells_x: usize,
    pub cells_y: usize,
    pub order: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            w: Function1D::zero(),
            theta: Function1D::zero(),
            xi1: Function1D::zero(),
            xi2: Function1D::zero(),
            normalize: true,
            cells_x: 64,
            cells_y: 2,
            order: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckConfig {
    pub fields: usize,
    pub seed: u64,
    pub n_elems: usize,
    /// Coefficient range `[-amplitude, amplitude]` of the random fields.
    pub amplitude: f64,
    /// Central difference step.
    pub step: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            fields: 10,
            seed: 1,
            n_elems: 12,
            amplitude: 0.5,
            step: 1e-6,
        }
    }
}

/// Bounds checked after each command; a violation makes the run fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub density: f64,
    pub alpha: f64,
    pub gradcheck: f64,
    pub recovery: f64,
    /// Relative gap of the plate minimum and of the recovery energy to the
    /// ribbon minimum at the last `eps`.
    pub sweep_gap: f64,
    /// Bound on `‖∂12w‖/ε` and `‖∂22w‖/ε²` along the sweep.
    pub compactness: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            density: 1e-10,
            alpha: 1e-6,
            gradcheck: 1e-6,
            recovery: 1e-2,
            sweep_gap: 2e-2,
            compactness: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<(), CliError> {
    if v > 0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be at least 1")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.material.validate()?;
        positive("geometry.ell", self.geometry.ell)?;
        nonzero("geometry.n1d", self.geometry.n1d)?;
        nonzero("geometry.nx_per_length", self.geometry.nx_per_length)?;
        nonzero("geometry.ny", self.geometry.ny)?;
        if self.eps.is_empty() {
            return Err(CliError::config("eps must list at least one value"));
        }
        for &e in &self.eps {
            positive("eps entries", e)?;
        }
        positive("solver.tol", self.solver.tol)?;
        nonzero("solver.max_iters", self.solver.max_iters)?;
        nonzero("solver.memory", self.solver.memory)?;
        positive("plate.solver.tol", self.plate.solver.tol)?;
        nonzero("plate.solver.max_iters", self.plate.solver.max_iters)?;
        for &w in &self.plate.penalty_weights {
            positive("plate.penalty_weights entries", w)?;
        }
        let d = &self.density;
        if !(d.kappa_min <= d.kappa_max && d.tau_min <= d.tau_max) {
            return Err(CliError::config("density ranges must satisfy min <= max"));
        }
        nonzero("density.points", d.points)?;
        nonzero("alpha.samples", self.alpha.samples)?;
        nonzero("recovery.cells_x", self.recovery.cells_x)?;
        nonzero("recovery.cells_y", self.recovery.cells_y)?;
        if !(1..=10).contains(&self.recovery.order) {
            return Err(CliError::config("recovery.order must lie in 1..=10"));
        }
        nonzero("gradcheck.fields", self.gradcheck.fields)?;
        nonzero("gradcheck.n_elems", self.gradcheck.n_elems)?;
        positive("gradcheck.amplitude", self.gradcheck.amplitude)?;
        positive("gradcheck.step", self.gradcheck.step)?;
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.density", t.density),
            ("tolerances.alpha", t.alpha),
            ("tolerances.gradcheck", t.gradcheck),
            ("tolerances.recovery", t.recovery),
            ("tolerances.sweep_gap", t.sweep_gap),
            ("tolerances.compactness", t.compactness),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            n1d: self.geometry.n1d,
            nx_per_length: self.geometry.nx_per_length,
            ny: self.geometry.ny,
            solver1d: self.solver,
            plate: self.plate.clone(),
        }
    }
}
