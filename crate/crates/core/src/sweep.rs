//! ε-sweeps comparing plate minima, recovery energies and the ribbon minimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plate2d::{
    compactness, det_penalty, energy_ben, energy_ext, load_vector, minimize_plate, CompactnessDiagnostics,
    Constraints2D, PlateKind, PlateOptions, RectMesh,
};
use crate::quadform::{QuadForm2, RelaxConstants};
use crate::recovery::{recover, relative_error, RecoveryInput};
use crate::ribbon1d::{minimize, Constraints1D, IntervalMesh, Load1D, ModelKind};
use crate::solver::SolverOptions;

/// Slack allowed in the bracket `min2D ≤ recovery`, relative to `1 + |E|`,
/// covering the stopping tolerance of the plate solver.
pub const BRACKET_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    /// Elements of the one-dimensional reference mesh.
    #[serde(default = "default_n1d")]
    pub n1d: usize,
    /// Plate elements along `x1` per unit length.
    #[serde(default = "default_nx")]
    pub nx_per_length: usize,
    #[serde(default = "default_ny")]
    pub ny: usize,
    #[serde(default)]
    pub solver1d: SolverOptions,
    #[serde(default)]
    pub plate: PlateOptions,
}

fn default_n1d() -> usize {
    64
}

fn default_nx() -> usize {
    16
}

fn default_ny() -> usize {
    8
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            n1d: default_n1d(),
            nx_per_length: default_nx(),
            ny: default_ny(),
            solver1d: SolverOptions::default(),
            plate: PlateOptions::default(),
        }
    }
}

pub fn plate_kind(kind: ModelKind) -> PlateKind {
    match kind {
        ModelKind::Lvk => PlateKind::Lvk,
        ModelKind::Vk => PlateKind::Vk,
        ModelKind::Cvk => PlateKind::CvkPenalty,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub nx: usize,
    pub ny: usize,
    /// Plate minimum (penalty term excluded for the constrained model).
    pub min2d: Option<f64>,
    /// Plate energy of the sampled recovery field at the ribbon minimizer.
    pub recovery: Option<f64>,
    /// `∫(det ∇²_ε w)²` at the plate minimizer.
    pub det_residual: Option<f64>,
    /// Final penalty term `W∫(det ∇²_ε w)²` at the plate minimizer and at
    /// the recovery field; zero for the unconstrained models.
    pub penalty_min: f64,
    pub penalty_recovery: f64,
    pub iterations: Option<usize>,
    pub compactness: Option<CompactnessDiagnostics>,
    /// Failure message when the row could not be completed.
    pub error: Option<String>,
}

impl SweepRow {
    /// `min2D ≤ recovery`, compared on the penalized objective that the
    /// plate solver minimizes.
    pub fn bracket_holds(&self) -> bool {
        match (self.min2d, self.recovery) {
            (Some(m), Some(r)) => {
                let (m, r) = (m + self.penalty_min, r + self.penalty_recovery);
                m <= r + BRACKET_SLACK * (1.0 + r.abs())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: ModelKind,
    pub limit1d: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn bracket_holds(&self) -> bool {
        self.rows.iter().all(SweepRow::bracket_holds)
    }

    /// Relative gaps of the plate minimum and of the recovery energy to the
    /// ribbon minimum at the last `eps`.
    pub fn final_gaps(&self) -> Option<(f64, f64)> {
        let r = self.rows.last()?;
        Some((
            relative_error(r.min2d?, self.limit1d),
            relative_error(r.recovery?, self.limit1d),
        ))
    }
}

/// Minimizes the ribbon functional, then for each `eps` minimizes the plate
/// energy and evaluates the recovery field built from the ribbon minimizer,
/// all under zero-average conditions and the same loads.
pub fn gamma_sweep(
    kind: ModelKind,
    ell: f64,
    q: &QuadForm2,
    c: &RelaxConstants,
    loads: &Load1D,
    eps_list: &[f64],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if opts.ny == 0 || opts.nx_per_length == 0 {
        return Err(Error::InvalidMesh("plate mesh needs at least one element per direction".into()));
    }
    let mesh1 = IntervalMesh::uniform(ell, opts.n1d)?;
    let one = minimize(kind, &mesh1, q, c, loads, Constraints1D::ZeroAverage, &opts.solver1d, None)?;
    let input = RecoveryInput::from_field(&one.field);
    let nx = ((opts.nx_per_length as f64 * ell).round() as usize).max(1);
    let mesh = RectMesh::new(ell, nx, opts.ny)?;
    let final_weight = match kind {
        ModelKind::Cvk => opts.plate.penalty_weights.last().copied().unwrap_or(0.0),
        _ => 0.0,
    };

    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let mut row = SweepRow {
                eps,
                nx,
                ny: opts.ny,
                min2d: None,
                recovery: None,
                det_residual: None,
                penalty_min: 0.0,
                penalty_recovery: 0.0,
                iterations: None,
                compactness: None,
                error: None,
            };
            let mut errors = Vec::new();
            match minimize_plate(plate_kind(kind), &mesh, eps, q, loads, Constraints2D::ZeroAverage, &opts.plate) {
                Ok(m) => {
                    row.min2d = Some(m.energy);
                    row.det_residual = Some(m.det_residual);
                    row.penalty_min = m.penalty_weight * m.det_residual;
                    row.iterations = Some(m.stats.iterations);
                    row.compactness = Some(compactness(&m.field));
                }
                Err(e) => errors.push(format!("plate minimization: {e}")),
            }
            match recovery_energy(kind, &input, q, c, loads, &mesh, eps) {
                Ok((e, det2)) => {
                    row.recovery = Some(e);
                    row.penalty_recovery = final_weight * det2;
                }
                Err(e) => errors.push(format!("recovery: {e}")),
            }
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect();
    Ok(SweepReport {
        kind,
        limit1d: one.report.total,
        rows,
    })
}

/// Plate energy minus load work of the recovery field sampled onto `mesh`,
/// and `∫(det ∇²_ε w)²` of the sampled field.
pub fn recovery_energy(
    kind: ModelKind,
    input: &RecoveryInput,
    q: &QuadForm2,
    c: &RelaxConstants,
    loads: &Load1D,
    mesh: &RectMesh,
    eps: f64,
) -> Result<(f64, f64)> {
    let field = recover(kind, input, q, c, eps)?.sample(mesh)?;
    let work = load_vector(mesh, eps, loads)?.dot(&field.coeffs);
    let ext = if kind == ModelKind::Vk {
        energy_ext(&field, q)
    } else {
        0.0
    };
    Ok((ext + energy_ben(&field, q) - work, det_penalty(&field, 1.0)))
}
