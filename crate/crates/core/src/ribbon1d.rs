//! Finite element discretization of the one-dimensional ribbon functionals.
//!
//! Unknowns on `I = (-ℓ/2, ℓ/2)`: axial displacement `ξ1` and twist `θ` are
//! piecewise linear; in-plane deflection `ξ2` and out-of-plane deflection `w`
//! are C¹ cubic Hermite. Coefficients are stored as
//! `[ξ1 | ξ2 (value, slope) | w (value, slope) | θ]`.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite;
use crate::profile::{Function1D, Profile};
use crate::quadform::{QuadForm2, RelaxConstants};
use crate::quadrature::GaussRule;
use crate::reduction::Reduction;
use crate::solver::{self, SolveStats, SolverOptions};

/// Gauss points per element for the energies.
pub const ENERGY_POINTS: usize = 4;
/// Gauss points per element for load integrals.
const LOAD_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Linearized: `(1/24)∫Q1(w'', θ')`.
    Lvk,
    /// Nonlinear with in-plane unknowns.
    Vk,
    /// Relaxed with the developability constraint: `(1/24)∫Q̄(w'', θ')`.
    Cvk,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lvk => "LvK",
            ModelKind::Vk => "vK",
            ModelKind::Cvk => "CvK",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMesh {
    ell: f64,
    nodes: Vec<f64>,
}

impl IntervalMesh {
    pub fn uniform(ell: f64, n_elems: usize) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidMesh(format!("length must be positive, got {ell}")));
        }
        if n_elems < 2 {
            return Err(Error::InvalidMesh(format!("need at least 2 elements, got {n_elems}")));
        }
        let h = ell / n_elems as f64;
        let nodes = (0..=n_elems).map(|i| -0.5 * ell + h * i as f64).collect();
        Ok(Self { ell, nodes })
    }

    /// Mesh with explicit nodes; the end nodes must be `±ℓ/2`.
    pub fn graded(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidMesh("need at least 2 elements".into()));
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidMesh("nodes must be strictly increasing".into()));
        }
        let ell = nodes[nodes.len() - 1] - nodes[0];
        if (nodes[0] + 0.5 * ell).abs() > 1e-12 * ell {
            return Err(Error::InvalidMesh("nodes must be symmetric about 0".into()));
        }
        Ok(Self { ell, nodes })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elems(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn elem(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Element and local coordinate of `x`; the last element owns `ℓ/2`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let tol = 1e-12 * self.ell;
        if x < self.nodes[0] - tol || x > self.nodes[self.n_elems()] + tol {
            return None;
        }
        let e = match self.nodes.partition_point(|&n| n <= x) {
            0 => 0,
            k => (k - 1).min(self.n_elems() - 1),
        };
        let (a, b) = self.elem(e);
        Some((e, ((x - a) / (b - a)).clamp(0.0, 1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Xi1,
    Xi2,
    W,
    Theta,
}

/// Boundary treatment on the ribbon interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraints1D {
    /// `∫ξ1 = ∫ξ2 = ∫ξ2' = ∫w = ∫w' = ∫θ = 0`.
    ZeroAverage,
    /// All unknowns and the slopes of `ξ2`, `w` vanish at both ends.
    Clamped,
}

/// Index arithmetic for the coefficient layout.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    n: usize,
}

impl Layout {
    pub fn new(n_nodes: usize) -> Self {
        Self { n: n_nodes }
    }

    pub fn len(&self) -> usize {
        6 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn xi1(&self, i: usize) -> usize {
        i
    }

    /// `k = 0` value, `k = 1` slope.
    pub fn xi2(&self, i: usize, k: usize) -> usize {
        self.n + 2 * i + k
    }

    pub fn w(&self, i: usize, k: usize) -> usize {
        3 * self.n + 2 * i + k
    }

    pub fn theta(&self, i: usize) -> usize {
        5 * self.n + i
    }

    /// Local-to-global map for element `e`: `[ξ1 ×2, ξ2 ×4, w ×4, θ ×2]`.
    pub fn element(&self, e: usize) -> [usize; 12] {
        [
            self.xi1(e),
            self.xi1(e + 1),
            self.xi2(e, 0),
            self.xi2(e, 1),
            self.xi2(e + 1, 0),
            self.xi2(e + 1, 1),
            self.w(e, 0),
            self.w(e, 1),
            self.w(e + 1, 0),
            self.w(e + 1, 1),
            self.theta(e),
            self.theta(e + 1),
        ]
    }

    pub fn in_plane(&self) -> impl Iterator<Item = usize> {
        0..3 * self.n
    }
}

/// Discrete ribbon state.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub mesh: IntervalMesh,
    pub coeffs: DVector<f64>,
    pub constraints: Option<Constraints1D>,
}

/// Field values and derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point1D {
    pub xi1: f64,
    pub dxi1: f64,
    pub xi2: f64,
    pub dxi2: f64,
    pub ddxi2: f64,
    pub w: f64,
    pub dw: f64,
    pub ddw: f64,
    pub dddw: f64,
    pub theta: f64,
    pub dtheta: f64,
}

impl Field1D {
    pub fn zeros(mesh: &IntervalMesh) -> Self {
        Self {
            mesh: mesh.clone(),
            coeffs: DVector::zeros(6 * mesh.n_nodes()),
            constraints: None,
        }
    }

    pub fn from_coeffs(mesh: &IntervalMesh, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != 6 * mesh.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                6 * mesh.n_nodes(),
                coeffs.len()
            )));
        }
        Ok(Self {
            mesh: mesh.clone(),
            coeffs,
            constraints: None,
        })
    }

    /// Nodal interpolation of smooth profiles (values, and slopes for the
    /// Hermite components).
    pub fn interpolate(
        mesh: &IntervalMesh,
        xi1: &dyn Profile,
        xi2: &dyn Profile,
        w: &dyn Profile,
        theta: &dyn Profile,
    ) -> Self {
        let mut f = Self::zeros(mesh);
        let l = f.layout();
        for (i, &x) in mesh.nodes().iter().enumerate() {
            f.coeffs[l.xi1(i)] = xi1.value(x);
            f.coeffs[l.xi2(i, 0)] = xi2.value(x);
            f.coeffs[l.xi2(i, 1)] = xi2.derivative(x, 1);
            f.coeffs[l.w(i, 0)] = w.value(x);
            f.coeffs[l.w(i, 1)] = w.derivative(x, 1);
            f.coeffs[l.theta(i)] = theta.value(x);
        }
        f
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.mesh.n_nodes())
    }

    pub fn eval_elem(&self, e: usize, s: f64) -> Point1D {
        let (a, b) = self.mesh.elem(e);
        let h = b - a;
        let l = self.layout();
        let dofs = l.element(e);
        let u = |k: usize| self.coeffs[dofs[k]];
        let lin = hermite::linear(s, h);
        let cub = hermite::cubic(s, h);
        let lsum = |k: usize, off: usize| lin[k][0] * u(off) + lin[k][1] * u(off + 1);
        let csum = |k: usize, off: usize| (0..4).map(|i| cub[k][i] * u(off + i)).sum::<f64>();
        Point1D {
            xi1: lsum(0, 0),
            dxi1: lsum(1, 0),
            xi2: csum(0, 2),
            dxi2: csum(1, 2),
            ddxi2: csum(2, 2),
            w: csum(0, 6),
            dw: csum(1, 6),
            ddw: csum(2, 6),
            dddw: csum(3, 6),
            theta: lsum(0, 10),
            dtheta: lsum(1, 10),
        }
    }

    /// Evaluation at `x`; at interior nodes derivatives that jump are
    /// averaged over both sides.
    pub fn eval(&self, x: f64) -> Result<Point1D> {
        let (e, s) = self
            .mesh
            .locate(x)
            .ok_or(Error::OutOfDomain { x1: x, x2: 0.0 })?;
        let p = self.eval_elem(e, s);
        let at_node = |s: f64| s == 0.0 || s == 1.0;
        let ne = self.mesh.n_elems();
        let other = if s == 0.0 && e > 0 {
            Some(self.eval_elem(e - 1, 1.0))
        } else if s == 1.0 && e + 1 < ne {
            Some(self.eval_elem(e + 1, 0.0))
        } else {
            None
        };
        match other {
            Some(q) if at_node(s) => Ok(Point1D {
                dxi1: 0.5 * (p.dxi1 + q.dxi1),
                ddxi2: 0.5 * (p.ddxi2 + q.ddxi2),
                ddw: 0.5 * (p.ddw + q.ddw),
                dddw: 0.5 * (p.dddw + q.dddw),
                dtheta: 0.5 * (p.dtheta + q.dtheta),
                ..p
            }),
            _ => Ok(p),
        }
    }

    /// Values of the active constraint functionals.
    pub fn constraint_residuals(&self, bc: Constraints1D) -> Vec<f64> {
        let l = self.layout();
        let (fixed, rows) = constraint_system(&self.mesh, bc, ModelKind::Vk);
        let mut out: Vec<f64> = fixed.iter().map(|&i| self.coeffs[i]).collect();
        out.extend(rows.iter().map(|r| {
            r.iter()
                .zip(self.coeffs.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        }));
        debug_assert_eq!(self.coeffs.len(), l.len());
        out
    }

    /// One component viewed as a profile on `I`.
    pub fn profile(&self, comp: Component) -> FieldProfile {
        FieldProfile {
            field: self.clone(),
            comp,
        }
    }
}

/// A single component of a [`Field1D`] as a [`Profile`]. Derivatives of order
/// beyond the element degree are zero.
#[derive(Debug, Clone)]
pub struct FieldProfile {
    field: Field1D,
    comp: Component,
}

impl Profile for FieldProfile {
    fn derivative(&self, x: f64, order: usize) -> f64 {
        let x = x.clamp(-0.5 * self.field.mesh.ell(), 0.5 * self.field.mesh.ell());
        let p = self.field.eval(x).expect("clamped into the interval");
        match (self.comp, order) {
            (Component::Xi1, 0) => p.xi1,
            (Component::Xi1, 1) => p.dxi1,
            (Component::Xi2, 0) => p.xi2,
            (Component::Xi2, 1) => p.dxi2,
            (Component::Xi2, 2) => p.ddxi2,
            (Component::W, 0) => p.w,
            (Component::W, 1) => p.dw,
            (Component::W, 2) => p.ddw,
            (Component::W, 3) => p.dddw,
            (Component::Theta, 0) => p.theta,
            (Component::Theta, 1) => p.dtheta,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointLoad {
    pub location: f64,
    pub component: Component,
    pub magnitude: f64,
}

/// Distributed and point loads; work is `∫(q_w w + q_xi1 ξ1 + q_xi2 ξ2 + m θ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load1D {
    #[serde(default)]
    pub q_w: Function1D,
    #[serde(default)]
    pub q_xi1: Function1D,
    #[serde(default)]
    pub q_xi2: Function1D,
    #[serde(default)]
    pub m_theta: Function1D,
    #[serde(default)]
    pub point_loads: Vec<PointLoad>,
}

impl Load1D {
    pub fn uniform_w(q: f64) -> Self {
        Self {
            q_w: Function1D::constant(q),
            ..Self::default()
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            q_w: self.q_w.scaled(t),
            q_xi1: self.q_xi1.scaled(t),
            q_xi2: self.q_xi2.scaled(t),
            m_theta: self.m_theta.scaled(t),
            point_loads: self
                .point_loads
                .iter()
                .map(|p| PointLoad {
                    magnitude: p.magnitude * t,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn has_in_plane(&self) -> bool {
        !self.q_xi1.is_zero()
            || !self.q_xi2.is_zero()
            || self
                .point_loads
                .iter()
                .any(|p| matches!(p.component, Component::Xi1 | Component::Xi2) && p.magnitude != 0.0)
    }
}

/// Coefficient vector `f` with `f·u` the work of `loads` on `u`.
pub fn load_vector(mesh: &IntervalMesh, loads: &Load1D) -> Result<DVector<f64>> {
    let l = Layout::new(mesh.n_nodes());
    let mut f = DVector::zeros(l.len());
    let rule = GaussRule::new(LOAD_POINTS);
    for e in 0..mesh.n_elems() {
        let (a, b) = mesh.elem(e);
        let h = b - a;
        let dofs = l.element(e);
        for (x, wq) in rule.on(a, b) {
            let s = (x - a) / h;
            let lin = hermite::linear(s, h);
            let cub = hermite::cubic(s, h);
            let (q1, q2, qw, m) = (
                loads.q_xi1.value(x),
                loads.q_xi2.value(x),
                loads.q_w.value(x),
                loads.m_theta.value(x),
            );
            for i in 0..2 {
                f[dofs[i]] += wq * q1 * lin[0][i];
                f[dofs[10 + i]] += wq * m * lin[0][i];
            }
            for i in 0..4 {
                f[dofs[2 + i]] += wq * q2 * cub[0][i];
                f[dofs[6 + i]] += wq * qw * cub[0][i];
            }
        }
    }
    for p in &loads.point_loads {
        let (e, s) = mesh
            .locate(p.location)
            .ok_or(Error::OutOfDomain { x1: p.location, x2: 0.0 })?;
        let (a, b) = mesh.elem(e);
        let dofs = l.element(e);
        let lin = hermite::linear(s, b - a);
        let cub = hermite::cubic(s, b - a);
        match p.component {
            Component::Xi1 => (0..2).for_each(|i| f[dofs[i]] += p.magnitude * lin[0][i]),
            Component::Theta => (0..2).for_each(|i| f[dofs[10 + i]] += p.magnitude * lin[0][i]),
            Component::Xi2 => (0..4).for_each(|i| f[dofs[2 + i]] += p.magnitude * cub[0][i]),
            Component::W => (0..4).for_each(|i| f[dofs[6 + i]] += p.magnitude * cub[0][i]),
        }
    }
    Ok(f)
}

/// Term-by-term energy split; `total = stretching + bending_out + bending_in
/// + torsion - load_work`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub stretching: f64,
    pub bending_out: f64,
    pub bending_in: f64,
    pub torsion: f64,
    pub load_work: f64,
}

impl EnergyReport {
    fn from_parts(parts: [f64; 4], load_work: f64) -> Self {
        Self {
            total: parts.iter().sum::<f64>() - load_work,
            stretching: parts[0],
            bending_out: parts[1],
            bending_in: parts[2],
            torsion: parts[3],
            load_work,
        }
    }

    pub fn internal(&self) -> f64 {
        self.total + self.load_work
    }
}

/// Strain quantities entering the densities, in the order
/// `(ξ1', ξ2'', w', w'', θ')`.
type Ops = [f64; 5];

/// Rows of `∂ops/∂u_local` at one quadrature point.
fn op_rows(s: f64, h: f64) -> [[f64; 12]; 5] {
    let lin = hermite::linear(s, h);
    let cub = hermite::cubic(s, h);
    let mut b = [[0.0; 12]; 5];
    b[0][0] = lin[1][0];
    b[0][1] = lin[1][1];
    for i in 0..4 {
        b[1][2 + i] = cub[2][i];
        b[2][6 + i] = cub[1][i];
        b[3][6 + i] = cub[2][i];
    }
    b[4][10] = lin[1][0];
    b[4][11] = lin[1][1];
    b
}

/// Pointwise density: returns the four energy parts and `∂ρ/∂ops`.
trait Density: Sync {
    fn eval(&self, ops: &Ops) -> ([f64; 4], Ops);
}

struct Constants {
    k1: Matrix2<f64>,
    c0: f64,
}

impl Constants {
    fn new(q: &QuadForm2) -> Self {
        Self {
            k1: q.q1_matrix(),
            c0: q.q0_coeff(),
        }
    }

    /// `Q1 = Q0(κ) + K11 (τ + K01/K11 κ)²`.
    fn split_q1(&self, kappa: f64, tau: f64) -> (f64, f64) {
        let k = &self.k1;
        let t = tau + k[(0, 1)] / k[(1, 1)] * kappa;
        (self.c0 * kappa * kappa, k[(1, 1)] * t * t)
    }
}

struct LvkDensity(Constants);
struct VkDensity(Constants);
struct CvkDensity<'a> {
    base: Constants,
    q: &'a QuadForm2,
    c: &'a RelaxConstants,
}

impl Density for LvkDensity {
    fn eval(&self, o: &Ops) -> ([f64; 4], Ops) {
        let k = &self.0.k1;
        let (b, t) = self.0.split_q1(o[3], o[4]);
        let gk = (k[(0, 0)] * o[3] + k[(0, 1)] * o[4]) / 12.0;
        let gt = (k[(0, 1)] * o[3] + k[(1, 1)] * o[4]) / 12.0;
        ([0.0, b / 24.0, 0.0, t / 24.0], [0.0, 0.0, 0.0, gk, gt])
    }
}

impl Density for VkDensity {
    fn eval(&self, o: &Ops) -> ([f64; 4], Ops) {
        let (mut parts, mut g) = LvkDensity(Constants {
            k1: self.0.k1,
            c0: self.0.c0,
        })
        .eval(o);
        let c0 = self.0.c0;
        let strain = o[0] + 0.5 * o[2] * o[2];
        parts[0] = 0.5 * c0 * strain * strain;
        parts[2] = c0 * o[1] * o[1] / 24.0;
        g[0] = c0 * strain;
        g[1] = c0 * o[1] / 12.0;
        g[2] = c0 * strain * o[2];
        (parts, g)
    }
}

impl Density for CvkDensity<'_> {
    fn eval(&self, o: &Ops) -> ([f64; 4], Ops) {
        let m = crate::quadform::qbar(self.q, self.c, o[3], o[4]);
        let b = self.base.c0 * o[3] * o[3];
        (
            [0.0, b / 24.0, 0.0, (m.value - b).max(0.0) / 24.0],
            [0.0, 0.0, 0.0, m.grad.0 / 24.0, m.grad.1 / 24.0],
        )
    }
}

/// Energy parts and full gradient of the internal energy.
fn assemble(f: &Field1D, density: &dyn Density, with_grad: bool) -> ([f64; 4], DVector<f64>) {
    let mesh = &f.mesh;
    let l = f.layout();
    let rule = GaussRule::new(ENERGY_POINTS);
    let locals: Vec<([f64; 4], [f64; 12])> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let (a, b) = mesh.elem(e);
            let h = b - a;
            let dofs = l.element(e);
            let mut parts = [0.0; 4];
            let mut g = [0.0; 12];
            for (x, wq) in rule.on(a, b) {
                let s = (x - a) / h;
                let rows = op_rows(s, h);
                let mut ops = [0.0; 5];
                for (k, row) in rows.iter().enumerate() {
                    ops[k] = row.iter().zip(&dofs).map(|(r, &d)| r * f.coeffs[d]).sum();
                }
                let (p, dp) = density.eval(&ops);
                for k in 0..4 {
                    parts[k] += wq * p[k];
                }
                if with_grad {
                    for (k, row) in rows.iter().enumerate() {
                        if dp[k] != 0.0 {
                            for j in 0..12 {
                                g[j] += wq * dp[k] * row[j];
                            }
                        }
                    }
                }
            }
            (parts, g)
        })
        .collect();
    let mut parts = [0.0; 4];
    let mut grad = DVector::zeros(l.len());
    for (e, (p, g)) in locals.iter().enumerate() {
        for k in 0..4 {
            parts[k] += p[k];
        }
        if with_grad {
            for (j, &d) in l.element(e).iter().enumerate() {
                grad[d] += g[j];
            }
        }
    }
    (parts, grad)
}

pub fn energy_lvk(f: &Field1D, q: &QuadForm2) -> EnergyReport {
    EnergyReport::from_parts(assemble(f, &LvkDensity(Constants::new(q)), false).0, 0.0)
}

pub fn energy_vk(f: &Field1D, q: &QuadForm2) -> EnergyReport {
    EnergyReport::from_parts(assemble(f, &VkDensity(Constants::new(q)), false).0, 0.0)
}

pub fn energy_cvk(f: &Field1D, q: &QuadForm2, c: &RelaxConstants) -> EnergyReport {
    let d = CvkDensity {
        base: Constants::new(q),
        q,
        c,
    };
    EnergyReport::from_parts(assemble(f, &d, false).0, 0.0)
}

pub fn energy(kind: ModelKind, f: &Field1D, q: &QuadForm2, c: &RelaxConstants) -> EnergyReport {
    match kind {
        ModelKind::Lvk => energy_lvk(f, q),
        ModelKind::Vk => energy_vk(f, q),
        ModelKind::Cvk => energy_cvk(f, q, c),
    }
}

/// Membrane part of the nonlinear energy written over the strip,
/// `½∫_S Q0(ξ1' - x2 ξ2'' + w'²/2)`, with exact quadrature in `x2`.
pub fn energy_vk_strip(f: &Field1D, q: &QuadForm2) -> f64 {
    let c0 = q.q0_coeff();
    let rule = GaussRule::new(ENERGY_POINTS);
    let across = GaussRule::new(2);
    let mesh = &f.mesh;
    (0..mesh.n_elems())
        .map(|e| {
            let (a, b) = mesh.elem(e);
            rule.on(a, b)
                .map(|(x, wq)| {
                    let p = f.eval_elem(e, (x - a) / (b - a));
                    let inner: f64 = across
                        .on(-0.5, 0.5)
                        .map(|(x2, w2)| {
                            let m = p.dxi1 - x2 * p.ddxi2 + 0.5 * p.dw * p.dw;
                            w2 * 0.5 * c0 * m * m
                        })
                        .sum();
                    wq * inner
                })
                .sum::<f64>()
        })
        .sum()
}

/// Gradient of the internal energy with respect to every coefficient.
pub fn gradient(kind: ModelKind, f: &Field1D, q: &QuadForm2, c: &RelaxConstants) -> DVector<f64> {
    let consts = Constants::new(q);
    match kind {
        ModelKind::Lvk => assemble(f, &LvkDensity(consts), true).1,
        ModelKind::Vk => assemble(f, &VkDensity(consts), true).1,
        ModelKind::Cvk => assemble(f, &CvkDensity { base: consts, q, c }, true).1,
    }
}

/// Hessian of a quadratic density with weights `c_xi1 ξ1'²/2`,
/// `c_xi2 ξ2''²/2` and `(κ, τ)ᵀ K (κ, τ)/2`.
fn assemble_quadratic(mesh: &IntervalMesh, c_xi1: f64, c_xi2: f64, k: Matrix2<f64>) -> DMatrix<f64> {
    let l = Layout::new(mesh.n_nodes());
    let rule = GaussRule::new(ENERGY_POINTS);
    let locals: Vec<[[f64; 12]; 12]> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let (a, b) = mesh.elem(e);
            let h = b - a;
            let mut ke = [[0.0; 12]; 12];
            for (x, wq) in rule.on(a, b) {
                let r = op_rows((x - a) / h, h);
                let mut d = [[0.0; 5]; 5];
                d[0][0] = c_xi1;
                d[1][1] = c_xi2;
                d[3][3] = k[(0, 0)];
                d[3][4] = k[(0, 1)];
                d[4][3] = k[(1, 0)];
                d[4][4] = k[(1, 1)];
                for p in 0..5 {
                    for qq in 0..5 {
                        if d[p][qq] == 0.0 {
                            continue;
                        }
                        for i in 0..12 {
                            for j in 0..12 {
                                ke[i][j] += wq * d[p][qq] * r[p][i] * r[qq][j];
                            }
                        }
                    }
                }
            }
            ke
        })
        .collect();
    let mut kg = DMatrix::zeros(l.len(), l.len());
    for (e, ke) in locals.iter().enumerate() {
        let dofs = l.element(e);
        for i in 0..12 {
            for j in 0..12 {
                kg[(dofs[i], dofs[j])] += ke[i][j];
            }
        }
    }
    kg
}

/// Fixed coefficients and dense constraint rows for `bc`.
pub fn constraint_system(
    mesh: &IntervalMesh,
    bc: Constraints1D,
    kind: ModelKind,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let l = Layout::new(mesh.n_nodes());
    let last = mesh.n_nodes() - 1;
    let mut fixed: Vec<usize> = if kind == ModelKind::Vk {
        Vec::new()
    } else {
        l.in_plane().collect()
    };
    let mut rows = Vec::new();
    match bc {
        Constraints1D::Clamped => {
            for i in [0, last] {
                if kind == ModelKind::Vk {
                    fixed.extend([l.xi1(i), l.xi2(i, 0), l.xi2(i, 1)]);
                }
                fixed.extend([l.w(i, 0), l.w(i, 1), l.theta(i)]);
            }
        }
        Constraints1D::ZeroAverage => {
            let avg_lin = |dof: &dyn Fn(usize) -> usize| {
                let mut r = vec![0.0; l.len()];
                for e in 0..mesh.n_elems() {
                    let (a, b) = mesh.elem(e);
                    r[dof(e)] += 0.5 * (b - a);
                    r[dof(e + 1)] += 0.5 * (b - a);
                }
                r
            };
            let theta_row = avg_lin(&|i| l.theta(i));
            let xi1_row = avg_lin(&|i| l.xi1(i));
            let avg_cub = |dof: &dyn Fn(usize, usize) -> usize| {
                let mut r = vec![0.0; l.len()];
                for e in 0..mesh.n_elems() {
                    let (a, b) = mesh.elem(e);
                    let h = b - a;
                    r[dof(e, 0)] += 0.5 * h;
                    r[dof(e, 1)] += h * h / 12.0;
                    r[dof(e + 1, 0)] += 0.5 * h;
                    r[dof(e + 1, 1)] -= h * h / 12.0;
                }
                r
            };
            let slope = |dof: &dyn Fn(usize, usize) -> usize| {
                let mut r = vec![0.0; l.len()];
                r[dof(last, 0)] = 1.0;
                r[dof(0, 0)] = -1.0;
                r
            };
            rows.push(avg_cub(&|i, k| l.w(i, k)));
            rows.push(slope(&|i, k| l.w(i, k)));
            rows.push(theta_row);
            if kind == ModelKind::Vk {
                rows.push(xi1_row);
                rows.push(avg_cub(&|i, k| l.xi2(i, k)));
                rows.push(slope(&|i, k| l.xi2(i, k)));
            }
        }
    }
    (fixed, rows)
}

/// Coefficient vectors of the modes removed by the zero-average conditions.
fn rigid_modes(mesh: &IntervalMesh, kind: ModelKind) -> Vec<DVector<f64>> {
    let l = Layout::new(mesh.n_nodes());
    let mut modes = Vec::new();
    let mut push = |set: &dyn Fn(&mut DVector<f64>, usize, f64)| {
        let mut m = DVector::zeros(l.len());
        for (i, &x) in mesh.nodes().iter().enumerate() {
            set(&mut m, i, x);
        }
        modes.push(m);
    };
    push(&|m, i, _| m[l.w(i, 0)] = 1.0);
    push(&|m, i, x| {
        m[l.w(i, 0)] = x;
        m[l.w(i, 1)] = 1.0;
    });
    push(&|m, i, _| m[l.theta(i)] = 1.0);
    if kind == ModelKind::Vk {
        push(&|m, i, _| m[l.xi1(i)] = 1.0);
        push(&|m, i, _| m[l.xi2(i, 0)] = 1.0);
        push(&|m, i, x| {
            m[l.xi2(i, 0)] = x;
            m[l.xi2(i, 1)] = 1.0;
        });
    }
    modes
}

fn check_loads(
    mesh: &IntervalMesh,
    kind: ModelKind,
    bc: Constraints1D,
    loads: &Load1D,
    f: &DVector<f64>,
) -> Result<()> {
    if kind != ModelKind::Vk && loads.has_in_plane() {
        return Err(Error::IncompatibleLoads(format!(
            "{kind} has no in-plane unknowns; in-plane loads must vanish"
        )));
    }
    if bc == Constraints1D::ZeroAverage {
        let scale = f.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        for m in rigid_modes(mesh, kind) {
            let work = f.dot(&m);
            if work.abs() > 1e-10 * scale * m.amax().max(1.0) {
                return Err(Error::IncompatibleLoads(format!(
                    "load does work {work:.3e} on a mode removed by the zero-average conditions"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimized1D {
    pub field: Field1D,
    pub report: EnergyReport,
    pub stats: SolveStats,
}

/// Minimizes `J - load work` over fields satisfying `bc`.
///
/// The linearized model is a single SPD solve. The nonlinear and relaxed
/// models use L-BFGS preconditioned by a fixed quadratic model, started
/// from `start` or from zero.
pub fn minimize(
    kind: ModelKind,
    mesh: &IntervalMesh,
    q: &QuadForm2,
    c: &RelaxConstants,
    loads: &Load1D,
    bc: Constraints1D,
    opts: &SolverOptions,
    start: Option<&Field1D>,
) -> Result<Minimized1D> {
    let fvec = load_vector(mesh, loads)?;
    check_loads(mesh, kind, bc, loads, &fvec)?;
    let (fixed, rows) = constraint_system(mesh, bc, kind);
    let red = Reduction::new(6 * mesh.n_nodes(), &fixed, &rows)?;
    let consts = Constants::new(q);
    let k_model = if kind == ModelKind::Vk {
        assemble_quadratic(mesh, consts.c0, consts.c0 / 12.0, consts.k1 / 12.0)
    } else {
        assemble_quadratic(mesh, 0.0, 0.0, consts.k1 / 12.0)
    };
    let k_red = red.reduce_matrix(&k_model);
    let f_red = red.restrict(&fvec);

    let wrap = |coeffs: DVector<f64>| Field1D {
        mesh: mesh.clone(),
        coeffs,
        constraints: Some(bc),
    };

    let (coeffs, stats) = if kind == ModelKind::Lvk {
        let uf = solver::spd_solve(k_red, &f_red)?;
        let u = red.expand(&uf);
        let e = energy_lvk(&wrap(u.clone()), q).internal() - fvec.dot(&u);
        (
            u,
            SolveStats {
                iterations: 1,
                energy: e,
                residual: 0.0,
                monotone: true,
            },
        )
    } else {
        let chol = k_red
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("constraints leave a zero-energy mode".into()))?;
        let x0 = match start {
            Some(s) => {
                if s.coeffs.len() != fvec.len() {
                    return Err(Error::InvalidInput("start field on a different mesh".into()));
                }
                red.coordinates(&s.coeffs)
            }
            None => DVector::zeros(red.n_free()),
        };
        let obj = |uf: &DVector<f64>| {
            let field = wrap(red.expand(uf));
            let (parts, g) = match kind {
                ModelKind::Vk => assemble(&field, &VkDensity(Constants::new(q)), true),
                _ => assemble(
                    &field,
                    &CvkDensity {
                        base: Constants::new(q),
                        q,
                        c,
                    },
                    true,
                ),
            };
            let e = parts.iter().sum::<f64>() - fvec.dot(&field.coeffs);
            (e, red.restrict(&(g - &fvec)))
        };
        let (uf, st) = solver::lbfgs(obj, |g| chol.solve(g), x0, opts)?;
        (red.expand(&uf), st)
    };
    let field = wrap(coeffs);
    let base = energy(kind, &field, q, c);
    let work = fvec.dot(&field.coeffs);
    let report = EnergyReport::from_parts(
        [base.stretching, base.bending_out, base.bending_in, base.torsion],
        work,
    );
    Ok(Minimized1D {
        field,
        report,
        stats,
    })
}
