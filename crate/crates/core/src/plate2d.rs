//! Scaled plate energies on the unit strip `S = I × (-1/2, 1/2)`.
//!
//! In-plane displacement `y` is bilinear. Out-of-plane displacement `w` uses
//! the bicubic Bogner–Fox–Schmit element with nodal unknowns
//! `(w, ∂1w, ∂2w, ∂12w)`. Node `(i, j)` has index `n = i (ny + 1) + j`; its
//! `y` unknowns sit at `2n, 2n + 1` and its `w` unknowns at `2N + 4n + k`
//! with `N` the number of nodes.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite;
use crate::profile::Profile;
use crate::quadform::{QuadForm2, SymMat2, SQRT_2};
use crate::quadrature::GaussRule;
use crate::reduction::Reduction;
use crate::ribbon1d::{Component, Load1D};
use crate::solver::{self, SolveStats, SolverOptions};

const QUAD_POINTS: usize = 4;
const LOAD_POINTS: usize = 6;
const NLOC: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateKind {
    /// `J_ε^ben - work` with `y = 0`.
    Lvk,
    /// `J_ε^ext + J_ε^ben - work`.
    Vk,
    /// `J_ε^ben + W∫(det ∇²_ε w)² - work` with `y = 0`.
    CvkPenalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraints2D {
    /// `∫w = ∫∇w = 0`, `∫y = 0`, `∫(∂1y2 - ∂2y1) = 0`.
    ZeroAverage,
    /// Every unknown on the edges `x1 = ±ℓ/2` vanishes.
    Clamped,
}

/// Tensor-product mesh of `nx × ny` equal rectangles on `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectMesh {
    pub ell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectMesh {
    pub fn new(ell: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidMesh(format!("length must be positive, got {ell}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidMesh(format!("need nx, ny ≥ 2, got {nx} × {ny}")));
        }
        Ok(Self { ell, nx, ny })
    }

    pub fn hx(&self) -> f64 {
        self.ell / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_dofs(&self) -> usize {
        6 * self.n_nodes()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            -0.5 * self.ell + i as f64 * self.hx(),
            -0.5 + j as f64 * self.hy(),
        )
    }

    pub fn y_dof(&self, n: usize, a: usize) -> usize {
        2 * n + a
    }

    /// `k`: 0 value, 1 `∂1`, 2 `∂2`, 3 `∂12`.
    pub fn w_dof(&self, n: usize, k: usize) -> usize {
        2 * self.n_nodes() + 4 * n + k
    }

    pub fn n_elems(&self) -> usize {
        self.nx * self.ny
    }

    /// Element `(i, j)` from its linear index.
    pub fn elem(&self, e: usize) -> (usize, usize) {
        (e / self.ny, e % self.ny)
    }

    /// Local-to-global map: `[y (corner, comp) ×8, w (corner, kind) ×16]`,
    /// corners ordered `(0,0), (1,0), (0,1), (1,1)`.
    pub fn element_dofs(&self, e: usize) -> [usize; NLOC] {
        let (i, j) = self.elem(e);
        let mut d = [0usize; NLOC];
        for c in 0..4 {
            let n = self.node(i + c % 2, j + c / 2);
            d[2 * c] = self.y_dof(n, 0);
            d[2 * c + 1] = self.y_dof(n, 1);
            for k in 0..4 {
                d[8 + 4 * c + k] = self.w_dof(n, k);
            }
        }
        d
    }

    /// Element index and local coordinates of `(x1, x2)`.
    pub fn locate(&self, x1: f64, x2: f64) -> Result<(usize, f64, f64)> {
        let tol = 1e-12;
        let u = (x1 + 0.5 * self.ell) / self.hx();
        let v = (x2 + 0.5) / self.hy();
        if !(u >= -tol && u <= self.nx as f64 + tol && v >= -tol && v <= self.ny as f64 + tol) {
            return Err(Error::OutOfDomain { x1, x2 });
        }
        let i = (u.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (v.floor().max(0.0) as usize).min(self.ny - 1);
        Ok((
            i * self.ny + j,
            (u - i as f64).clamp(0.0, 1.0),
            (v - j as f64).clamp(0.0, 1.0),
        ))
    }
}

/// Raw (unscaled) derivatives of `(y, w)` at a point of `S`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Kinematics {
    pub y: [f64; 2],
    /// `grad_y[a][b] = ∂_b y_a`.
    pub grad_y: [[f64; 2]; 2],
    pub w: f64,
    pub grad_w: [f64; 2],
    /// `(∂11w, ∂12w, ∂22w)`.
    pub hess_w: [f64; 3],
}

/// Scaled operators at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledOps {
    pub strain: SymMat2,
    pub grad: [f64; 2],
    pub hess: SymMat2,
}

impl ScaledOps {
    pub fn from_kinematics(k: &Kinematics, eps: f64) -> Self {
        let g = &k.grad_y;
        Self {
            strain: SymMat2::new(
                g[0][0],
                (g[1][0] + g[0][1]) / (2.0 * eps),
                g[1][1] / (eps * eps),
            ),
            grad: [k.grad_w[0], k.grad_w[1] / eps],
            hess: SymMat2::new(k.hess_w[0], k.hess_w[1] / eps, k.hess_w[2] / (eps * eps)),
        }
    }

    /// `Eᵉy + ½ ∇_ε w ⊗ ∇_ε w`.
    pub fn membrane(&self) -> SymMat2 {
        let g = self.grad;
        self.strain + SymMat2::new(0.5 * g[0] * g[0], 0.5 * g[0] * g[1], 0.5 * g[1] * g[1])
    }
}

/// Anything that can report plate kinematics on `S`.
pub trait PlateKinematics: Sync {
    fn eps(&self) -> f64;
    fn ell(&self) -> f64;
    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics>;

    fn ops(&self, x1: f64, x2: f64) -> Result<ScaledOps> {
        Ok(ScaledOps::from_kinematics(&self.kinematics(x1, x2)?, self.eps()))
    }
}

/// Tensor Gauss rule on a uniform `cells_x × cells_y` partition of `S`.
#[derive(Debug, Clone)]
pub struct StripQuadrature {
    pub points: Vec<(f64, f64, f64)>,
}

impl StripQuadrature {
    pub fn new(ell: f64, cells_x: usize, cells_y: usize, order: usize) -> Self {
        let g = GaussRule::new(order);
        let hx = ell / cells_x as f64;
        let hy = 1.0 / cells_y as f64;
        let mut points = Vec::with_capacity(cells_x * cells_y * order * order);
        for i in 0..cells_x {
            let a = -0.5 * ell + i as f64 * hx;
            for j in 0..cells_y {
                let c = -0.5 + j as f64 * hy;
                for (x1, w1) in g.on(a, a + hx) {
                    for (x2, w2) in g.on(c, c + hy) {
                        points.push((x1, x2, w1 * w2));
                    }
                }
            }
        }
        Self { points }
    }

    /// The element quadrature used by the plate solver.
    pub fn for_mesh(mesh: &RectMesh) -> Self {
        Self::new(mesh.ell, mesh.nx, mesh.ny, QUAD_POINTS)
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> Result<f64> + Sync) -> Result<f64> {
        let vals: Vec<f64> = self
            .points
            .par_iter()
            .map(|&(x1, x2, w)| f(x1, x2).map(|v| w * v))
            .collect::<Result<_>>()?;
        Ok(vals.iter().sum())
    }
}

/// `½∫_S Q2(Eᵉy + ½∇_εw ⊗ ∇_εw)`.
pub fn energy_ext_on(f: &dyn PlateKinematics, q: &QuadForm2, quad: &StripQuadrature) -> Result<f64> {
    quad.integrate(|x1, x2| Ok(0.5 * q.eval(&f.ops(x1, x2)?.membrane())))
}

/// `(1/24)∫_S Q2(∇²_ε w)`.
pub fn energy_ben_on(f: &dyn PlateKinematics, q: &QuadForm2, quad: &StripQuadrature) -> Result<f64> {
    quad.integrate(|x1, x2| Ok(q.eval(&f.ops(x1, x2)?.hess) / 24.0))
}

/// `weight · ∫_S (det ∇²_ε w)²`.
pub fn det_penalty_on(f: &dyn PlateKinematics, weight: f64, quad: &StripQuadrature) -> Result<f64> {
    Ok(weight * quad.integrate(|x1, x2| Ok(f.ops(x1, x2)?.hess.det().powi(2)))?)
}

/// `max |det ∇²_ε w|` over the quadrature points.
pub fn det_max_on(f: &dyn PlateKinematics, quad: &StripQuadrature) -> Result<f64> {
    let v: Vec<f64> = quad
        .points
        .par_iter()
        .map(|&(x1, x2, _)| f.ops(x1, x2).map(|o| o.hess.det().abs()))
        .collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// Discrete plate state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPlateField {
    pub mesh: RectMesh,
    pub eps: f64,
    pub coeffs: DVector<f64>,
}

/// Shape function values at one point: `y[c] = (φ, ∂1φ, ∂2φ)` and
/// `w[4c + k] = (ψ, ∂1ψ, ∂2ψ, ∂11ψ, ∂12ψ, ∂22ψ)`.
struct Shapes {
    y: [[f64; 3]; 4],
    w: [[f64; 6]; 16],
}

fn shapes(s: f64, t: f64, hx: f64, hy: f64) -> Shapes {
    let lx = hermite::linear(s, hx);
    let ly = hermite::linear(t, hy);
    let cx = hermite::cubic(s, hx);
    let cy = hermite::cubic(t, hy);
    let mut out = Shapes {
        y: [[0.0; 3]; 4],
        w: [[0.0; 6]; 16],
    };
    for c in 0..4 {
        let (a, b) = (c % 2, c / 2);
        out.y[c] = [lx[0][a] * ly[0][b], lx[1][a] * ly[0][b], lx[0][a] * ly[1][b]];
        for k in 0..4 {
            let (kx, ky) = (k % 2, k / 2);
            let (ix, iy) = (2 * a + kx, 2 * b + ky);
            out.w[4 * c + k] = [
                cx[0][ix] * cy[0][iy],
                cx[1][ix] * cy[0][iy],
                cx[0][ix] * cy[1][iy],
                cx[2][ix] * cy[0][iy],
                cx[1][ix] * cy[1][iy],
                cx[0][ix] * cy[2][iy],
            ];
        }
    }
    out
}

impl ScaledPlateField {
    pub fn zeros(mesh: &RectMesh, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            mesh: *mesh,
            eps,
            coeffs: DVector::zeros(mesh.n_dofs()),
        })
    }

    pub fn from_coeffs(mesh: &RectMesh, eps: f64, coeffs: DVector<f64>) -> Result<Self> {
        check_eps(eps)?;
        if coeffs.len() != mesh.n_dofs() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                mesh.n_dofs(),
                coeffs.len()
            )));
        }
        Ok(Self {
            mesh: *mesh,
            eps,
            coeffs,
        })
    }

    /// Nodal interpolation: `y`, `w`, `∂1w`, `∂2w`, `∂12w` at every node.
    pub fn interpolate(mesh: &RectMesh, src: &dyn PlateKinematics) -> Result<Self> {
        let mut f = Self::zeros(mesh, src.eps())?;
        let mut mixed = vec![0.0; mesh.n_nodes()];
        let mut kin = Vec::with_capacity(mesh.n_nodes());
        for i in 0..=mesh.nx {
            for j in 0..=mesh.ny {
                let (x1, x2) = mesh.coords(i, j);
                kin.push((mesh.node(i, j), src.kinematics(x1, x2)?));
            }
        }
        for (n, k) in kin {
            f.coeffs[mesh.y_dof(n, 0)] = k.y[0];
            f.coeffs[mesh.y_dof(n, 1)] = k.y[1];
            f.coeffs[mesh.w_dof(n, 0)] = k.w;
            f.coeffs[mesh.w_dof(n, 1)] = k.grad_w[0];
            f.coeffs[mesh.w_dof(n, 2)] = k.grad_w[1];
            mixed[n] = k.hess_w[1];
        }
        for (n, v) in mixed.into_iter().enumerate() {
            f.coeffs[mesh.w_dof(n, 3)] = v;
        }
        Ok(f)
    }

    fn local(&self, e: usize) -> [f64; NLOC] {
        let d = self.mesh.element_dofs(e);
        d.map(|i| self.coeffs[i])
    }
}

impl PlateKinematics for ScaledPlateField {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn ell(&self) -> f64 {
        self.mesh.ell
    }

    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
        let (e, s, t) = self.mesh.locate(x1, x2)?;
        let u = self.local(e);
        let sh = shapes(s, t, self.mesh.hx(), self.mesh.hy());
        let mut k = Kinematics::default();
        for c in 0..4 {
            for a in 0..2 {
                let v = u[2 * c + a];
                k.y[a] += sh.y[c][0] * v;
                k.grad_y[a][0] += sh.y[c][1] * v;
                k.grad_y[a][1] += sh.y[c][2] * v;
            }
        }
        for (m, row) in sh.w.iter().enumerate() {
            let v = u[8 + m];
            k.w += row[0] * v;
            k.grad_w[0] += row[1] * v;
            k.grad_w[1] += row[2] * v;
            k.hess_w[0] += row[3] * v;
            k.hess_w[1] += row[4] * v;
            k.hess_w[2] += row[5] * v;
        }
        Ok(k)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// Scaled operators of the interpolants at a point of `S`.
pub fn ops_at(f: &ScaledPlateField, x1: f64, x2: f64) -> Result<ScaledOps> {
    f.ops(x1, x2)
}

pub fn energy_ben(f: &ScaledPlateField, q: &QuadForm2) -> f64 {
    let (_, ben, _) = element_energies(f, q, 0.0);
    ben
}

pub fn energy_ext(f: &ScaledPlateField, q: &QuadForm2) -> f64 {
    let (ext, _, _) = element_energies(f, q, 0.0);
    ext
}

/// `weight · ∫_S (det ∇²_ε w)²`.
pub fn det_penalty(f: &ScaledPlateField, weight: f64) -> f64 {
    weight * element_energies(f, &unit_form(), 1.0).2
}

fn unit_form() -> QuadForm2 {
    QuadForm2::new(nalgebra::Matrix3::identity()).expect("identity is positive definite")
}

/// Linear maps from local unknowns to the scaled operators at each
/// quadrature point of a reference element, in the order
/// `(E11, E22, E12, g1, g2, H11, H22, H12)`.
struct OpTable {
    rows: Vec<[[f64; NLOC]; 8]>,
    weights: Vec<f64>,
}

impl OpTable {
    fn new(mesh: &RectMesh, eps: f64, order: usize) -> Self {
        let g = GaussRule::new(order);
        let (hx, hy) = (mesh.hx(), mesh.hy());
        let mut rows = Vec::new();
        let mut weights = Vec::new();
        for (s, ws) in g.on(0.0, 1.0) {
            for (t, wt) in g.on(0.0, 1.0) {
                let sh = shapes(s, t, hx, hy);
                let mut r = [[0.0; NLOC]; 8];
                for c in 0..4 {
                    r[0][2 * c] = sh.y[c][1];
                    r[1][2 * c + 1] = sh.y[c][2] / (eps * eps);
                    r[2][2 * c] = sh.y[c][2] / (2.0 * eps);
                    r[2][2 * c + 1] = sh.y[c][1] / (2.0 * eps);
                }
                for m in 0..16 {
                    let p = sh.w[m];
                    r[3][8 + m] = p[1];
                    r[4][8 + m] = p[2] / eps;
                    r[5][8 + m] = p[3];
                    r[6][8 + m] = p[5] / (eps * eps);
                    r[7][8 + m] = p[4] / eps;
                }
                rows.push(r);
                weights.push(ws * wt * hx * hy);
            }
        }
        Self { rows, weights }
    }
}

fn dot(a: &[f64; NLOC], u: &[f64; NLOC]) -> f64 {
    a.iter().zip(u).map(|(x, y)| x * y).sum()
}

/// `(J_ext, J_ben, ∫det²)` by element quadrature.
fn element_energies(f: &ScaledPlateField, q: &QuadForm2, det_weight: f64) -> (f64, f64, f64) {
    let table = OpTable::new(&f.mesh, f.eps, QUAD_POINTS);
    let vals: Vec<[f64; 3]> = (0..f.mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let u = f.local(e);
            let mut acc = [0.0; 3];
            for (r, &wq) in table.rows.iter().zip(&table.weights) {
                let o: Vec<f64> = r.iter().map(|row| dot(row, &u)).collect();
                let m = SymMat2::new(
                    o[0] + 0.5 * o[3] * o[3],
                    o[2] + 0.5 * o[3] * o[4],
                    o[1] + 0.5 * o[4] * o[4],
                );
                let h = SymMat2::new(o[5], o[7], o[6]);
                acc[0] += wq * 0.5 * q.eval(&m);
                acc[1] += wq * q.eval(&h) / 24.0;
                if det_weight != 0.0 {
                    acc[2] += wq * h.det().powi(2);
                }
            }
            acc
        })
        .collect();
    vals.iter().fold((0.0, 0.0, 0.0), |s, v| (s.0 + v[0], s.1 + v[1], s.2 + v[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianMode {
    Exact,
    GaussNewton,
}

/// Which terms enter the objective and with what weights.
#[derive(Debug, Clone, Copy)]
struct Objective {
    ext: bool,
    det_weight: f64,
    hessian: HessianMode,
}

/// Energy, gradient and (optionally) Hessian of the internal energy.
fn assemble(
    f: &ScaledPlateField,
    q: &QuadForm2,
    table: &OpTable,
    obj: Objective,
    want_hess: bool,
) -> (f64, DVector<f64>, Option<DMatrix<f64>>) {
    let rep = q.rep();
    let n = f.mesh.n_dofs();
    type Local = (f64, [f64; NLOC], Option<Box<[[f64; NLOC]; NLOC]>>);
    let locals: Vec<Local> = (0..f.mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let u = f.local(e);
            let mut en = 0.0;
            let mut g = [0.0; NLOC];
            let mut h = if want_hess {
                Some(Box::new([[0.0; NLOC]; NLOC]))
            } else {
                None
            };
            for (r, &wq) in table.rows.iter().zip(&table.weights) {
                let o: [f64; 8] = std::array::from_fn(|k| dot(&r[k], &u));
                // bending: v = (H11, H22, √2 H12), density vᵀRv / 24
                let vb = Vector3::new(o[5], o[6], SQRT_2 * o[7]);
                let sb = rep * vb;
                en += wq * vb.dot(&sb) / 24.0;
                let db: [&[f64; NLOC]; 3] = [&r[5], &r[6], &r[7]];
                let scale_b = [1.0, 1.0, SQRT_2];
                for k in 0..3 {
                    let c = wq * sb[k] * scale_b[k] / 12.0;
                    for j in 0..NLOC {
                        g[j] += c * db[k][j];
                    }
                }
                if let Some(h) = h.as_mut() {
                    for a in 0..3 {
                        for b in 0..3 {
                            let c = wq * rep[(a, b)] * scale_b[a] * scale_b[b] / 12.0;
                            if c == 0.0 {
                                continue;
                            }
                            for i in 0..NLOC {
                                let ci = c * db[a][i];
                                if ci == 0.0 {
                                    continue;
                                }
                                for j in 0..NLOC {
                                    h[i][j] += ci * db[b][j];
                                }
                            }
                        }
                    }
                }
                if obj.ext {
                    let (g1, g2) = (o[3], o[4]);
                    let vm = Vector3::new(
                        o[0] + 0.5 * g1 * g1,
                        o[1] + 0.5 * g2 * g2,
                        SQRT_2 * (o[2] + 0.5 * g1 * g2),
                    );
                    let sm = rep * vm;
                    en += wq * 0.5 * vm.dot(&sm);
                    // rows of dv/du
                    let mut dv = [[0.0; NLOC]; 3];
                    for j in 0..NLOC {
                        dv[0][j] = r[0][j] + g1 * r[3][j];
                        dv[1][j] = r[1][j] + g2 * r[4][j];
                        dv[2][j] = SQRT_2 * (r[2][j] + 0.5 * (g1 * r[4][j] + g2 * r[3][j]));
                    }
                    for k in 0..3 {
                        for j in 0..NLOC {
                            g[j] += wq * sm[k] * dv[k][j];
                        }
                    }
                    if let Some(h) = h.as_mut() {
                        for a in 0..3 {
                            for b in 0..3 {
                                let c = wq * rep[(a, b)];
                                for i in 0..NLOC {
                                    let ci = c * dv[a][i];
                                    if ci == 0.0 {
                                        continue;
                                    }
                                    for j in 0..NLOC {
                                        h[i][j] += ci * dv[b][j];
                                    }
                                }
                            }
                        }
                        let (s0, s1, s2) = (wq * sm[0], wq * sm[1], wq * sm[2] * SQRT_2 * 0.5);
                        for i in 8..NLOC {
                            for j in 8..NLOC {
                                h[i][j] += s0 * r[3][i] * r[3][j]
                                    + s1 * r[4][i] * r[4][j]
                                    + s2 * (r[3][i] * r[4][j] + r[4][i] * r[3][j]);
                            }
                        }
                    }
                }
                if obj.det_weight > 0.0 {
                    let (h11, h22, h12) = (o[5], o[6], o[7]);
                    let d = h11 * h22 - h12 * h12;
                    let wd = obj.det_weight * wq;
                    en += wd * d * d;
                    let mut dd = [0.0; NLOC];
                    for j in 8..NLOC {
                        dd[j] = h22 * r[5][j] + h11 * r[6][j] - 2.0 * h12 * r[7][j];
                        g[j] += 2.0 * wd * d * dd[j];
                    }
                    if let Some(h) = h.as_mut() {
                        let exact = obj.hessian == HessianMode::Exact;
                        for i in 8..NLOC {
                            for j in 8..NLOC {
                                let mut v = dd[i] * dd[j];
                                if exact {
                                    v += d
                                        * (r[5][i] * r[6][j] + r[6][i] * r[5][j]
                                            - 2.0 * r[7][i] * r[7][j]);
                                }
                                h[i][j] += 2.0 * wd * v;
                            }
                        }
                    }
                }
            }
            (en, g, h)
        })
        .collect();
    let mut energy = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = if want_hess {
        Some(DMatrix::zeros(n, n))
    } else {
        None
    };
    for (e, (en, g, h)) in locals.into_iter().enumerate() {
        energy += en;
        let d = f.mesh.element_dofs(e);
        for i in 0..NLOC {
            grad[d[i]] += g[i];
        }
        if let (Some(hg), Some(h)) = (hess.as_mut(), h) {
            for i in 0..NLOC {
                for j in 0..NLOC {
                    hg[(d[i], d[j])] += h[i][j];
                }
            }
        }
    }
    (energy, grad, hess)
}

/// Gradient of `J_ext + J_ben` (or `J_ben` alone) plus an optional
/// determinant penalty, with respect to every coefficient.
pub fn plate_gradient(f: &ScaledPlateField, q: &QuadForm2, with_ext: bool, det_weight: f64) -> (f64, DVector<f64>) {
    let table = OpTable::new(&f.mesh, f.eps, QUAD_POINTS);
    let obj = Objective {
        ext: with_ext,
        det_weight,
        hessian: HessianMode::Exact,
    };
    let (e, g, _) = assemble(f, q, &table, obj, false);
    (e, g)
}

/// Transversely invariant loads lifted to the strip. A distributed torque
/// `m` acts through the density `12 x2 m / ε` on `w`, so that its work on
/// `w + ε x2 θ` is `∫ m θ`; point loads act along the line `x1 = const`.
pub fn load_vector(mesh: &RectMesh, eps: f64, loads: &Load1D) -> Result<DVector<f64>> {
    let mut f = DVector::zeros(mesh.n_dofs());
    let g = GaussRule::new(LOAD_POINTS);
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let nonzero = !(loads.q_w.is_zero()
        && loads.q_xi1.is_zero()
        && loads.q_xi2.is_zero()
        && loads.m_theta.is_zero());
    if nonzero {
        for e in 0..mesh.n_elems() {
            let (i, j) = mesh.elem(e);
            let (x1a, x2a) = mesh.coords(i, j);
            let d = mesh.element_dofs(e);
            for (s, ws) in g.on(0.0, 1.0) {
                let x1 = x1a + s * hx;
                let qw = loads.q_w.value(x1);
                let m = loads.m_theta.value(x1);
                let q1 = loads.q_xi1.value(x1);
                let q2 = loads.q_xi2.value(x1);
                for (t, wt) in g.on(0.0, 1.0) {
                    let x2 = x2a + t * hy;
                    let wq = ws * wt * hx * hy;
                    let sh = shapes(s, t, hx, hy);
                    let pw = qw + 12.0 * x2 * m / eps;
                    for c in 0..4 {
                        f[d[2 * c]] += wq * q1 * sh.y[c][0];
                        f[d[2 * c + 1]] += wq * q2 * sh.y[c][0];
                    }
                    for k in 0..16 {
                        f[d[8 + k]] += wq * pw * sh.w[k][0];
                    }
                }
            }
        }
    }
    for p in &loads.point_loads {
        for jy in 0..mesh.ny {
            let (_, x2a) = mesh.coords(0, jy);
            for (t, wt) in g.on(0.0, 1.0) {
                let x2 = x2a + t * hy;
                let (e, s, tt) = mesh.locate(p.location, x2)?;
                let d = mesh.element_dofs(e);
                let sh = shapes(s, tt, hx, hy);
                let wq = wt * hy * p.magnitude;
                match p.component {
                    Component::W => (0..16).for_each(|k| f[d[8 + k]] += wq * sh.w[k][0]),
                    Component::Theta => (0..16)
                        .for_each(|k| f[d[8 + k]] += wq * 12.0 * x2 / eps * sh.w[k][0]),
                    Component::Xi1 => (0..4).for_each(|c| f[d[2 * c]] += wq * sh.y[c][0]),
                    Component::Xi2 => (0..4).for_each(|c| f[d[2 * c + 1]] += wq * sh.y[c][0]),
                }
            }
        }
    }
    Ok(f)
}

/// Dense rows `∫w, ∫∂1w, ∫∂2w` and, when `with_y`, `∫y1, ∫y2, ∫(∂1y2 - ∂2y1)`.
pub fn average_rows(mesh: &RectMesh, with_y: bool) -> Vec<Vec<f64>> {
    let n = mesh.n_dofs();
    let nrows = if with_y { 6 } else { 3 };
    let mut rows = vec![vec![0.0; n]; nrows];
    let g = GaussRule::new(QUAD_POINTS);
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let mut ref_rows = [[0.0; NLOC]; 6];
    for (s, ws) in g.on(0.0, 1.0) {
        for (t, wt) in g.on(0.0, 1.0) {
            let wq = ws * wt * hx * hy;
            let sh = shapes(s, t, hx, hy);
            for m in 0..16 {
                ref_rows[0][8 + m] += wq * sh.w[m][0];
                ref_rows[1][8 + m] += wq * sh.w[m][1];
                ref_rows[2][8 + m] += wq * sh.w[m][2];
            }
            for c in 0..4 {
                ref_rows[3][2 * c] += wq * sh.y[c][0];
                ref_rows[4][2 * c + 1] += wq * sh.y[c][0];
                ref_rows[5][2 * c + 1] += wq * sh.y[c][1];
                ref_rows[5][2 * c] -= wq * sh.y[c][2];
            }
        }
    }
    for e in 0..mesh.n_elems() {
        let d = mesh.element_dofs(e);
        for (r, row) in rows.iter_mut().enumerate() {
            for j in 0..NLOC {
                row[d[j]] += ref_rows[r][j];
            }
        }
    }
    rows
}

/// Coefficient vectors of affine `w` and rigid in-plane motions.
pub fn null_modes(mesh: &RectMesh, with_y: bool) -> Vec<DVector<f64>> {
    let n = mesh.n_dofs();
    let mut modes = vec![DVector::zeros(n); if with_y { 6 } else { 3 }];
    for i in 0..=mesh.nx {
        for j in 0..=mesh.ny {
            let nd = mesh.node(i, j);
            let (x1, x2) = mesh.coords(i, j);
            modes[0][mesh.w_dof(nd, 0)] = 1.0;
            modes[1][mesh.w_dof(nd, 0)] = x1;
            modes[1][mesh.w_dof(nd, 1)] = 1.0;
            modes[2][mesh.w_dof(nd, 0)] = x2;
            modes[2][mesh.w_dof(nd, 2)] = 1.0;
            if with_y {
                modes[3][mesh.y_dof(nd, 0)] = 1.0;
                modes[4][mesh.y_dof(nd, 1)] = 1.0;
                modes[5][mesh.y_dof(nd, 0)] = -x2;
                modes[5][mesh.y_dof(nd, 1)] = x1;
            }
        }
    }
    modes
}

/// Fixed unknowns and dense rows for the given model and boundary treatment.
pub fn constraint_system(mesh: &RectMesh, kind: PlateKind, bc: Constraints2D) -> (Vec<usize>, Vec<Vec<f64>>) {
    let with_y = kind == PlateKind::Vk;
    let mut fixed: Vec<usize> = if with_y {
        Vec::new()
    } else {
        (0..2 * mesh.n_nodes()).collect()
    };
    let rows = match bc {
        Constraints2D::ZeroAverage => average_rows(mesh, with_y),
        Constraints2D::Clamped => {
            for i in [0, mesh.nx] {
                for j in 0..=mesh.ny {
                    let nd = mesh.node(i, j);
                    if with_y {
                        fixed.extend([mesh.y_dof(nd, 0), mesh.y_dof(nd, 1)]);
                    }
                    fixed.extend((0..4).map(|k| mesh.w_dof(nd, k)));
                }
            }
            Vec::new()
        }
    };
    (fixed, rows)
}

/// Removes the components of `u` that violate the zero-average rows by
/// adding null modes: `u ← u - N (C N)⁻¹ C u`.
pub fn project_zero_average(f: &mut ScaledPlateField, with_y: bool) -> Result<()> {
    let rows = average_rows(&f.mesh, with_y);
    let modes = null_modes(&f.mesh, with_y);
    let m = rows.len();
    let cn = DMatrix::from_fn(m, m, |i, j| {
        rows[i].iter().zip(modes[j].iter()).map(|(a, b)| a * b).sum::<f64>()
    });
    let cu = DVector::from_fn(m, |i, _| {
        rows[i].iter().zip(f.coeffs.iter()).map(|(a, b)| a * b).sum::<f64>()
    });
    let a = cn
        .lu()
        .solve(&cu)
        .ok_or_else(|| Error::SingularSystem("null-mode projection".into()))?;
    for (k, mode) in modes.iter().enumerate() {
        f.coeffs.axpy(-a[k], mode, 1.0);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateOptions {
    #[serde(default)]
    pub solver: SolverOptions,
    /// Continuation sequence for the determinant penalty.
    #[serde(default = "default_weights")]
    pub penalty_weights: Vec<f64>,
    #[serde(default = "default_hessian")]
    pub hessian: HessianMode,
}

fn default_weights() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

fn default_hessian() -> HessianMode {
    HessianMode::Exact
}

impl Default for PlateOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            penalty_weights: default_weights(),
            hessian: default_hessian(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateMinimized {
    pub field: ScaledPlateField,
    /// `J_ext + J_ben - work` (membrane term only for the nonlinear model),
    /// penalty excluded.
    pub energy: f64,
    pub ext: f64,
    pub ben: f64,
    pub load_work: f64,
    /// `∫(det ∇²_ε w)²` at the returned field.
    pub det_residual: f64,
    pub penalty_weight: f64,
    pub stats: SolveStats,
}

fn check_loads(mesh: &RectMesh, kind: PlateKind, bc: Constraints2D, loads: &Load1D, f: &DVector<f64>) -> Result<()> {
    if kind != PlateKind::Vk && loads.has_in_plane() {
        return Err(Error::IncompatibleLoads(
            "this model has no in-plane unknowns; in-plane loads must vanish".into(),
        ));
    }
    if bc == Constraints2D::ZeroAverage {
        let scale = f.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        for m in null_modes(mesh, kind == PlateKind::Vk) {
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

/// Minimizes the scaled plate energy minus load work.
pub fn minimize_plate(
    kind: PlateKind,
    mesh: &RectMesh,
    eps: f64,
    q: &QuadForm2,
    loads: &Load1D,
    bc: Constraints2D,
    opts: &PlateOptions,
) -> Result<PlateMinimized> {
    check_eps(eps)?;
    let fvec = load_vector(mesh, eps, loads)?;
    check_loads(mesh, kind, bc, loads, &fvec)?;
    let (fixed, rows) = constraint_system(mesh, kind, bc);
    let red = Reduction::new(mesh.n_dofs(), &fixed, &rows)?;
    let table = OpTable::new(mesh, eps, QUAD_POINTS);
    let f_red = red.restrict(&fvec);
    let wrap = |c: DVector<f64>| ScaledPlateField {
        mesh: *mesh,
        eps,
        coeffs: c,
    };
    let eval = |uf: &DVector<f64>, obj: Objective| {
        let field = wrap(red.expand(uf));
        let (e, g, _) = assemble(&field, q, &table, obj, false);
        (e - fvec.dot(&field.coeffs), red.restrict(&g) - &f_red)
    };
    let hess = |uf: &DVector<f64>, obj: Objective| {
        let field = wrap(red.expand(uf));
        let (_, _, h) = assemble(&field, q, &table, obj, true);
        red.reduce_matrix(&h.expect("requested"))
    };

    let (uf, stats, weight) = match kind {
        PlateKind::Lvk => {
            let obj = Objective {
                ext: false,
                det_weight: 0.0,
                hessian: opts.hessian,
            };
            let k = hess(&DVector::zeros(red.n_free()), obj);
            let uf = solver::spd_solve(k, &f_red)?;
            let e = eval(&uf, obj).0;
            (
                uf,
                SolveStats {
                    iterations: 1,
                    energy: e,
                    residual: 0.0,
                    monotone: true,
                },
                0.0,
            )
        }
        PlateKind::Vk => {
            let obj = Objective {
                ext: true,
                det_weight: 0.0,
                hessian: opts.hessian,
            };
            let (uf, st) = solver::newton(
                |u| eval(u, obj),
                |u| hess(u, obj),
                DVector::zeros(red.n_free()),
                &opts.solver,
            )?;
            (uf, st, 0.0)
        }
        PlateKind::CvkPenalty => {
            if opts.penalty_weights.is_empty() || opts.penalty_weights.iter().any(|&w| !(w > 0.0)) {
                return Err(Error::InvalidInput("penalty weights must be positive".into()));
            }
            let mut uf = DVector::zeros(red.n_free());
            let mut last = None;
            for &w in &opts.penalty_weights {
                let obj = Objective {
                    ext: false,
                    det_weight: w,
                    hessian: opts.hessian,
                };
                let (u, st) = solver::newton(|u| eval(u, obj), |u| hess(u, obj), uf, &opts.solver)?;
                uf = u;
                last = Some((st, w));
            }
            let (st, w) = last.expect("non-empty weights");
            (uf, st, w)
        }
    };
    let field = wrap(red.expand(&uf));
    let (ext, ben, det2) = element_energies(&field, q, 1.0);
    let ext = if kind == PlateKind::Vk { ext } else { 0.0 };
    let work = fvec.dot(&field.coeffs);
    Ok(PlateMinimized {
        energy: ext + ben - work,
        ext,
        ben,
        load_work: work,
        det_residual: det2,
        penalty_weight: weight,
        stats,
        field,
    })
}

/// Norms reported along ε-sweeps: `‖∂12w‖/ε`, `‖∂22w‖/ε²`, and the
/// transverse strain entries `‖E12‖`, `‖E22‖` of `Eᵉy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessDiagnostics {
    pub h12: f64,
    pub h22: f64,
    pub e12: f64,
    pub e22: f64,
}

pub fn compactness(f: &ScaledPlateField) -> CompactnessDiagnostics {
    let table = OpTable::new(&f.mesh, f.eps, QUAD_POINTS);
    let sums: Vec<[f64; 4]> = (0..f.mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let u = f.local(e);
            let mut a = [0.0; 4];
            for (r, &wq) in table.rows.iter().zip(&table.weights) {
                let v = [dot(&r[7], &u), dot(&r[6], &u), dot(&r[2], &u), dot(&r[1], &u)];
                for k in 0..4 {
                    a[k] += wq * v[k] * v[k];
                }
            }
            a
        })
        .collect();
    let t = sums.iter().fold([0.0; 4], |mut s, v| {
        for k in 0..4 {
            s[k] += v[k];
        }
        s
    });
    CompactnessDiagnostics {
        h12: t[0].sqrt(),
        h22: t[1].sqrt(),
        e12: t[2].sqrt(),
        e22: t[3].sqrt(),
    }
}

/// `w(x1, x2) = w(x1)` as plate kinematics.
pub struct TransverseInvariant<'a, P: Profile> {
    pub w: &'a P,
    pub eps: f64,
    pub ell: f64,
}

impl<P: Profile> PlateKinematics for TransverseInvariant<'_, P> {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn ell(&self) -> f64 {
        self.ell
    }

    fn kinematics(&self, x1: f64, _x2: f64) -> Result<Kinematics> {
        Ok(Kinematics {
            w: self.w.value(x1),
            grad_w: [self.w.derivative(x1, 1), 0.0],
            hess_w: [self.w.derivative(x1, 2), 0.0, 0.0],
            ..Kinematics::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_gradient;
    use crate::profile::Function1D;
    use crate::quadform::Material;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Poly<F: Fn(f64, f64) -> Kinematics + Sync>(F, f64);

    impl<F: Fn(f64, f64) -> Kinematics + Sync> PlateKinematics for Poly<F> {
        fn eps(&self) -> f64 {
            self.1
        }
        fn ell(&self) -> f64 {
            1.0
        }
        fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
            Ok((self.0)(x1, x2))
        }
    }

    fn iso() -> QuadForm2 {
        QuadForm2::isotropic(&Material::new(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn ops_examples() {
        let mesh = RectMesh::new(1.0, 4, 4).unwrap();
        for eps in [1.0, 0.3] {
            let f = ScaledPlateField::interpolate(
                &mesh,
                &Poly(
                    |x1, _| Kinematics {
                        w: x1 * x1,
                        grad_w: [2.0 * x1, 0.0],
                        hess_w: [2.0, 0.0, 0.0],
                        ..Kinematics::default()
                    },
                    eps,
                ),
            )
            .unwrap();
            let o = ops_at(&f, 0.13, -0.21).unwrap();
            assert!((o.hess.a11 - 2.0).abs() < 1e-12 && o.hess.a12.abs() < 1e-12 && o.hess.a22.abs() < 1e-12);

            let f = ScaledPlateField::interpolate(
                &mesh,
                &Poly(
                    |_, x2| Kinematics {
                        w: x2 * x2,
                        grad_w: [0.0, 2.0 * x2],
                        hess_w: [0.0, 0.0, 2.0],
                        ..Kinematics::default()
                    },
                    eps,
                ),
            )
            .unwrap();
            let o = ops_at(&f, 0.31, 0.07).unwrap();
            assert!((o.hess.a22 - 2.0 / (eps * eps)).abs() < 1e-11);

            let f = ScaledPlateField::interpolate(
                &mesh,
                &Poly(
                    |_, x2| Kinematics {
                        y: [x2, 0.0],
                        grad_y: [[0.0, 1.0], [0.0, 0.0]],
                        ..Kinematics::default()
                    },
                    eps,
                ),
            )
            .unwrap();
            let o = ops_at(&f, -0.2, 0.4).unwrap();
            assert!((o.strain.a12 - 0.5 / eps).abs() < 1e-12);
            assert!(o.strain.a11.abs() < 1e-14 && o.strain.a22.abs() < 1e-14);
        }
        let f = ScaledPlateField::zeros(&mesh, 0.5).unwrap();
        assert!(matches!(ops_at(&f, 0.0, 0.6), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn bending_of_invariant_profile() {
        let q = iso();
        let mesh = RectMesh::new(1.0, 6, 3).unwrap();
        let w = Function1D::poly(&[0.0, 0.0, 1.0, 0.5]);
        let mut last: Option<f64> = None;
        for eps in [1.0, 0.1, 0.01] {
            let f = ScaledPlateField::interpolate(&mesh, &TransverseInvariant { w: &w, eps, ell: 1.0 }).unwrap();
            let e = energy_ben(&f, &q);
            // w'' = 2 + 3x, ∫(w'')² = 4 + 9/12
            let exact = q.eval(&SymMat2::new(1.0, 0.0, 0.0)) * 4.75 / 24.0;
            assert!((e - exact).abs() < 1e-12, "{e} vs {exact}");
            if let Some(prev) = last {
                assert!((e - prev).abs() < 1e-13);
            }
            last = Some(e);
        }
    }

    #[test]
    fn det_penalty_of_twisted_profile() {
        let mesh = RectMesh::new(1.0, 8, 2).unwrap();
        let eps = 0.2;
        let src = Poly(
            move |x1, x2| {
                // w = x1² + ε x2 θ(x1) with θ = x1²/2, θ' = x1
                let th = 0.5 * x1 * x1;
                Kinematics {
                    w: x1 * x1 + eps * x2 * th,
                    grad_w: [2.0 * x1 + eps * x2 * x1, eps * th],
                    hess_w: [2.0 + eps * x2, eps * x1, 0.0],
                    ..Kinematics::default()
                }
            },
            eps,
        );
        let f = ScaledPlateField::interpolate(&mesh, &src).unwrap();
        // det = -θ'² = -x1², ∫x1⁴ over (-1/2, 1/2) = 1/80
        assert!((det_penalty(&f, 3.0) - 3.0 / 80.0).abs() < 1e-12);
        assert!((det_penalty(&f, 6.0) - 2.0 * det_penalty(&f, 3.0)).abs() < 1e-14);
    }

    #[test]
    fn element_and_generic_quadrature_agree() {
        let q = iso();
        let mesh = RectMesh::new(1.2, 5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = DVector::from_fn(mesh.n_dofs(), |_, _| rng.gen_range(-0.2..0.2));
        let f = ScaledPlateField::from_coeffs(&mesh, 0.3, c).unwrap();
        let quad = StripQuadrature::for_mesh(&mesh);
        let a = energy_ext(&f, &q);
        let b = energy_ext_on(&f, &q, &quad).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
        let fine = StripQuadrature::new(1.2, 20, 12, 6);
        let c2 = energy_ben_on(&f, &q, &fine).unwrap();
        assert!((energy_ben(&f, &q) - c2).abs() < 1e-10 * c2);
    }

    #[test]
    fn gradients_match_differences() {
        let q = iso();
        let mesh = RectMesh::new(1.0, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = DVector::from_fn(mesh.n_dofs(), |_, _| rng.gen_range(-0.1..0.1));
        let eps = 0.5;
        for (ext, w) in [(true, 0.0), (false, 10.0)] {
            let f = ScaledPlateField::from_coeffs(&mesh, eps, c.clone()).unwrap();
            let (_, g) = plate_gradient(&f, &q, ext, w);
            let fd = fd_gradient(
                |x| {
                    let ff = ScaledPlateField::from_coeffs(&mesh, eps, DVector::from_column_slice(x)).unwrap();
                    plate_gradient(&ff, &q, ext, w).0
                },
                c.as_slice(),
                1e-6,
            );
            let err = (g.clone() - DVector::from_vec(fd)).norm() / g.norm();
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let q = iso();
        let mesh = RectMesh::new(1.0, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = DVector::from_fn(mesh.n_dofs(), |_, _| rng.gen_range(-0.1..0.1));
        let eps = 0.7;
        let table = OpTable::new(&mesh, eps, QUAD_POINTS);
        let obj = Objective {
            ext: true,
            det_weight: 5.0,
            hessian: HessianMode::Exact,
        };
        let f = ScaledPlateField::from_coeffs(&mesh, eps, c.clone()).unwrap();
        let (_, _, h) = assemble(&f, &q, &table, obj, true);
        let h = h.unwrap();
        let dir = DVector::from_fn(c.len(), |_, _| rng.gen_range(-1.0..1.0));
        let t = 1e-6;
        let gp = assemble(&ScaledPlateField::from_coeffs(&mesh, eps, &c + &dir * t).unwrap(), &q, &table, obj, false).1;
        let gm = assemble(&ScaledPlateField::from_coeffs(&mesh, eps, &c - &dir * t).unwrap(), &q, &table, obj, false).1;
        let fd = (gp - gm) / (2.0 * t);
        let an = &h * &dir;
        assert!((fd - &an).norm() < 1e-6 * an.norm());
    }

    #[test]
    fn zero_loads_zero_field() {
        let q = iso();
        let mesh = RectMesh::new(1.0, 4, 2).unwrap();
        for kind in [PlateKind::Lvk, PlateKind::Vk, PlateKind::CvkPenalty] {
            let r = minimize_plate(kind, &mesh, 0.5, &q, &Load1D::default(), Constraints2D::ZeroAverage, &PlateOptions::default()).unwrap();
            assert_eq!(r.field.coeffs.amax(), 0.0);
            assert_eq!(r.energy, 0.0);
        }
    }

    #[test]
    fn projection_restores_averages() {
        let mesh = RectMesh::new(1.0, 4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = DVector::from_fn(mesh.n_dofs(), |_, _| rng.gen_range(-1.0..1.0));
        let mut f = ScaledPlateField::from_coeffs(&mesh, 0.5, c).unwrap();
        project_zero_average(&mut f, true).unwrap();
        for row in average_rows(&mesh, true) {
            let v: f64 = row.iter().zip(f.coeffs.iter()).map(|(a, b)| a * b).sum();
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn torque_load_work_matches_twist() {
        let mesh = RectMesh::new(1.0, 6, 4).unwrap();
        let eps = 0.1;
        let loads = Load1D {
            m_theta: Function1D::poly(&[0.0, 1.0]),
            ..Load1D::default()
        };
        let f = load_vector(&mesh, eps, &loads).unwrap();
        // w = ε x2 θ with θ = x1; work = ∫ m θ = ∫ x1² = 1/12
        let src = Poly(
            move |x1, x2| Kinematics {
                w: eps * x2 * x1,
                grad_w: [eps * x2, eps * x1],
                hess_w: [0.0, eps, 0.0],
                ..Kinematics::default()
            },
            eps,
        );
        let field = ScaledPlateField::interpolate(&mesh, &src).unwrap();
        assert!((f.dot(&field.coeffs) - 1.0 / 12.0).abs() < 1e-13);
    }
}
