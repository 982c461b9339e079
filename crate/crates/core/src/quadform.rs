//! Density-level algebra on symmetric 2×2 matrices.
//!
//! Quadratic forms are stored in the orthonormal basis `(e11, e22, √2·e12)`,
//! so the Frobenius product of two symmetric matrices is the Euclidean product
//! of their coordinate vectors. In that basis the determinant is the
//! indefinite form `vᵀ B v` with
//!
//! ```text
//!     | 0    1/2   0   |
//! B = | 1/2  0     0   |
//!     | 0    0   -1/2  |
//! ```
//!
//! which turns the relaxation constants `α±` into the extreme eigenvalues of
//! a symmetric pencil.

use nalgebra::{Matrix2, Matrix3, Matrix6, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Relative eigenvalue floor below which a form counts as degenerate.
const DEGENERACY_FLOOR: f64 = 1e-12;

/// Symmetric 2×2 matrix `(a11 a12; a12 a22)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn norm_sq(&self) -> f64 {
        self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMat2) -> f64 {
        self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(t * self.a11, t * self.a12, t * self.a22)
    }

    /// Coordinates `(a11, a22, √2·a12)`.
    pub fn to_voigt(&self) -> Vector3<f64> {
        Vector3::new(self.a11, self.a22, SQRT_2 * self.a12)
    }

    pub fn from_voigt(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[2] / SQRT_2, v[1])
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a11, self.a12, self.a12, self.a22)
    }
}

impl std::ops::Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, rhs: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 + rhs.a11, self.a12 + rhs.a12, self.a22 + rhs.a22)
    }
}

impl std::ops::Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, rhs: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 - rhs.a11, self.a12 - rhs.a12, self.a22 - rhs.a22)
    }
}

/// The determinant as a quadratic form in Voigt coordinates.
pub fn det_form() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, -0.5)
}

/// Isotropic Lamé pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
}

impl Material {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidMaterial(format!("mu must be positive, got {mu}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(Self { mu, lambda })
    }
}

/// Positive definite quadratic form on symmetric 2×2 matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm2 {
    rep: Matrix3<f64>,
}

/// Minimizer of `γ ↦ Q2(κ, τ; γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q1Min {
    pub value: f64,
    pub gamma_star: f64,
}

/// Minimizer of `(z1, z2) ↦ Q2(μ, z1; z2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q0Min {
    pub value: f64,
    pub z_star: (f64, f64),
}

impl QuadForm2 {
    /// Validates symmetry and positive definiteness of `rep`.
    pub fn new(rep: Matrix3<f64>) -> Result<Self> {
        if rep.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("quadratic form has non-finite entries".into()));
        }
        let scale = rep.norm();
        let asym = (rep - rep.transpose()).norm();
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = (rep + rep.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if !(min_eig > DEGENERACY_FLOOR * scale) {
            return Err(Error::NotPositiveDefinite { min_eig, scale });
        }
        Ok(Self { rep: sym })
    }

    /// `Q2(A) = 2μ|A|² + (2μλ/(2μ+λ)) (tr A)²`.
    pub fn isotropic(m: &Material) -> Result<Self> {
        let denom = 2.0 * m.mu + m.lambda;
        if denom == 0.0 {
            return Err(Error::InvalidMaterial("2μ + λ vanishes".into()));
        }
        let c = 2.0 * m.mu * m.lambda / denom;
        let t = Vector3::new(1.0, 1.0, 0.0);
        Self::new(Matrix3::identity() * (2.0 * m.mu) + t * t.transpose() * c)
    }

    pub fn rep(&self) -> &Matrix3<f64> {
        &self.rep
    }

    pub fn eval(&self, a: &SymMat2) -> f64 {
        let v = a.to_voigt();
        v.dot(&(self.rep * v))
    }

    /// Symmetric bilinear form `B(a, b)` with `B(a, a) = Q2(a)`.
    pub fn bilinear(&self, a: &SymMat2, b: &SymMat2) -> f64 {
        a.to_voigt().dot(&(self.rep * b.to_voigt()))
    }

    /// Gradient of `Q2` with respect to `(a11, a12, a22)`.
    pub fn gradient(&self, a: &SymMat2) -> (f64, f64, f64) {
        let g = self.rep * a.to_voigt() * 2.0;
        (g[0], SQRT_2 * g[2], g[1])
    }

    /// Coefficients `(gκ, gτ)` with `γ*(κ, τ) = gκ·κ + gτ·τ`.
    pub fn q1_gamma_coeffs(&self) -> (f64, f64) {
        let r = &self.rep;
        (-r[(1, 0)] / r[(1, 1)], -SQRT_2 * r[(1, 2)] / r[(1, 1)])
    }

    pub fn q1(&self, kappa: f64, tau: f64) -> Q1Min {
        let (gk, gt) = self.q1_gamma_coeffs();
        let gamma_star = gk * kappa + gt * tau;
        Q1Min {
            value: self.eval(&SymMat2::new(kappa, tau, gamma_star)),
            gamma_star,
        }
    }

    /// `Q1` as a 2×2 matrix acting on `(κ, τ)`.
    pub fn q1_matrix(&self) -> Matrix2<f64> {
        let r = &self.rep;
        let keep = [0usize, 2];
        let mut k = Matrix2::zeros();
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                k[(i, j)] = r[(a, b)] - r[(a, 1)] * r[(1, b)] / r[(1, 1)];
            }
        }
        // second coordinate is √2·τ
        k[(0, 1)] *= SQRT_2;
        k[(1, 0)] *= SQRT_2;
        k[(1, 1)] *= 2.0;
        k
    }

    fn q0_parts(&self) -> (f64, Vector2<f64>) {
        let r = &self.rep;
        let ee = Matrix2::new(r[(1, 1)], r[(1, 2)], r[(2, 1)], r[(2, 2)]);
        let e0 = Vector2::new(r[(1, 0)], r[(2, 0)]);
        // ee is a principal block of an SPD matrix
        let sol = ee.cholesky().expect("principal block of SPD form").solve(&e0);
        (r[(0, 0)] - e0.dot(&sol), -sol)
    }

    /// Coefficient `c0` with `Q0(μ) = c0·μ²`.
    pub fn q0_coeff(&self) -> f64 {
        self.q0_parts().0
    }

    /// `(ẑ1, ẑ2)` with `z*(μ) = μ·(ẑ1, ẑ2)`.
    pub fn q0_z_coeffs(&self) -> (f64, f64) {
        let (_, s) = self.q0_parts();
        // s = (γ-coordinate, √2·z1-coordinate)
        (s[1] / SQRT_2, s[0])
    }

    pub fn q0(&self, mu_strain: f64) -> Q0Min {
        let (z1, z2) = self.q0_z_coeffs();
        let z_star = (z1 * mu_strain, z2 * mu_strain);
        Q0Min {
            value: self.eval(&SymMat2::new(mu_strain, z_star.0, z_star.1)),
            z_star,
        }
    }

    /// Relaxation constants from the pencil `(Q2, det)`.
    ///
    /// With `Q2 = L Lᵀ`, `Q2 + α det ⪰ 0` iff `I + α L⁻¹ B L⁻ᵀ ⪰ 0`, so the
    /// admissible range of `α` is bounded by the reciprocal extreme
    /// eigenvalues of `L⁻¹ B L⁻ᵀ`.
    pub fn alpha_pm(&self) -> RelaxConstants {
        let chol = self.rep.cholesky().expect("validated positive definite");
        let l = chol.l();
        let linv = l.try_inverse().expect("triangular factor of SPD form");
        let c = linv * det_form() * linv.transpose();
        let c = (c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c).eigenvalues;
        RelaxConstants {
            alpha_plus: -1.0 / eig.min(),
            alpha_minus: 1.0 / eig.max(),
        }
    }

    pub fn relaxed(&self) -> RelaxedDensity {
        RelaxedDensity {
            q: *self,
            c: self.alpha_pm(),
        }
    }
}

/// `α⁺`, `α⁻` for a given `Q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxConstants {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
}

/// Which piece of the relaxed objective holds the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QbarBranch {
    /// Minimizer on the zero-determinant breakpoint `γ = τ²/κ`.
    Developable,
    /// Interior minimizer with `det M > 0`.
    Positive,
    /// Interior minimizer with `det M < 0` (includes `κ = 0`).
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbarMin {
    pub value: f64,
    pub gamma_star: f64,
    pub branch: QbarBranch,
    /// `(∂Q̄/∂κ, ∂Q̄/∂τ)` on the active branch.
    pub grad: (f64, f64),
}

/// `Q̄(κ, τ) = min_γ Q2(M) + α⁺(det M)⁺ + α⁻(det M)⁻` with `M = (κ τ; τ γ)`.
///
/// The objective is a convex piecewise quadratic in `γ` with one breakpoint;
/// the minimizer is found exactly.
pub fn qbar(q: &QuadForm2, c: &RelaxConstants, kappa: f64, tau: f64) -> QbarMin {
    let r = q.rep();
    let a = r[(1, 1)];
    let b = r[(1, 0)] * kappa + SQRT_2 * r[(1, 2)] * tau;
    let objective = |gamma: f64| {
        let m = SymMat2::new(kappa, tau, gamma);
        let d = m.det();
        q.eval(&m) + c.alpha_plus * d.max(0.0) + c.alpha_minus * (-d).max(0.0)
    };
    let q2_grad = |gamma: f64| {
        let (gk, gt, gg) = q.gradient(&SymMat2::new(kappa, tau, gamma));
        (gk, gt, gg)
    };

    let breakpoint = tau * tau / kappa;
    if kappa == 0.0 || !breakpoint.is_finite() {
        // det = -τ² for every γ
        let gamma_star = -b / a;
        let (gk, gt, _) = q2_grad(gamma_star);
        let branch = if tau == 0.0 {
            QbarBranch::Developable
        } else {
            QbarBranch::Negative
        };
        return QbarMin {
            value: objective(gamma_star),
            gamma_star,
            branch,
            grad: (gk - c.alpha_minus * gamma_star, gt + 2.0 * c.alpha_minus * tau),
        };
    }

    let gamma_pos = -(b + 0.5 * c.alpha_plus * kappa) / a;
    let gamma_neg = -(b - 0.5 * c.alpha_minus * kappa) / a;
    // det ≥ 0 iff κ(γ - γb) ≥ 0
    let side = |gamma: f64| kappa * (gamma - breakpoint);

    let mut best = (objective(breakpoint), breakpoint, QbarBranch::Developable);
    if side(gamma_pos) > 0.0 {
        let v = objective(gamma_pos);
        if v < best.0 {
            best = (v, gamma_pos, QbarBranch::Positive);
        }
    }
    if side(gamma_neg) < 0.0 {
        let v = objective(gamma_neg);
        if v < best.0 {
            best = (v, gamma_neg, QbarBranch::Negative);
        }
    }
    let (value, gamma_star, branch) = best;
    let (gk, gt, gg) = q2_grad(gamma_star);
    let grad = match branch {
        QbarBranch::Positive => (gk + c.alpha_plus * gamma_star, gt - 2.0 * c.alpha_plus * tau),
        QbarBranch::Negative => (gk - c.alpha_minus * gamma_star, gt + 2.0 * c.alpha_minus * tau),
        QbarBranch::Developable => (
            gk - gg * tau * tau / (kappa * kappa),
            gt + gg * 2.0 * tau / kappa,
        ),
    };
    QbarMin {
        value,
        gamma_star,
        branch,
        grad,
    }
}

/// `Q2` bundled with its relaxation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedDensity {
    pub q: QuadForm2,
    pub c: RelaxConstants,
}

impl RelaxedDensity {
    pub fn qbar(&self, kappa: f64, tau: f64) -> QbarMin {
        qbar(&self.q, &self.c, kappa, tau)
    }
}

/// Quadratic form on symmetric 3×3 matrices in the basis
/// `(f11, f22, f33, √2·f23, √2·f13, √2·f12)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm3 {
    rep: Matrix6<f64>,
}

impl QuadForm3 {
    /// Accepts a symmetric positive semidefinite representation.
    pub fn new(rep: Matrix6<f64>) -> Result<Self> {
        if rep.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("quadratic form has non-finite entries".into()));
        }
        let scale = rep.norm();
        let asym = (rep - rep.transpose()).norm();
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = (rep + rep.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig < -DEGENERACY_FLOOR * scale {
            return Err(Error::NotPositiveDefinite { min_eig, scale });
        }
        Ok(Self { rep: sym })
    }

    /// `Q3(F) = 2μ|F_sym|² + λ (tr F)²`.
    pub fn isotropic(m: &Material) -> Result<Self> {
        let mut s = nalgebra::Vector6::zeros();
        s[0] = 1.0;
        s[1] = 1.0;
        s[2] = 1.0;
        Self::new(Matrix6::identity() * (2.0 * m.mu) + s * s.transpose() * m.lambda)
    }

    pub fn rep(&self) -> &Matrix6<f64> {
        &self.rep
    }

    /// Evaluates at the symmetric matrix with the given entries
    /// `[f11, f22, f33, f23, f13, f12]`.
    pub fn eval(&self, f: &[f64; 6]) -> f64 {
        let v = nalgebra::Vector6::new(
            f[0],
            f[1],
            f[2],
            SQRT_2 * f[3],
            SQRT_2 * f[4],
            SQRT_2 * f[5],
        );
        v.dot(&(self.rep * v))
    }
}

/// Minimizes `Q3` over the third row and column: the Schur complement of
/// the `(f33, f23, f13)` block.
pub fn q2_from_q3(q3: &QuadForm3) -> Result<QuadForm2> {
    let r = q3.rep();
    let keep = [0usize, 1, 5];
    let elim = [2usize, 3, 4];
    let block = |rows: &[usize; 3], cols: &[usize; 3]| {
        Matrix3::from_fn(|i, j| r[(rows[i], cols[j])])
    };
    let kk = block(&keep, &keep);
    let ke = block(&keep, &elim);
    let ee = block(&elim, &elim);
    let chol = ee.cholesky().ok_or(Error::ReductionFailure)?;
    let min_diag = chol.l().diagonal().min();
    if !(min_diag * min_diag > DEGENERACY_FLOOR * ee.norm()) {
        return Err(Error::ReductionFailure);
    }
    let schur = kk - ke * chol.solve(&ke.transpose());
    QuadForm2::new((schur + schur.transpose()) * 0.5)
}

/// Closed forms for isotropic materials.
pub mod isotropic {
    use super::Material;

    pub fn young_modulus(m: &Material) -> f64 {
        m.mu * (2.0 * m.mu + 3.0 * m.lambda) / (m.mu + m.lambda)
    }

    pub fn bending_stiffness(m: &Material) -> f64 {
        m.mu * (m.lambda + m.mu) / (3.0 * (2.0 * m.mu + m.lambda))
    }

    pub fn q1_iso(m: &Material, kappa: f64, tau: f64) -> f64 {
        young_modulus(m) * kappa * kappa + 4.0 * m.mu * tau * tau
    }

    pub fn q0_iso(m: &Material, kappa: f64) -> f64 {
        young_modulus(m) * kappa * kappa
    }

    pub fn qbar_iso(m: &Material, kappa: f64, tau: f64) -> f64 {
        let d = bending_stiffness(m);
        if kappa.abs() > tau.abs() {
            let s = kappa * kappa + tau * tau;
            12.0 * d * s * s / (kappa * kappa)
        } else {
            12.0 * 4.0 * d * tau * tau
        }
    }

    /// `(α⁺, α⁻) = (4μ, 4μ(2μ+3λ)/(2μ+λ))`.
    pub fn alpha_iso(m: &Material) -> (f64, f64) {
        (
            4.0 * m.mu,
            4.0 * m.mu * (2.0 * m.mu + 3.0 * m.lambda) / (2.0 * m.mu + m.lambda),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::isotropic::*;
    use super::*;

    fn iso(mu: f64, lambda: f64) -> (Material, QuadForm2) {
        let m = Material::new(mu, lambda).unwrap();
        (m, QuadForm2::isotropic(&m).unwrap())
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn eval_isotropic_examples() {
        let (_, q) = iso(1.0, 1.0);
        assert!(close(q.eval(&SymMat2::identity()), 20.0 / 3.0, 1e-14));
        assert!(close(q.eval(&SymMat2::new(0.0, 1.0, 0.0)), 4.0, 1e-14));
        assert_eq!(q.eval(&SymMat2::zero()), 0.0);

        let (_, q) = iso(1.0, 0.0);
        let a = SymMat2::new(0.3, -1.2, 2.0);
        assert!(close(q.eval(&a), 2.0 * a.norm_sq(), 1e-14));
    }

    #[test]
    fn q1_q0_isotropic_examples() {
        let (_, q) = iso(1.0, 1.0);
        let m = q.q1(1.0, 0.0);
        assert!(close(m.value, 2.5, 1e-14));
        assert!(close(m.gamma_star, -0.25, 1e-14));
        assert!(close(q.q1(1.0, 1.0).value, 6.5, 1e-14));
        assert_eq!(q.q1(0.0, 0.0), Q1Min { value: 0.0, gamma_star: 0.0 });

        let m = q.q0(1.0);
        assert!(close(m.value, 2.5, 1e-14));
        assert!(m.z_star.0.abs() < 1e-15);
        assert!(close(m.z_star.1, -0.25, 1e-14));
        assert!(close(q.q0(2.0).value, 10.0, 1e-14));
        let z = q.q0(0.0);
        assert_eq!(z.value, 0.0);
        assert_eq!(z.z_star, (0.0, 0.0));
        assert!(close(q.q0_coeff(), 2.5, 1e-14));
    }

    #[test]
    fn q1_matrix_reproduces_q1() {
        let (_, q) = iso(0.7, 1.9);
        let k = q.q1_matrix();
        for &(kp, t) in &[(1.0, 0.0), (0.3, -2.0), (-1.5, 0.8)] {
            let v = Vector2::new(kp, t);
            assert!(close(v.dot(&(k * v)), q.q1(kp, t).value, 1e-13));
        }
    }

    #[test]
    fn alpha_isotropic_examples() {
        let (m, q) = iso(1.0, 1.0);
        let c = q.alpha_pm();
        assert!(close(c.alpha_plus, 4.0, 1e-13));
        assert!(close(c.alpha_minus, 20.0 / 3.0, 1e-13));
        let (ap, am) = alpha_iso(&m);
        assert!(close(c.alpha_plus, ap, 1e-13) && close(c.alpha_minus, am, 1e-13));

        let (_, q) = iso(2.5, 0.0);
        let c = q.alpha_pm();
        assert!(close(c.alpha_plus, 10.0, 1e-13));
        assert!(close(c.alpha_minus, 10.0, 1e-13));
    }

    #[test]
    fn qbar_examples() {
        let (m, q) = iso(1.0, 1.0);
        let r = q.relaxed();
        let v = r.qbar(2.0, 1.0);
        assert!(close(v.value, 50.0 / 3.0, 1e-13));
        assert!(close(v.gamma_star, 0.5, 1e-13));
        assert_eq!(v.branch, QbarBranch::Developable);
        assert!(close(r.qbar(1.0, 2.0).value, 128.0 / 3.0, 1e-13));
        let z = r.qbar(0.0, 0.0);
        assert_eq!((z.value, z.gamma_star), (0.0, 0.0));

        assert!(close(qbar_iso(&m, 1.0, 1.0), 32.0 / 3.0, 1e-14));
        let s = 2.0f64;
        let lhs = 12.0 * bending_stiffness(&m) * s * s;
        assert!(close(lhs, 32.0 / 3.0, 1e-14));
        assert!(close(r.qbar(1.0, 1.0).value, 32.0 / 3.0, 1e-13));
        assert!(close(young_modulus(&m), 2.5, 1e-15));
        assert!(close(bending_stiffness(&m), 2.0 / 9.0, 1e-15));
    }

    #[test]
    fn qbar_kappa_zero_path() {
        let (m, q) = iso(1.3, 0.4);
        let r = q.relaxed();
        let v = r.qbar(0.0, 0.7);
        assert_eq!(v.branch, QbarBranch::Negative);
        assert!(close(v.value, qbar_iso(&m, 0.0, 0.7), 1e-12));
    }

    #[test]
    fn qbar_gradient_matches_differences() {
        let (_, q) = iso(1.0, 1.0);
        let r = q.relaxed();
        for &(k, t) in &[(2.0, 1.0), (0.5, 1.5), (-1.0, 0.3), (0.0, 0.8), (1.2, -2.0)] {
            let g = r.qbar(k, t).grad;
            let h = 1e-6;
            let dk = (r.qbar(k + h, t).value - r.qbar(k - h, t).value) / (2.0 * h);
            let dt = (r.qbar(k, t + h).value - r.qbar(k, t - h).value) / (2.0 * h);
            assert!((g.0 - dk).abs() < 1e-6 * (1.0 + dk.abs()), "{k} {t}: {g:?} vs {dk}");
            assert!((g.1 - dt).abs() < 1e-6 * (1.0 + dt.abs()), "{k} {t}: {g:?} vs {dt}");
        }
    }

    #[test]
    fn q3_reduction_isotropic_and_decoupled() {
        let (m, q) = iso(1.0, 1.0);
        let q3 = QuadForm3::isotropic(&m).unwrap();
        let q2 = q2_from_q3(&q3).unwrap();
        assert!((q2.rep() - q.rep()).abs().max() < 1e-12);

        let mut rep = Matrix6::zeros();
        let kept = Matrix3::new(3.0, 0.5, 0.1, 0.5, 2.0, -0.2, 0.1, -0.2, 1.5);
        for (i, &a) in [0usize, 1, 5].iter().enumerate() {
            for (j, &b) in [0usize, 1, 5].iter().enumerate() {
                rep[(a, b)] = kept[(i, j)];
            }
        }
        for k in [2usize, 3, 4] {
            rep[(k, k)] = 1.0 + k as f64;
        }
        let q2 = q2_from_q3(&QuadForm3::new(rep).unwrap()).unwrap();
        assert!((q2.rep() - kept).abs().max() < 1e-14);
    }

    #[test]
    fn q3_reduction_rejects_singular_block() {
        let mut rep = Matrix6::identity();
        rep[(2, 2)] = 0.0;
        let q3 = QuadForm3::new(rep).unwrap();
        assert_eq!(q2_from_q3(&q3), Err(Error::ReductionFailure));
    }

    #[test]
    fn degenerate_forms_rejected() {
        let rep = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1e-14);
        assert!(matches!(QuadForm2::new(rep), Err(Error::NotPositiveDefinite { .. })));
        let rep = Matrix3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(QuadForm2::new(rep), Err(Error::NotSymmetric(_))));
        assert!(Material::new(0.0, 1.0).is_err());
        assert!(Material::new(1.0, -0.1).is_err());
    }

    #[test]
    fn symmat_invariants() {
        let a = SymMat2::new(1.5, -0.5, 2.0);
        assert_eq!(a.trace(), 3.5);
        assert_eq!(a.det(), 1.5 * 2.0 - 0.25);
        assert_eq!(a.norm_sq(), 2.25 + 0.5 + 4.0);
        let v = a.to_voigt();
        assert!((v.norm_squared() - a.norm_sq()).abs() < 1e-14);
        assert_eq!(SymMat2::from_voigt(&v).a22, 2.0);
        assert!((v.dot(&(det_form() * v)) - a.det()).abs() < 1e-14);
    }
}
