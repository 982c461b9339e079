//! Explicit recovery fields on the unit strip for given one-dimensional data.
//!
//! Each construction is evaluated analytically at any point of `S`; the
//! resulting fields implement [`PlateKinematics`] so that the plate energies
//! can be integrated on them directly, or sampled onto the plate element
//! space with [`Recovery::sample`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plate2d::{
    energy_ben_on, energy_ext_on, project_zero_average, Kinematics, PlateKinematics, RectMesh,
    ScaledPlateField, StripQuadrature,
};
use crate::profile::Profile;
use crate::quadform::{qbar, QbarBranch, QuadForm2, RelaxConstants};
use crate::quadrature::GaussRule;
use crate::ribbon1d::{Component, Field1D, ModelKind};

/// Gauss points per panel for integrals along `I`.
const PANEL_POINTS: usize = 8;
/// Minimum number of panels along `I`.
const MIN_PANELS: usize = 256;
/// Gauss points across the strip for averages over `S`.
const ACROSS_POINTS: usize = 8;

/// Newton tolerance and iteration cap for inverting the chart.
pub const CHART_TOL: f64 = 1e-12;
pub const CHART_MAX_ITERS: usize = 20;
/// Lower bound kept on `det ∇Φ` when computing `eps_max`.
pub const CHART_MARGIN: f64 = 0.1;
/// Relative extension of `I` on which the chart is set up.
const CHART_EXTENSION: f64 = 0.1;
const CHART_SAMPLES: usize = 4001;

struct Zero;

impl Profile for Zero {
    fn derivative(&self, _x: f64, _order: usize) -> f64 {
        0.0
    }
}

/// One-dimensional limit data `(ξ1, ξ2, w, θ)` on `I = (-ℓ/2, ℓ/2)`.
///
/// `w` must be four times and `θ` three times differentiable on the pieces
/// between `breakpoints`; in-plane components default to zero.
#[derive(Clone)]
pub struct RecoveryInput {
    pub ell: f64,
    pub w: Arc<dyn Profile>,
    pub theta: Arc<dyn Profile>,
    pub xi1: Arc<dyn Profile>,
    pub xi2: Arc<dyn Profile>,
    /// Points of reduced smoothness inside `I` (mesh nodes for discrete data).
    pub breakpoints: Vec<f64>,
}

impl std::fmt::Debug for RecoveryInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecoveryInput")
            .field("ell", &self.ell)
            .field("breakpoints", &self.breakpoints.len())
            .finish_non_exhaustive()
    }
}

impl RecoveryInput {
    pub fn new(ell: f64, w: impl Profile + 'static, theta: impl Profile + 'static) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidInput(format!("length must be positive, got {ell}")));
        }
        Ok(Self {
            ell,
            w: Arc::new(w),
            theta: Arc::new(theta),
            xi1: Arc::new(Zero),
            xi2: Arc::new(Zero),
            breakpoints: Vec::new(),
        })
    }

    pub fn with_in_plane(mut self, xi1: impl Profile + 'static, xi2: impl Profile + 'static) -> Self {
        self.xi1 = Arc::new(xi1);
        self.xi2 = Arc::new(xi2);
        self
    }

    /// Data read off a discrete one-dimensional field.
    pub fn from_field(f: &Field1D) -> Self {
        Self {
            ell: f.mesh.ell(),
            w: Arc::new(f.profile(Component::W)),
            theta: Arc::new(f.profile(Component::Theta)),
            xi1: Arc::new(f.profile(Component::Xi1)),
            xi2: Arc::new(f.profile(Component::Xi2)),
            breakpoints: f.mesh.nodes().to_vec(),
        }
    }

    fn half(&self) -> f64 {
        0.5 * self.ell
    }

    /// Panel ends along `I`, refined between breakpoints.
    fn panels(&self) -> Vec<f64> {
        let (a, b) = (-self.half(), self.half());
        let mut knots: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|x| *x > a && *x < b)
            .collect();
        knots.push(a);
        knots.push(b);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let pieces = knots.len() - 1;
        let sub = MIN_PANELS.div_ceil(pieces).max(1);
        let mut out = Vec::with_capacity(pieces * sub + 1);
        for k in 0..pieces {
            let (l, r) = (knots[k], knots[k + 1]);
            for j in 0..sub {
                out.push(l + (r - l) * j as f64 / sub as f64);
            }
        }
        out.push(b);
        out
    }

    /// `∫_I f` by panel Gauss quadrature.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussRule::new(PANEL_POINTS);
        self.panels()
            .windows(2)
            .map(|p| rule.integrate(p[0], p[1], &f))
            .sum()
    }

    /// Rejects data violating the zero-average conditions
    /// `∫w = ∫w' = ∫θ = ∫ξ1 = ∫ξ2 = 0`.
    pub fn validate(&self) -> Result<()> {
        let scale = self.integrate(|x| {
            self.w.value(x).abs()
                + self.w.derivative(x, 1).abs()
                + self.theta.value(x).abs()
                + self.xi1.value(x).abs()
                + self.xi2.value(x).abs()
        });
        let tol = 1e-8 * (1.0 + scale);
        let checks = [
            ("w", self.integrate(|x| self.w.value(x))),
            ("w'", self.integrate(|x| self.w.derivative(x, 1))),
            ("theta", self.integrate(|x| self.theta.value(x))),
            ("xi1", self.integrate(|x| self.xi1.value(x))),
            ("xi2", self.integrate(|x| self.xi2.value(x))),
        ];
        for (name, v) in checks {
            if !v.is_finite() || v.abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "integral of {name} over I is {v:e}, expected zero"
                )));
            }
        }
        Ok(())
    }

    /// `ξ1' + w'²/2`, the axial strain at the centerline.
    fn axial_strain(&self, x: f64) -> f64 {
        let dw = self.w.derivative(x, 1);
        self.xi1.derivative(x, 1) + 0.5 * dw * dw
    }
}

/// `w_ε = w + εx2θ + (ε²/2)(x2²γ - ⟨x2²γ⟩ - x1⟨x2²γ'⟩)` with `γ` the
/// pointwise `Q1` minimizer, linear in `(w'', θ')`.
#[derive(Debug, Clone)]
pub struct LvkRecovery {
    input: RecoveryInput,
    eps: f64,
    gk: f64,
    gt: f64,
    avg_gamma: f64,
    avg_dgamma: f64,
}

impl LvkRecovery {
    pub fn new(input: &RecoveryInput, q: &QuadForm2, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        input.validate()?;
        let (gk, gt) = q.q1_gamma_coeffs();
        let mut r = Self {
            input: input.clone(),
            eps,
            gk,
            gt,
            avg_gamma: 0.0,
            avg_dgamma: 0.0,
        };
        let s = 1.0 / (12.0 * input.ell);
        r.avg_gamma = s * input.integrate(|x| r.gamma(x, 0));
        r.avg_dgamma = s * input.integrate(|x| r.gamma(x, 1));
        Ok(r)
    }

    /// Derivative of order `order` of `γ = gκ w'' + gτ θ'`.
    pub fn gamma(&self, x: f64, order: usize) -> f64 {
        self.gk * self.input.w.derivative(x, 2 + order) + self.gt * self.input.theta.derivative(x, 1 + order)
    }

    fn w_kinematics(&self, x1: f64, x2: f64) -> Kinematics {
        let (e, inp) = (self.eps, &self.input);
        let e2 = 0.5 * e * e;
        let th = |k| inp.theta.derivative(x1, k);
        let w = |k| inp.w.derivative(x1, k);
        let g = |k| self.gamma(x1, k);
        let x22 = x2 * x2;
        Kinematics {
            w: w(0) + e * x2 * th(0) + e2 * (x22 * g(0) - self.avg_gamma - x1 * self.avg_dgamma),
            grad_w: [
                w(1) + e * x2 * th(1) + e2 * (x22 * g(1) - self.avg_dgamma),
                e * th(0) + e * e * x2 * g(0),
            ],
            hess_w: [
                w(2) + e * x2 * th(2) + e2 * x22 * g(2),
                e * th(1) + e * e * x2 * g(1),
                e * e * g(0),
            ],
            ..Kinematics::default()
        }
    }
}

impl PlateKinematics for LvkRecovery {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn ell(&self) -> f64 {
        self.input.ell
    }

    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
        check_point(self.input.ell, x1, x2)?;
        Ok(self.w_kinematics(x1, x2))
    }
}

/// Antiderivative `P(x) = ∫_0^x g` tabulated at panel ends.
#[derive(Debug, Clone)]
struct Antiderivative {
    knots: Vec<f64>,
    cum: Vec<f64>,
}

impl Antiderivative {
    fn new(knots: Vec<f64>, g: &dyn Fn(f64) -> f64) -> Self {
        let rule = GaussRule::new(PANEL_POINTS);
        let mut cum = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            cum[k] = cum[k - 1] + rule.integrate(knots[k - 1], knots[k], g);
        }
        let mut p = Self { knots, cum };
        let at_zero = p.eval(0.0, g);
        for c in &mut p.cum {
            *c -= at_zero;
        }
        p
    }

    fn eval(&self, x: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        let k = self.knots.partition_point(|&t| t <= x).clamp(1, self.knots.len()) - 1;
        self.cum[k] + GaussRule::new(PANEL_POINTS).integrate(self.knots[k], x, g)
    }
}

/// Displacement and deflection built from the `Q0` minimizer
/// `z_α = ζ_α + x2 η_α`, with the deflection of [`LvkRecovery`].
#[derive(Debug, Clone)]
pub struct VkRecovery {
    w: LvkRecovery,
    z: (f64, f64),
    avg_eta: (f64, f64),
    p: Antiderivative,
    avg_p: f64,
}

impl VkRecovery {
    pub fn new(input: &RecoveryInput, q: &QuadForm2, eps: f64) -> Result<Self> {
        let w = LvkRecovery::new(input, q, eps)?;
        let z = q.q0_z_coeffs();
        let s = 1.0 / (12.0 * input.ell);
        let avg_eta = (
            s * input.integrate(|x| -z.0 * input.xi2.derivative(x, 2)),
            s * input.integrate(|x| -z.1 * input.xi2.derivative(x, 2)),
        );
        let mut r = Self {
            w,
            z,
            avg_eta,
            p: Antiderivative {
                knots: Vec::new(),
                cum: Vec::new(),
            },
            avg_p: 0.0,
        };
        let g = |x: f64| r.p_integrand(x);
        let p = Antiderivative::new(input.panels(), &g);
        let avg_p = input.integrate(|x| p.eval(x, &g)) / input.ell;
        r.p = p;
        r.avg_p = avg_p;
        Ok(r)
    }

    fn input(&self) -> &RecoveryInput {
        &self.w.input
    }

    /// `2ζ1 - w'θ`.
    fn p_integrand(&self, x: f64) -> f64 {
        let inp = self.input();
        2.0 * self.z.0 * inp.axial_strain(x) - inp.w.derivative(x, 1) * inp.theta.value(x)
    }

    /// `(ζ1, ζ2)` and their first derivatives.
    pub fn zeta(&self, x: f64) -> [(f64, f64); 2] {
        let inp = self.input();
        let s = inp.axial_strain(x);
        let ds = inp.xi1.derivative(x, 2) + inp.w.derivative(x, 1) * inp.w.derivative(x, 2);
        [(self.z.0 * s, self.z.0 * ds), (self.z.1 * s, self.z.1 * ds)]
    }

    /// `(η1, η2)` and their first derivatives.
    pub fn eta(&self, x: f64) -> [(f64, f64); 2] {
        let inp = self.input();
        let (d2, d3) = (inp.xi2.derivative(x, 2), inp.xi2.derivative(x, 3));
        [(-self.z.0 * d2, -self.z.0 * d3), (-self.z.1 * d2, -self.z.1 * d3)]
    }
}

impl PlateKinematics for VkRecovery {
    fn eps(&self) -> f64 {
        self.w.eps
    }

    fn ell(&self) -> f64 {
        self.w.input.ell
    }

    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
        check_point(self.ell(), x1, x2)?;
        let mut k = self.w.w_kinematics(x1, x2);
        let inp = self.input();
        let e = self.w.eps;
        let e2 = 0.5 * e * e;
        let x22 = x2 * x2;
        let [_, (z2, dz2)] = self.zeta(x1);
        let [(h1, dh1), (h2, dh2)] = self.eta(x1);
        let (th, dth) = (inp.theta.value(x1), inp.theta.derivative(x1, 1));
        let xi2 = |n| inp.xi2.derivative(x1, n);
        let g2 = 2.0 * z2 - th * th;
        let dg2 = 2.0 * dz2 - 2.0 * th * dth;
        let g = |x: f64| self.p_integrand(x);

        k.y = [
            inp.xi1.value(x1) - x2 * xi2(1) + e * (x22 * h1 - self.avg_eta.0),
            xi2(0)
                + e * (self.p.eval(x1, &g) - self.avg_p)
                + e2 * x2 * g2
                + e2 * (x22 * h2 - self.avg_eta.1),
        ];
        k.grad_y = [
            [
                inp.xi1.derivative(x1, 1) - x2 * xi2(2) + e * x22 * dh1,
                -xi2(1) + 2.0 * e * x2 * h1,
            ],
            [
                xi2(1) + e * self.p_integrand(x1) + e2 * x2 * dg2 + e2 * x22 * dh2,
                e2 * g2 + e * e * x2 * h2,
            ],
        ];
        Ok(k)
    }
}

/// Ruling of the strip along the flat direction of `M = (w'' θ'; θ' γ)`.
///
/// `M = λ n⊗n` with `n = (cos β, sin β)`, `b̃ = (-sin β, cos β)` and
/// `Φ(ξ1, ξ2) = (ξ1 - ξ2 sin β(ξ1), ξ2 cos β(ξ1))`. Since `β` is read off
/// `tan β = θ'/w''`, `(w'', θ')·b̃ = 0` holds wherever the chart is used,
/// including the extension of `I`.
#[derive(Debug, Clone)]
pub struct DevelopableChart {
    input: RecoveryInput,
    q: QuadForm2,
    c: RelaxConstants,
    pub eps_max: f64,
}

/// Value, gradient and Hessian `(∂11, ∂12, ∂22)` of `z` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// Builds the chart, rejecting data whose `Q̄` minimizer has `det M ≠ 0`.
pub fn cvk_chart(input: &RecoveryInput, q: &QuadForm2, c: &RelaxConstants) -> Result<DevelopableChart> {
    input.validate()?;
    let mut chart = DevelopableChart {
        input: input.clone(),
        q: *q,
        c: *c,
        eps_max: f64::INFINITY,
    };
    let h = input.half();
    for k in 0..CHART_SAMPLES {
        let x = -h + input.ell * k as f64 / (CHART_SAMPLES - 1) as f64;
        let (kappa, tau) = chart.curvatures(x);
        let m = qbar(q, c, kappa, tau);
        if m.branch != QbarBranch::Developable {
            return Err(Error::ChartRejected(format!(
                "the relaxed minimizer has det M ≠ 0 at x1 = {x} (w'' = {kappa}, θ' = {tau}); \
                 recovery in this regime needs an oscillating construction that is not provided"
            )));
        }
    }
    let ext = (0.5 + CHART_EXTENSION) * input.ell;
    let mut eps_max = f64::INFINITY;
    for k in 0..CHART_SAMPLES {
        let x = -ext + 2.0 * ext * k as f64 / (CHART_SAMPLES - 1) as f64;
        let (beta, dbeta) = chart.frame(x)?;
        let room = beta.cos() - CHART_MARGIN;
        if room <= 0.0 {
            eps_max = 0.0;
            break;
        }
        if dbeta != 0.0 {
            eps_max = eps_max.min(2.0 * room / dbeta.abs());
        }
    }
    chart.eps_max = eps_max;
    Ok(chart)
}

impl DevelopableChart {
    fn curvatures(&self, x: f64) -> (f64, f64) {
        (self.input.w.derivative(x, 2), self.input.theta.derivative(x, 1))
    }

    pub fn input(&self) -> &RecoveryInput {
        &self.input
    }

    /// `(β, β')` at `x`; `β = 0` where `w'' = θ' = 0`.
    pub fn frame(&self, x: f64) -> Result<(f64, f64)> {
        let (kappa, tau) = self.curvatures(x);
        if kappa == 0.0 {
            if tau == 0.0 {
                return Ok((0.0, 0.0));
            }
            return Err(Error::ChartRejected(format!(
                "w'' = 0 with θ' = {tau} at x1 = {x}: the flat direction is parallel to the axis"
            )));
        }
        let dkappa = self.input.w.derivative(x, 3);
        let dtau = self.input.theta.derivative(x, 2);
        let beta = (tau / kappa).atan();
        let dbeta = (dtau * kappa - tau * dkappa) / (kappa * kappa + tau * tau);
        Ok((beta, dbeta))
    }

    pub fn beta(&self, x: f64) -> Result<f64> {
        Ok(self.frame(x)?.0)
    }

    /// `λ = tr M` with `γ` the `Q̄` minimizer.
    pub fn lambda(&self, x: f64) -> f64 {
        let (kappa, tau) = self.curvatures(x);
        kappa + qbar(&self.q, &self.c, kappa, tau).gamma_star
    }

    pub fn alpha_angle(&self, x: f64) -> Result<f64> {
        Ok(std::f64::consts::FRAC_PI_2 + self.beta(x)?)
    }

    pub fn b_tilde(&self, x: f64) -> Result<[f64; 2]> {
        let a = self.alpha_angle(x)?;
        Ok([a.cos(), a.sin()])
    }

    pub fn phi(&self, xi1: f64, xi2: f64) -> Result<[f64; 2]> {
        let b = self.b_tilde(xi1)?;
        Ok([xi1 + xi2 * b[0], xi2 * b[1]])
    }

    /// `det ∇Φ = cos β - ξ2 β'`.
    pub fn det_grad_phi(&self, xi1: f64, xi2: f64) -> Result<f64> {
        let (beta, dbeta) = self.frame(xi1)?;
        Ok(beta.cos() - xi2 * dbeta)
    }

    /// Solves `Φ(ξ) = p` by Newton's method on
    /// `ξ1 - p2 tan β(ξ1) - p1 = 0`, `ξ2 = p2 / cos β(ξ1)`.
    pub fn invert(&self, p1: f64, p2: f64) -> Result<(f64, f64)> {
        let ext = (0.5 + CHART_EXTENSION) * self.input.ell;
        let fail = |iterations| Error::ChartInversion {
            x1: p1,
            x2: p2,
            iterations,
        };
        let mut xi1 = p1;
        for it in 0..=CHART_MAX_ITERS {
            if !(xi1.abs() <= ext) {
                return Err(fail(it));
            }
            let (beta, dbeta) = self.frame(xi1)?;
            let cb = beta.cos();
            let h = xi1 - p2 * beta.tan() - p1;
            if h.abs() <= CHART_TOL {
                return Ok((xi1, p2 / cb));
            }
            if it == CHART_MAX_ITERS {
                break;
            }
            let dh = 1.0 - p2 * dbeta / (cb * cb);
            if dh <= 0.0 {
                return Err(fail(it));
            }
            xi1 -= h / dh;
        }
        Err(fail(CHART_MAX_ITERS))
    }

    /// `z(Φ(ξ)) = w(ξ1) + ξ2 b̃(ξ1)·(w'(ξ1), θ(ξ1))`, with
    /// `∇z(Φ(ξ)) = (w', θ)(ξ1)` and `∇²z(Φ(ξ)) = s n⊗n`,
    /// `s = (w'', θ')·n / (cos β - ξ2 β')`.
    pub fn jet(&self, p1: f64, p2: f64) -> Result<ZJet> {
        let (xi1, xi2) = self.invert(p1, p2)?;
        let (beta, dbeta) = self.frame(xi1)?;
        let (sb, cb) = beta.sin_cos();
        let inp = &self.input;
        let (w1, th) = (inp.w.derivative(xi1, 1), inp.theta.value(xi1));
        let (kappa, tau) = self.curvatures(xi1);
        let s = (kappa * cb + tau * sb) / (cb - xi2 * dbeta);
        Ok(ZJet {
            value: inp.w.value(xi1) + xi2 * (-sb * w1 + cb * th),
            grad: [w1, th],
            hess: [s * cb * cb, s * cb * sb, s * sb * sb],
        })
    }
}

/// `w_ε(x) = z(x1, εx2) - F_ε·(x1, εx2) - c_ε` with `F_ε`, `c_ε` the averages
/// over `S` of `∇z(x1, εx2)` and `z(x1, εx2)`.
#[derive(Debug, Clone)]
pub struct CvkRecovery {
    chart: DevelopableChart,
    eps: f64,
    f_avg: [f64; 2],
    c_avg: f64,
}

pub fn cvk_recovery(chart: &DevelopableChart, eps: f64) -> Result<CvkRecovery> {
    check_eps(eps)?;
    if eps > chart.eps_max {
        return Err(Error::EpsTooLarge {
            eps,
            eps_max: chart.eps_max,
        });
    }
    let inp = &chart.input;
    let rule = GaussRule::new(PANEL_POINTS);
    let across = GaussRule::new(ACROSS_POINTS);
    let mut points = Vec::new();
    for p in inp.panels().windows(2) {
        for (x1, w1) in rule.on(p[0], p[1]) {
            for (x2, w2) in across.on(-0.5, 0.5) {
                points.push((x1, x2, w1 * w2));
            }
        }
    }
    let vals: Vec<[f64; 3]> = points
        .par_iter()
        .map(|&(x1, x2, wq)| {
            chart
                .jet(x1, eps * x2)
                .map(|j| [wq * j.value, wq * j.grad[0], wq * j.grad[1]])
        })
        .collect::<Result<_>>()?;
    let mut s = [0.0; 3];
    for v in &vals {
        for k in 0..3 {
            s[k] += v[k];
        }
    }
    let area = inp.ell;
    Ok(CvkRecovery {
        chart: chart.clone(),
        eps,
        f_avg: [s[1] / area, s[2] / area],
        c_avg: s[0] / area,
    })
}

impl CvkRecovery {
    pub fn chart(&self) -> &DevelopableChart {
        &self.chart
    }
}

impl PlateKinematics for CvkRecovery {
    fn eps(&self) -> f64 {
        self.eps
    }

    fn ell(&self) -> f64 {
        self.chart.input.ell
    }

    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
        check_point(self.ell(), x1, x2)?;
        let e = self.eps;
        let j = self.chart.jet(x1, e * x2)?;
        let f = self.f_avg;
        Ok(Kinematics {
            w: j.value - f[0] * x1 - f[1] * e * x2 - self.c_avg,
            grad_w: [j.grad[0] - f[0], e * (j.grad[1] - f[1])],
            hess_w: [j.hess[0], e * j.hess[1], e * e * j.hess[2]],
            ..Kinematics::default()
        })
    }
}

/// Any of the three constructions.
#[derive(Debug, Clone)]
pub enum Recovery {
    Lvk(LvkRecovery),
    Vk(VkRecovery),
    Cvk(CvkRecovery),
}

/// Builds the recovery field for `kind` at width `eps`.
pub fn recover(
    kind: ModelKind,
    input: &RecoveryInput,
    q: &QuadForm2,
    c: &RelaxConstants,
    eps: f64,
) -> Result<Recovery> {
    Ok(match kind {
        ModelKind::Lvk => Recovery::Lvk(LvkRecovery::new(input, q, eps)?),
        ModelKind::Vk => Recovery::Vk(VkRecovery::new(input, q, eps)?),
        ModelKind::Cvk => Recovery::Cvk(cvk_recovery(&cvk_chart(input, q, c)?, eps)?),
    })
}

impl Recovery {
    pub fn kind(&self) -> ModelKind {
        match self {
            Recovery::Lvk(_) => ModelKind::Lvk,
            Recovery::Vk(_) => ModelKind::Vk,
            Recovery::Cvk(_) => ModelKind::Cvk,
        }
    }

    fn inner(&self) -> &dyn PlateKinematics {
        match self {
            Recovery::Lvk(r) => r,
            Recovery::Vk(r) => r,
            Recovery::Cvk(r) => r,
        }
    }

    /// Plate energy matching the model: `J^ext + J^ben` for vK, `J^ben`
    /// otherwise.
    pub fn energy(&self, q: &QuadForm2, quad: &StripQuadrature) -> Result<f64> {
        let ben = energy_ben_on(self, q, quad)?;
        if self.kind() == ModelKind::Vk {
            Ok(ben + energy_ext_on(self, q, quad)?)
        } else {
            Ok(ben)
        }
    }

    /// Nodal interpolation onto the plate element space, followed by the
    /// discrete zero-average projection.
    pub fn sample(&self, mesh: &RectMesh) -> Result<ScaledPlateField> {
        let mut f = ScaledPlateField::interpolate(mesh, self)?;
        project_zero_average(&mut f, self.kind() == ModelKind::Vk)?;
        Ok(f)
    }
}

impl PlateKinematics for Recovery {
    fn eps(&self) -> f64 {
        self.inner().eps()
    }

    fn ell(&self) -> f64 {
        self.inner().ell()
    }

    fn kinematics(&self, x1: f64, x2: f64) -> Result<Kinematics> {
        self.inner().kinematics(x1, x2)
    }
}

/// One-dimensional energy of the data, integrated directly from the profiles.
pub fn limit_energy(kind: ModelKind, input: &RecoveryInput, q: &QuadForm2, c: &RelaxConstants) -> f64 {
    let curv = |x: f64| (input.w.derivative(x, 2), input.theta.derivative(x, 1));
    match kind {
        ModelKind::Lvk => input.integrate(|x| {
            let (k, t) = curv(x);
            q.q1(k, t).value
        }) / 24.0,
        ModelKind::Vk => {
            let c0 = q.q0_coeff();
            let bend = limit_energy(ModelKind::Lvk, input, q, c);
            let stretch = input.integrate(|x| {
                let s = input.axial_strain(x);
                let d = input.xi2.derivative(x, 2);
                0.5 * c0 * s * s + c0 * d * d / 24.0
            });
            bend + stretch
        }
        ModelKind::Cvk => input.integrate(|x| {
            let (k, t) = curv(x);
            qbar(q, c, k, t).value
        }) / 24.0,
    }
}

/// Default rule for integrating the analytic recovery fields.
pub fn default_quadrature(ell: f64) -> StripQuadrature {
    let cells = ((64.0 * ell).ceil() as usize).max(16);
    StripQuadrature::new(ell, cells, 2, 5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub eps: f64,
    pub recovery: f64,
    pub limit: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub kind: ModelKind,
    pub rows: Vec<GammaRow>,
}

impl GammaReport {
    /// Fails if the error at the last `eps` exceeds `bound`.
    pub fn check(&self, bound: f64) -> Result<()> {
        match self.rows.last() {
            Some(r) if !(r.rel_error <= bound) => Err(Error::ConvergenceBound {
                eps: r.eps,
                error: r.rel_error,
                bound,
            }),
            _ => Ok(()),
        }
    }

    pub fn errors_decreasing(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].rel_error < p[0].rel_error)
    }
}

/// `|a - b| / |b|`, or `|a|` when `b = 0`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Recovery energies against the limit energy over `eps_list`.
pub fn gamma_report(
    kind: ModelKind,
    input: &RecoveryInput,
    q: &QuadForm2,
    c: &RelaxConstants,
    eps_list: &[f64],
    quad: &StripQuadrature,
) -> Result<GammaReport> {
    let limit = limit_energy(kind, input, q, c);
    let chart = if kind == ModelKind::Cvk {
        Some(cvk_chart(input, q, c)?)
    } else {
        None
    };
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let rec = match &chart {
                Some(ch) => Recovery::Cvk(cvk_recovery(ch, eps)?),
                None => recover(kind, input, q, c, eps)?,
            };
            let e = rec.energy(q, quad)?;
            Ok(GammaRow {
                eps,
                recovery: e,
                limit,
                rel_error: relative_error(e, limit),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaReport { kind, rows })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps must be positive, got {eps}")))
    }
}

fn check_point(ell: f64, x1: f64, x2: f64) -> Result<()> {
    let tol = 1e-12;
    if x1.abs() <= 0.5 * ell * (1.0 + tol) && x2.abs() <= 0.5 + tol {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x1, x2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Function1D;
    use crate::quadform::Material;
    use std::f64::consts::PI;

    fn iso() -> (QuadForm2, RelaxConstants) {
        let q = QuadForm2::isotropic(&Material::new(1.0, 1.0).unwrap()).unwrap();
        let c = q.alpha_pm();
        (q, c)
    }

    fn smooth_input() -> RecoveryInput {
        let w = Function1D::poly(&[0.0, 0.0, 0.5, 0.2])
            .with_cos(0.1, 2.0 * PI, 0.3)
            .zero_mean_and_slope(1.0);
        let theta = Function1D::poly(&[0.0, 0.4, 0.0, -0.3]).with_cos(0.05, 3.0, 0.0).zero_mean(1.0);
        RecoveryInput::new(1.0, w, theta).unwrap()
    }

    fn developable_input() -> RecoveryInput {
        // θ' = w''·tan β with w'' > 0 and |tan β| < 1
        let w = Function1D::poly(&[0.0, 0.0, 1.0, 0.1]).zero_mean_and_slope(1.0);
        let theta = Function1D::poly(&[0.0, 0.3, 0.05, 0.2, 0.015]).zero_mean(1.0);
        RecoveryInput::new(1.0, w, theta).unwrap()
    }

    fn quad() -> StripQuadrature {
        default_quadrature(1.0)
    }

    #[test]
    fn lvk_collapses_without_twist_and_gamma() {
        // a form without (a11, a22) or (a12, a22) coupling has γ* ≡ 0
        let q = QuadForm2::new(nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 1.0, 3.0))).unwrap();
        let w = Function1D::zero().with_cos(0.3, 2.0 * PI, 0.0);
        let inp = RecoveryInput::new(1.0, w.clone(), Function1D::zero()).unwrap();
        for eps in [0.5, 0.1] {
            let r = LvkRecovery::new(&inp, &q, eps).unwrap();
            for &(x1, x2) in &[(0.2, -0.4), (-0.35, 0.5)] {
                let k = r.kinematics(x1, x2).unwrap();
                assert_eq!(k.w, w.value(x1));
                assert_eq!(k.grad_w, [w.derivative(x1, 1), 0.0]);
                assert_eq!(k.hess_w, [w.derivative(x1, 2), 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn lvk_scaled_hessian_tends_to_limit_matrix() {
        let (q, _) = iso();
        let inp = smooth_input();
        let eps = 1e-3;
        let r = LvkRecovery::new(&inp, &q, eps).unwrap();
        for &(x1, x2) in &[(0.1, 0.3), (-0.4, -0.2), (0.45, 0.5)] {
            let h = r.ops(x1, x2).unwrap().hess;
            let k = inp.w.derivative(x1, 2);
            let t = inp.theta.derivative(x1, 1);
            let g = q.q1(k, t).gamma_star;
            assert!((h.a11 - k).abs() < 10.0 * eps);
            assert!((h.a12 - t).abs() < 10.0 * eps);
            assert!((h.a22 - g).abs() < 10.0 * eps);
        }
    }

    #[test]
    fn lvk_convergence_is_monotone() {
        let (q, c) = iso();
        let rep = gamma_report(ModelKind::Lvk, &smooth_input(), &q, &c, &[0.2, 0.1, 0.05, 0.025], &quad()).unwrap();
        assert!(rep.errors_decreasing(), "{rep:?}");
        rep.check(5e-3).unwrap();
    }

    #[test]
    fn zero_averages_hold_exactly() {
        let (q, c) = iso();
        let inp = smooth_input().with_in_plane(
            Function1D::poly(&[0.0, 0.2, 0.0, 0.1]).zero_mean(1.0),
            Function1D::zero().with_cos(0.05, 2.0 * PI, 0.0),
        );
        let quad = quad();
        for kind in [ModelKind::Lvk, ModelKind::Vk] {
            let r = recover(kind, &inp, &q, &c, 0.1).unwrap();
            for comp in 0..3 {
                let v = quad
                    .integrate(|x1, x2| {
                        let k = r.kinematics(x1, x2)?;
                        Ok([k.w, k.grad_w[0], k.grad_w[1]][comp])
                    })
                    .unwrap();
                assert!(v.abs() < 1e-10, "{kind} {comp}: {v}");
            }
        }
        let r = recover(ModelKind::Vk, &inp, &q, &c, 0.1).unwrap();
        for a in 0..2 {
            let v = quad.integrate(|x1, x2| Ok(r.kinematics(x1, x2)?.y[a])).unwrap();
            assert!(v.abs() < 1e-10, "y{a}: {v}");
        }
    }

    #[test]
    fn vk_zero_input_gives_zero_fields() {
        let (q, c) = iso();
        let inp = RecoveryInput::new(1.0, Function1D::zero(), Function1D::zero()).unwrap();
        let r = recover(ModelKind::Vk, &inp, &q, &c, 0.2).unwrap();
        assert_eq!(r.kinematics(0.3, 0.1).unwrap(), Kinematics::default());
        assert_eq!(r.energy(&q, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn vk_inextensible_data_loses_stretching() {
        // w = A cos(kx) and ξ1' = -w'^2/2 exactly
        let (q, c) = iso();
        let k = 2.0 * PI;
        let a = 0.2 * k;
        let w = Function1D::zero().with_cos(0.2, k, 0.0);
        let xi1 = Function1D::poly(&[0.0, -a * a / 4.0]).with_cos(a * a / (8.0 * k), 2.0 * k, -PI / 2.0);
        let inp = RecoveryInput::new(1.0, w, Function1D::zero())
            .unwrap()
            .with_in_plane(xi1, Function1D::zero());
        for x in [-0.3, 0.1, 0.4] {
            assert!(inp.axial_strain(x).abs() < 1e-14);
        }
        let ext: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| {
                let r = recover(ModelKind::Vk, &inp, &q, &c, eps).unwrap();
                energy_ext_on(&r, &q, &quad()).unwrap()
            })
            .collect();
        // second order decay
        assert!(ext[0] / ext[1] > 3.5 && ext[1] / ext[2] > 3.5, "{ext:?}");
        assert!(ext[2] < 1e-4);
    }

    #[test]
    fn vk_generic_convergence() {
        let (q, c) = iso();
        let inp = smooth_input().with_in_plane(
            Function1D::poly(&[0.0, 0.1, 0.0, 0.2]).zero_mean(1.0),
            Function1D::zero().with_cos(0.05, 2.0 * PI, 0.0),
        );
        let rep = gamma_report(ModelKind::Vk, &inp, &q, &c, &[0.1, 0.05, 0.025], &quad()).unwrap();
        rep.check(1e-2).unwrap();
    }

    #[test]
    fn chart_for_pure_bending_is_identity() {
        let (q, c) = iso();
        let w = Function1D::poly(&[0.0, 0.0, 1.0, 0.3]).zero_mean_and_slope(1.0);
        let inp = RecoveryInput::new(1.0, w.clone(), Function1D::zero()).unwrap();
        let ch = cvk_chart(&inp, &q, &c).unwrap();
        assert_eq!(ch.eps_max, f64::INFINITY);
        assert_eq!(ch.beta(0.2).unwrap(), 0.0);
        assert!((ch.lambda(0.2) - w.derivative(0.2, 2)).abs() < 1e-14);
        let r = cvk_recovery(&ch, 0.3).unwrap();
        for x2 in [-0.5, 0.0, 0.4] {
            let k = r.kinematics(0.1, x2).unwrap();
            assert!((k.w - w.value(0.1)).abs() < 1e-12);
            assert!(k.grad_w[1].abs() < 1e-12);
        }
    }

    #[test]
    fn chart_for_constant_curvatures() {
        let (q, c) = iso();
        let w = Function1D::poly(&[0.0, 0.0, 1.0]).zero_mean_and_slope(1.0);
        let theta = Function1D::poly(&[0.0, 1.0]);
        let inp = RecoveryInput::new(1.0, w, theta).unwrap();
        let ch = cvk_chart(&inp, &q, &c).unwrap();
        // eigenvector of (2 1; 1 1/2) for 5/2 is (2, 1)
        let beta = ch.beta(0.0).unwrap();
        assert!((beta - 0.5f64.atan()).abs() < 1e-14);
        assert!((ch.lambda(0.0) - 2.5).abs() < 1e-12);
        assert_eq!(ch.eps_max, f64::INFINITY);
        let r = cvk_recovery(&ch, 0.05).unwrap();
        for &(x1, x2, _) in &quad().points {
            let h = r.ops(x1, x2).unwrap().hess;
            assert!(h.det().abs() <= 1e-8);
            assert!((h.a11 - 2.0).abs() < 1e-12 && (h.a12 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_rejects_nondevelopable_minimizer() {
        let (q, c) = iso();
        let w = Function1D::poly(&[0.0, 0.0, 0.5]).zero_mean_and_slope(1.0);
        let theta = Function1D::poly(&[0.0, 2.0]);
        let inp = RecoveryInput::new(1.0, w, theta).unwrap();
        assert!(matches!(cvk_chart(&inp, &q, &c), Err(Error::ChartRejected(_))));
    }

    #[test]
    fn chart_identities() {
        let (q, c) = iso();
        let inp = developable_input();
        let ch = cvk_chart(&inp, &q, &c).unwrap();
        assert!(ch.eps_max.is_finite() && ch.eps_max > 0.1);
        for i in 0..21 {
            let x = -0.5 + i as f64 / 20.0;
            // centerline
            let j = ch.jet(x, 0.0).unwrap();
            assert!((j.value - inp.w.value(x)).abs() < 1e-10);
            for xi2 in [-0.02, 0.013, 0.025] {
                let p = ch.phi(x, xi2).unwrap();
                let (a, b) = ch.invert(p[0], p[1]).unwrap();
                assert!((a - x).abs() < 1e-10 && (b - xi2).abs() < 1e-10);
                let j = ch.jet(p[0], p[1]).unwrap();
                assert!((j.grad[0] - inp.w.derivative(x, 1)).abs() < 1e-10);
                assert!((j.grad[1] - inp.theta.value(x)).abs() < 1e-10);
                let bt = ch.b_tilde(x).unwrap();
                let kb = [j.hess[0] * bt[0] + j.hess[1] * bt[1], j.hess[1] * bt[0] + j.hess[2] * bt[1]];
                assert!(kb[0].abs() < 1e-8 && kb[1].abs() < 1e-8);
                assert!(ch.det_grad_phi(x, xi2).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn chart_hessian_matches_differences_of_gradient() {
        let (q, c) = iso();
        let ch = cvk_chart(&developable_input(), &q, &c).unwrap();
        let h = 1e-6;
        for &(p1, p2) in &[(0.1, 0.02), (-0.3, -0.015), (0.42, 0.01)] {
            let j = ch.jet(p1, p2).unwrap();
            let d1 = |s: f64| ch.jet(p1 + s, p2).unwrap().grad;
            let d2 = |s: f64| ch.jet(p1, p2 + s).unwrap().grad;
            let (a, b) = (d1(h), d1(-h));
            let (e, f) = (d2(h), d2(-h));
            assert!(((a[0] - b[0]) / (2.0 * h) - j.hess[0]).abs() < 1e-6);
            assert!(((a[1] - b[1]) / (2.0 * h) - j.hess[1]).abs() < 1e-6);
            assert!(((e[1] - f[1]) / (2.0 * h) - j.hess[2]).abs() < 1e-6);
        }
    }

    #[test]
    fn cvk_recovery_is_determinant_free_and_converges() {
        let (q, c) = iso();
        let inp = developable_input();
        let quad = quad();
        let ch = cvk_chart(&inp, &q, &c).unwrap();
        let r = Recovery::Cvk(cvk_recovery(&ch, 0.05).unwrap());
        let det = crate::plate2d::det_max_on(&r, &quad).unwrap();
        assert!(det <= 1e-8, "{det}");
        let rep = gamma_report(ModelKind::Cvk, &inp, &q, &c, &[0.1, 0.05, 0.025], &quad).unwrap();
        rep.check(1e-2).unwrap();
    }

    #[test]
    fn eps_above_bound_is_rejected() {
        let (q, c) = iso();
        let ch = cvk_chart(&developable_input(), &q, &c).unwrap();
        let eps = 2.0 * ch.eps_max;
        assert!(matches!(cvk_recovery(&ch, eps), Err(Error::EpsTooLarge { .. })));
    }

    #[test]
    fn nonzero_averages_are_rejected() {
        let (q, _) = iso();
        let inp = RecoveryInput::new(1.0, Function1D::constant(1.0), Function1D::zero()).unwrap();
        assert!(matches!(LvkRecovery::new(&inp, &q, 0.1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn lvk_zero_data_report_is_zero() {
        let (q, c) = iso();
        let inp = RecoveryInput::new(1.0, Function1D::zero(), Function1D::zero()).unwrap();
        let rep = gamma_report(ModelKind::Lvk, &inp, &q, &c, &[0.2, 0.1], &quad()).unwrap();
        assert!(rep.rows.iter().all(|r| r.recovery == 0.0 && r.limit == 0.0 && r.rel_error == 0.0));
    }
}
