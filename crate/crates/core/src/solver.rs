//! Descent methods on reduced coordinates.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Stop when the optimality measure is below `tol · (1 + |E|)`.
    pub tol: f64,
    pub max_iters: usize,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 500,
            memory: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub energy: f64,
    /// Reduced gradient norm for L-BFGS, Newton decrement `gᵀH⁻¹g` for Newton.
    pub residual: f64,
    /// No accepted step raised the energy by more than rounding noise.
    pub monotone: bool,
}

/// Energy changes below this relative size are treated as rounding noise.
const ENERGY_NOISE: f64 = 1e-12;

/// Backtracking with the Armijo test. Once the energy difference is at
/// rounding level the approximate Wolfe test on the directional derivative
/// takes over, so steps stay possible after the energy has converged.
fn armijo(
    f: &impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    x: &DVector<f64>,
    e: f64,
    g: &DVector<f64>,
    d: &DVector<f64>,
) -> Option<(DVector<f64>, f64, DVector<f64>)> {
    let slope = g.dot(d);
    if !(slope < 0.0) {
        return None;
    }
    let noise = ENERGY_NOISE * (1.0 + e.abs());
    let mut t = 1.0;
    for _ in 0..60 {
        let xn = x + d * t;
        let (en, gn) = f(&xn);
        if en.is_finite() {
            if en <= e + 1e-4 * t * slope {
                return Some((xn, en, gn));
            }
            let sn = gn.dot(d);
            if en <= e + noise && 0.9 * slope <= sn && sn <= -0.8 * slope {
                return Some((xn, en, gn));
            }
        }
        t *= 0.5;
    }
    None
}

/// Limited-memory BFGS with initial inverse Hessian `precond`.
pub fn lbfgs(
    f: impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    precond: impl Fn(&DVector<f64>) -> DVector<f64>,
    x0: DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, SolveStats)> {
    let mut x = x0;
    let (mut e, mut g) = f(&x);
    let mut hist: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut monotone = true;
    for it in 0..=opts.max_iters {
        let gn = g.norm();
        if gn <= opts.tol * (1.0 + e.abs()) {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    energy: e,
                    residual: gn,
                    monotone,
                },
            ));
        }
        if it == opts.max_iters {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * s.dot(&q);
            q.axpy(-a, y, 1.0);
            alphas.push(a);
        }
        let mut r = precond(&q);
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&r);
            r.axpy(a - b, s, 1.0);
        }
        let mut d = -r;
        let step = match armijo(&f, &x, e, &g, &d) {
            Some(s) => s,
            None => {
                hist.clear();
                d = -precond(&g);
                match armijo(&f, &x, e, &g, &d) {
                    Some(s) => s,
                    None => break,
                }
            }
        };
        let (xn, en, gn_vec) = step;
        if en > e + ENERGY_NOISE * (1.0 + e.abs()) {
            monotone = false;
        }
        let s = &xn - &x;
        let y = &gn_vec - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > opts.memory {
                hist.pop_front();
            }
        }
        x = xn;
        e = en;
        g = gn_vec;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        energy: e,
        grad_norm: g.norm(),
        tolerance: opts.tol * (1.0 + e.abs()),
    })
}

/// Damped Newton with Armijo backtracking. A Hessian that fails Cholesky is
/// shifted by a growing multiple of its largest diagonal entry.
pub fn newton(
    f: impl Fn(&DVector<f64>) -> (f64, DVector<f64>),
    hess: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    x0: DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, SolveStats)> {
    let mut x = x0;
    let (mut e, mut g) = f(&x);
    let mut monotone = true;
    for it in 0..=opts.max_iters {
        let h = hess(&x);
        let d = newton_direction(h, &g)?;
        let dec = -g.dot(&d);
        if 0.5 * dec <= opts.tol * (1.0 + e.abs()) {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    energy: e,
                    residual: dec,
                    monotone,
                },
            ));
        }
        if it == opts.max_iters {
            break;
        }
        let Some((xn, en, gn)) = armijo(&f, &x, e, &g, &d) else {
            return Err(Error::NonConvergence {
                iterations: it,
                energy: e,
                grad_norm: dec,
                tolerance: opts.tol * (1.0 + e.abs()),
            });
        };
        if en > e + ENERGY_NOISE * (1.0 + e.abs()) {
            monotone = false;
        }
        x = xn;
        e = en;
        g = gn;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        energy: e,
        grad_norm: g.norm(),
        tolerance: opts.tol * (1.0 + e.abs()),
    })
}

fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let diag = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..40 {
        let mut hs = h.clone();
        if shift > 0.0 {
            for i in 0..hs.nrows() {
                hs[(i, i)] += shift;
            }
        }
        if let Some(c) = hs.cholesky() {
            return Ok(-c.solve(g));
        }
        shift = if shift == 0.0 { 1e-10 * diag } else { shift * 10.0 };
    }
    Err(Error::SingularSystem("Newton Hessian could not be regularized".into()))
}

/// Cholesky solve of an SPD system.
pub fn spd_solve(k: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = k.nrows();
    let scale = k.diagonal().amax();
    let c = k
        .cholesky()
        .ok_or_else(|| Error::SingularSystem(format!("{n}×{n} system is not positive definite")))?;
    let min_piv = c.l_dirty().diagonal().amin();
    if !(min_piv * min_piv > 1e-14 * scale) {
        return Err(Error::SingularSystem(format!(
            "{n}×{n} system is numerically singular"
        )));
    }
    Ok(c.solve(rhs))
}
