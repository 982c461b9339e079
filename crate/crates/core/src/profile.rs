//! Smooth one-dimensional profiles on the ribbon interval.

use serde::{Deserialize, Serialize};

/// A function of the arc-length coordinate with derivatives up to any order.
pub trait Profile: Send + Sync {
    fn derivative(&self, x: f64, order: usize) -> f64;

    fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }
}

/// `amplitude · cos(wavenumber · x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosTerm {
    pub amplitude: f64,
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Polynomial (ascending coefficients) plus a sum of cosines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Function1D {
    #[serde(default)]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub cos: Vec<CosTerm>,
}

impl Function1D {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        Self {
            poly: coeffs.to_vec(),
            cos: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::poly(&[c])
    }

    pub fn with_cos(mut self, amplitude: f64, wavenumber: f64, phase: f64) -> Self {
        self.cos.push(CosTerm {
            amplitude,
            wavenumber,
            phase,
        });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|&c| c == 0.0) && self.cos.iter().all(|t| t.amplitude == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            poly: self.poly.iter().map(|c| c * s).collect(),
            cos: self
                .cos
                .iter()
                .map(|t| CosTerm {
                    amplitude: t.amplitude * s,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn plus_poly(&self, coeffs: &[f64]) -> Self {
        let mut out = self.clone();
        if out.poly.len() < coeffs.len() {
            out.poly.resize(coeffs.len(), 0.0);
        }
        for (c, a) in out.poly.iter_mut().zip(coeffs) {
            *c += a;
        }
        out
    }

    /// Antiderivative vanishing at `x = 0`.
    pub fn antiderivative(&self) -> Self {
        let mut poly = vec![0.0; self.poly.len() + 1];
        for (k, c) in self.poly.iter().enumerate() {
            poly[k + 1] = c / (k as f64 + 1.0);
        }
        let mut cos = Vec::new();
        for t in &self.cos {
            if t.wavenumber == 0.0 {
                let c = t.amplitude * t.phase.cos();
                if poly.len() < 2 {
                    poly.resize(2, 0.0);
                }
                poly[1] += c;
            } else {
                // A/k · sin(kx + φ) = A/k · cos(kx + φ - π/2)
                let a = t.amplitude / t.wavenumber;
                cos.push(CosTerm {
                    amplitude: a,
                    wavenumber: t.wavenumber,
                    phase: t.phase - std::f64::consts::FRAC_PI_2,
                });
                poly[0] -= a * t.phase.sin();
            }
        }
        Self { poly, cos }
    }

    /// `∫_a^b f`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let big = self.antiderivative();
        big.value(b) - big.value(a)
    }

    /// Mean over `(-ℓ/2, ℓ/2)`.
    pub fn mean(&self, ell: f64) -> f64 {
        self.integral(-0.5 * ell, 0.5 * ell) / ell
    }

    /// Shifted to zero mean on `(-ℓ/2, ℓ/2)`.
    pub fn zero_mean(&self, ell: f64) -> Self {
        self.plus_poly(&[-self.mean(ell)])
    }

    /// Affine correction so that `∫f = ∫f' = 0` on `(-ℓ/2, ℓ/2)`.
    pub fn zero_mean_and_slope(&self, ell: f64) -> Self {
        let h = 0.5 * ell;
        let b = (self.value(h) - self.value(-h)) / ell;
        self.plus_poly(&[0.0, -b]).zero_mean(ell)
    }
}

impl Profile for Function1D {
    fn derivative(&self, x: f64, order: usize) -> f64 {
        let mut s = 0.0;
        // Horner on the order-th derivative of the polynomial
        for k in (order..self.poly.len()).rev() {
            let mut f = 1.0;
            for j in 0..order {
                f *= (k - j) as f64;
            }
            s = s * x + f * self.poly[k];
        }
        for t in &self.cos {
            let arg = t.wavenumber * x + t.phase + order as f64 * std::f64::consts::FRAC_PI_2;
            s += t.amplitude * t.wavenumber.powi(order as i32) * arg.cos();
        }
        s
    }
}

impl<P: Profile + ?Sized> Profile for &P {
    fn derivative(&self, x: f64, order: usize) -> f64 {
        (**self).derivative(x, order)
    }
}

/// Profile given by a closure family `f(x, order)`.
pub struct FnProfile<F>(pub F);

impl<F: Fn(f64, usize) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn derivative(&self, x: f64, order: usize) -> f64 {
        (self.0)(x, order)
    }
}
