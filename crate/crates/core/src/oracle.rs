//! Independent reference computations used to cross-check the production
//! paths. Nothing here is called by the solvers.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quadform::{QuadForm2, QuadForm3, SymMat2};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal function on `[a, b]`; returns `(argmin, min)`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Convex scalar minimization with automatic bracket growth around `x0`.
pub fn golden_minimize(f: impl Fn(f64) -> f64, x0: f64, scale: f64) -> (f64, f64) {
    let mut r = scale.max(1e-3);
    // grow until both ends sit above the centre value
    while f(x0 - r) < f(x0) || f(x0 + r) < f(x0) {
        r *= 4.0;
        if r > 1e12 {
            break;
        }
    }
    golden_section(&f, x0 - r, x0 + r, 160)
}

/// `min Q2(κ, τ; γ)` over γ by golden section.
pub fn q1_golden(q: &QuadForm2, kappa: f64, tau: f64) -> (f64, f64) {
    let s = 1.0 + kappa.abs() + tau.abs();
    let (g, v) = golden_minimize(|g| q.eval(&SymMat2::new(kappa, tau, g)), 0.0, 4.0 * s);
    (v, g)
}

/// `min Q2 + α⁺(det)⁺ + α⁻(det)⁻` over γ by golden section.
pub fn qbar_golden(q: &QuadForm2, ap: f64, am: f64, kappa: f64, tau: f64) -> (f64, f64) {
    let s = 1.0 + kappa.abs() + tau.abs() + tau * tau / kappa.abs().max(1e-3);
    let f = |g: f64| {
        let m = SymMat2::new(kappa, tau, g);
        let d = m.det();
        q.eval(&m) + ap * d.max(0.0) + am * (-d).max(0.0)
    };
    let (g, v) = golden_minimize(f, 0.0, 4.0 * s);
    (v, g)
}

/// `min Q2(μ, z1; z2)` by nested golden section.
pub fn q0_golden(q: &QuadForm2, mu: f64) -> (f64, (f64, f64)) {
    let s = 4.0 * (1.0 + mu.abs());
    let inner = |z1: f64| golden_minimize(|z2| q.eval(&SymMat2::new(mu, z1, z2)), 0.0, s);
    let (z1, v) = golden_minimize(|z1| inner(z1).1, 0.0, s);
    (v, (z1, inner(z1).0))
}

/// `min Q3(F)` over `(f33, f23, f13)` with `(f11, f22, f12)` from `a`, by
/// three nested golden-section searches.
pub fn q3_reduced_golden(q3: &QuadForm3, a: &SymMat2, radius: f64) -> f64 {
    let eval = |x: f64, y: f64, z: f64| q3.eval(&[a.a11, a.a22, x, y, z, a.a12]);
    let it = 110;
    let level3 = |x: f64, y: f64| golden_section(|z| eval(x, y, z), -radius, radius, it).1;
    let level2 = |x: f64| golden_section(|y| level3(x, y), -radius, radius, it).1;
    golden_section(level2, -radius, radius, it).1
}

/// Sampled relaxation constants: infima of `Q2/(-det)` and `Q2/det` over
/// `samples` random unit-norm matrices, each polished by a local simplex
/// search started at the best sample.
pub fn alpha_sampled(q: &QuadForm2, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_p = (f64::INFINITY, [0.0, 0.0]);
    let mut best_m = (f64::INFINITY, [0.0, 0.0]);
    let ratio = |ang: [f64; 2], sign: f64| {
        let v = sphere(ang);
        let m = SymMat2::from_voigt(&v);
        let d = sign * m.det();
        if d <= 0.0 {
            f64::INFINITY
        } else {
            q.eval(&m) / d
        }
    };
    for _ in 0..samples {
        let v = Vector3::new(gauss(&mut rng), gauss(&mut rng), gauss(&mut rng));
        let n = v.norm();
        if n == 0.0 {
            continue;
        }
        let v = v / n;
        let ang = [v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0])];
        let rp = ratio(ang, -1.0);
        if rp < best_p.0 {
            best_p = (rp, ang);
        }
        let rm = ratio(ang, 1.0);
        if rm < best_m.0 {
            best_m = (rm, ang);
        }
    }
    let ap = nelder_mead(|a| ratio(a, -1.0), best_p.1, 1e-2, 400);
    let am = nelder_mead(|a| ratio(a, 1.0), best_m.1, 1e-2, 400);
    (ap.min(best_p.0), am.min(best_m.0))
}

fn sphere(ang: [f64; 2]) -> Vector3<f64> {
    let (st, ct) = ang[0].sin_cos();
    let (sp, cp) = ang[1].sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

fn gauss(rng: &mut impl Rng) -> f64 {
    // Box–Muller
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Two-dimensional Nelder–Mead; returns the best value found.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], step: f64, iters: usize) -> f64 {
    let mut s = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut fs = s.map(&f);
    for _ in 0..iters {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        s = idx.map(|i| s[i]);
        fs = idx.map(|i| fs[i]);
        let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let at = |t: f64| [c[0] + t * (s[2][0] - c[0]), c[1] + t * (s[2][1] - c[1])];
        let xr = at(-1.0);
        let fr = f(xr);
        if fr < fs[0] {
            let xe = at(-2.0);
            let fe = f(xe);
            if fe < fr {
                s[2] = xe;
                fs[2] = fe;
            } else {
                s[2] = xr;
                fs[2] = fr;
            }
        } else if fr < fs[1] {
            s[2] = xr;
            fs[2] = fr;
        } else {
            let xc = at(0.5);
            let fc = f(xc);
            if fc < fs[2] {
                s[2] = xc;
                fs[2] = fc;
            } else {
                for k in 1..3 {
                    s[k] = [(s[0][0] + s[k][0]) / 2.0, (s[0][1] + s[k][1]) / 2.0];
                    fs[k] = f(s[k]);
                }
            }
        }
    }
    fs.into_iter().fold(f64::INFINITY, f64::min)
}

/// Central finite-difference gradient with relative step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            xp[i] = x[i] + step;
            let fp = f(&xp);
            xp[i] = x[i] - step;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::Material;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, v) = golden_minimize(|x| (x - 3.0).powi(2) + 1.0, 0.0, 1.0);
        assert!((x - 3.0).abs() < 1e-7 && (v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampled_alpha_close_to_isotropic() {
        let q = QuadForm2::isotropic(&Material::new(1.0, 1.0).unwrap()).unwrap();
        let (ap, am) = alpha_sampled(&q, 2000, 7);
        assert!((ap - 4.0).abs() < 1e-8, "{ap}");
        assert!((am - 20.0 / 3.0).abs() < 1e-8, "{am}");
    }

    #[test]
    fn fd_of_quadratic() {
        let g = fd_gradient(|x| x[0] * x[0] + 3.0 * x[0] * x[1], &[1.0, 2.0], 1e-5);
        assert!((g[0] - 8.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
