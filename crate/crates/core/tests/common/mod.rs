#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix3};
use proptest::prelude::*;
use rand::Rng;
use vk_ribbon::profile::Function1D;
use vk_ribbon::recovery::RecoveryInput;
use vk_ribbon::ribbon1d::{Field1D, IntervalMesh};
use vk_ribbon::{Material, QuadForm2, RelaxConstants};

pub fn iso(mu: f64, lambda: f64) -> (Material, QuadForm2, RelaxConstants) {
    let m = Material::new(mu, lambda).unwrap();
    let q = QuadForm2::isotropic(&m).unwrap();
    let c = q.alpha_pm();
    (m, q, c)
}

/// `L Lᵀ + δ I` from six entries of a lower triangle.
pub fn spd_from(entries: &[f64; 6], delta: f64) -> QuadForm2 {
    let l = Matrix3::new(
        entries[0], 0.0, 0.0, //
        entries[1], entries[2], 0.0, //
        entries[3], entries[4], entries[5],
    );
    QuadForm2::new(l * l.transpose() + Matrix3::identity() * delta).unwrap()
}

pub fn random_q2(rng: &mut impl Rng) -> QuadForm2 {
    let e: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    spd_from(&e, 0.2)
}

pub fn q2_strategy() -> impl Strategy<Value = QuadForm2> {
    (prop::array::uniform6(-1.0f64..1.0), 0.05f64..1.0).prop_map(|(e, d)| spd_from(&e, d))
}

pub fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Smooth data with twist, used for the limsup checks.
pub fn smooth_input() -> RecoveryInput {
    let w = Function1D::poly(&[0.0, 0.0, 0.5, 0.2])
        .with_cos(0.1, 2.0 * PI, 0.3)
        .zero_mean_and_slope(1.0);
    let theta = Function1D::poly(&[0.0, 0.4, 0.0, -0.3])
        .with_cos(0.05, 3.0, 0.0)
        .zero_mean(1.0);
    RecoveryInput::new(1.0, w, theta).unwrap()
}

pub fn smooth_input_in_plane() -> RecoveryInput {
    smooth_input().with_in_plane(
        Function1D::poly(&[0.0, 0.1, 0.0, 0.2]).zero_mean(1.0),
        Function1D::zero().with_cos(0.05, 2.0 * PI, 0.0),
    )
}

/// Data with `w'' > |θ'|` and a varying flat direction.
pub fn developable_input() -> RecoveryInput {
    let w = Function1D::poly(&[0.0, 0.0, 1.0, 0.1]).zero_mean_and_slope(1.0);
    let theta = Function1D::poly(&[0.0, 0.3, 0.05, 0.2, 0.015]).zero_mean(1.0);
    RecoveryInput::new(1.0, w, theta).unwrap()
}

/// Random discrete field on `n` elements with every coefficient in `[-a, a]`.
pub fn random_field(rng: &mut impl Rng, n: usize, a: f64) -> Field1D {
    let mesh = IntervalMesh::uniform(1.0, n).unwrap();
    let len = 6 * (n + 1);
    Field1D::from_coeffs(&mesh, DVector::from_fn(len, |_, _| rng.gen_range(-a..a))).unwrap()
}

/// Random field whose curvatures satisfy `w'' ∈ [1, 2]` and `|θ'| ≤ 0.6`, so
/// every quadrature point stays well inside the developable branch.
pub fn random_developable_field(rng: &mut impl Rng, n: usize) -> Field1D {
    let mesh = IntervalMesh::uniform(1.0, n).unwrap();
    let k0 = rng.gen_range(1.2..1.6);
    let k1 = rng.gen_range(-0.3..0.3);
    let t0 = rng.gen_range(-0.3..0.3);
    let t1 = rng.gen_range(-0.2..0.2);
    let w = Function1D::poly(&[rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 0.5 * k0, k1 / 6.0]);
    let theta = Function1D::poly(&[rng.gen_range(-0.1..0.1), t0, 0.5 * t1]);
    let xi = Function1D::poly(&[rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)]);
    Field1D::interpolate(&mesh, &xi, &xi, &w, &theta)
}
