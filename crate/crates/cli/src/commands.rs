//! The subcommands. Each builds tables, curves and checks from a validated
//! configuration; writing them is left to the caller.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vk_ribbon::oracle::{alpha_sampled, fd_gradient};
use vk_ribbon::plate2d::StripQuadrature;
use vk_ribbon::profile::Function1D;
use vk_ribbon::quadform::{isotropic, qbar, QbarBranch};
use vk_ribbon::recovery::{gamma_report, RecoveryInput};
use vk_ribbon::ribbon1d::{self, Field1D, IntervalMesh, ModelKind};
use vk_ribbon::sweep::gamma_sweep;
use vk_ribbon::{QuadForm2, RelaxConstants};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{Check, Plot, RunOutput, Table};

/// Constraint residuals of a 1D minimizer above this (relative to the
/// coefficient scale) fail the run.
const CONSTRAINT_TOL: f64 = 1e-10;

fn form(cfg: &ExperimentConfig) -> Result<(QuadForm2, RelaxConstants), CliError> {
    let q = cfg.material.quad_form()?;
    let c = q.alpha_pm();
    Ok((q, c))
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
fn discrepancy(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn bool_real(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn density(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = cfg
        .material
        .isotropic()?
        .ok_or_else(|| CliError::config("density needs an isotropic material (mu, lambda)"))?;
    let q = QuadForm2::isotropic(&m)?;
    let c = q.alpha_pm();
    let d = &cfg.density;
    let tol = cfg.tolerances.density;

    let mut table = Table::new(
        "density",
        &[
            "kappa",
            "tau",
            "q1",
            "q1_closed",
            "q0",
            "q0_closed",
            "qbar",
            "qbar_closed",
            "qbar_branch",
            "max_rel",
            "tol",
        ],
    );
    let mut worst: f64 = 0.0;
    let kappas = grid(d.kappa_min, d.kappa_max, d.points);
    let taus = grid(d.tau_min, d.tau_max, d.points);
    let mut along_kappa = Vec::new();
    for &kappa in &kappas {
        for &tau in &taus {
            let q1 = q.q1(kappa, tau).value;
            let q1c = isotropic::q1_iso(&m, kappa, tau);
            let q0 = q.q0(kappa).value;
            let q0c = isotropic::q0_iso(&m, kappa);
            let qb = qbar(&q, &c, kappa, tau);
            let qbc = isotropic::qbar_iso(&m, kappa, tau);
            let branch = match qb.branch {
                QbarBranch::Developable => 0.0,
                QbarBranch::Positive => 1.0,
                QbarBranch::Negative => -1.0,
            };
            let r = discrepancy(q1, q1c).max(discrepancy(q0, q0c)).max(discrepancy(qb.value, qbc));
            worst = worst.max(r);
            table.push(vec![kappa, tau, q1, q1c, q0, q0c, qb.value, qbc, branch, r, tol]);
        }
        along_kappa.push((kappa, qbar(&q, &c, kappa, 0.5 * (d.tau_min + d.tau_max)).value));
    }

    let (ap, am) = isotropic::alpha_iso(&m);
    let ar = discrepancy(c.alpha_plus, ap).max(discrepancy(c.alpha_minus, am));
    worst = worst.max(ar);
    let mut alpha = Table::new(
        "alpha",
        &["alpha_plus", "alpha_minus", "alpha_plus_closed", "alpha_minus_closed", "max_rel", "tol"],
    );
    alpha.push(vec![c.alpha_plus, c.alpha_minus, ap, am, ar, tol]);

    let tau_mid = 0.5 * (d.tau_min + d.tau_max);
    let along_tau = taus.iter().map(|&t| (t, qbar(&q, &c, d.kappa_max, t).value)).collect();
    Ok(RunOutput {
        tables: vec![table, alpha],
        plots: vec![
            Plot::new("qbar_kappa", "kappa", &format!("qbar(kappa,{tau_mid})"), along_kappa),
            Plot::new("qbar_tau", "tau", &format!("qbar({},tau)", d.kappa_max), along_tau),
        ],
        checks: vec![Check::at_most("density_discrepancy", worst, tol)],
        notes: Vec::new(),
    })
}

pub fn alpha(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (q, c) = form(cfg)?;
    let a = &cfg.alpha;
    let tol = cfg.tolerances.alpha;
    let (sp, sm) = alpha_sampled(&q, a.samples, a.seed);
    let (cp, cm) = match cfg.material.isotropic()? {
        Some(m) if cfg.material.rep.is_none() => isotropic::alpha_iso(&m),
        _ => (f64::NAN, f64::NAN),
    };
    let r = discrepancy(c.alpha_plus, sp).max(discrepancy(c.alpha_minus, sm));
    let mut t = Table::new(
        "alpha",
        &[
            "alpha_plus",
            "alpha_minus",
            "alpha_plus_sampled",
            "alpha_minus_sampled",
            "alpha_plus_closed",
            "alpha_minus_closed",
            "max_rel",
            "samples",
            "seed",
            "tol",
        ],
    );
    t.push(vec![
        c.alpha_plus,
        c.alpha_minus,
        sp,
        sm,
        cp,
        cm,
        r,
        a.samples as f64,
        a.seed as f64,
        tol,
    ]);
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![Check::at_most("alpha_pencil_vs_sampled", r, tol)],
        ..RunOutput::default()
    })
}

pub fn minimize1d(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (q, c) = form(cfg)?;
    let kind = cfg.model.kind;
    let bc = cfg.model.constraints;
    let mesh = IntervalMesh::uniform(cfg.geometry.ell, cfg.geometry.n1d)?;
    let r = ribbon1d::minimize(kind, &mesh, &q, &c, &cfg.loads, bc, &cfg.solver, None)?;
    let n = mesh.n_elems() as f64;
    let tol = cfg.solver.tol;

    let mut field = Table::new("field", &["x", "xi1", "xi2", "w", "theta", "n_elems", "tol"]);
    let mut curves: [Vec<(f64, f64)>; 4] = Default::default();
    for &x in mesh.nodes() {
        let p = r.field.eval(x)?;
        field.push(vec![x, p.xi1, p.xi2, p.w, p.theta, n, tol]);
        for (k, v) in [p.w, p.theta, p.xi1, p.xi2].into_iter().enumerate() {
            curves[k].push((x, v));
        }
    }
    let e = &r.report;
    let mut energy = Table::new(
        "energy",
        &[
            "total",
            "stretching",
            "bending_out",
            "bending_in",
            "torsion",
            "load_work",
            "iterations",
            "residual",
            "n_elems",
            "tol",
        ],
    );
    energy.push(vec![
        e.total,
        e.stretching,
        e.bending_out,
        e.bending_in,
        e.torsion,
        e.load_work,
        r.stats.iterations as f64,
        r.stats.residual,
        n,
        tol,
    ]);

    let scale = 1.0 + r.field.coeffs.amax();
    let resid = r
        .field
        .constraint_residuals(bc)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        / scale;
    let [w, theta, xi1, xi2] = curves;
    let mut plots = vec![Plot::new("w", "x", "w", w), Plot::new("theta", "x", "theta", theta)];
    if kind == ModelKind::Vk {
        plots.push(Plot::new("xi1", "x", "xi1", xi1));
        plots.push(Plot::new("xi2", "x", "xi2", xi2));
    }
    Ok(RunOutput {
        tables: vec![field, energy],
        plots,
        checks: vec![Check::at_most("constraint_residual", resid, CONSTRAINT_TOL)],
        notes: Vec::new(),
    })
}

pub fn gamma_sweep_cmd(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (q, c) = form(cfg)?;
    let kind = cfg.model.kind;
    let rep = gamma_sweep(kind, cfg.geometry.ell, &q, &c, &cfg.loads, &cfg.eps, &cfg.sweep_options())?;
    let tol = cfg.plate.solver.tol;
    let limit = rep.limit1d;

    let mut t = Table::new(
        "sweep",
        &[
            "eps",
            "nx",
            "ny",
            "tol",
            "min2d",
            "recovery",
            "limit1d",
            "gap_min2d",
            "gap_recovery",
            "det_residual",
            "penalty_min",
            "penalty_recovery",
            "iterations",
            "h12",
            "h22",
            "e12",
            "e22",
            "bracket",
        ],
    );
    let mut notes = Vec::new();
    let mut compact: f64 = 0.0;
    let (mut p_min, mut p_rec, mut p_lim) = (Vec::new(), Vec::new(), Vec::new());
    for r in &rep.rows {
        let gap = |v: Option<f64>| v.map(|v| vk_ribbon::recovery::relative_error(v, limit));
        let cd = r.compactness;
        if let Some(d) = cd {
            compact = compact.max(d.h12).max(d.h22);
        }
        t.push(vec![
            r.eps,
            r.nx as f64,
            r.ny as f64,
            tol,
            opt(r.min2d),
            opt(r.recovery),
            limit,
            opt(gap(r.min2d)),
            opt(gap(r.recovery)),
            opt(r.det_residual),
            r.penalty_min,
            r.penalty_recovery,
            opt(r.iterations.map(|i| i as f64)),
            opt(cd.map(|d| d.h12)),
            opt(cd.map(|d| d.h22)),
            opt(cd.map(|d| d.e12)),
            opt(cd.map(|d| d.e22)),
            bool_real(r.bracket_holds()),
        ]);
        if let Some(e) = &r.error {
            notes.push(format!("eps = {}: {e}", r.eps));
        }
        if let Some(v) = r.min2d {
            p_min.push((r.eps, v));
        }
        if let Some(v) = r.recovery {
            p_rec.push((r.eps, v));
        }
        p_lim.push((r.eps, limit));
    }

    let bound = cfg.tolerances.sweep_gap;
    let (g_min, g_rec) = rep.final_gaps().unwrap_or((f64::NAN, f64::NAN));
    let failed_rows = rep.rows.iter().filter(|r| r.error.is_some()).count();
    let checks = vec![
        Check::flag("rows_completed", failed_rows == 0, format!("{failed_rows} row(s) failed")),
        Check::flag(
            "bracket",
            rep.bracket_holds(),
            "min2d <= recovery on the penalized objective at every eps",
        ),
        Check::at_most("final_gap_min2d", g_min, bound),
        Check::at_most("final_gap_recovery", g_rec, bound),
        Check::at_most("compactness", compact, cfg.tolerances.compactness)
            .with_detail("max of |d12 w|/eps and |d22 w|/eps^2 over the sweep"),
    ];
    Ok(RunOutput {
        tables: vec![t],
        plots: vec![
            Plot::new("min2d", "eps", "min2d", p_min),
            Plot::new("recovery", "eps", "recovery", p_rec),
            Plot::new("limit1d", "eps", "limit1d", p_lim),
        ],
        checks,
        notes,
    })
}

fn recovery_input(cfg: &ExperimentConfig) -> Result<RecoveryInput, CliError> {
    let r = &cfg.recovery;
    let ell = cfg.geometry.ell;
    let in_plane = !r.xi1.is_zero() || !r.xi2.is_zero();
    if in_plane && cfg.model.kind != ModelKind::Vk {
        return Err(CliError::config("recovery.xi1 and recovery.xi2 are only used by the vk model"));
    }
    let norm = |f: &Function1D, slope: bool| match (r.normalize, slope) {
        (false, _) => f.clone(),
        (true, false) => f.zero_mean(ell),
        (true, true) => f.zero_mean_and_slope(ell),
    };
    let mut input = RecoveryInput::new(ell, norm(&r.w, true), norm(&r.theta, false))?;
    if cfg.model.kind == ModelKind::Vk {
        input = input.with_in_plane(norm(&r.xi1, false), norm(&r.xi2, true));
    }
    input.validate()?;
    Ok(input)
}

pub fn recovery(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (q, c) = form(cfg)?;
    let input = recovery_input(cfg)?;
    let r = &cfg.recovery;
    let quad = StripQuadrature::new(cfg.geometry.ell, r.cells_x, r.cells_y, r.order);
    let rep = gamma_report(cfg.model.kind, &input, &q, &c, &cfg.eps, &quad)?;
    let bound = cfg.tolerances.recovery;

    let mut t = Table::new(
        "recovery",
        &["eps", "cells_x", "cells_y", "order", "recovery", "limit", "rel_error", "bound"],
    );
    for row in &rep.rows {
        t.push(vec![
            row.eps,
            r.cells_x as f64,
            r.cells_y as f64,
            r.order as f64,
            row.recovery,
            row.limit,
            row.rel_error,
            bound,
        ]);
    }
    let last = rep.rows.last().map_or(f64::NAN, |r| r.rel_error);
    Ok(RunOutput {
        tables: vec![t],
        plots: vec![
            Plot::new("rel_error", "eps", "rel_error", rep.rows.iter().map(|r| (r.eps, r.rel_error)).collect()),
            Plot::new("energy", "eps", "recovery", rep.rows.iter().map(|r| (r.eps, r.recovery)).collect()),
        ],
        checks: vec![Check::at_most("final_rel_error", last, bound)],
        notes: Vec::new(),
    })
}

fn random_field(rng: &mut ChaCha8Rng, mesh: &IntervalMesh, a: f64) -> Field1D {
    let len = 6 * mesh.n_nodes();
    Field1D::from_coeffs(mesh, DVector::from_fn(len, |_, _| rng.gen_range(-a..a))).expect("layout length")
}

/// Random field with `w'' ∈ [1, 2]` and `|θ'| ≤ 0.6` on a unit interval, so
/// the relaxed density stays on its smooth developable branch.
fn random_developable_field(rng: &mut ChaCha8Rng, mesh: &IntervalMesh) -> Field1D {
    let k0 = rng.gen_range(1.2..1.6);
    let k1 = rng.gen_range(-0.3..0.3);
    let t0 = rng.gen_range(-0.3..0.3);
    let t1 = rng.gen_range(-0.2..0.2);
    let w = Function1D::poly(&[rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 0.5 * k0, k1 / 6.0]);
    let theta = Function1D::poly(&[rng.gen_range(-0.1..0.1), t0, 0.5 * t1]);
    let xi = Function1D::poly(&[rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)]);
    Field1D::interpolate(mesh, &xi, &xi, &w, &theta)
}

pub fn gradcheck(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (q, c) = form(cfg)?;
    let g = &cfg.gradcheck;
    let kind = cfg.model.kind;
    let ell = if kind == ModelKind::Cvk { 1.0 } else { cfg.geometry.ell };
    let mesh = IntervalMesh::uniform(ell, g.n_elems)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let fields: Vec<Field1D> = (0..g.fields)
        .map(|_| match kind {
            ModelKind::Cvk => random_developable_field(&mut rng, &mesh),
            _ => random_field(&mut rng, &mesh, g.amplitude),
        })
        .collect();
    let errors: Vec<(f64, f64)> = fields
        .par_iter()
        .map(|f| {
            let grad = ribbon1d::gradient(kind, f, &q, &c);
            let x: Vec<f64> = f.coeffs.iter().copied().collect();
            let fd = fd_gradient(
                |y| {
                    let mut h = f.clone();
                    h.coeffs.copy_from_slice(y);
                    ribbon1d::energy(kind, &h, &q, &c).internal()
                },
                &x,
                g.step,
            );
            let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (diff / grad.norm().max(f64::MIN_POSITIVE), grad.norm())
        })
        .collect();

    let tol = cfg.tolerances.gradcheck;
    let mut t = Table::new("gradcheck", &["field", "n_elems", "step", "rel_error", "grad_norm", "tol"]);
    for (i, &(e, n)) in errors.iter().enumerate() {
        t.push(vec![i as f64, g.n_elems as f64, g.step, e, n, tol]);
    }
    let worst = errors.iter().fold(0.0f64, |a, &(e, _)| if a.is_nan() || e.is_nan() { f64::NAN } else { a.max(e) });
    Ok(RunOutput {
        tables: vec![t],
        plots: vec![Plot::new(
            "rel_error",
            "field",
            "rel_error",
            errors.iter().enumerate().map(|(i, &(e, _))| (i as f64, e)).collect(),
        )],
        checks: vec![Check::at_most("max_rel_error", worst, tol).with_detail(format!("{kind} energy"))],
        notes: Vec::new(),
    })
}
