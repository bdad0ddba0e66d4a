mod common;

use common::{dv, random_spd, random_vec};
use nestad::fixedpoint::{fixed_point, FpConfig};
use nestad::optim::{argmin_newton, argmin_newton_with, NewtonConfig};
use nestad::{grad, grad_forward, jacobian_forward, jacobian_reverse, Error, Phase, Result, D, DM, DV};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// x = 0.5 sin(x) + b, a contraction in x.
fn scalar_map(x: &DV<f64>, b: &DV<f64>) -> Result<DV<f64>> {
    x.map(|d| d.sin() * 0.5).add(b)
}

fn solve_scalar(b: &DV<f64>) -> Result<D<f64>> {
    Ok(fixed_point(scalar_map, &DV::zeros(1), b, &FpConfig::default())?.get(0))
}

fn plain_solve(b: f64) -> f64 {
    let mut x = 0.0f64;
    for _ in 0..200 {
        x = 0.5 * x.sin() + b;
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fixed_point_modes_agree(b in -2.0f64..2.0) {
        let fwd = grad_forward(solve_scalar, &dv(&[b])).unwrap().values()[0];
        let rev = grad(solve_scalar, &dv(&[b])).unwrap().values()[0];
        let h = 1e-6;
        let fd = (plain_solve(b + h) - plain_solve(b - h)) / (2.0 * h);
        prop_assert!((fwd - rev).abs() <= 1e-6 * fwd.abs().max(1.0));
        prop_assert!((fwd - fd).abs() <= 1e-6 * fd.abs().max(1.0));
        // implicit function theorem: dx/db = 1 / (1 - 0.5 cos x*)
        let xs = plain_solve(b);
        prop_assert!((rev - 1.0 / (1.0 - 0.5 * xs.cos())).abs() <= 1e-8);
    }

    #[test]
    fn fixed_point_ignores_start(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = dv(&random_vec(&mut rng, n, -1.0, 1.0));
        let cfg = FpConfig::default();
        let g = |x: &DV<f64>, b: &DV<f64>| x.map(|d| d.tanh() * 0.4).add(b);
        let a = fixed_point(g, &dv(&random_vec(&mut rng, n, -5.0, 5.0)), &b, &cfg).unwrap();
        let c = fixed_point(g, &dv(&random_vec(&mut rng, n, -5.0, 5.0)), &b, &cfg).unwrap();
        for (p, q) in a.values().iter().zip(c.values()) {
            prop_assert!((p - q).abs() <= 10.0 * cfg.tol);
        }
    }

    #[test]
    fn vector_fixed_point_jacobians_agree(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DM::from_rows_vec(&(0..n).map(|_| random_vec(&mut rng, n, -0.3, 0.3)).collect::<Vec<_>>()).unwrap();
        let solve = |b: &DV<f64>| {
            let g = |x: &DV<f64>, b: &DV<f64>| w.matvec(&x.map(|d| d.tanh()))?.add(b);
            fixed_point(g, &DV::zeros(n), b, &FpConfig::default())
        };
        let b = dv(&random_vec(&mut rng, n, -1.0, 1.0));
        let jf = jacobian_forward(solve, &b).unwrap();
        let jr = jacobian_reverse(solve, &b).unwrap();
        prop_assert!(jf.values().max_abs_diff(jr.values()) <= 1e-6);
    }

    #[test]
    fn newton_solves_quadratics_in_one_step(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DM::from_matrix(random_spd(&mut rng, n));
        let b = dv(&random_vec(&mut rng, n, -1.0, 1.0));
        let x0 = dv(&random_vec(&mut rng, n, -10.0, 10.0));
        let f = |x: &DV<f64>| Ok(x.dot(&a.matvec(x)?)? * 0.5 - x.dot(&b)? + 2.0);
        let report = argmin_newton_with(&NewtonConfig::new(1e-8), f, &x0).unwrap();
        prop_assert_eq!(report.updates, 1);
        prop_assert!(report.grad_norm < 1e-8);
        let r = a.matvec(&report.x).unwrap().sub(&b).unwrap();
        prop_assert!(r.values().iter().all(|v| v.abs() < 1e-8));
    }
}

#[test]
fn newton_reports_indefinite_hessian() {
    let saddle = |x: &DV<f64>| Ok(x.get(0) * x.get(0) - x.get(1) * x.get(1));
    match argmin_newton(1e-8, saddle, &dv(&[1.0, 1.0])) {
        Err(Error::NotPositiveDefinite { iterate }) => assert_eq!(iterate, vec![1.0, 1.0]),
        other => panic!("expected NotPositiveDefinite, got {other:?}"),
    }
}

#[test]
fn newton_respects_iteration_cap() {
    let f = |x: &DV<f64>| Ok(x.get(0).powi(4) + x.get(0) * x.get(0));
    let cfg = NewtonConfig { eps: 1e-300, max_iter: 3 };
    match argmin_newton_with(&cfg, f, &dv(&[5.0])) {
        Err(Error::NonConvergence { phase: Phase::Newton, iterations: 3, .. }) => {}
        other => panic!("expected NonConvergence, got {other:?}"),
    }
}

#[test]
fn fixed_point_divergence_is_reported() {
    let g = |x: &DV<f64>, b: &DV<f64>| x.scale(&D::from(2.0)).add(b);
    let err = fixed_point(g, &dv(&[0.0]), &dv(&[1.0]), &FpConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NonConvergence { phase: Phase::Primal, .. }), "{err}");
}
