//! Values frozen from independent high-precision evaluation and reference
//! solvers that share no code with the crate.

#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use delaydisp_core::analysis::{compute_gamma, compute_m, compute_tau_interval, HistoryProbe};
use delaydisp_core::grid::{assemble_d1, assemble_d2, assemble_d4};
use delaydisp_core::verify::{
    clamped_beta1, clamped_eigen_reference, dense_cross_check, dirichlet_d2_eigen,
    smallest_eigenvalue, DenseLu, ManufacturedCase,
};
use delaydisp_core::*;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

// 50-digit evaluations of the closed forms.
const GAMMA_REF: f64 = 10122.671180604470378;
const TAU1_REF: f64 = -0.01883237652352412294;
const TAU2_REF: f64 = 0.015847849781743660806;
// ln M for v = sin(pi x), tau = 1, from the exact continuous norms.
const LN_M_SINE_REF: f64 = 25236.43455249384377;

#[test]
fn gamma_matches_high_precision() {
    let g = compute_gamma(1.0, 1.0, 0.001, 0.01, 1.0).unwrap();
    assert_relative_eq!(g, GAMMA_REF, max_relative = 1e-14);
    assert_relative_eq!(g, 4.0 * PI * PI / 0.0039, max_relative = 1e-14);
}

#[test]
fn tau_interval_matches_high_precision() {
    let m = analysis::MConstant::from_value(1.0);
    let (t1, t2) = compute_tau_interval(&m, 0.01, 0.001, 1.0, 1.0).unwrap();
    assert_relative_eq!(t2, TAU2_REF, max_relative = 1e-12);
    assert_relative_eq!(t1, TAU1_REF, max_relative = 1e-12);
}

#[test]
fn m_for_unit_sine_overflows() {
    let grid = SpatialGrid::new(1.0, 999).unwrap();
    let ops = Operators::assemble(&grid);
    let q = Quadrature::trapezoidal(&grid);
    let spec = HistorySpec::constant(SpaceProfile::Sine {
        amplitude: 1.0,
        k: 1.0,
    });
    let norms = HistoryProbe::new(&spec, &ops, &q).norms(1.0, 0.001);
    let m = compute_m(&norms, GAMMA_REF, 1.0);
    assert!(m.overflow);
    assert_eq!(m.value, f64::INFINITY);
    // Discrete norms differ from the continuous ones at O(h).
    assert_relative_eq!(m.ln_value, LN_M_SINE_REF, max_relative = 1e-2);
}

#[test]
fn beta1_reference() {
    let b = clamped_beta1();
    assert!((b - 4.730041).abs() < 1e-6);
    assert!((b.cos() * b.cosh() - 1.0).abs() < 1e-9);
}

#[test]
fn clamped_eigen_second_order() {
    let levels = clamped_eigen_reference(&[50, 100, 200, 400], 1.0).unwrap();
    for w in levels.windows(2) {
        assert!(w[1].error < w[0].error);
    }
    let ratio = levels[1].error / levels[2].error;
    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn d2_discrete_eigenvalue_exact() {
    for n in [50, 100, 200] {
        let (got, exact) = dirichlet_d2_eigen(n, 1.0).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-12);
    }
}

fn to_nalgebra(op: &BandedOperator) -> DMatrix<f64> {
    let d = op.to_dense();
    DMatrix::from_fn(d.len(), d.len(), |i, j| d[i][j])
}

#[test]
fn operators_against_nalgebra_spectra() {
    let grid = SpatialGrid::new(1.0, 60).unwrap();
    let d4 = to_nalgebra(&assemble_d4(&grid));
    let d2 = to_nalgebra(&assemble_d2(&grid));
    assert_eq!(d4, d4.transpose());
    let e4 = d4.clone().symmetric_eigen().eigenvalues;
    let e2 = (-d2.clone()).symmetric_eigen().eigenvalues;
    assert!(e4.iter().all(|&l| l > 0.0));
    assert!(e2.iter().all(|&l| l > 0.0));
    let min4 = e4.iter().cloned().fold(f64::INFINITY, f64::min);
    let ours = smallest_eigenvalue(&assemble_d4(&grid)).unwrap();
    assert_relative_eq!(ours, min4, max_relative = 1e-10);
    // D4 - D2^2 is positive semidefinite (corner corrections only).
    let diff = &d4 - &d2 * &d2;
    assert!(diff
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .all(|&l| l > -1e-6));
}

#[test]
fn d1_is_skew() {
    let grid = SpatialGrid::new(1.0, 30).unwrap();
    let d1 = to_nalgebra(&assemble_d1(&grid));
    assert_eq!(d1.clone(), -d1.transpose());
}

#[test]
fn dense_cross_check_random_step() {
    let grid = SpatialGrid::new(1.0, 32).unwrap();
    let ops = Operators::assemble(&grid);
    let params = ModelParams::new(0.01, 0.001, 0.5, 1.0).unwrap();
    let a = sample_profile(&DampingProfile::constant(1.0, 1.0).unwrap(), &grid);
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let c: Vec<f64> = (0..32).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let rhs: Vec<f64> = (0..32).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        for alpha in [1.0 / 0.001, 1.5 / 0.001, 1.0 / 1e-6] {
            let d = dense_cross_check(&ops, &params, &a, alpha, &c, &rhs).unwrap();
            assert!(d < 1e-12, "discrepancy {d}");
        }
    }
    let zero = vec![0.0; 32];
    assert_eq!(
        dense_cross_check(&ops, &params, &a, 1000.0, &zero, &zero).unwrap(),
        0.0
    );
}

#[test]
fn dense_lu_against_nalgebra() {
    let mut rng = StdRng::seed_from_u64(11);
    let n = 24;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let ours = DenseLu::factor(&rows).unwrap().solve(&b);
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let theirs = m.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
    for (x, y) in ours.iter().zip(theirs.iter()) {
        assert!((x - y).abs() < 1e-10);
    }
}

/// Polynomial in `x` with coefficients in increasing degree.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_der(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn poly_eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[test]
fn manufactured_forcing_residual() {
    let ell = 1.3;
    let params = ModelParams::new(0.02, 0.003, 0.4, ell).unwrap();
    let profile = DampingProfile::new(DampingFamily::Affine { b0: 1.0, c1: 0.7 }, ell).unwrap();
    let case = ManufacturedCase::new(params, profile.clone());
    // g = x^2 (ell - x)^2 built by polynomial algebra.
    let lin = [ell, -1.0];
    let g = poly_mul(&poly_mul(&[0.0, 0.0, 1.0], &lin), &lin);
    let g1 = poly_der(&g);
    let g2 = poly_der(&g1);
    let g4 = poly_der(&poly_der(&g2));
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let x = ell * rng.gen::<f64>();
        let t = 3.0 * rng.gen::<f64>();
        let u = |tt: f64| (-tt).exp() * poly_eval(&g, x);
        let u_t = -u(t);
        let u_x = (-t).exp() * poly_eval(&g1, x);
        let u_xx = (-t).exp() * poly_eval(&g2, x);
        let u_xxxx = (-t).exp() * poly_eval(&g4, x);
        let lhs = u_t - params.nu * u_xx
            + params.mu * u_xxxx
            + u(t - params.tau) * u_x
            + profile.value(x) * u(t);
        let f = case.forcing(x, t);
        assert!(
            (lhs - f).abs() <= 1e-12 * (1.0 + lhs.abs()),
            "x={x} t={t}: {lhs} vs {f}"
        );
        assert_relative_eq!(
            case.u_star(x, t),
            u(t),
            max_relative = 1e-13,
            epsilon = 1e-15
        );
    }
}
