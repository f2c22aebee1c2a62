use delaydisp_core::analysis::{
    compute_omega, compute_tau_interval, omega_unchecked, HistoryProbe, MConstant, RateInputs,
    SigmaProblem, WIRTINGER_SLACK,
};
use delaydisp_core::verify::DenseLu;
use delaydisp_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tau_roots_straddle_zero(
        ln_m in -8.0f64..8.0,
        nu in 1e-4f64..1.0,
        mu in 1e-5f64..1.0,
        ell in 0.2f64..5.0,
        sup_a in 0.0f64..5.0,
    ) {
        let m = MConstant::from_ln(ln_m);
        let (t1, t2) = compute_tau_interval(&m, nu, mu, ell, sup_a).unwrap();
        prop_assert!(t1 < 0.0 && 0.0 < t2);
    }

    #[test]
    fn omega_decreases_to_zero(
        ln_m in -5.0f64..3.0,
        nu in 1e-3f64..0.5,
        mu in 1e-4f64..0.1,
        sup_a in 0.0f64..3.0,
    ) {
        let m = MConstant::from_ln(ln_m);
        let (_, t2) = compute_tau_interval(&m, nu, mu, 1.0, sup_a).unwrap();
        let rates = RateInputs { nu, mu, ell: 1.0, sup_a };
        prop_assert_eq!(omega_unchecked(0.0, &m, &rates), nu);
        let mut prev = nu;
        for k in 1..=20 {
            let tau = (t2 * k as f64 / 20.0).min(t2);
            let w = omega_unchecked(tau, &m, &rates);
            prop_assert!(w < prev);
            prev = w;
            let (_, wt) = compute_omega(tau, &m, nu, mu, 1.0, sup_a).unwrap();
            prop_assert!(wt >= 0.0);
        }
        prop_assert!(prev.abs() <= 1e-12 * nu);
    }

    #[test]
    fn fit_slope_scale_invariant(rate in -3.0f64..3.0, scale in 1e-3f64..1e3, noise in 0.0f64..0.1) {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let v: Vec<f64> = t.iter().enumerate()
            .map(|(k, &x)| (rate * x).exp() * (1.0 + noise * ((k * 7919 % 13) as f64 / 13.0)))
            .collect();
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        let a = fit_decay(&t, &v, (0.0, 10.0)).unwrap();
        let b = fit_decay(&t, &w, (0.0, 10.0)).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-12 * (1.0 + a.slope.abs()));
        prop_assert!((0.0..=1.0).contains(&a.r_squared));
    }

    #[test]
    fn banded_lu_matches_dense(
        entries in proptest::collection::vec(-1.0f64..1.0, 5 * 20),
        diag_shift in 0.0f64..3.0,
        rhs in proptest::collection::vec(-1.0f64..1.0, 20),
    ) {
        let n = 20;
        let mut op = BandedOperator::zeros(n, 2, 2);
        for i in 0..n {
            for (o, j) in (i.saturating_sub(2)..=(i + 2).min(n - 1)).enumerate() {
                op.set(i, j, entries[5 * i + o]);
            }
            op.add_to(i, i, diag_shift);
        }
        let dense = DenseLu::factor(&op.to_dense());
        let banded = BandedLu::factor(&op);
        if let (Ok(d), Ok(b)) = (dense, banded) {
            let x = d.solve(&rhs);
            let y = b.solve(&rhs);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn wirtinger_holds_for_clamped_profiles(
        coefs in proptest::collection::vec(-1.0f64..1.0, 4),
        n in 20usize..200,
    ) {
        let grid = SpatialGrid::new(1.0, n).unwrap();
        let ops = Operators::assemble(&grid);
        let q = Quadrature::trapezoidal(&grid);
        let u: Vec<f64> = grid.sample(|x| {
            let b = x * x * (1.0 - x) * (1.0 - x);
            b * coefs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum::<f64>()
        });
        let row = norms_of(&StateVector::new(u, 0.0), &ops, &q, &vec![1.0; n]);
        let (r1, r2) = wirtinger_check(&row, 1.0);
        let tol = 1.0 + WIRTINGER_SLACK * grid.h();
        prop_assert!(r1 <= tol && r2 <= tol, "{} {}", r1, r2);
    }

    #[test]
    fn buffer_depth_bounded(tau_steps in 1usize..50, extra in 0.0f64..0.9, pushes in 1usize..400) {
        let dt = 0.01;
        let tau = (tau_steps as f64 + extra) * dt;
        let grid = SpatialGrid::new(1.0, 9).unwrap();
        let params = ModelParams::new(0.01, 0.001, tau, 1.0).unwrap();
        let spec = HistorySpec::constant(SpaceProfile::Sine { amplitude: 1.0, k: 1.0 });
        let mut b = init_from_history(&spec, &grid, &params, dt).unwrap();
        for k in 1..=pushes {
            b.push(StateVector::new(vec![k as f64; 9], k as f64 * dt)).unwrap();
            prop_assert!(b.len() <= b.depth());
            let d = b.delayed_state(k as f64 * dt + dt).unwrap();
            prop_assert!(d.values.iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn sigma_scan_agrees_with_bisection() {
    let grid = SpatialGrid::new(1.0, 99).unwrap();
    let ops = Operators::assemble(&grid);
    let q = Quadrature::trapezoidal(&grid);
    let gamma = compute_gamma(1.0, 1.0, 0.001, 0.01, 1.0).unwrap();
    for eps in [1e-3, 1e-4, 1e-6] {
        let spec = HistorySpec::constant(SpaceProfile::SineSquared {
            amplitude: eps,
            k: 1.0,
        });
        let probe = HistoryProbe::new(&spec, &ops, &q);
        let norms = probe.norms(0.01, 0.001);
        let m = compute_m(&norms, gamma, 1.0);
        let (_, t2) = compute_tau_interval(&m, 0.01, 0.001, 1.0, 1.0).unwrap();
        let rates = RateInputs {
            nu: 0.01,
            mu: 0.001,
            ell: 1.0,
            sup_a: 1.0,
        };
        let problem = SigmaProblem::new(&probe, &norms, gamma, m, rates, t2);
        let scan = problem.scan();
        let bis = problem.bisect();
        assert!(scan.sigma > 0.0, "eps {eps}");
        assert!(
            (scan.sigma - bis.sigma).abs() <= 1e-12 * t2,
            "{scan:?} vs {bis:?}"
        );
        assert_eq!(scan.tau_hat, scan.sigma.min(t2));
    }
}

#[test]
fn sigma_positive_for_tiny_sine() {
    let grid = SpatialGrid::new(1.0, 199).unwrap();
    let ops = Operators::assemble(&grid);
    let q = Quadrature::trapezoidal(&grid);
    let spec = HistorySpec::constant(SpaceProfile::Sine {
        amplitude: 1e-6,
        k: 1.0,
    });
    let params = ModelParams::new(0.01, 0.001, 0.001, 1.0).unwrap();
    let profile = DampingProfile::constant(1.0, 1.0).unwrap();
    let r =
        StabilityReport::compute(&params, &profile, &spec, &ops, &q, 0.001, 0.001, 1.0).unwrap();
    assert!(r.sigma > 0.0);
    assert!(r.sigma_holds_at_zero);
    assert!(!r.history_clamped);
}

#[test]
fn constants_are_deterministic() {
    let grid = SpatialGrid::new(1.0, 99).unwrap();
    let ops = Operators::assemble(&grid);
    let q = Quadrature::trapezoidal(&grid);
    let spec = HistorySpec::constant(SpaceProfile::SineSquared {
        amplitude: 1e-3,
        k: 1.0,
    });
    let params = ModelParams::new(0.01, 0.001, 0.2, 1.0).unwrap();
    let profile = DampingProfile::new(
        DampingFamily::Sinusoidal {
            b0: 1.0,
            c2: 1.0,
            k: 1.0,
        },
        1.0,
    )
    .unwrap();
    let a = StabilityReport::compute(&params, &profile, &spec, &ops, &q, 0.2, 0.001, 1.0).unwrap();
    let b = StabilityReport::compute(&params, &profile, &spec, &ops, &q, 0.2, 0.001, 1.0).unwrap();
    assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
    assert_eq!(a.ln_m.to_bits(), b.ln_m.to_bits());
    assert_eq!(a.tau2.to_bits(), b.tau2.to_bits());
    assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
    assert_eq!(a, b);
}

#[test]
fn inviscid_interval_collapses() {
    let (_, t2) = compute_tau_interval(&MConstant::from_value(3.0), 0.0, 0.001, 1.0, 1.0).unwrap();
    assert_eq!(t2, 0.0);
}
