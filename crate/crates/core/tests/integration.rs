//! Cross-module checks: the adaptive integrator and the Benettin
//! estimator against the closed-form matrix-exponential oracle, and the
//! model derivatives against finite differences. The oracle lives in a
//! separate crate and shares no code path with the integrator.

use clapp_core::{
    eigenvalues, jacobian, largest_lyapunov, nonlinearity, rhs, simulate, solve_equilibrium,
    IntegratorConfig, State,
};
use clapp_testkit::{dead_bjt, reference_bjt, reference_circuit, LinearOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn trajectory_matches_the_matrix_exponential() {
    let bjt = dead_bjt(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1_0001);
    for r_e in [500.0, 10.0] {
        let circuit = reference_circuit().with_r_e(r_e);
        for _ in 0..5 {
            let p0 = State::new(
                rng.gen_range(-5.0..10.0),
                rng.gen_range(-5.0..10.0),
                rng.gen_range(-5.0..10.0),
                rng.gen_range(-0.05..0.05),
            );
            let oracle = LinearOracle::new(&circuit, &bjt, &p0);
            let cfg = IntegratorConfig {
                t_end: 1e-9,
                sample_interval: 0.05e-9,
                ..IntegratorConfig::default()
            };
            let traj = simulate(&circuit, &bjt, p0, &cfg).unwrap();
            assert_eq!(traj.times.len(), 21);
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let x = oracle.eval(*t).as_array();
                let s = s.as_array();
                for i in 0..4 {
                    // The current axis runs ~100x smaller than the volts.
                    let tol = if i < 3 { 1e-6 } else { 1e-8 };
                    assert!(
                        (s[i] - x[i]).abs() <= tol,
                        "r_e={r_e} t={t}: component {i} off by {:e}",
                        (s[i] - x[i]).abs()
                    );
                }
            }
        }
    }
}

#[test]
fn observed_order_is_at_least_four_on_the_circuit() {
    // Fixed-step runs (tolerances opened wide, max_step = initial_step = h)
    // against the closed-form solution; halving h must shrink the endpoint
    // error by at least 2^4. h is a power of two so the span 256 h is hit
    // exactly.
    let circuit = reference_circuit();
    let bjt = dead_bjt(100.0);
    let p0 = State::new(1.0, -2.0, 5.0, 3e-3);
    let oracle = LinearOracle::new(&circuit, &bjt, &p0);

    let endpoint_err = |h: f64| {
        let t_end = 256.0 * 2f64.powi(-38);
        let cfg = IntegratorConfig {
            rel_tol: 1e6,
            abs_tol: [1e6; 4],
            t_start: 0.0,
            t_end,
            max_step: h,
            initial_step: h,
            sample_interval: t_end,
        };
        let traj = simulate(&circuit, &bjt, p0, &cfg).unwrap();
        let got = traj.states.last().unwrap().as_array();
        let want = oracle.eval(t_end).as_array();
        (0..3)
            .map(|i| (got[i] - want[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    // At 2^-38 s the tank pair runs at |lambda h| ~ 0.44 where the next
    // order term still bends the curve; 2^-40 is asymptotic.
    let e1 = endpoint_err(2f64.powi(-40));
    let e2 = endpoint_err(2f64.powi(-41));
    assert!(
        e2 > 1e-12,
        "halved-step error {e2:e} is at the roundoff floor"
    );
    let ratio = e1 / e2;
    assert!(ratio > 16.0, "observed order below 4: ratio {ratio}");
}

#[test]
fn tightening_tolerances_tightens_the_trajectory() {
    // Same 1 ns run under decreasing rel_tol, error measured against the
    // oracle. Adjacent tolerances can trade places through controller
    // noise, so the assertion compares three decades apart.
    let circuit = reference_circuit();
    let bjt = dead_bjt(100.0);
    let p0 = State::new(1.0, -2.0, 5.0, 3e-3);
    let oracle = LinearOracle::new(&circuit, &bjt, &p0);

    let errs: Vec<f64> = (5..=10)
        .map(|k| {
            let cfg = IntegratorConfig {
                rel_tol: 10f64.powi(-k),
                abs_tol: [1e-12, 1e-12, 1e-12, 1e-15],
                t_end: 1e-9,
                sample_interval: 0.1e-9,
                ..IntegratorConfig::default()
            };
            let traj = simulate(&circuit, &bjt, p0, &cfg).unwrap();
            let mut worst = 0f64;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let x = oracle.eval(*t).as_array();
                let s = s.as_array();
                for i in 0..3 {
                    worst = worst.max((s[i] - x[i]).abs());
                }
            }
            worst
        })
        .collect();

    for k in 0..3 {
        assert!(
            errs[k + 3] <= 0.5 * errs[k],
            "rel_tol 1e-{} error {:e} did not improve on 1e-{} error {:e}",
            k + 8,
            errs[k + 3],
            k + 5,
            errs[k]
        );
    }
    assert!(errs[5] <= 1e-5, "tightest run still off by {:e}", errs[5]);
}

#[test]
fn decomposition_identity_holds_on_random_states() {
    // rhs(p) = jacobian(p_eq) p + h(p) exactly, not as an approximation.
    // States are drawn across the whole attractor's range; the tolerance
    // is relative to the individual term magnitudes because the two sides
    // cancel catastrophically near equilibrium.
    let circuit = reference_circuit();
    let bjt = reference_bjt(100.0);
    let eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
    let j = jacobian(&circuit, &bjt, &eq.state).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1_0002);
    for _ in 0..1000 {
        let p = State::new(
            rng.gen_range(-300.0..1.0),
            rng.gen_range(-100.0..100.0),
            rng.gen_range(-3000.0..3000.0),
            rng.gen_range(-1.0..1.0),
        );
        let f = rhs(&circuit, &bjt, &p).unwrap().as_array();
        let h = nonlinearity(&circuit, &bjt, &p, &eq).unwrap().as_array();
        let pa = p.as_array();
        for i in 0..4 {
            let lin: f64 = (0..4).map(|c| j[(i, c)] * pa[c]).sum();
            let scale: f64 =
                (0..4).map(|c| (j[(i, c)] * pa[c]).abs()).sum::<f64>() + h[i].abs() + f[i].abs();
            let diff = (f[i] - (lin + h[i])).abs();
            assert!(
                diff <= 1e-10 * scale + 1e-300,
                "component {i} at {pa:?}: residual {diff:e} vs scale {scale:e}"
            );
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_on_random_states() {
    // Central differences column by column; the tolerance is relative to
    // the row's dominant entry so identically-zero entries are verified
    // to be zero at the row scale rather than absolutely.
    let circuit = reference_circuit();
    let bjt = reference_bjt(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1_0003);
    for _ in 0..100 {
        let p = State::new(
            rng.gen_range(-2.0..0.9),
            rng.gen_range(-50.0..50.0),
            rng.gen_range(-100.0..100.0),
            rng.gen_range(-0.1..0.1),
        );
        let j = jacobian(&circuit, &bjt, &p).unwrap();
        let pa = p.as_array();
        let mut fd = [[0f64; 4]; 4];
        for col in 0..4 {
            let eps = 1e-7 * (1.0 + pa[col].abs());
            let mut hi = pa;
            let mut lo = pa;
            hi[col] += eps;
            lo[col] -= eps;
            let f_hi = rhs(&circuit, &bjt, &State::from_array(hi))
                .unwrap()
                .as_array();
            let f_lo = rhs(&circuit, &bjt, &State::from_array(lo))
                .unwrap()
                .as_array();
            for row in 0..4 {
                fd[row][col] = (f_hi[row] - f_lo[row]) / (2.0 * eps);
            }
        }
        for row in 0..4 {
            let row_scale = (0..4).map(|c| j[(row, c)].abs()).fold(0f64, f64::max);
            for col in 0..4 {
                let diff = (fd[row][col] - j[(row, col)]).abs();
                assert!(
                    diff <= 1e-5 * row_scale,
                    "J[{row}][{col}] at {pa:?}: fd {:e} vs analytic {:e}",
                    fd[row][col],
                    j[(row, col)]
                );
            }
        }
    }
}

#[test]
fn benettin_matches_the_spectral_abscissa_on_linear_systems() {
    // With i_s = 0 the tangent flow is the constant-matrix flow, so the
    // largest Lyapunov exponent equals the largest eigenvalue real part.
    // Ten emitter resistances drawn log-uniformly; the horizon scales as
    // 350 e-folds of the top mode so the finite-time wobble of the
    // complex pair sits inside the 2% tolerance.
    let bjt = dead_bjt(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c1_0004);
    for _ in 0..10 {
        let r_e = 10f64 * 50f64.powf(rng.gen_range(0f64..1f64));
        let circuit = reference_circuit().with_r_e(r_e);
        let eq = solve_equilibrium(&circuit, &bjt, 1e-12).unwrap();
        let j = jacobian(&circuit, &bjt, &eq.state).unwrap();
        let re_top = eigenvalues(&j).unwrap()[0].re;
        assert!(re_top < 0.0);

        let horizon = (350.0 / re_top.abs()).max(2e-6);
        let est = largest_lyapunov(&circuit, &bjt, eq.state, horizon, 2e-9).unwrap();
        let rel = (est.lambda1 - re_top).abs() / re_top.abs();
        assert!(
            rel <= 0.02,
            "r_e={r_e:.3}: benettin {:e} vs abscissa {re_top:e} (rel {rel:.4})",
            est.lambda1
        );
    }
}
