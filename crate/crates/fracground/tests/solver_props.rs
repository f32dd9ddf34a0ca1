//! Solver tests on small problems: fixed-point convergence and its guards,
//! mountain-pass agreement, the Sobolev-quotient estimate, and decay fitting
//! on synthetic profiles.

use fracground::energy::gradient_residual;
use fracground::grid_spectral::{BoxGrid, FracOrder, RealField};
use fracground::model::{ModelSpec, Nonlinearity, Potential, PotentialFamily};
use fracground::solver::*;

fn model_1d() -> ModelSpec {
    ModelSpec {
        s: FracOrder::new(0.5).unwrap(),
        nl: Nonlinearity::new(1.0, 1.0, 3.0).unwrap(),
        v: Potential { family: PotentialFamily::InversePower, v0: 0.5, beta: 1.0 },
    }
}

fn small_cfg() -> SolveConfig {
    SolveConfig {
        seed: SeedProfile::Gaussian { amplitude: 2.0, width: 1.0 },
        ..SolveConfig::default()
    }
}

#[test]
fn fixed_point_converges_1d() {
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let res = fixed_point_solve(&model, 1.0, &small_cfg(), grid).unwrap();
    assert!(res.converged);
    assert!(res.residual_norm < 1e-9 * res.u.l2_norm() * 10.0);
    // independent re-evaluation of the Euler–Lagrange residual
    let (_, rn) = gradient_residual(&res.u, &model, 1.0);
    assert!(rn < 1e-8, "residual {rn:.3e}");
    // nontrivial, positive, centered
    assert!(res.u.l2_norm() > 0.1);
    assert!(res.u.values.iter().cloned().fold(f64::MAX, f64::min) > -1e-10);
    let peak = res
        .u
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(peak, 128, "peak must sit at the origin");
}

#[test]
fn fixed_point_collapses_for_tiny_seed() {
    // far below the mountain-pass barrier the iteration contracts to zero
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let cfg = SolveConfig {
        seed: SeedProfile::Gaussian { amplitude: 1e-6, width: 1.0 },
        stabilization: false,
        max_iters: 4000,
        ..SolveConfig::default()
    };
    match fixed_point_solve(&model, 1.0, &cfg, grid) {
        Err(SolverError::Collapse(_)) => {}
        Err(SolverError::MaxIters(_)) => {}
        other => panic!("expected collapse, got {other:?}"),
    }
}

#[test]
fn mountain_pass_agrees_with_fixed_point_1d() {
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let cfg = small_cfg();
    let fp = fixed_point_solve(&model, 1.0, &cfg, grid).unwrap();
    let mp = mountain_pass_solve(&model, 1.0, &cfg, grid, None).unwrap();
    assert!(mp.converged);
    let diff: f64 = fp
        .u
        .values
        .iter()
        .zip(&mp.u.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        * grid.cell_volume().sqrt();
    assert!(
        diff / fp.u.l2_norm() < 1e-6,
        "relative L2 gap {:.3e}",
        diff / fp.u.l2_norm()
    );
    let e_gap = (fp.energy.i - mp.energy.i).abs() / fp.energy.i.abs();
    assert!(e_gap < 1e-8, "energy gap {e_gap:.3e}");
}

#[test]
fn warm_start_reuses_previous_lambda() {
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let cfg = small_cfg();
    let at_1 = mountain_pass_solve(&model, 1.0, &cfg, grid, None).unwrap();
    let warm = mountain_pass_solve(&model, 0.95, &cfg, grid, Some(&at_1.u)).unwrap();
    assert!(warm.converged);
    // λ < 1 weakens the focusing term, raising the level
    assert!(warm.energy.i_lambda > at_1.energy.i_lambda);
}

#[test]
fn continuation_levels_positive_and_monotone_1d() {
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let cfg = SolveConfig {
        seed: SeedProfile::Plateau { amplitude: 2.4142, radius: 3.0 },
        ..SolveConfig::default()
    };
    let trace = lambda_continuation(&model, &cfg, grid, 4).unwrap();
    assert_eq!(trace.records.len(), 4);
    assert!(trace.delta_bar > 0.0 && trace.delta_bar < 1.0);
    for w in trace.records.windows(2) {
        assert!(w[0].c_lambda > 0.0);
        assert!(w[1].c_lambda <= w[0].c_lambda + 1e-6, "c_lambda must not increase");
    }
    assert!((trace.records.last().unwrap().lambda - 1.0).abs() < 1e-12);
}

#[test]
fn ground_state_free_rejects_potential() {
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    assert!(matches!(
        ground_state_free(&model, &small_cfg(), grid),
        Err(SolverError::PotentialNotZero)
    ));
}

#[test]
fn free_level_below_potential_level() {
    // V ≥ 0 shifts the functional up: b₀ < I(solution with V)
    let model = model_1d();
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let cfg = small_cfg();
    let (_, b0) = ground_state_free(&model.without_potential(), &cfg, grid).unwrap();
    let with_v = fixed_point_solve(&model, 1.0, &cfg, grid).unwrap();
    assert!(b0 > 0.0);
    assert!(b0 < with_v.energy.i, "b0 = {b0} vs {}", with_v.energy.i);
}

#[test]
fn sobolev_quotient_scale_invariant() {
    let grid = BoxGrid::new(2, 12.0, 32).unwrap();
    let s = FracOrder::new(0.6).unwrap();
    let seed = RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / 4.0).exp()
    });
    let q1 = estimate_sobolev_constant(2, s, grid, &seed, 0).unwrap();
    let q2 = estimate_sobolev_constant(2, s, grid, &seed.scaled(7.3), 0).unwrap();
    assert!((q1 - q2).abs() < 1e-10 * q1, "{q1} vs {q2}");
    // descent can only improve the quotient
    let q3 = estimate_sobolev_constant(2, s, grid, &seed, 40).unwrap();
    assert!(q3 <= q1 + 1e-12);
    assert!(q3 > 0.0);
}

#[test]
fn decay_fit_recovers_synthetic_tail() {
    // u = (1 + r^{N+2s})^{−1} in 1D with s = 0.5: tail slope −2 within 3%
    let grid = BoxGrid::new(1, 60.0, 2048).unwrap();
    let s = FracOrder::new(0.5).unwrap();
    let u = RealField::from_fn(grid, |x| 1.0 / (1.0 + x[0].abs().powf(2.0)));
    let fit = decay_fit(&u, s, 8.0, 28.0).unwrap();
    assert!(
        (fit.exponent + 2.0).abs() < 0.06,
        "exponent {} (want −2 ± 3%)",
        fit.exponent
    );
    assert!(fit.rms < 0.05);
    assert!(fit.strauss_bound.is_finite() && fit.strauss_bound > 0.0);
}

#[test]
fn decay_fit_flags_non_power_profiles() {
    // a Gaussian is not a power law: the log-log residual must say so
    let grid = BoxGrid::new(1, 60.0, 2048).unwrap();
    let s = FracOrder::new(0.5).unwrap();
    let power = RealField::from_fn(grid, |x| 1.0 / (1.0 + x[0].abs().powf(2.0)));
    let gauss = RealField::from_fn(grid, |x| (-x[0] * x[0] / 8.0).exp());
    let fit_p = decay_fit(&power, s, 4.0, 12.0).unwrap();
    let fit_g = decay_fit(&gauss, s, 4.0, 12.0).unwrap();
    assert!(fit_g.rms > 10.0 * fit_p.rms, "{} vs {}", fit_g.rms, fit_p.rms);
}

#[test]
#[should_panic(expected = "periodic-image guard")]
fn decay_fit_rejects_windows_beyond_half_box() {
    let grid = BoxGrid::new(1, 20.0, 256).unwrap();
    let s = FracOrder::new(0.5).unwrap();
    let u = RealField::from_fn(grid, |x| 1.0 / (1.0 + x[0] * x[0]));
    let _ = decay_fit(&u, s, 2.0, 15.0);
}

#[test]
fn seed_field_matches_closed_forms() {
    let grid = BoxGrid::new(1, 10.0, 80).unwrap();
    let plat = seed_field(&SeedProfile::Plateau { amplitude: 2.0, radius: 3.0 }, grid);
    let gauss = seed_field(&SeedProfile::Gaussian { amplitude: 1.5, width: 2.0 }, grid);
    let at = |u: &RealField, x: f64| {
        let j = ((x + grid.half_width) / grid.spacing()).round() as usize;
        u.values[j]
    };
    assert_eq!(at(&plat, 0.0), 2.0);
    assert_eq!(at(&plat, 5.0), 0.0);
    assert!((at(&plat, 3.5) - 1.0).abs() < 1e-12);
    assert!((at(&gauss, 2.0) - 1.5 * (-0.5f64).exp()).abs() < 1e-12);
}
