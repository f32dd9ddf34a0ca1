//! Nonlinearity/potential family tests: the g₁/g₂ split identities, the C_ε
//! bound with held-out sampling, truncation behavior, and assumption checks.

use fracground::grid_spectral::{BoxGrid, FracOrder};
use fracground::model::*;
use proptest::prelude::*;

fn canonical() -> Nonlinearity {
    Nonlinearity::new(1.0, 1.0, 3.0).unwrap()
}

#[test]
fn zeta_is_first_positive_zero_of_big_g() {
    let nl = canonical();
    // G(t) = −t²/2 + t⁴/4 vanishes at √2
    assert!((nl.zeta - 2f64.sqrt()).abs() < 1e-12);
    assert!(nl.g_big_eval(nl.zeta).abs() < 1e-12);
    // strictly negative below, positive above
    assert!(nl.g_big_eval(0.9 * nl.zeta) < 0.0);
    assert!(nl.g_big_eval(1.1 * nl.zeta) > 0.0);
}

#[test]
fn two_star_canonical_value() {
    let s = FracOrder::new(0.6).unwrap();
    assert!((two_star(2, s) - 5.0).abs() < 1e-12);
    assert!(canonical().check_subcritical(2, s).is_ok());
    // p+1 = 5 = 2★ is rejected
    let critical = Nonlinearity::new(1.0, 1.0, 4.0).unwrap();
    assert!(matches!(
        critical.check_subcritical(2, s),
        Err(ModelError::Supercritical { .. })
    ));
}

#[test]
fn truncation_cap_must_exceed_zeta() {
    let nl = canonical();
    assert!(matches!(nl.truncate(Some(1.0)), Err(ModelError::BadCap { .. })));
    let capped = nl.truncate(Some(3.0)).unwrap();
    assert_eq!(capped.g_eval(4.0), 0.0);
    // G̃ freezes at the cap value
    assert!((capped.g_big_eval(5.0) - capped.g_big_eval(3.0)).abs() < 1e-12);
    // inside the cap nothing changes
    assert!((capped.g_eval(2.0) - nl.g_eval(2.0)).abs() < 1e-12);
}

/// Midpoint quadrature of ∫₀^t f, split at the truncation cap so the jump in
/// g̃ does not pollute the error.
fn integrate_piecewise(f: impl Fn(f64) -> f64, t: f64, cap: f64) -> f64 {
    let sign = t.signum();
    let ta = t.abs();
    let pieces: &[(f64, f64)] =
        if ta > cap { &[(0.0, cap), (cap, ta)] } else { &[(0.0, ta), (0.0, 0.0)] };
    let mut acc = 0.0;
    for &(a, b) in pieces {
        let n = 40_000;
        let w = (b - a) / n as f64;
        for i in 0..n {
            acc += f(sign * (a + (i as f64 + 0.5) * w)) * w;
        }
    }
    sign * acc
}

#[test]
fn numeric_big_g_matches_quadrature_oracle() {
    let cap = 2.5;
    let nl = canonical().truncate(Some(cap)).unwrap();
    for &t in &[0.5, 1.4, 2.4, 3.0, 4.0, -3.0] {
        let acc = integrate_piecewise(|x| nl.g_eval(x), t, cap);
        assert!(
            (nl.g_big_eval(t) - acc).abs() < 1e-6,
            "t={t}: {} vs oracle {acc}",
            nl.g_big_eval(t)
        );
    }
}

#[test]
fn split_big_g1_matches_quadrature_oracle() {
    let cap = 2.5;
    let sp = canonical().truncate(Some(cap)).unwrap().split();
    for &t in &[0.7, 1.5, 2.4, 3.5, -3.5] {
        let acc = integrate_piecewise(|x| sp.g1(x), t, cap);
        assert!((sp.g_big1(t) - acc).abs() < 1e-6, "t={t}");
    }
}

#[test]
fn epsilon_bound_holds_on_held_out_sample() {
    let s = FracOrder::new(0.6).unwrap();
    let sp = canonical().split();
    let ts = two_star(2, s);
    let c = epsilon_bound_constant(&sp, 0.5, 2, s).unwrap();
    assert!(c.is_finite() && c > 0.0);
    let mut state = 42u64;
    for _ in 0..2000 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let t = 10f64.powf(-6.0 + 12.0 * ((state >> 11) as f64 / (1u64 << 53) as f64));
        let lhs = sp.g_big1(t);
        let rhs = c / ts * t.powf(ts) + 0.5 * sp.g_big2(t);
        assert!(lhs <= rhs + 1e-9 * rhs.abs().max(1.0), "violated at t={t}");
    }
}

#[test]
fn potential_virial_matches_finite_differences() {
    for family in [PotentialFamily::InversePower, PotentialFamily::Gaussian] {
        let v = Potential { family, v0: 0.5, beta: 1.3 };
        for &r in &[0.3f64, 1.0, 2.7, 6.0] {
            let dr = 1e-6 * r.max(1.0);
            let dv = (v.eval_r_sq((r + dr) * (r + dr)) - v.eval_r_sq((r - dr) * (r - dr)))
                / (2.0 * dr);
            let oracle = r * dv;
            let got = v.virial_r_sq(r * r);
            assert!(
                (got - oracle).abs() < 1e-6 * oracle.abs().max(1e-3),
                "{family:?} r={r}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn canonical_assumptions_all_pass() {
    let nl = canonical();
    let v = Potential { family: PotentialFamily::InversePower, v0: 0.5, beta: 1.0 };
    let grid = BoxGrid::new(2, 16.0, 64).unwrap();
    let s = FracOrder::new(0.6).unwrap();
    let report = check_assumptions(&nl, &v, &grid, s, 0.1);
    assert!(report.all_satisfied(), "failed: {:?}", report.failed());
    // a repulsive potential (positive virial) must fail (V5)
    let bad = Potential { family: PotentialFamily::Gaussian, v0: -0.5, beta: 1.0 };
    let report = check_assumptions(&nl, &bad, &grid, s, 0.1);
    assert!(!report.all_satisfied());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_reconstructs_g(t in -6.0f64..6.0, cap in prop::option::of(1.5f64..5.0)) {
        let nl = canonical().truncate(cap).unwrap();
        let sp = nl.split();
        prop_assert!((sp.g1(t) - sp.g2(t) - nl.g_eval(t)).abs() < 1e-12);
        prop_assert!((sp.g_big1(t) - sp.g_big2(t) - nl.g_big_eval(t)).abs() < 1e-12);
        // λ = 1 recovers g̃ exactly
        prop_assert!((sp.g_lambda(1.0, t) - nl.g_eval(t)).abs() < 1e-12);
    }

    #[test]
    fn split_components_have_required_signs(t in 0.0f64..6.0) {
        let sp = canonical().split();
        prop_assert!(sp.g1(t) >= 0.0);
        prop_assert!(sp.g2(t) >= 0.0);
        prop_assert!(sp.g_big1(t) >= 0.0);
        prop_assert!(sp.g_big2(t) >= 0.0);
        // oddness of both components
        prop_assert!((sp.g1(-t) + sp.g1(t)).abs() < 1e-12);
        prop_assert!((sp.g2(-t) + sp.g2(t)).abs() < 1e-12);
    }

    #[test]
    fn g_lambda_monotone_in_lambda(t in 0.01f64..5.0, l1 in 0.2f64..1.0, l2 in 0.2f64..1.0) {
        // λ ↦ g_λ(t) is non-decreasing for t ≥ 0 since g₁ ≥ 0 there
        let sp = canonical().split();
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(sp.g_lambda(lo, t) <= sp.g_lambda(hi, t) + 1e-12);
    }
}
