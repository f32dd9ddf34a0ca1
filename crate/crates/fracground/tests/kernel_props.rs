//! Resolvent-kernel tests: the inversion identity, cross-validation of the
//! oscillatory quadrature against the grid transform, power-law fitting on
//! synthetic data, and the decay report's trust-radius handling.

use fracground::grid_spectral::{frac_laplacian, BoxGrid, FracOrder, RealField};
use fracground::kernel::*;
use proptest::prelude::*;

fn s05() -> FracOrder {
    FracOrder::new(0.5).unwrap()
}

#[test]
fn resolvent_inverts_operator_plus_identity() {
    // ((−Δ)^s + I) 𝒦 u = u to near machine precision for random smooth fields
    let grid = BoxGrid::new(2, 10.0, 64).unwrap();
    let s = FracOrder::new(0.6).unwrap();
    let mut state = 7u64;
    for _ in 0..10 {
        let mut u = RealField::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-r2 / 8.0).exp()
        });
        for v in u.values.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v *= 0.5 + (state >> 11) as f64 / (1u64 << 53) as f64;
        }
        let ku = convolve_kernel(&u, s);
        let mut back = frac_laplacian(&ku, s);
        for (bv, &kv) in back.values.iter_mut().zip(&ku.values) {
            *bv += kv;
        }
        let num: f64 = back
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = u.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den < 1e-12, "relative defect {:.3e}", num / den);
    }
}

#[test]
fn quadrature_matches_grid_transform_1d() {
    // two independent realizations of K for N=1, s=0.5 agree in the bulk
    let radii: Vec<f64> = (1..=30).map(|i| 0.2 * i as f64).collect();
    let quad = kernel_profile_quadrature(s05(), &radii).unwrap();
    let grid = BoxGrid::new(1, 80.0, 8192).unwrap();
    let grid_prof = kernel_profile_grid(1, s05(), grid).unwrap();
    for (&r, &vq) in quad.radii.iter().zip(&quad.values) {
        // nearest grid shell
        let j = grid_prof
            .radii
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - r).abs().partial_cmp(&(b.1 - r).abs()).unwrap()
            })
            .unwrap()
            .0;
        let vg = grid_prof.values[j];
        assert!(
            (vq - vg).abs() < 2e-2 * vq.abs().max(1e-3),
            "r={r}: quadrature {vq:.6e} vs grid {vg:.6e}"
        );
    }
}

#[test]
fn kernel_values_positive_and_decreasing() {
    let radii: Vec<f64> = (0..80).map(|i| 0.05 * 1.1f64.powi(i)).collect();
    let prof = kernel_profile_quadrature(s05(), &radii).unwrap();
    for w in prof.values.windows(2) {
        assert!(w[0] > 0.0 && w[1] > 0.0);
        assert!(w[0] > w[1], "kernel must decrease radially");
    }
}

#[test]
fn fit_power_recovers_synthetic_exponent() {
    let radii: Vec<f64> = (1..=60).map(|i| 0.5 * i as f64).collect();
    let values: Vec<f64> = radii.iter().map(|r| 3.7 * r.powf(-2.4)).collect();
    let (slope, prefactor, rms) = fit_power(&radii, &values, 1.0, 30.0).unwrap();
    assert!((slope + 2.4).abs() < 1e-10);
    assert!((prefactor - 3.7).abs() < 1e-9);
    assert!(rms < 1e-12);
}

#[test]
fn fit_power_guards() {
    let radii = vec![1.0, 2.0, 3.0, 4.0];
    let tiny = vec![1e-20, 1e-20, 1e-20, 1e-20];
    assert!(matches!(
        fit_power(&radii, &tiny, 0.5, 5.0),
        Err(KernelError::Underflow)
    ));
    let ok = vec![1.0, 0.5, 0.25, 0.125];
    assert!(matches!(
        fit_power(&radii, &ok, 3.5, 3.9),
        Err(KernelError::InsufficientCoverage(_))
    ));
}

#[test]
fn decay_report_tail_exponent_1d() {
    // the fitted far-field slope approaches −(1+2s) = −2 once the window
    // clears the subleading r^{−4} term
    let radii: Vec<f64> = (0..120)
        .map(|i| 0.05 * (40.0f64 / 0.05).powf(i as f64 / 119.0))
        .collect();
    let prof = kernel_profile_quadrature(s05(), &radii).unwrap();
    let report = kernel_decay_report(&prof).unwrap();
    assert!(
        (report.tail_exponent + 2.0).abs() < 0.2,
        "tail exponent {}",
        report.tail_exponent
    );
    assert!(report.sup_far.is_finite() && report.sup_far > 0.0);
    assert!(report.sup_near.is_finite() && report.sup_near > 0.0);
    assert!(report.grad_bound.is_finite() && report.grad_bound > 0.0);
    // in-window truncated L^q integral is stable under window enlargement
    let (q_in, half, full) = report.lq_in_window;
    assert!(q_in > 1.0);
    assert!((full - half) < 0.05 * full, "L^q tail not settled");
}

#[test]
fn decay_report_respects_trust_radius() {
    // a grid profile carries images beyond L/2; the report must not fit there
    let grid = BoxGrid::new(1, 80.0, 8192).unwrap();
    let prof = kernel_profile_grid(1, s05(), grid).unwrap();
    assert!((prof.r_trust - 40.0).abs() < 1e-12);
    let report = kernel_decay_report(&prof).unwrap();
    // image contamination would drag the slope toward 0 near the boundary
    assert!(
        (report.tail_exponent + 2.0).abs() < 0.2,
        "tail exponent {}",
        report.tail_exponent
    );
}

#[test]
fn decay_report_requires_coverage() {
    let radii: Vec<f64> = (1..=20).map(|i| 0.3 * i as f64).collect();
    let prof = kernel_profile_quadrature(s05(), &radii).unwrap();
    // first radius 0.3 > 0.1: no near-origin coverage
    assert!(matches!(
        kernel_decay_report(&prof),
        Err(KernelError::InsufficientCoverage(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn convolve_kernel_is_l2_contraction(seed in 1u64..5000) {
        // symbol 1/(1+|ξ|^{2s}) ≤ 1 ⇒ ‖𝒦u‖ ≤ ‖u‖
        let grid = BoxGrid::new(1, 8.0, 128).unwrap();
        let s = s05();
        let mut state = seed;
        let mut u = RealField::zeros(grid);
        for v in u.values.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
        let ku = convolve_kernel(&u, s);
        prop_assert!(ku.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn fit_power_exact_on_loglinear_data(exp in -4.0f64..-0.5, pref in 0.1f64..10.0) {
        let radii: Vec<f64> = (1..=40).map(|i| 0.3 * i as f64).collect();
        let values: Vec<f64> = radii.iter().map(|r| pref * r.powf(exp)).collect();
        let (slope, prefactor, _) = fit_power(&radii, &values, 0.5, 15.0).unwrap();
        prop_assert!((slope - exp).abs() < 1e-9);
        prop_assert!((prefactor - pref).abs() < 1e-8 * pref);
    }
}
