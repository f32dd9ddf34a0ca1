//! Functional-level tests: the L² gradient as a directional-derivative oracle,
//! Pohozaev reports on dilation-stationary states, manifold projections, the
//! δ̄ interval endpoint, and admissible mountain-pass paths.

use fracground::energy::*;
use fracground::grid_spectral::{dilate, BoxGrid, FracOrder, RealField};
use fracground::model::{ModelSpec, Nonlinearity, Potential, PotentialFamily};

fn canonical_model() -> ModelSpec {
    ModelSpec {
        s: FracOrder::new(0.6).unwrap(),
        nl: Nonlinearity::new(1.0, 1.0, 3.0).unwrap(),
        v: Potential { family: PotentialFamily::InversePower, v0: 0.5, beta: 1.0 },
    }
}

fn gaussian(grid: BoxGrid, amp: f64, sigma: f64) -> RealField {
    RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        amp * (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

#[test]
fn gradient_matches_directional_derivative_oracle() {
    // ⟨∇I_λ(u), φ⟩ against centered differences of t ↦ I_λ(u + tφ)
    let model = canonical_model();
    let grid = BoxGrid::new(2, 10.0, 64).unwrap();
    let u = gaussian(grid, 1.7, 1.4);
    let phi = RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (0.8 * x[0]).sin() * (-r2 / 6.0).exp()
    });
    for &lambda in &[0.45, 1.0] {
        let (r, _) = gradient_residual(&u, &model, lambda);
        let hn = grid.cell_volume();
        let pairing: f64 =
            r.values.iter().zip(&phi.values).map(|(a, b)| a * b).sum::<f64>() * hn;
        let t = 1e-5;
        let at = |t: f64| {
            let mut w = u.clone();
            for (wv, &pv) in w.values.iter_mut().zip(&phi.values) {
                *wv += t * pv;
            }
            energy(&w, &model, lambda).unwrap().i_lambda
        };
        let oracle = (at(t) - at(-t)) / (2.0 * t);
        assert!(
            (pairing - oracle).abs() < 1e-7 * oracle.abs().max(1.0),
            "lambda={lambda}: pairing {pairing} vs oracle {oracle}"
        );
    }
}

#[test]
fn energy_breakdown_identities() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 10.0, 64).unwrap();
    let u = gaussian(grid, 2.0, 1.2);
    let e = energy(&u, &model, 0.7).unwrap();
    // G = G₁ − G₂ and the two functionals agree at λ = 1
    assert!((e.g_total - (e.g1 - e.g2)).abs() < 1e-10 * e.g1.abs().max(1.0));
    let e1 = energy(&u, &model, 1.0).unwrap();
    assert!((e1.i - e1.i_lambda).abs() < 1e-10 * e1.i.abs().max(1.0));
    // I_λ = I + (1−λ)∫G₁
    assert!(
        (e.i_lambda - (e.i + (1.0 - 0.7) * e.g1)).abs() < 1e-10 * e.i.abs().max(1.0)
    );
}

#[test]
fn free_pohozaev_holds_at_p0_stationary_point() {
    // for V ≡ 0 the projected state is dilation-stationary, so the free
    // identity (N−2s)/2·T = N∫G holds by construction of θ̄
    let mut model = canonical_model();
    model.v = Potential::zero();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 2.2, 1.5);
    let (theta, v) = project_to_p0(&u, &model).unwrap();
    assert!(theta.is_finite() && theta > 0.0);
    let rep = pohozaev_report(&v, &model).unwrap();
    assert!(
        rep.free_residual_rel < 2e-3,
        "free residual {:.3e} (theta = {theta})",
        rep.free_residual_rel
    );
}

#[test]
fn p0_projection_is_dilation_stationary() {
    // the exact scaling functional θ ↦ I(u^θ) has vanishing derivative at θ̄
    let mut model = canonical_model();
    model.v = Potential::zero();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 2.2, 1.5);
    let (theta, _) = project_to_p0(&u, &model).unwrap();
    let dt = 1e-5 * theta;
    let d = (energy_of_dilation_scaling(&u, &model, theta + dt)
        - energy_of_dilation_scaling(&u, &model, theta - dt))
        / (2.0 * dt);
    let scale = energy_of_dilation_scaling(&u, &model, theta).abs().max(1.0);
    assert!(d.abs() < 1e-6 * scale, "dI/dθ = {d:.3e} at θ̄ = {theta}");
}

#[test]
fn p_projection_is_dilation_stationary_with_potential() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 2.2, 1.5);
    let (theta, v) = project_to_p(&u, &model).unwrap();
    assert!(theta > 0.0);
    // stationarity through the scaling laws (no resampling error)
    let dt = 1e-4 * theta;
    let d = (energy_of_dilation_scaling(&u, &model, theta + dt)
        - energy_of_dilation_scaling(&u, &model, theta - dt))
        / (2.0 * dt);
    assert!(d.abs() < 1e-5, "dI/dθ = {d:.3e} at θ* = {theta}");
    // the projected state satisfies the full identity to grid accuracy
    let rep = pohozaev_report(&v, &model).unwrap();
    assert!(rep.residual_rel < 5e-3, "residual_rel {:.3e}", rep.residual_rel);
}

#[test]
fn energy_of_dilation_resampling_matches_scaling_laws() {
    // dilate() + energy() vs the closed-form scaling of each term
    let model = canonical_model();
    let grid = BoxGrid::new(2, 14.0, 96).unwrap();
    let u = gaussian(grid, 1.5, 1.1);
    for &theta in &[0.6, 1.0, 1.7] {
        let via_resample = energy_of_dilation(&u, &model, theta).unwrap();
        let via_scaling = energy_of_dilation_scaling(&u, &model, theta);
        let rel = (via_resample - via_scaling).abs() / via_scaling.abs().max(1e-6);
        // the kinetic dilation-scaling defect is O((π/L)^{1+2s}); at L = 14 a
        // few ×1e-3 relative is the expected floor
        assert!(rel < 1e-2, "theta={theta}: {via_resample} vs {via_scaling} (rel {rel:.3e})");
    }
}

#[test]
fn energy_on_p_matches_direct_energy_after_projection() {
    let mut model = canonical_model();
    model.v = Potential::zero();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 2.2, 1.5);
    let (_, v) = project_to_p0(&u, &model).unwrap();
    let via_rep = energy_on_p(&v, &model).unwrap();
    let direct = energy(&v, &model, 1.0).unwrap().i;
    assert!(
        (via_rep - direct).abs() < 2e-3 * direct.abs().max(1.0),
        "{via_rep} vs {direct}"
    );
}

#[test]
fn energy_on_p_rejects_off_manifold_states() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 3.0, 1.0);
    assert!(matches!(
        energy_on_p(&u, &model),
        Err(EnergyError::NotOnManifold(_))
    ));
}

#[test]
fn projection_rejects_nonpositive_g() {
    // small amplitude keeps u below ζ everywhere, so ∫G < 0
    let model = canonical_model();
    let grid = BoxGrid::new(2, 10.0, 64).unwrap();
    let u = gaussian(grid, 0.5, 1.2);
    assert!(matches!(project_to_p0(&u, &model), Err(EnergyError::NonPositiveG(_))));
    assert!(matches!(project_to_p(&u, &model), Err(EnergyError::NonPositiveG(_))));
}

#[test]
fn plateau_profile_shape_and_guard() {
    let grid = BoxGrid::new(2, 16.0, 128).unwrap();
    let z = plateau_profile(1.8, 4.0, grid).unwrap();
    // flat inside r ≤ R, zero beyond R + 1
    let at = |x: f64, y: f64| {
        let jx = ((x + grid.half_width) / grid.spacing()).round() as usize;
        let jy = ((y + grid.half_width) / grid.spacing()).round() as usize;
        z.values[jx * grid.points_per_axis + jy]
    };
    assert!((at(0.0, 0.0) - 1.8).abs() < 1e-12);
    assert!((at(2.0, 2.0) - 1.8).abs() < 1e-12);
    assert_eq!(at(0.0, 6.0), 0.0);
    // midpoint of the linear ramp
    assert!((at(0.0, 4.5) - 0.9).abs() < 1e-12);
    assert!(matches!(
        plateau_profile(1.8, 7.5, grid),
        Err(EnergyError::PlateauTooWide { .. })
    ));
}

#[test]
fn delta_bar_matches_ratio_oracle() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 16.0, 128).unwrap();
    let z = plateau_profile(model.nl.zeta + 1.0, 4.0, grid).unwrap();
    let e = energy(&z, &model, 1.0).unwrap();
    let oracle = (1.1 * e.g2 / e.g1).min(1.0 - 1e-3);
    let got = delta_bar(&z, &model).unwrap();
    assert!((got - oracle).abs() < 1e-12);
    assert!(got > 0.0 && got < 1.0);
    // at δ = δ̄ the defining inequality δ∫G₁ > ∫G₂ holds strictly
    assert!(got * e.g1 - e.g2 > 0.0);
}

#[test]
fn delta_bar_guard_rejects_subzeta_profiles() {
    // amplitude below ζ makes ∫G₁ − ∫G₂ = ∫G < 0 on the plateau
    let model = canonical_model();
    let grid = BoxGrid::new(2, 16.0, 128).unwrap();
    let z = plateau_profile(0.9 * model.nl.zeta, 4.0, grid).unwrap();
    assert!(matches!(delta_bar(&z, &model), Err(EnergyError::IntervalGuard(_))));
}

#[test]
fn mountain_path_is_admissible() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 16.0, 128).unwrap();
    let z = plateau_profile(model.nl.zeta + 1.0, 4.0, grid).unwrap();
    let path = mountain_path(&z, 2.0, 16, &model, 1.0).unwrap();
    // γ(0) = 0 and I_λ(γ(1)) < 0
    assert!(path.vertices.first().unwrap().l2_norm() == 0.0);
    assert!(path.endpoint_energy < 0.0, "endpoint energy {}", path.endpoint_energy);
    assert_eq!(path.vertices.len(), 17);
    // the path maximum exceeds both endpoint values (mountain geometry)
    let energies: Vec<f64> = path
        .vertices
        .iter()
        .map(|v| energy(v, &model, 1.0).unwrap().i_lambda)
        .collect();
    let max = energies.iter().cloned().fold(f64::MIN, f64::max);
    assert!(max > 0.0 && max > energies[0] && max > *energies.last().unwrap());
}

#[test]
fn mountain_path_reports_endpoint_failure_in_small_box() {
    // a box too small for the needed dilation must fail loudly, not silently
    let model = canonical_model();
    let grid = BoxGrid::new(2, 16.0, 128).unwrap();
    let z = plateau_profile(model.nl.zeta + 1.0, 4.0, grid).unwrap();
    // λ just above ∫G₂/∫G₁ needs a dilation far beyond the support guard
    let e = energy(&z, &model, 1.0).unwrap();
    let lambda = 1.001 * e.g2 / e.g1;
    assert!(matches!(
        mountain_path(&z, 2.0, 16, &model, lambda),
        Err(EnergyError::EndpointNotNegative { .. })
    ));
}

#[test]
fn pohozaev_report_scales_correctly_under_dilation() {
    // the free residual (N−2s)/2·T − N∫G transforms as θ^{N−2s} and θ^N;
    // cross-check report entries against independently scaled energies
    let mut model = canonical_model();
    model.v = Potential::zero();
    let grid = BoxGrid::new(2, 14.0, 96).unwrap();
    let u = gaussian(grid, 2.2, 1.3);
    let e = energy(&u, &model, 1.0).unwrap();
    let n = 2.0;
    let s = model.s.value();
    let theta = 1.3;
    let v = dilate(&u, theta).unwrap();
    let rep = pohozaev_report(&v, &model).unwrap();
    let expect = 0.5 * (n - 2.0 * s) * theta.powf(n - 2.0 * s) * e.kinetic
        - n * theta.powf(n) * e.g_total;
    assert!(
        (rep.free_residual - expect).abs() < 3e-2 * expect.abs().max(1.0),
        "{} vs {}",
        rep.free_residual,
        expect
    );
}

#[test]
fn critical_diagnostics_level_relation_consistency() {
    let model = canonical_model();
    let grid = BoxGrid::new(2, 12.0, 64).unwrap();
    let u = gaussian(grid, 2.0, 1.4);
    let e = energy(&u, &model, 1.0).unwrap();
    let n = 2.0;
    let s = model.s.value();
    let c = s * e.kinetic / n - e.virial / (2.0 * n);
    let diag = critical_diagnostics(&u, &model, 1.0, c).unwrap();
    assert!(diag.level_relation_residual < 1e-12);
    // δ₁, δ₂ are positive for a nonnegative profile
    assert!(diag.delta1 > 0.0 && diag.delta2 > 0.0);
    // the Nehari-like quantity matches its definition term by term
    let expect = e.kinetic + e.potential + diag.delta2 - diag.delta1;
    assert!((diag.nehari_like - expect).abs() < 1e-10 * expect.abs().max(1.0));
}
