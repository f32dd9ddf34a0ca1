//! Functionals and identities: I, I_λ, Euler–Lagrange residuals, Pohozaev
//! reports, dilation projections onto the Pohozaev manifolds, the plateau
//! profile, and admissible mountain-pass paths.

use crate::grid_spectral::{
    dilate, frac_laplacian, kinetic_energy, BoxGrid, GridError, RealField,
};
use crate::model::ModelSpec;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("non-finite integrand in an energy term")]
    NonFinite,
    #[error("projection requires ∫G(u) > 0 (got {0})")]
    NonPositiveG(f64),
    #[error("no sign change of dI(u^θ)/dθ on the bracket; I(u^θ) profile attached")]
    NoSignChange { profile: Vec<(f64, f64)> },
    #[error("plateau radius {r} too large for the box (need R+1 < L/2 = {limit})")]
    PlateauTooWide { r: f64, limit: f64 },
    #[error("energy_on_P precondition violated: pohozaev residual_rel = {0:.3e} >= 1e-3")]
    NotOnManifold(f64),
    #[error("path endpoint never reached negative energy inside the box guard (last θ = {theta}, I = {energy})")]
    EndpointNotNegative { theta: f64, energy: f64 },
    #[error("interval-J guard failed: δ∫G₁ − ∫G₂ = {0} ≤ 0 at δ = 1")]
    IntervalGuard(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub g_total: f64,
    pub g1: f64,
    pub g2: f64,
    pub virial: f64,
    pub i: f64,
    pub i_lambda: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PohozaevReport {
    pub lhs_kinetic: f64,
    pub lhs_potential: f64,
    pub lhs_virial: f64,
    pub rhs: f64,
    pub residual: f64,
    pub residual_rel: f64,
    pub free_residual: f64,
    pub free_residual_rel: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalDiagnostics {
    pub delta1: f64,
    pub delta2: f64,
    pub nehari_like: f64,
    pub level_relation_residual: f64,
}

#[derive(Debug, Clone)]
pub struct PathSpec {
    /// γ(t_j), j = 0..K; γ(0) = 0 and I_λ(γ(K)) < 0.
    pub vertices: Vec<RealField>,
    pub endpoint_energy: f64,
    pub theta_end: f64,
}

pub fn energy(u: &RealField, model: &ModelSpec, lambda: f64) -> Result<EnergyBreakdown, EnergyError> {
    let grid = u.grid;
    let hn = grid.cell_volume();
    let sp = model.split();
    let mut pos = [0.0f64; 3];
    let (mut pot, mut g_total, mut g1, mut g2, mut virial) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (flat, &uv) in u.values.iter().enumerate() {
        grid.position(flat, &mut pos);
        let x = &pos[..grid.dim];
        pot += model.v.eval(x) * uv * uv;
        virial += model.v.virial(x) * uv * uv;
        g_total += model.nl.g_big_eval(uv);
        g1 += sp.g_big1(uv);
        g2 += sp.g_big2(uv);
    }
    pot *= hn;
    virial *= hn;
    g_total *= hn;
    g1 *= hn;
    g2 *= hn;
    let kinetic = kinetic_energy(u, model.s);
    let i = 0.5 * kinetic + 0.5 * pot - g_total;
    let i_lambda = 0.5 * kinetic + 0.5 * pot + g2 - lambda * g1;
    let out = EnergyBreakdown { kinetic, potential: pot, g_total, g1, g2, virial, i, i_lambda };
    if ![kinetic, pot, g_total, g1, g2, virial].iter().all(|v| v.is_finite()) {
        return Err(EnergyError::NonFinite);
    }
    Ok(out)
}

/// Fréchet gradient of I_λ under the L² pairing:
/// r = (−Δ)^s u + V u + g₂(u) − λ g₁(u), plus its discrete L² norm.
pub fn gradient_residual(u: &RealField, model: &ModelSpec, lambda: f64) -> (RealField, f64) {
    let grid = u.grid;
    let sp = model.split();
    let mut r = frac_laplacian(u, model.s);
    let mut pos = [0.0f64; 3];
    for (flat, rv) in r.values.iter_mut().enumerate() {
        grid.position(flat, &mut pos);
        let uv = u.values[flat];
        *rv += model.v.eval(&pos[..grid.dim]) * uv + sp.g2(uv) - lambda * sp.g1(uv);
    }
    let norm = r.l2_norm();
    (r, norm)
}

pub fn pohozaev_report(u: &RealField, model: &ModelSpec) -> Result<PohozaevReport, EnergyError> {
    let n = u.grid.dim as f64;
    let s = model.s.value();
    let e = energy(u, model, 1.0)?;
    let lhs_kinetic = 0.5 * (n - 2.0 * s) * e.kinetic;
    let lhs_potential = 0.5 * n * e.potential;
    let lhs_virial = 0.5 * e.virial;
    let rhs = n * e.g_total;
    let residual = lhs_kinetic + lhs_potential + lhs_virial - rhs;
    let denom = lhs_kinetic.abs() + lhs_potential.abs() + lhs_virial.abs() + rhs.abs();
    let free_residual = lhs_kinetic - rhs;
    let free_denom = lhs_kinetic.abs() + rhs.abs();
    Ok(PohozaevReport {
        lhs_kinetic,
        lhs_potential,
        lhs_virial,
        rhs,
        residual,
        residual_rel: if denom > 0.0 { residual.abs() / denom } else { 0.0 },
        free_residual,
        free_residual_rel: if free_denom > 0.0 { free_residual.abs() / free_denom } else { 0.0 },
    })
}

pub fn critical_diagnostics(
    u: &RealField,
    model: &ModelSpec,
    lambda: f64,
    c_lambda: f64,
) -> Result<CriticalDiagnostics, EnergyError> {
    let grid = u.grid;
    let hn = grid.cell_volume();
    let sp = model.split();
    let mut pos = [0.0f64; 3];
    let (mut delta1, mut delta2, mut pot) = (0.0, 0.0, 0.0);
    for (flat, &uv) in u.values.iter().enumerate() {
        grid.position(flat, &mut pos);
        delta1 += sp.g1(uv) * uv;
        delta2 += sp.g2(uv) * uv;
        pot += model.v.eval(&pos[..grid.dim]) * uv * uv;
    }
    delta1 *= hn;
    delta2 *= hn;
    pot *= hn;
    let e = energy(u, model, lambda)?;
    let n = grid.dim as f64;
    let s = model.s.value();
    Ok(CriticalDiagnostics {
        delta1,
        delta2,
        nehari_like: e.kinetic + pot + delta2 - lambda * delta1,
        level_relation_residual: (s * e.kinetic / n - e.virial / (2.0 * n) - c_lambda).abs(),
    })
}

/// Closed-form dilation onto P₀: θ̄ = [(N−2s)T / (2N∫G)]^{1/(2s)}.
pub fn project_to_p0(u: &RealField, model: &ModelSpec) -> Result<(f64, RealField), EnergyError> {
    let e = energy(u, model, 1.0)?;
    if e.g_total <= 0.0 {
        return Err(EnergyError::NonPositiveG(e.g_total));
    }
    let n = u.grid.dim as f64;
    let s = model.s.value();
    let theta = ((n - 2.0 * s) * e.kinetic / (2.0 * n * e.g_total)).powf(1.0 / (2.0 * s));
    let v = dilate(u, theta)?;
    Ok((theta, v))
}

/// I(u^θ) evaluated through dilation (band-limited resample).
pub fn energy_of_dilation(
    u: &RealField,
    model: &ModelSpec,
    theta: f64,
) -> Result<f64, EnergyError> {
    let v = dilate(u, theta)?;
    Ok(energy(&v, model, 1.0)?.i)
}

/// I(u^θ) through the exact scaling laws — no resampling:
/// T(u^θ) = θ^{N−2s}T(u), ∫V|u^θ|² = θ^N ∫V(θx)|u|², ∫G(u^θ) = θ^N ∫G(u).
pub fn energy_of_dilation_scaling(u: &RealField, model: &ModelSpec, theta: f64) -> f64 {
    let grid = u.grid;
    let n = grid.dim as f64;
    let s = model.s.value();
    let hn = grid.cell_volume();
    let t_kin = kinetic_energy(u, model.s);
    let mut pos = [0.0f64; 3];
    let mut pot_scaled = 0.0;
    let mut g_total = 0.0;
    for (flat, &uv) in u.values.iter().enumerate() {
        grid.position(flat, &mut pos);
        let r_sq: f64 = pos[..grid.dim].iter().map(|x| x * x).sum();
        pot_scaled += model.v.eval_r_sq(theta * theta * r_sq) * uv * uv;
        g_total += model.nl.g_big_eval(uv);
    }
    pot_scaled *= hn;
    g_total *= hn;
    0.5 * theta.powf(n - 2.0 * s) * t_kin + 0.5 * theta.powf(n) * pot_scaled
        - theta.powf(n) * g_total
}

/// 1D critical point of θ ↦ I(u^θ): bracketed sign change of the centered
/// difference derivative, then bisection.
pub fn project_to_p(u: &RealField, model: &ModelSpec) -> Result<(f64, RealField), EnergyError> {
    let e = energy(u, model, 1.0)?;
    if e.g_total <= 0.0 {
        return Err(EnergyError::NonPositiveG(e.g_total));
    }
    if model.v.is_zero() {
        return project_to_p0(u, model);
    }
    // largest admissible dilation under the support guard (mirrors dilate's
    // tail-mass check without resampling)
    let mut theta_max = 1.0f64;
    while theta_max < 64.0
        && u.tail_mass_fraction(u.grid.half_width / (theta_max * 1.25)) <= 1e-4
    {
        theta_max *= 1.25;
    }
    // cache the θ-independent pieces so the scan is cheap
    let grid = u.grid;
    let n = grid.dim as f64;
    let s = model.s.value();
    let hn = grid.cell_volume();
    let t_kin = e.kinetic;
    let mut pos = [0.0f64; 3];
    let mut r_sq_u_sq: Vec<(f64, f64)> = Vec::with_capacity(grid.n_points());
    for (flat, &uv) in u.values.iter().enumerate() {
        grid.position(flat, &mut pos);
        let r_sq: f64 = pos[..grid.dim].iter().map(|x| x * x).sum();
        r_sq_u_sq.push((r_sq, uv * uv));
    }
    let i_of = |theta: f64| -> f64 {
        let pot: f64 = r_sq_u_sq
            .iter()
            .map(|&(r_sq, u_sq)| model.v.eval_r_sq(theta * theta * r_sq) * u_sq)
            .sum::<f64>()
            * hn;
        0.5 * theta.powf(n - 2.0 * s) * t_kin + 0.5 * theta.powf(n) * pot
            - theta.powf(n) * e.g_total
    };
    let di = |theta: f64| -> f64 {
        let dt = 1e-4 * theta;
        (i_of(theta + dt) - i_of(theta - dt)) / (2.0 * dt)
    };
    let n_scan = 40;
    let lo = 1e-2f64;
    let mut prev_theta = lo;
    let mut prev = di(lo);
    let mut bracket = None;
    for i in 1..=n_scan {
        let theta = lo * (theta_max / lo).powf(i as f64 / n_scan as f64);
        let cur = di(theta);
        if prev > 0.0 && cur <= 0.0 {
            bracket = Some((prev_theta, theta));
            break;
        }
        prev = cur;
        prev_theta = theta;
    }
    let (mut a, mut b) = match bracket {
        Some(x) => x,
        None => {
            let mut profile = Vec::new();
            for i in 0..=n_scan {
                let theta = lo * (theta_max / lo).powf(i as f64 / n_scan as f64);
                profile.push((theta, i_of(theta)));
            }
            return Err(EnergyError::NoSignChange { profile });
        }
    };
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if di(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let theta = 0.5 * (a + b);
    let v = dilate(u, theta)?;
    Ok((theta, v))
}

/// The manifold representation (s/N)T − η/(2N), valid on P.
pub fn energy_on_p(u: &RealField, model: &ModelSpec) -> Result<f64, EnergyError> {
    let rep = pohozaev_report(u, model)?;
    if rep.residual_rel >= 1e-3 {
        return Err(EnergyError::NotOnManifold(rep.residual_rel));
    }
    let e = energy(u, model, 1.0)?;
    let n = u.grid.dim as f64;
    Ok(model.s.value() * e.kinetic / n - e.virial / (2.0 * n))
}

/// Radial cutoff profile: 𝔷 on [0,R], linear to 0 on [R,R+1].
pub fn plateau_profile(z_amp: f64, r: f64, grid: BoxGrid) -> Result<RealField, EnergyError> {
    if r + 1.0 >= 0.5 * grid.half_width {
        return Err(EnergyError::PlateauTooWide { r, limit: 0.5 * grid.half_width });
    }
    Ok(RealField::from_fn(grid, |x| {
        let rad = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        z_amp * (r + 1.0 - rad).clamp(0.0, 1.0)
    }))
}

/// Left endpoint of the interval J: smallest δ with δ∫G₁(w) − ∫G₂(w) > 0,
/// widened by 10% and capped below 1.
pub fn delta_bar(w: &RealField, model: &ModelSpec) -> Result<f64, EnergyError> {
    let e = energy(w, model, 1.0)?;
    if e.g1 - e.g2 <= 0.0 {
        return Err(EnergyError::IntervalGuard(e.g1 - e.g2));
    }
    let delta = e.g2 / e.g1;
    Ok((1.1 * delta).min(1.0 - 1e-3))
}

/// Dilation path γ(t_j) = z(·/(t_j θ_end)) with the endpoint extended (×1.5
/// steps, capped by the box support guard) until I_λ(γ(1)) < 0.
pub fn mountain_path(
    z: &RealField,
    theta_end: f64,
    k: usize,
    model: &ModelSpec,
    lambda: f64,
) -> Result<PathSpec, EnergyError> {
    let e = energy(z, model, 1.0)?;
    let dbar = delta_bar(z, model)?;
    if dbar * e.g1 - e.g2 <= 0.0 {
        return Err(EnergyError::IntervalGuard(dbar * e.g1 - e.g2));
    }
    // largest admissible dilation under the support guard
    let mut theta_box = 1.0f64;
    while theta_box < 64.0
        && z.tail_mass_fraction(z.grid.half_width / (theta_box * 1.05)) <= 1e-8
    {
        theta_box *= 1.05;
    }
    let mut th = theta_end.min(theta_box);
    loop {
        let end = dilate(z, th)?;
        let ie = energy(&end, model, lambda)?.i_lambda;
        if ie < 0.0 {
            break;
        }
        if th >= theta_box {
            return Err(EnergyError::EndpointNotNegative { theta: th, energy: ie });
        }
        th = (th * 1.5).min(theta_box);
    }
    let k = k.max(8);
    let mut vertices = Vec::with_capacity(k + 1);
    vertices.push(RealField::zeros(z.grid));
    for j in 1..=k {
        let theta = th * j as f64 / k as f64;
        vertices.push(dilate(z, theta)?);
    }
    let endpoint_energy = energy(vertices.last().unwrap(), model, lambda)?.i_lambda;
    Ok(PathSpec { vertices, endpoint_energy, theta_end: th })
}
