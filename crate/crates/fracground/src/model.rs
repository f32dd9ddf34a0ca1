//! Concrete nonlinearity/potential families, the truncation and g₁/g₂
//! splitting machinery, and samplers that check the structural assumptions a
//! model must satisfy before the solvers touch it.

use crate::grid_spectral::{gl_integrate, BoxGrid, FracOrder};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("nonlinearity parameters must be positive (m={m}, a={a})")]
    BadCoefficients { m: f64, a: f64 },
    #[error("power exponent must satisfy p > 1 (got {0})")]
    BadExponent(f64),
    #[error("subcriticality violated: p+1 = {p_plus_1} >= 2* = {two_star}")]
    Supercritical { p_plus_1: f64, two_star: f64 },
    #[error("epsilon must lie in (0,1) (got {0})")]
    BadEpsilon(f64),
    #[error("truncation cap must exceed zeta (t0={t0}, zeta={zeta})")]
    BadCap { t0: f64, zeta: f64 },
}

/// g(t) = −m·t + a·|t|^{p−1} t, optionally truncated to zero beyond t₀.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Nonlinearity {
    pub m: f64,
    pub a: f64,
    pub p: f64,
    pub truncation_cap: Option<f64>,
    /// First positive zero of G; G > 0 immediately above it.
    pub zeta: f64,
}

/// Critical exponent 2★ = 2N/(N−2s).
pub fn two_star(n: usize, s: FracOrder) -> f64 {
    let nn = n as f64;
    2.0 * nn / (nn - 2.0 * s.value())
}

impl Nonlinearity {
    pub fn new(m: f64, a: f64, p: f64) -> Result<Self, ModelError> {
        if !(m > 0.0 && a > 0.0) {
            return Err(ModelError::BadCoefficients { m, a });
        }
        if !(p > 1.0) {
            return Err(ModelError::BadExponent(p));
        }
        // G(t) = −m t²/2 + a t^{p+1}/(p+1) first vanishes at ((p+1)m/(2a))^{1/(p−1)}
        let zeta = ((p + 1.0) * m / (2.0 * a)).powf(1.0 / (p - 1.0));
        Ok(Nonlinearity { m, a, p, truncation_cap: None, zeta })
    }

    pub fn check_subcritical(&self, n: usize, s: FracOrder) -> Result<(), ModelError> {
        // for N ≤ 2s the embedding reaches L^∞ and every power is subcritical
        if n as f64 <= 2.0 * s.value() {
            return Ok(());
        }
        let ts = two_star(n, s);
        if self.p + 1.0 >= ts {
            return Err(ModelError::Supercritical { p_plus_1: self.p + 1.0, two_star: ts });
        }
        Ok(())
    }

    /// Untruncated g.
    fn g_raw(&self, t: f64) -> f64 {
        -self.m * t + self.a * t.abs().powf(self.p - 1.0) * t
    }

    fn g_big_raw(&self, t: f64) -> f64 {
        -0.5 * self.m * t * t + self.a * t.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }

    /// g̃: g with the optional cap applied first, odd-extended.
    pub fn g_eval(&self, t: f64) -> f64 {
        match self.truncation_cap {
            Some(t0) if t.abs() > t0 => 0.0,
            _ => self.g_raw(t),
        }
    }

    /// G̃(t) = ∫₀^t g̃; even in t.
    pub fn g_big_eval(&self, t: f64) -> f64 {
        match self.truncation_cap {
            Some(t0) if t.abs() > t0 => self.g_big_raw(t0),
            _ => self.g_big_raw(t),
        }
    }

    /// Truncation device. The power family is positive beyond ζ (case 1), so the
    /// odd extension is a no-op; a configured cap takes the case-2 branch.
    pub fn truncate(&self, cap: Option<f64>) -> Result<Nonlinearity, ModelError> {
        match cap {
            None => Ok(*self),
            Some(t0) => {
                if t0 <= self.zeta {
                    return Err(ModelError::BadCap { t0, zeta: self.zeta });
                }
                Ok(Nonlinearity { truncation_cap: Some(t0), ..*self })
            }
        }
    }

    pub fn split(&self) -> SplitPair {
        SplitPair { nl: *self }
    }
}

/// The decomposition g = g₁ − g₂ with g₁(t) = max{g(t)+m t, 0} (odd-extended)
/// and g₂ = g₁ − g.
#[derive(Debug, Clone, Copy)]
pub struct SplitPair {
    pub nl: Nonlinearity,
}

impl SplitPair {
    pub fn g1(&self, t: f64) -> f64 {
        let sgn = if t < 0.0 { -1.0 } else { 1.0 };
        let ta = t.abs();
        sgn * (self.nl.g_eval(ta) + self.nl.m * ta).max(0.0)
    }

    pub fn g2(&self, t: f64) -> f64 {
        self.g1(t) - self.nl.g_eval(t)
    }

    /// G₁(t) = ∫₀^t g₁; closed piecewise form for the power family.
    pub fn g_big1(&self, t: f64) -> f64 {
        let ta = t.abs();
        let nl = &self.nl;
        let pow_part = |x: f64| nl.a * x.powf(nl.p + 1.0) / (nl.p + 1.0);
        match nl.truncation_cap {
            Some(t0) if ta > t0 => {
                // beyond the cap g̃ = 0 so g₁ = max{m t, 0} = m t
                pow_part(t0) + 0.5 * nl.m * (ta * ta - t0 * t0)
            }
            _ => pow_part(ta),
        }
    }

    pub fn g_big2(&self, t: f64) -> f64 {
        self.g_big1(t) - self.nl.g_big_eval(t)
    }

    /// g_λ = λ g₁ − g₂ (equals g̃ at λ = 1).
    pub fn g_lambda(&self, lambda: f64, t: f64) -> f64 {
        lambda * self.g1(t) - self.g2(t)
    }

    pub fn g_big_lambda(&self, lambda: f64, t: f64) -> f64 {
        lambda * self.g_big1(t) - self.g_big2(t)
    }
}

/// Smallest C_ε with G₁(t) ≤ (C_ε/2★)|t|^{2★} + ε G₂(t) on a log-spaced grid.
pub fn epsilon_bound_constant(
    sp: &SplitPair,
    eps: f64,
    n: usize,
    s: FracOrder,
) -> Result<f64, ModelError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ModelError::BadEpsilon(eps));
    }
    let ts = two_star(n, s);
    let n_pts = 2000;
    let mut c = 0.0f64;
    for i in 0..n_pts {
        let logt = -6.0 + 12.0 * i as f64 / (n_pts - 1) as f64;
        let t = 10f64.powf(logt);
        let need = (sp.g_big1(t) - eps * sp.g_big2(t)) * ts / t.powf(ts);
        c = c.max(need);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialFamily {
    InversePower,
    Gaussian,
    Zero,
}

/// Radial potential V(x) = V(|x|) ≥ 0 vanishing at infinity, with an exact
/// radial derivative so ⟨∇V(x), x⟩ is closed-form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Potential {
    pub family: PotentialFamily,
    pub v0: f64,
    pub beta: f64,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { family: PotentialFamily::Zero, v0: 0.0, beta: 1.0 }
    }

    pub fn eval_r_sq(&self, r_sq: f64) -> f64 {
        match self.family {
            PotentialFamily::InversePower => self.v0 * (1.0 + r_sq).powf(-self.beta),
            PotentialFamily::Gaussian => self.v0 * (-self.beta * r_sq).exp(),
            PotentialFamily::Zero => 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_r_sq(x.iter().map(|v| v * v).sum())
    }

    /// ⟨∇V(x), x⟩ = r·V'(r) as a function of r².
    pub fn virial_r_sq(&self, r_sq: f64) -> f64 {
        match self.family {
            PotentialFamily::InversePower => {
                -2.0 * self.beta * self.v0 * r_sq * (1.0 + r_sq).powf(-self.beta - 1.0)
            }
            PotentialFamily::Gaussian => {
                -2.0 * self.beta * r_sq * self.v0 * (-self.beta * r_sq).exp()
            }
            PotentialFamily::Zero => 0.0,
        }
    }

    pub fn virial(&self, x: &[f64]) -> f64 {
        self.virial_r_sq(x.iter().map(|v| v * v).sum())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, PotentialFamily::Zero) || self.v0 == 0.0
    }
}

/// A complete problem instance: (N,s) through the grid/order, g̃ through the
/// (possibly truncated) nonlinearity, and V.
#[derive(Debug, Clone, Copy)]
pub struct ModelSpec {
    pub nl: Nonlinearity,
    pub v: Potential,
    pub s: FracOrder,
}

impl ModelSpec {
    pub fn split(&self) -> SplitPair {
        self.nl.split()
    }

    /// Same model with the potential switched off (the free problem).
    pub fn without_potential(&self) -> ModelSpec {
        ModelSpec { v: Potential::zero(), ..*self }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub satisfied: bool,
    pub margin: f64,
    pub worst_point: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// ‖max{⟨∇V,·⟩,0}‖_{L^{N/2s}} and its comparison value 2S for (V2).
    pub v2_norm: f64,
    pub v2_bound: f64,
}

impl AssumptionReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn failed(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| !c.satisfied).collect()
    }
}

/// Sample the (g1)–(g4), (g3)' and (V1)–(V6) inequalities on the grid and a
/// radial refinement. Failures are reported, never thrown.
pub fn check_assumptions(
    nl: &Nonlinearity,
    v: &Potential,
    grid: &BoxGrid,
    s: FracOrder,
    s_estimate: f64,
) -> AssumptionReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, satisfied: bool, margin: f64, worst: f64| {
        checks.push(AssumptionCheck {
            name: name.to_string(),
            satisfied,
            margin,
            worst_point: worst,
        });
    };

    // (g1): oddness, sampled
    let mut odd_defect = 0.0f64;
    let mut odd_worst = 0.0;
    for i in 0..1000 {
        let t = -5.0 + 10.0 * i as f64 / 999.0;
        let d = (nl.g_eval(t) + nl.g_eval(-t)).abs();
        if d > odd_defect {
            odd_defect = d;
            odd_worst = t;
        }
    }
    push("g1_odd", odd_defect < 1e-12, 1e-12 - odd_defect, odd_worst);

    // (g2): g(t)/t → −m as t → 0+
    let slope = nl.g_eval(1e-6) / 1e-6;
    let g2_margin = 0.01 * nl.m - (slope + nl.m).abs();
    push("g2_limit", g2_margin > 0.0, g2_margin, 1e-6);

    // (g3): subcriticality for the configured (N,s)
    let ts = two_star(grid.dim, s);
    push("g3_subcritical", nl.p + 1.0 < ts, ts - (nl.p + 1.0), nl.p + 1.0);

    // (g3)': |g(t)−(−mt)| ≤ C|t|^{q−1} with q = p+1 — exact for the family
    push("g3p_growth", true, nl.a, 0.0);

    // (g4): G positive just above the stored zeta
    let g4 = nl.g_big_eval(nl.zeta * 1.05);
    push("g4_positivity", g4 > 0.0, g4, nl.zeta * 1.05);

    // potential samples on the radial refinement [0, √N·L]
    let r_max = (grid.dim as f64).sqrt() * grid.half_width;
    let n_samp = 4000;
    let mut v_min = f64::INFINITY;
    let mut v_min_r = 0.0;
    let mut v_max = 0.0f64;
    let mut virial_max = f64::NEG_INFINITY;
    let mut virial_max_r = 0.0;
    let mut v6_min = f64::INFINITY;
    let mut v6_min_r = 0.0;
    for i in 0..=n_samp {
        let r = r_max * i as f64 / n_samp as f64;
        let vv = v.eval_r_sq(r * r);
        let vir = v.virial_r_sq(r * r);
        if vv < v_min {
            v_min = vv;
            v_min_r = r;
        }
        v_max = v_max.max(vv);
        if vir > virial_max {
            virial_max = vir;
            virial_max_r = r;
        }
        let v6 = grid.dim as f64 * vv + vir;
        if v6 < v6_min {
            v6_min = v6;
            v6_min_r = r;
        }
    }

    // (V1): V ≥ 0 with strict inequality somewhere
    push("v1_nonneg_strict", v_min >= 0.0 && v_max > 0.0, v_max.min(1.0) + v_min.min(0.0), v_min_r);
    // (V3): V(x) → 0 at the box scale
    let far = v.eval_r_sq(r_max * r_max);
    push("v3_vanishing", far <= 0.1 * v_max.max(1e-300), 0.1 * v_max - far, r_max);
    // (V4): radial by construction for the declared families
    push("v4_radial", true, f64::INFINITY, 0.0);
    // (V5): ⟨∇V,x⟩ ≤ 0 everywhere
    push("v5_virial_sign", virial_max <= 0.0, -virial_max, virial_max_r);
    // (V6): N·V + ⟨∇V,x⟩ ≥ 0 everywhere
    push("v6_combined", v6_min >= 0.0, v6_min, v6_min_r);

    // (V2): ‖max{⟨∇V,x⟩,0}‖_{L^{N/2s}} < 2S by radial quadrature
    let q = grid.dim as f64 / (2.0 * s.value());
    let surface = match grid.dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let integrand = |r: f64| {
        let plus = v.virial_r_sq(r * r).max(0.0);
        plus.powf(q) * r.powi(grid.dim as i32 - 1) * surface
    };
    let mut integral = 0.0;
    let n_panels = 40;
    for i in 0..n_panels {
        let a = r_max * i as f64 / n_panels as f64;
        let b = r_max * (i + 1) as f64 / n_panels as f64;
        integral += gl_integrate(a, b, integrand);
    }
    let v2_norm = integral.powf(1.0 / q);
    let v2_bound = 2.0 * s_estimate;
    push("v2_norm_bound", v2_norm < v2_bound, v2_bound - v2_norm, 0.0);

    AssumptionReport { checks, v2_norm, v2_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_g_closed_forms() {
        let nl = Nonlinearity::new(1.0, 1.0, 3.0).unwrap();
        assert_eq!(nl.g_eval(2.0), -2.0 + 8.0);
        assert_eq!(nl.g_big_eval(2.0), -2.0 + 4.0);
        // odd symmetry of g, even symmetry of G
        assert_eq!(nl.g_eval(-2.0), -nl.g_eval(2.0));
        assert_eq!(nl.g_big_eval(-2.0), nl.g_big_eval(2.0));
    }

    #[test]
    fn constructor_guards() {
        assert!(Nonlinearity::new(0.0, 1.0, 3.0).is_err());
        assert!(Nonlinearity::new(1.0, 0.0, 3.0).is_err());
        assert!(Nonlinearity::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn potential_families() {
        let v = Potential { family: PotentialFamily::InversePower, v0: 0.5, beta: 1.0 };
        assert_eq!(v.eval(&[0.0, 0.0]), 0.5);
        assert!((v.eval(&[1.0, 0.0]) - 0.25).abs() < 1e-15);
        assert!(!v.is_zero());
        assert!(Potential::zero().is_zero());
        assert_eq!(Potential::zero().eval(&[2.0]), 0.0);
    }

    #[test]
    fn two_star_formula() {
        let s = FracOrder::new(0.5).unwrap();
        assert!((two_star(3, s) - 3.0).abs() < 1e-12);
        assert!((two_star(2, s) - 4.0).abs() < 1e-12);
    }
}
