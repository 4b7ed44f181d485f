//! Inverse estimates: the modulus `ω_φ^p(f, τ/λ_n)` bounded by a telescoped
//! sum of best approximations `E^p_{λ_ν}`, `ν = 1..n`, with `λ_0 = 0`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{InequalityReport, Status, CHECK_TOL};
use crate::smoothness::{generalized_modulus_detail, StepWeight, DEFAULT_GRID};
use crate::spectrum::Spectrum;

const MONOTONE_SAMPLES: usize = 2048;
const MONOTONE_TOL: f64 = 1e-12;

/// Both sides of summation by parts over `ν = N₁..N₂` (1-based), with tail sums of a
/// finitely supported `c`.
pub fn abel_transform(beta: &[f64], c: &[f64], n1: usize, n2: usize) -> Result<(f64, f64)> {
    if n1 < 1 || n1 > n2 || n2 > beta.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ N1 ≤ N2 ≤ {} (got N1 = {n1}, N2 = {n2})",
            beta.len()
        )));
    }
    // tail[ν] = Σ_{i ≥ ν} c_i, 1-based
    let len = c.len().max(n2) + 1;
    let mut tail = vec![0.0; len + 1];
    for nu in (1..len).rev() {
        tail[nu] = tail[nu + 1] + c.get(nu - 1).copied().unwrap_or(0.0);
    }
    let b = |nu: usize| beta[nu - 1];
    let cv = |nu: usize| c.get(nu - 1).copied().unwrap_or(0.0);
    let lhs = (n1..=n2).map(|nu| b(nu) * cv(nu)).sum();
    let mut rhs = b(n1) * tail[n1];
    for nu in n1 + 1..=n2 {
        rhs += (b(nu) - b(nu - 1)) * tail[nu];
    }
    rhs -= b(n2) * tail[n2 + 1];
    Ok((lhs, rhs))
}

/// Sampled check that `φ` is nondecreasing on `[0, τ]` and peaks at `τ`.
pub fn check_inverse_hypothesis(phi: &StepWeight, tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be positive".into()));
    }
    let mut prev = phi.eval(0.0);
    for i in 1..=MONOTONE_SAMPLES {
        let t = tau * i as f64 / MONOTONE_SAMPLES as f64;
        let v = phi.eval(t);
        if v < prev - MONOTONE_TOL {
            return Err(Error::Hypothesis(format!(
                "φ decreases on [0, τ]: φ({t}) = {v} < {prev}"
            )));
        }
        prev = v;
    }
    let top = phi.max_value();
    if phi.eval(tau) < top - 1e-9 * (1.0 + top) {
        return Err(Error::Hypothesis(format!(
            "φ(τ) = {} is below max φ = {top}",
            phi.eval(tau)
        )));
    }
    Ok(())
}

/// Both sides of an inverse estimate, in `p`-th powers.
#[derive(Debug, Clone, Serialize)]
pub struct InverseBound {
    /// `ω^p(f, τ/λ_n)` from the grid scan (a lower bound).
    pub lhs: f64,
    /// Certified upper bound for `lhs`.
    pub lhs_upper: Option<f64>,
    pub rhs: f64,
}

impl InverseBound {
    /// `fail` only when the scanned value already exceeds the bound.
    pub fn status(&self) -> Status {
        if self.lhs > self.rhs + CHECK_TOL {
            Status::Fail
        } else if self.lhs_upper.is_none_or(|u| u <= self.rhs + CHECK_TOL) {
            Status::Pass
        } else {
            Status::Inconclusive
        }
    }

    pub fn report(&self, formula: &str, grid: usize) -> InequalityReport {
        let mut r = InequalityReport::new(self.lhs, self.rhs, None, formula, grid);
        r.lhs_upper = self.lhs_upper;
        r.status = self.status();
        r.direction = "inverse".into();
        r
    }
}

fn modulus_pow(s: &Spectrum, phi: &StepWeight, delta: f64) -> Result<(f64, Option<f64>)> {
    let m = generalized_modulus_detail(s, phi, delta, DEFAULT_GRID)?;
    Ok((m.value.powf(s.p()), m.upper_pow))
}

fn ladder_with_zero(s: &Spectrum, n: usize) -> Result<Vec<f64>> {
    let mut lam = vec![0.0];
    for nu in 1..=n {
        lam.push(s.ladder().lambda(nu)?);
    }
    Ok(lam)
}

/// `ω_φ^p(f, τ/λ_n) ≤ Σ_{ν=1}^n (φ^p(τλ_ν/λ_n) - φ^p(τλ_{ν-1}/λ_n)) E^p_{λ_ν}`.
pub fn inverse_bound(s: &Spectrum, n: usize, phi: &StepWeight, tau: f64) -> Result<InverseBound> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    check_inverse_hypothesis(phi, tau)?;
    let p = s.p();
    let lam = ladder_with_zero(s, n)?;
    let tails = s.tail_profile_pow(n);
    let w = |l: f64| phi.eval_pow(tau * l / lam[n], p);
    let rhs = (1..=n).map(|nu| (w(lam[nu]) - w(lam[nu - 1])) * tails[nu - 1]).sum();
    let (lhs, lhs_upper) = modulus_pow(s, phi, tau / lam[n])?;
    Ok(InverseBound { lhs, lhs_upper, rhs })
}

fn check_power_order(alpha: f64, p: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    if alpha * p < 1.0 {
        return Err(Error::Hypothesis("restricted to αp ≥ 1".into()));
    }
    Ok(())
}

/// `ω_α^p(f, π/λ_n) ≤ αp (2π/λ_n)^{αp} Σ_{ν=1}^n λ_ν^{αp-1}(λ_ν - λ_{ν-1}) E^p_{λ_ν}`.
pub fn inverse_bound_power(s: &Spectrum, n: usize, alpha: f64) -> Result<InverseBound> {
    power_form(s, n, alpha, None)
}

/// The power form with every gap `λ_ν - λ_{ν-1}` replaced by `C ≥ max_gap(s)`.
pub fn inverse_bound_gap(s: &Spectrum, n: usize, alpha: f64, c: f64) -> Result<InverseBound> {
    let g = max_gap(s)?;
    if !(c >= g) {
        return Err(Error::InvalidArgument(format!("C = {c} is below the largest gap {g}")));
    }
    power_form(s, n, alpha, Some(c))
}

fn power_form(s: &Spectrum, n: usize, alpha: f64, gap: Option<f64>) -> Result<InverseBound> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let p = s.p();
    check_power_order(alpha, p)?;
    let ap = alpha * p;
    let lam = ladder_with_zero(s, n)?;
    let tails = s.tail_profile_pow(n);
    let sum: f64 = (1..=n)
        .map(|nu| lam[nu].powf(ap - 1.0) * gap.unwrap_or(lam[nu] - lam[nu - 1]) * tails[nu - 1])
        .sum();
    let rhs = ap * (2.0 * PI / lam[n]).powf(ap) * sum;
    let phi = StepWeight::alpha(alpha)?;
    let (lhs, lhs_upper) = modulus_pow(s, &phi, PI / lam[n])?;
    Ok(InverseBound { lhs, lhs_upper, rhs })
}

/// `max_ν (λ_{ν+1} - λ_ν)` over the ladder, starting from `λ_0 = 0`.
pub fn max_gap(s: &Spectrum) -> Result<f64> {
    let lad = s.ladder().as_slice();
    if lad.is_empty() {
        return Err(Error::InvalidArgument("spectrum has no positive exponent".into()));
    }
    let mut prev = 0.0;
    let mut g: f64 = 0.0;
    for &l in lad {
        g = g.max(l - prev);
        prev = l;
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseSuite {
    pub general: InequalityReport,
    pub power: InequalityReport,
    pub gap: InequalityReport,
    pub max_gap: f64,
    /// `rhs(general) ≤ rhs(power) ≤ rhs(gap)` up to `1e-10` relative.
    pub chain_holds: bool,
    pub status: Status,
}

/// All three inverse estimates for `φ_α`, `τ = π`, `C = max_gap`.
pub fn verify_inverse(s: &Spectrum, n: usize, alpha: f64) -> Result<InverseSuite> {
    let phi = StepWeight::alpha(alpha)?;
    let c = max_gap(s)?;
    let general = inverse_bound(s, n, &phi, PI)?;
    let power = inverse_bound_power(s, n, alpha)?;
    let gap = inverse_bound_gap(s, n, alpha, c)?;
    let slack = |x: f64| 1e-10 * (1.0 + x.abs());
    let chain_holds = general.rhs <= power.rhs + slack(power.rhs) && power.rhs <= gap.rhs + slack(gap.rhs);
    let mut status = general.status().combine(power.status()).combine(gap.status());
    if !chain_holds {
        status = Status::Fail;
    }
    Ok(InverseSuite {
        general: general.report("w^p <= sum (phi^p(l_v) - phi^p(l_(v-1))) E_v^p", DEFAULT_GRID),
        power: power.report("w^p <= ap (2pi/l_n)^(ap) sum l_v^(ap-1) (l_v - l_(v-1)) E_v^p", DEFAULT_GRID),
        gap: gap.report("w^p <= ap (2pi)^(ap) C / l_n^(ap) sum l_v^(ap-1) E_v^p", DEFAULT_GRID),
        max_gap: c,
        chain_holds,
        status,
    })
}
