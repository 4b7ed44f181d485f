//! Jackson-type estimates `E_{λ_n}(f)_p ≤ C ω_φ(f, τ/λ_n)_p`: constants from
//! weight measures, sharp constants through the min-max problem, averaged
//! bounds and the closed-form uniform constants.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::minimax::{solve_minimax, MinimaxProblem};
use crate::quadrature::{jackson_integral_flat, jackson_integral_sin, QuadratureSettings};
use crate::report::{InequalityReport, Status};
use crate::smoothness::{generalized_modulus_detail, ModulusProfile, ProfileWeight, StepWeight, DEFAULT_GRID};
use crate::spectrum::{ExponentLadder, Spectrum, SpectrumEntry};

/// Nodes used when a closed-form weight is turned into a [`WeightMeasure`].
pub const MEASURE_INTERVALS: usize = 4096;

/// Nondecreasing step function on `[0, τ]`: jumps `dv_i` at `t_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMeasure {
    nodes: Vec<f64>,
    increments: Vec<f64>,
}

/// Closed-form weights with known densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedWeight {
    /// `v(t) = 1 - cos t`
    OneMinusCos,
    /// `v(t) = t`
    Linear,
}

impl WeightMeasure {
    pub fn new(nodes: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        if nodes.len() != increments.len() || nodes.len() < 2 {
            return Err(Error::InvalidMeasure("need ≥ 2 nodes, one increment each".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidMeasure("first node must be 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMeasure("nodes must increase strictly".into()));
        }
        if increments.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidMeasure("increments must be finite and ≥ 0".into()));
        }
        if !(increments.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidMeasure("total variation is zero".into()));
        }
        Ok(Self { nodes, increments })
    }

    /// Unit jump at `τ`.
    pub fn atom(tau: f64) -> Result<Self> {
        Self::new(vec![0.0, tau], vec![0.0, 1.0])
    }

    /// Composite-Simpson masses of the weight's density on `intervals` (even) panels.
    pub fn discretize(weight: ClosedWeight, tau: f64, intervals: usize) -> Result<Self> {
        if intervals < 2 || intervals % 2 != 0 || !(tau > 0.0) {
            return Err(Error::InvalidMeasure("need an even interval count and τ > 0".into()));
        }
        let h = tau / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals)
            .map(|i| if i == intervals { tau } else { i as f64 * h })
            .collect();
        let increments = nodes
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let density = match weight {
                    ClosedWeight::OneMinusCos => t.sin(),
                    ClosedWeight::Linear => 1.0,
                };
                (h / 3.0 * w * density).max(0.0)
            })
            .collect();
        Self::new(nodes, increments)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn tau(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `v(τ) - v(0)`.
    pub fn total(&self) -> f64 {
        self.increments.iter().sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StieltjesIntegral {
    pub value: f64,
    pub argmin: usize,
    pub scanned_to: usize,
}

/// `inf_{n ≤ k ≤ K} Σ_i φ^p(λ_k t_i/λ_n) dv_i`.
pub fn stieltjes_phi_integral(
    ladder: &ExponentLadder,
    n: usize,
    phi: &StepWeight,
    p: f64,
    v: &WeightMeasure,
    kmax: usize,
) -> Result<StieltjesIntegral> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let lam_n = ladder.lambda(n)?;
    let top = kmax.min(ladder.len());
    if top < n {
        return Err(Error::InvalidArgument(format!("empty index range [{n}, {top}]")));
    }
    let mut best = StieltjesIntegral {
        value: f64::INFINITY,
        argmin: n,
        scanned_to: top,
    };
    for k in n..=top {
        let theta = ladder.lambda(k)? / lam_n;
        let s: f64 = v
            .nodes
            .iter()
            .zip(&v.increments)
            .filter(|(_, d)| **d > 0.0)
            .map(|(&t, &d)| phi.eval_pow(theta * t, p) * d)
            .sum();
        if s < best.value {
            best.value = s;
            best.argmin = k;
        }
    }
    Ok(best)
}

/// `((v(τ) - v(0)) / I_{n,φ,p}(τ, v))^{1/p}`, an admissible constant for this `v`.
pub fn constant_from_measure(
    ladder: &ExponentLadder,
    n: usize,
    phi: &StepWeight,
    p: f64,
    v: &WeightMeasure,
    kmax: usize,
) -> Result<f64> {
    let i = stieltjes_phi_integral(ladder, n, phi, p, v, kmax)?;
    // sin(kπ) is not exactly zero in floating point
    if !(i.value > 1e-14 * v.total()) {
        return Err(Error::ZeroIntegral);
    }
    Ok((v.total() / i.value).powf(1.0 / p))
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpConstant {
    /// `J^{-1/p}`.
    pub k_value: f64,
    /// Min-max value `J`.
    pub j_value: f64,
    pub columns: Vec<usize>,
    pub rho: Vec<f64>,
    pub v_star: WeightMeasure,
    pub u_grid: usize,
    pub iterations: usize,
}

/// Sharp constant of the discretized problem on a `u_grid`-node grid over `[0, τ]`
/// with columns `n..=K`.
pub fn sharp_constant(
    ladder: &ExponentLadder,
    n: usize,
    phi: &StepWeight,
    p: f64,
    tau: f64,
    u_grid: usize,
    kmax: usize,
) -> Result<SharpConstant> {
    if u_grid < 64 {
        return Err(Error::InvalidArgument("u grid needs at least 64 nodes".into()));
    }
    let problem = MinimaxProblem::build(ladder, n, phi, p, tau, u_grid, kmax)?;
    let sol = solve_minimax(&problem)?;
    if !(sol.value > 0.0) {
        return Err(Error::ZeroIntegral);
    }
    // drop empty jumps; node 0 stays so the measure starts at 0
    let (mut nodes, mut incs) = (vec![0.0], vec![sol.dual_weights[0]]);
    for (&t, &d) in problem.nodes().iter().zip(&sol.dual_weights).skip(1) {
        if d > 0.0 || t == tau {
            nodes.push(t);
            incs.push(d);
        }
    }
    let v_star = WeightMeasure::new(nodes, incs)?;
    let k_value = sol.value.powf(-1.0 / p);
    let check = constant_from_measure(ladder, n, phi, p, &v_star, kmax)?;
    if (check - k_value).abs() > 1e-6 {
        return Err(Error::Solver(format!(
            "extremal measure gives {check}, min-max gives {k_value}"
        )));
    }
    Ok(SharpConstant {
        k_value,
        j_value: sol.value,
        columns: problem.columns().to_vec(),
        rho: sol.rho,
        v_star,
        u_grid,
        iterations: sol.iterations,
    })
}

/// Both sides of an averaged estimate, in `p`-th powers.
#[derive(Debug, Clone, Serialize)]
pub struct AveragedBound {
    /// `E^p_{λ_n}(f)_p`.
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs` with the grid gap of the modulus profile added.
    pub rhs_upper: Option<f64>,
    pub ratio: f64,
    /// Normalizing integral in the denominator, before the power of 2.
    pub denominator_integral: f64,
    pub argmin: usize,
    pub grid: usize,
}

fn alpha_weight(alpha: f64) -> Result<StepWeight> {
    StepWeight::alpha(alpha)
}

fn averaged(
    s: &Spectrum,
    n: usize,
    alpha: f64,
    tau: f64,
    grid: usize,
    weight: ProfileWeight,
    denominator: impl FnOnce(&ExponentLadder, usize) -> Result<(f64, f64, usize)>,
) -> Result<AveragedBound> {
    let q = QuadratureSettings::default();
    let lhs = s.best_approximation_pow(n)?;
    let lam_n = s.ladder().lambda(n)?;
    let kmax = s.max_index().max(n);
    let (scale, integral, argmin) = denominator(s.ladder(), kmax)?;
    let phi = alpha_weight(alpha)?;
    let profile = ModulusProfile::new(s, &phi, 1.0 / lam_n, tau, grid.max(2))?;
    let num = profile.integral(weight, &q)?;
    let upper = profile.integral_upper(weight, &q)?;
    let denom = scale * integral;
    let rhs = num / denom;
    Ok(AveragedBound {
        lhs,
        rhs,
        rhs_upper: upper.map(|u| u / denom),
        ratio: crate::report::ratio(lhs, rhs),
        denominator_integral: integral,
        argmin,
        grid,
    })
}

/// `E^p ≤ ∫_0^π ω_α^p(f, t/λ_n) sin t dt / (2^{αp/2} I_n(αp/2))`, with `I_n`
/// taken over the indices present in the spectrum's ladder.
pub fn averaged_bound_sin(s: &Spectrum, n: usize, alpha: f64, grid: usize) -> Result<AveragedBound> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let ap = alpha * s.p();
    averaged(s, n, alpha, PI, grid, ProfileWeight::Sin, |ladder, kmax| {
        let i = jackson_integral_sin(ladder, n, ap / 2.0, kmax, &QuadratureSettings::default())?;
        Ok((2f64.powf(ap / 2.0), i.value, i.argmin))
    })
}

/// `E^p ≤ ∫_0^τ ω_α^p(f, t/λ_n) dt / (2^{αp} ∫_0^τ sin^{αp}(t/2) dt)` for `αp ≥ 1`, `τ ≤ 3π/4`.
pub fn averaged_bound_flat(s: &Spectrum, n: usize, alpha: f64, tau: f64, grid: usize) -> Result<AveragedBound> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let ap = alpha * s.p();
    if ap < 1.0 {
        return Err(Error::Hypothesis("uniform bound requires αp ≥ 1".into()));
    }
    averaged(s, n, alpha, tau, grid, ProfileWeight::Unit, |ladder, kmax| {
        let i = jackson_integral_flat(ladder, n, ap / 2.0, tau, kmax, &QuadratureSettings::default())?;
        // Ĩ_n = 2^{αp/2} ∫ sin^{αp}(t/2); the scan value is used so non-arithmetic ladders stay exact
        Ok((2f64.powf(ap / 2.0), i.value, i.argmin))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformFormula {
    /// `((αp/2 + 1) / 2^{αp})^{1/p}` for `αp/2 ∈ ℕ`.
    IntegerHalfOrder,
    /// `(4/3)^{1/p} / 2^{α/2}` for `p ≥ 1`.
    FourThirds,
    /// `(4 - 2√2) / 2^{m/2}` for integer `α = m`, `p ≥ 1`.
    Classical,
    /// `(2^{1-αp/2} / (1 + 2^{αp/2-1}))^{1/p}` from the lower bound for `I_n(s)`, `s < 1`.
    HalfOrderBelowOne,
}

impl fmt::Display for UniformFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IntegerHalfOrder => "((ap/2+1)/2^(ap))^(1/p)",
            Self::FourThirds => "(4/3)^(1/p)/2^(a/2)",
            Self::Classical => "(4-2sqrt2)/2^(m/2)",
            Self::HalfOrderBelowOne => "(2^(1-ap/2)/(1+2^(ap/2-1)))^(1/p)",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBound {
    pub value: f64,
    pub formula: UniformFormula,
    /// Every applicable candidate, in the order tried.
    pub candidates: Vec<(UniformFormula, f64)>,
}

fn is_natural(x: f64) -> bool {
    x >= 1.0 && (x - x.round()).abs() < 1e-12
}

/// Smallest closed-form upper bound for `K_{n,α,p}(π)` that applies to `(α, p)`.
pub fn uniform_bound(alpha: f64, p: f64, classical_m: Option<u32>) -> Result<UniformBound> {
    if !(alpha > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidArgument("alpha and p must be positive".into()));
    }
    if classical_m == Some(0) {
        return Err(Error::InvalidArgument("classical order must be ≥ 1".into()));
    }
    let ap = alpha * p;
    let mut candidates = Vec::new();
    if is_natural(ap / 2.0) {
        candidates.push((
            UniformFormula::IntegerHalfOrder,
            ((ap / 2.0 + 1.0) / 2f64.powf(ap)).powf(1.0 / p),
        ));
    }
    if p >= 1.0 {
        candidates.push((UniformFormula::FourThirds, (4.0f64 / 3.0).powf(1.0 / p) / 2f64.powf(alpha / 2.0)));
        let m = classical_m
            .map(f64::from)
            .or_else(|| is_natural(alpha).then(|| alpha.round()));
        if let Some(m) = m {
            candidates.push((UniformFormula::Classical, (4.0 - 2.0 * 2f64.sqrt()) / 2f64.powf(m / 2.0)));
        }
    }
    if candidates.is_empty() {
        // I_n(s) ≥ 1 + 2^{s-1} for s < 1 and I_n(s) ≥ 2 for s ≥ 1
        let s = ap / 2.0;
        let lower_i = if s < 1.0 { 1.0 + 2f64.powf(s - 1.0) } else { 2.0 };
        candidates.push((
            UniformFormula::HalfOrderBelowOne,
            (1.0 / (2f64.powf(s - 1.0) * lower_i)).powf(1.0 / p),
        ));
    }
    let &(formula, value) = candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    Ok(UniformBound {
        value,
        formula,
        candidates,
    })
}

/// `f*(x) = γ + β e^{-iλ_n x} + δ e^{iλ_n x}` on the ladder `λ_k = k λ_n / n`.
pub fn extremal_spectrum(n: usize, lambda_n: f64, gamma: Complex64, beta: Complex64, delta: Complex64, p: f64) -> Result<Spectrum> {
    if n < 1 || !(lambda_n > 0.0) {
        return Err(Error::InvalidArgument("need n ≥ 1 and λ_n > 0".into()));
    }
    let ladder = ExponentLadder::new((1..=n).map(|k| k as f64 * lambda_n / n as f64).collect())?;
    let mut entries = vec![SpectrumEntry::new(0, 0.0, gamma)];
    let ni = n as i64;
    if beta.norm() > 0.0 {
        entries.push(SpectrumEntry::new(-ni, -lambda_n, beta));
    }
    if delta.norm() > 0.0 {
        entries.push(SpectrumEntry::new(ni, lambda_n, delta));
    }
    Spectrum::with_ladder(p, entries, ladder)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectMode {
    Pointwise,
    AveragedSin,
    AveragedFlat,
}

impl FromStr for DirectMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(Self::Pointwise),
            "averaged_sin" | "averaged-sin" => Ok(Self::AveragedSin),
            "averaged_flat" | "averaged-flat" => Ok(Self::AveragedFlat),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for DirectMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pointwise => "pointwise",
            Self::AveragedSin => "averaged_sin",
            Self::AveragedFlat => "averaged_flat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectGrids {
    /// Nodes of the modulus scan (pointwise) or profile (averaged modes).
    pub modulus: usize,
    /// Nodes of the `u` grid for the pointwise sharp constant.
    pub u_grid: usize,
}

impl Default for DirectGrids {
    fn default() -> Self {
        Self {
            modulus: DEFAULT_GRID,
            u_grid: 512,
        }
    }
}

/// Checks one direct estimate on `s`.
///
/// Pointwise mode tests `E ≤ C ω_φ(f, τ/λ_n)` with `C` read off the extremal
/// measure of the discretized problem; the averaged modes compare `p`-th powers.
pub fn verify_direct(
    s: &Spectrum,
    n: usize,
    phi: &StepWeight,
    tau: f64,
    mode: DirectMode,
    grids: DirectGrids,
) -> Result<InequalityReport> {
    let p = s.p();
    let lhs_pow = s.best_approximation_pow(n)?;
    let needs_alpha = || {
        phi.alpha_value()
            .ok_or_else(|| Error::InvalidArgument(format!("{mode} mode needs an alpha weight")))
    };
    match mode {
        DirectMode::Pointwise => {
            let lam_n = s.ladder().lambda(n)?;
            let lhs = lhs_pow.powf(1.0 / p);
            let modulus = generalized_modulus_detail(s, phi, tau / lam_n, grids.modulus)?;
            if lhs == 0.0 {
                return Ok(InequalityReport::new(0.0, modulus.value, None, "E <= C w(f, tau/l_n)", grids.modulus));
            }
            let kmax = s.max_index();
            let sharp = sharp_constant(s.ladder(), n, phi, p, tau, grids.u_grid, kmax)?;
            let c = constant_from_measure(s.ladder(), n, phi, p, &sharp.v_star, kmax)?;
            let rhs = c * modulus.value;
            let upper = modulus.upper_pow.map(|u| c * u.powf(1.0 / p));
            Ok(InequalityReport::new(lhs, rhs, upper, "E <= C w(f, tau/l_n)", grids.modulus).with_constant(c))
        }
        DirectMode::AveragedSin => {
            let alpha = needs_alpha()?;
            if lhs_pow == 0.0 {
                return Ok(InequalityReport::new(0.0, 0.0, None, "E^p <= int w^p sin / (2^(ap/2) I_n)", grids.modulus));
            }
            let b = averaged_bound_sin(s, n, alpha, grids.modulus)?;
            let c = 1.0 / (2f64.powf(alpha * p / 2.0) * b.denominator_integral);
            Ok(InequalityReport::new(b.lhs, b.rhs, b.rhs_upper, "E^p <= int w^p sin / (2^(ap/2) I_n)", grids.modulus)
                .with_constant(c))
        }
        DirectMode::AveragedFlat => {
            let alpha = needs_alpha()?;
            if alpha * p < 1.0 {
                return Err(Error::Hypothesis("uniform bound requires αp ≥ 1".into()));
            }
            if lhs_pow == 0.0 {
                return Ok(InequalityReport::new(0.0, 0.0, None, "E^p <= int w^p / (2^(ap/2) I~_n)", grids.modulus));
            }
            let b = averaged_bound_flat(s, n, alpha, tau, grids.modulus)?;
            let c = 1.0 / (2f64.powf(alpha * p / 2.0) * b.denominator_integral);
            Ok(InequalityReport::new(b.lhs, b.rhs, b.rhs_upper, "E^p <= int w^p / (2^(ap/2) I~_n)", grids.modulus)
                .with_constant(c))
        }
    }
}

/// Aggregate status of a batch of reports.
pub fn overall_status<'a>(reports: impl IntoIterator<Item = &'a InequalityReport>) -> Status {
    reports
        .into_iter()
        .fold(Status::NotApplicable, |acc, r| acc.combine(r.status))
}
