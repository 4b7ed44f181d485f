//! Step weights `φ`, difference schemes and the generalized modulus of smoothness
//! `ω_φ(f, δ)_p = sup_{|h| ≤ δ} (Σ φ^p(λ_k h) |A_k|^p)^{1/p}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSettings};
use crate::spectrum::{lp_sum, pow_p, Spectrum};

pub const DEFAULT_GRID: usize = 4096;
pub const GOLDEN_WIDTH: f64 = 1e-10;
const SYMMETRY_SAMPLES: usize = 1001;
const SYMMETRY_TOL: f64 = 1e-12;
const PARALLEL_CHUNK: usize = 1024;
const CERTIFY_TOL: f64 = 1e-11;
const CERTIFY_BUDGET: usize = 200_000;
const SCAN_PER_OSCILLATION: f64 = 16.0;

/// Finite difference scheme `Δ_h^M f(x) = Σ_j μ_j f(x - jh)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceScheme {
    mu: Vec<Complex64>,
}

impl DifferenceScheme {
    pub fn new(mu: Vec<Complex64>) -> Result<Self> {
        if mu.is_empty() || mu.iter().all(|m| m.norm() == 0.0) {
            return Err(Error::InvalidScheme("all coefficients are zero".into()));
        }
        if mu.iter().any(|m| !m.re.is_finite() || !m.im.is_finite()) {
            return Err(Error::InvalidScheme("non-finite coefficient".into()));
        }
        let total: Complex64 = mu.iter().sum();
        if total.norm() > 1e-12 {
            return Err(Error::InvalidScheme(format!("coefficients sum to {total}, not 0")));
        }
        Ok(Self { mu })
    }

    pub fn real(mu: &[f64]) -> Result<Self> {
        Self::new(mu.iter().map(|&m| Complex64::new(m, 0.0)).collect())
    }

    /// `μ_j = (-1)^j C(m, j)`, the classical `m`-th difference.
    pub fn binomial(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidScheme("order must be ≥ 1".into()));
        }
        let mut c = 1.0;
        let mut mu = Vec::with_capacity(m as usize + 1);
        for j in 0..=m {
            mu.push(if j % 2 == 0 { c } else { -c });
            c = c * (m - j) as f64 / (j + 1) as f64;
        }
        Self::real(&mu)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn is_real(&self) -> bool {
        self.mu.iter().all(|m| m.im == 0.0)
    }

    /// `|Σ_j μ_j e^{-ijt}|`.
    pub fn symbol_abs(&self, t: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, m) in self.mu.iter().enumerate() {
            acc += m * Complex64::from_polar(1.0, -(j as f64) * t);
        }
        acc.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WeightKind {
    Alpha(f64),
    Scheme(DifferenceScheme),
    /// Piecewise-linear in `|t|`, constant beyond the last node.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

/// Modulus of continuity of `φ^p`: `|φ^p(x) - φ^p(y)| ≤ c |x - y|^e`, plus
/// `sup(-(φ^p)'')` when it is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowContinuity {
    pub c: f64,
    pub e: f64,
    pub concavity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepWeight {
    kind: WeightKind,
    even: bool,
    sup_bound: Option<f64>,
    /// Fraction of sampled points where a tabulated weight vanishes (excluding 0).
    zero_fraction: Option<f64>,
}

/// `φ_α(t) = 2^α |sin(t/2)|^α`.
pub fn phi_alpha(t: f64, alpha: f64) -> f64 {
    pow_p(2.0 * (0.5 * t).sin().abs(), alpha)
}

/// The weight `t ↦ |Σ μ_j e^{-ijt}|` of a scheme.
pub fn phi_from_scheme(m: &DifferenceScheme) -> StepWeight {
    StepWeight::from_scheme(m.clone())
}

impl StepWeight {
    pub fn alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidWeight(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            kind: WeightKind::Alpha(alpha),
            even: true,
            sup_bound: Some(2f64.powf(alpha)),
            zero_fraction: None,
        })
    }

    /// Complex coefficients may break the symmetry `φ(t) = φ(-t)`; such weights
    /// are flagged as not even and moduli then scan both signs of `h`.
    pub fn from_scheme(m: DifferenceScheme) -> Self {
        let sup = m.mu.iter().map(|c| c.norm()).sum();
        let mut w = Self {
            kind: WeightKind::Scheme(m),
            even: true,
            sup_bound: Some(sup),
            zero_fraction: None,
        };
        // φ_M is 2π-periodic, so one period of samples decides the symmetry
        w.even = check_weight(&w, std::f64::consts::PI).max_asymmetry <= SYMMETRY_TOL * (1.0 + sup);
        w
    }

    /// Tabulated weight from samples on `[-T, T]` (or `[0, T]`). Negative nodes
    /// must mirror the positive branch.
    pub fn tabulated(nodes: &[f64], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::InvalidWeight("need at least two (t, φ) pairs".into()));
        }
        if nodes.iter().chain(values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeight("non-finite sample".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidWeight(format!("negative value {v}")));
        }
        let mut pos: Vec<(f64, f64)> = nodes
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= 0.0)
            .map(|(&t, &v)| (t, v))
            .collect();
        pos.sort_by(|a, b| a.0.total_cmp(&b.0));
        pos.dedup_by(|a, b| a.0 == b.0);
        if pos.len() < 2 || pos[0].0 != 0.0 {
            return Err(Error::InvalidWeight("table must contain t = 0 and a positive node".into()));
        }
        if pos[0].1 != 0.0 {
            return Err(Error::InvalidWeight(format!("φ(0) = {} ≠ 0", pos[0].1)));
        }
        let (ts, vs): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
        let w = Self {
            kind: WeightKind::Tabulated {
                nodes: ts,
                values: vs.clone(),
            },
            even: true,
            sup_bound: vs.iter().cloned().reduce(f64::max),
            zero_fraction: None,
        };
        for (&t, &v) in nodes.iter().zip(values) {
            if t < 0.0 && (w.eval(-t) - v).abs() > 1e-9 {
                return Err(Error::InvalidWeight(format!("table is not even at t = {t}")));
            }
        }
        let span = *w.table_nodes().last().unwrap();
        let zeros = (1..=SYMMETRY_SAMPLES)
            .filter(|&i| w.eval(span * i as f64 / SYMMETRY_SAMPLES as f64) == 0.0)
            .count();
        Ok(Self {
            zero_fraction: Some(zeros as f64 / SYMMETRY_SAMPLES as f64),
            ..w
        })
    }

    /// Reads `t,φ(t)` rows; a non-numeric first row is treated as a header.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let (mut ts, mut vs) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Load(format!("line {}: {e}", line + 1)))?;
            let parsed: Option<(f64, f64)> = match (rec.get(0), rec.get(1)) {
                (Some(a), Some(b)) => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            match parsed {
                Some((t, v)) => {
                    ts.push(t);
                    vs.push(v);
                }
                None if line == 0 => continue,
                None => return Err(Error::Load(format!("line {}: expected t,phi", line + 1))),
            }
        }
        Self::tabulated(&ts, &vs)
    }

    fn table_nodes(&self) -> &[f64] {
        match &self.kind {
            WeightKind::Tabulated { nodes, .. } => nodes,
            _ => &[],
        }
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// `C(φ) = max_t φ(t)` when known.
    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn zero_fraction(&self) -> Option<f64> {
        self.zero_fraction
    }

    /// `max_t φ(t)`: exact for the power family and tables, sampled and refined over
    /// one period for schemes.
    pub fn max_value(&self) -> f64 {
        match &self.kind {
            WeightKind::Alpha(a) => 2f64.powf(*a),
            WeightKind::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
            WeightKind::Scheme(_) => {
                let n = 4096;
                let step = 2.0 * std::f64::consts::PI / n as f64;
                let (i, _) = (0..n)
                    .map(|i| (i, self.eval(i as f64 * step)))
                    .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                let c = i as f64 * step;
                golden_max(|t| self.eval(t), c - step, c + step, GOLDEN_WIDTH).1.max(self.eval(c))
            }
        }
    }

    /// `α` for the power family.
    pub fn alpha_value(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Alpha(a) => Some(a),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            WeightKind::Alpha(a) => phi_alpha(t, *a),
            WeightKind::Scheme(m) => m.symbol_abs(t),
            WeightKind::Tabulated { nodes, values } => {
                let x = t.abs();
                let last = nodes.len() - 1;
                if x >= nodes[last] {
                    return values[last];
                }
                let i = nodes.partition_point(|&n| n <= x) - 1;
                let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// `φ^p(t)`, zero where `φ` vanishes.
    pub fn eval_pow(&self, t: f64, p: f64) -> f64 {
        match self.kind {
            // 2^{αp} |sin(t/2)|^{αp} in one power
            WeightKind::Alpha(a) => pow_p(2.0 * (0.5 * t).sin().abs(), a * p),
            _ => pow_p(self.eval(t), p),
        }
    }

    /// Lipschitz constant of `φ` itself.
    fn lipschitz(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Alpha(a) if *a >= 1.0 => Some(a * 2f64.powf(a - 1.0)),
            WeightKind::Alpha(_) => None,
            WeightKind::Scheme(m) => Some(m.mu.iter().enumerate().map(|(j, c)| j as f64 * c.norm()).sum()),
            WeightKind::Tabulated { nodes, values } => Some(
                nodes
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
                    .fold(0.0, f64::max),
            ),
        }
    }

    /// Continuity modulus of `φ^p`, used to bound what a grid scan can miss.
    pub fn pow_continuity(&self, p: f64) -> Option<PowContinuity> {
        if let WeightKind::Alpha(a) = self.kind {
            let ap = a * p;
            return Some(if ap >= 1.0 {
                // -(2^s sin^s(x/2))'' = 2^s (s sin^s/4 - s(s-1) sin^{s-2} cos^2/4) ≤ 2^s s/4
                PowContinuity {
                    c: 2f64.powf(ap - 1.0) * ap,
                    e: 1.0,
                    concavity: Some(2f64.powf(ap) * ap / 4.0),
                }
            } else {
                // |sin x - sin y|^{αp} ≤ |x - y|^{αp}
                PowContinuity {
                    c: 1.0,
                    e: ap,
                    concavity: None,
                }
            });
        }
        let lip = self.lipschitz()?;
        let sup = self.sup_bound?;
        Some(if p >= 1.0 {
            PowContinuity {
                c: p * sup.powf(p - 1.0) * lip,
                e: 1.0,
                concavity: None,
            }
        } else {
            PowContinuity {
                c: lip.powf(p),
                e: p,
                concavity: None,
            }
        })
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StepWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::Alpha(a) => write!(f, "alpha:{a}"),
            WeightKind::Scheme(m) => {
                let parts: Vec<String> = m
                    .mu
                    .iter()
                    .map(|c| if c.im == 0.0 { c.re.to_string() } else { c.to_string() })
                    .collect();
                write!(f, "scheme:{}", parts.join(","))
            }
            WeightKind::Tabulated { nodes, .. } => write!(f, "table[{} nodes]", nodes.len()),
        }
    }
}

impl FromStr for StepWeight {
    type Err = Error;

    /// `alpha:<α>`, `scheme:<μ_0>,<μ_1>,...` (entries like `1`, `-2`, `0.5+1i`) or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidWeight(format!("expected kind:value, got {s:?}")))?;
        match kind {
            "alpha" => Self::alpha(
                rest.parse()
                    .map_err(|_| Error::InvalidWeight(format!("bad alpha {rest:?}")))?,
            ),
            "scheme" => {
                let mu = rest
                    .split(',')
                    .map(|c| {
                        Complex64::from_str(c.trim())
                            .map_err(|_| Error::InvalidScheme(format!("bad coefficient {c:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::from_scheme(DifferenceScheme::new(mu)?))
            }
            "table" => Self::from_table_file(Path::new(rest)),
            other => Err(Error::InvalidWeight(format!("unknown weight kind {other:?}"))),
        }
    }
}

/// Sampled check of `φ(0) = 0`, `φ ≥ 0` and evenness over `[-T, T]`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightCheck {
    pub at_zero: f64,
    pub min_value: f64,
    pub max_asymmetry: f64,
    pub zero_fraction: f64,
}

impl WeightCheck {
    pub fn ok(&self) -> bool {
        self.at_zero.abs() <= SYMMETRY_TOL && self.min_value >= 0.0 && self.max_asymmetry <= SYMMETRY_TOL
    }
}

pub fn check_weight(phi: &StepWeight, span: f64) -> WeightCheck {
    let half = SYMMETRY_SAMPLES / 2;
    let mut check = WeightCheck {
        at_zero: phi.eval(0.0),
        min_value: f64::INFINITY,
        max_asymmetry: 0.0,
        zero_fraction: 0.0,
    };
    let mut zeros = 0;
    for i in 1..=half {
        let t = span * i as f64 / half as f64;
        let (a, b) = (phi.eval(t), phi.eval(-t));
        check.min_value = check.min_value.min(a).min(b);
        check.max_asymmetry = check.max_asymmetry.max((a - b).abs());
        zeros += (a == 0.0) as usize + (b == 0.0) as usize;
    }
    check.zero_fraction = zeros as f64 / (2 * half) as f64;
    check
}

/// `h ↦ Σ_k φ^p(λ_k h) |A_k|^p` for a fixed spectrum, with `±k` merged when `φ` is even.
#[derive(Debug, Clone)]
pub struct PowerSum {
    terms: Vec<(f64, f64)>,
    phi: StepWeight,
    p: f64,
}

impl PowerSum {
    pub fn new(s: &Spectrum, phi: &StepWeight) -> Self {
        let p = s.p();
        let mut terms: Vec<(f64, f64)> = Vec::new();
        if phi.is_even() {
            let mut pairs: std::collections::BTreeMap<u64, (f64, f64)> = Default::default();
            for e in s.entries() {
                if e.k != 0 && e.coeff.norm() > 0.0 {
                    let slot = pairs.entry(e.k.unsigned_abs()).or_insert((e.lambda.abs(), 0.0));
                    slot.1 += pow_p(e.coeff.norm(), p);
                }
            }
            terms.extend(pairs.into_values());
        } else {
            for e in s.entries() {
                if e.k != 0 && e.coeff.norm() > 0.0 {
                    terms.push((e.lambda, pow_p(e.coeff.norm(), p)));
                }
            }
        }
        Self {
            terms,
            phi: phi.clone(),
            p,
        }
    }

    /// Same sum with every exponent multiplied by `c`, i.e. `h ↦ G(c h)`.
    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn eval(&self, h: f64) -> f64 {
        self.terms.iter().map(|&(l, w)| self.phi.eval_pow(l * h, self.p) * w).sum()
    }

    /// `max(G(h), G(-h))`, which is `G(h)` for even weights.
    pub fn eval_sym(&self, h: f64) -> f64 {
        if self.phi.is_even() {
            self.eval(h)
        } else {
            self.eval(h).max(self.eval(-h))
        }
    }

    /// Exact ordered sum at one `h`, for reported values.
    pub fn eval_sorted(&self, h: f64) -> f64 {
        lp_sum(self.terms.iter().map(|&(l, w)| self.phi.eval_pow(l * h, self.p) * w), 1.0)
    }

    pub fn max_lambda(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).fold(0.0, f64::max)
    }

    /// Upper bound on `sup_{[a, b]} G - max(G(a), G(b))` for any cell of width `spacing`.
    pub fn grid_gap(&self, spacing: f64) -> Option<f64> {
        let c = self.phi.pow_continuity(self.p)?;
        let lip: f64 = self
            .terms
            .iter()
            .map(|&(l, w)| w * c.c * (l.abs() * spacing / 2.0).powf(c.e))
            .sum();
        // G lies below its chord plus sup(-G'') w²/8
        let curv = c.concavity.map(|k| {
            let g2: f64 = self.terms.iter().map(|&(l, w)| w * l * l * k).sum();
            g2 * spacing * spacing / 8.0
        });
        Some(curv.map_or(lip, |q| q.min(lip)))
    }
}

/// `‖Δ_h^φ f‖_p = (Σ_k φ^p(λ_k h) |A_k|^p)^{1/p}`.
pub fn weighted_difference_norm(s: &Spectrum, phi: &StepWeight, h: f64) -> f64 {
    let p = s.p();
    let sum = lp_sum(
        s.entries()
            .iter()
            .map(|e| phi.eval_pow(e.lambda * h, p) * pow_p(e.coeff.norm(), p)),
        1.0,
    );
    sum.powf(1.0 / p)
}

/// Golden-section maximization of `g` on `[a, b]` down to `width`; returns the best point seen.
pub fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    let mut best = if gc >= gd { (c, gc) } else { (d, gd) };
    while b - a > width {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
            if gc > best.1 {
                best = (c, gc);
            }
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
            if gd > best.1 {
                best = (d, gd);
            }
        }
    }
    best
}

/// Parallel uniform scan of `g` over `n` nodes of `[0, δ]`; ties go to the smaller node.
fn scan_nodes(g: &(impl Fn(f64) -> f64 + Sync), delta: f64, n: usize) -> (usize, f64) {
    let step = delta / (n - 1) as f64;
    (0..n)
        .into_par_iter()
        .with_min_len(PARALLEL_CHUNK)
        .map(|i| (i, g(i as f64 * step)))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |x, y| {
                if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) {
                    y
                } else {
                    x
                }
            },
        )
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusEstimate {
    /// `ω_φ(f, δ)_p`, a lower bound of the true supremum.
    pub value: f64,
    /// Step `|h|` where the supremum was found.
    pub h_star: f64,
    /// `value^p` plus the largest amount a grid cell can hide, when `φ^p` has a known modulus.
    pub upper_pow: Option<f64>,
    pub grid: usize,
}

/// Grid scan of `h ↦ ‖Δ_h^φ f‖_p` on `[0, δ]` (both signs for odd weights) with
/// golden-section refinement around the best node. `grid` is a minimum; fast
/// spectra get more nodes.
pub fn generalized_modulus_detail(s: &Spectrum, phi: &StepWeight, delta: f64, grid: usize) -> Result<ModulusEstimate> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be ≥ 0, got {delta}")));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 nodes".into()));
    }
    let sum = PowerSum::new(s, phi);
    let p = s.p();
    if delta == 0.0 || sum.terms.is_empty() {
        return Ok(ModulusEstimate {
            value: 0.0,
            h_star: 0.0,
            upper_pow: Some(0.0),
            grid,
        });
    }
    // at least SCAN_PER_OSCILLATION nodes per period of the fastest term
    let oscillations = sum.max_lambda() * delta / (2.0 * std::f64::consts::PI);
    let grid = grid.max((SCAN_PER_OSCILLATION * oscillations).ceil() as usize + 1);
    let g = |h: f64| sum.eval_sym(h);
    let (i, gi) = scan_nodes(&g, delta, grid);
    let step = delta / (grid - 1) as f64;
    let lo = (i as f64 - 1.0).max(0.0) * step;
    let hi = ((i + 1) as f64 * step).min(delta);
    let (hr, gr) = golden_max(g, lo, hi, GOLDEN_WIDTH);
    let (h_star, _) = if gr > gi { (hr, gr) } else { (i as f64 * step, gi) };
    let best = sum.eval_sorted(h_star).max(if phi.is_even() { 0.0 } else { sum.eval_sorted(-h_star) });
    let upper_pow = certified_upper(&sum, delta, grid, best.max(gi).max(gr));
    Ok(ModulusEstimate {
        value: best.powf(1.0 / p),
        h_star,
        upper_pow,
        grid,
    })
}

/// Branch and bound over the scan cells: a cell `[a, b]` can hide at most
/// `max(g(a), g(b)) + gap(b - a)`; cells whose bound beats the incumbent are split.
fn certified_upper(sum: &PowerSum, delta: f64, grid: usize, incumbent: f64) -> Option<f64> {
    sum.grid_gap(1.0)?;
    let target = CERTIFY_TOL * (1.0 + incumbent);
    let step = delta / (grid - 1) as f64;
    let g = |h: f64| sum.eval_sym(h);
    let vals: Vec<f64> = (0..grid).into_par_iter().with_min_len(PARALLEL_CHUNK).map(|i| g(i as f64 * step)).collect();
    let mut best = incumbent.max(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
    let base_gap = sum.grid_gap(step)?;
    for i in 0..grid - 1 {
        if vals[i].max(vals[i + 1]) + base_gap > best + target {
            let b = if i + 2 == grid { delta } else { (i + 1) as f64 * step };
            stack.push((i as f64 * step, b, vals[i], vals[i + 1]));
        }
    }
    let mut budget = CERTIFY_BUDGET;
    let mut leftover = f64::NEG_INFINITY;
    while let Some((a, b, ga, gb)) = stack.pop() {
        let bound = ga.max(gb) + sum.grid_gap(b - a)?;
        if bound <= best + target {
            continue;
        }
        if budget == 0 || b - a < 1e-15 * (1.0 + delta) {
            leftover = leftover.max(bound);
            continue;
        }
        budget -= 1;
        let m = 0.5 * (a + b);
        let gm = g(m);
        best = best.max(gm);
        stack.push((a, m, ga, gm));
        stack.push((m, b, gm, gb));
    }
    Some(best.max(leftover) + target)
}

/// `ω_φ(f, δ)_p` with the default grid protocol.
pub fn generalized_modulus(s: &Spectrum, phi: &StepWeight, delta: f64, grid: usize) -> Result<f64> {
    generalized_modulus_detail(s, phi, delta, grid).map(|m| m.value)
}

/// `ω_M(f, δ)_p`, through the same code path with `φ = φ_M`.
pub fn scheme_modulus(s: &Spectrum, m: &DifferenceScheme, delta: f64, grid: usize) -> Result<f64> {
    generalized_modulus(s, &phi_from_scheme(m), delta, grid)
}

/// Weight against which a modulus profile is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileWeight {
    /// `sin t dt`
    Sin,
    /// `dt`
    Unit,
}

impl ProfileWeight {
    fn density(self, t: f64) -> f64 {
        match self {
            Self::Sin => t.sin(),
            Self::Unit => 1.0,
        }
    }

    fn antiderivative(self, t: f64) -> f64 {
        match self {
            Self::Sin => -t.cos(),
            Self::Unit => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Segment {
    /// The running maximum follows `g` itself.
    Rise { a: f64, b: f64 },
    /// `g` dipped below a previous peak; the running maximum stays at `level`.
    Flat { a: f64, b: f64, level: f64 },
}

/// The nondecreasing function `t ↦ ω_φ^p(f, t/λ_n)_p` on `[0, τ]`, stored as
/// alternating pieces where it equals `g(t) = Σ φ^p(λ_k t/λ_n)|A_k|^p` and
/// pieces where it is constant.
#[derive(Debug, Clone)]
pub struct ModulusProfile {
    sum: PowerSum,
    segments: Vec<Segment>,
    tau: f64,
    spacing: f64,
}

impl ModulusProfile {
    /// `scale` is `1/λ_n`. The grid takes at least 64 nodes per oscillation of the fastest term.
    pub fn new(s: &Spectrum, phi: &StepWeight, scale: f64, tau: f64, min_grid: usize) -> Result<Self> {
        if !(tau > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidArgument("profile needs tau > 0 and scale > 0".into()));
        }
        let sum = PowerSum::new(s, phi).scaled(scale);
        let oscillations = sum.max_lambda() * tau / (2.0 * std::f64::consts::PI);
        let nodes = min_grid.max((64.0 * oscillations).ceil() as usize).max(2);
        let step = tau / (nodes - 1) as f64;
        let g = |u: f64| sum.eval_sym(u);
        let vals: Vec<f64> = (0..nodes).into_par_iter().map(|i| g(i as f64 * step)).collect();
        let at = |i: usize| if i + 1 == nodes { tau } else { i as f64 * step };

        let mut segments = Vec::new();
        let mut start = 0.0;
        let mut level = vals[0];
        let mut rising = true;
        for i in 1..nodes {
            if rising {
                if vals[i] >= level {
                    level = vals[i];
                    continue;
                }
                let lo = at(i.saturating_sub(2)).max(start);
                let (mut up, mut gp) = golden_max(g, lo, at(i), GOLDEN_WIDTH);
                if vals[i - 1] > gp {
                    up = at(i - 1);
                    gp = vals[i - 1];
                }
                segments.push(Segment::Rise { a: start, b: up });
                start = up;
                level = gp;
                rising = false;
            } else if vals[i] >= level {
                let (mut a, mut b) = (at(i - 1), at(i));
                while b - a > GOLDEN_WIDTH {
                    let m = 0.5 * (a + b);
                    if g(m) >= level {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                segments.push(Segment::Flat { a: start, b, level });
                start = b;
                level = vals[i];
                rising = true;
            }
        }
        segments.push(if rising {
            Segment::Rise { a: start, b: tau }
        } else {
            Segment::Flat { a: start, b: tau, level }
        });
        segments.retain(|s| match *s {
            Segment::Rise { a, b } | Segment::Flat { a, b, .. } => b > a,
        });
        Ok(Self {
            sum,
            segments,
            tau,
            spacing: step,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `ω_φ^p(f, t/λ_n)_p` as resolved by the profile.
    pub fn value_pow(&self, t: f64) -> f64 {
        for seg in &self.segments {
            match *seg {
                Segment::Rise { a, b } if t >= a && t <= b => return self.sum.eval_sym(t),
                Segment::Flat { a, b, level } if t >= a && t <= b => return level,
                _ => {}
            }
        }
        match self.segments.last() {
            Some(Segment::Flat { level, .. }) => *level,
            _ => self.sum.eval_sym(t.min(self.tau)),
        }
    }

    /// `∫_0^τ ω_φ^p(f, t/λ_n) w(t) dt`.
    pub fn integral(&self, weight: ProfileWeight, q: &QuadratureSettings) -> Result<f64> {
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += match *seg {
                Segment::Rise { a, b } => integrate(|t| self.sum.eval_sym(t) * weight.density(t), a, b, q)?,
                Segment::Flat { a, b, level } => level * (weight.antiderivative(b) - weight.antiderivative(a)),
            };
        }
        Ok(acc)
    }

    /// Upper bound for the same integral, adding the grid gap over the whole range.
    pub fn integral_upper(&self, weight: ProfileWeight, q: &QuadratureSettings) -> Result<Option<f64>> {
        let Some(gap) = self.sum.grid_gap(self.spacing) else {
            return Ok(None);
        };
        let mass = weight.antiderivative(self.tau) - weight.antiderivative(0.0);
        // quadrature error is charged on top of the grid gap
        Ok(Some(self.integral(weight, q)? + gap * mass + 4.0 * q.abs_tol * self.segments.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{generate_spectrum, SpectrumEntry, SpectrumKind};
    use std::f64::consts::PI;

    fn pair(n: i64, a: Complex64, b: Complex64, p: f64) -> Spectrum {
        Spectrum::with_ladder(
            p,
            vec![
                SpectrumEntry::new(-n, -(n as f64), a),
                SpectrumEntry::new(n, n as f64, b),
            ],
            crate::spectrum::ExponentLadder::arithmetic(n as usize),
        )
        .unwrap()
    }

    #[test]
    fn phi_alpha_values() {
        assert!((phi_alpha(PI, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(phi_alpha(0.0, 0.7), 0.0);
        assert!((phi_alpha(PI / 2.0, 2.0) - 2.0).abs() < 1e-14);
        let t: f64 = 0.83;
        let alt = 2f64.powf(0.75) * (1.0 - t.cos()).powf(0.75);
        assert!((phi_alpha(t, 1.5) - alt).abs() < 1e-13);
    }

    #[test]
    fn scheme_weights() {
        let d1 = phi_from_scheme(&DifferenceScheme::real(&[1.0, -1.0]).unwrap());
        for i in 0..50 {
            let t = -3.0 + 0.13 * i as f64;
            assert!((d1.eval(t) - phi_alpha(t, 1.0)).abs() < 1e-13);
        }
        let d2 = phi_from_scheme(&DifferenceScheme::binomial(2).unwrap());
        assert!((d2.eval(PI) - 4.0).abs() < 1e-13);
        assert!(d2.eval(0.0) < 1e-15);
        assert_eq!(d2.sup_bound(), Some(4.0));
        assert!(DifferenceScheme::real(&[1.0, 1.0]).is_err());
        assert!(DifferenceScheme::real(&[0.0, 0.0]).is_err());
        assert!(check_weight(&d2, 10.0).ok());
    }

    #[test]
    fn complex_scheme_is_not_even() {
        let m = DifferenceScheme::new(vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, -1.0)]).unwrap();
        assert!(phi_from_scheme(&m).is_even());
        let m = DifferenceScheme::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, -1.0),
        ])
        .unwrap();
        let w = phi_from_scheme(&m);
        assert!(!w.is_even());
        assert!(!check_weight(&w, 3.0).ok());
    }

    #[test]
    fn weight_strings() {
        let w: StepWeight = "alpha:1.5".parse().unwrap();
        assert_eq!(w.alpha_value(), Some(1.5));
        let s: StepWeight = "scheme:1,-2,1".parse().unwrap();
        assert!((s.eval(PI) - 4.0).abs() < 1e-13);
        let c: StepWeight = "scheme:1,0+1i,-1-1i".parse().unwrap();
        assert!(!c.is_even());
        assert!("alpha:-1".parse::<StepWeight>().is_err());
        assert!("beta:1".parse::<StepWeight>().is_err());
        assert!("scheme:1,1".parse::<StepWeight>().is_err());
    }

    #[test]
    fn tabulated_weights() {
        let ts = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let vs = [2.0, 1.0, 0.0, 1.0, 2.0];
        let w = StepWeight::tabulated(&ts, &vs).unwrap();
        assert!((w.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((w.eval(-1.5) - 1.5).abs() < 1e-15);
        assert_eq!(w.eval(7.0), 2.0);
        assert_eq!(w.zero_fraction(), Some(0.0));
        assert!(StepWeight::tabulated(&[0.0, 1.0], &[0.1, 1.0]).is_err());
        assert!(StepWeight::tabulated(&[-1.0, 0.0, 1.0], &[2.0, 0.0, 1.0]).is_err());
        assert!(StepWeight::tabulated(&[0.0, 1.0], &[0.0, -1.0]).is_err());
        let dir = std::env::temp_dir().join(format!("apxbsp-table-{}.csv", std::process::id()));
        std::fs::write(&dir, "t,phi\n0,0\n1,1\n2,2\n").unwrap();
        let f = StepWeight::from_table_file(&dir).unwrap();
        assert!((f.eval(1.5) - 1.5).abs() < 1e-15);
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn difference_norms() {
        let only0 = Spectrum::new(2.0, vec![SpectrumEntry::real(0, 0.0, 3.0)]).unwrap();
        let w = StepWeight::alpha(1.0).unwrap();
        assert_eq!(weighted_difference_norm(&only0, &w, 0.4), 0.0);
        let s = pair(3, Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), 2.0);
        assert_eq!(weighted_difference_norm(&s, &w, 0.0), 0.0);
        for alpha in [0.5, 1.0, 2.5] {
            let w = StepWeight::alpha(alpha).unwrap();
            let h: f64 = 0.37;
            let want = 2f64.powf(alpha / 2.0) * (1.0 - (3.0 * h).cos()).powf(alpha / 2.0) * 5f64.sqrt();
            assert!((weighted_difference_norm(&s, &w, h) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn modulus_examples() {
        let w = StepWeight::alpha(1.0).unwrap();
        let s = pair(4, Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), 2.0);
        assert_eq!(generalized_modulus(&s, &w, 0.0, DEFAULT_GRID).unwrap(), 0.0);
        let m = generalized_modulus(&s, &w, PI / 4.0, DEFAULT_GRID).unwrap();
        assert!((m - 2.0 * 5f64.sqrt()).abs() < 1e-12);
        assert!(generalized_modulus(&s, &w, -1.0, DEFAULT_GRID).is_err());
        assert!(generalized_modulus(&s, &w, 1.0, 1).is_err());
    }

    #[test]
    fn modulus_matches_dense_scan() {
        let s = Spectrum::new(
            2.0,
            vec![
                SpectrumEntry::real(-4, -4.0, 0.3),
                SpectrumEntry::real(-3, -3.0, -0.8),
                SpectrumEntry::real(-2, -2.0, 0.5),
                SpectrumEntry::real(-1, -1.0, 1.1),
                SpectrumEntry::real(0, 0.0, 0.7),
                SpectrumEntry::real(1, 1.0, -0.4),
                SpectrumEntry::real(2, 2.0, 0.9),
                SpectrumEntry::real(3, 3.0, 0.2),
                SpectrumEntry::real(4, 4.0, -1.3),
            ],
        )
        .unwrap();
        let w = StepWeight::alpha(1.0).unwrap();
        let delta = 0.7;
        let brute = (0..=1_000_000)
            .map(|i| weighted_difference_norm(&s, &w, delta * i as f64 / 1e6))
            .fold(0.0, f64::max);
        let m = generalized_modulus(&s, &w, delta, DEFAULT_GRID).unwrap();
        assert!((m - brute).abs() < 1e-6);
        assert!(m >= brute - 1e-12);
        let d = generalized_modulus_detail(&s, &w, delta, 256).unwrap();
        let up = d.upper_pow.unwrap();
        assert!(up >= brute * brute);
        assert!(up - d.value * d.value < 1e-9);
    }

    #[test]
    fn scheme_modulus_agrees_with_power_family() {
        for seed in 0..50 {
            let s = generate_spectrum(SpectrumKind::Perturbed, 5, 1.0, seed).unwrap();
            for m in 1..=2 {
                let a = scheme_modulus(&s, &DifferenceScheme::binomial(m).unwrap(), 0.9, 512).unwrap();
                let b = generalized_modulus(&s, &StepWeight::alpha(m as f64).unwrap(), 0.9, 512).unwrap();
                assert!((a - b).abs() < 1e-12 * (1.0 + b), "seed {seed} m {m}: {a} {b}");
            }
        }
    }

    #[test]
    fn odd_scheme_scans_both_signs() {
        let m = DifferenceScheme::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, -1.0),
        ])
        .unwrap();
        let w = phi_from_scheme(&m);
        let s = pair(1, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 2.0);
        let delta = 1.0;
        let brute = (-20_000..=20_000)
            .map(|i| weighted_difference_norm(&s, &w, delta * i as f64 / 20_000.0))
            .fold(0.0, f64::max);
        let got = generalized_modulus(&s, &w, delta, DEFAULT_GRID).unwrap();
        assert!((got - brute).abs() < 1e-8);
    }

    #[test]
    fn profile_of_single_pair_is_one_rise() {
        let s = pair(5, Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), 2.0);
        let w = StepWeight::alpha(1.0).unwrap();
        let prof = ModulusProfile::new(&s, &w, 0.2, PI, 1024).unwrap();
        assert_eq!(prof.segments().len(), 1);
        let q = QuadratureSettings::default();
        // 2 (1 - cos t) · 5 integrated against sin t over [0, π]
        let v = prof.integral(ProfileWeight::Sin, &q).unwrap();
        assert!((v - 20.0).abs() < 1e-9);
        let up = prof.integral_upper(ProfileWeight::Sin, &q).unwrap().unwrap();
        assert!(up >= v);
    }

    #[test]
    fn profile_tracks_running_max() {
        let s = generate_spectrum(SpectrumKind::Lacunary, 5, 0.5, 3).unwrap();
        let w = StepWeight::alpha(1.0).unwrap();
        let lam_n = s.ladder().lambda(2).unwrap();
        let prof = ModulusProfile::new(&s, &w, 1.0 / lam_n, PI, 4096).unwrap();
        assert!(prof.segments().iter().any(|s| matches!(s, Segment::Flat { .. })));
        for t in [0.3, 1.0, 2.2, 3.0] {
            let direct = generalized_modulus(&s, &w, t / lam_n, 8192).unwrap().powi(2);
            assert!((prof.value_pow(t) - direct).abs() < 1e-6 * (1.0 + direct), "t={t}");
        }
        let q = QuadratureSettings::default();
        let brute: f64 = {
            let m = 20_000;
            let h = PI / m as f64;
            (0..m).map(|i| prof.value_pow((i as f64 + 0.5) * h) * ((i as f64 + 0.5) * h).sin() * h).sum()
        };
        let v = prof.integral(ProfileWeight::Sin, &q).unwrap();
        assert!((v - brute).abs() < 1e-5 * (1.0 + v));
    }
}
