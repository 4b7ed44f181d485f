//! Majorants and finite-data diagnostics for the classes `BS^p H^ω_α`.
//!
//! Membership is an `O(·)` statement, which finite data cannot decide. Every
//! routine here returns a profile, its supremum and a trend statistic; a
//! profile is called bounded when the trend stays below [`TREND_LIMIT`].

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::smoothness::{generalized_modulus, StepWeight, DEFAULT_GRID};
use crate::spectrum::{ExponentLadder, Spectrum, SpectrumEntry};

/// Growth factor over a fourfold change of scale above which a profile counts as growing.
pub const TREND_LIMIT: f64 = 1.2;
/// Scale ratio used by the trend statistic.
pub const TREND_SPAN: f64 = 4.0;
pub const DEFAULT_DELTA_POINTS: usize = 24;
pub const DEFAULT_DELTA_MIN: f64 = 1e-3;

const VANISH_PROBE: f64 = 1e-6;
const VANISH_FRACTION: f64 = 1e-3;
const MONOTONE_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Majorant {
    /// `ω(δ) = δ^r`.
    Power { r: f64 },
    /// Piecewise linear through the nodes, constant outside them.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

impl Majorant {
    pub fn power(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidMajorant(format!("power exponent {r} must be positive")));
        }
        Ok(Majorant::Power { r })
    }

    /// Nodes must be sorted, distinct and inside `[0, 1]`.
    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::InvalidMajorant("need at least two (δ, ω) pairs".into()));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMajorant("non-finite sample".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes[0] < 0.0 || nodes[nodes.len() - 1] > 1.0 {
            return Err(Error::InvalidMajorant("nodes must increase strictly inside [0, 1]".into()));
        }
        Ok(Majorant::Tabulated { nodes, values })
    }

    /// Reads `δ,ω(δ)` rows; a non-numeric first row is a header.
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
                None => return Err(Error::Load(format!("line {}: expected delta,omega", line + 1))),
            }
        }
        Self::tabulated(ts, vs)
    }

    pub fn eval(&self, delta: f64) -> f64 {
        match self {
            Majorant::Power { r } => delta.max(0.0).powf(*r),
            Majorant::Tabulated { nodes, values } => {
                let last = nodes.len() - 1;
                if delta <= nodes[0] {
                    return values[0];
                }
                if delta >= nodes[last] {
                    return values[last];
                }
                let i = nodes.partition_point(|&t| t <= delta) - 1;
                let w = (delta - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// `ω(δ)^p`.
    pub fn eval_pow(&self, delta: f64, p: f64) -> f64 {
        match self {
            Majorant::Power { r } => delta.max(0.0).powf(r * p),
            _ => self.eval(delta).powf(p),
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            Majorant::Power { r } => Some(*r),
            _ => None,
        }
    }
}

impl fmt::Display for Majorant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Majorant::Power { r } => write!(f, "power:{r}"),
            Majorant::Tabulated { nodes, .. } => write!(f, "table[{} nodes]", nodes.len()),
        }
    }
}

impl std::str::FromStr for Majorant {
    type Err = Error;

    /// `power:<r>` or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("power", r)) => {
                let r: f64 = r
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidMajorant(format!("bad exponent {r:?}")))?;
                Majorant::power(r)
            }
            Some(("table", path)) => Majorant::from_table_file(Path::new(path)),
            _ => Err(Error::InvalidMajorant(format!(
                "expected power:<r> or table:<path>, got {s:?}"
            ))),
        }
    }
}

/// Conditions a majorant must meet; `validate_majorant` lists the broken ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MajorantViolation {
    NoVanishing { at_zero: f64, at_one: f64 },
    NotNondecreasing { at: f64 },
    NotPositive { at: f64 },
    NonFinite,
}

impl fmt::Display for MajorantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoVanishing { at_zero, at_one } => {
                write!(f, "ω(0+) ↛ 0 (ω(0+) = {at_zero}, ω(1) = {at_one})")
            }
            Self::NotNondecreasing { at } => write!(f, "not nondecreasing near δ = {at}"),
            Self::NotPositive { at } => write!(f, "not strictly positive at δ = {at}"),
            Self::NonFinite => f.write_str("non-finite value"),
        }
    }
}

/// Empty when `ω` is continuous, nondecreasing, positive on `(0, 1]` and vanishes at `0+`.
pub fn validate_majorant(omega: &Majorant) -> Vec<MajorantViolation> {
    let mut out = Vec::new();
    match omega {
        Majorant::Power { r } => {
            if !(*r > 0.0 && r.is_finite()) {
                out.push(MajorantViolation::NonFinite);
            }
        }
        Majorant::Tabulated { nodes, values } => {
            if values.iter().any(|v| !v.is_finite()) {
                out.push(MajorantViolation::NonFinite);
                return out;
            }
            let at_one = omega.eval(1.0);
            let at_zero = values[0];
            // the table is constant below its first node
            if !(at_zero <= VANISH_FRACTION * at_one) || nodes[0] > VANISH_PROBE && at_zero > 0.0 {
                out.push(MajorantViolation::NoVanishing { at_zero, at_one });
            }
            if let Some(w) = nodes.windows(2).zip(values.windows(2)).find(|(_, v)| v[1] < v[0]) {
                out.push(MajorantViolation::NotNondecreasing { at: w.0[1] });
            }
            if let Some((&t, _)) = nodes.iter().zip(values).find(|(&t, &v)| t > 0.0 && v <= 0.0) {
                out.push(MajorantViolation::NotPositive { at: t });
            } else if nodes[0] == 0.0 && values.len() > 1 && values[1] <= 0.0 {
                out.push(MajorantViolation::NotPositive { at: nodes[1] });
            }
        }
    }
    if out.is_empty() {
        // sample protocol over (0, 1]
        let mut prev: f64 = 0.0;
        for i in 1..=MONOTONE_SAMPLES {
            let d = i as f64 / MONOTONE_SAMPLES as f64;
            let v = omega.eval(d);
            if !(v > 0.0) {
                out.push(MajorantViolation::NotPositive { at: d });
                break;
            }
            if v < prev - 1e-12 * prev.abs() {
                out.push(MajorantViolation::NotNondecreasing { at: d });
                break;
            }
            prev = v;
        }
    }
    out
}

/// A ratio profile reduced to its supremum and growth trend.
#[derive(Debug, Clone, Serialize)]
pub struct RatioProfile {
    /// Scale parameter (`n` or `δ`) per point.
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// Ratio at the finest scale over the ratio at a scale `TREND_SPAN` times coarser.
    pub trend: f64,
    pub bounded: bool,
}

impl RatioProfile {
    /// `fine_last` says whether the finest scale sits at the end of the vectors.
    fn new(scales: Vec<f64>, ratios: Vec<f64>, fine_last: bool) -> Self {
        let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        let trend = trend(&scales, &ratios, fine_last);
        Self {
            scales,
            ratios,
            sup_ratio,
            trend,
            bounded: trend <= TREND_LIMIT,
        }
    }
}

fn trend(scales: &[f64], ratios: &[f64], fine_last: bool) -> f64 {
    if ratios.is_empty() {
        return 1.0;
    }
    let fine = if fine_last { ratios.len() - 1 } else { 0 };
    let target = if fine_last {
        scales[fine] / TREND_SPAN
    } else {
        scales[fine] * TREND_SPAN
    };
    // nearest scale to the target, compared on a log axis
    let coarse = (0..scales.len())
        .min_by(|&a, &b| {
            let da = (scales[a].ln() - target.ln()).abs();
            let db = (scales[b].ln() - target.ln()).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let (f, c) = (ratios[fine], ratios[coarse]);
    if c > 0.0 {
        f / c
    } else if f > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BariRatio {
    pub max_ratio: f64,
    pub profile: RatioProfile,
}

/// `Σ_{v≤n} λ_v^{s-1} ω^p(1/λ_v) / (λ_n^s ω^p(1/λ_n))` for `n` in `n_range`.
pub fn bari_ratio(
    omega: &Majorant,
    s: f64,
    ladder: &ExponentLadder,
    n_range: std::ops::RangeInclusive<usize>,
    p: f64,
) -> Result<BariRatio> {
    if !(s > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidArgument("need s > 0 and p > 0".into()));
    }
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 1 || hi < lo || hi > ladder.len() {
        return Err(Error::InvalidArgument(format!(
            "n range [{lo}, {hi}] outside ladder 1..={}",
            ladder.len()
        )));
    }
    let lam = ladder.as_slice();
    let mut partial = 0.0;
    let mut scales = Vec::with_capacity(hi - lo + 1);
    let mut ratios = Vec::with_capacity(hi - lo + 1);
    for n in 1..=hi {
        let l = lam[n - 1];
        let w = omega.eval_pow(1.0 / l, p);
        partial += l.powf(s - 1.0) * w;
        if n >= lo {
            let den = l.powf(s) * w;
            if !(den > 0.0) {
                return Err(Error::InvalidMajorant(format!("ω(1/λ_{n}) = 0")));
            }
            scales.push(n as f64);
            ratios.push(partial / den);
        }
    }
    let profile = RatioProfile::new(scales, ratios, true);
    Ok(BariRatio {
        max_ratio: profile.sup_ratio,
        profile,
    })
}

/// `E_{λ_n}(f)_p / ω(1/λ_n)` over `n_range` (all `n ≥ 1` up to the top index by default).
pub fn membership_by_best_approx(
    s: &Spectrum,
    omega: &Majorant,
    n_range: Option<std::ops::RangeInclusive<usize>>,
) -> Result<RatioProfile> {
    let top = s.max_index().max(1).min(s.ladder().len());
    let range = n_range.unwrap_or(1..=top);
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 1 || hi < lo || hi > s.ladder().len() {
        return Err(Error::InvalidArgument(format!(
            "n range [{lo}, {hi}] outside ladder 1..={}",
            s.ladder().len()
        )));
    }
    let tails = s.tail_profile_pow(hi);
    let mut scales = Vec::with_capacity(hi - lo + 1);
    let mut ratios = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let w = omega.eval(1.0 / s.ladder().lambda(n)?);
        if !(w > 0.0) {
            return Err(Error::InvalidMajorant(format!("ω(1/λ_{n}) = 0")));
        }
        scales.push(n as f64);
        ratios.push(tails[n - 1].powf(1.0 / s.p()) / w);
    }
    Ok(RatioProfile::new(scales, ratios, true))
}

/// `num` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, num: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || num < 1 {
        return Err(Error::InvalidArgument("need 0 < lo ≤ hi and at least one point".into()));
    }
    if num == 1 {
        return Ok(vec![hi]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..num)
        .map(|i| (a + (b - a) * i as f64 / (num - 1) as f64).exp())
        .collect())
}

pub fn default_delta_grid() -> Vec<f64> {
    log_grid(DEFAULT_DELTA_MIN, 1.0, DEFAULT_DELTA_POINTS).unwrap()
}

/// `ω_α(f, δ)_p / ω(δ)` over `deltas ⊂ (0, 1]`.
pub fn membership_by_modulus(s: &Spectrum, omega: &Majorant, alpha: f64, deltas: &[f64]) -> Result<RatioProfile> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::InvalidArgument("δ grid must be a nonempty subset of (0, 1]".into()));
    }
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    let phi = StepWeight::alpha(alpha)?;
    let ratios = deltas
        .par_iter()
        .map(|&d| {
            let w = omega.eval(d);
            if !(w > 0.0) {
                return Err(Error::InvalidMajorant(format!("ω({d}) = 0")));
            }
            Ok(generalized_modulus(s, &phi, d, DEFAULT_GRID)? / w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RatioProfile::new(deltas, ratios, false))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InClass,
    NotInClass,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::InClass => "in class",
            Verdict::NotInClass => "not in class",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderDiagnostic {
    pub r: f64,
    pub alpha: f64,
    pub p: f64,
    pub verdict: Verdict,
    pub best_approx: RatioProfile,
    pub modulus: RatioProfile,
    /// Both profiles tell the same bounded/growing story.
    pub consistent: bool,
    /// `r ≤ α/p`, the range where the two-sided characterization is stated.
    pub within_characterized_range: bool,
    pub max_gap: f64,
}

/// Runs both membership diagnostics with `ω(δ) = δ^r`.
///
/// The verdict follows the best-approximation profile. Exponents in
/// `(α/p, α]` are accepted and flagged through `within_characterized_range`.
pub fn classify_holder(
    s: &Spectrum,
    r: f64,
    alpha: f64,
    n_range: Option<std::ops::RangeInclusive<usize>>,
    deltas: Option<&[f64]>,
) -> Result<HolderDiagnostic> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("α = {alpha} must be positive")));
    }
    if !(r > 0.0 && r <= alpha) {
        return Err(Error::InvalidArgument(format!("r = {r} outside (0, α] = (0, {alpha}]")));
    }
    let max_gap = crate::inverse::max_gap(s)?;
    let omega = Majorant::power(r)?;
    let grid = deltas.map(<[f64]>::to_vec).unwrap_or_else(default_delta_grid);
    let best_approx = membership_by_best_approx(s, &omega, n_range)?;
    let modulus = membership_by_modulus(s, &omega, alpha, &grid)?;
    let verdict = if best_approx.bounded {
        Verdict::InClass
    } else {
        Verdict::NotInClass
    };
    Ok(HolderDiagnostic {
        r,
        alpha,
        p: s.p(),
        verdict,
        consistent: best_approx.bounded == modulus.bounded,
        within_characterized_range: r <= alpha / s.p() + 1e-15,
        best_approx,
        modulus,
        max_gap,
    })
}

/// Arithmetic spectrum on `1..=size` with `E_{λ_n}(f)_p = n^{-r}` exactly for `n ≤ size`.
pub fn power_tail_spectrum(size: usize, r: f64, p: f64) -> Result<Spectrum> {
    if size < 1 || !(r > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidArgument("need size ≥ 1, r > 0 and p ≥ 1".into()));
    }
    let rp = r * p;
    let mut entries = Vec::with_capacity(2 * size);
    for nu in 1..=size {
        let x = nu as f64;
        let h = if nu == size {
            x.powf(-rp)
        } else {
            x.powf(-rp) - (x + 1.0).powf(-rp)
        };
        let a = (h / 2.0).powf(1.0 / p);
        entries.push(SpectrumEntry::new(-(nu as i64), -x, Complex64::new(a, 0.0)));
        entries.push(SpectrumEntry::new(nu as i64, x, Complex64::new(a, 0.0)));
    }
    Spectrum::with_ladder(p, entries, ExponentLadder::arithmetic(size))
}
