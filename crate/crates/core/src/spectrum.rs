//! Finitely supported symmetric spectra.
//!
//! A function is stored by its Fourier data: a sparse, index-sorted list of
//! `(k, λ_k, A_k)` together with the exponent ladder `λ_1 < λ_2 < ... < λ_L`
//! of the ambient exponent sequence. Absent indices carry a zero coefficient.
//! The ladder is what lets index `n` be mapped to the exponent `λ_n` even when
//! the coefficient at `n` is zero.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LAMBDA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub k: i64,
    pub lambda: f64,
    pub coeff: Complex64,
}

impl SpectrumEntry {
    pub fn new(k: i64, lambda: f64, coeff: Complex64) -> Self {
        Self { k, lambda, coeff }
    }

    pub fn real(k: i64, lambda: f64, re: f64) -> Self {
        Self::new(k, lambda, Complex64::new(re, 0.0))
    }
}

/// Positive exponents `λ_1 < ... < λ_L`; `λ_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentLadder(Vec<f64>);

impl ExponentLadder {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("exponent ladder is empty".into()));
        }
        let mut prev = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= prev {
                return Err(Error::InvalidArgument(format!(
                    "ladder not strictly increasing and positive at index {}",
                    i + 1
                )));
            }
            prev = v;
        }
        Ok(Self(values))
    }

    /// `λ_k = k` for `k = 1..=len`.
    pub fn arithmetic(len: usize) -> Self {
        Self((1..=len).map(|k| k as f64).collect())
    }

    /// `λ_k = 2^{k-1}` for `k = 1..=len`.
    pub fn lacunary(len: usize) -> Result<Self> {
        Self::new((0..len).map(|k| 2f64.powi(k as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `λ_k` for `k ≥ 0` (with `λ_0 = 0`).
    pub fn get(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(0.0)
        } else {
            self.0.get(k - 1).copied()
        }
    }

    pub fn lambda(&self, k: usize) -> Result<f64> {
        self.get(k).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "index {k} beyond exponent ladder of length {}",
                self.len()
            ))
        })
    }
}

/// One violated invariant found by [`validate_spectrum`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Exponent(f64),
    NonFinite(i64),
    DuplicateIndex(i64),
    ZeroExponent(f64),
    Asymmetric(i64),
    NonPositive(i64),
    NotMonotone(i64),
    Degenerate(i64),
    MissingExponent(i64),
    LadderMismatch(i64),
    InvalidLadder(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Exponent(p) => write!(f, "p = {p} outside [1, inf)"),
            Violation::NonFinite(k) => write!(f, "non-finite data at index {k}"),
            Violation::DuplicateIndex(k) => write!(f, "duplicate index {k}"),
            Violation::ZeroExponent(l) => write!(f, "lambda(0) = {l} ≠ 0"),
            Violation::Asymmetric(k) => write!(f, "lambda(-{k}) ≠ -lambda({k})"),
            Violation::NonPositive(k) => write!(f, "lambda({k}) ≤ 0"),
            Violation::NotMonotone(k) => write!(f, "lambda({}) ≤ lambda({k})", k + 1),
            Violation::Degenerate(k) => write!(f, "|A_{k}|+|A_{{-{k}}}| = 0"),
            Violation::MissingExponent(k) => {
                write!(f, "exponent for index {k} unknown (supply a ladder)")
            }
            Violation::LadderMismatch(k) => write!(f, "lambda({k}) disagrees with the ladder"),
            Violation::InvalidLadder(msg) => write!(f, "invalid ladder: {msg}"),
        }
    }
}

fn same_lambda(a: f64, b: f64) -> bool {
    (a - b).abs() <= LAMBDA_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks every spectrum invariant and returns the violations (empty when valid).
pub fn validate_spectrum(
    p: f64,
    entries: &[SpectrumEntry],
    ladder: Option<&[f64]>,
) -> Vec<Violation> {
    inspect(p, entries, ladder).0
}

fn inspect(
    p: f64,
    entries: &[SpectrumEntry],
    ladder: Option<&[f64]>,
) -> (Vec<Violation>, Vec<f64>) {
    let mut out = Vec::new();
    if !(p.is_finite() && p >= 1.0) {
        out.push(Violation::Exponent(p));
    }
    let mut sorted: Vec<SpectrumEntry> = entries.to_vec();
    sorted.sort_by_key(|e| e.k);
    for w in sorted.windows(2) {
        if w[0].k == w[1].k {
            out.push(Violation::DuplicateIndex(w[0].k));
        }
    }
    for e in &sorted {
        if !(e.lambda.is_finite() && e.coeff.re.is_finite() && e.coeff.im.is_finite()) {
            out.push(Violation::NonFinite(e.k));
        }
    }
    if let Some(z) = sorted.iter().find(|e| e.k == 0) {
        if z.lambda != 0.0 {
            out.push(Violation::ZeroExponent(z.lambda));
        }
    }

    let max_k = sorted.iter().map(|e| e.k.unsigned_abs()).max().unwrap_or(0) as usize;
    // exponent implied by the entries for each positive index
    let mut implied: Vec<Option<f64>> = vec![None; max_k + 1];
    for m in 1..=max_k as i64 {
        let pos = sorted.iter().find(|e| e.k == m);
        let neg = sorted.iter().find(|e| e.k == -m);
        if let (Some(a), Some(b)) = (pos, neg) {
            if !same_lambda(b.lambda, -a.lambda) {
                out.push(Violation::Asymmetric(m));
            }
        }
        let lam = pos.map(|e| e.lambda).or(neg.map(|e| -e.lambda));
        if let Some(l) = lam {
            if l <= 0.0 {
                out.push(Violation::NonPositive(m));
            }
        }
        implied[m as usize] = lam;
        if pos.is_some() || neg.is_some() {
            let mass = pos.map_or(0.0, |e| e.coeff.norm()) + neg.map_or(0.0, |e| e.coeff.norm());
            if mass <= 0.0 {
                out.push(Violation::Degenerate(m));
            }
        }
    }

    let resolved: Vec<f64> = match ladder {
        Some(lad) => {
            let mut prev = 0.0;
            for (i, &v) in lad.iter().enumerate() {
                if !v.is_finite() || v <= prev {
                    out.push(Violation::InvalidLadder(format!(
                        "not strictly increasing and positive at index {}",
                        i + 1
                    )));
                    break;
                }
                prev = v;
            }
            for m in 1..=max_k {
                match (implied[m], lad.get(m - 1)) {
                    (_, None) => out.push(Violation::MissingExponent(m as i64)),
                    (Some(l), Some(&v)) if !same_lambda(l, v) => {
                        out.push(Violation::LadderMismatch(m as i64))
                    }
                    _ => {}
                }
            }
            lad.to_vec()
        }
        None => {
            let mut lad = Vec::with_capacity(max_k);
            for m in 1..=max_k {
                match implied[m] {
                    Some(l) => lad.push(l),
                    None => {
                        out.push(Violation::MissingExponent(m as i64));
                        lad.push(f64::NAN);
                    }
                }
            }
            for m in 1..lad.len() {
                if lad[m - 1].is_finite() && lad[m].is_finite() && lad[m] <= lad[m - 1] {
                    out.push(Violation::NotMonotone(m as i64));
                }
            }
            lad
        }
    };
    (out, resolved)
}

/// A finitely supported symmetric spectrum together with its ambient `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    p: f64,
    entries: Vec<SpectrumEntry>,
    ladder: ExponentLadder,
}

fn report_err(v: Vec<Violation>) -> Error {
    Error::InvalidSpectrum(
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("; "),
    )
}

impl Spectrum {
    /// Builds a spectrum whose ladder is inferred from the entries; every
    /// index between 1 and the largest `|k|` must then be present.
    pub fn new(p: f64, entries: Vec<SpectrumEntry>) -> Result<Self> {
        Self::build(p, entries, None)
    }

    /// Builds a sparse spectrum over an explicit exponent ladder.
    pub fn with_ladder(p: f64, entries: Vec<SpectrumEntry>, ladder: ExponentLadder) -> Result<Self> {
        Self::build(p, entries, Some(ladder.0))
    }

    fn build(p: f64, mut entries: Vec<SpectrumEntry>, ladder: Option<Vec<f64>>) -> Result<Self> {
        let (violations, resolved) = inspect(p, &entries, ladder.as_deref());
        if !violations.is_empty() {
            return Err(report_err(violations));
        }
        entries.sort_by_key(|e| e.k);
        Ok(Self {
            p,
            entries,
            ladder: ExponentLadder(resolved),
        })
    }

    /// The empty spectrum (the zero function) over a given ladder.
    pub fn zero(p: f64, ladder: ExponentLadder) -> Result<Self> {
        Self::with_ladder(p, Vec::new(), ladder)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn ladder(&self) -> &ExponentLadder {
        &self.ladder
    }

    /// Same spectrum read in another `BS^p` space.
    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(report_err(vec![Violation::Exponent(p)]));
        }
        self.p = p;
        Ok(self)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_spectrum(self.p, &self.entries, Some(self.ladder.as_slice()))
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.entries
            .binary_search_by_key(&k, |e| e.k)
            .map(|i| self.entries[i].coeff)
            .unwrap_or_default()
    }

    /// Largest index with a nonzero coefficient (0 for a constant or empty spectrum).
    pub fn max_index(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.coeff.norm() > 0.0)
            .map(|e| e.k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `(Σ_k |A_k|^p)^{1/p}`.
    pub fn lp_norm(&self) -> f64 {
        lp_sum(self.entries.iter().map(|e| e.coeff.norm()), self.p).powf(1.0 / self.p)
    }

    /// `Σ_k A_k e^{iλ_k x}`.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.entries
            .iter()
            .map(|e| e.coeff * Complex64::from_polar(1.0, e.lambda * x))
            .sum()
    }

    /// `E_{λ_n}(f)_p = (Σ_{|k| ≥ n} |A_k|^p)^{1/p}`.
    pub fn best_approximation(&self, n: usize) -> Result<f64> {
        Ok(self.best_approximation_pow(n)?.powf(1.0 / self.p))
    }

    /// `E_{λ_n}(f)_p^p`.
    pub fn best_approximation_pow(&self, n: usize) -> Result<f64> {
        if n < 1 {
            return Err(Error::InvalidArgument("best approximation needs n ≥ 1".into()));
        }
        let n = n as u64;
        Ok(lp_sum(
            self.entries
                .iter()
                .filter(|e| e.k.unsigned_abs() >= n)
                .map(|e| e.coeff.norm()),
            self.p,
        ))
    }

    /// `E^p_{λ_ν}` for `ν = 1..=n`, computed as suffix sums of pair energies.
    pub fn tail_profile_pow(&self, n: usize) -> Vec<f64> {
        let top = self.max_index().max(n);
        let mut tails = vec![0.0; top + 2];
        for nu in (1..=top).rev() {
            tails[nu] = tails[nu + 1] + self.pair_energy(nu);
        }
        tails[1..=n].to_vec()
    }

    /// `H_ν^p(f) = |A_{-ν}|^p + |A_ν|^p`.
    pub fn pair_energy(&self, nu: usize) -> f64 {
        let nu = nu as i64;
        pow_p(self.coefficient(nu).norm(), self.p) + pow_p(self.coefficient(-nu).norm(), self.p)
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: Complex64) -> Spectrum {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.coeff *= c;
        }
        out.entries.retain(|e| e.coeff.norm() > 0.0 || e.k == 0);
        out
    }

    /// Coefficientwise `self - other`; both must share `p` and exponents.
    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        self.combine(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.combine(other, |a, b| a + b)
    }

    fn combine(&self, other: &Spectrum, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Spectrum> {
        if self.p != other.p {
            return Err(Error::MixedExponent(self.p, other.p));
        }
        let (long, short) = if self.ladder.len() >= other.ladder.len() {
            (&self.ladder, &other.ladder)
        } else {
            (&other.ladder, &self.ladder)
        };
        for (a, b) in long.as_slice().iter().zip(short.as_slice()) {
            if !same_lambda(*a, *b) {
                return Err(Error::InvalidArgument(
                    "spectra are built on different exponent ladders".into(),
                ));
            }
        }
        let mut ks: Vec<i64> = self
            .entries
            .iter()
            .chain(other.entries.iter())
            .map(|e| e.k)
            .collect();
        ks.sort_unstable();
        ks.dedup();
        let mut entries = Vec::with_capacity(ks.len());
        for k in ks {
            let c = op(self.coefficient(k), other.coefficient(k));
            if c.norm() == 0.0 && k != 0 {
                continue;
            }
            let lam = if k == 0 {
                0.0
            } else {
                long.lambda(k.unsigned_abs() as usize)? * k.signum() as f64
            };
            entries.push(SpectrumEntry::new(k, lam, c));
        }
        prune_degenerate(&mut entries);
        Spectrum::with_ladder(self.p, entries, long.clone())
    }

    pub fn from_json_str(s: &str) -> Result<Spectrum> {
        let file: SpectrumFile =
            serde_json::from_str(s).map_err(|e| Error::Load(format!("line {}: {e}", e.line())))?;
        file.into_spectrum()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SpectrumFile::from(self)).expect("spectrum serializes")
    }

    /// Reads the CSV form (`k,lambda,re,im` header); `p` is supplied separately.
    pub fn from_csv_reader<R: Read>(reader: R, p: f64) -> Result<Spectrum> {
        Spectrum::new(p, read_csv_entries(reader)?)
    }
}

fn read_csv_entries<R: Read>(reader: R) -> Result<Vec<SpectrumEntry>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut entries = Vec::new();
    for (i, rec) in rdr.deserialize::<EntryRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Load(format!("csv line {}: {e}", i + 2)))?;
        entries.push(rec.into());
    }
    Ok(entries)
}

/// Violations in a JSON spectrum document; only syntax problems are errors.
pub fn validate_json_str(s: &str) -> Result<Vec<Violation>> {
    let file: SpectrumFile =
        serde_json::from_str(s).map_err(|e| Error::Load(format!("line {}: {e}", e.line())))?;
    let entries: Vec<SpectrumEntry> = file.entries.into_iter().map(Into::into).collect();
    Ok(validate_spectrum(file.p, &entries, file.ladder.as_deref()))
}

/// Violations in a CSV spectrum read with exponent `p`.
pub fn validate_csv_reader<R: Read>(reader: R, p: f64) -> Result<Vec<Violation>> {
    Ok(validate_spectrum(p, &read_csv_entries(reader)?, None))
}

/// Drops `±k` pairs whose coefficients both vanished.
fn prune_degenerate(entries: &mut Vec<SpectrumEntry>) {
    let dead: Vec<i64> = entries
        .iter()
        .filter(|e| e.k > 0)
        .map(|e| e.k)
        .chain(entries.iter().filter(|e| e.k < 0).map(|e| -e.k))
        .filter(|&m| {
            entries
                .iter()
                .filter(|e| e.k == m || e.k == -m)
                .all(|e| e.coeff.norm() == 0.0)
        })
        .collect();
    entries.retain(|e| !dead.contains(&e.k.abs()) || e.k == 0);
}

/// `x^p` with `0^p = 0`; integer `p` avoids the `exp`/`ln` round trip.
#[inline]
pub fn pow_p(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else if p.fract() == 0.0 && p <= 64.0 {
        x.powi(p as i32)
    } else {
        (p * x.ln()).exp()
    }
}

/// `Σ x_i^p` summed in ascending order of magnitude.
pub fn lp_sum(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    let mut powers: Vec<f64> = values.map(|x| pow_p(x, p)).collect();
    powers.sort_by(|a, b| a.total_cmp(b));
    powers.iter().sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryRecord {
    k: i64,
    lambda: f64,
    re: f64,
    im: f64,
}

impl From<EntryRecord> for SpectrumEntry {
    fn from(r: EntryRecord) -> Self {
        SpectrumEntry::new(r.k, r.lambda, Complex64::new(r.re, r.im))
    }
}

/// On-disk JSON layout. `ladder` is optional and only needed for sparse spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectrumFile {
    p: f64,
    entries: Vec<EntryRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ladder: Option<Vec<f64>>,
}

impl SpectrumFile {
    fn into_spectrum(self) -> Result<Spectrum> {
        let entries: Vec<SpectrumEntry> = self.entries.into_iter().map(Into::into).collect();
        match self.ladder {
            Some(l) => Spectrum::build(self.p, entries, Some(l)),
            None => Spectrum::new(self.p, entries),
        }
    }
}

impl From<&Spectrum> for SpectrumFile {
    fn from(s: &Spectrum) -> Self {
        let max_k = s.entries.iter().map(|e| e.k.unsigned_abs()).max().unwrap_or(0) as usize;
        let contiguous = (1..=max_k).all(|m| {
            s.entries
                .iter()
                .any(|e| e.k.unsigned_abs() as usize == m)
        });
        SpectrumFile {
            p: s.p,
            entries: s
                .entries
                .iter()
                .map(|e| EntryRecord {
                    k: e.k,
                    lambda: e.lambda,
                    re: e.coeff.re,
                    im: e.coeff.im,
                })
                .collect(),
            ladder: if contiguous && s.ladder.len() == max_k {
                None
            } else {
                Some(s.ladder.as_slice().to_vec())
            },
        }
    }
}

/// Anything that can be sampled on the real line.
pub trait Evaluable {
    fn eval_at(&self, x: f64) -> Complex64;
}

impl Evaluable for Spectrum {
    fn eval_at(&self, x: f64) -> Complex64 {
        self.evaluate(x)
    }
}

impl<F: Fn(f64) -> Complex64> Evaluable for F {
    fn eval_at(&self, x: f64) -> Complex64 {
        self(x)
    }
}

/// Composite-Simpson estimate of `(1/T) ∫_0^T f(x) e^{-iλx} dx`.
pub fn estimate_coefficient<F: Evaluable + ?Sized>(f: &F, lambda: f64, period: f64, steps: usize) -> Result<Complex64> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument("averaging length T must be positive".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument("need at least 2 quadrature steps".into()));
    }
    let steps = steps + steps % 2;
    let h = period / steps as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=steps {
        let x = i as f64 * h;
        let w = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += f.eval_at(x) * Complex64::from_polar(1.0, -lambda * x) * w;
    }
    Ok(acc * (h / 3.0) / period)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Arithmetic,
    Lacunary,
    Perturbed,
}

impl std::str::FromStr for SpectrumKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(Self::Arithmetic),
            "lacunary" => Ok(Self::Lacunary),
            "perturbed" => Ok(Self::Perturbed),
            other => Err(Error::InvalidArgument(format!("unknown spectrum kind {other:?}"))),
        }
    }
}

impl fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Arithmetic => "arithmetic",
            Self::Lacunary => "lacunary",
            Self::Perturbed => "perturbed",
        })
    }
}

/// Exponent ladder of the given kind, drawn from `rng` when perturbed.
pub fn generate_ladder(kind: SpectrumKind, size: usize, rng: &mut ChaCha8Rng) -> Result<ExponentLadder> {
    let values: Vec<f64> = match kind {
        SpectrumKind::Arithmetic => (1..=size).map(|k| k as f64).collect(),
        SpectrumKind::Lacunary => (0..size).map(|k| 2f64.powi(k as i32)).collect(),
        SpectrumKind::Perturbed => (1..=size)
            .map(|k| k as f64 + rng.gen_range(-0.4..0.4))
            .collect(),
    };
    ExponentLadder::new(values)
}

/// Deterministic test spectrum with `|A_{±k}| = λ_k^{-decay}` and seeded phases.
///
/// The generated spectrum lives in `BS^2`; use [`Spectrum::with_p`] to move it.
pub fn generate_spectrum(kind: SpectrumKind, size: usize, decay: f64, seed: u64) -> Result<Spectrum> {
    if size < 1 {
        return Err(Error::InvalidArgument("spectrum size must be ≥ 1".into()));
    }
    if !decay.is_finite() {
        return Err(Error::InvalidArgument("decay must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ladder = generate_ladder(kind, size, &mut rng)?;
    let mut entries = Vec::with_capacity(2 * size + 1);
    entries.push(SpectrumEntry::new(
        0,
        0.0,
        Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)),
    ));
    for (i, &lam) in ladder.as_slice().iter().enumerate() {
        let k = i as i64 + 1;
        let amp = lam.powf(-decay);
        if !(amp.is_finite() && amp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "decay {decay} underflows the coefficient at index {k}"
            )));
        }
        let (ph_pos, ph_neg) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        entries.push(SpectrumEntry::new(k, lam, Complex64::from_polar(amp, ph_pos)));
        entries.push(SpectrumEntry::new(-k, -lam, Complex64::from_polar(amp, ph_neg)));
    }
    Spectrum::with_ladder(2.0, entries, ladder)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_mean_term_is_valid() {
        assert!(validate_spectrum(2.0, &[SpectrumEntry::real(0, 0.0, 1.0)], None).is_empty());
    }

    #[test]
    fn broken_symmetry_is_reported() {
        let v = validate_spectrum(
            2.0,
            &[SpectrumEntry::real(1, 2.0, 1.0), SpectrumEntry::real(-1, -1.9, 0.0)],
            None,
        );
        assert!(v.iter().any(|x| x.to_string() == "lambda(-1) ≠ -lambda(1)"), "{v:?}");
    }

    #[test]
    fn degenerate_pair_is_reported() {
        let v = validate_spectrum(
            2.0,
            &[SpectrumEntry::real(1, 1.0, 0.0), SpectrumEntry::real(-1, -1.0, 0.0)],
            None,
        );
        assert!(v.iter().any(|x| x.to_string() == "|A_1|+|A_{-1}| = 0"), "{v:?}");
    }

    #[test]
    fn non_monotone_and_gaps_are_reported() {
        let v = validate_spectrum(
            1.0,
            &[SpectrumEntry::real(1, 2.0, 1.0), SpectrumEntry::real(2, 1.5, 1.0)],
            None,
        );
        assert!(v.contains(&Violation::NotMonotone(1)));
        let v = validate_spectrum(1.0, &[SpectrumEntry::real(3, 3.0, 1.0)], None);
        assert!(v.contains(&Violation::MissingExponent(1)));
        let v = validate_spectrum(0.5, &[], None);
        assert!(v.contains(&Violation::Exponent(0.5)));
    }

    #[test]
    fn norms_of_small_examples() {
        let s = Spectrum::new(
            1.0,
            vec![SpectrumEntry::new(1, 1.0, c(3.0, 0.0)), SpectrumEntry::new(-1, -1.0, c(0.0, 4.0))],
        )
        .unwrap();
        assert!((s.lp_norm() - 7.0).abs() < 1e-14);
        let s = s.with_p(2.0).unwrap();
        assert!((s.lp_norm() - 5.0).abs() < 1e-14);
        let empty = Spectrum::new(2.0, vec![]).unwrap();
        assert_eq!(empty.lp_norm(), 0.0);
    }

    #[test]
    fn evaluation() {
        let s = Spectrum::new(2.0, vec![SpectrumEntry::new(0, 0.0, c(0.3, -2.0))]).unwrap();
        assert_eq!(s.evaluate(17.3), c(0.3, -2.0));
        let s = Spectrum::new(
            2.0,
            vec![SpectrumEntry::real(1, 1.0, 1.0), SpectrumEntry::real(-1, -1.0, 1.0)],
        )
        .unwrap();
        assert!((s.evaluate(0.0) - c(2.0, 0.0)).norm() < 1e-15);
        let s = Spectrum::new(2.0, vec![SpectrumEntry::real(1, 2.0, 1.0)]).unwrap();
        // e^{i·2·π/2} = e^{iπ}
        let expected = c(PI.cos(), PI.sin());
        assert!((s.evaluate(PI / 2.0) - expected).norm() < 1e-15);
        assert!((s.evaluate(PI / 2.0) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn best_approximation_tail() {
        let mut entries = vec![];
        for k in 1..=3i64 {
            let a = 2f64.powi(-(k as i32));
            entries.push(SpectrumEntry::real(k, k as f64, a));
            entries.push(SpectrumEntry::real(-k, -(k as f64), a));
        }
        let s = Spectrum::new(1.0, entries).unwrap();
        assert!((s.best_approximation(2).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(s.best_approximation(4).unwrap(), 0.0);
        assert!(s.best_approximation(0).is_err());
    }

    #[test]
    fn pair_energies() {
        let s = Spectrum::new(
            2.0,
            vec![
                SpectrumEntry::real(1, 1.0, 1.0),
                SpectrumEntry::real(2, 2.0, 1.0),
                SpectrumEntry::real(-2, -2.0, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(s.pair_energy(2), 2.0);
        assert_eq!(s.pair_energy(5), 0.0);
        let s = Spectrum::with_ladder(
            1.0,
            vec![SpectrumEntry::real(3, 3.0, 2.0)],
            ExponentLadder::arithmetic(3),
        )
        .unwrap();
        assert_eq!(s.pair_energy(3), 2.0);
    }

    #[test]
    fn tail_profile_matches_direct_tails() {
        let s = generate_spectrum(SpectrumKind::Perturbed, 9, 0.7, 3).unwrap().with_p(1.5).unwrap();
        let prof = s.tail_profile_pow(12);
        for nu in 1..=12 {
            let direct = s.best_approximation_pow(nu).unwrap();
            assert!((prof[nu - 1] - direct).abs() < 1e-13, "nu={nu}");
        }
    }

    #[test]
    fn coefficient_estimates() {
        let f = |x: f64| Complex64::from_polar(1.0, 2.0 * x);
        let a = estimate_coefficient(&f, 2.0, 1000.0, 200_000).unwrap();
        assert!((a - c(1.0, 0.0)).norm() <= 0.01);
        let b = estimate_coefficient(&f, 3.0, 1000.0, 200_000).unwrap();
        // (1/T)∫_0^T e^{-ix} dx = (e^{-iT} - 1)/(-iT)
        let t = 1000.0;
        let oracle = (Complex64::from_polar(1.0, -t) - 1.0) / c(0.0, -t);
        assert!((b - oracle).norm() < 1e-9);
        assert!(b.norm() <= 0.01);
        let konst = |_x: f64| c(0.7, 0.2);
        let m = estimate_coefficient(&konst, 0.0, 3.3, 10).unwrap();
        assert!((m - c(0.7, 0.2)).norm() < 1e-14);
    }

    #[test]
    fn generator_contract() {
        let s = generate_spectrum(SpectrumKind::Arithmetic, 3, 1.0, 7).unwrap();
        assert_eq!(s.ladder().as_slice(), &[1.0, 2.0, 3.0]);
        for k in 1..=3i64 {
            assert!((s.coefficient(k).norm() - 1.0 / k as f64).abs() < 1e-15);
            assert!((s.coefficient(-k).norm() - 1.0 / k as f64).abs() < 1e-15);
        }
        assert_eq!(s, generate_spectrum(SpectrumKind::Arithmetic, 3, 1.0, 7).unwrap());
        let l = generate_spectrum(SpectrumKind::Lacunary, 4, 0.0, 1).unwrap();
        assert_eq!(l.ladder().as_slice(), &[1.0, 2.0, 4.0, 8.0]);
        let p = generate_spectrum(SpectrumKind::Perturbed, 50, 1.0, 11).unwrap();
        for (k, &lam) in p.ladder().as_slice().iter().enumerate() {
            assert!((lam - (k + 1) as f64).abs() < 0.4);
        }
        assert!(p.validate().is_empty());
        assert!(generate_spectrum(SpectrumKind::Arithmetic, 0, 1.0, 1).is_err());
        assert!(generate_spectrum(SpectrumKind::Lacunary, 1100, 0.0, 1).is_err());
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let s = generate_spectrum(SpectrumKind::Perturbed, 5, 1.2, 9).unwrap();
        let back = Spectrum::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
        let sparse = Spectrum::with_ladder(
            2.0,
            vec![SpectrumEntry::real(3, 3.0, 1.0)],
            ExponentLadder::arithmetic(4),
        )
        .unwrap();
        assert_eq!(Spectrum::from_json_str(&sparse.to_json_string()).unwrap(), sparse);
        let bad = r#"{"p": 2, "entries": [{"k": 1, "lambda": 2.0, "re": 1, "im": 0},
                                          {"k": -1, "lambda": -1.9, "re": 0, "im": 0}]}"#;
        assert!(matches!(Spectrum::from_json_str(bad), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(Spectrum::from_json_str("{\"p\": 2,\n \"entries\": [}"), Err(Error::Load(_))));
    }

    #[test]
    fn csv_loading() {
        let text = "k,lambda,re,im\n0,0,1,0\n1,1,3,0\n-1,-1,0,4\n";
        let s = Spectrum::from_csv_reader(text.as_bytes(), 2.0).unwrap();
        assert!((s.lp_norm() - 26f64.sqrt()).abs() < 1e-14);
        assert!(Spectrum::from_csv_reader("k,lambda,re,im\n1,x,1,0\n".as_bytes(), 2.0).is_err());
    }

    #[test]
    fn mixed_p_is_rejected() {
        let a = generate_spectrum(SpectrumKind::Arithmetic, 3, 1.0, 1).unwrap();
        let b = a.clone().with_p(1.0).unwrap();
        assert!(matches!(a.sub(&b), Err(Error::MixedExponent(..))));
        let d = a.sub(&a).unwrap();
        assert!(d.lp_norm() < 1e-15);
    }
}
