use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use apxbsp_core::classes::{
    bari_ratio, classify_holder, log_grid, membership_by_best_approx, membership_by_modulus, validate_majorant,
    Majorant, DEFAULT_DELTA_MIN, DEFAULT_DELTA_POINTS,
};
use apxbsp_core::inverse::verify_inverse;
use apxbsp_core::jackson::{
    constant_from_measure, overall_status, sharp_constant, uniform_bound, verify_direct, DirectGrids, DirectMode,
};
use apxbsp_core::quadrature::{jackson_integral_flat, jackson_integral_sin, sigma_series, QuadratureSettings};
use apxbsp_core::report::Status;
use apxbsp_core::smoothness::{generalized_modulus_detail, StepWeight, DEFAULT_GRID};
use apxbsp_core::spectrum::{validate_csv_reader, validate_json_str};
use apxbsp_core::Spectrum;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::Output;
use crate::source::{resolve_ladder, GenSpec, SourceArgs};

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let (a, b) = s.split_once(':').context("range must look like lo:hi")?;
    Ok(a.trim().parse()?..=b.trim().parse()?)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
}

pub fn validate(a: &ValidateArgs) -> Result<Output> {
    let violations: Vec<String> = match &a.source.spectrum {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let found = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let Some(p) = a.source.p else {
                    bail!("CSV spectra need --p");
                };
                validate_csv_reader(text.as_bytes(), p)?
            } else {
                validate_json_str(&text)?
            };
            found.iter().map(ToString::to_string).collect()
        }
        None => {
            a.source.load()?;
            Vec::new()
        }
    };
    let status = if violations.is_empty() { Status::Pass } else { Status::Fail };
    Ok(Output::new(json!({ "valid": violations.is_empty(), "violations": violations }), status))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NormArgs {
    #[command(flatten)]
    pub source: SourceArgs,
}

pub fn norm(a: &NormArgs) -> Result<Output> {
    let s = a.source.load()?;
    Ok(Output::new(
        json!({ "p": s.p(), "norm": s.lp_norm(), "terms": s.entries().len() }),
        Status::NotApplicable,
    ))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BestApproxArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Single index; omit for the whole profile n = 1..=max index.
    #[arg(long)]
    pub n: Option<usize>,
}

pub fn best_approx(a: &BestApproxArgs) -> Result<Output> {
    let s = a.source.load()?;
    let ns: Vec<usize> = match a.n {
        Some(n) => vec![n],
        None => (1..=s.max_index().max(1).min(s.ladder().len())).collect(),
    };
    let rows = ns
        .iter()
        .map(|&n| {
            Ok(json!({
                "n": n,
                "lambda_n": s.ladder().lambda(n)?,
                "value": s.best_approximation(n)?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    let results = if a.n.is_some() {
        rows[0].clone()
    } else {
        json!({ "p": s.p(), "profile": rows.clone() })
    };
    Ok(Output::new(results, Status::NotApplicable).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModulusArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// alpha:<a>, scheme:<mu0>,<mu1>,... or table:<path>.
    #[arg(long, default_value = "alpha:1")]
    pub weight: String,
    /// Step bounds delta, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta: Vec<f64>,
    /// Minimum scan nodes on [0, delta].
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
}

pub fn modulus(a: &ModulusArgs) -> Result<Output> {
    let s = a.source.load()?;
    let phi: StepWeight = a.weight.parse()?;
    let rows = a
        .delta
        .iter()
        .map(|&d| {
            let m = generalized_modulus_detail(&s, &phi, d, a.grid)?;
            Ok(json!({
                "delta": d,
                "value": m.value,
                "h_star": m.h_star,
                "upper": m.upper_pow.map(|u| u.powf(1.0 / s.p())),
                "grid": m.grid,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(Output::new(json!({ "weight": phi.label(), "p": s.p(), "profile": rows.clone() }), Status::NotApplicable)
        .with_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Pointwise,
    AveragedSin,
    AveragedFlat,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrialArgs {
    /// Number of generated spectra, seeds seed, seed+1, ... (needs --gen).
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
}

impl TrialArgs {
    fn spectra(&self, source: &SourceArgs) -> Result<Vec<(u64, Spectrum)>> {
        if self.trials == 0 {
            bail!("--trials must be at least 1");
        }
        match source.gen_spec()? {
            Some(g) => (0..self.trials)
                .into_par_iter()
                .map(|i| {
                    let spec: GenSpec = g.with_seed(g.seed + i);
                    Ok((spec.seed, spec.generate(source.p.unwrap_or(2.0))?))
                })
                .collect(),
            None if self.trials > 1 => bail!("--trials needs a --gen source"),
            None => Ok(vec![(0, source.load()?)]),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JacksonVerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "alpha:1")]
    pub weight: String,
    /// tau for the pointwise estimate.
    #[arg(long, default_value_t = PI)]
    pub tau: f64,
    /// tau for the flat averaged estimate, at most 3pi/4.
    #[arg(long, default_value_t = 0.75 * PI)]
    pub flat_tau: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::All)]
    pub mode: ModeArg,
    /// Minimum nodes for the modulus scan and profile.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// u-grid nodes of the pointwise extremal problem.
    #[arg(long, default_value_t = 512)]
    pub ugrid: usize,
}

pub fn jackson_verify(a: &JacksonVerifyArgs) -> Result<Output> {
    let phi: StepWeight = a.weight.parse()?;
    let modes: Vec<(DirectMode, f64)> = match a.mode {
        ModeArg::Pointwise => vec![(DirectMode::Pointwise, a.tau)],
        ModeArg::AveragedSin => vec![(DirectMode::AveragedSin, PI)],
        ModeArg::AveragedFlat => vec![(DirectMode::AveragedFlat, a.flat_tau)],
        ModeArg::All => {
            let mut m = vec![(DirectMode::Pointwise, a.tau)];
            if phi.alpha_value().is_some() {
                m.push((DirectMode::AveragedSin, PI));
                m.push((DirectMode::AveragedFlat, a.flat_tau));
            }
            m
        }
    };
    let grids = DirectGrids {
        modulus: a.grid,
        u_grid: a.ugrid,
    };
    let spectra = a.trials.spectra(&a.source)?;
    let trials = spectra
        .par_iter()
        .enumerate()
        .map(|(i, (seed, s))| {
            let reports = modes
                .iter()
                .map(|&(mode, tau)| verify_direct(s, a.n, &phi, tau, mode, grids).map(|r| (mode, r)))
                .collect::<apxbsp_core::Result<Vec<_>>>()?;
            let status = overall_status(reports.iter().map(|(_, r)| r));
            Ok((i, *seed, reports, status))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut status = Status::NotApplicable;
    let mut out = Vec::new();
    for (i, seed, reports, st) in &trials {
        status = status.combine(*st);
        for (mode, r) in reports {
            rows.push(json!({ "trial": i, "seed": seed, "mode": mode, "report": to_value(r) }));
        }
        out.push(json!({
            "trial": i,
            "seed": seed,
            "status": st,
            "reports": reports.iter().map(|(m, r)| json!({ "mode": m, "report": to_value(r) })).collect::<Vec<_>>(),
        }));
    }
    Ok(Output::new(json!({ "weight": phi.label(), "trials": out }), status).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JacksonConstantArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Exponent ladder, arithmetic:L, lacunary:L or perturbed:L:seedN.
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, conflicts_with = "weight")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, default_value_t = PI)]
    pub tau: f64,
    #[arg(long, default_value_t = 512)]
    pub ugrid: usize,
    /// Largest column index K; defaults to the ladder length.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Order m for the classical closed-form bound.
    #[arg(long)]
    pub classical_m: Option<u32>,
}

pub fn jackson_constant(a: &JacksonConstantArgs) -> Result<Output> {
    let ladder = resolve_ladder(a.lambda.as_deref(), &a.source)?;
    let p = match (a.source.p, a.source.is_set()) {
        (Some(p), _) => p,
        (None, true) => a.source.load()?.p(),
        (None, false) => 2.0,
    };
    let phi = match (&a.weight, a.alpha) {
        (Some(w), _) => w.parse()?,
        (None, alpha) => StepWeight::alpha(alpha.unwrap_or(1.0))?,
    };
    let kmax = a.kmax.unwrap_or(ladder.len());
    let sharp = sharp_constant(&ladder, a.n, &phi, p, a.tau, a.ugrid, kmax)?;
    let from_measure = constant_from_measure(&ladder, a.n, &phi, p, &sharp.v_star, kmax)?;
    let uniform = match phi.alpha_value() {
        Some(alpha) if (a.tau - PI).abs() < 1e-12 => Some(uniform_bound(alpha, p, a.classical_m)?),
        _ => None,
    };
    let rows: Vec<Value> = sharp
        .v_star
        .nodes()
        .iter()
        .zip(sharp.v_star.increments())
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| json!({ "t": t, "dv": d }))
        .collect();
    let results = json!({
        "weight": phi.label(),
        "p": p,
        "n": a.n,
        "tau": a.tau,
        "kmax": kmax,
        "k_value": sharp.k_value,
        "j_value": sharp.j_value,
        "constant_from_measure": from_measure,
        "uniform_bound": uniform,
        "u_grid": sharp.u_grid,
        "iterations": sharp.iterations,
        "columns": sharp.columns,
        "rho": sharp.rho,
        "v_star": rows.clone(),
    });
    Ok(Output::new(results, Status::NotApplicable).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SigmaArgs {
    /// Orders s, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

pub fn sigma(a: &SigmaArgs) -> Result<Output> {
    let rows = a
        .s
        .iter()
        .map(|&s| {
            let r = sigma_series(s, a.tol)?;
            Ok(json!({ "s": s, "value": r.value, "truncated_at": r.truncated_at, "tail": r.tail }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(Output::new(json!({ "profile": rows.clone() }), Status::NotApplicable).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegralsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Orders s of (1 - cos)^s, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub order: Vec<f64>,
    /// Upper limit of the flat integral; omitted means only the sin form.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 40)]
    pub max_depth: u32,
}

pub fn integrals(a: &IntegralsArgs) -> Result<Output> {
    let ladder = resolve_ladder(a.lambda.as_deref(), &a.source)?;
    let q = QuadratureSettings::new(a.tol, a.max_depth)?;
    let kmax = a.kmax.unwrap_or(ladder.len());
    let rows = a
        .order
        .iter()
        .map(|&s| {
            let sin = jackson_integral_sin(&ladder, a.n, s, kmax, &q)?;
            let flat = a
                .tau
                .map(|tau| jackson_integral_flat(&ladder, a.n, s, tau, kmax, &q))
                .transpose()?;
            Ok(json!({ "order": s, "sin": to_value(&sin), "flat": flat.as_ref().map(to_value) }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(Output::new(json!({ "n": a.n, "kmax": kmax, "profile": rows.clone() }), Status::NotApplicable).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InverseVerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

pub fn inverse_verify(a: &InverseVerifyArgs) -> Result<Output> {
    let spectra = a.trials.spectra(&a.source)?;
    let suites = spectra
        .par_iter()
        .map(|(seed, s)| Ok((*seed, verify_inverse(s, a.n, a.alpha)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut status = Status::NotApplicable;
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for (i, (seed, suite)) in suites.iter().enumerate() {
        status = status.combine(suite.status);
        for (form, r) in [("general", &suite.general), ("power", &suite.power), ("gap", &suite.gap)] {
            rows.push(json!({ "trial": i, "seed": seed, "form": form, "report": to_value(r) }));
        }
        out.push(json!({ "trial": i, "seed": seed, "suite": to_value(suite) }));
    }
    Ok(Output::new(json!({ "alpha": a.alpha, "trials": out }), status).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Hölder exponent r for omega(delta) = delta^r.
    #[arg(long, required_unless_present = "majorant")]
    pub r: Option<f64>,
    /// power:<r> or table:<path>; runs the membership profiles for this majorant.
    #[arg(long, conflicts_with = "r")]
    pub majorant: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Index range lo:hi for the best-approximation profile.
    #[arg(long)]
    pub n_range: Option<String>,
    #[arg(long, default_value_t = DEFAULT_DELTA_POINTS)]
    pub delta_points: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA_MIN)]
    pub delta_min: f64,
}

pub fn classify(a: &ClassifyArgs) -> Result<Output> {
    let s = a.source.load()?;
    let n_range = a.n_range.as_deref().map(parse_range).transpose()?;
    let deltas = log_grid(a.delta_min, 1.0, a.delta_points)?;
    let omega: Majorant = match (&a.majorant, a.r) {
        (Some(m), _) => m.parse()?,
        (None, Some(r)) => Majorant::power(r)?,
        (None, None) => bail!("need --r or --majorant"),
    };
    let top = s.ladder().len();
    let bari = bari_ratio(&omega, a.alpha * s.p(), s.ladder(), 1..=top, s.p())?;
    let mut rows: Vec<Value> = Vec::new();
    let results = if a.majorant.is_none() {
        let d = classify_holder(&s, a.r.unwrap(), a.alpha, n_range, Some(&deltas))?;
        for (n, r) in d.best_approx.scales.iter().zip(&d.best_approx.ratios) {
            rows.push(json!({ "profile": "best_approx", "scale": n, "ratio": r }));
        }
        for (t, r) in d.modulus.scales.iter().zip(&d.modulus.ratios) {
            rows.push(json!({ "profile": "modulus", "scale": t, "ratio": r }));
        }
        json!({
            "verdict": d.verdict.to_string(),
            "diagnostic": to_value(&d),
            "bari": { "s": a.alpha * s.p(), "max_ratio": bari.max_ratio, "bounded": bari.profile.bounded },
        })
    } else {
        let violations: Vec<String> = validate_majorant(&omega).iter().map(ToString::to_string).collect();
        if !violations.is_empty() {
            bail!("majorant {omega} is invalid: {}", violations.join("; "));
        }
        let best = membership_by_best_approx(&s, &omega, n_range)?;
        let modulus = membership_by_modulus(&s, &omega, a.alpha, &deltas)?;
        for (n, r) in best.scales.iter().zip(&best.ratios) {
            rows.push(json!({ "profile": "best_approx", "scale": n, "ratio": r }));
        }
        for (t, r) in modulus.scales.iter().zip(&modulus.ratios) {
            rows.push(json!({ "profile": "modulus", "scale": t, "ratio": r }));
        }
        json!({
            "majorant": omega.to_string(),
            "best_approx": to_value(&best),
            "modulus": to_value(&modulus),
            "bari": { "s": a.alpha * s.p(), "max_ratio": bari.max_ratio, "bounded": bari.profile.bounded },
        })
    };
    Ok(Output::new(results, Status::NotApplicable).with_rows(rows))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    /// kind:size:decay:seedN
    #[arg(long)]
    pub gen: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Also write the bare spectrum document here, loadable with --spectrum.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

pub fn gen(a: &GenArgs) -> Result<Output> {
    let s = GenSpec::parse(&a.gen)?.generate(a.p)?;
    let doc = s.to_json_string();
    if let Some(path) = &a.save {
        fs::write(path, format!("{doc}\n")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let spectrum: Value = serde_json::from_str(&doc)?;
    let rows = spectrum["entries"].as_array().cloned().unwrap_or_default();
    Ok(Output::new(json!({ "spectrum": spectrum }), Status::NotApplicable).with_rows(rows))
}
