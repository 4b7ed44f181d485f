//! Where spectra and exponent ladders come from: files, generator specs and ladder specs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use apxbsp_core::spectrum::{generate_ladder, generate_spectrum};
use apxbsp_core::{ExponentLadder, Spectrum, SpectrumKind};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// `kind:size:decay:seedN`, e.g. `perturbed:32:1.5:seed7`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenSpec {
    pub kind: SpectrumKind,
    pub size: usize,
    pub decay: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, size, decay, seed] = parts[..] else {
            bail!("generator spec must look like kind:size:decay:seedN, got {s:?}");
        };
        let seed = seed.strip_prefix("seed").unwrap_or(seed);
        Ok(Self {
            kind: kind.parse()?,
            size: size.parse().with_context(|| format!("bad size {size:?}"))?,
            decay: decay.parse().with_context(|| format!("bad decay {decay:?}"))?,
            seed: seed.parse().with_context(|| format!("bad seed {seed:?}"))?,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn generate(&self, p: f64) -> Result<Spectrum> {
        Ok(generate_spectrum(self.kind, self.size, self.decay, self.seed)?.with_p(p)?)
    }
}

/// `arithmetic:L`, `lacunary:L` or `perturbed:L:seedN`.
pub fn parse_ladder(s: &str) -> Result<ExponentLadder> {
    let parts: Vec<&str> = s.split(':').collect();
    let (kind, len, seed) = match parts[..] {
        [kind, len] => (kind, len, 0),
        [kind, len, seed] => {
            let seed = seed.strip_prefix("seed").unwrap_or(seed);
            (kind, len, seed.parse().with_context(|| format!("bad seed {seed:?}"))?)
        }
        _ => bail!("ladder spec must look like kind:len[:seedN], got {s:?}"),
    };
    let kind: SpectrumKind = kind.parse()?;
    let len: usize = len.parse().with_context(|| format!("bad ladder length {len:?}"))?;
    if len == 0 {
        bail!("ladder length must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(generate_ladder(kind, len, &mut rng)?)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Spectrum file (.json, or .csv with --p).
    #[arg(long, conflicts_with = "gen")]
    pub spectrum: Option<PathBuf>,
    /// Generated spectrum, kind:size:decay:seedN.
    #[arg(long)]
    pub gen: Option<String>,
    /// Exponent p; overrides the file's value (required for CSV input).
    #[arg(long)]
    pub p: Option<f64>,
}

impl SourceArgs {
    pub fn is_set(&self) -> bool {
        self.spectrum.is_some() || self.gen.is_some()
    }

    pub fn gen_spec(&self) -> Result<Option<GenSpec>> {
        self.gen.as_deref().map(GenSpec::parse).transpose()
    }

    pub fn load(&self) -> Result<Spectrum> {
        if let Some(spec) = self.gen_spec()? {
            return spec.generate(self.p.unwrap_or(2.0));
        }
        let Some(path) = &self.spectrum else {
            bail!("need --spectrum <path> or --gen kind:size:decay:seedN");
        };
        let s = load_file(path, self.p)?;
        Ok(match self.p {
            Some(p) if p != s.p() => s.with_p(p)?,
            _ => s,
        })
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn load_file(path: &Path, p: Option<f64>) -> Result<Spectrum> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let s = if is_csv(path) {
        let Some(p) = p else {
            bail!("CSV spectra need --p");
        };
        Spectrum::from_csv_reader(text.as_bytes(), p)
    } else {
        Spectrum::from_json_str(&text)
    };
    s.with_context(|| format!("loading {}", path.display()))
}

/// Ladder from `--lambda`, falling back to the spectrum source.
pub fn resolve_ladder(lambda: Option<&str>, source: &SourceArgs) -> Result<ExponentLadder> {
    match lambda {
        Some(spec) => parse_ladder(spec),
        None if source.is_set() => Ok(source.load()?.ladder().clone()),
        None => bail!("need --lambda kind:len or a spectrum source"),
    }
}
