use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use apxbsp_core::report::Status;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

mod commands;
mod report;
mod source;

use commands::*;
use report::{write_csv, write_json, Format, Report};

/// Best approximation, moduli of smoothness and Jackson / inverse bounds for
/// almost-periodic spectra.
#[derive(Debug, Parser)]
#[command(name = "apxbsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Check a spectrum file against every invariant.
    Validate(ValidateArgs),
    /// l_p norm of the coefficients.
    Norm(NormArgs),
    /// Best approximation E_n, for one n or the whole profile.
    BestApprox(BestApproxArgs),
    /// Generalized modulus of smoothness at one or more step bounds.
    Modulus(ModulusArgs),
    /// Check the direct (Jackson-type) estimates.
    JacksonVerify(JacksonVerifyArgs),
    /// Sharp constant of the discretized extremal problem.
    JacksonConstant(JacksonConstantArgs),
    /// The correction series sigma(s).
    Sigma(SigmaArgs),
    /// Denominator integrals I_n(s) and their flat counterparts.
    Integrals(IntegralsArgs),
    /// Check the inverse estimates and their dominance chain.
    InverseVerify(InverseVerifyArgs),
    /// Smoothness-class diagnostics for a Hölder exponent or a majorant.
    Classify(ClassifyArgs),
    /// Generate a seeded test spectrum.
    Gen(GenArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Norm(_) => "norm",
            Command::BestApprox(_) => "best-approx",
            Command::Modulus(_) => "modulus",
            Command::JacksonVerify(_) => "jackson-verify",
            Command::JacksonConstant(_) => "jackson-constant",
            Command::Sigma(_) => "sigma",
            Command::Integrals(_) => "integrals",
            Command::InverseVerify(_) => "inverse-verify",
            Command::Classify(_) => "classify",
            Command::Gen(_) => "gen",
        }
    }

    fn run(&self) -> Result<report::Output> {
        match self {
            Command::Validate(a) => validate(a),
            Command::Norm(a) => norm(a),
            Command::BestApprox(a) => best_approx(a),
            Command::Modulus(a) => modulus(a),
            Command::JacksonVerify(a) => jackson_verify(a),
            Command::JacksonConstant(a) => jackson_constant(a),
            Command::Sigma(a) => sigma(a),
            Command::Integrals(a) => integrals(a),
            Command::InverseVerify(a) => inverse_verify(a),
            Command::Classify(a) => classify(a),
            Command::Gen(a) => gen(a),
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("APXBSP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("APXBSP_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn emit(cli: &Cli, report: &Report, rows: Option<&[serde_json::Value]>) -> Result<()> {
    let mut out: Box<dyn Write> = match &cli.output.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match cli.output.format {
        Format::Json => write_json(report, &mut out)?,
        Format::Csv => write_csv(rows.unwrap_or(&[]), &report.results, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<Status> {
    configure_threads()?;
    let start = Instant::now();
    let output = cli.command.run()?;
    let report = Report {
        command: cli.command.name().to_string(),
        config: serde_json::to_value(&cli.command)?,
        results: output.results,
        status: output.status,
        wall_time: start.elapsed().as_secs_f64(),
    };
    emit(cli, &report, output.rows.as_deref())?;
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
