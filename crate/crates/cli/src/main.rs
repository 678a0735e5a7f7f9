//! `fhl`: spectra, critical exponents, classification, certificates, recipes,
//! phase diagrams and numerical identity checks for `(-Delta)^s + mu |x|^{-2s}`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 verification failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fhl_core::classifier::{Domain, ProblemInstance};
use fhl_core::specfun::Params;
use serde::{Serialize, Serializer};

#[derive(Parser, Debug)]
#[command(name = "fhl", version, about = "Fractional Hardy operator toolkit")]
struct Cli {
    /// JSON file with quadrature settings (rel_tol, abs_tol, cutoff_factor,
    /// max_evaluations); missing keys keep their defaults. Takes precedence
    /// over FHL_QUAD_TOL.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roots tau_- <= tau_+ of c_s(tau) + mu = 0 and the critical coupling mu0
    #[command(visible_alias = "spectrum")]
    Roots(SpectrumArgs),
    /// Critical exponents p*, p#, q# and their order relations
    Exponents(ExponentArgs),
    /// Verdict of the rule table for one instance
    Classify(InstanceArgs),
    /// Build and replay the nonexistence certificate for one instance
    Certificate(InstanceArgs),
    /// Explicit solution or supersolution behind an existence verdict
    Recipe(InstanceArgs),
    /// Check a recipe against the quadrature oracle
    VerifyRecipe(VerifyRecipeArgs),
    /// Classify a theta x p grid and write it as CSV
    Phase(PhaseArgs),
    /// Compare closed forms with the singular-integral quadrature
    Verify {
        #[command(subcommand)]
        identity: Identity,
    },
    /// Rule manifest utilities
    Manifest {
        #[command(subcommand)]
        action: ManifestAction,
    },
}

#[derive(Subcommand, Debug)]
enum Identity {
    /// (-Delta)^s + mu r^-2s applied to r^tau against (c_s(tau) + mu) r^(tau-2s)
    Power(PowerArgs),
    /// Log-power expansion of L[r^tau (ln r)^m] at a root of c_s + mu
    #[command(alias = "lemma51")]
    LogPower(LogPowerArgs),
    /// L(f#)(r) against r^(-2s-N) (L f)(1/r) for the Kelvin transform f#
    Kelvin(PowerArgs),
    /// L annihilates both fundamental solutions away from the origin
    Fundamental(FundamentalArgs),
}

#[derive(Subcommand, Debug)]
enum ManifestAction {
    /// Confirm the manifest and the classifier rule table are in bijection
    Check,
}

/// A coupling constant, or `mu0` for the critical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuArg {
    Value(f64),
    Critical,
}

impl Serialize for MuArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MuArg::Value(v) => s.serialize_f64(*v),
            MuArg::Critical => s.serialize_str("mu0"),
        }
    }
}

fn parse_mu(text: &str) -> Result<MuArg, String> {
    if text == "mu0" {
        return Ok(MuArg::Critical);
    }
    text.parse::<f64>().map(MuArg::Value).map_err(|e| format!("expected a number or \"mu0\": {e}"))
}

/// `lo,hi,n`: `n` equally spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 }).collect()
    }
}

fn parse_range(text: &str) -> Result<Range, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected lo,hi,n".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let n: usize = n.parse().map_err(|e| format!("n: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("need finite lo < hi, got {lo}, {hi}"));
    }
    if n < 2 {
        return Err(format!("need at least 2 points, got {n}"));
    }
    Ok(Range { lo, hi, n })
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
enum DomainArg {
    Punctured,
    Exterior,
    #[value(alias = "whole_space", alias = "whole")]
    WholeSpace,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Punctured => Domain::Punctured,
            DomainArg::Exterior => Domain::Exterior,
            DomainArg::WholeSpace => Domain::WholeSpace,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Root {
    Plus,
    Minus,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OperatorArgs {
    /// Space dimension
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    n: u32,
    /// Fractional order in (0, 1)
    #[arg(long, allow_negative_numbers = true)]
    s: f64,
}

impl OperatorArgs {
    fn params(&self) -> Result<Params, commands::Failure> {
        Ok(Params::new(self.n, self.s)?)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    op: OperatorArgs,
    /// Hardy coupling, or `mu0`
    #[arg(long, value_parser = parse_mu, allow_negative_numbers = true)]
    mu: MuArg,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ExponentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    /// Weight exponent of Q ~ |x|^theta
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct InstanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    exponents: ExponentArgs,
    /// Nonlinearity exponent, positive
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
    #[arg(long, value_enum)]
    domain: DomainArg,
    /// Lower bound q_low in Q >= q_low |x|^theta
    #[arg(long = "q-low", default_value_t = 1.0, allow_negative_numbers = true)]
    q_low: f64,
    /// Upper bound q_up in Q <= q_up |x|^theta; required by the log-power recipes
    #[arg(long = "q-up", allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_up: Option<f64>,
}

impl InstanceArgs {
    fn instance(&self) -> Result<ProblemInstance, commands::Failure> {
        let params = self.exponents.spectrum.op.params()?;
        Ok(ProblemInstance {
            params,
            mu: commands::resolve_mu(&params, self.exponents.spectrum.mu)?,
            theta: self.exponents.theta,
            p: self.p,
            domain: self.domain.into(),
            q_low: self.q_low,
            q_up: self.q_up,
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyRecipeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    instance: InstanceArgs,
    /// Radii to check; defaults to 10 points in the validity region
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    radii: Option<Vec<f64>>,
    /// Relative tolerance (two-sided for powers, one-sided for log powers)
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Check the log-power recipe at t = t_factor * t_min
    #[arg(long = "t-factor", default_value_t = 1.0)]
    t_factor: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PhaseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long, value_enum)]
    domain: DomainArg,
    /// theta grid as lo,hi,n
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    theta: Range,
    /// p grid as lo,hi,n; points with p <= 0 are dropped
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    p: Range,
    #[arg(long = "q-low", default_value_t = 1.0)]
    q_low: f64,
    #[arg(long = "q-up")]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_up: Option<f64>,
    /// Output CSV path; standard output when absent
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    op: OperatorArgs,
    #[arg(long, value_parser = parse_mu, default_value = "0", allow_negative_numbers = true)]
    mu: MuArg,
    /// Exponent in (-N, 2s)
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LogPowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    op: OperatorArgs,
    #[arg(long, value_parser = parse_mu, allow_negative_numbers = true)]
    mu: MuArg,
    /// Power of ln r
    #[arg(long)]
    m: u32,
    /// Which root of c_s + mu supplies the exponent
    #[arg(long, value_enum, default_value_t = Root::Plus)]
    root: Root,
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FundamentalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    op: OperatorArgs,
    #[arg(long, value_parser = parse_mu, allow_negative_numbers = true)]
    mu: MuArg,
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, inputs) = match &cli.command {
        Command::Roots(a) => ("roots", output::to_value(a)),
        Command::Exponents(a) => ("exponents", output::to_value(a)),
        Command::Classify(a) => ("classify", output::to_value(a)),
        Command::Certificate(a) => ("certificate", output::to_value(a)),
        Command::Recipe(a) => ("recipe", output::to_value(a)),
        Command::VerifyRecipe(a) => ("verify-recipe", output::to_value(a)),
        Command::Phase(a) => ("phase", output::to_value(a)),
        Command::Verify { identity } => match identity {
            Identity::Power(a) => ("verify power", output::to_value(a)),
            Identity::LogPower(a) => ("verify log-power", output::to_value(a)),
            Identity::Kelvin(a) => ("verify kelvin", output::to_value(a)),
            Identity::Fundamental(a) => ("verify fundamental", output::to_value(a)),
        },
        Command::Manifest { action: ManifestAction::Check } => ("manifest check", serde_json::json!({})),
    };
    let outcome = commands::quadrature_config(cli.config.as_deref()).and_then(|cfg| run(&cli.command, &cfg));
    match outcome {
        Ok(commands::Report::Raw(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(commands::Report::Json { result, warnings, failed }) => {
            print!("{}", output::render(&output::envelope(name, inputs, Ok(result), &warnings)));
            ExitCode::from(if failed { commands::EXIT_VERIFICATION } else { 0 })
        }
        Err(f) => {
            print!("{}", output::render(&output::envelope(name, inputs, Err(f.to_value()), &[])));
            ExitCode::from(f.code)
        }
    }
}

fn run(command: &Command, cfg: &fhl_core::fracop::QuadratureConfig) -> Result<commands::Report, commands::Failure> {
    match command {
        Command::Roots(a) => commands::roots(&a.op.params()?, a.mu),
        Command::Exponents(a) => commands::exponents(&a.spectrum.op.params()?, a.spectrum.mu, a.theta),
        Command::Classify(a) => commands::classify(&a.instance()?),
        Command::Certificate(a) => commands::certificate(&a.instance()?),
        Command::Recipe(a) => commands::recipe(&a.instance()?),
        Command::VerifyRecipe(a) => {
            commands::verify_recipe(&a.instance.instance()?, a.radii.as_deref(), a.tol, a.t_factor, cfg)
        }
        Command::Phase(a) => {
            let params = a.spectrum.op.params()?;
            let grid = commands::PhaseGrid {
                mu: commands::resolve_mu(&params, a.spectrum.mu)?,
                params,
                domain: a.domain.into(),
                thetas: a.theta.points(),
                ps: a.p.points(),
                q_low: a.q_low,
                q_up: a.q_up,
            };
            commands::phase(&grid, a.out.as_deref())
        }
        Command::Verify { identity } => match identity {
            Identity::Power(a) => {
                let params = a.op.params()?;
                commands::verify_power(&params, commands::resolve_mu(&params, a.mu)?, a.tau, &a.radii, a.tol, cfg)
            }
            Identity::LogPower(a) => {
                let params = a.op.params()?;
                let mu = commands::resolve_mu(&params, a.mu)?;
                commands::verify_log_power(&params, mu, a.m, a.root, &a.radii, a.tol, cfg)
            }
            Identity::Kelvin(a) => {
                let params = a.op.params()?;
                commands::verify_kelvin(&params, commands::resolve_mu(&params, a.mu)?, a.tau, &a.radii, a.tol, cfg)
            }
            Identity::Fundamental(a) => {
                let params = a.op.params()?;
                commands::verify_fundamental(&params, commands::resolve_mu(&params, a.mu)?, &a.radii, a.tol, cfg)
            }
        },
        Command::Manifest { action: ManifestAction::Check } => commands::manifest(),
    }
}
