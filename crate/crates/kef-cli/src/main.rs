//! `kef`: simulate killed exponential functionals of Lévy process pairs and
//! check the distributional equations their laws satisfy.
//!
//! Subcommands: `simulate` (Monte Carlo batches to CSV), `check` (equation
//! residual reports), `gof` (Kolmogorov-Smirnov against a reference law),
//! `reference` (tabulate a registry law). Exit codes: 0 success/pass,
//! 2 configuration error, 3 numeric failure, 4 failed check.

use clap::{Args, Parser, Subcommand};
use kef_core::disteq::{run_check, CheckOpts, Equation};
use kef_core::est::{self, LawRep};
use kef_core::grid;
use kef_core::laws;
use kef_core::levy::{ProcessSpec, ProcessSpecDto, Role};
use kef_core::sim::{batch, SampleBatch, SamplerKind, SimConfig};
use kef_core::{KefError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kef", version, about = "killed exponential functionals: simulation and equation checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a Monte Carlo batch of V and write it as CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Evaluate a distributional-equation residual for a law.
    Check(CheckArgs),
    /// Kolmogorov-Smirnov distance of simulated draws against a reference law.
    Gof(GofArgs),
    /// Tabulate a reference law (density/cdf/cf) as tidy CSV.
    Reference(ReferenceArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// Run configuration JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the killing rate q from the config.
    #[arg(long)]
    q: Option<f64>,
    /// Override the number of draws.
    #[arg(long)]
    n: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Assert a.s. convergence for q = 0 runs, skipping the sufficient check.
    #[arg(long)]
    assume_convergence: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Output CSV path (sidecar metadata goes to <out>.meta.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Equation: cf|laplace|density-laplace|mu|mu-fm|mu-fv|density-diff|generator.
    #[arg(long)]
    equation: String,
    /// Reference law supplying the closed-form candidate.
    #[arg(long)]
    reference: Option<String>,
    /// JSON parameters for the reference law.
    #[arg(long, default_value = "{}")]
    params: String,
    /// CSV file of samples supplying an empirical candidate law.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Evaluation grid "a:b:n" or "a:b:n|log".
    #[arg(long)]
    grid: Option<String>,
    /// Tolerance added to the computed error budget.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Skip moment preconditions (asserted by the caller).
    #[arg(long)]
    override_moments: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Reference law to test against.
    #[arg(long)]
    reference: String,
    /// JSON parameters for the reference law.
    #[arg(long, default_value = "{}")]
    params: String,
    /// KS threshold; default 1.63/sqrt(n) (asymptotic 1% level).
    #[arg(long)]
    tol: Option<f64>,
    /// Write the JSON verdict here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReferenceArgs {
    /// Registry law name.
    #[arg(long)]
    name: String,
    /// JSON parameters for the law.
    #[arg(long, default_value = "{}")]
    params: String,
    /// Tabulation grid "a:b:n" or "a:b:n|log".
    #[arg(long, default_value = "0.01:10:200|log")]
    grid: String,
    /// Output CSV (z, value, series).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// On-disk run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RunConfig {
    xi: ProcessSpecDto,
    eta: ProcessSpecDto,
    #[serde(default)]
    q: f64,
    #[serde(default = "default_sim")]
    sim: SimConfig,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_sampler")]
    sampler: SamplerKind,
}

fn default_sim() -> SimConfig {
    SimConfig::default()
}
fn default_n() -> usize {
    10_000
}
fn default_sampler() -> SamplerKind {
    SamplerKind::Direct
}

struct Run {
    xi: ProcessSpec,
    eta: ProcessSpec,
    q: f64,
    cfg: SimConfig,
    n: usize,
    sampler: SamplerKind,
}

fn load_run(common: &CommonConfig) -> Result<Run> {
    let text = fs::read_to_string(&common.config).map_err(|e| {
        KefError::config(format!("cannot read config {}: {e}", common.config.display()))
    })?;
    let rc: RunConfig = serde_json::from_str(&text)
        .map_err(|e| KefError::config(format!("invalid config JSON: {e}")))?;
    let mut cfg = rc.sim;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if common.assume_convergence {
        cfg.assume_convergence = true;
    }
    let q = common.q.unwrap_or(rc.q);
    if !(q >= 0.0) {
        return Err(KefError::config("q must be >= 0"));
    }
    Ok(Run {
        xi: ProcessSpec::new(rc.xi.to_triplet()?, Role::Xi),
        eta: ProcessSpec::new(rc.eta.to_triplet()?, Role::Eta),
        q,
        cfg,
        n: common.n.unwrap_or(rc.n),
        sampler: rc.sampler,
    })
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("KEF_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Check(args) => cmd_check(args),
        Command::Gof(args) => cmd_gof(args),
        Command::Reference(args) => cmd_reference(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                KefError::Numeric { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let run = load_run(&args.common)?;
    let b = batch(&run.xi, &run.eta, run.q, &run.cfg, run.sampler, run.n)?;

    let mut csv = String::with_capacity(b.values.len() * 20 + 2);
    csv.push_str("v\n");
    for v in &b.values {
        csv.push_str(&format!("{v}\n"));
    }
    write_text(&args.out, &csv)?;

    let sidecar = serde_json::json!({
        "seed": b.master_seed,
        "n": b.values.len(),
        "q": run.q,
        "sampler": run.sampler,
        "config": run.cfg,
        "bias_note": b.bias,
    });
    let meta_path = args.out.with_extension("meta.json");
    write_text(&meta_path, &serde_json::to_string_pretty(&sidecar).unwrap())?;
    println!(
        "wrote {} draws to {} (metadata {})",
        b.values.len(),
        args.out.display(),
        meta_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_samples(path: &Path) -> Result<SampleBatch> {
    let text = fs::read_to_string(path)
        .map_err(|e| KefError::config(format!("cannot read samples {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "v") {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| KefError::config(format!("bad sample on line {}: {e}", i + 1)))?,
        );
    }
    if values.is_empty() {
        return Err(KefError::config("sample file contains no values"));
    }
    Ok(SampleBatch::from_values(values))
}

fn default_grid(eq: Equation, law: &LawRep) -> Vec<f64> {
    match eq {
        Equation::Cf => grid::log_spaced(0.1, 10.0, 25),
        Equation::Laplace => grid::log_spaced(0.05, 5.0, 20),
        Equation::DensityLaplace => grid::log_spaced(0.05, 5.0, 20),
        Equation::Generator => vec![],
        _ => {
            let supported_neg = match law {
                LawRep::ClosedForm(l) => l.support.0 < 0.0,
                LawRep::Empirical(b) => b.values.iter().any(|v| *v < 0.0),
            };
            if supported_neg {
                grid::log_symmetric(0.05, 5.0, 12)
            } else {
                grid::log_spaced(0.05, 5.0, 20)
            }
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode> {
    let run = load_run(&args.common)?;
    let eq: Equation = args.equation.parse()?;

    let law = match (&args.reference, &args.samples) {
        (Some(name), None) => {
            let params: serde_json::Value = serde_json::from_str(&args.params)
                .map_err(|e| KefError::config(format!("invalid --params JSON: {e}")))?;
            laws::reference(name, &params)?.law
        }
        (None, Some(path)) => LawRep::Empirical(load_samples(path)?),
        _ => {
            return Err(KefError::config(
                "check needs exactly one law source: --reference NAME or --samples FILE",
            ))
        }
    };

    let grid_points = match &args.grid {
        Some(spec) => grid::parse_spec(spec)
            .ok_or_else(|| KefError::config(format!("bad --grid spec '{spec}'")))?,
        None => default_grid(eq, &law),
    };
    let opts = CheckOpts {
        tol: args.tol,
        override_moment_check: args.override_moments,
    };
    let report = run_check(
        eq,
        &grid_points,
        &run.xi.triplet,
        &run.eta.triplet,
        run.q,
        &law,
        &opts,
    )?;
    println!("{}", report.summary());
    if let Some(out) = &args.out {
        write_text(out, &serde_json::to_string_pretty(&report).unwrap())?;
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn cmd_gof(args: GofArgs) -> Result<ExitCode> {
    let run = load_run(&args.common)?;
    let params: serde_json::Value = serde_json::from_str(&args.params)
        .map_err(|e| KefError::config(format!("invalid --params JSON: {e}")))?;
    let reference = laws::reference(&args.reference, &params)?;
    let cdf = match &reference.law {
        LawRep::ClosedForm(l) => l
            .cdf
            .clone()
            .ok_or_else(|| KefError::config("reference law has no cdf; gof is not applicable"))?,
        _ => unreachable!(),
    };
    let b = batch(&run.xi, &run.eta, run.q, &run.cfg, run.sampler, run.n)?;
    let ks = est::ks(&b.values, |x| cdf(x))?;
    let threshold = args.tol.unwrap_or(1.63 / (run.n as f64).sqrt());
    let pass = ks < threshold;
    let verdict = serde_json::json!({
        "reference": reference.name,
        "applicability": reference.applicability,
        "n": run.n,
        "ks": ks,
        "threshold": threshold,
        "pass": pass,
    });
    println!(
        "gof vs {}: ks = {ks:.6}, threshold = {threshold:.6} -> {}",
        reference.name,
        if pass { "PASS" } else { "FAIL" }
    );
    if let Some(out) = &args.out {
        write_text(out, &serde_json::to_string_pretty(&verdict).unwrap())?;
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_reference(args: ReferenceArgs) -> Result<ExitCode> {
    let params: serde_json::Value = serde_json::from_str(&args.params)
        .map_err(|e| KefError::config(format!("invalid --params JSON: {e}")))?;
    let reference = laws::reference(&args.name, &params)?;
    let law = match &reference.law {
        LawRep::ClosedForm(l) => l,
        _ => unreachable!(),
    };
    let zs = grid::parse_spec(&args.grid)
        .ok_or_else(|| KefError::config(format!("bad --grid spec '{}'", args.grid)))?;

    let mut csv = String::from("z,value,series\n");
    for &z in &zs {
        if let Some(pdf) = &law.pdf {
            csv.push_str(&format!("{z},{},pdf\n", pdf(z)));
        }
        if let Some(cdf) = &law.cdf {
            csv.push_str(&format!("{z},{},cdf\n", cdf(z)));
        }
        if let Some(cf) = &law.cf {
            let v = cf(z);
            csv.push_str(&format!("{z},{},cf_re\n", v.re));
            csv.push_str(&format!("{z},{},cf_im\n", v.im));
        }
    }
    match &args.out {
        Some(out) => {
            write_text(out, &csv)?;
            println!(
                "wrote {} ({}) over {} grid points to {}",
                reference.name,
                reference.applicability,
                zs.len(),
                out.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
