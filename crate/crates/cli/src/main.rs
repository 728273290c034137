//! `simulability`: quantify how much an m-outcome quantum measurement
//! exceeds the power of n-outcome-simulable ones.
//!
//! Subcommands compute the robustness SDP pair, discrimination advantages,
//! see-saw searches for maximal advantage, outcome-count certificates,
//! generalized prepare-and-measure scores, and catalog instances. All
//! results are printed as a JSON run report on stdout; `catalog` prints the
//! raw object so its output pipes directly into the other subcommands.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 64 usage.

mod report;

use std::fs;
use std::io::Read;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use report::{InputRecord, RunReport};
use simulability::advantage::{seesaw, SeesawOptions};
use simulability::catalog::{make, InstanceKind, InstanceSpec};
use simulability::discrimination::{advantage, certify_outcomes};
use simulability::generalized::{score, ScoreCoefficients};
use simulability::quantum::{Ensemble, MeasurementAssemblage, Povm};
use simulability::robustness::{
    build_dual, effective_outcome_number_with_tol, robustness_with_tol, GAP_TOL, SIMULABLE_TOL,
};
use simulability::sdp::SOLVER_TOL;

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "simulability",
    version,
    about = "Outcome-number simulability of quantum measurements",
    disable_help_subcommand = true
)]
struct Cli {
    /// Threads for independent sub-solves (see-saw restarts). Defaults to
    /// the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness of a POVM against the n-outcome-simulable set.
    Robustness(RobustnessArgs),
    /// Discrimination advantage of a POVM on a given ensemble.
    Discriminate(DiscriminateArgs),
    /// See-saw search for the maximal advantage at fixed (d, m, n).
    Seesaw(SeesawArgs),
    /// Certify a lower bound on the outcome count from an observed score.
    Certify(CertifyArgs),
    /// Minimal n such that the POVM is n-outcome simulable.
    EffectiveOutcomes(EffectiveOutcomesArgs),
    /// Generalized prepare-and-measure score of an assemblage.
    Score(ScoreArgs),
    /// Emit a catalog POVM or ensemble as JSON.
    Catalog(CatalogArgs),
}

#[derive(Args)]
struct RobustnessArgs {
    /// POVM JSON file, or - for stdin.
    #[arg(long)]
    povm: String,
    /// Size of the simulating measurements.
    #[arg(long)]
    n: usize,
    /// Solver tolerance (duality gap and feasibility).
    #[arg(long, default_value_t = SOLVER_TOL)]
    tol: f64,
    /// Write the dual program's lowered standard form to this file.
    #[arg(long)]
    dual_dump: Option<String>,
}

#[derive(Args)]
struct DiscriminateArgs {
    /// Ensemble JSON file, or - for stdin.
    #[arg(long)]
    ensemble: String,
    /// POVM JSON file.
    #[arg(long)]
    povm: String,
    /// Size of the simulating measurements.
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct SeesawArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Convergence threshold on the ratio improvement.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Seed for the random restart measurements.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the best trace as CSV (iteration, ratio).
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Ensemble JSON file, or - for stdin.
    #[arg(long)]
    ensemble: String,
    /// Observed guessing probability.
    #[arg(long)]
    observed: f64,
    /// Statistical slack added to every threshold.
    #[arg(long, default_value_t = 0.0)]
    stat_tol: f64,
}

#[derive(Args)]
struct EffectiveOutcomesArgs {
    /// POVM JSON file, or - for stdin.
    #[arg(long)]
    povm: String,
    /// Solver tolerance (duality gap and feasibility).
    #[arg(long, default_value_t = SOLVER_TOL)]
    tol: f64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Score coefficients JSON file ({"X", "Y", "B", "c"}).
    #[arg(long)]
    coeffs: String,
    /// Preparations as an ensemble JSON file (priors absorbed into traces).
    #[arg(long)]
    preps: String,
    /// Measurement assemblage JSON file ({"dim", "settings"}).
    #[arg(long)]
    assemblage: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogKind {
    ProjectiveBasis,
    Trine,
    SicQubit,
    UniformOrthogonalEnsemble,
    RandomPovm,
    RandomEnsemble,
}

impl From<CatalogKind> for InstanceKind {
    fn from(kind: CatalogKind) -> Self {
        match kind {
            CatalogKind::ProjectiveBasis => InstanceKind::ProjectiveBasis,
            CatalogKind::Trine => InstanceKind::Trine,
            CatalogKind::SicQubit => InstanceKind::SicQubit,
            CatalogKind::UniformOrthogonalEnsemble => InstanceKind::UniformOrthogonalEnsemble,
            CatalogKind::RandomPovm => InstanceKind::RandomPovm,
            CatalogKind::RandomEnsemble => InstanceKind::RandomEnsemble,
        }
    }
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long, value_enum)]
    kind: CatalogKind,
    /// Hilbert space dimension (kind-dependent default).
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Outcome or state count (kind-dependent default).
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Seed for the random kinds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw random-ensemble priors from a flat Dirichlet.
    #[arg(long, default_value_t = false)]
    dirichlet_priors: bool,
    /// Also write the JSON to this file.
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            eprint!("{err}");
            return ExitCode::from(code);
        }
    };

    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not size the thread pool: {err}");
            return ExitCode::from(EXIT_INPUT);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Solver breakdowns exit 3; everything else is an input problem.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<simulability::Error>() {
        Some(e) if !e.is_input_error() => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Robustness(args) => cmd_robustness(args),
        Command::Discriminate(args) => cmd_discriminate(args),
        Command::Seesaw(args) => cmd_seesaw(args),
        Command::Certify(args) => cmd_certify(args),
        Command::EffectiveOutcomes(args) => cmd_effective_outcomes(args),
        Command::Score(args) => cmd_score(args),
        Command::Catalog(args) => cmd_catalog(args),
    }
}

/// Reads a JSON input from a path or stdin (`-`).
fn load<T: DeserializeOwned>(path: &str, what: &str) -> anyhow::Result<(T, InputRecord)> {
    let (bytes, source) = if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .context("reading stdin")?;
        (buf, "stdin".to_string())
    } else {
        (
            fs::read(path).with_context(|| format!("reading {what} file {path}"))?,
            path.to_string(),
        )
    };
    let value: T =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {what} from {source}"))?;
    Ok((value, InputRecord::new(&source, &bytes)))
}

fn cmd_robustness(args: RobustnessArgs) -> anyhow::Result<()> {
    let (povm, record): (Povm, _) = load(&args.povm, "POVM")?;
    if let Some(path) = &args.dual_dump {
        let dual = build_dual(&povm, args.n)?;
        let dump = dual.standard_form_json()?;
        fs::write(path, serde_json::to_string_pretty(&dump)?)
            .with_context(|| format!("writing dual dump to {path}"))?;
    }
    let mut result = robustness_with_tol(&povm, args.n, args.tol)?;
    let warnings = std::mem::take(&mut result.warnings);
    RunReport::new("robustness", &result)
        .with_input("povm", record)
        .with_tolerance("solver", args.tol)
        .with_tolerance("duality_gap", GAP_TOL)
        .with_tolerance("simulable", SIMULABLE_TOL)
        .with_warnings(warnings)
        .print()
}

fn cmd_discriminate(args: DiscriminateArgs) -> anyhow::Result<()> {
    let (ensemble, ens_record): (Ensemble, _) = load(&args.ensemble, "ensemble")?;
    let (povm, povm_record): (Povm, _) = load(&args.povm, "POVM")?;
    let result = advantage(&ensemble, &povm, args.n)?;
    RunReport::new("discriminate", &result)
        .with_input("ensemble", ens_record)
        .with_input("povm", povm_record)
        .with_tolerance("solver", 1e-9)
        .print()
}

fn cmd_seesaw(args: SeesawArgs) -> anyhow::Result<()> {
    let options = SeesawOptions {
        restarts: args.restarts,
        max_iter: args.max_iter,
        tol: args.tol,
        seed: args.seed,
    };
    let mut trace = seesaw(args.d, args.m, args.n, &options)?;
    if let Some(path) = &args.csv {
        let mut csv = String::from("iteration,ratio\n");
        for (i, it) in trace.iterations.iter().enumerate() {
            csv.push_str(&format!("{i},{:.17}\n", it.ratio));
        }
        fs::write(path, csv).with_context(|| format!("writing CSV to {path}"))?;
    }
    let warnings = std::mem::take(&mut trace.warnings);
    RunReport::new("seesaw", &trace)
        .with_tolerance("convergence", args.tol)
        .with_tolerance("solver", SOLVER_TOL)
        .with_tolerance("bound_slack", 1e-6)
        .with_warnings(warnings)
        .print()
}

fn cmd_certify(args: CertifyArgs) -> anyhow::Result<()> {
    let (ensemble, record): (Ensemble, _) = load(&args.ensemble, "ensemble")?;
    let result = certify_outcomes(&ensemble, args.observed, args.stat_tol)?;
    RunReport::new("certify", &result)
        .with_input("ensemble", record)
        .with_tolerance("stat_tol", args.stat_tol)
        .with_tolerance("threshold_accuracy", 1e-8)
        .print()
}

fn cmd_effective_outcomes(args: EffectiveOutcomesArgs) -> anyhow::Result<()> {
    let (povm, record): (Povm, _) = load(&args.povm, "POVM")?;
    let result = effective_outcome_number_with_tol(&povm, args.tol)?;
    RunReport::new("effective-outcomes", &result)
        .with_input("povm", record)
        .with_tolerance("solver", args.tol)
        .with_tolerance("simulable", SIMULABLE_TOL)
        .print()
}

fn cmd_score(args: ScoreArgs) -> anyhow::Result<()> {
    let (coeffs, coeffs_record): (ScoreCoefficients, _) = load(&args.coeffs, "coefficients")?;
    let (preps_ensemble, preps_record): (Ensemble, _) = load(&args.preps, "preparations")?;
    let (assemblage, asm_record): (MeasurementAssemblage, _) =
        load(&args.assemblage, "assemblage")?;
    let preparations = preps_ensemble.to_preparations();
    let value = score(&coeffs, &preparations, &assemblage)?;
    RunReport::new("score", serde_json::json!({ "score": value }))
        .with_input("coeffs", coeffs_record)
        .with_input("preps", preps_record)
        .with_input("assemblage", asm_record)
        .print()
}

fn cmd_catalog(args: CatalogArgs) -> anyhow::Result<()> {
    let spec = InstanceSpec {
        kind: args.kind.into(),
        d: args.d,
        m: args.m,
        seed: args.seed,
        dirichlet_priors: args.dirichlet_priors,
    };
    let item = make(&spec)?;
    let text = serde_json::to_string_pretty(&item)?;
    if let Some(path) = &args.out {
        fs::write(path, &text).with_context(|| format!("writing catalog item to {path}"))?;
    }
    // Raw object on stdout so it pipes straight into the other subcommands.
    println!("{text}");
    if args.out.is_none()
        && matches!(
            spec.kind,
            InstanceKind::RandomPovm | InstanceKind::RandomEnsemble
        )
    {
        log::info!("seeded instance; rerunning with the same spec reproduces it bit for bit");
    }
    Ok(())
}
