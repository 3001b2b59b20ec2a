use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sbl::{
    evaluate, generate_problem, peek_field, read_problem, write_problem, Complex64, Field,
    FieldKind, GenConfig, ProblemFile, ProblemInstance,
};
use sbl_harness::{
    preset, run_experiment, write_aggregate, write_trials, Engine, EstimatorSpec,
    ExperimentConfig, PRESETS,
};

#[derive(Parser)]
#[command(name = "sbl-bench", version, about = "Sparse Bayesian learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write aggregate.csv and trials.csv.
    Experiment(ExperimentArgs),
    /// Run one estimator on one problem.
    Solve(SolveArgs),
    /// Write a synthetic problem file.
    Gen(GenArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration name.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file; without it a default-sized problem is drawn from `--seed`.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, value_parser = parse_engine)]
    estimator: Engine,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Noise precision; defaults to the one in the problem file, else estimated.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the estimate (one entry per line); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    l: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// SNR in dB.
    #[arg(long, default_value_t = 30.0)]
    snr: f64,
    #[arg(long, default_value = "complex")]
    field: FieldKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit noise precision (required for K = 0).
    #[arg(long)]
    noise_precision: Option<f64>,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(a) => experiment(a),
        Command::Solve(a) => solve(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => preset(name).expect("clap restricts preset names"),
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let report = pool.build()?.install(|| run_experiment(&cfg))?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_aggregate(fs::File::create(args.out.join("aggregate.csv"))?, &report.aggregate)?;
    write_trials(fs::File::create(args.out.join("trials.csv"))?, &report.trials)?;
    let failed = report.failed_trials();
    if failed > 0 {
        eprintln!(
            "warning: {failed} of {} estimator runs failed; see the status column of trials.csv",
            report.trials.len()
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let spec = EstimatorSpec {
        epsilon: args.epsilon,
        eta: args.eta,
        a: args.a,
        b: args.b,
        ..EstimatorSpec::new(args.estimator)
    };
    match &args.problem {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            match peek_field(&text)? {
                FieldKind::Real => solve_file::<f64>(&spec, &args, read_problem(&text)?),
                FieldKind::Complex => solve_file::<Complex64>(&spec, &args, read_problem(&text)?),
            }
        }
        None => {
            let cfg = GenConfig { seed: args.seed, ..GenConfig::default() };
            let p: ProblemInstance<Complex64> = generate_problem(&cfg)?;
            solve_file(&spec, &args, ProblemFile::from(&p))
        }
    }
}

fn solve_file<S: Field<Real = f64>>(
    spec: &EstimatorSpec,
    args: &SolveArgs,
    file: ProblemFile<S>,
) -> Result<ExitCode> {
    let lambda = args.lambda.or(file.lambda);
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            bail!("noise precision must be positive, got {l}");
        }
    }
    let fit = spec.fit(&file.obs, lambda)?;
    println!("estimator: {}", spec.label());
    println!("k_hat: {}", fit.active.len());
    println!("iterations: {}", fit.iterations);
    println!("flag: {}", serde_json::to_value(fit.flag)?.as_str().unwrap_or_default());
    println!("lambda: {}", fit.lambda);
    let truth = match (file.alpha_true, file.lambda) {
        (Some(a), Some(l)) => Some(ProblemInstance::new(file.obs, a, l)?),
        _ => None,
    };
    if let Some(p) = &truth {
        let m = evaluate(&fit.alpha, p, fit.iterations)?;
        println!("mse: {}", m.mse);
        println!("oracle_mse: {}", sbl::oracle_mse(p)?);
        println!("support_exact: {}", m.support_exact);
    }
    let mut text = String::new();
    for a in &fit.alpha {
        match S::KIND {
            FieldKind::Real => text.push_str(&format!("{}\n", a.re())),
            FieldKind::Complex => text.push_str(&format!("{},{}\n", a.re(), a.im())),
        }
    }
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            println!("alpha:");
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let cfg = GenConfig {
        m: args.m,
        l: args.l,
        k: args.k,
        snr_db: args.snr,
        field: args.field,
        seed: args.seed,
        noise_precision: args.noise_precision,
    };
    let text = match args.field {
        FieldKind::Real => write_problem(&ProblemFile::from(&generate_problem::<f64>(&cfg)?)),
        FieldKind::Complex => write_problem(&ProblemFile::from(&generate_problem::<Complex64>(&cfg)?)),
    };
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}
