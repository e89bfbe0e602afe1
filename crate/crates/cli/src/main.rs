use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use sparj::analysis::{classify_sparsity, compute_metrics, edge_probabilities, export_dot, posterior_mean};
use sparj::em::{em_estimate, EmOptions};
use sparj::experiment::{build_regime, load_csv_series, run_experiment, ExperimentFile, ExperimentSpec, YearFilter};
use sparj::lgssm::KnownParams;
use sparj::model_space::SparsityModel;
use sparj::rng::{derive_labeled_seed, rng_from_seed};
use sparj::sampler::read_chain_jsonl;
use sparj::Result;

#[derive(Parser)]
#[command(
    name = "sparj",
    version,
    about = "Sparse transition matrices for linear-Gaussian state-space models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate one synthetic dataset and write observations as CSV.
    Simulate(SimulateArgs),
    /// Run an experiment (synthetic regime or CSV data) end to end.
    Run(RunArgs),
    /// EM estimate of A (and optionally Q) for a CSV series.
    Em(EmArgs),
    /// Posterior summaries of a chain file.
    Analyze(AnalyzeArgs),
    /// Edge-probability graph of one or more chain files in DOT format.
    ExportDot(DotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "Iso3")]
    regime: String,
    #[arg(long)]
    dx: Option<usize>,
    #[arg(long = "T", default_value_t = 100)]
    t_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which dataset of the experiment to generate.
    #[arg(long, default_value_t = 0)]
    run: usize,
    /// Observations CSV (columns y1..yd).
    #[arg(long)]
    out: PathBuf,
    /// Also write the true A and mask as JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (flat TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Regime, when no config file is given.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    dx: Option<usize>,
    #[arg(long = "T")]
    t_len: Option<usize>,
    #[arg(long)]
    n_runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also run the dense MCMC baseline.
    #[arg(long)]
    baseline: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    year: Option<i64>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long)]
    pi0: Option<f64>,
    #[arg(long)]
    pi_minus1: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_j: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_c: Option<f64>,
    #[arg(long)]
    n_iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args)]
struct EmArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    #[arg(long)]
    year: Option<i64>,
    #[arg(long, default_value = "Year")]
    year_column: String,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    /// Observation noise variance (R = r I).
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Estimate Q jointly with A.
    #[arg(long)]
    estimate_q: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    chain: PathBuf,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    /// Truth JSON written by `simulate --truth`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct DotArgs {
    #[arg(required = true)]
    chains: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    #[arg(long)]
    no_self_loops: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut spec = ExperimentSpec::for_regime(args.regime.parse()?, args.dx);
    spec.t_len = args.t_len;
    spec.seed = args.seed;
    spec.validate()?;
    let inst = build_regime(&spec, args.run, args.t_len)?;
    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record((1..=inst.y.dim()).map(|i| format!("y{i}")))?;
    for t in 0..inst.y.len() {
        w.write_record(inst.y.at(t).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    if let (Some(path), Some(a), Some(mask)) = (args.truth, &inst.a_true, &inst.true_mask) {
        let truth = json!({ "dx": spec.dx, "A": row_major(a), "mask": mask });
        serde_json::to_writer_pretty(File::create(path)?, &truth)?;
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut file: ExperimentFile = match &args.config {
        Some(path) => {
            toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| sparj::Error::Config(e.to_string()))?
        }
        None => ExperimentFile::default(),
    };
    if let Some(r) = args.regime {
        file.regime = r;
    }
    if file.regime.is_empty() {
        return Err(sparj::Error::Config("give --config or --regime".into()));
    }
    macro_rules! over {
        ($($src:expr => $dst:ident),* $(,)?) => { $(if let Some(v) = $src { file.$dst = Some(v); })* };
    }
    over! {
        args.dx => dx, args.t_len => t_len, args.n_runs => n_runs, args.seed => seed,
        args.output_dir => output_dir, args.threads => threads, args.csv => csv,
        args.columns => columns, args.year => year,
        args.sampler.pi0 => pi0, args.sampler.pi_minus1 => pi_minus1, args.sampler.lambda => lambda_prior,
        args.sampler.lambda_j => lambda_j, args.sampler.sigma => sigma_walk, args.sampler.sigma_c => sigma_completion,
        args.sampler.n_iters => n_iters, args.sampler.burn_in => burn_in,
    }
    if args.baseline {
        file.baseline = Some(true);
    }
    let spec = file.resolve()?;
    let report = run_experiment(&spec)?;
    for res in &report.results {
        for row in &res.summary {
            let m = row.metrics;
            let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.3}"));
            println!(
                "T={:<4} {:<6} rmse={} spec={} recall={} prec={} f1={} time={:.2}s failed={}",
                row.t_len,
                row.method.to_string(),
                fmt(m.map(|m| m.rmse)),
                fmt(m.map(|m| m.specificity)),
                fmt(m.map(|m| m.recall)),
                fmt(m.and_then(|m| m.precision)),
                fmt(m.map(|m| m.f1)),
                row.mean_time_seconds,
                row.n_failed
            );
        }
        println!("results in {}", res.dir.display());
    }
    Ok(())
}

fn em(args: EmArgs) -> Result<()> {
    let filter = args.year.map(|year| YearFilter {
        column: args.year_column.clone(),
        year,
    });
    let y = load_csv_series(&args.csv, &args.columns, filter.as_ref())?;
    let d = y.dim();
    let known = KnownParams {
        h: DMatrix::identity(d, d),
        q: DMatrix::identity(d, d),
        r: DMatrix::identity(d, d) * args.r,
        x0_mean: y.at(0),
        p0: DMatrix::identity(d, d),
    };
    let mut rng = rng_from_seed(derive_labeled_seed(args.seed, 0, "em"));
    let a_init = DMatrix::from_fn(d, d, |_, _| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
    });
    let opts = EmOptions {
        n_iters: args.iters,
        estimate_a: true,
        estimate_q: args.estimate_q,
    };
    let res = em_estimate(&y, &known, &a_init, &known.q, opts)?;
    let out = json!({
        "columns": args.columns,
        "A": row_major(&res.a_hat),
        "Q": row_major(&res.q_hat),
        "loglik": res.loglik_trace,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let chain = read_chain_jsonl(BufReader::new(File::open(&args.chain)?))?;
    let mean = posterior_mean(&chain, args.burn_in)?;
    let mask = classify_sparsity(&chain, args.burn_in)?;
    let mut out = json!({
        "samples": chain.len() - args.burn_in,
        "posterior_mean": row_major(&mean),
        "mask": mask,
    });
    if let Some(path) = args.truth {
        let truth: serde_json::Value = serde_json::from_reader(File::open(path)?)?;
        let dx = mask.dx();
        let a: Vec<f64> = serde_json::from_value(truth["A"].clone())?;
        let true_mask: SparsityModel = serde_json::from_value(truth["mask"].clone())?;
        if a.len() != dx * dx {
            return Err(sparj::Error::Dimension("truth A does not match the chain".into()));
        }
        let a_true = DMatrix::from_row_slice(dx, dx, &a);
        out["metrics"] = serde_json::to_value(compute_metrics(&mask, &true_mask, &mean, &a_true)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn export(args: DotArgs) -> Result<()> {
    let chains = args
        .chains
        .iter()
        .map(|p| read_chain_jsonl(BufReader::new(File::open(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let graph = edge_probabilities(&chains, args.burn_in, args.labels)?;
    let dot = export_dot(&graph, args.threshold, !args.no_self_loops);
    match args.out {
        Some(path) => BufWriter::new(File::create(path)?).write_all(dot.as_bytes())?,
        None => io::stdout().write_all(dot.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a),
        Command::Em(a) => em(a),
        Command::Analyze(a) => analyze(a),
        Command::ExportDot(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
