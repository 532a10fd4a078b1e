//! Command-line front end: dataset generation, clustering runs, label
//! evaluation, and the scaling benchmark.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use msc::affinity::{ssc_affinity, tsc_affinity, SscParams, TscParams};
use msc::data::LabelVector;
use msc::error::Error;
use msc::eval::{bench_scaling, clustering_error, BenchPoint};
use msc::io;
use msc::pipeline::{msc_cluster, BaseMethod, CombineRule, MscConfig, SamplingMode};
use msc::spectral::{spectral_cluster, SpectralParams};
use msc::synth::{generate_uoms, Assignment, UomsSpec};

#[derive(Parser)]
#[command(name = "msc", version, about = "Subspace clustering for matrix-shaped data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset directory and write labels.csv + report.json.
    Cluster(ClusterArgs),
    /// Generate a synthetic dataset directory from the UOMS model.
    Synth(SynthArgs),
    /// Compare a labels file against the manifest ground truth.
    Eval(EvalArgs),
    /// Time vectorized TSC against a single MSC trial over a size grid.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Method {
    Tsc,
    Ssc,
    MscTsc,
    MscSsc,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Combine {
    Addition,
    Threshold,
    Quantile,
    Projection,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Args)]
struct ClusterArgs {
    /// Dataset directory containing manifest.tsv.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for labels.csv and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Combine::Projection)]
    combine: Combine,
    /// TSC neighbor count; default max(3, N/(6K)).
    #[arg(long)]
    q: Option<usize>,
    /// Threshold-combine neighbor count; default N/K - 1.
    #[arg(long)]
    qc: Option<usize>,
    /// Quantile-combine level; default = trials.
    #[arg(long)]
    l: Option<usize>,
    /// SSC regularization strength.
    #[arg(long, default_value_t = 20.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    outliers: Switch,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    affine: Switch,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; default <out>/report.json.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    clusters: usize,
    /// Column-fiber length D_c.
    #[arg(long = "Du")]
    du_ambient: usize,
    /// Row-fiber length D_r.
    #[arg(long = "Dv")]
    dv_ambient: usize,
    /// Column latent dimension.
    #[arg(long = "du")]
    du_latent: usize,
    /// Row latent dimension.
    #[arg(long = "dv")]
    dv_latent: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels file, one id per line in manifest order.
    #[arg(long)]
    pred: PathBuf,
    /// Dataset directory with ground-truth labels in manifest.tsv.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// "default" or a comma list of Dc:Dr:N cells.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::ThresholdOutOfRange { .. }
        | Error::QuantileOutOfRange { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn run_cluster(args: &ClusterArgs) -> msc::Result<()> {
    let dataset = io::load_dataset(&args.input)?;
    let n = dataset.len();
    let k = args.clusters;
    if k < 1 || n < k {
        return Err(Error::InvalidConfig(format!("need 1 <= K <= N, got K={k} N={n}")));
    }

    let ssc_params = SscParams {
        alpha: args.alpha,
        outlier_rejection: args.outliers.is_on(),
        affine: args.affine.is_on(),
        ..Default::default()
    };
    let combine_rule = match args.combine {
        Combine::Addition => CombineRule::Addition,
        Combine::Threshold => CombineRule::Threshold { q_c: args.qc },
        Combine::Quantile => CombineRule::Quantile { level: args.l },
        Combine::Projection => CombineRule::Projection,
    };
    let resolved_l = args.l.unwrap_or(args.trials);
    let resolved_qc = args.qc.unwrap_or_else(|| msc::pipeline::default_threshold_qc(n, k));
    let resolved_q = args.q.unwrap_or_else(|| TscParams::default_q(n, k));

    let spectral_params = SpectralParams::new(k, args.seed);
    let (labels, timings, skipped): (LabelVector, io::Timings, Vec<usize>) = match args.method {
        Method::Tsc => {
            let x = dataset.vectorize();
            let start = Instant::now();
            let w = tsc_affinity(&x, &TscParams { q: resolved_q })?;
            let affinity = start.elapsed().as_secs_f64() * 1e3;
            let start = Instant::now();
            let labels = spectral_cluster(&w, &spectral_params)?;
            let spectral = start.elapsed().as_secs_f64() * 1e3;
            (
                labels,
                io::Timings { sampling: 0.0, affinity, combine: 0.0, spectral },
                Vec::new(),
            )
        }
        Method::Ssc => {
            let x = dataset.vectorize();
            let start = Instant::now();
            let w = ssc_affinity(&x, &ssc_params)?;
            let affinity = start.elapsed().as_secs_f64() * 1e3;
            let start = Instant::now();
            let labels = spectral_cluster(&w, &spectral_params)?;
            let spectral = start.elapsed().as_secs_f64() * 1e3;
            (
                labels,
                io::Timings { sampling: 0.0, affinity, combine: 0.0, spectral },
                Vec::new(),
            )
        }
        Method::MscTsc | Method::MscSsc => {
            let base_method = if args.method == Method::MscTsc {
                BaseMethod::Tsc { q: args.q }
            } else {
                BaseMethod::Ssc(ssc_params.clone())
            };
            let cfg = MscConfig {
                clusters: k,
                trials: args.trials,
                base_method,
                combine: combine_rule,
                sampling: SamplingMode::WithoutReplacement,
                seed: args.seed,
                kmeans_restarts: 20,
            };
            let (labels, report) = msc_cluster(&dataset, &cfg)?;
            (
                labels,
                io::Timings {
                    sampling: report.sampling_ms,
                    affinity: report.affinity_ms,
                    combine: report.combine_ms,
                    spectral: report.spectral_ms,
                },
                report.skipped_trials.iter().map(|(t, _)| *t).collect(),
            )
        }
    };

    let error = dataset
        .labels()
        .map(|truth| {
            let truth = LabelVector::new(truth.to_vec(), k)?;
            Ok::<f64, Error>(clustering_error(&labels, &truth, k)?.clustering_error)
        })
        .transpose()?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        message: e.to_string(),
    })?;
    io::write_labels(&args.out.join("labels.csv"), labels.assignments())?;

    let method_name = match args.method {
        Method::Tsc => "tsc",
        Method::Ssc => "ssc",
        Method::MscTsc => "msc-tsc",
        Method::MscSsc => "msc-ssc",
    };
    let combine_name = match args.combine {
        Combine::Addition => "addition",
        Combine::Threshold => "threshold",
        Combine::Quantile => "quantile",
        Combine::Projection => "projection",
    };
    let report = io::RunReport {
        config: json!({
            "input": args.input.display().to_string(),
            "method": method_name,
            "clusters": k,
            "trials": args.trials,
            "combine": combine_name,
            "q": resolved_q,
            "qc": resolved_qc,
            "l": resolved_l,
            "alpha": args.alpha,
            "outliers": args.outliers.is_on(),
            "affine": args.affine.is_on(),
            "seed": args.seed,
        }),
        error,
        timings_ms: timings,
        skipped_trials: skipped,
        seed: args.seed,
    };
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.join("report.json"));
    io::write_json(&report_path, &report)?;
    if let Some(e) = error {
        println!("clustering error: {e}");
    }
    println!("labels written to {}", args.out.join("labels.csv").display());
    Ok(())
}

fn run_synth(args: &SynthArgs) -> msc::Result<()> {
    let spec = UomsSpec {
        clusters: args.clusters,
        points: args.n,
        col_dim: args.du_ambient,
        row_dim: args.dv_ambient,
        col_latent: args.du_latent,
        row_latent: args.dv_latent,
        noise_sigma: args.sigma,
        seed: args.seed,
        assignment: Assignment::Balanced,
    };
    let (dataset, _model) = generate_uoms(&spec)?;
    io::save_dataset(&args.out, &dataset)?;
    io::write_json(
        &args.out.join("model.json"),
        &io::ModelRecord {
            model: "uoms".into(),
            clusters: spec.clusters,
            points: spec.points,
            col_dim: spec.col_dim,
            row_dim: spec.row_dim,
            col_latent: spec.col_latent,
            row_latent: spec.row_latent,
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        },
    )?;
    println!("wrote {} items to {}", args.n, args.out.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> msc::Result<()> {
    let dataset = io::load_dataset(&args.input)?;
    let truth = dataset
        .labels()
        .ok_or_else(|| Error::InvalidConfig("dataset has no ground-truth labels".into()))?;
    let pred = io::read_labels(&args.pred)?;
    let k = truth.iter().chain(pred.iter()).max().map_or(1, |&m| m + 1);
    let pred = LabelVector::new(pred, k)?;
    let truth = LabelVector::new(truth.to_vec(), k)?;
    let report = clustering_error(&pred, &truth, k)?;
    println!("clustering error: {}", report.clustering_error);
    println!("matched permutation: {:?}", report.matched_permutation);
    Ok(())
}

fn parse_grid(spec: &str) -> msc::Result<Vec<BenchPoint>> {
    if spec == "default" {
        return Ok(vec![
            BenchPoint { col_dim: 48, row_dim: 48, points: 120, trials: 1 },
            BenchPoint { col_dim: 96, row_dim: 96, points: 120, trials: 1 },
        ]);
    }
    spec.split(',')
        .map(|cell| {
            let parts: Vec<usize> = cell
                .split(':')
                .map(|p| {
                    p.parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad grid cell {cell:?}")))
                })
                .collect::<msc::Result<_>>()?;
            match parts[..] {
                [dc, dr, n] => Ok(BenchPoint { col_dim: dc, row_dim: dr, points: n, trials: 1 }),
                _ => Err(Error::InvalidConfig(format!(
                    "grid cell {cell:?} must be Dc:Dr:N"
                ))),
            }
        })
        .collect()
}

fn run_bench(args: &BenchArgs) -> msc::Result<()> {
    let grid = parse_grid(&args.grid)?;
    let result = bench_scaling(&grid, args.repeats, args.seed)?;
    let mut out = String::from("Dc,Dr,N,vectorized_tsc_secs,msc_trial_secs\n");
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.point.col_dim,
            row.point.row_dim,
            row.point.points,
            row.vectorized_tsc_secs,
            row.msc_trial_secs
        ));
    }
    std::fs::write(&args.out, out).map_err(|e| Error::Io {
        path: args.out.display().to_string(),
        message: e.to_string(),
    })?;
    println!("wrote {} rows to {}", result.rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(args) => run_cluster(args),
        Command::Synth(args) => run_synth(args),
        Command::Eval(args) => run_eval(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
