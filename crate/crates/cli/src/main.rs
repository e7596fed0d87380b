use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fermat_core::embedding::DEFAULT_EIGEN_TOL;
use fermat_core::experiment::{
    run_experiment, workers_from_env, DatasetSpec, DimMode, ExperimentConfig, Method,
};
use fermat_core::io::{
    load_csv_dataset, read_labels, read_matrix_binary, read_matrix_csv, read_point_cloud,
    write_embedding, write_labels, write_matrix_binary, write_matrix_csv, write_point_cloud,
    write_predictions, write_svm_model, LoadedData, StoredMatrix,
};
use fermat_core::*;

/// Semi-supervised classification with sample Fermat distances.
#[derive(Parser, Debug)]
#[command(name = "fermat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic labeled dataset (points CSV and labels CSV).
    Gen(GenArgs),
    /// Estimate the intrinsic dimension of a point cloud (TWO-NN).
    Dim(DimArgs),
    /// Compute the Fermat distance matrix of a point cloud.
    Fermat(FermatArgs),
    /// Classical MDS embedding of a distance matrix.
    Mds(MdsArgs),
    /// Single transductive run: draw labeled points, predict the rest.
    FitPredict(FitPredictArgs),
    /// Repeated seeded trials aggregated into a result table.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    /// Two moons on the unit sphere in R^3.
    #[value(name = "sphere_i", alias = "sphere")]
    Sphere,
    /// Nonlinear lift of the sphere moons into R^500.
    #[value(name = "lift_ii", alias = "lift")]
    Lift,
    /// Sphere moons padded with Gaussian noise up to R^500.
    #[value(name = "pad_iii", alias = "pad")]
    Pad,
    /// Two von Mises-Fisher clusters on S^2.
    #[value(name = "vmf")]
    Vmf,
}

impl Model {
    fn variant(self) -> Option<TwoMoonVariant> {
        match self {
            Model::Sphere => Some(TwoMoonVariant::Sphere),
            Model::Lift => Some(TwoMoonVariant::NonlinearLift),
            Model::Pad => Some(TwoMoonVariant::NoisyPad),
            Model::Vmf => None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GraphArg {
    Complete,
    #[value(alias = "knn_mst", alias = "kmst")]
    KnnMst,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: Model,
    /// Total number of points, split evenly between the two classes.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// vMF concentration (vmf model only).
    #[arg(long, default_value_t = 5.0)]
    concentration: f64,
    /// Points CSV.
    #[arg(long)]
    out: PathBuf,
    /// Labels CSV; defaults to `<out stem>.labels.csv` next to `--out`.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DimArgs {
    #[arg(long)]
    points: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct MetricArgs {
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = GraphArg::KnnMst)]
    graph: GraphArg,
    /// Neighbor count of the kNN part; default round(sqrt(n)/2).
    #[arg(long)]
    knn_k: Option<usize>,
    /// Intrinsic dimension in the scale exponent; estimated by TWO-NN when absent.
    #[arg(long)]
    dim: Option<usize>,
}

impl MetricArgs {
    fn graph(&self) -> FermatGraph {
        match self.graph {
            GraphArg::Complete => FermatGraph::Complete,
            GraphArg::KnnMst => FermatGraph::KnnMst { k: self.knn_k },
        }
    }

    fn params(&self, cloud: &PointCloud) -> Result<FermatParams> {
        let dim = match self.dim {
            Some(d) => d,
            None => estimated_dim(cloud)?,
        };
        Ok(FermatParams::new(self.alpha, dim, self.graph())?)
    }
}

fn estimated_dim(cloud: &PointCloud) -> Result<usize> {
    let d = estimate_intrinsic_dim(cloud).context("estimating the intrinsic dimension")?;
    let r = (d.round() as usize).max(1);
    log::info!("intrinsic dimension estimate {d:.3} -> {r}");
    Ok(r)
}

#[derive(Args, Debug)]
struct FermatArgs {
    #[arg(long)]
    points: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MdsArgs {
    /// Distance matrix written by `fermat`.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Target dimension; chosen from the spectrum when absent.
    #[arg(long)]
    dim: Option<usize>,
    /// Relative eigenvalue cutoff used when `--dim` is absent.
    #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
    eigen_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SingleMethod {
    #[value(name = "fd-wknn", alias = "wknn")]
    FdWknn,
    #[value(name = "fd-svm", alias = "svm")]
    FdSvm,
    #[value(name = "naive-knn", alias = "naive")]
    NaiveKnn,
}

#[derive(Args, Debug)]
struct FitPredictArgs {
    #[arg(long)]
    points: PathBuf,
    /// One ground-truth label per point.
    #[arg(long)]
    labels: PathBuf,
    /// Indices of the labeled points, one per row; otherwise drawn with `--per-class`.
    #[arg(long, conflicts_with = "per_class")]
    labeled_idx: Option<PathBuf>,
    /// Labeled points drawn per class.
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SingleMethod::FdWknn)]
    method: SingleMethod,
    #[command(flatten)]
    metric: MetricArgs,
    /// k rule: `practical`, `theoretical`, or a fixed count.
    #[arg(long, default_value = "practical", value_parser = parse_k_rule)]
    k: KRule,
    /// Fixed bandwidth; cross-validated when absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Fixed MDS dimension for fd-svm; chosen from the spectrum when absent.
    #[arg(long)]
    svm_dim: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = embedding::DEFAULT_COST_GRID)]
    costs: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Predictions CSV (`index,label`).
    #[arg(long)]
    out: PathBuf,
    /// Per-class SVM weights (fd-svm only).
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// MDS coordinates (fd-svm only).
    #[arg(long)]
    embedding_out: Option<PathBuf>,
}

fn parse_k_rule(s: &str) -> std::result::Result<KRule, String> {
    match s {
        "practical" => Ok(KRule::Practical),
        "theoretical" => Ok(KRule::Theoretical),
        _ => match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KRule::Fixed(k)),
            _ => Err(format!(
                "expected `practical`, `theoretical` or a positive integer, got {s:?}"
            )),
        },
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        format!("unknown method {s:?} (expected fd-wknn, fd-svm, fd-dsvm or naive-knn)")
    })
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Generator model; ignored when `--points` is given.
    #[arg(long, value_enum, default_value_t = Model::Sphere)]
    model: Model,
    #[arg(long, default_value_t = 5.0)]
    concentration: f64,
    /// Pooled sample from CSV instead of a generator (requires `--labels`).
    #[arg(long, requires = "labels")]
    points: Option<PathBuf>,
    #[arg(long, requires = "points")]
    labels: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values = ["fd-wknn", "fd-svm", "naive-knn"], value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_values_t = [4.0])]
    alphas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = GraphArg::KnnMst)]
    graph: GraphArg,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Fixed intrinsic dimension; estimated per trial when absent.
    #[arg(long)]
    dim: Option<usize>,
    /// Total labeled counts to sweep, split evenly across classes.
    #[arg(long, value_delimiter = ',', default_values_t = [50])]
    n_labeled: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    n_unlabeled: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "practical", value_parser = parse_k_rule)]
    k: KRule,
    #[arg(long)]
    svm_dim: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
    eigen_tol: f64,
    #[arg(long, value_delimiter = ',', default_values_t = embedding::DEFAULT_COST_GRID)]
    costs: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Result CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the wall-time columns so the table is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl BenchArgs {
    fn config(&self) -> ExperimentConfig {
        let dataset = match (&self.points, &self.labels) {
            (Some(p), Some(l)) => DatasetSpec::Csv {
                points: p.clone(),
                labels: l.clone(),
            },
            _ => match self.model.variant() {
                Some(v) => DatasetSpec::TwoMoon(v),
                None => DatasetSpec::Vmf {
                    concentration: self.concentration,
                },
            },
        };
        ExperimentConfig {
            dataset,
            methods: self.methods.clone(),
            alphas: self.alphas.clone(),
            graph: match self.graph {
                GraphArg::Complete => FermatGraph::Complete,
                GraphArg::KnnMst => FermatGraph::KnnMst { k: self.knn_k },
            },
            dim_mode: self.dim.map_or(DimMode::Estimated, DimMode::Fixed),
            labeled_sizes: self.n_labeled.clone(),
            n_unlabeled: self.n_unlabeled,
            repetitions: self.reps,
            seed: self.seed,
            k_rule: self.k,
            svm_target: svm_target(self.svm_dim, self.eigen_tol),
            cost_grid: self.costs.clone(),
            folds: self.folds,
            workers: workers_from_env(),
        }
    }
}

fn svm_target(dim: Option<usize>, tol: f64) -> TargetDim {
    dim.map_or(TargetDim::Spectrum { tol }, TargetDim::Fixed)
}

fn default_labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("points");
    out.with_file_name(format!("{stem}.labels.csv"))
}

fn gen(a: &GenArgs) -> Result<()> {
    if a.n < 2 {
        bail!("--n must be at least 2, got {}", a.n);
    }
    let data = match a.model.variant() {
        Some(variant) => generate_two_moon(&TwoMoonModel {
            variant,
            n0: a.n - a.n / 2,
            n1: a.n / 2,
            seed: a.seed,
        })?,
        None => {
            if !a.n.is_multiple_of(2) {
                bail!("--n must be even for the vmf model, got {}", a.n);
            }
            generate_vmf_clusters(&VmfClusterModel {
                concentration: a.concentration,
                n_per_class: a.n / 2,
                seed: a.seed,
                ..Default::default()
            })?
        }
    };
    let labels_out = a
        .labels_out
        .clone()
        .unwrap_or_else(|| default_labels_path(&a.out));
    write_point_cloud(&a.out, data.cloud())?;
    write_labels(&labels_out, data.labels())?;
    log::info!(
        "wrote {} points to {} and labels to {}",
        data.cloud().len(),
        a.out.display(),
        labels_out.display()
    );
    Ok(())
}

fn dim(a: &DimArgs) -> Result<()> {
    let cloud = read_point_cloud(&a.points)?;
    let d = estimate_intrinsic_dim(&cloud)?;
    let text = format!(
        "intrinsic_dim,rounded\n{d},{}\n",
        (d.round() as usize).max(1)
    );
    match &a.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn fermat(a: &FermatArgs) -> Result<()> {
    let cloud = read_point_cloud(&a.points)?;
    let params = a.metric.params(&cloud)?;
    let m = fermat_matrix_with_workers(&cloud, &params, workers_from_env())?;
    match a.format {
        Format::Csv => write_matrix_csv(&a.out, m.matrix())?,
        Format::Binary => write_matrix_binary(&a.out, &StoredMatrix::from(&m))?,
    }
    Ok(())
}

fn mds(a: &MdsArgs) -> Result<()> {
    let dist = match a.format {
        Format::Csv => read_matrix_csv(&a.matrix)?,
        Format::Binary => read_matrix_binary(&a.matrix)?.dist,
    };
    let p = match a.dim {
        Some(p) => p,
        None => choose_target_dim(&dist, a.eigen_tol)?,
    };
    let e = classical_mds(&dist, p)?;
    log::info!(
        "embedded {} points in {} dimensions, distortion {}",
        e.n(),
        p,
        e.distortion()
    );
    write_embedding(&a.out, &e)?;
    Ok(())
}

fn fit_predict(a: &FitPredictArgs) -> Result<()> {
    let data = match load_csv_dataset(&a.points, Some(a.labels.as_path()))? {
        LoadedData::Labeled(d) => d,
        LoadedData::Unlabeled(_) => unreachable!("labels path given"),
    };
    let truth = data.full_labels().expect("fully labeled");
    let idx = match (&a.labeled_idx, a.per_class) {
        (Some(p), _) => {
            let mut idx = read_labels(p)
                .with_context(|| format!("reading labeled indices from {}", p.display()))?;
            idx.sort_unstable();
            idx
        }
        (None, Some(per)) => sample_labeled_indices(&truth, per, a.seed)?,
        (None, None) => bail!("one of --labeled-idx or --per-class is required"),
    };
    let data = data.restrict_labels(&idx)?;
    let unlabeled = data.unlabeled_idx();
    let predictions = match a.method {
        SingleMethod::NaiveKnn => {
            let k = a.k.resolve(data.n_labeled(), data.n_classes())?;
            unlabeled
                .iter()
                .map(|&u| naive_knn_predict(data.cloud().point(u), &data, k))
                .collect::<fermat_core::Result<Vec<_>>>()?
        }
        SingleMethod::FdWknn | SingleMethod::FdSvm => {
            let params = a.metric.params(data.cloud())?;
            let m = fermat_matrix_with_workers(data.cloud(), &params, workers_from_env())?;
            if a.method == SingleMethod::FdWknn {
                let cfg = FdWknnConfig {
                    k_rule: a.k,
                    sigma: a.sigma,
                    folds: a.folds,
                    seed: a.seed,
                    ..Default::default()
                };
                let fit = fd_wknn_predict(m.matrix(), &data, &cfg)?;
                log::info!("k = {}, sigma = {}", fit.k, fit.sigma);
                fit.predictions
            } else {
                let cfg = FdSvmConfig {
                    target: svm_target(a.svm_dim, DEFAULT_EIGEN_TOL),
                    cost_grid: a.costs.clone(),
                    folds: a.folds,
                    seed: a.seed,
                };
                let fit = fd_svm_predict(m.matrix(), &data, &cfg)?;
                log::info!("p = {}, cost = {}", fit.embedding.p(), fit.cost);
                if let Some(p) = &a.model_out {
                    write_svm_model(p, &fit.model)?;
                }
                if let Some(p) = &a.embedding_out {
                    write_embedding(p, &fit.embedding)?;
                }
                fit.predictions
            }
        }
    };
    write_predictions(&a.out, &unlabeled, &predictions)?;
    if !unlabeled.is_empty() {
        let hits = unlabeled
            .iter()
            .zip(&predictions)
            .filter(|(&i, &p)| truth[i] == p)
            .count();
        eprintln!(
            "accuracy {:.4} on {} unlabeled points",
            hits as f64 / unlabeled.len() as f64,
            unlabeled.len()
        );
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let table = run_experiment(&a.config())?;
    match &a.out {
        Some(p) => table.write_csv(p, !a.no_timing)?,
        None => print!("{}", table.to_csv(!a.no_timing)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Dim(a) => dim(a),
        Command::Fermat(a) => fermat(a),
        Command::Mds(a) => mds(a),
        Command::FitPredict(a) => fit_predict(a),
        Command::Bench(a) => bench(a),
    }
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("fermat: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fermat: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
