//! Seeded experiment harness: repeated transductive trials, paired across
//! methods, aggregated into a result table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::classifiers::{default_k, fd_wknn_predict, naive_knn_predict, FdWknnConfig, KRule};
use crate::datagen::{
    estimate_intrinsic_dim, generate_two_moon, generate_vmf_clusters, sample_labeled_indices,
    TwoMoonModel, TwoMoonVariant, VmfClusterModel,
};
use crate::dataset::LabeledDataset;
use crate::embedding::{fd_svm_predict, FdSvmConfig, TargetDim, DEFAULT_COST_GRID};
use crate::error::{FermatError, Result};
use crate::fermat::{fermat_matrix, FermatGraph, FermatParams};
use crate::io::load_csv_dataset;

/// Environment variable holding the worker-thread count (default 1).
pub const THREADS_ENV: &str = "FERMAT_THREADS";

/// Worker count from [`THREADS_ENV`]; 1 when unset or unparsable.
pub fn workers_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    TwoMoon(TwoMoonVariant),
    Vmf {
        concentration: f64,
    },
    /// Pooled sample from disk; every point must carry a ground-truth label.
    Csv {
        points: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    FdWknn,
    FdSvm,
    /// MDS target dimension equal to the intrinsic dimension.
    FdDSvm,
    NaiveKnn,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::FdWknn,
        Method::FdSvm,
        Method::FdDSvm,
        Method::NaiveKnn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::FdWknn => "FD-wkNN",
            Method::FdSvm => "FD-SVM",
            Method::FdDSvm => "FD-dSVM",
            Method::NaiveKnn => "naive-kNN",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "fdwknn" | "wknn" => Some(Method::FdWknn),
            "fdsvm" | "svm" => Some(Method::FdSvm),
            "fddsvm" | "dsvm" => Some(Method::FdDSvm),
            "naiveknn" | "naive" | "knn" => Some(Method::NaiveKnn),
            _ => None,
        }
    }

    fn uses_fermat(&self) -> bool {
        !matches!(self, Method::NaiveKnn)
    }
}

/// How the intrinsic dimension in the scale exponent is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimMode {
    Fixed(usize),
    /// TWO-NN on the pooled cloud, rounded, at least 1.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub graph: FermatGraph,
    pub dim_mode: DimMode,
    /// Total labeled counts to sweep; each is split evenly across classes.
    pub labeled_sizes: Vec<usize>,
    /// Unlabeled count for generated data (ignored for CSV input).
    pub n_unlabeled: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub k_rule: KRule,
    pub svm_target: TargetDim,
    pub cost_grid: Vec<f64>,
    pub folds: usize,
    /// Repetitions run concurrently on this many threads.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::TwoMoon(TwoMoonVariant::Sphere),
            methods: vec![Method::FdWknn, Method::FdSvm, Method::NaiveKnn],
            alphas: vec![4.0],
            graph: FermatGraph::KnnMst { k: None },
            dim_mode: DimMode::Estimated,
            labeled_sizes: vec![50],
            n_unlabeled: 300,
            repetitions: 20,
            seed: 0,
            k_rule: KRule::Practical,
            svm_target: TargetDim::default(),
            cost_grid: DEFAULT_COST_GRID.to_vec(),
            folds: 5,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FermatError::InvalidParameter(m.into()));
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.alphas.is_empty() {
            return bad("no alpha values");
        }
        if self.labeled_sizes.is_empty() || self.labeled_sizes.contains(&0) {
            return bad("labeled sizes must be >= 1");
        }
        if let DimMode::Fixed(0) = self.dim_mode {
            return Err(FermatError::InvalidIntrinsicDim);
        }
        for &a in &self.alphas {
            FermatParams::new(a, 1, self.graph)?;
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `rep`: `seed XOR mix(rep)`.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    seed ^ mix(rep as u64)
}

fn derive(seed: u64, tag: u64) -> u64 {
    mix(seed ^ mix(tag))
}

/// Outcome of one method in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub n_labeled: usize,
    pub alpha: f64,
    /// Accuracy over the unlabeled points; `None` when there are none.
    pub accuracy: Option<f64>,
    /// Graph + distance + classification time.
    pub seconds: f64,
    /// Graph + distance time alone (zero for methods without distances).
    pub distance_seconds: f64,
}

fn load_pool(config: &ExperimentConfig, n_labeled: usize, seed: u64) -> Result<LabeledDataset> {
    let n_u = config.n_unlabeled;
    let halves = |total: usize| (total - total / 2, total / 2);
    match &config.dataset {
        DatasetSpec::TwoMoon(variant) => {
            let (l0, l1) = halves(n_labeled);
            let (u0, u1) = halves(n_u);
            generate_two_moon(&TwoMoonModel {
                variant: *variant,
                n0: l0 + u0,
                n1: l1 + u1,
                seed,
            })
        }
        DatasetSpec::Vmf { concentration } => {
            let total = n_labeled + n_u;
            if !total.is_multiple_of(2) {
                return Err(FermatError::InvalidParameter(
                    "vMF pools need an even total size".into(),
                ));
            }
            generate_vmf_clusters(&VmfClusterModel {
                concentration: *concentration,
                n_per_class: total / 2,
                seed,
                ..Default::default()
            })
        }
        DatasetSpec::Csv { points, labels } => {
            match load_csv_dataset(points, Some(labels.as_path()))? {
                crate::io::LoadedData::Labeled(d) => Ok(d),
                crate::io::LoadedData::Unlabeled(_) => unreachable!("labels path given"),
            }
        }
    }
}

fn accuracy(pred: &[usize], idx: &[usize], truth: &[usize]) -> Option<f64> {
    if idx.is_empty() {
        return None;
    }
    let hits = pred
        .iter()
        .zip(idx)
        .filter(|(p, &i)| **p == truth[i])
        .count();
    Some(hits as f64 / idx.len() as f64)
}

/// One seeded trial for a given labeled size: every configured method and
/// alpha runs on the same pooled sample and the same labeled draw.
pub fn run_trial_for(
    config: &ExperimentConfig,
    rep_index: usize,
    n_labeled: usize,
) -> Result<Vec<TrialRecord>> {
    let base = rep_seed(config.seed, rep_index);
    let seed = derive(base, n_labeled as u64);
    let pool = load_pool(config, n_labeled, derive(seed, 1))?;
    let truth = pool.full_labels().expect("pool is fully labeled");
    let k_classes = pool.n_classes();
    if !n_labeled.is_multiple_of(k_classes) {
        return Err(FermatError::InvalidParameter(format!(
            "labeled size {n_labeled} is not divisible by {k_classes} classes"
        )));
    }
    let idx = sample_labeled_indices(&truth, n_labeled / k_classes, derive(seed, 2))?;
    let data = pool.restrict_labels(&idx)?;
    let unlabeled = data.unlabeled_idx();
    let cv_seed = derive(seed, 3);

    let needs_fermat = config.methods.iter().any(Method::uses_fermat);
    let dim = match config.dim_mode {
        DimMode::Fixed(d) => d,
        DimMode::Estimated if needs_fermat => {
            (estimate_intrinsic_dim(data.cloud())?.round() as usize).max(1)
        }
        DimMode::Estimated => 1,
    };

    let mut records = Vec::new();
    for &alpha in &config.alphas {
        let (matrix, distance_seconds) = if needs_fermat {
            let t = Instant::now();
            let params = FermatParams::new(alpha, dim, config.graph)?;
            let m = fermat_matrix(data.cloud(), &params)?;
            (Some(m), t.elapsed().as_secs_f64())
        } else {
            (None, 0.0)
        };
        for &method in &config.methods {
            let t = Instant::now();
            let pred: Vec<usize> = match method {
                Method::FdWknn => {
                    let cfg = FdWknnConfig {
                        k_rule: config.k_rule,
                        folds: config.folds,
                        seed: cv_seed,
                        ..Default::default()
                    };
                    fd_wknn_predict(matrix.as_ref().unwrap().matrix(), &data, &cfg)?.predictions
                }
                Method::FdSvm | Method::FdDSvm => {
                    let target = if method == Method::FdDSvm {
                        TargetDim::Fixed(dim.min(data.cloud().len() - 1))
                    } else {
                        config.svm_target
                    };
                    let cfg = FdSvmConfig {
                        target,
                        cost_grid: config.cost_grid.clone(),
                        folds: config.folds,
                        seed: cv_seed,
                    };
                    fd_svm_predict(matrix.as_ref().unwrap().matrix(), &data, &cfg)?.predictions
                }
                Method::NaiveKnn => {
                    let k = match config.k_rule {
                        KRule::Practical => default_k(n_labeled, k_classes)?,
                        rule => rule.resolve(n_labeled, k_classes)?,
                    };
                    unlabeled
                        .iter()
                        .map(|&u| naive_knn_predict(data.cloud().point(u), &data, k))
                        .collect::<Result<_>>()?
                }
            };
            let own = t.elapsed().as_secs_f64();
            let (seconds, dist_s) = if method.uses_fermat() {
                (own + distance_seconds, distance_seconds)
            } else {
                (own, 0.0)
            };
            records.push(TrialRecord {
                method,
                n_labeled,
                alpha,
                accuracy: accuracy(&pred, &unlabeled, &truth),
                seconds,
                distance_seconds: dist_s,
            });
        }
    }
    Ok(records)
}

/// Every labeled size of the sweep for repetition `rep_index`.
pub fn run_trial(config: &ExperimentConfig, rep_index: usize) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for &n_l in &config.labeled_sizes {
        let recs = run_trial_for(config, rep_index, n_l).map_err(|e| FermatError::Trial {
            rep: rep_index,
            n_labeled: n_l,
            source: Box::new(e),
        })?;
        out.extend(recs);
    }
    Ok(out)
}

/// Aggregate over repetitions for one (method, n_labeled, alpha) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub graph: FermatGraph,
    pub n_labeled: usize,
    pub alpha: f64,
    /// Per-repetition accuracies, in repetition order.
    pub accuracies: Vec<Option<f64>>,
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation (n - 1 divisor); 0 for a single repetition.
    pub std_accuracy: Option<f64>,
    pub mean_seconds: f64,
    pub mean_distance_seconds: f64,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

const NO_EVAL: &str = "NA";

fn graph_name(g: &FermatGraph) -> String {
    match g {
        FermatGraph::Complete => "complete".into(),
        FermatGraph::KnnMst { k: None } => "knn-mst".into(),
        FermatGraph::KnnMst { k: Some(k) } => format!("knn-mst(k={k})"),
    }
}

impl ResultTable {
    pub fn row(&self, method: Method, n_labeled: usize, alpha: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n_labeled == n_labeled && r.alpha == alpha)
    }

    /// CSV text with a header row. Timing columns vary between runs;
    /// `with_timing = false` leaves a byte-reproducible table.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut s =
            String::from("method,graph,n_labeled,alpha,mean_accuracy,std_accuracy,repetitions");
        if with_timing {
            s.push_str(",mean_seconds,mean_distance_seconds");
        }
        s.push('\n');
        let opt = |v: Option<f64>| v.map_or(NO_EVAL.to_string(), |x| x.to_string());
        for r in &self.rows {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{}",
                r.method.name(),
                graph_name(&r.graph),
                r.n_labeled,
                r.alpha,
                opt(r.mean_accuracy),
                opt(r.std_accuracy),
                r.accuracies.len()
            );
            if with_timing {
                let _ = write!(s, ",{},{}", r.mean_seconds, r.mean_distance_seconds);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, with_timing: bool) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(with_timing)).map_err(|e| FermatError::io(path, e))
    }
}

fn aggregate(config: &ExperimentConfig, per_rep: Vec<Vec<TrialRecord>>) -> ResultTable {
    let mut keys: Vec<(Method, usize, f64)> = per_rep
        .iter()
        .flatten()
        .map(|r| (r.method, r.n_labeled, r.alpha))
        .collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    keys.dedup();
    let rows = keys
        .into_iter()
        .map(|(method, n_labeled, alpha)| {
            let recs: Vec<&TrialRecord> = per_rep
                .iter()
                .filter_map(|rep| {
                    rep.iter().find(|r| {
                        r.method == method && r.n_labeled == n_labeled && r.alpha == alpha
                    })
                })
                .collect();
            let accuracies: Vec<Option<f64>> = recs.iter().map(|r| r.accuracy).collect();
            let evaluated: Vec<f64> = accuracies.iter().flatten().copied().collect();
            let ms = mean_std(&evaluated);
            let count = recs.len() as f64;
            ResultRow {
                method,
                graph: config.graph,
                n_labeled,
                alpha,
                mean_accuracy: ms.map(|m| m.0),
                std_accuracy: ms.map(|m| m.1),
                accuracies,
                mean_seconds: recs.iter().map(|r| r.seconds).sum::<f64>() / count,
                mean_distance_seconds: recs.iter().map(|r| r.distance_seconds).sum::<f64>() / count,
            }
        })
        .collect();
    ResultTable { rows }
}

/// Runs every repetition and aggregates. Repetitions run on
/// `config.workers` threads; the table does not depend on the count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let reps: Vec<usize> = (0..config.repetitions).collect();
    let per_rep: Vec<Vec<TrialRecord>> = if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| FermatError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            reps.par_iter()
                .map(|&r| run_trial(config, r))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        reps.iter()
            .map(|&r| run_trial(config, r))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(aggregate(config, per_rep))
}
