//! Weighted k-NN on Fermat distances, the Euclidean k-NN baseline, and
//! cross-validated bandwidth selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{FermatError, Result};
use crate::matrix::SquareMatrix;
use crate::point_graph::{euclidean, k_smallest};

/// Neighbor count and softmin temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WknnConfig {
    pub k: usize,
    pub sigma: f64,
}

/// Rule for the neighbor count of the weighted classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KRule {
    /// `[n_l / (1.5 K)]`.
    #[default]
    Practical,
    /// `floor(n_l / ln n_l)`, the rate-optimal order.
    Theoretical,
    Fixed(usize),
}

impl KRule {
    pub fn resolve(&self, n_labeled: usize, n_classes: usize) -> Result<usize> {
        match *self {
            KRule::Practical => default_k(n_labeled, n_classes),
            KRule::Theoretical => Ok(theoretical_k(n_labeled)),
            KRule::Fixed(k) => {
                if k == 0 || k > n_labeled {
                    Err(FermatError::InvalidK { k, max: n_labeled })
                } else {
                    Ok(k)
                }
            }
        }
    }
}

/// `round(n_l / (1.5 K))`, clamped to `[1, n_l]`.
pub fn default_k(n_labeled: usize, n_classes: usize) -> Result<usize> {
    if n_labeled == 0 {
        return Err(FermatError::EmptyLabeled);
    }
    if n_classes < 2 {
        return Err(FermatError::InvalidParameter(format!(
            "class count must be >= 2, got {n_classes}"
        )));
    }
    let k = (n_labeled as f64 / (1.5 * n_classes as f64)).round() as usize;
    Ok(k.clamp(1, n_labeled))
}

/// `floor(n_l / ln n_l)`, clamped to `[1, n_l]`.
pub fn theoretical_k(n_labeled: usize) -> usize {
    if n_labeled < 3 {
        return 1;
    }
    let n = n_labeled as f64;
    ((n / n.ln()).floor() as usize).clamp(1, n_labeled)
}

/// Normalized softmin weights `exp(-d_i / sigma) / sum_j exp(-d_j / sigma)`.
///
/// Distances are shifted by their minimum first; the normalized weights are
/// unchanged and underflow is avoided.
pub fn softmin_weights(dists: &[f64], sigma: f64) -> Vec<f64> {
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = dists.iter().map(|d| (-(d - min) / sigma).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn check_aligned(dists: &[f64], labels: &[usize]) -> Result<()> {
    if dists.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    if dists.len() != labels.len() {
        return Err(FermatError::DimensionMismatch {
            expected: labels.len(),
            got: dists.len(),
        });
    }
    Ok(())
}

/// Class with the largest score; the smallest class id wins ties.
fn argmax_class(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Weighted k-NN vote over the labeled sample.
///
/// `dist_to_labeled[m]` is the distance from the query to labeled point `m`.
/// Neighbors are ordered by distance, then by position. A neighbor at
/// distance zero decides the label outright.
pub fn weighted_knn_predict(
    dist_to_labeled: &[f64],
    labels: &[usize],
    cfg: &WknnConfig,
) -> Result<usize> {
    check_aligned(dist_to_labeled, labels)?;
    if cfg.k == 0 || cfg.k > labels.len() {
        return Err(FermatError::InvalidK {
            k: cfg.k,
            max: labels.len(),
        });
    }
    if !(cfg.sigma > 0.0) {
        return Err(FermatError::InvalidParameter(format!(
            "sigma must be > 0, got {}",
            cfg.sigma
        )));
    }
    let nn = k_smallest(dist_to_labeled, cfg.k, None);
    if dist_to_labeled[nn[0]] == 0.0 {
        return Ok(labels[nn[0]]);
    }
    let d: Vec<f64> = nn.iter().map(|&m| dist_to_labeled[m]).collect();
    let w = softmin_weights(&d, cfg.sigma);
    let n_classes = nn.iter().map(|&m| labels[m]).max().unwrap() + 1;
    let mut scores = vec![0.0; n_classes];
    for (&m, wi) in nn.iter().zip(w) {
        scores[labels[m]] += wi;
    }
    Ok(argmax_class(&scores))
}

/// Majority vote among the `k` Euclidean-nearest labeled points.
pub fn naive_knn_predict(query: &[f64], data: &LabeledDataset, k: usize) -> Result<usize> {
    let idx = data.labeled_idx();
    if idx.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    let cloud = data.cloud();
    if query.len() != cloud.dim() {
        return Err(FermatError::DimensionMismatch {
            expected: cloud.dim(),
            got: query.len(),
        });
    }
    if k == 0 || k > idx.len() {
        return Err(FermatError::InvalidK { k, max: idx.len() });
    }
    let dists: Vec<f64> = idx
        .iter()
        .map(|&i| euclidean(query, cloud.point(i)))
        .collect();
    let mut votes = vec![0.0; data.n_classes()];
    for m in k_smallest(&dists, k, None) {
        votes[data.labels()[m]] += 1.0;
    }
    Ok(argmax_class(&votes))
}

/// Stratified fold assignment: within each class the members are shuffled
/// and dealt round-robin, continuing the deal across classes so fold sizes
/// stay balanced.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut fold_of = vec![0; labels.len()];
    let mut deal = 0usize;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = deal % folds;
            deal += 1;
        }
    }
    fold_of
}

/// Mean held-out accuracy of `predict` over folds; empty folds are skipped.
///
/// `predict(train, test)` returns predictions for `test`.
pub(crate) fn cv_accuracy<F>(
    labels: &[usize],
    fold_of: &[usize],
    folds: usize,
    mut predict: F,
) -> Option<f64>
where
    F: FnMut(&[usize], &[usize]) -> Vec<usize>,
{
    let mut total = 0.0;
    let mut used = 0usize;
    for f in 0..folds {
        let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
        let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
        if test.is_empty() || train.is_empty() {
            log::warn!(
                "skipping degenerate fold {f} ({} test, {} train)",
                test.len(),
                train.len()
            );
            continue;
        }
        let pred = predict(&train, &test);
        let hits = test
            .iter()
            .zip(&pred)
            .filter(|(&i, &p)| labels[i] == p)
            .count();
        total += hits as f64 / test.len() as f64;
        used += 1;
    }
    (used > 0).then(|| total / used as f64)
}

/// Picks the bandwidth with the best stratified cross-validated accuracy.
///
/// `labeled_dist` holds distances among the labeled points. Ties go to the
/// larger `sigma`. Within a fold the neighbor count is capped at the number
/// of training points.
pub fn select_sigma_cv(
    labeled_dist: &SquareMatrix,
    labels: &[usize],
    k: usize,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(FermatError::InvalidParameter("empty sigma grid".into()));
    }
    if let Some(bad) = grid.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(FermatError::InvalidParameter(format!(
            "sigma grid value {bad} is not a positive finite number"
        )));
    }
    if folds < 2 {
        return Err(FermatError::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if labeled_dist.n() != labels.len() {
        return Err(FermatError::DimensionMismatch {
            expected: labels.len(),
            got: labeled_dist.n(),
        });
    }
    if labels.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    if k == 0 {
        return Err(FermatError::InvalidK {
            k,
            max: labels.len(),
        });
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let fold_of = stratified_folds(labels, folds, seed);
    let mut best: Option<(f64, f64)> = None;
    for &sigma in grid {
        let acc = cv_accuracy(labels, &fold_of, folds, |train, test| {
            let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let cfg = WknnConfig {
                k: k.min(train.len()),
                sigma,
            };
            test.iter()
                .map(|&t| {
                    let d: Vec<f64> = train.iter().map(|&i| labeled_dist.get(t, i)).collect();
                    weighted_knn_predict(&d, &train_labels, &cfg).expect("validated inputs")
                })
                .collect()
        });
        let Some(acc) = acc else { continue };
        best = match best {
            Some((a, s)) if a > acc || (a == acc && s >= sigma) => Some((a, s)),
            _ => Some((acc, sigma)),
        };
    }
    Ok(match best {
        Some((_, s)) => s,
        None => {
            log::warn!("every fold was degenerate; using the largest sigma");
            grid.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
    })
}

/// Eight log-spaced values over `[0.1 m, 10 m]`, with `m` the median
/// distance from a labeled point to its `k`-th nearest other labeled point.
pub fn default_sigma_grid(labeled_dist: &SquareMatrix, k: usize) -> Vec<f64> {
    let n = labeled_dist.n();
    let mut kth: Vec<f64> = Vec::with_capacity(n);
    if n >= 2 {
        let k = k.clamp(1, n - 1);
        for i in 0..n {
            let nn = k_smallest(labeled_dist.row(i), k, Some(i));
            kth.push(labeled_dist.get(i, nn[k - 1]));
        }
    }
    kth.sort_by(f64::total_cmp);
    let m = match kth.len() {
        0 => 0.0,
        l if l % 2 == 1 => kth[l / 2],
        l => 0.5 * (kth[l / 2 - 1] + kth[l / 2]),
    };
    let m = if m > 0.0 && m.is_finite() { m } else { 1.0 };
    (0..8)
        .map(|i| m * 10f64.powf(-1.0 + 2.0 * i as f64 / 7.0))
        .collect()
}

/// Settings for transductive weighted k-NN on a precomputed distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FdWknnConfig {
    pub k_rule: KRule,
    /// Fixed bandwidth; `None` selects it by cross-validation.
    pub sigma: Option<f64>,
    /// CV grid; `None` uses [`default_sigma_grid`].
    pub sigma_grid: Option<Vec<f64>>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for FdWknnConfig {
    fn default() -> Self {
        Self {
            k_rule: KRule::Practical,
            sigma: None,
            sigma_grid: None,
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdWknnFit {
    pub k: usize,
    pub sigma: f64,
    pub unlabeled_idx: Vec<usize>,
    pub predictions: Vec<usize>,
}

/// Predicts every unlabeled point of `data` from the pooled distance matrix.
pub fn fd_wknn_predict(
    matrix: &SquareMatrix,
    data: &LabeledDataset,
    cfg: &FdWknnConfig,
) -> Result<FdWknnFit> {
    if matrix.n() != data.cloud().len() {
        return Err(FermatError::DimensionMismatch {
            expected: data.cloud().len(),
            got: matrix.n(),
        });
    }
    let idx = data.labeled_idx();
    if idx.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    let labels = data.labels();
    let k = cfg.k_rule.resolve(idx.len(), data.n_classes())?;
    let sigma = match cfg.sigma {
        Some(s) => s,
        None => {
            let sub = matrix.submatrix(idx);
            let grid = cfg
                .sigma_grid
                .clone()
                .unwrap_or_else(|| default_sigma_grid(&sub, k));
            select_sigma_cv(&sub, labels, k, &grid, cfg.folds, cfg.seed)?
        }
    };
    let wk = WknnConfig { k, sigma };
    let unlabeled_idx = data.unlabeled_idx();
    let predictions = unlabeled_idx
        .iter()
        .map(|&u| {
            let d: Vec<f64> = idx.iter().map(|&i| matrix.get(u, i)).collect();
            weighted_knn_predict(&d, labels, &wk)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FdWknnFit {
        k,
        sigma,
        unlabeled_idx,
        predictions,
    })
}
