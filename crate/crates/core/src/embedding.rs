//! Classical multidimensional scaling of distance matrices and the
//! MDS-plus-linear-SVM classifier.
//!
//! Negative eigenvalues of the double-centered matrix are clamped to zero, so
//! non-Euclidean inputs embed with a nonzero (reported) distortion.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::classifiers::{cv_accuracy, stratified_folds};
use crate::dataset::LabeledDataset;
use crate::error::{FermatError, Result};
use crate::fermat::{fermat_matrix_with_workers, FermatMatrix, FermatParams};
use crate::matrix::SquareMatrix;
use crate::point_graph::euclidean;
use crate::svm::{svm_predict, train_linear_svm, LinearSvmModel};

/// Points in `R^p` produced by classical MDS.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    p: usize,
    coords: Vec<f64>,
    eigvals: Vec<f64>,
    distortion: f64,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.p)
    }

    /// Retained eigenvalues, nonincreasing, clamped at zero.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// Largest relative error `|e_ij - d_ij| / d_ij` over pairs (absolute
    /// error where `d_ij = 0`).
    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Least-squares placement of a new point from its distances to the
    /// embedded points: the linear solution of `|y - x_i|^2 = delta_i^2`.
    /// Exact for a point of a Euclidean configuration embedded at full rank.
    pub fn place(&self, dists: &[f64]) -> Result<Vec<f64>> {
        if dists.len() != self.n {
            return Err(FermatError::DimensionMismatch {
                expected: self.n,
                got: dists.len(),
            });
        }
        let mut y = vec![0.0; self.p];
        for (i, &d) in dists.iter().enumerate() {
            let x = self.point(i);
            let r = x.iter().map(|v| v * v).sum::<f64>() - d * d;
            for (yk, xk) in y.iter_mut().zip(x) {
                *yk += xk * r;
            }
        }
        for (yk, &lam) in y.iter_mut().zip(&self.eigvals) {
            *yk = if lam > 0.0 { *yk / (2.0 * lam) } else { 0.0 };
        }
        Ok(y)
    }
}

/// `-0.5 J D^2 J` with `J` the centering projector.
fn double_center(dist: &SquareMatrix) -> DMatrix<f64> {
    let n = dist.n();
    let sq = DMatrix::from_fn(n, n, |i, j| {
        let d = dist.get(i, j);
        d * d
    });
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    })
}

fn check_input(dist: &SquareMatrix) -> Result<()> {
    if dist.n() < 2 {
        return Err(FermatError::TooFewPoints(dist.n()));
    }
    dist.validate_distance(1e-12)
}

/// Eigenvalues of the double-centered matrix, descending (unclamped).
pub fn centered_spectrum(dist: &SquareMatrix) -> Result<Vec<f64>> {
    check_input(dist)?;
    let mut ev: Vec<f64> = double_center(dist)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Classical MDS into `p` dimensions.
///
/// Axis signs are fixed so the largest-magnitude coordinate of every axis is
/// positive (first such point on ties).
pub fn classical_mds(dist: &SquareMatrix, p: usize) -> Result<Embedding> {
    check_input(dist)?;
    let n = dist.n();
    if p == 0 || p > n - 1 {
        return Err(FermatError::InvalidTargetDim { p, max: n - 1 });
    }
    let eig = SymmetricEigen::new(double_center(dist));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut coords = vec![0.0; n * p];
    let mut eigvals = Vec::with_capacity(p);
    for (axis, &col) in order.iter().take(p).enumerate() {
        let lam = eig.eigenvalues[col].max(0.0);
        eigvals.push(lam);
        let s = lam.sqrt();
        let v = eig.eigenvectors.column(col);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i * p + axis] = sign * s * v[i];
        }
    }
    let mut emb = Embedding {
        n,
        p,
        coords,
        eigvals,
        distortion: 0.0,
    };
    emb.distortion = distortion(&emb, dist);
    Ok(emb)
}

fn distortion(emb: &Embedding, dist: &SquareMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..emb.n {
        for j in (i + 1)..emb.n {
            let d = dist.get(i, j);
            let e = emb.distance(i, j);
            let err = if d > 0.0 { (e - d).abs() / d } else { e };
            worst = worst.max(err);
        }
    }
    worst
}

/// Number of centered eigenvalues above `tol` times the largest, capped at
/// `n - 2` (at least 1).
pub fn choose_target_dim(dist: &SquareMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(FermatError::InvalidParameter(format!(
            "eigenvalue tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let ev = centered_spectrum(dist)?;
    let top = ev[0];
    let count = if top > 0.0 {
        ev.iter().filter(|&&l| l > tol * top).count()
    } else {
        0
    };
    let cap = dist.n().saturating_sub(2).max(1);
    Ok(count.clamp(1, cap))
}

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

pub const DEFAULT_COST_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// How the MDS target dimension is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetDim {
    Fixed(usize),
    /// [`choose_target_dim`] with the given tolerance.
    Spectrum {
        tol: f64,
    },
}

impl Default for TargetDim {
    fn default() -> Self {
        TargetDim::Spectrum {
            tol: DEFAULT_EIGEN_TOL,
        }
    }
}

impl TargetDim {
    pub fn resolve(&self, dist: &SquareMatrix) -> Result<usize> {
        match *self {
            TargetDim::Fixed(p) => Ok(p),
            TargetDim::Spectrum { tol } => choose_target_dim(dist, tol),
        }
    }
}

/// Settings for the MDS-plus-SVM classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSvmConfig {
    pub target: TargetDim,
    pub cost_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for FdSvmConfig {
    fn default() -> Self {
        Self {
            target: TargetDim::default(),
            cost_grid: DEFAULT_COST_GRID.to_vec(),
            folds: 5,
            seed: 0,
        }
    }
}

/// Output of the MDS-plus-SVM classifier.
#[derive(Debug, Clone)]
pub struct FdSvmFit {
    pub embedding: Embedding,
    pub model: LinearSvmModel,
    pub cost: f64,
    /// Predicted labels for `unlabeled_idx`, in the same order.
    pub unlabeled_idx: Vec<usize>,
    pub predictions: Vec<usize>,
}

/// Picks an SVM cost by stratified CV on the labeled rows; ties go to the
/// smaller cost.
pub fn select_cost_cv<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(FermatError::InvalidParameter("empty cost grid".into()));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if folds < 2 {
        return Err(FermatError::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let fold_of = stratified_folds(labels, folds, seed);
    let mut best: Option<(f64, f64)> = None;
    for &cost in grid {
        let mut failure = None;
        let acc = cv_accuracy(labels, &fold_of, folds, |train, test| {
            let tx: Vec<&[f64]> = train.iter().map(|&i| x[i].as_ref()).collect();
            let ty: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            match train_linear_svm(&tx, &ty, cost) {
                Ok(m) => test
                    .iter()
                    .map(|&i| svm_predict(&m, x[i].as_ref()).unwrap_or(usize::MAX))
                    .collect(),
                Err(e) => {
                    failure = Some(e);
                    vec![usize::MAX; test.len()]
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let Some(acc) = acc else { continue };
        best = match best {
            Some((a, c)) if a > acc || (a == acc && c <= cost) => Some((a, c)),
            _ => Some((acc, cost)),
        };
    }
    Ok(best.map_or(grid[0], |(_, c)| c))
}

/// Embeds the pooled sample from a precomputed matrix, trains the SVM on the
/// labeled rows and predicts the unlabeled ones.
pub fn fd_svm_predict(
    matrix: &SquareMatrix,
    data: &LabeledDataset,
    cfg: &FdSvmConfig,
) -> Result<FdSvmFit> {
    if matrix.n() != data.cloud().len() {
        return Err(FermatError::DimensionMismatch {
            expected: data.cloud().len(),
            got: matrix.n(),
        });
    }
    if data.n_labeled() == 0 {
        return Err(FermatError::EmptyLabeled);
    }
    let p = cfg.target.resolve(matrix)?;
    let embedding = classical_mds(matrix, p)?;
    let x: Vec<&[f64]> = data
        .labeled_idx()
        .iter()
        .map(|&i| embedding.point(i))
        .collect();
    let y = data.labels();
    let cost = select_cost_cv(&x, y, &cfg.cost_grid, cfg.folds, cfg.seed)?;
    let model = train_linear_svm(&x, y, cost)?;
    let unlabeled_idx = data.unlabeled_idx();
    let predictions = unlabeled_idx
        .iter()
        .map(|&i| svm_predict(&model, embedding.point(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FdSvmFit {
        embedding,
        model,
        cost,
        unlabeled_idx,
        predictions,
    })
}

/// Full pipeline: Fermat matrix on the pooled cloud, joint embedding, SVM.
pub fn fd_svm_pipeline(
    data: &LabeledDataset,
    params: &FermatParams,
    cfg: &FdSvmConfig,
) -> Result<FdSvmFit> {
    let fm: FermatMatrix = fermat_matrix_with_workers(data.cloud(), params, 1)?;
    fd_svm_predict(fm.matrix(), data, cfg)
}
