//! One-vs-rest linear SVM with L2 regularization and hinge loss.
//!
//! Each binary problem is solved by cyclic dual coordinate descent. The
//! intercept is learned as the weight of a constant feature whose value is
//! the mean row norm of the training data, so rescaling every coordinate by
//! `c` and the cost by `1/c^2` yields the same decision function.

use crate::error::{FermatError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Relative duality-gap tolerance.
    pub tol: f64,
    pub max_epochs: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_epochs: 100_000,
        }
    }
}

/// Convergence record of one binary solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Dual objective `0.5 |w|^2 - sum(a)` after each epoch; nonincreasing.
    pub dual_objective: Vec<f64>,
    /// Primal objective `0.5 |w|^2 + C sum(hinge)` after each epoch.
    pub primal_objective: Vec<f64>,
    pub duality_gap: f64,
    /// Largest projected dual gradient in the last epoch.
    pub kkt_residual: f64,
    pub epochs: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bias_feature<R: AsRef<[f64]>>(x: &[R]) -> f64 {
    let mean = x
        .iter()
        .map(|r| dot(r.as_ref(), r.as_ref()).sqrt())
        .sum::<f64>()
        / x.len() as f64;
    if mean > 0.0 && mean.is_finite() {
        mean
    } else {
        1.0
    }
}

/// Solves `min 0.5 |w|^2 + C sum max(0, 1 - y_i (w.x_i + b))` for `y_i` in {-1, +1}.
pub fn train_binary_svm<R: AsRef<[f64]>>(
    x: &[R],
    y: &[f64],
    cost: f64,
    opts: &SvmOptions,
) -> Result<BinaryFit> {
    if x.len() != y.len() {
        return Err(FermatError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    if !(cost > 0.0) || !cost.is_finite() {
        return Err(FermatError::InvalidParameter(format!(
            "cost must be positive, got {cost}"
        )));
    }
    let p = x[0].as_ref().len();
    let bias = bias_feature(x);
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let r = r.as_ref();
            let mut v = Vec::with_capacity(p + 1);
            v.extend_from_slice(r);
            v.push(bias);
            v
        })
        .collect();
    if let Some(r) = rows.iter().find(|r| r.len() != p + 1) {
        return Err(FermatError::DimensionMismatch {
            expected: p,
            got: r.len() - 1,
        });
    }
    let n = rows.len();
    // Margins are tracked through the Gram matrix: f_i = w . x_i, O(n) per step.
    let gram: Vec<f64> = (0..n * n)
        .map(|ij| dot(&rows[ij / n], &rows[ij % n]))
        .collect();
    let mut alpha = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut dual_hist = Vec::new();
    let mut primal_hist = Vec::new();
    let mut gap = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    while epochs < opts.max_epochs {
        epochs += 1;
        residual = 0.0f64;
        for i in 0..n {
            let g = y[i] * f[i] - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == cost {
                g.max(0.0)
            } else {
                g
            };
            residual = residual.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / gram[i * n + i]).clamp(0.0, cost);
                let step = (alpha[i] - old) * y[i];
                for (fj, kij) in f.iter_mut().zip(&gram[i * n..(i + 1) * n]) {
                    *fj += step * kij;
                }
            }
        }
        let half_norm = 0.5 * (0..n).map(|i| alpha[i] * y[i] * f[i]).sum::<f64>();
        let hinge: f64 = (0..n).map(|i| (1.0 - y[i] * f[i]).max(0.0)).sum();
        let primal = half_norm + cost * hinge;
        let dual = half_norm - alpha.iter().sum::<f64>();
        dual_hist.push(dual);
        primal_hist.push(primal);
        gap = primal + dual;
        if gap <= opts.tol * primal.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("svm did not reach tolerance after {epochs} epochs (gap {gap:.3e})");
    }
    let mut w = vec![0.0; p + 1];
    for (i, r) in rows.iter().enumerate() {
        let c = alpha[i] * y[i];
        if c != 0.0 {
            for (wj, xj) in w.iter_mut().zip(r) {
                *wj += c * xj;
            }
        }
    }
    let intercept = w[p] * bias;
    w.truncate(p);
    Ok(BinaryFit {
        weights: w,
        intercept,
        dual_objective: dual_hist,
        primal_objective: primal_hist,
        duality_gap: gap,
        kkt_residual: residual,
        epochs,
        converged,
    })
}

/// Per-class affine scorers; prediction is the arg-max score.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    weights: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    cost: f64,
    dim: usize,
    constant: Option<usize>,
}

impl LinearSvmModel {
    pub fn from_parts(weights: Vec<Vec<f64>>, intercepts: Vec<f64>, cost: f64) -> Result<Self> {
        let dim = weights.first().map_or(0, |w| w.len());
        if weights.len() != intercepts.len() || weights.iter().any(|w| w.len() != dim) {
            return Err(FermatError::InvalidParameter(
                "ragged svm weight table".into(),
            ));
        }
        Ok(Self {
            weights,
            intercepts,
            cost,
            dim,
            constant: None,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    /// `Some(class)` when training saw a single class.
    pub fn constant_class(&self) -> Option<usize> {
        self.constant
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(FermatError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }
}

/// One-vs-rest training; the class count is `max(label) + 1`.
pub fn train_linear_svm<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    cost: f64,
) -> Result<LinearSvmModel> {
    train_linear_svm_with(x, labels, cost, &SvmOptions::default())
}

pub fn train_linear_svm_with<R: AsRef<[f64]>>(
    x: &[R],
    labels: &[usize],
    cost: f64,
    opts: &SvmOptions,
) -> Result<LinearSvmModel> {
    if x.len() != labels.len() {
        return Err(FermatError::DimensionMismatch {
            expected: x.len(),
            got: labels.len(),
        });
    }
    if x.is_empty() {
        return Err(FermatError::EmptyLabeled);
    }
    let dim = x[0].as_ref().len();
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        log::warn!(
            "svm training data has a single class ({}); model is constant",
            present[0]
        );
        let mut intercepts = vec![-1.0; n_classes];
        intercepts[present[0]] = 1.0;
        return Ok(LinearSvmModel {
            weights: vec![vec![0.0; dim]; n_classes],
            intercepts,
            cost,
            dim,
            constant: Some(present[0]),
        });
    }
    let mut weights = Vec::with_capacity(n_classes);
    let mut intercepts = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == c { 1.0 } else { -1.0 })
            .collect();
        let fit = train_binary_svm(x, &y, cost, opts)?;
        weights.push(fit.weights);
        intercepts.push(fit.intercept);
    }
    Ok(LinearSvmModel {
        weights,
        intercepts,
        cost,
        dim,
        constant: None,
    })
}

/// Arg-max class score; the smallest class id wins ties.
pub fn svm_predict(model: &LinearSvmModel, x: &[f64]) -> Result<usize> {
    let s = model.scores(x)?;
    let mut best = 0;
    for c in 1..s.len() {
        if s[c] > s[best] {
            best = c;
        }
    }
    Ok(best)
}
