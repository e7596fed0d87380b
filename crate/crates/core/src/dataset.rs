use crate::error::{FermatError, Result};
use crate::point_graph::PointCloud;

/// A pooled sample in which some points carry class labels.
///
/// `labels[m]` is the class of point `labeled_idx[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    cloud: PointCloud,
    labels: Vec<usize>,
    labeled_idx: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    /// `n_classes = None` infers `max(label) + 1` (at least 2).
    pub fn new(
        cloud: PointCloud,
        labeled_idx: Vec<usize>,
        labels: Vec<usize>,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        if labeled_idx.len() != labels.len() {
            return Err(FermatError::InvalidLabels(format!(
                "{} labeled indices but {} labels",
                labeled_idx.len(),
                labels.len()
            )));
        }
        let n = cloud.len();
        let mut seen = vec![false; n];
        for &i in &labeled_idx {
            if i >= n {
                return Err(FermatError::VertexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(FermatError::InvalidLabels(format!(
                    "index {i} labeled twice"
                )));
            }
        }
        let inferred = labels.iter().max().map_or(0, |m| m + 1).max(2);
        let n_classes = n_classes.unwrap_or(inferred);
        if n_classes < 2 {
            return Err(FermatError::InvalidLabels("need at least 2 classes".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(FermatError::InvalidLabels(format!(
                "label {bad} >= class count {n_classes}"
            )));
        }
        if labels.len() < n_classes {
            log::warn!(
                "{} labeled points for {} classes; some classes cannot be represented",
                labels.len(),
                n_classes
            );
        }
        Ok(Self {
            cloud,
            labels,
            labeled_idx,
            n_classes,
        })
    }

    /// Every point labeled, in cloud order.
    pub fn fully_labeled(cloud: PointCloud, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != cloud.len() {
            return Err(FermatError::RowCountMismatch {
                points: cloud.len(),
                labels: labels.len(),
            });
        }
        let idx = (0..cloud.len()).collect();
        Self::new(cloud, idx, labels, None)
    }

    /// Same cloud, labels kept only on `idx`. Requires every point of
    /// `self` to be labeled.
    pub fn restrict_labels(&self, idx: &[usize]) -> Result<Self> {
        let truth = self.full_labels().ok_or_else(|| {
            FermatError::InvalidLabels("restricting requires a fully labeled dataset".into())
        })?;
        Self::new(
            self.cloud.clone(),
            idx.to_vec(),
            idx.iter().map(|&i| truth[i]).collect(),
            Some(self.n_classes),
        )
    }

    /// Labels of every point in cloud order, if all points are labeled.
    pub fn full_labels(&self) -> Option<Vec<usize>> {
        if self.labeled_idx.len() != self.cloud.len() {
            return None;
        }
        let mut out = vec![0; self.cloud.len()];
        for (&i, &y) in self.labeled_idx.iter().zip(&self.labels) {
            out[i] = y;
        }
        Some(out)
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn labeled_idx(&self) -> &[usize] {
        &self.labeled_idx
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled_idx.len()
    }

    /// Indices without labels, ascending.
    pub fn unlabeled_idx(&self) -> Vec<usize> {
        let mut labeled = vec![false; self.cloud.len()];
        for &i in &self.labeled_idx {
            labeled[i] = true;
        }
        (0..self.cloud.len()).filter(|&i| !labeled[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud() -> PointCloud {
        PointCloud::new(1, vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn validates_indices_and_labels() {
        assert!(LabeledDataset::new(cloud(), vec![0, 0], vec![0, 1], None).is_err());
        assert!(LabeledDataset::new(cloud(), vec![0, 9], vec![0, 1], None).is_err());
        assert!(LabeledDataset::new(cloud(), vec![0, 1], vec![0, 2], Some(2)).is_err());
        assert!(LabeledDataset::new(cloud(), vec![0], vec![0, 1], None).is_err());
        let d = LabeledDataset::new(cloud(), vec![3, 1], vec![1, 0], None).unwrap();
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.unlabeled_idx(), vec![0, 2]);
    }

    #[test]
    fn restrict_keeps_truth() {
        let full = LabeledDataset::fully_labeled(cloud(), vec![0, 0, 1, 2]).unwrap();
        assert_eq!(full.n_classes(), 3);
        let r = full.restrict_labels(&[2, 0]).unwrap();
        assert_eq!(r.labels(), &[1, 0]);
        assert_eq!(r.n_classes(), 3);
        assert!(r.restrict_labels(&[0]).is_err());
    }
}
