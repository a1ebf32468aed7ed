//! Labeled examples: the users of the market.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_DATASET_ID: AtomicU64 = AtomicU64::new(1);

/// Identity token of a dataset. Clones share the token; any derived dataset
/// (split, restriction, resampling) gets a fresh one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DatasetId(u64);

impl DatasetId {
    fn fresh() -> Self {
        DatasetId(NEXT_DATASET_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// `m` examples with `d` real features each and labels in {-1, +1}.
///
/// Features are stored row-major. Equality compares contents only, never
/// the identity token.
#[derive(Clone, Debug)]
pub struct Dataset {
    id: DatasetId,
    features: Vec<f64>,
    dim: usize,
    labels: Vec<i8>,
    name: Option<String>,
    feature_names: Option<Vec<String>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.labels == other.labels
            && self.features == other.features
            && self.feature_names == other.feature_names
    }
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((j, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::InvalidDataset(format!(
                "row {j} has {} features, expected {dim}",
                row.len()
            )));
        }
        let features = rows.into_iter().flatten().collect();
        Self::from_flat(features, dim, labels)
    }

    pub fn from_flat(features: Vec<f64>, dim: usize, labels: Vec<i8>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidDataset("dataset has no examples".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be at least 1".into()));
        }
        if features.len() != m * dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not form {m} rows of {dim}",
                features.len()
            )));
        }
        if let Some(j) = labels.iter().position(|&y| y != 1 && y != -1) {
            return Err(Error::InvalidDataset(format!(
                "label {} at row {j} is not -1 or +1",
                labels[j]
            )));
        }
        if let Some(k) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                k / dim,
                k % dim
            )));
        }
        Ok(Dataset {
            id: DatasetId::fresh(),
            features,
            dim,
            labels,
            name: None,
            feature_names: None,
        })
    }

    /// One-dimensional dataset.
    pub fn from_scalars(xs: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        Self::from_flat(xs, 1, labels)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                names.len(),
                self.dim
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn id(&self) -> DatasetId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.features[j * self.dim + k]
    }

    pub fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[k])
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> i8 {
        self.labels[j]
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.positive_count() as f64 / self.len() as f64
    }

    /// New dataset made of the given rows (repeats allowed), in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &j in indices {
            features.extend_from_slice(self.row(j));
            labels.push(self.labels[j]);
        }
        Dataset {
            id: DatasetId::fresh(),
            features,
            dim: self.dim,
            labels,
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Keep the first `k` feature columns. `k == d` returns a clone that keeps
    /// the identity token.
    pub fn prefix_columns(&self, k: usize) -> Result<Dataset> {
        if k == 0 || k > self.dim {
            return Err(Error::InvalidParameter(format!(
                "feature count {k} outside 1..={}",
                self.dim
            )));
        }
        if k == self.dim {
            return Ok(self.clone());
        }
        let features = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ok(Dataset {
            id: DatasetId::fresh(),
            features,
            dim: k,
            labels: self.labels.clone(),
            name: self.name.clone(),
            feature_names: self.feature_names.as_ref().map(|n| n[..k].to_vec()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_labels_and_values() {
        assert!(Dataset::new(vec![vec![0.0]], vec![0]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![1]).is_err());
        assert!(Dataset::new(vec![vec![0.0, 1.0], vec![1.0]], vec![1, -1]).is_err());
        assert!(Dataset::new(vec![], vec![]).is_err());
    }

    #[test]
    fn clones_share_identity_but_selections_do_not() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0]], vec![1, -1]).unwrap();
        assert_eq!(d.clone().id(), d.id());
        let s = d.select_rows(&[0, 1]);
        assert_ne!(s.id(), d.id());
        assert_eq!(s, d);
    }

    #[test]
    fn prefix_columns() {
        let d = Dataset::new(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], vec![1, 1]).unwrap();
        let p = d.prefix_columns(2).unwrap();
        assert_eq!(p.row(1), &[4.0, 5.0]);
        assert_eq!(d.prefix_columns(3).unwrap().id(), d.id());
        assert!(d.prefix_columns(0).is_err());
        assert!(d.prefix_columns(4).is_err());
    }
}
