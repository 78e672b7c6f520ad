use crate::corpus::TokenSeq;
use crate::hashing::bucket_index;

pub const DEFAULT_DIM: usize = 256;

/// Hashed token-count vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            values: vec![0.0; dim],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        FeatureVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Unit-length copy; the zero vector is returned unchanged.
    pub fn l2_normalized(&self) -> Self {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return self.clone();
        }
        FeatureVector {
            values: self.values.iter().map(|x| x / norm).collect(),
        }
    }
}

/// Accumulates one count per token at `SHA-256(token) mod dim`.
///
/// # Panics
/// Panics if `dim` is zero.
pub fn featurize(doc: &TokenSeq, dim: usize) -> FeatureVector {
    assert!(dim > 0, "feature dimension must be positive");
    let mut v = FeatureVector::zeros(dim);
    for t in doc.iter() {
        v.values[bucket_index(t, dim)] += 1.0;
    }
    v
}
