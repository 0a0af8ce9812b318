//! Unit-norm embedding vectors.

use crate::scalar::{dot, l2_norm, Scalar};

/// A fixed-dimension, L2-normalized vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    /// Normalizes `values`; `None` for empty, zero or non-finite input.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn normalized(values: Vec<T>) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let norm = l2_norm(&values);
        if !(norm > T::zero()) || !norm.is_finite() {
            return None;
        }
        Some(EmbeddingVector {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    /// Accepts already-normalized values verbatim (norm within 1e-6 of one).
    pub fn from_unit(values: Vec<T>) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let norm = l2_norm(&values);
        if (norm - T::one()).abs().to_f64_lossy() > 1e-6 {
            return None;
        }
        Some(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Cosine similarity; for unit vectors this is the dot product up to rounding.
    pub fn cosine(&self, other: &Self) -> T {
        let d = dot(&self.values, &other.values);
        d / (l2_norm(&self.values) * l2_norm(&other.values))
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingVector<U> {
        EmbeddingVector {
            values: self
                .values
                .iter()
                .map(|v| U::of(v.to_f64_lossy()))
                .collect(),
        }
    }
}
