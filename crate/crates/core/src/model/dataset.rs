use crate::dataset::FeatureMatrix;
use crate::scalar::Scalar;

use super::ModelError;

/// Dense row-major training data with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    names: Vec<String>,
    values: Vec<T>,
    labels: Vec<u8>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(names: Vec<String>, rows: &[Vec<T>], labels: Vec<u8>) -> Result<Self, ModelError> {
        if rows.len() != labels.len() {
            return Err(ModelError::LengthMismatch {
                scores: rows.len(),
                labels: labels.len(),
            });
        }
        let width = names.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(ModelError::Arity {
                    expected: width,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Dataset { names, values, labels })
    }

    pub fn from_matrix(matrix: &FeatureMatrix) -> Self {
        let values = matrix
            .rows
            .iter()
            .flat_map(|r| r.features.iter().map(|v| T::of(*v)))
            .collect();
        Dataset {
            names: matrix.names.clone(),
            values,
            labels: matrix.labels(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[T] {
        let w = self.n_features();
        &self.values[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> T {
        self.values[row * self.n_features() + feature]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            names: self.names.clone(),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Self {
        assert_eq!(labels.len(), self.len());
        Dataset {
            labels,
            ..self.clone()
        }
    }

    /// Fails on an empty set, non-binary or single-class labels, or
    /// non-finite values.
    pub(crate) fn check_trainable(&self) -> Result<(usize, usize), ModelError> {
        let (pos, neg) = self.check_values()?;
        if pos == 0 || neg == 0 {
            return Err(ModelError::SingleClass(self.labels[0]));
        }
        Ok((pos, neg))
    }

    /// Like `check_trainable` but accepts a single class.
    pub(crate) fn check_values(&self) -> Result<(usize, usize), ModelError> {
        if self.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut pos = 0;
        for (row, &label) in self.labels.iter().enumerate() {
            match label {
                0 => {}
                1 => pos += 1,
                label => return Err(ModelError::BadLabel { row, label }),
            }
        }
        let neg = self.len() - pos;
        if let Some(at) = self.values.iter().position(|v| !v.is_finite()) {
            let column = at % self.n_features();
            return Err(ModelError::NonFinite {
                row: at / self.n_features(),
                column,
                name: self.names[column].clone(),
            });
        }
        Ok((pos, neg))
    }
}
