//! Feature matrices with optional ground-truth labels.

use crate::error::{Error, Result};
use crate::partition::Partition;

/// `n` points with `d` real features, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Option<Partition>,
}

impl Dataset {
    /// Builds a dataset from rows. Labels, when given, may use any ids; they
    /// are compacted by first appearance.
    pub fn new(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "dataset needs at least 2 points, got {n}"
            )));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidParameter(
                "dataset needs at least 1 feature".into(),
            ));
        }
        let mut features = Vec::with_capacity(n * d);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    actual: values.len(),
                });
            }
            if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
            features.extend(values);
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: l.len(),
                })
            }
            Some(l) => Some(Partition::from_labels(&l)),
            None => None,
        };
        Ok(Dataset {
            name: name.into(),
            n,
            d,
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> Option<&Partition> {
        self.labels.as_ref()
    }

    /// Ground-truth cluster count, when labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(Partition::k)
    }

    /// Z-score each column (population SD); constant columns become zero.
    pub fn standardized(&self) -> Dataset {
        let mut out = self.clone();
        for col in 0..self.d {
            let mean = (0..self.n).map(|i| self.point(i)[col]).sum::<f64>() / self.n as f64;
            let var = (0..self.n)
                .map(|i| (self.point(i)[col] - mean).powi(2))
                .sum::<f64>()
                / self.n as f64;
            let sd = var.sqrt();
            for i in 0..self.n {
                let v = &mut out.features[i * self.d + col];
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
        out
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
