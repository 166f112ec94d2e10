use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{invalid, Error, Result};

/// Class means in feature space; prediction picks the nearest by L2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroid {
    pub centroids: Vec<Vec<f64>>,
}

impl NearestCentroid {
    /// Classes without samples get no usable centroid and are never
    /// predicted.
    pub fn train(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("cannot fit centroids on an empty dataset"));
        }
        let d = data.dim();
        let mut sums = vec![vec![0.0; d]; data.n_classes];
        let mut counts = vec![0usize; data.n_classes];
        for (row, &y) in data.features.rows().into_iter().zip(&data.labels) {
            for (s, v) in sums[y].iter_mut().zip(row) {
                *s += v;
            }
            counts[y] += 1;
        }
        let centroids = sums
            .into_iter()
            .zip(counts)
            .map(|(s, c)| {
                if c == 0 {
                    vec![f64::NAN; d]
                } else {
                    s.into_iter().map(|v| v / c as f64).collect()
                }
            })
            .collect();
        Ok(NearestCentroid { centroids })
    }

    /// Nearest centroid; equal distances resolve to the lowest label.
    pub fn predict(&self, v: &[f64]) -> Result<usize> {
        let d = self.centroids.first().map(|c| c.len()).unwrap_or(0);
        if v.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: v.len(),
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for (label, c) in self.centroids.iter().enumerate() {
            let dist: f64 = c.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((label, dist));
            }
        }
        best.map(|(l, _)| l).ok_or_else(|| invalid("no class has a centroid"))
    }

    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        x.rows()
            .into_iter()
            .map(|r| self.predict(&r.to_vec()))
            .collect()
    }
}
