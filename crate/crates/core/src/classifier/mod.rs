//! Device classifiers: a small CNN trained with Adam, and a nearest-centroid
//! baseline.

mod centroid;
mod cnn;
mod train;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use centroid::NearestCentroid;
pub use cnn::{softmax_rows, Cnn, CnnSpec, Mode, Params, Tensor, CHECKPOINT_VERSION, INPUT_HEIGHT, INPUT_WIDTH};
pub use train::{train, EpochRecord, TrainConfig, TrainLog, TrainOutcome};

use crate::error::{invalid, Error, Result};
use crate::seed;

/// Labelled feature rows with per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N x D`, one feature vector per row.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub frame_index: Vec<u64>,
    pub channel: String,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, snr_db: Vec<f64>, n_classes: usize) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
        if snr_db.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: snr_db.len(),
            });
        }
        if let Some(l) = labels.iter().find(|l| **l >= n_classes) {
            return Err(invalid(format!("label {l} outside 0..{n_classes}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite features"));
        }
        Ok(Dataset {
            features,
            labels,
            snr_db,
            frame_index: (0..n as u64).collect(),
            channel: String::new(),
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows selected by `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut features = Array2::<f64>::zeros((idx.len(), self.dim()));
        for (r, &i) in idx.iter().enumerate() {
            features.row_mut(r).assign(&self.features.row(i));
        }
        Dataset {
            features,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            snr_db: idx.iter().map(|&i| self.snr_db[i]).collect(),
            frame_index: idx.iter().map(|&i| self.frame_index[i]).collect(),
            channel: self.channel.clone(),
            n_classes: self.n_classes,
        }
    }

    /// Seeded split into `(train, validation)` with `round(N * fraction)`
    /// validation rows.
    pub fn split(&self, fraction: f64, split_seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid("validation fraction must be in (0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut seed::rng(split_seed));
        let n_val = ((self.len() as f64 * fraction).round() as usize).clamp(1, self.len().saturating_sub(1));
        let (val, tr) = idx.split_at(n_val);
        Ok((self.subset(tr), self.subset(val)))
    }

    /// Number of `C x 16 x 20` input planes the rows reshape into.
    pub fn input_channels(&self) -> Result<usize> {
        let plane = INPUT_HEIGHT * INPUT_WIDTH;
        if self.dim() == 0 || self.dim() % plane != 0 {
            return Err(invalid(format!(
                "feature length {} is not a multiple of {plane}",
                self.dim()
            )));
        }
        Ok(self.dim() / plane)
    }
}

/// Row-major `16 x 20` view of a 320-long feature vector.
pub fn reshape_feature(v: &[f64]) -> Result<Array2<f64>> {
    let n = INPUT_HEIGHT * INPUT_WIDTH;
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    Ok(Array2::from_shape_vec((INPUT_HEIGHT, INPUT_WIDTH), v.to_vec()).expect("shape matches length"))
}

/// Most likely class and the class probabilities for one feature vector.
pub fn predict(model: &Cnn, v: &[f64]) -> Result<(usize, Vec<f64>)> {
    let x = ArrayView2::from_shape((1, v.len()), v).expect("one row");
    let logits = model.infer(x)?;
    let p = softmax_rows(logits.view());
    let probs: Vec<f64> = p.row(0).to_vec();
    Ok((argmax(&probs), probs))
}

/// Predicted labels for every row, evaluated in chunks.
pub fn predict_batch(model: &Cnn, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(x.nrows());
    let chunk = 256;
    let mut start = 0;
    while start < x.nrows() {
        let end = (start + chunk).min(x.nrows());
        let logits = model.infer(x.slice(ndarray::s![start..end, ..]))?;
        out.extend(logits.rows().into_iter().map(|r| argmax(r.as_slice().expect("contiguous"))));
        start = end;
    }
    Ok(out)
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrAccuracy {
    pub snr_db: f64,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub per_snr: Vec<SnrAccuracy>,
    pub n: usize,
}

/// Accuracy, confusion matrix and per-SNR accuracy of `predicted` against
/// the labels of `data`.
pub fn metrics_from_predictions(data: &Dataset, predicted: &[usize]) -> Result<Metrics> {
    if predicted.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            actual: predicted.len(),
        });
    }
    let n_classes = data.n_classes.max(predicted.iter().map(|p| p + 1).max().unwrap_or(0));
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    let mut by_snr: BTreeMap<i64, (f64, usize, usize)> = BTreeMap::new();
    let mut correct = 0usize;
    for ((&y, &p), &snr) in data.labels.iter().zip(predicted).zip(&data.snr_db) {
        confusion[y][p] += 1;
        let hit = (y == p) as usize;
        correct += hit;
        // Group on the SNR value quantised to 1e-6 dB.
        let e = by_snr.entry((snr * 1e6).round() as i64).or_insert((snr, 0, 0));
        e.1 += hit;
        e.2 += 1;
    }
    Ok(Metrics {
        accuracy: if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 },
        confusion,
        per_snr: by_snr
            .into_values()
            .map(|(snr_db, hit, n)| SnrAccuracy {
                snr_db,
                accuracy: hit as f64 / n as f64,
                n,
            })
            .collect(),
        n: data.len(),
    })
}

pub fn evaluate(model: &Cnn, data: &Dataset) -> Result<Metrics> {
    let pred = predict_batch(model, data.features.view())?;
    metrics_from_predictions(data, &pred)
}

/// Largest relative difference between analytic gradients and central
/// finite differences (step `1e-5`) over `n_params` sampled parameters.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`, which treats
/// gradients below `1e-8` in absolute terms.
pub fn gradient_check(spec: &CnnSpec, x: ArrayView2<'_, f64>, labels: &[usize], n_params: usize, check_seed: u64) -> Result<f64> {
    if x.nrows() == 0 || x.nrows() > 4 {
        return Err(invalid("gradient check expects a batch of 1 to 4 samples"));
    }
    let model = Cnn::new(spec, seed::derive(check_seed, &[seed::tag::INIT]))?;
    gradient_check_model(&model, x, labels, n_params, check_seed)
}

/// [`gradient_check`] on given weights.
pub fn gradient_check_model(model: &Cnn, x: ArrayView2<'_, f64>, labels: &[usize], n_params: usize, check_seed: u64) -> Result<f64> {
    let h = 1e-5;
    let mut m = model.clone();
    let (_, grads) = m.loss_and_grad(x, labels)?;
    let total = m.params.len();
    let n_params = n_params.min(total);
    // Every tensor gets a share of the samples, proportional to its size
    // but at least one.
    let mut picks = Vec::with_capacity(n_params);
    let mut rng = seed::rng(seed::derive(check_seed, &[seed::tag::TRIAL]));
    let sizes: Vec<usize> = m.params.0.iter().map(|t| t.data.len()).collect();
    for (ti, &sz) in sizes.iter().enumerate() {
        let share = ((n_params as f64 * sz as f64 / total as f64).ceil() as usize).clamp(1, sz);
        let mut idx: Vec<usize> = (0..sz).collect();
        idx.shuffle(&mut rng);
        picks.extend(idx.into_iter().take(share).map(|j| (ti, j)));
    }
    let mut worst: f64 = 0.0;
    for (ti, j) in picks {
        let orig = m.params.0[ti].data[j];
        m.params.0[ti].data[j] = orig + h;
        let lp = m.loss(x, labels, Mode::Train)?;
        m.params.0[ti].data[j] = orig - h;
        let lm = m.loss(x, labels, Mode::Train)?;
        m.params.0[ti].data[j] = orig;
        let numeric = (lp - lm) / (2.0 * h);
        let analytic = grads.0[ti].data[j];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_batch(spec: &CnnSpec, b: usize, s: u64) -> Array2<f64> {
        let mut rng = seed::rng(s);
        Array2::from_shape_fn((b, spec.input_len()), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn reshape_layout() {
        let v: Vec<f64> = (0..320).map(|i| i as f64).collect();
        let t = reshape_feature(&v).unwrap();
        assert_eq!(t[[0, 19]], 19.0);
        assert_eq!(t[[1, 0]], 20.0);
        assert_eq!(t.iter().copied().collect::<Vec<_>>(), v);
        assert!(reshape_feature(&[0.0; 320]).unwrap().iter().all(|x| *x == 0.0));
        assert!(reshape_feature(&[0.0; 319]).is_err());
    }

    #[test]
    fn gradient_check_full_network() {
        let spec = CnnSpec::new(1, 5);
        let x = random_batch(&spec, 3, 1);
        let err = gradient_check(&spec, x.view(), &[0, 3, 4], 240, 2).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_linear_network() {
        let spec = CnnSpec {
            batch_norm: false,
            relu: false,
            ..CnnSpec::new(1, 3)
        };
        let mut model = Cnn::new(&spec, 5).unwrap();
        // Identity-like 3x3 kernels: centre tap 1 plus a small random part.
        let mut rng = seed::rng(6);
        for t in model.params.0.iter_mut().filter(|t| t.name.starts_with("conv")) {
            if t.name.ends_with("weight") {
                let fan = t.shape[1];
                for (i, v) in t.data.iter_mut().enumerate() {
                    let (o, c) = (i / fan, (i % fan) / 9);
                    let centre = (i % 9) == 4 && o % (fan / 9) == c;
                    *v = if centre { 1.0 } else { 0.0 } + 0.01 * rng.gen_range(-1.0..1.0);
                }
            }
        }
        // Positive, well-separated inputs keep every max-pool window's
        // winner stable under the finite-difference step.
        let x = Array2::from_shape_fn((2, spec.input_len()), |(b, i)| 1.0 + (i as f64 * 0.37 + b as f64).sin().abs() * 3.0 + 0.5 * ((i % 4) as f64));
        // Without curvature the only error left is finite-difference rounding
        // on the smallest gradients.
        let err = gradient_check_model(&model, x.view(), &[1, 2], 300, 7).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn predict_probabilities() {
        let spec = CnnSpec::new(1, 4);
        let model = Cnn::new(&spec, 1).unwrap();
        let x = random_batch(&spec, 1, 3);
        let (label, p) = predict(&model, x.row(0).as_slice().unwrap()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert_eq!(label, argmax(&p));
        assert!(predict(&model, &[0.0; 10]).is_err());
    }

    #[test]
    fn random_model_is_near_chance() {
        let n_classes = 4;
        let spec = CnnSpec::new(1, n_classes);
        let n = 2000;
        let mut hits = 0usize;
        for s in 0..5u64 {
            let model = Cnn::new(&spec, 100 + s).unwrap();
            let x = random_batch(&spec, n / 5, 200 + s);
            let mut rng = seed::rng(300 + s);
            let labels: Vec<usize> = (0..n / 5).map(|_| rng.gen_range(0..n_classes)).collect();
            let pred = predict_batch(&model, x.view()).unwrap();
            hits += pred.iter().zip(&labels).filter(|(a, b)| a == b).count();
        }
        let acc = hits as f64 / n as f64;
        // Chance 0.25, binomial standard error ~0.01.
        assert!((acc - 0.25).abs() < 0.05, "accuracy {acc}");
    }

    #[test]
    fn metrics_counting() {
        let features = Array2::<f64>::zeros((5, 2));
        let data = Dataset::new(features, vec![0, 0, 1, 1, 2], vec![10.0, 20.0, 10.0, 20.0, 20.0], 3).unwrap();
        let m = metrics_from_predictions(&data, &[0, 1, 1, 1, 2]).unwrap();
        assert!((m.accuracy - 0.8).abs() < 1e-12);
        let total: u64 = m.confusion.iter().flatten().sum();
        assert_eq!(total, 5);
        let row_sums: Vec<u64> = m.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![2, 2, 1]);
        assert_eq!(m.per_snr.len(), 2);
        assert_eq!(m.per_snr[0].n, 2);
        assert!((m.per_snr[1].accuracy - 2.0 / 3.0).abs() < 1e-12);
        let perfect = metrics_from_predictions(&data, &data.labels).unwrap();
        assert_eq!(perfect.accuracy, 1.0);
        for (i, row) in perfect.confusion.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!(i == j || *v == 0);
            }
        }
    }

    #[test]
    fn dataset_validation_and_split() {
        let f = Array2::<f64>::zeros((10, 320));
        assert!(Dataset::new(f.clone(), vec![0; 9], vec![0.0; 10], 2).is_err());
        assert!(Dataset::new(f.clone(), vec![2; 10], vec![0.0; 10], 2).is_err());
        let mut bad = f.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(Dataset::new(bad, vec![0; 10], vec![0.0; 10], 2).is_err());
        let d = Dataset::new(f, (0..10).map(|i| i % 2).collect(), vec![0.0; 10], 2).unwrap();
        let (tr, va) = d.split(0.2, 1).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        let mut all: Vec<u64> = tr.frame_index.iter().chain(&va.frame_index).copied().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(d.split(1.0, 1).is_err());
        assert_eq!(d.input_channels().unwrap(), 1);
    }
}
