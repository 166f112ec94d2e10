use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::cnn::{Cnn, CnnSpec, Params};
use super::{argmax, Dataset};
use crate::error::{invalid, Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            patience: 5,
            validation_fraction: 0.2,
            max_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(invalid("validation fraction must be in (0, 1)"));
        }
        if self.batch_size < 2 {
            return Err(invalid("batch size must be at least 2"));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(invalid("max_epochs and patience must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_acc\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:.9},{:.9},{:.6}\n", e.epoch, e.train_loss, e.val_loss, e.val_acc));
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the epoch with the lowest validation loss.
    pub model: Cnn,
    pub log: TrainLog,
    pub best_epoch: usize,
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    fn new(spec: &CnnSpec) -> Self {
        Adam {
            m: Params::zeros_like(spec),
            v: Params::zeros_like(spec),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &Params, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params.0.iter_mut().zip(&grads.0).zip(self.m.0.iter_mut()).zip(self.v.0.iter_mut()) {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
                v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
                let mh = m.data[i] / bc1;
                let vh = v.data[i] / bc2;
                p.data[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}

fn rows(data: &Dataset, idx: &[usize]) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros((idx.len(), data.dim()));
    for (r, &i) in idx.iter().enumerate() {
        x.row_mut(r).assign(&data.features.row(i));
    }
    x
}

/// Eval-mode mean loss and accuracy over a whole dataset.
fn assess(model: &Cnn, data: &Dataset) -> Result<(f64, f64)> {
    let chunk = 256;
    let mut loss = 0.0;
    let mut hits = 0usize;
    let idx: Vec<usize> = (0..data.len()).collect();
    for part in idx.chunks(chunk) {
        let x = rows(data, part);
        let logits = model.infer(x.view())?;
        let p = super::softmax_rows(logits.view());
        for (r, &i) in part.iter().enumerate() {
            let row = p.row(r);
            loss -= super::cnn::clamped_ln(row[data.labels[i]]);
            hits += (argmax(row.as_slice().expect("contiguous")) == data.labels[i]) as usize;
        }
    }
    Ok((loss / data.len() as f64, hits as f64 / data.len() as f64))
}

/// Adam on mini-batches with early stopping on a held-out validation split.
///
/// Determinism: the split, initialisation and per-epoch shuffles all derive
/// from `cfg.seed`, and the batch reduction order is fixed, so a given
/// dataset and seed always produce the same weights.
pub fn train(data: &Dataset, spec: &CnnSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    if data.dim() != spec.input_len() {
        return Err(Error::LengthMismatch {
            expected: spec.input_len(),
            actual: data.dim(),
        });
    }
    let present: std::collections::BTreeSet<usize> = data.labels.iter().copied().collect();
    if present.len() < 2 {
        return Err(invalid("training needs at least two classes"));
    }
    if data.len() < cfg.batch_size {
        return Err(invalid(format!(
            "training needs at least {} samples, got {}",
            cfg.batch_size,
            data.len()
        )));
    }
    let (tr, val) = data.split(cfg.validation_fraction, seed::derive(cfg.seed, &[seed::tag::SHUFFLE, u64::MAX]))?;
    let mut model = Cnn::new(spec, seed::derive(cfg.seed, &[seed::tag::INIT]))?;
    let mut adam = Adam::new(spec);
    let mut log = TrainLog::default();
    let mut best: Option<(f64, Cnn, usize)> = None;
    let mut since_best = 0usize;

    let mut order: Vec<usize> = (0..tr.len()).collect();
    for epoch in 0..cfg.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::derive(cfg.seed, &[seed::tag::SHUFFLE, epoch as u64])));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            // Batch norm needs at least two samples for batch statistics.
            if batch.len() < 2 {
                continue;
            }
            let x = rows(&tr, batch);
            let labels: Vec<usize> = batch.iter().map(|&i| tr.labels[i]).collect();
            let (loss, grads) = model.loss_and_grad(x.view(), &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    detail: format!("training loss {loss} after {seen} samples"),
                });
            }
            adam.step(&mut model.params, &grads, cfg);
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        let (val_loss, val_acc) = assess(&model, &val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                detail: format!("validation loss {val_loss}"),
            });
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            val_loss,
            val_acc,
        });
        let improved = best.as_ref().is_none_or(|(b, _, _)| val_loss < *b);
        if improved {
            best = Some((val_loss, model.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (_, model, best_epoch) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { model, log, best_epoch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{evaluate, predict};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    /// Two classes with cluster means +1 and -1 and small noise.
    fn separable(n_per: usize, s: u64) -> Dataset {
        let mut rng = seed::rng(s);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let n = 2 * n_per;
        let mut f = Array2::<f64>::zeros((n, 320));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2;
            let m = if y == 0 { 1.0 } else { -1.0 };
            for j in 0..320 {
                f[[i, j]] = m + noise.sample(&mut rng);
            }
            labels.push(y);
        }
        Dataset::new(f, labels, vec![0.0; n], 2).unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            max_epochs: 20,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_separable_clusters() {
        let data = separable(40, 1);
        let out = train(&data, &CnnSpec::new(1, 2), &quick()).unwrap();
        let m = evaluate(&out.model, &data).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert!(out.log.epochs.len() <= 20);
    }

    #[test]
    fn memorises_repeated_samples() {
        let mut rng = seed::rng(9);
        let protos: Vec<Vec<f64>> = (0..3).map(|_| (0..320).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let n = 60;
        let mut f = Array2::<f64>::zeros((n, 320));
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        for i in 0..n {
            for j in 0..320 {
                f[[i, j]] = protos[labels[i]][j];
            }
        }
        let data = Dataset::new(f, labels, vec![0.0; n], 3).unwrap();
        let out = train(&data, &CnnSpec::new(1, 3), &quick()).unwrap();
        let best = &out.log.epochs[out.best_epoch];
        assert_eq!(best.val_acc, 1.0);
        for (c, p) in protos.iter().enumerate() {
            assert_eq!(predict(&out.model, p).unwrap().0, c);
        }
    }

    #[test]
    fn deterministic_and_best_epoch_kept() {
        let data = separable(30, 4);
        let cfg = TrainConfig {
            max_epochs: 8,
            ..quick()
        };
        let a = train(&data, &CnnSpec::new(1, 2), &cfg).unwrap();
        let b = train(&data, &CnnSpec::new(1, 2), &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log, b.log);
        let best = a.log.epochs[a.best_epoch].val_loss;
        assert!(a.log.epochs[a.best_epoch..].iter().all(|e| best <= e.val_loss));
        assert!(a.log.to_csv().starts_with("epoch,train_loss,val_loss,val_acc\n"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = separable(10, 1);
        let one_class = Dataset::new(data.features.clone(), vec![0; 20], vec![0.0; 20], 2).unwrap();
        assert!(train(&one_class, &CnnSpec::new(1, 2), &quick()).is_err());
        let small = data.subset(&[0, 1, 2]);
        assert!(train(&small, &CnnSpec::new(1, 2), &quick()).is_err());
        let bad = TrainConfig {
            validation_fraction: 0.0,
            ..quick()
        };
        assert!(train(&data, &CnnSpec::new(1, 2), &bad).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = separable(20, 2);
        let cfg = TrainConfig {
            learning_rate: 1e300,
            max_epochs: 3,
            ..quick()
        };
        // Without batch norm nothing rescales the exploding weights.
        let spec = CnnSpec {
            batch_norm: false,
            ..CnnSpec::new(1, 2)
        };
        match train(&data, &spec, &cfg) {
            Err(Error::NonFiniteLoss { .. }) => {}
            other => panic!("expected a non-finite loss error, got {:?}", other.map(|o| o.best_epoch)),
        }
    }
}
