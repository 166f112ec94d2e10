//! Gradient-checks the CNN, then trains it on a small synthetic dataset and
//! compares against a nearest-centroid baseline.

use ndarray::Array2;
use rand::Rng;
use simo_rff::classifier::{evaluate, gradient_check, predict_batch, train, CnnSpec, Dataset, NearestCentroid, TrainConfig};
use simo_rff::seed;

fn clusters(n_classes: usize, per_class: usize, noise: f64, s: u64) -> simo_rff::Result<Dataset> {
    let mut rng = seed::rng(s);
    let centres: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..320).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let n = n_classes * per_class;
    let mut x = Array2::zeros((n, 320));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % n_classes;
        for j in 0..320 {
            x[[i, j]] = centres[c][j] + noise * rng.gen_range(-1.0..1.0);
        }
        labels.push(c);
    }
    Dataset::new(x, labels, vec![20.0; n], n_classes)
}

fn main() -> simo_rff::Result<()> {
    let spec = CnnSpec::new(1, 4);
    let probe = clusters(4, 1, 0.5, 1)?;
    let err = gradient_check(&spec, probe.features.view(), &probe.labels, 240, 1)?;
    println!("gradient check: max relative error {err:.2e} over 240 parameters");

    let train_set = clusters(4, 60, 1.5, 2)?;
    let test_set = clusters(4, 20, 1.5, 2)?;
    let cfg = TrainConfig { max_epochs: 15, ..TrainConfig::default() };
    let out = train(&train_set, &spec, &cfg)?;
    print!("{}", out.log.to_csv());
    let m = evaluate(&out.model, &test_set)?;
    println!("cnn accuracy {:.3} (best epoch {})", m.accuracy, out.best_epoch);
    let nc = NearestCentroid::train(&train_set)?;
    let hits = nc
        .predict_batch(test_set.features.view())?
        .iter()
        .zip(&test_set.labels)
        .filter(|(p, y)| p == y)
        .count();
    println!("nearest centroid accuracy {:.3}", hits as f64 / test_set.len() as f64);
    let first = predict_batch(&out.model, test_set.features.slice(ndarray::s![..4, ..]))?;
    println!("first predictions {first:?}, labels {:?}", &test_set.labels[..4]);
    Ok(())
}
