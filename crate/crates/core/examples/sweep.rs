//! Accuracy as a function of sub-band width on a small setup.

use simo_rff::classifier::TrainConfig;
use simo_rff::harness::{sweep, ExperimentConfig, SweepAxis};

fn main() -> simo_rff::Result<()> {
    let template = ExperimentConfig {
        n_devices: 4,
        frames_train: 60,
        frames_test: 20,
        snr_db: vec![25.0],
        ..ExperimentConfig::desk(2)
    };
    let axis = SweepAxis::parse("width=4,8,16,32")?;
    let result = sweep(&template, &axis, &TrainConfig { max_epochs: 15, ..TrainConfig::default() });
    print!("{}", result.csv());
    Ok(())
}
