//! Generates a small dataset, writes it to disk, reads it back and runs the
//! train/test experiment on it.

use simo_rff::classifier::TrainConfig;
use simo_rff::harness::{generate_dataset, run_on_file, DatasetFile, ExperimentConfig};

fn main() -> simo_rff::Result<()> {
    let cfg = ExperimentConfig {
        n_devices: 4,
        frames_train: 80,
        frames_test: 20,
        snr_db: vec![20.0, 30.0],
        ..ExperimentConfig::desk(1)
    };
    let file = generate_dataset(&cfg)?;
    let dir = std::env::temp_dir().join("simo-rff-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dataset.bin");
    file.save(&path)?;
    let back = DatasetFile::load(&path)?;
    assert_eq!(back, file);
    println!(
        "{} rows ({} train, {} test), {} floats per row, {} flagged rows",
        back.header.rows, back.header.n_train, back.header.n_test, back.header.feature_len, back.header.flagged_rows
    );
    let out = run_on_file(&back, &TrainConfig { max_epochs: 20, ..TrainConfig::default() })?;
    out.write(dir.join("run"))?;
    println!("{}", serde_json::to_string_pretty(&out.report).expect("report serialises"));
    println!("artifacts in {}", dir.join("run").display());
    Ok(())
}
