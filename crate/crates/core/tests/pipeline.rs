use proptest::prelude::*;
use simo_rff::channel::TdlChannelSpec;
use simo_rff::classifier::{predict_batch, Cnn, TrainConfig};
use simo_rff::extractor::feature_to_vector;
use simo_rff::harness::{
    generate_dataset, run_on_file, theorem_check, DatasetFile, DatasetHeader, ExperimentConfig, Scenario, SignalPath,
    Split, TheoremCheck, SCHEMA_VERSION,
};

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_devices: 3,
        frames_train: 12,
        frames_test: 4,
        snr_db: vec![15.0, 25.0],
        ..ExperimentConfig::desk(seed)
    }
}

#[test]
fn dataset_rows_match_scenario_features() {
    let cfg = small(4);
    let file = generate_dataset(&cfg).unwrap();
    let scenario = Scenario::new(&cfg).unwrap();
    for row in [0, 7, 15, 16, 47] {
        let device = file.labels[row] as usize;
        let frame = file.frame_index[row] as usize;
        let f = scenario.frame_feature(device, frame, cfg.frame_snr(frame)).unwrap();
        let v: Vec<f32> = feature_to_vector(&f).iter().map(|x| *x as f32).collect();
        assert_eq!(file.row(row), v.as_slice(), "row {row}");
        assert_eq!(file.snr_db[row], cfg.frame_snr(frame) as f32);
        assert_eq!(file.split[row], cfg.frame_split(frame));
    }
}

#[test]
fn seeds_change_the_data() {
    let a = generate_dataset(&small(1)).unwrap();
    let b = generate_dataset(&small(2)).unwrap();
    assert_ne!(a.features, b.features);
    assert_eq!(a.labels, b.labels);
}

#[test]
fn link_path_matches_model_path() {
    let spec = TdlChannelSpec::preset("tdl20").unwrap();
    let mut check = TheoremCheck::new(spec, 16, 10, 5);
    let model = theorem_check(&check).unwrap();
    check.path = SignalPath::Link;
    let link = theorem_check(&check).unwrap();
    for (m, l) in model.rows.iter().zip(&link.rows) {
        assert_eq!(m.width, l.width);
        assert!((m.median - l.median).abs() < 0.1 * m.median + 1e-3, "{m:?} vs {l:?}");
    }
}

#[test]
fn trained_model_survives_checkpoint() {
    let file = generate_dataset(&small(3)).unwrap();
    let out = run_on_file(&file, &TrainConfig { max_epochs: 3, batch_size: 8, ..TrainConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path()).unwrap();
    for name in ["metrics.json", "curve.csv", "train_log.csv", "model.ckpt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let back = Cnn::load(dir.path().join("model.ckpt")).unwrap();
    let test = file.dataset(Some(Split::Test)).unwrap();
    assert_eq!(
        predict_batch(&out.model, test.features.view()).unwrap(),
        predict_batch(&back, test.features.view()).unwrap()
    );
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("method,axis_value,snr_db,accuracy,n_test\n"));
    assert_eq!(curve.lines().count(), 1 + 2);
}

fn file_strategy() -> impl Strategy<Value = DatasetFile> {
    (1usize..6, 1usize..5).prop_flat_map(|(rows, feature_len)| {
        (
            prop::collection::vec(-1e6f32..1e6, rows * feature_len),
            prop::collection::vec(0i32..30, rows),
            prop::collection::vec(-10f32..30.0, rows),
            prop::collection::vec(any::<u64>(), rows),
            prop::collection::vec(any::<bool>(), rows),
            prop::collection::vec(0u32..160, rows),
        )
            .prop_map(move |(features, labels, snr_db, frame_index, test, flagged)| {
                let split: Vec<Split> = test.iter().map(|t| if *t { Split::Test } else { Split::Train }).collect();
                let n_test = test.iter().filter(|t| **t).count();
                DatasetFile {
                    header: DatasetHeader {
                        schema_version: SCHEMA_VERSION,
                        config: ExperimentConfig::desk(0),
                        k: 160,
                        feature_len,
                        rows,
                        n_train: rows - n_test,
                        n_test,
                        flagged_rows: flagged.iter().filter(|f| **f > 0).count(),
                    },
                    features,
                    labels,
                    snr_db,
                    frame_index,
                    split,
                    flagged,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dataset_bytes_round_trip(file in file_strategy()) {
        let bytes = file.to_bytes().unwrap();
        prop_assert_eq!(DatasetFile::from_bytes(&bytes).unwrap(), file);
    }

    #[test]
    fn truncated_files_are_rejected(file in file_strategy(), cut in 1usize..64) {
        let bytes = file.to_bytes().unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(DatasetFile::from_bytes(&bytes[..keep]).is_err());
    }
}
