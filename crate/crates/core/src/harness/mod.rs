//! Dataset generation and persistence, experiments, sweeps, the oracle
//! theorem check and the command-line front end.
//!
//! Every random draw in an experiment derives from the master seed:
//!
//! - one QPSK pilot (and a second one for the two-symbol method) shared by
//!   all devices;
//! - one impairment profile per device and one IQ profile per base-station
//!   antenna;
//! - a fresh channel and noise realisation per (device, frame, antenna).
//!
//! Frames `0..frames_train` of every device form the training split and
//! `frames_train..frames_train + frames_test` the test split, so no frame
//! index appears in both. Within a split, frame `j` is simulated at
//! `snr_db[j % snr_db.len()]`, spreading frames evenly over the SNR grid.

pub mod cli;
mod format;
mod theorem;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use format::{DatasetFile, DatasetHeader, Split, MAGIC, SCHEMA_VERSION};
pub use theorem::{theorem_check, SignalPath, TheoremCheck, TheoremReport, WidthError, DEFAULT_THEOREM_TOLERANCE};

use crate::channel::TdlChannelSpec;
use crate::classifier::{self, evaluate, Cnn, CnnSpec, Dataset, Metrics, SnrAccuracy, TrainConfig, TrainLog};
use crate::error::{invalid, Error, Result};
use crate::extractor::{
    extract_dolos, extract_lldr, extract_no_subband, extract_raw_iq, feature_to_vector, CalibrationR, FeatureMeta,
    Method, NormalizationMode, RffFeature, SubbandConfig,
};
use crate::impairments::{ImpairmentProfile, PaCoefficients, ProfileSampler, RxAntennaProfile};
use crate::link::{
    estimate_channels, estimate_second, ChannelSource, FrameRequest, LinkConfig, LinkSimulator, PilotGrid,
};
use crate::seed::{self, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_devices: usize,
    /// Training frames per device.
    pub frames_train: usize,
    /// Test frames per device.
    pub frames_test: usize,
    pub snr_db: Vec<f64>,
    /// Preset name (`tdl4`, `tdl20`, `tdl24`) or a path to a profile file.
    pub channel: String,
    pub subband_width: usize,
    pub method: Method,
    pub normalization: NormalizationMode,
    pub seed: u64,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub sampler: ProfileSampler,
}

impl Default for ExperimentConfig {
    /// The full-scale setup: 30 devices, 9000/900 frames over -10..30 dB.
    fn default() -> Self {
        ExperimentConfig {
            n_devices: 30,
            frames_train: 9000,
            frames_test: 900,
            snr_db: (0..9).map(|i| -10.0 + 5.0 * i as f64).collect(),
            channel: "tdl20".into(),
            subband_width: 16,
            method: Method::Lldr,
            normalization: NormalizationMode::EstimateMean,
            seed: 0,
            link: LinkConfig::default(),
            sampler: ProfileSampler::default(),
        }
    }
}

impl ExperimentConfig {
    /// The laptop-scale preset: 10 devices, 600/100 frames at 20 dB.
    pub fn desk(seed: u64) -> Self {
        ExperimentConfig {
            n_devices: 10,
            frames_train: 600,
            frames_test: 100,
            snr_db: vec![20.0],
            seed,
            ..ExperimentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_devices == 0 {
            return Err(invalid("n_devices must be positive"));
        }
        if self.frames_train + self.frames_test == 0 {
            return Err(invalid("at least one frame per device is required"));
        }
        if self.snr_db.is_empty() {
            return Err(invalid("SNR grid must be non-empty"));
        }
        if let Some(s) = self.snr_db.iter().find(|s| s.is_nan()) {
            return Err(invalid(format!("invalid SNR {s}")));
        }
        if u32::try_from(self.n_devices).is_err() || i32::try_from(self.n_devices).is_err() {
            return Err(invalid("too many devices"));
        }
        self.link.validate()?;
        self.subband()?;
        self.channel_spec()?;
        Ok(())
    }

    pub fn channel_spec(&self) -> Result<TdlChannelSpec> {
        match TdlChannelSpec::preset(&self.channel) {
            Ok(s) => Ok(s),
            Err(e) if Path::new(&self.channel).is_file() => TdlChannelSpec::load(&self.channel).map_err(|_| e),
            Err(e) => Err(e),
        }
    }

    pub fn subband(&self) -> Result<SubbandConfig> {
        let s = SubbandConfig::new(self.subband_width, self.normalization)?;
        if self.link.k % s.width != 0 {
            return Err(invalid(format!("width {} does not divide K = {}", s.width, self.link.k)));
        }
        Ok(s)
    }

    pub fn frames_per_device(&self) -> usize {
        self.frames_train + self.frames_test
    }

    /// SNR of frame `frame` (device-local index).
    pub fn frame_snr(&self, frame: usize) -> f64 {
        let local = if frame < self.frames_train { frame } else { frame - self.frames_train };
        self.snr_db[local % self.snr_db.len()]
    }

    pub fn frame_split(&self, frame: usize) -> Split {
        if frame < self.frames_train {
            Split::Train
        } else {
            Split::Test
        }
    }
}

/// Everything fixed for an experiment: link, pilots, device and antenna
/// profiles, and the channel model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub sim: LinkSimulator,
    pub pilot: PilotGrid,
    pub second_pilot: PilotGrid,
    pub devices: Vec<ImpairmentProfile>,
    pub rx: [RxAntennaProfile; 2],
    pub calibration: CalibrationR,
    pub channel: TdlChannelSpec,
    pub subband: SubbandConfig,
}

impl Scenario {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let m = config.seed;
        let link = &config.link;
        let base = PaCoefficients::base();
        let devices = (0..config.n_devices)
            .map(|d| config.sampler.sample(d as u32, seed::derive(m, &[tag::DEVICE, d as u64]), &base))
            .collect();
        let rx = [0u32, 1].map(|i| RxAntennaProfile::sample(i, seed::derive(m, &[tag::BS_ANTENNA, u64::from(i)])));
        Ok(Scenario {
            config: config.clone(),
            sim: LinkSimulator::new(link)?,
            pilot: PilotGrid::generate(link, seed::derive(m, &[tag::PILOT, 0])),
            second_pilot: PilotGrid::generate(link, seed::derive(m, &[tag::PILOT, 1])),
            devices,
            calibration: CalibrationR::from_profiles(&rx[0], &rx[1], link.k)?,
            rx,
            channel: config.channel_spec()?,
            subband: config.subband()?,
        })
    }

    fn channel_seeds(&self, device: usize, frame: usize) -> [u64; 2] {
        [0, 1].map(|a| seed::frame_channel_seed(self.config.seed, device as u64, frame as u64, a))
    }

    /// Simulates one frame and extracts the configured feature.
    pub fn frame_feature(&self, device: usize, frame: usize, snr_db: f64) -> Result<RffFeature> {
        let cfg = &self.config;
        if device >= self.devices.len() {
            return Err(invalid(format!("device {device} outside 0..{}", self.devices.len())));
        }
        let method = cfg.method;
        let channel = ChannelSource::Tdl {
            spec: &self.channel,
            seeds: self.channel_seeds(device, frame),
        };
        let cap = self.sim.simulate_frame(&FrameRequest {
            pilot: &self.pilot,
            second_pilot: method.needs_second_symbol().then_some(&self.second_pilot),
            tx: &self.devices[device],
            rx: [&self.rx[0], &self.rx[1]],
            channel: channel.clone(),
            snr_db,
            noise_seeds: [0, 1].map(|a| seed::frame_noise_seed(cfg.seed, device as u64, frame as u64, a)),
            frame_index: frame as u64,
        })?;
        let feature = match method {
            Method::Lldr => {
                let est = estimate_channels(&cap, &self.pilot)?;
                let truth = match self.subband.normalization_mode {
                    NormalizationMode::EstimateMean => None,
                    NormalizationMode::OracleCfrMean => Some(self.sim.channel_responses(&channel)?),
                };
                extract_lldr(
                    &est,
                    &self.calibration,
                    &self.subband,
                    truth.as_ref().map(|[a, b]| (a.as_slice(), b.as_slice())),
                )?
            }
            Method::NoSubband => extract_no_subband(&estimate_channels(&cap, &self.pilot)?, &self.calibration)?,
            Method::Dolos => {
                let e1 = estimate_channels(&cap, &self.pilot)?;
                let e2 = estimate_second(&cap, &self.second_pilot)?
                    .ok_or_else(|| invalid("frame carries no second symbol"))?;
                extract_dolos(&e1, &e2)?
            }
            Method::RawIq => extract_raw_iq(&cap),
        };
        Ok(feature.with_meta(FeatureMeta {
            device_id: device as u32,
            snr_db,
            frame_index: frame as u64,
        }))
    }
}

struct Row {
    values: Vec<f32>,
    flagged: u32,
}

/// Runs `f` over `jobs` on all cores, preserving job order in the output.
fn parallel_map<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> Result<T> + Sync) -> Result<Vec<T>> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(threads).max(1);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(&f).collect::<Result<Vec<T>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(jobs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Simulates every frame of every device and packs the features.
///
/// Rows are ordered device-major, then by frame index. Frames run in
/// parallel; each draws only from its own derived seeds, so the output does
/// not depend on the thread count.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<DatasetFile> {
    let scenario = Scenario::new(cfg)?;
    let per = cfg.frames_per_device();
    let jobs: Vec<(usize, usize)> = (0..cfg.n_devices).flat_map(|d| (0..per).map(move |f| (d, f))).collect();
    let rows = parallel_map(&jobs, |&(d, f)| {
        let feat = scenario.frame_feature(d, f, cfg.frame_snr(f))?;
        Ok(Row {
            values: feature_to_vector(&feat).into_iter().map(|v| v as f32).collect(),
            flagged: feat.flagged_count() as u32,
        })
    })?;
    let feature_len = cfg.method.vector_len(cfg.link.k);
    let mut features = Vec::with_capacity(rows.len() * feature_len);
    for r in &rows {
        if r.values.len() != feature_len {
            return Err(Error::LengthMismatch {
                expected: feature_len,
                actual: r.values.len(),
            });
        }
        features.extend_from_slice(&r.values);
    }
    let flagged: Vec<u32> = rows.iter().map(|r| r.flagged).collect();
    let file = DatasetFile {
        header: DatasetHeader {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            k: cfg.link.k,
            feature_len,
            rows: jobs.len(),
            n_train: cfg.n_devices * cfg.frames_train,
            n_test: cfg.n_devices * cfg.frames_test,
            flagged_rows: flagged.iter().filter(|f| **f > 0).count(),
        },
        features,
        labels: jobs.iter().map(|&(d, _)| d as i32).collect(),
        snr_db: jobs.iter().map(|&(_, f)| cfg.frame_snr(f) as f32).collect(),
        frame_index: jobs.iter().map(|&(_, f)| f as u64).collect(),
        split: jobs.iter().map(|&(_, f)| cfg.frame_split(f)).collect(),
        flagged,
    };
    file.check()?;
    Ok(file)
}

impl DatasetFile {
    /// Rows of one split (or all rows) as a classifier dataset.
    pub fn dataset(&self, split: Option<Split>) -> Result<Dataset> {
        let idx: Vec<usize> = (0..self.header.rows)
            .filter(|&i| split.is_none_or(|s| self.split[i] == s))
            .collect();
        let d = self.header.feature_len;
        let mut features = Array2::<f64>::zeros((idx.len(), d));
        for (r, &i) in idx.iter().enumerate() {
            for (dst, src) in features.row_mut(r).iter_mut().zip(self.row(i)) {
                *dst = f64::from(*src);
            }
        }
        let labels = idx
            .iter()
            .map(|&i| usize::try_from(self.labels[i]).map_err(|_| Error::Format(format!("negative label at row {i}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut ds = Dataset::new(
            features,
            labels,
            idx.iter().map(|&i| f64::from(self.snr_db[i])).collect(),
            self.header.config.n_devices,
        )?;
        ds.frame_index = idx.iter().map(|&i| self.frame_index[i]).collect();
        ds.channel = self.header.config.channel.clone();
        Ok(ds)
    }
}

/// Summary of one train/evaluate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub channel: String,
    pub subband_width: usize,
    pub n_devices: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub per_snr: Vec<SnrAccuracy>,
    pub top_snr_db: f64,
    /// `confusion[true][predicted]` over the test rows at the top SNR.
    pub confusion_top_snr: Vec<Vec<u64>>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub flagged_rows: usize,
}

/// One row of a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: Method,
    pub axis_value: String,
    pub snr_db: f64,
    pub accuracy: f64,
    pub n_test: usize,
}

pub const CURVE_HEADER: &str = "method,axis_value,snr_db,accuracy,n_test";

impl ExperimentReport {
    pub fn accuracy_at(&self, snr_db: f64) -> Option<f64> {
        self.per_snr.iter().find(|s| (s.snr_db - snr_db).abs() < 1e-9).map(|s| s.accuracy)
    }

    /// One row per SNR of the test grid.
    pub fn curve(&self, axis_value: &str) -> Vec<CurveRow> {
        self.per_snr
            .iter()
            .map(|s| CurveRow {
                method: self.method,
                axis_value: axis_value.to_string(),
                snr_db: s.snr_db,
                accuracy: s.accuracy,
                n_test: s.n,
            })
            .collect()
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.6},{}", r.method, r.axis_value, r.snr_db, r.accuracy, r.n_test);
    }
    s
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub model: Cnn,
    pub log: TrainLog,
    pub test_metrics: Metrics,
}

impl ExperimentOutcome {
    /// Writes `metrics.json`, `curve.csv`, `train_log.csv` and `model.ckpt`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&self.report)?)?;
        std::fs::write(dir.join("curve.csv"), curve_csv(&self.report.curve("")))?;
        self.log.write_csv(dir.join("train_log.csv"))?;
        self.model.save(dir.join("model.ckpt"))?;
        Ok(())
    }
}

/// Reference CNN for a dataset's feature length and class count.
pub fn cnn_spec_for(data: &Dataset) -> Result<CnnSpec> {
    Ok(CnnSpec::new(data.input_channels()?, data.n_classes))
}

/// Trains on the generated training split and evaluates per SNR on the test
/// split.
pub fn run_experiment(cfg: &ExperimentConfig, train_cfg: &TrainConfig) -> Result<ExperimentOutcome> {
    if cfg.frames_test < cfg.snr_db.len() {
        return Err(invalid("frames_test must cover every SNR of the grid"));
    }
    let file = generate_dataset(cfg)?;
    run_on_file(&file, train_cfg)
}

pub fn run_on_file(file: &DatasetFile, train_cfg: &TrainConfig) -> Result<ExperimentOutcome> {
    let tr = file.dataset(Some(Split::Train))?;
    let te = file.dataset(Some(Split::Test))?;
    if te.is_empty() {
        return Err(invalid("dataset has no test rows"));
    }
    let spec = cnn_spec_for(&tr)?;
    let out = classifier::train(&tr, &spec, train_cfg)?;
    let metrics = evaluate(&out.model, &te)?;
    let report = report_from(file, &te, &out.model, &metrics, &out.log, out.best_epoch)?;
    Ok(ExperimentOutcome {
        report,
        model: out.model,
        log: out.log,
        test_metrics: metrics,
    })
}

/// Evaluates a trained model on a file's test split.
pub fn evaluate_file(file: &DatasetFile, model: &Cnn) -> Result<Metrics> {
    evaluate(model, &file.dataset(Some(Split::Test))?)
}

fn report_from(
    file: &DatasetFile,
    te: &Dataset,
    model: &Cnn,
    metrics: &Metrics,
    log: &TrainLog,
    best_epoch: usize,
) -> Result<ExperimentReport> {
    let cfg = &file.header.config;
    let top = metrics.per_snr.iter().map(|s| s.snr_db).fold(f64::NEG_INFINITY, f64::max);
    let idx: Vec<usize> = (0..te.len()).filter(|&i| (te.snr_db[i] - top).abs() < 1e-9).collect();
    let top_metrics = evaluate(model, &te.subset(&idx))?;
    Ok(ExperimentReport {
        method: cfg.method,
        channel: cfg.channel.clone(),
        subband_width: cfg.subband_width,
        n_devices: cfg.n_devices,
        seed: cfg.seed,
        accuracy: metrics.accuracy,
        per_snr: metrics.per_snr.clone(),
        top_snr_db: top,
        confusion_top_snr: top_metrics.confusion,
        best_epoch,
        epochs_run: log.epochs.len(),
        n_train: file.header.n_train,
        n_test: file.header.n_test,
        flagged_rows: file.header.flagged_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    SubbandWidth(Vec<usize>),
    NDevices(Vec<usize>),
    ChannelPreset(Vec<String>),
    Method(Vec<Method>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SubbandWidth(_) => "subband_width",
            SweepAxis::NDevices(_) => "n_devices",
            SweepAxis::ChannelPreset(_) => "channel_preset",
            SweepAxis::Method(_) => "method",
        }
    }

    /// `(label, config)` for each axis value.
    pub fn points(&self, template: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = template.clone();
            f(&mut c);
            c
        };
        match self {
            SweepAxis::SubbandWidth(v) => v.iter().map(|&w| (w.to_string(), with(&|c| c.subband_width = w))).collect(),
            SweepAxis::NDevices(v) => v.iter().map(|&n| (n.to_string(), with(&|c| c.n_devices = n))).collect(),
            SweepAxis::ChannelPreset(v) => v.iter().map(|p| (p.clone(), with(&|c| c.channel = p.clone()))).collect(),
            SweepAxis::Method(v) => v.iter().map(|&m| (m.to_string(), with(&|c| c.method = m))).collect(),
        }
    }

    /// Parses `name=v1,v2,...`; names are `width`, `devices`, `channel` and
    /// `method`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("sweep axis '{s}' is not of the form name=v1,v2")))?;
        let items: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if items.is_empty() {
            return Err(Error::Parse("sweep axis has no values".into()));
        }
        let nums = || {
            items
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| Error::Parse(format!("'{v}' is not a count"))))
                .collect::<Result<Vec<_>>>()
        };
        match name.trim() {
            "width" | "subband_width" => Ok(SweepAxis::SubbandWidth(nums()?)),
            "devices" | "n_devices" => Ok(SweepAxis::NDevices(nums()?)),
            "channel" | "channel_preset" => Ok(SweepAxis::ChannelPreset(items.iter().map(|s| s.to_string()).collect())),
            "method" => Ok(SweepAxis::Method(items.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?)),
            other => Err(Error::Parse(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: String,
    pub report: Option<ExperimentReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<CurveRow> {
        self.points
            .iter()
            .filter_map(|p| p.report.as_ref().map(|r| r.curve(&p.axis_value)))
            .flatten()
            .collect()
    }

    pub fn csv(&self) -> String {
        curve_csv(&self.rows())
    }

    pub fn report(&self, axis_value: &str) -> Option<&ExperimentReport> {
        self.points
            .iter()
            .find(|p| p.axis_value == axis_value)
            .and_then(|p| p.report.as_ref())
    }
}

/// One experiment per axis value. A failing point is recorded with its
/// error and the sweep moves on.
pub fn sweep(template: &ExperimentConfig, axis: &SweepAxis, train_cfg: &TrainConfig) -> SweepResult {
    let points = axis
        .points(template)
        .into_iter()
        .map(|(label, cfg)| match run_experiment(&cfg, train_cfg) {
            Ok(o) => SweepPoint {
                axis_value: label,
                report: Some(o.report),
                error: None,
            },
            Err(e) => SweepPoint {
                axis_value: label,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    SweepResult {
        axis: axis.name().to_string(),
        points,
    }
}

/// Mean pairwise feature distances between frames of different devices and
/// of the same device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub inter: f64,
    pub intra: f64,
    pub ratio: f64,
}

/// Feature separation over `frames_train` frames per device at the first
/// SNR of the grid.
pub fn separation(cfg: &ExperimentConfig) -> Result<Separation> {
    let scenario = Scenario::new(cfg)?;
    let snr = cfg.snr_db[0];
    let jobs: Vec<(usize, usize)> = (0..cfg.n_devices)
        .flat_map(|d| (0..cfg.frames_train).map(move |f| (d, f)))
        .collect();
    let rows = parallel_map(&jobs, |&(d, f)| Ok(feature_to_vector(&scenario.frame_feature(d, f, snr)?)))?;
    let (mut inter, mut n_inter, mut intra, mut n_intra) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if jobs[i].0 == jobs[j].0 {
                intra += d;
                n_intra += 1;
            } else {
                inter += d;
                n_inter += 1;
            }
        }
    }
    if n_inter == 0 || n_intra == 0 {
        return Err(invalid("separation needs at least two devices and two frames each"));
    }
    let (inter, intra) = (inter / n_inter as f64, intra / n_intra as f64);
    Ok(Separation {
        inter,
        intra,
        ratio: inter / intra,
    })
}
