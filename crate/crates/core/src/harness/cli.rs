//! `rffsim` command-line front end.
//!
//! Results go to stdout as JSON (or CSV where noted). Failures exit
//! non-zero with `{"error": {"kind": ..., "message": ...}}` on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::{
    curve_csv, evaluate_file, generate_dataset, run_experiment, separation, sweep, theorem_check,
    DatasetFile, ExperimentConfig, SignalPath, SweepAxis, TheoremCheck,
};
use crate::channel::TdlChannelSpec;
use crate::classifier::{Cnn, CnnSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::extractor::{variance_probe, Method, NormalizationMode, SubbandConfig, VarianceProbe};
use crate::impairments::{sample_profile, PaCoefficients, RxAntennaProfile};
use crate::latency::{latency_report, profile_pipeline, RooflineParams, WorkloadProfile, DEFAULT_MEM_BANDWIDTH, DEFAULT_PEAK_FLOPS};
use crate::link::LinkConfig;
use crate::seed::{self, tag};

#[derive(Debug, Parser)]
#[command(name = "rffsim", version, about = "SIMO RF fingerprinting simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset file.
    Gen(GenArgs),
    /// Train the CNN on a dataset's training split.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset's test split.
    Eval(EvalArgs),
    /// Generate, train and evaluate in one go.
    Run(RunArgs),
    /// One experiment per axis value; writes a merged curve CSV.
    Sweep(SweepArgs),
    /// Roofline air-interface latency report.
    Latency(LatencyArgs),
    /// Noiseless oracle check of the sub-band estimator.
    TheoremCheck(TheoremArgs),
    /// Variance of the estimator over channel scale and noise level.
    VarianceProbe(ProbeArgs),
    /// Inter/intra-device feature distance ratio.
    Separation(SeparationArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Normalization {
    EstimateMean,
    OracleCfrMean,
}

impl From<Normalization> for NormalizationMode {
    fn from(n: Normalization) -> Self {
        match n {
            Normalization::EstimateMean => NormalizationMode::EstimateMean,
            Normalization::OracleCfrMean => NormalizationMode::OracleCfrMean,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 10)]
    pub devices: usize,
    /// Training frames per device.
    #[arg(long, default_value_t = 600)]
    pub frames: usize,
    /// Test frames per device.
    #[arg(long, default_value_t = 0)]
    pub test_frames: usize,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "20", allow_hyphen_values = true)]
    pub snr: Vec<f64>,
    #[arg(long, default_value = "tdl20")]
    pub channel: String,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value = "lldr", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, value_enum, default_value = "estimate-mean")]
    pub normalization: Normalization,
}

impl ExperimentArgs {
    fn config(&self, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n_devices: self.devices,
            frames_train: self.frames,
            frames_test: self.test_frames,
            snr_db: self.snr.clone(),
            channel: self.channel.clone(),
            subband_width: self.width,
            method: self.method,
            normalization: self.normalization.into(),
            seed,
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    /// Seed for the validation split, initialisation and shuffling
    /// (defaults to the master seed).
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 0.2)]
    pub val_fraction: f64,
}

impl TrainingArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch,
            patience: self.patience,
            max_epochs: self.max_epochs,
            validation_fraction: self.val_fraction,
            seed: self.train_seed.unwrap_or(seed),
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for `model.ckpt` and `train_log.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Directory for metrics.json, curve.csv, train_log.csv and model.ckpt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long)]
    pub seed: u64,
    /// `width=4,16`, `devices=10,30`, `channel=tdl4,tdl20` or
    /// `method=lldr,dolos`.
    #[arg(long)]
    pub axis: String,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Write the curve CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    #[arg(long, default_value_t = 60e3)]
    pub scs: f64,
    #[arg(long)]
    pub ue_flops: Option<f64>,
    #[arg(long)]
    pub ue_bytes: Option<f64>,
    #[arg(long)]
    pub bs_flops: Option<f64>,
    #[arg(long)]
    pub bs_bytes: Option<f64>,
    /// Replaces the computed base-station time, in seconds.
    #[arg(long)]
    pub trffi_override: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_PEAK_FLOPS)]
    pub peak_flops: f64,
    #[arg(long, default_value_t = DEFAULT_MEM_BANDWIDTH)]
    pub mem_bandwidth: f64,
    /// Use the measured workloads of this implementation's pipeline for any
    /// block whose FLOPs/bytes are not given.
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long, default_value = "tdl20")]
    pub channel: String,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulate the full OFDM link instead of the multiplicative model.
    #[arg(long)]
    pub through_link: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, default_value = "tdl20")]
    pub channel: String,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub sigma_h: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.03,0.1")]
    pub sigma_n: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub fixed_channel: bool,
    #[arg(long, value_enum, default_value = "oracle-cfr-mean")]
    pub normalization: Normalization,
}

#[derive(Debug, Args)]
pub struct SeparationArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn channel(name: &str) -> Result<TdlChannelSpec> {
    ExperimentConfig {
        channel: name.to_string(),
        ..ExperimentConfig::default()
    }
    .channel_spec()
}

fn print_json(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

/// A check that ran but did not meet its target.
#[derive(Debug)]
pub struct CheckFailed(pub String);

/// Runs one parsed command, writing results to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<std::result::Result<(), CheckFailed>> {
    match cli.command {
        Command::Gen(a) => {
            let cfg = a.exp.config(a.seed);
            let file = generate_dataset(&cfg)?;
            file.save(&a.out)?;
            if file.header.flagged_rows > 0 {
                eprintln!("{} of {} rows carry flagged subcarriers", file.header.flagged_rows, file.header.rows);
            }
            print_json(
                out,
                &json!({
                    "out": a.out,
                    "rows": file.header.rows,
                    "feature_len": file.header.feature_len,
                    "n_train": file.header.n_train,
                    "n_test": file.header.n_test,
                    "flagged_rows": file.header.flagged_rows,
                }),
            )?;
        }
        Command::Train(a) => {
            let file = DatasetFile::load(&a.data)?;
            let data = file.dataset(Some(super::Split::Train))?;
            let spec = super::cnn_spec_for(&data)?;
            let o = crate::classifier::train(&data, &spec, &a.training.config(a.seed))?;
            std::fs::create_dir_all(&a.out)?;
            o.model.save(a.out.join("model.ckpt"))?;
            o.log.write_csv(a.out.join("train_log.csv"))?;
            let best = &o.log.epochs[o.best_epoch];
            print_json(
                out,
                &json!({
                    "best_epoch": o.best_epoch,
                    "epochs_run": o.log.epochs.len(),
                    "val_loss": best.val_loss,
                    "val_acc": best.val_acc,
                    "model": a.out.join("model.ckpt"),
                }),
            )?;
        }
        Command::Eval(a) => {
            let file = DatasetFile::load(&a.data)?;
            let model = Cnn::load(&a.model)?;
            print_json(out, &evaluate_file(&file, &model)?)?;
        }
        Command::Run(a) => {
            let cfg = a.exp.config(a.seed);
            let o = run_experiment(&cfg, &a.training.config(a.seed))?;
            if let Some(dir) = &a.out {
                o.write(dir)?;
            }
            print_json(out, &o.report)?;
        }
        Command::Sweep(a) => {
            let axis = SweepAxis::parse(&a.axis)?;
            let r = sweep(&a.exp.config(a.seed), &axis, &a.training.config(a.seed));
            for p in &r.points {
                if let Some(e) = &p.error {
                    eprintln!("{}={} failed: {e}", r.axis, p.axis_value);
                }
            }
            match &a.out {
                Some(path) => {
                    std::fs::write(path, r.csv())?;
                    print_json(out, &r)?;
                }
                None => write!(out, "{}", curve_csv(&r.rows()))?,
            }
        }
        Command::Latency(a) => {
            let p = RooflineParams::new(a.peak_flops, a.mem_bandwidth)?;
            let measured = if a.profile {
                Some(profile_pipeline(
                    &LinkConfig::default(),
                    &SubbandConfig::estimate_mean(16)?,
                    &CnnSpec::new(1, 30),
                )?)
            } else {
                None
            };
            let block = |name: &str, f: Option<f64>, b: Option<f64>, m: Option<&WorkloadProfile>| -> Result<WorkloadProfile> {
                match (f, b, m) {
                    (Some(f), Some(b), _) => WorkloadProfile::new(name, f, b),
                    (None, None, Some(m)) => Ok(m.clone()),
                    _ => Err(Error::InvalidArgument(format!(
                        "give both --{name}-flops and --{name}-bytes, or --profile"
                    ))),
                }
            };
            let ue = block("ue", a.ue_flops, a.ue_bytes, measured.as_ref().map(|m| &m.ue))?;
            let bs = block("bs", a.bs_flops, a.bs_bytes, measured.as_ref().map(|m| &m.bs))?;
            let report = latency_report(&ue, &bs, a.scs, &p, a.trffi_override)?;
            let mut v = serde_json::to_value(&report)?;
            v["ue"] = serde_json::to_value(&ue)?;
            v["bs"] = serde_json::to_value(&bs)?;
            v["within_1ms"] = json!(report.t_air < 1e-3);
            print_json(out, &v)?;
        }
        Command::TheoremCheck(a) => {
            let mut check = TheoremCheck::new(channel(&a.channel)?, a.width, a.trials, a.seed);
            if a.through_link {
                check.path = SignalPath::Link;
            }
            let r = theorem_check(&check)?;
            print_json(out, &r)?;
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "{verdict} median relative error {:.4} at width {} (tolerance {:.2}), ordered by width: {}",
                r.reference_median, r.reference_width, r.tolerance, r.strictly_ordered
            )?;
            if !r.pass {
                return Ok(Err(CheckFailed(format!("theorem check failed: median {:.4}", r.reference_median))));
            }
        }
        Command::VarianceProbe(a) => {
            let probe = VarianceProbe {
                channel: channel(&a.channel)?,
                subband: SubbandConfig::new(a.width, a.normalization.into())?,
                sigma_h: a.sigma_h,
                sigma_n: a.sigma_n,
                trials: a.trials,
                seed: a.seed,
                fixed_channel: a.fixed_channel,
                ..VarianceProbe::default()
            };
            let tx = sample_profile(seed::derive(a.seed, &[tag::DEVICE, 0]), &PaCoefficients::base())?;
            let rx = [0u32, 1].map(|i| RxAntennaProfile::sample(i, seed::derive(a.seed, &[tag::BS_ANTENNA, u64::from(i)])));
            let t = variance_probe(&probe, &tx, [&rx[0], &rx[1]])?;
            let mut v = serde_json::to_value(&t)?;
            v["strictly_increasing_in_noise"] = json!(t.strictly_increasing_in_noise());
            print_json(out, &v)?;
        }
        Command::Separation(a) => {
            let cfg = a.exp.config(a.seed);
            print_json(out, &separation(&cfg)?)?;
        }
    }
    Ok(Ok(()))
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            eprintln!("{}", error_json("usage", &e.kind().to_string()));
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(Ok(())) => 0,
        Ok(Err(CheckFailed(msg))) => {
            eprintln!("{}", error_json("check_failed", &msg));
            1
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}
