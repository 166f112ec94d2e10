//! Roofline latency budget for the air interface and operation-level
//! workload accounting of the implemented pipeline.
//!
//! A code block runs in `max(flops / peak_flops, bytes / mem_bandwidth)`;
//! whichever term is larger names the bound. The end-to-end air latency is
//! terminal processing plus frame alignment plus one TTI plus base-station
//! fingerprint processing.
//!
//! Counting rules used by [`profile_pipeline`]:
//!
//! | operation                         | FLOPs |
//! |-----------------------------------|-------|
//! | complex multiply                  | 6     |
//! | complex add                       | 2     |
//! | complex divide                    | 11    |
//! | real-by-complex multiply/divide   | 2     |
//! | real add, multiply or compare     | 1     |
//! | `sqrt`, `ln`, `exp`, `sin`, `cos`, `atan2` | 1 |
//! | complex magnitude                 | 4     |
//! | complex log                       | 6     |
//! | radix-2 FFT of length N           | 5 N log2 N |
//!
//! Bytes are elements moved times element size (16 for complex, 8 for real,
//! 1 for flags), counting each logical read and write of a stage once.

use serde::{Deserialize, Serialize};

use crate::channel::TdlChannelSpec;
use crate::classifier::{predict, Cnn, CnnSpec};
use crate::error::{invalid, Error, Result};
use crate::extractor::{extract_lldr, feature_to_vector, CalibrationR, NormalizationMode, SubbandConfig};
use crate::impairments::{self, PaCoefficients, RxAntennaProfile, PA_MEMORY, PA_ORDER};
use crate::link::{estimate_channels, ChannelSource, FrameRequest, LinkConfig, LinkSimulator, PilotGrid};

pub const DEFAULT_PEAK_FLOPS: f64 = 403.2e9;
pub const DEFAULT_MEM_BANDWIDTH: f64 = 17.06e9;

const COMPLEX_BYTES: u64 = 16;
const REAL_BYTES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflineParams {
    /// FLOP/s.
    pub peak_flops: f64,
    /// Bytes/s.
    pub mem_bandwidth: f64,
}

impl Default for RooflineParams {
    fn default() -> Self {
        RooflineParams {
            peak_flops: DEFAULT_PEAK_FLOPS,
            mem_bandwidth: DEFAULT_MEM_BANDWIDTH,
        }
    }
}

impl RooflineParams {
    pub fn new(peak_flops: f64, mem_bandwidth: f64) -> Result<Self> {
        let p = RooflineParams { peak_flops, mem_bandwidth };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_flops > 0.0 && self.peak_flops.is_finite()) {
            return Err(invalid(format!("peak_flops must be positive, got {}", self.peak_flops)));
        }
        if !(self.mem_bandwidth > 0.0 && self.mem_bandwidth.is_finite()) {
            return Err(invalid(format!("mem_bandwidth must be positive, got {}", self.mem_bandwidth)));
        }
        Ok(())
    }

    /// FLOP/byte at which the two roofs meet.
    pub fn ridge_point(&self) -> f64 {
        self.peak_flops / self.mem_bandwidth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub name: String,
    pub flops: f64,
    pub bytes: f64,
}

impl WorkloadProfile {
    pub fn new(name: impl Into<String>, flops: f64, bytes: f64) -> Result<Self> {
        if !(flops >= 0.0 && flops.is_finite() && bytes >= 0.0 && bytes.is_finite()) {
            return Err(invalid(format!("workload must be non-negative and finite, got {flops} FLOPs / {bytes} B")));
        }
        Ok(WorkloadProfile {
            name: name.into(),
            flops,
            bytes,
        })
    }

    pub fn arithmetic_intensity(&self) -> f64 {
        if self.bytes == 0.0 {
            f64::INFINITY
        } else {
            self.flops / self.bytes
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Compute,
    Memory,
}

/// Roofline time of one block. Equal compute and memory times count as
/// compute-bound.
pub fn block_time(w: &WorkloadProfile, p: &RooflineParams) -> (f64, BoundKind) {
    let tc = w.flops / p.peak_flops;
    let tm = w.bytes / p.mem_bandwidth;
    if tm > tc {
        (tm, BoundKind::Memory)
    } else {
        (tc, BoundKind::Compute)
    }
}

/// `1 ms / 2^mu` for the NR numerologies 15, 30, 60 and 120 kHz.
pub fn tti_duration(scs_hz: f64) -> Result<f64> {
    let mu = match scs_hz {
        s if s == 15e3 => 0,
        s if s == 30e3 => 1,
        s if s == 60e3 => 2,
        s if s == 120e3 => 3,
        _ => return Err(Error::UnsupportedSpacing(scs_hz)),
    };
    Ok(1e-3 / f64::from(1u32 << mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_ue: f64,
    pub t_f: f64,
    pub t_tti: f64,
    pub t_rffi: f64,
    pub t_air: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundKinds {
    pub ue: BoundKind,
    pub bs: BoundKind,
}

/// JSON latency report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub t_ue: f64,
    pub t_f: f64,
    pub t_tti: f64,
    pub t_rffi: f64,
    pub t_air: f64,
    pub bound_kinds: BoundKinds,
    pub params: RooflineParams,
    /// Roofline time of the base-station block, reported even when an
    /// override replaced it in `t_rffi`.
    pub t_rffi_computed: f64,
    pub t_rffi_overridden: bool,
}

/// Air-interface latency. `t_rffi_override` replaces the computed
/// base-station time when given.
pub fn air_latency(
    ue: &WorkloadProfile,
    bs: &WorkloadProfile,
    scs_hz: f64,
    p: &RooflineParams,
    t_rffi_override: Option<f64>,
) -> Result<LatencyBreakdown> {
    Ok(latency_report(ue, bs, scs_hz, p, t_rffi_override)?.breakdown())
}

pub fn latency_report(
    ue: &WorkloadProfile,
    bs: &WorkloadProfile,
    scs_hz: f64,
    p: &RooflineParams,
    t_rffi_override: Option<f64>,
) -> Result<LatencyReport> {
    p.validate()?;
    if let Some(t) = t_rffi_override {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("t_rffi override must be non-negative, got {t}")));
        }
    }
    let t_tti = tti_duration(scs_hz)?;
    let t_f = t_tti / 2.0;
    let (t_ue, ue_kind) = block_time(ue, p);
    let (t_bs, bs_kind) = block_time(bs, p);
    let t_rffi = t_rffi_override.unwrap_or(t_bs);
    Ok(LatencyReport {
        t_ue,
        t_f,
        t_tti,
        t_rffi,
        t_air: t_ue + t_f + t_tti + t_rffi,
        bound_kinds: BoundKinds { ue: ue_kind, bs: bs_kind },
        params: *p,
        t_rffi_computed: t_bs,
        t_rffi_overridden: t_rffi_override.is_some(),
    })
}

impl LatencyReport {
    pub fn breakdown(&self) -> LatencyBreakdown {
        LatencyBreakdown {
            t_ue: self.t_ue,
            t_f: self.t_f,
            t_tti: self.t_tti,
            t_rffi: self.t_rffi,
            t_air: self.t_air,
        }
    }
}

/// FLOP and byte tallies following the module-level counting rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub flops: u64,
    pub bytes: u64,
}

impl OpCounter {
    pub fn cmul(&mut self, n: usize) {
        self.flops += 6 * n as u64;
    }
    pub fn cadd(&mut self, n: usize) {
        self.flops += 2 * n as u64;
    }
    pub fn cdiv(&mut self, n: usize) {
        self.flops += 11 * n as u64;
    }
    /// Real-by-complex multiply or divide.
    pub fn scale(&mut self, n: usize) {
        self.flops += 2 * n as u64;
    }
    /// Real add, multiply, compare or elementary function.
    pub fn real(&mut self, n: usize) {
        self.flops += n as u64;
    }
    pub fn cabs(&mut self, n: usize) {
        self.flops += 4 * n as u64;
    }
    pub fn cln(&mut self, n: usize) {
        self.flops += 6 * n as u64;
    }
    pub fn fft(&mut self, n: usize) {
        self.flops += 5 * n as u64 * (n as f64).log2().round() as u64;
    }
    pub fn complex_io(&mut self, n: usize) {
        self.bytes += COMPLEX_BYTES * n as u64;
    }
    pub fn real_io(&mut self, n: usize) {
        self.bytes += REAL_BYTES * n as u64;
    }
    pub fn byte_io(&mut self, n: usize) {
        self.bytes += n as u64;
    }
}

impl std::ops::Add for OpCounter {
    type Output = OpCounter;
    fn add(self, o: OpCounter) -> OpCounter {
        OpCounter {
            flops: self.flops + o.flops,
            bytes: self.bytes + o.bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub name: String,
    pub side: Side,
    pub count: OpCounter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Ue,
    Bs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineProfile {
    pub ue: WorkloadProfile,
    pub bs: WorkloadProfile,
    pub stages: Vec<StageCount>,
}

impl PipelineProfile {
    pub fn stage(&self, name: &str) -> Option<&OpCounter> {
        self.stages.iter().find(|s| s.name == name).map(|s| &s.count)
    }
}

fn pilot_count(k: usize) -> OpCounter {
    let mut c = OpCounter::default();
    // from_polar: cos, sin and two real products.
    c.real(4 * k);
    c.complex_io(k);
    c
}

fn modulate_count(k: usize, n: usize) -> OpCounter {
    let mut c = OpCounter::default();
    c.complex_io(k + n);
    c.fft(n);
    c.complex_io(2 * n);
    // Peak search, then scaling.
    c.cabs(n);
    c.real(n);
    c.complex_io(n);
    c.scale(n);
    c.complex_io(2 * n);
    c
}

fn iq_mixer_count(n: usize) -> OpCounter {
    let mut c = OpCounter::default();
    c.cmul(2 * n);
    c.cadd(n);
    c.complex_io(2 * n);
    c
}

fn pa_count(n: usize) -> OpCounter {
    let mut c = OpCounter::default();
    // Basis x |x|^(k-1): one magnitude, then a real-by-complex product and a
    // running power per order.
    c.cabs(n);
    c.scale(n * PA_ORDER);
    c.real(n * PA_ORDER);
    c.complex_io(n + n * PA_ORDER);
    let pairs: usize = (0..n).map(|i| (i + 1).min(PA_MEMORY)).sum();
    c.cmul(pairs * PA_ORDER);
    c.cadd(pairs * PA_ORDER);
    c.complex_io(pairs * PA_ORDER + PA_MEMORY * PA_ORDER + n);
    c
}

fn oscillator_count(n: usize) -> OpCounter {
    let mut c = OpCounter::default();
    // Phase w (n0 + n) + cpo, then the rotor and the product.
    c.real(2 * n);
    c.real(4 * n);
    c.cmul(n);
    c.complex_io(2 * n);
    c
}

fn demodulate_count(k: usize, n: usize) -> OpCounter {
    let mut c = OpCounter::default();
    c.complex_io(n);
    c.fft(n);
    c.complex_io(2 * n);
    c.scale(k);
    c.complex_io(2 * k);
    c
}

fn ls_count(k: usize) -> OpCounter {
    let mut c = OpCounter::default();
    c.cdiv(k);
    c.complex_io(3 * k);
    c
}

/// Both antennas, `k` subcarriers in bands of `width`.
fn lldr_count(k: usize, width: usize, mode: NormalizationMode) -> OpCounter {
    let bands = k / width;
    let mut c = OpCounter::default();
    // Band means of the two antennas (estimates or true responses, either
    // way two length-k reads) and the usability test.
    c.cadd(2 * bands * (width - 1));
    c.scale(2 * bands);
    c.cabs(2 * bands);
    c.real(2 * bands);
    c.complex_io(2 * k);
    if mode == NormalizationMode::OracleCfrMean {
        c.complex_io(2 * k);
    }
    // Per subcarrier: u1, u2, q = u1/u2, u2/r, d, ln r + ln q, |l|, arg q,
    // t = d/l and the running sum.
    c.cdiv(4 * k);
    c.cadd(k);
    c.cln(2 * k);
    c.cadd(k);
    c.cabs(k);
    c.real(k);
    c.cdiv(k);
    c.cadd(k);
    c.complex_io(3 * k);
    // Fill value per band.
    c.scale(bands);
    c.complex_io(k);
    c.byte_io(k);
    c
}

fn vector_count(k: usize) -> OpCounter {
    let mut c = OpCounter::default();
    c.complex_io(k);
    c.real_io(2 * k);
    c
}

/// Eval-mode forward pass of one sample plus the softmax.
fn cnn_count(spec: &CnnSpec) -> OpCounter {
    let mut c = OpCounter::default();
    let conv = |c: &mut OpCounter, cin: usize, cout: usize, hw: usize| {
        let patch = 9 * cin;
        // im2col, GEMM, then the output write.
        c.real_io(cin * hw + patch * hw);
        c.real(2 * patch * cout * hw);
        c.real_io(patch * hw + patch * cout + cout * hw);
        if spec.batch_norm {
            // (x - mean) / sqrt(var + eps) * gamma + beta, rsqrt per channel.
            c.real(4 * cout * hw + 2 * cout);
            c.real_io(2 * cout * hw + 4 * cout);
        } else {
            c.real(cout * hw);
            c.real_io(2 * cout * hw + cout);
        }
        if spec.relu {
            c.real(cout * hw);
            c.real_io(2 * cout * hw);
        }
        // 2x2 max pool: three comparisons per output.
        c.real(3 * cout * hw / 4);
        c.real_io(cout * hw + cout * hw / 4);
    };
    let hw1 = spec.height * spec.width;
    conv(&mut c, spec.in_channels, spec.conv1_filters, hw1);
    conv(&mut c, spec.conv1_filters, spec.conv2_filters, hw1 / 4);
    let flat = spec.flat_len();
    let n = spec.n_classes;
    c.real(2 * flat * n + n);
    c.real_io(flat + flat * n + 2 * n);
    // Softmax: max, shift, exp, sum, divide.
    c.real(5 * n);
    c.real_io(2 * n);
    c
}

/// Runs one frame through pilot generation, the transmit chain, the two
/// receive paths, LS estimation, LLDR, vectorisation and CNN inference, and
/// tallies every stage with the counting rules from the sizes the run
/// actually produced.
///
/// The UE block is pilot generation plus the transmit chain; the BS block is
/// demodulation, estimation, extraction and inference.
pub fn profile_pipeline(link: &LinkConfig, subband: &SubbandConfig, spec: &CnnSpec) -> Result<PipelineProfile> {
    link.validate()?;
    spec.validate()?;
    let sim = LinkSimulator::new(link)?;
    let pilot = PilotGrid::generate(link, 0);
    let tx = impairments::sample_profile(1, &PaCoefficients::base())?;
    let rx1 = RxAntennaProfile::identity(0);
    let rx2 = RxAntennaProfile::identity(1);
    let chan = TdlChannelSpec::preset("tdl20")?;
    let cap = sim.simulate_frame(&FrameRequest {
        pilot: &pilot,
        second_pilot: None,
        tx: &tx,
        rx: [&rx1, &rx2],
        channel: ChannelSource::Tdl {
            spec: &chan,
            seeds: [2, 3],
        },
        snr_db: 30.0,
        noise_seeds: [4, 5],
        frame_index: 0,
    })?;
    let est = estimate_channels(&cap, &pilot)?;
    let r = CalibrationR::from_profiles(&rx1, &rx2, link.k)?;
    let oracle = match subband.normalization_mode {
        NormalizationMode::EstimateMean => None,
        NormalizationMode::OracleCfrMean => Some(sim.channel_responses(&ChannelSource::Tdl {
            spec: &chan,
            seeds: [2, 3],
        })?),
    };
    let feature = extract_lldr(&est, &r, subband, oracle.as_ref().map(|[a, b]| (a.as_slice(), b.as_slice())))?;
    let v = feature_to_vector(&feature);
    let cnn_spec = CnnSpec {
        in_channels: v.len() / (spec.height * spec.width).max(1),
        ..spec.clone()
    };
    let model = Cnn::new(&cnn_spec, 0)?;
    let (_, probs) = predict(&model, &v)?;

    let k = pilot.x.len();
    let n = link.fft_size;
    let kf = est.z1.len();
    let ue_stages = [
        ("pilot", pilot_count(k)),
        ("ofdm_modulate", modulate_count(k, n)),
        ("iq_mixer", iq_mixer_count(n)),
        ("power_amplifier", pa_count(n)),
        ("oscillator", oscillator_count(n)),
    ];
    let bs_stages = [
        ("ofdm_demodulate", {
            let one = demodulate_count(cap.y1.len(), n);
            one + one
        }),
        ("ls_estimate", ls_count(cap.y1.len()) + ls_count(cap.y2.len())),
        ("lldr", lldr_count(kf, subband.width, subband.normalization_mode)),
        ("feature_vector", vector_count(kf)),
        ("cnn_inference", cnn_count(&CnnSpec { n_classes: probs.len(), ..cnn_spec })),
    ];
    let total = |s: &[(&str, OpCounter)]| s.iter().fold(OpCounter::default(), |a, (_, c)| a + *c);
    let (ue_t, bs_t) = (total(&ue_stages), total(&bs_stages));
    let stages = ue_stages
        .iter()
        .map(|(name, c)| (name, Side::Ue, c))
        .chain(bs_stages.iter().map(|(name, c)| (name, Side::Bs, c)))
        .map(|(name, side, c)| StageCount {
            name: name.to_string(),
            side,
            count: *c,
        })
        .collect();
    Ok(PipelineProfile {
        ue: WorkloadProfile::new("ue", ue_t.flops as f64, ue_t.bytes as f64)?,
        bs: WorkloadProfile::new("bs", bs_t.flops as f64, bs_t.bytes as f64)?,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table() -> (WorkloadProfile, WorkloadProfile) {
        (
            WorkloadProfile::new("ue", 7.34e5, 5.91e5).unwrap(),
            WorkloadProfile::new("bs", 1.37e6, 1.39e6).unwrap(),
        )
    }

    #[test]
    fn reference_blocks() {
        let p = RooflineParams::default();
        let (ue, bs) = table();
        let (t, kind) = block_time(&ue, &p);
        assert_eq!(kind, BoundKind::Memory);
        assert!((t - 34.64e-6).abs() / 34.64e-6 < 0.005, "{t}");
        let (t, kind) = block_time(&bs, &p);
        assert_eq!(kind, BoundKind::Memory);
        assert_relative_eq!(t, 1.39e6 / 17.06e9, max_relative = 1e-12);
        assert!((t - 81.04e-6).abs() / 81.04e-6 < 0.01);
        let zero = WorkloadProfile::new("z", 0.0, 0.0).unwrap();
        assert_eq!(block_time(&zero, &p), (0.0, BoundKind::Compute));
    }

    #[test]
    fn tie_is_compute_bound() {
        let p = RooflineParams::new(2.0, 1.0).unwrap();
        let w = WorkloadProfile::new("t", 4.0, 2.0).unwrap();
        assert_eq!(block_time(&w, &p), (2.0, BoundKind::Compute));
        assert_eq!(p.ridge_point(), 2.0);
    }

    #[test]
    fn numerologies() {
        assert_eq!(tti_duration(60e3).unwrap(), 0.25e-3);
        assert_eq!(tti_duration(15e3).unwrap(), 1e-3);
        assert_eq!(tti_duration(30e3).unwrap(), 0.5e-3);
        assert_eq!(tti_duration(120e3).unwrap(), 0.125e-3);
        assert!(matches!(tti_duration(45e3), Err(Error::UnsupportedSpacing(_))));
        assert!(tti_duration(0.0).is_err());
    }

    #[test]
    fn air_budget() {
        let p = RooflineParams::default();
        let (ue, bs) = table();
        let b = air_latency(&ue, &bs, 60e3, &p, Some(81.04e-6)).unwrap();
        assert_eq!(b.t_tti, 0.25e-3);
        assert_eq!(b.t_f, 0.125e-3);
        assert_eq!(b.t_rffi, 81.04e-6);
        assert!((b.t_air - 490.68e-6).abs() < 0.01e-6, "{}", b.t_air);
        let b = air_latency(&ue, &bs, 60e3, &p, None).unwrap();
        assert!((b.t_air - 0.491e-3).abs() / 0.491e-3 < 0.02);
        let z = WorkloadProfile::new("z", 0.0, 0.0).unwrap();
        let b = air_latency(&z, &z, 60e3, &p, None).unwrap();
        assert_relative_eq!(b.t_air, 0.375e-3, max_relative = 1e-15);
        assert!(air_latency(&ue, &bs, 60e3, &p, Some(-1.0)).is_err());
    }

    #[test]
    fn report_json_fields() {
        let (ue, bs) = table();
        let r = latency_report(&ue, &bs, 60e3, &RooflineParams::default(), Some(81.04e-6)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["t_ue", "t_f", "t_tti", "t_rffi", "t_air", "bound_kinds", "params"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["bound_kinds"]["bs"], "memory");
    }

    #[test]
    fn invalid_params_and_workloads() {
        assert!(RooflineParams::new(0.0, 1.0).is_err());
        assert!(RooflineParams::new(1.0, -1.0).is_err());
        assert!(WorkloadProfile::new("w", -1.0, 0.0).is_err());
        assert!(WorkloadProfile::new("w", 0.0, f64::NAN).is_err());
    }

    #[test]
    fn counting_rules() {
        let mut c = OpCounter::default();
        c.cmul(160);
        assert_eq!(c.flops, 960);
        let mut c = OpCounter::default();
        c.cadd(3);
        c.fft(8);
        assert_eq!(c.flops, 6 + 5 * 8 * 3);
    }

    #[test]
    fn extraction_scales_linearly_in_k() {
        let a = lldr_count(160, 16, NormalizationMode::EstimateMean) + vector_count(160);
        let b = lldr_count(320, 16, NormalizationMode::EstimateMean) + vector_count(320);
        let ratio = b.flops as f64 / a.flops as f64;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "{ratio}");
        let ratio = b.bytes as f64 / a.bytes as f64;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "{ratio}");
    }

    #[test]
    fn measured_pipeline_is_in_range() {
        let link = LinkConfig::default();
        let prof = profile_pipeline(&link, &SubbandConfig::estimate_mean(16).unwrap(), &CnnSpec::new(1, 10)).unwrap();
        let ratio = prof.bs.flops / 1.37e6;
        assert!((0.1..=10.0).contains(&ratio), "BS FLOPs {}", prof.bs.flops);
        assert!(prof.ue.flops > 0.0 && prof.ue.bytes > 0.0);
        assert_eq!(prof.stages.len(), 10);
        assert!(prof.stage("lldr").is_some());
    }

    proptest! {
        #[test]
        fn block_time_monotone(f in 0.0..1e9f64, b in 0.0..1e9f64, df in 0.0..1e8f64, db in 0.0..1e8f64) {
            let p = RooflineParams::default();
            let w0 = WorkloadProfile::new("a", f, b).unwrap();
            let w1 = WorkloadProfile::new("b", f + df, b + db).unwrap();
            let (t0, k0) = block_time(&w0, &p);
            prop_assert!(block_time(&w1, &p).0 >= t0);
            prop_assert_eq!(k0 == BoundKind::Memory, b / p.mem_bandwidth > f / p.peak_flops);
        }

        #[test]
        fn components_sum(f in 0.0..1e8f64, b in 0.0..1e8f64, mu in 0u32..4) {
            let p = RooflineParams::default();
            let w = WorkloadProfile::new("w", f, b).unwrap();
            let scs = 15e3 * f64::from(1u32 << mu);
            let r = air_latency(&w, &w, scs, &p, None).unwrap();
            prop_assert_eq!(r.t_air, r.t_ue + r.t_f + r.t_tti + r.t_rffi);
            prop_assert_eq!(r.t_f, r.t_tti / 2.0);
            prop_assert!(r.t_ue >= 0.0 && r.t_rffi >= 0.0);
        }
    }
}
