//! Fingerprint extraction from two-antenna channel estimates.
//!
//! The LLDR extractor splits the `K` subcarriers into sub-bands, normalises
//! each antenna's estimate by its sub-band mean and forms
//!
//! ```text
//! D(k) = u1(k) - u2(k) / r(k)
//! L(k) = ln r(k) + ln(u1(k) / u2(k))
//! T0(k) = D(k) / L(k)
//! ```
//!
//! where `r = R2 / R1` is the receive-side calibration. Three baselines
//! (DoLoS, raw IQ, and LLDR over one full-width band) share the
//! [`RffFeature`] container.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{self, TdlChannelSpec};
use crate::error::{invalid, Error, Result};
use crate::impairments::{self, ImpairmentProfile, RxAntennaProfile};
use crate::link::{ChannelEstimate, LinkConfig, PilotGrid, RxCapture, SUPPORTED_SUBBAND_WIDTHS};
use crate::{seed, C64};

/// Default singularity guard on `|L(k)|`.
pub const DEFAULT_EPSILON_L12: f64 = 1e-6;
/// Default guard on the magnitude of a sub-band mean.
pub const DEFAULT_EPSILON_MEAN: f64 = 1e-12;

/// Per-entry flag bits stored in [`RffFeature::flags`].
pub mod flag {
    /// `|L(k)|` fell below the singularity guard.
    pub const SINGULAR: u8 = 1 << 0;
    /// Normalised estimates were more than 90 degrees apart.
    pub const OUTLIER: u8 = 1 << 1;
    /// The whole sub-band was unusable and filled with `1 + 0j`.
    pub const DEGENERATE: u8 = 1 << 2;
    /// A zero-magnitude estimate in a log-magnitude feature.
    pub const ZERO_MAGNITUDE: u8 = 1 << 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lldr,
    Dolos,
    RawIq,
    NoSubband,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lldr, Method::Dolos, Method::RawIq, Method::NoSubband];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lldr => "lldr",
            Method::Dolos => "dolos",
            Method::RawIq => "raw_iq",
            Method::NoSubband => "no_subband",
        }
    }

    /// Length of the real classifier input vector for `K` subcarriers.
    pub fn vector_len(&self, k: usize) -> usize {
        match self {
            Method::RawIq => 4 * k,
            _ => 2 * k,
        }
    }

    /// Whether frames for this method carry a second pilot symbol.
    pub fn needs_second_symbol(&self) -> bool {
        matches!(self, Method::Dolos)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown method '{s}' (expected lldr, dolos, raw_iq or no_subband)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Divide by the sub-band mean of the channel estimates themselves.
    EstimateMean,
    /// Divide by the sub-band mean of the true channel responses. Only
    /// available in simulation.
    OracleCfrMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubbandConfig {
    pub width: usize,
    pub normalization_mode: NormalizationMode,
    pub epsilon_l12: f64,
    pub epsilon_mean: f64,
}

impl SubbandConfig {
    pub fn new(width: usize, normalization_mode: NormalizationMode) -> Result<Self> {
        let cfg = SubbandConfig {
            width,
            normalization_mode,
            epsilon_l12: DEFAULT_EPSILON_L12,
            epsilon_mean: DEFAULT_EPSILON_MEAN,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn estimate_mean(width: usize) -> Result<Self> {
        Self::new(width, NormalizationMode::EstimateMean)
    }

    pub fn oracle(width: usize) -> Result<Self> {
        Self::new(width, NormalizationMode::OracleCfrMean)
    }

    fn check(&self) -> Result<()> {
        if !SUPPORTED_SUBBAND_WIDTHS.contains(&self.width) {
            return Err(invalid(format!(
                "sub-band width {} not in {SUPPORTED_SUBBAND_WIDTHS:?}",
                self.width
            )));
        }
        if !(self.epsilon_l12 > 0.0) || !(self.epsilon_mean > 0.0) {
            return Err(invalid("epsilon thresholds must be positive"));
        }
        Ok(())
    }
}

/// Relative receive-side impairment `r(k) = R2(k) / R1(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationR {
    r: Vec<C64>,
}

impl CalibrationR {
    pub fn new(r: Vec<C64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("calibration vector is empty"));
        }
        if r.iter().any(|v| v.norm_sqr() == 0.0 || !v.is_finite()) {
            return Err(invalid("calibration entries must be finite and nonzero"));
        }
        Ok(CalibrationR { r })
    }

    pub fn scalar(r: C64, k: usize) -> Result<Self> {
        Self::new(vec![r; k])
    }

    pub fn ones(k: usize) -> Self {
        CalibrationR {
            r: vec![C64::new(1.0, 0.0); k],
        }
    }

    /// Perfect calibration from the ground-truth antenna profiles.
    pub fn from_profiles(rx1: &RxAntennaProfile, rx2: &RxAntennaProfile, k: usize) -> Result<Self> {
        let r1 = impairments::rx_response(rx1, k);
        let r2 = impairments::rx_response(rx2, k);
        Self::new(r2.iter().zip(&r1).map(|(a, b)| a / b).collect())
    }

    pub fn values(&self) -> &[C64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureValues {
    Complex(Vec<C64>),
    Real(Vec<f64>),
}

impl FeatureValues {
    pub fn len(&self) -> usize {
        match self {
            FeatureValues::Complex(v) => v.len(),
            FeatureValues::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub device_id: u32,
    pub snr_db: f64,
    pub frame_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffFeature {
    pub method: Method,
    pub values: FeatureValues,
    /// One bitmask of [`flag`] values per entry of `values`.
    pub flags: Vec<u8>,
    pub meta: FeatureMeta,
}

impl RffFeature {
    pub fn with_meta(mut self, meta: FeatureMeta) -> Self {
        self.meta = meta;
        self
    }

    /// The complex per-subcarrier estimate, for complex-valued methods.
    pub fn t_hat(&self) -> Option<&[C64]> {
        match &self.values {
            FeatureValues::Complex(v) => Some(v),
            FeatureValues::Real(_) => None,
        }
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| **f != 0).count()
    }

    pub fn is_flagged(&self) -> bool {
        self.flagged_count() > 0
    }

    /// Every entry was filled rather than measured.
    pub fn is_fully_degenerate(&self) -> bool {
        !self.flags.is_empty() && self.flags.iter().all(|f| f & flag::DEGENERATE != 0)
    }

    pub fn is_finite(&self) -> bool {
        match &self.values {
            FeatureValues::Complex(v) => v.iter().all(|c| c.is_finite()),
            FeatureValues::Real(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Sub-band LLDR extraction.
///
/// `oracle_cfrs` must hold the true `(H1, H2)` in oracle-cfr-mean mode and
/// is ignored otherwise.
pub fn extract_lldr(
    est: &ChannelEstimate,
    r: &CalibrationR,
    cfg: &SubbandConfig,
    oracle_cfrs: Option<(&[C64], &[C64])>,
) -> Result<RffFeature> {
    cfg.check()?;
    let k = est.z1.len();
    if k % cfg.width != 0 {
        return Err(invalid(format!("width {} does not divide K = {k}", cfg.width)));
    }
    let means = match cfg.normalization_mode {
        NormalizationMode::EstimateMean => None,
        NormalizationMode::OracleCfrMean => {
            let (h1, h2) = oracle_cfrs.ok_or_else(|| invalid("oracle-cfr-mean mode requires the true channel responses"))?;
            check_len(h1.len(), k)?;
            check_len(h2.len(), k)?;
            Some((h1, h2))
        }
    };
    lldr_subbands(est, r, cfg.width, cfg.epsilon_l12, cfg.epsilon_mean, means, Method::Lldr)
}

/// LLDR over a single sub-band spanning every subcarrier.
pub fn extract_no_subband(est: &ChannelEstimate, r: &CalibrationR) -> Result<RffFeature> {
    let k = est.z1.len();
    if k == 0 {
        return Err(invalid("empty channel estimate"));
    }
    lldr_subbands(est, r, k, DEFAULT_EPSILON_L12, DEFAULT_EPSILON_MEAN, None, Method::NoSubband)
}

fn mean(v: &[C64]) -> C64 {
    v.iter().sum::<C64>() / v.len() as f64
}

fn lldr_subbands(
    est: &ChannelEstimate,
    r: &CalibrationR,
    width: usize,
    eps_l: f64,
    eps_mean: f64,
    oracle: Option<(&[C64], &[C64])>,
    method: Method,
) -> Result<RffFeature> {
    let k = est.z1.len();
    check_len(est.z2.len(), k)?;
    check_len(r.len(), k)?;
    let mut t = vec![C64::new(0.0, 0.0); k];
    let mut flags = vec![0u8; k];
    for start in (0..k).step_by(width) {
        let band = start..start + width;
        let z1 = &est.z1[band.clone()];
        let z2 = &est.z2[band.clone()];
        let (a1, a2) = match oracle {
            Some((h1, h2)) => (mean(&h1[band.clone()]), mean(&h2[band.clone()])),
            None => (mean(z1), mean(z2)),
        };
        let usable = a1.is_finite() && a2.is_finite() && a1.norm() >= eps_mean && a2.norm() >= eps_mean;
        if !usable {
            fill_degenerate(&mut t[band.clone()], &mut flags[band]);
            continue;
        }
        let mut sum = C64::new(0.0, 0.0);
        let mut good = 0usize;
        for (j, kk) in band.clone().enumerate() {
            let u1 = z1[j] / a1;
            let u2 = z2[j] / a2;
            let rk = r.values()[kk];
            // Taking the log of the ratio keeps the common phase of T out of
            // the branch choice.
            let q = u1 / u2;
            let d = u1 - u2 / rk;
            let l = rk.ln() + q.ln();
            let mut f = 0u8;
            if !(l.norm() >= eps_l) {
                f |= flag::SINGULAR;
            }
            if !(q.arg().abs() <= std::f64::consts::FRAC_PI_2) {
                f |= flag::OUTLIER;
            }
            let v = d / l;
            if f == 0 && v.is_finite() {
                t[kk] = v;
                sum += v;
                good += 1;
            } else {
                flags[kk] = f | if v.is_finite() { 0 } else { flag::SINGULAR };
            }
        }
        if good == 0 {
            fill_degenerate(&mut t[band.clone()], &mut flags[band]);
            continue;
        }
        let fill = sum / good as f64;
        for kk in band {
            if flags[kk] != 0 {
                t[kk] = fill;
            }
        }
    }
    Ok(RffFeature {
        method,
        values: FeatureValues::Complex(t),
        flags,
        meta: FeatureMeta::default(),
    })
}

fn fill_degenerate(t: &mut [C64], flags: &mut [u8]) {
    for (v, f) in t.iter_mut().zip(flags.iter_mut()) {
        *v = C64::new(1.0, 0.0);
        *f |= flag::DEGENERATE;
    }
}

/// Log-magnitude difference between two adjacent pilot symbols, antenna 1
/// followed by antenna 2.
pub fn extract_dolos(est_t1: &ChannelEstimate, est_t2: &ChannelEstimate) -> Result<RffFeature> {
    let k = est_t1.z1.len();
    check_len(est_t1.z2.len(), k)?;
    check_len(est_t2.z1.len(), k)?;
    check_len(est_t2.z2.len(), k)?;
    let mut values = Vec::with_capacity(2 * k);
    let mut flags = Vec::with_capacity(2 * k);
    for (a, b) in [(&est_t1.z1, &est_t2.z1), (&est_t1.z2, &est_t2.z2)] {
        for (x, y) in a.iter().zip(b.iter()) {
            let (mx, my) = (x.norm(), y.norm());
            if mx > 0.0 && my > 0.0 && mx.is_finite() && my.is_finite() {
                values.push(mx.ln() - my.ln());
                flags.push(0);
            } else {
                values.push(0.0);
                flags.push(flag::ZERO_MAGNITUDE);
            }
        }
    }
    Ok(RffFeature {
        method: Method::Dolos,
        values: FeatureValues::Real(values),
        flags,
        meta: FeatureMeta::default(),
    })
}

/// The received subcarriers of both antennas, unprocessed.
pub fn extract_raw_iq(capture: &RxCapture) -> RffFeature {
    let mut v = Vec::with_capacity(capture.y1.len() + capture.y2.len());
    v.extend_from_slice(&capture.y1);
    v.extend_from_slice(&capture.y2);
    RffFeature {
        method: Method::RawIq,
        flags: vec![0; v.len()],
        values: FeatureValues::Complex(v),
        meta: FeatureMeta {
            device_id: capture.meta.device_id,
            snr_db: capture.snr_db,
            frame_index: capture.meta.frame_index,
        },
    }
}

/// Real classifier input: real parts then imaginary parts for complex
/// features, the values themselves for real features.
pub fn feature_to_vector(f: &RffFeature) -> Vec<f64> {
    match &f.values {
        FeatureValues::Complex(v) => v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)).collect(),
        FeatureValues::Real(v) => v.clone(),
    }
}

/// RMS of `|H(k) / mean_band(H) - 1|` over all subcarriers, the spread of
/// the normalised channel around its band mean.
pub fn subband_deviation(h: &[C64], width: usize) -> Result<f64> {
    if width == 0 || h.len() % width != 0 {
        return Err(invalid("width must divide the response length"));
    }
    let mut acc = 0.0;
    for band in h.chunks(width) {
        let m = mean(band);
        acc += band.iter().map(|v| (v / m - 1.0).norm_sqr()).sum::<f64>();
    }
    Ok((acc / h.len() as f64).sqrt())
}

/// Monte-Carlo setup for [`variance_probe`].
#[derive(Debug, Clone)]
pub struct VarianceProbe {
    pub link: LinkConfig,
    pub channel: TdlChannelSpec,
    pub subband: SubbandConfig,
    /// Channel amplitude scale levels `sigma_H`.
    pub sigma_h: Vec<f64>,
    /// Noise standard deviation levels `sigma_N` on the LS estimate.
    pub sigma_n: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Reuse one channel realisation for every trial, so the variance is
    /// over noise only.
    pub fixed_channel: bool,
}

/// Minimum trials per cell accepted by [`variance_probe`].
pub const MIN_PROBE_TRIALS: usize = 1000;

impl Default for VarianceProbe {
    /// tdl20, oracle normalisation at width 16, three channel scales by four
    /// noise levels, 1000 trials per cell.
    fn default() -> Self {
        VarianceProbe {
            link: LinkConfig::default(),
            channel: TdlChannelSpec::preset("tdl20").expect("built-in preset"),
            subband: SubbandConfig::oracle(16).expect("supported width"),
            sigma_h: vec![0.5, 1.0, 2.0],
            sigma_n: vec![0.0, 0.01, 0.03, 0.1],
            trials: MIN_PROBE_TRIALS,
            seed: 0,
            fixed_channel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    pub sigma_h: Vec<f64>,
    pub sigma_n: Vec<f64>,
    /// `variance[i][j]` is the cell for `sigma_h[i]`, `sigma_n[j]`.
    pub variance: Vec<Vec<f64>>,
    pub trials: usize,
}

impl VarianceTable {
    /// Whether every row increases strictly along `sigma_n`.
    pub fn strictly_increasing_in_noise(&self) -> bool {
        self.variance.iter().all(|row| row.windows(2).all(|w| w[1] > w[0]))
    }
}

/// Empirical `Var(T0(k))`, averaged over subcarriers, for each pair of
/// channel scale and noise level.
///
/// Every cell reuses the same channel and unit-noise draws (common random
/// numbers), so cells differ only through `sigma_H` and `sigma_N`.
pub fn variance_probe(
    probe: &VarianceProbe,
    tx: &ImpairmentProfile,
    rx: [&RxAntennaProfile; 2],
) -> Result<VarianceTable> {
    if probe.trials < MIN_PROBE_TRIALS {
        return Err(invalid(format!("variance probe needs at least {MIN_PROBE_TRIALS} trials per cell")));
    }
    if probe.sigma_h.is_empty() || probe.sigma_n.is_empty() {
        return Err(invalid("sigma grids must be non-empty"));
    }
    if probe.sigma_h.iter().any(|s| !(*s > 0.0)) || probe.sigma_n.iter().any(|s| !(*s >= 0.0)) {
        return Err(invalid("sigma_H must be positive and sigma_N non-negative"));
    }
    let ctx = ProbeContext::new(probe, tx, rx)?;
    let mut variance = Vec::with_capacity(probe.sigma_h.len());
    for &sh in &probe.sigma_h {
        let row = probe
            .sigma_n
            .iter()
            .map(|&sn| ctx.cell(sh, sn, probe.trials, probe.seed))
            .collect::<Result<Vec<_>>>()?;
        variance.push(row);
    }
    Ok(VarianceTable {
        sigma_h: probe.sigma_h.clone(),
        sigma_n: probe.sigma_n.clone(),
        variance,
        trials: probe.trials,
    })
}

struct ProbeContext<'a> {
    probe: &'a VarianceProbe,
    /// `R_i(k) T(k)` per antenna.
    gain: [Vec<C64>; 2],
    r: CalibrationR,
}

impl<'a> ProbeContext<'a> {
    fn new(probe: &'a VarianceProbe, tx: &ImpairmentProfile, rx: [&RxAntennaProfile; 2]) -> Result<Self> {
        let k = probe.link.k;
        let pilot = PilotGrid::generate(&probe.link, seed::derive(probe.seed, &[seed::tag::PILOT]));
        let t = impairments::oracle_tx_response(tx, &pilot, &probe.link)?;
        let g = |p: &RxAntennaProfile| -> Vec<C64> {
            impairments::rx_response(p, k).iter().zip(&t).map(|(a, b)| a * b).collect()
        };
        Ok(ProbeContext {
            probe,
            gain: [g(rx[0]), g(rx[1])],
            r: CalibrationR::from_profiles(rx[0], rx[1], k)?,
        })
    }

    fn cell(&self, sigma_h: f64, sigma_n: f64, trials: usize, seed_base: u64) -> Result<f64> {
        let link = &self.probe.link;
        let k = link.k;
        let mut sum = vec![C64::new(0.0, 0.0); k];
        let mut sum_sq = vec![0.0; k];
        for trial in 0..trials as u64 {
            let mut z = [Vec::new(), Vec::new()];
            let mut h = [Vec::new(), Vec::new()];
            for i in 0..2 {
                let channel_trial = if self.probe.fixed_channel { 0 } else { trial };
                let cs = seed::derive(self.probe.seed, &[seed::tag::TRIAL, channel_trial, seed::tag::CHANNEL, i as u64]);
                let ns = seed::derive(seed_base, &[seed::tag::TRIAL, trial, seed::tag::NOISE, i as u64]);
                let real = channel::realize(&self.probe.channel, cs);
                h[i] = channel::cfr(&real, &self.probe.channel, k, link.scs_hz)?
                    .h
                    .iter()
                    .map(|v| v * sigma_h)
                    .collect();
                let clean: Vec<C64> = h[i].iter().zip(&self.gain[i]).map(|(h, g)| h * g).collect();
                z[i] = channel::add_noise(&clean, sigma_n * sigma_n, ns);
            }
            let [z1, z2] = z;
            let f = extract_lldr(
                &ChannelEstimate { z1, z2 },
                &self.r,
                &self.probe.subband,
                Some((&h[0], &h[1])),
            )?;
            for (kk, v) in f.t_hat().expect("lldr feature is complex").iter().enumerate() {
                sum[kk] += v;
                sum_sq[kk] += v.norm_sqr();
            }
        }
        let n = trials as f64;
        let per_k: f64 = sum
            .iter()
            .zip(&sum_sq)
            .map(|(s, q)| (q - s.norm_sqr() / n) / (n - 1.0))
            .sum();
        Ok(per_k / k as f64)
    }
}
