//! OFDM pilot link: pilot grids, the SIMO frame simulator and LS estimation.
//!
//! A frame is one pilot OFDM symbol (optionally followed by a second,
//! adjacent pilot symbol for the DoLoS baseline). The transmit impairments
//! run on the time-domain symbol; after the FFT each receive antenna applies
//! its channel response `H_i(k)`, its receive response `R_i(k)` and noise.

use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::{self, TdlChannelSpec};
use crate::error::{invalid, Error, Result};
use crate::impairments::{self, ImpairmentProfile, RxAntennaProfile};
use crate::{seed, C64};

/// Sub-band widths the link must support without ragged edges.
pub const SUPPORTED_SUBBAND_WIDTHS: [usize; 4] = [4, 8, 16, 32];

/// What the `snr_db` of a frame is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Received waveform power over the sampled bandwidth `fft_size * scs`,
    /// measured per antenna and frame. The noise spans every FFT bin while
    /// the pilot occupies `k` of them.
    #[default]
    Waveform,
    /// Mean received power per active subcarrier, measured per antenna and
    /// frame.
    Subcarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub carrier_freq_hz: f64,
    pub scs_hz: f64,
    pub bandwidth_hz: f64,
    /// Usable subcarriers.
    pub k: usize,
    pub fft_size: usize,
    #[serde(default)]
    pub snr_reference: SnrReference,
    /// Peak magnitude of the time-domain pilot symbol at the PA input.
    #[serde(default = "default_pa_peak")]
    pub pa_peak: f64,
}

fn default_pa_peak() -> f64 {
    DEFAULT_PA_PEAK
}

/// Default PA input peak: 6 dB below the unit-amplitude operating point,
/// which keeps the PA's pilot dependence of `T(k)` near 0.45 %.
pub const DEFAULT_PA_PEAK: f64 = 0.5;

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            carrier_freq_hz: 10e9,
            scs_hz: 60e3,
            bandwidth_hz: 10e6,
            k: 160,
            fft_size: 256,
            snr_reference: SnrReference::Waveform,
            pa_peak: DEFAULT_PA_PEAK,
        }
    }
}

impl LinkConfig {
    pub fn fs_hz(&self) -> f64 {
        self.fft_size as f64 * self.scs_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scs_hz > 0.0) || !(self.bandwidth_hz > 0.0) || !(self.carrier_freq_hz > 0.0) {
            return Err(invalid("frequencies must be positive"));
        }
        if self.k == 0 || self.k > self.fft_size {
            return Err(invalid(format!(
                "usable subcarriers {} must be in 1..={}",
                self.k, self.fft_size
            )));
        }
        // Active subcarriers sit symmetrically around an unused DC bin.
        if self.k % 2 != 0 || self.k / 2 >= self.fft_size / 2 {
            return Err(invalid("usable subcarriers must be even and leave the DC bin free"));
        }
        if let Some(w) = SUPPORTED_SUBBAND_WIDTHS.iter().find(|w| self.k % **w != 0) {
            return Err(invalid(format!("K = {} is not divisible by sub-band width {w}", self.k)));
        }
        if !(self.pa_peak > 0.0 && self.pa_peak <= 1.0) {
            return Err(invalid("PA input peak must be in (0, 1]"));
        }
        if self.k as f64 * self.scs_hz > self.bandwidth_hz * (1.0 + 1e-12) {
            return Err(invalid("usable subcarriers exceed the channel bandwidth"));
        }
        Ok(())
    }

    /// FFT bin of logical subcarrier `k`: the lower half maps to negative
    /// frequencies `-K/2..-1`, the upper half to `1..K/2`. Every active
    /// subcarrier therefore has an active mirror `-f`.
    pub fn bin_of(&self, k: usize) -> usize {
        let half = (self.k / 2) as isize;
        let kk = k as isize;
        let offset = if kk < half { kk - half } else { kk - half + 1 };
        offset.rem_euclid(self.fft_size as isize) as usize
    }

    /// Logical index of the subcarrier mirrored around DC.
    pub fn mirror_of(&self, k: usize) -> usize {
        self.k - 1 - k
    }
}

/// Unit-modulus QPSK pilot on the usable subcarriers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotGrid {
    pub x: Vec<C64>,
}

impl PilotGrid {
    pub fn generate(config: &LinkConfig, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let base = std::f64::consts::FRAC_PI_4;
        let x = (0..config.k)
            .map(|_| {
                let q: u8 = rng.gen_range(0..4);
                C64::from_polar(1.0, base + q as f64 * std::f64::consts::FRAC_PI_2)
            })
            .collect();
        PilotGrid { x }
    }
}

pub fn generate_pilot(config: &LinkConfig, seed: u64) -> Result<PilotGrid> {
    config.validate()?;
    Ok(PilotGrid::generate(config, seed))
}

/// A modulated OFDM symbol. `scale` maps FFT output back to the grid
/// amplitude: `grid = fft(samples)[bins] / scale`.
#[derive(Debug, Clone)]
pub struct Symbol {
    pub samples: Vec<C64>,
    pub scale: f64,
}

/// Planned FFTs and the subcarrier-to-bin map for one link configuration.
#[derive(Clone)]
pub struct OfdmEngine {
    config: LinkConfig,
    bins: Vec<usize>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OfdmEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmEngine").field("config", &self.config).finish()
    }
}

impl OfdmEngine {
    pub fn new(config: &LinkConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(OfdmEngine {
            config: config.clone(),
            bins: (0..config.k).map(|k| config.bin_of(k)).collect(),
            fft: planner.plan_fft_forward(config.fft_size),
            ifft: planner.plan_fft_inverse(config.fft_size),
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Maps the grid onto the FFT bins and scales the time-domain symbol to
    /// the configured PA input peak.
    pub fn modulate(&self, grid: &[C64]) -> Result<Symbol> {
        if grid.len() != self.config.k {
            return Err(Error::LengthMismatch {
                expected: self.config.k,
                actual: grid.len(),
            });
        }
        let n = self.config.fft_size;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (&b, &v) in self.bins.iter().zip(grid) {
            buf[b] = v;
        }
        self.ifft.process(&mut buf);
        let peak = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = if peak > 0.0 { self.config.pa_peak / peak } else { 1.0 };
        for v in buf.iter_mut() {
            *v *= s;
        }
        Ok(Symbol {
            samples: buf,
            scale: s * n as f64,
        })
    }

    /// FFT of one symbol, returning the usable subcarriers divided by `scale`.
    pub fn demodulate(&self, samples: &[C64], scale: f64) -> Result<Vec<C64>> {
        if samples.len() != self.config.fft_size {
            return Err(Error::LengthMismatch {
                expected: self.config.fft_size,
                actual: samples.len(),
            });
        }
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        Ok(self.bins.iter().map(|&b| buf[b] / scale).collect())
    }
}

/// Identifying metadata carried with every capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FrameMeta {
    pub device_id: u32,
    pub frame_index: u64,
    pub channel: String,
}

/// Frequency-domain received subcarriers of both antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxCapture {
    pub y1: Vec<C64>,
    pub y2: Vec<C64>,
    /// The adjacent second pilot symbol, when the frame carries one.
    pub second: Option<[Vec<C64>; 2]>,
    pub snr_db: f64,
    /// Per-antenna noise variance actually applied (0 when noiseless).
    pub noise_var: [f64; 2],
    pub meta: FrameMeta,
}

/// LS channel estimates of both antennas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub z1: Vec<C64>,
    pub z2: Vec<C64>,
}

/// Where the per-antenna channel responses of a frame come from.
#[derive(Debug, Clone)]
pub enum ChannelSource<'a> {
    /// Independent realisations of `spec` from two seeds.
    Tdl { spec: &'a TdlChannelSpec, seeds: [u64; 2] },
    /// Explicit responses, one per antenna.
    Given([Vec<C64>; 2]),
}

/// Everything that determines one simulated frame.
#[derive(Debug, Clone)]
pub struct FrameRequest<'a> {
    pub pilot: &'a PilotGrid,
    pub second_pilot: Option<&'a PilotGrid>,
    pub tx: &'a ImpairmentProfile,
    pub rx: [&'a RxAntennaProfile; 2],
    pub channel: ChannelSource<'a>,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub noise_seeds: [u64; 2],
    pub frame_index: u64,
}

/// Frame simulator bound to one link configuration.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    engine: OfdmEngine,
}

impl LinkSimulator {
    pub fn new(config: &LinkConfig) -> Result<Self> {
        Ok(LinkSimulator {
            engine: OfdmEngine::new(config)?,
        })
    }

    pub fn engine(&self) -> &OfdmEngine {
        &self.engine
    }

    pub fn config(&self) -> &LinkConfig {
        self.engine.config()
    }

    /// Transmit response seen on the usable subcarriers for one symbol that
    /// starts at absolute sample `n0`, i.e. `Y(k) / X(k)` behind an ideal
    /// channel and receiver.
    pub fn tx_response(&self, tx: &ImpairmentProfile, pilot: &PilotGrid, n0: usize) -> Result<Vec<C64>> {
        impairments::oracle_tx_response_with(&self.engine, tx, pilot, n0)
    }

    /// Per-antenna channel responses of a frame.
    pub fn channel_responses(&self, source: &ChannelSource<'_>) -> Result<[Vec<C64>; 2]> {
        let cfg = self.config();
        match source {
            ChannelSource::Tdl { spec, seeds } => {
                let h1 = channel::cfr(&channel::realize(spec, seeds[0]), spec, cfg.k, cfg.scs_hz)?.h;
                let h2 = channel::cfr(&channel::realize(spec, seeds[1]), spec, cfg.k, cfg.scs_hz)?.h;
                Ok([h1, h2])
            }
            ChannelSource::Given(h) => {
                for hi in h.iter() {
                    if hi.len() != cfg.k {
                        return Err(Error::LengthMismatch {
                            expected: cfg.k,
                            actual: hi.len(),
                        });
                    }
                }
                Ok(h.clone())
            }
        }
    }

    pub fn simulate_frame(&self, req: &FrameRequest<'_>) -> Result<RxCapture> {
        let cfg = self.config();
        if req.pilot.x.len() != cfg.k {
            return Err(Error::LengthMismatch {
                expected: cfg.k,
                actual: req.pilot.x.len(),
            });
        }
        let h = self.channel_responses(&req.channel)?;
        let r = [
            impairments::rx_response(req.rx[0], cfg.k),
            impairments::rx_response(req.rx[1], cfg.k),
        ];

        let t1 = self.tx_response(req.tx, req.pilot, 0)?;
        let clean = |t: &[C64], x: &[C64], i: usize| -> Vec<C64> {
            (0..cfg.k).map(|k| r[i][k] * h[i][k] * t[k] * x[k]).collect()
        };
        let mut noise_var = [0.0; 2];
        let mut y = [Vec::new(), Vec::new()];
        for i in 0..2 {
            let c = clean(&t1, &req.pilot.x, i);
            noise_var[i] = self.noise_variance(&c, req.snr_db)?;
            y[i] = channel::add_noise(&c, noise_var[i], req.noise_seeds[i]);
        }

        let second = match req.second_pilot {
            Some(p2) => {
                let t2 = self.tx_response(req.tx, p2, cfg.fft_size)?;
                let mut ys = [Vec::new(), Vec::new()];
                for i in 0..2 {
                    let c = clean(&t2, &p2.x, i);
                    let s = seed::derive(req.noise_seeds[i], &[2]);
                    ys[i] = channel::add_noise(&c, noise_var[i], s);
                }
                Some(ys)
            }
            None => None,
        };

        let [y1, y2] = y;
        Ok(RxCapture {
            y1,
            y2,
            second,
            snr_db: req.snr_db,
            noise_var,
            meta: FrameMeta {
                device_id: req.tx.device_id,
                frame_index: req.frame_index,
                channel: match &req.channel {
                    ChannelSource::Tdl { spec, .. } => spec.name.clone(),
                    ChannelSource::Given(_) => "given".into(),
                },
            },
        })
    }

    /// Noise variance per subcarrier for a clean received grid.
    fn noise_variance(&self, clean: &[C64], snr_db: f64) -> Result<f64> {
        if snr_db.is_nan() {
            return Err(invalid("snr_db is NaN"));
        }
        if snr_db == f64::INFINITY {
            return Ok(0.0);
        }
        let cfg = self.config();
        let mean_sc = clean.iter().map(|v| v.norm_sqr()).sum::<f64>() / clean.len() as f64;
        let signal_power = match cfg.snr_reference {
            SnrReference::Subcarrier => mean_sc,
            SnrReference::Waveform => mean_sc * cfg.k as f64 / cfg.fft_size as f64,
        };
        if !(signal_power > 0.0) {
            // A channel realisation that is exactly zero carries no signal
            // to measure against; fall back to unit power.
            return Ok(10f64.powf(-snr_db / 10.0));
        }
        Ok(signal_power * 10f64.powf(-snr_db / 10.0))
    }
}

/// LS estimation `z_i[k] = y_i[k] / x[k]`.
pub fn estimate_channels(capture: &RxCapture, pilot: &PilotGrid) -> Result<ChannelEstimate> {
    Ok(ChannelEstimate {
        z1: ls_divide(&capture.y1, &pilot.x)?,
        z2: ls_divide(&capture.y2, &pilot.x)?,
    })
}

/// LS estimates of the adjacent second symbol, if the capture has one.
pub fn estimate_second(capture: &RxCapture, pilot: &PilotGrid) -> Result<Option<ChannelEstimate>> {
    match &capture.second {
        Some([a, b]) => Ok(Some(ChannelEstimate {
            z1: ls_divide(a, &pilot.x)?,
            z2: ls_divide(b, &pilot.x)?,
        })),
        None => Ok(None),
    }
}

fn ls_divide(y: &[C64], x: &[C64]) -> Result<Vec<C64>> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if let Some(k) = x.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(Error::ZeroPilot(k));
    }
    Ok(y.iter().zip(x).map(|(y, x)| y / x).collect())
}
