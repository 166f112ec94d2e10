//! Tapped-delay-line multipath channels and receiver noise.
//!
//! One realisation is drawn per frame and antenna (block fading); the two
//! receive antennas share a power-delay profile but use independent seeds.

use std::f64::consts::PI;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::{seed, C64};

/// Version tag expected in channel preset files.
pub const PRESET_FILE_VERSION: u32 = 1;

/// Names of the bundled presets.
pub const PRESET_NAMES: [&str; 3] = ["tdl4", "tdl20", "tdl24"];

const TDL4: &str = include_str!("../data/tdl4.txt");
const TDL20: &str = include_str!("../data/tdl20.txt");
const TDL24: &str = include_str!("../data/tdl24.txt");

/// Power-delay profile of a TDL channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlChannelSpec {
    pub name: String,
    path_delays_s: Vec<f64>,
    avg_path_gains_db: Vec<f64>,
}

impl TdlChannelSpec {
    /// Delays must be finite, non-negative and ascending; gains may be
    /// `-inf` (a tap that is always zero).
    pub fn new(name: impl Into<String>, path_delays_s: Vec<f64>, avg_path_gains_db: Vec<f64>) -> Result<Self> {
        if path_delays_s.is_empty() {
            return Err(invalid("channel needs at least one path"));
        }
        if path_delays_s.len() != avg_path_gains_db.len() {
            return Err(Error::LengthMismatch {
                expected: path_delays_s.len(),
                actual: avg_path_gains_db.len(),
            });
        }
        if path_delays_s.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(invalid("path delays must be finite and non-negative"));
        }
        if path_delays_s.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("path delays must be sorted ascending"));
        }
        if avg_path_gains_db.iter().any(|g| g.is_nan() || *g == f64::INFINITY) {
            return Err(invalid("path gains must be finite or -inf"));
        }
        Ok(TdlChannelSpec {
            name: name.into(),
            path_delays_s,
            avg_path_gains_db,
        })
    }

    /// A single flat tap at 0 dB and zero delay.
    pub fn flat() -> Self {
        Self::new("flat", vec![0.0], vec![0.0]).unwrap()
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "tdl4" => TDL4,
            "tdl20" => TDL20,
            "tdl24" => TDL24,
            other => {
                return Err(invalid(format!(
                    "unknown channel preset '{other}' (expected one of {PRESET_NAMES:?})"
                )))
            }
        };
        Self::parse(name, text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        Self::parse(name, &std::fs::read_to_string(path)?)
    }

    /// Parses a "delay_s gain_db" table preceded by a `version N` line.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut delays = Vec::new();
        let mut gains = Vec::new();
        let mut version = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let first = fields.next().unwrap_or_default();
            if first == "version" {
                let v: u32 = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("line {}: bad version", lineno + 1)))?;
                if v != PRESET_FILE_VERSION {
                    return Err(Error::Parse(format!("unsupported preset version {v}")));
                }
                version = Some(v);
                continue;
            }
            if version.is_none() {
                return Err(Error::Parse("preset file is missing its version line".into()));
            }
            let d: f64 = first
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad delay", lineno + 1)))?;
            let g: f64 = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad gain", lineno + 1)))?;
            if fields.next().is_some() {
                return Err(Error::Parse(format!("line {}: expected 'delay_s gain_db'", lineno + 1)));
            }
            delays.push(d);
            gains.push(g);
        }
        Self::new(name, delays, gains)
    }

    pub fn num_paths(&self) -> usize {
        self.path_delays_s.len()
    }

    pub fn path_delays_s(&self) -> &[f64] {
        &self.path_delays_s
    }

    pub fn avg_path_gains_db(&self) -> &[f64] {
        &self.avg_path_gains_db
    }

    /// Linear average power of each tap.
    pub fn tap_powers(&self) -> Vec<f64> {
        self.avg_path_gains_db
            .iter()
            .map(|g| 10f64.powf(g / 10.0))
            .collect()
    }

    /// RMS delay spread of the power-delay profile in seconds.
    pub fn rms_delay_spread(&self) -> f64 {
        let p = self.tap_powers();
        let total: f64 = p.iter().sum();
        let mean: f64 = p.iter().zip(&self.path_delays_s).map(|(p, d)| p * d).sum::<f64>() / total;
        let second: f64 = p
            .iter()
            .zip(&self.path_delays_s)
            .map(|(p, d)| p * d * d)
            .sum::<f64>()
            / total;
        (second - mean * mean).max(0.0).sqrt()
    }
}

/// Complex tap gains of one block-fading realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<C64>,
}

/// Per-subcarrier channel frequency response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cfr {
    pub h: Vec<C64>,
    pub scs_hz: f64,
}

/// Draws circular complex Gaussian taps scaled by the average path gains.
pub fn realize(spec: &TdlChannelSpec, seed: u64) -> ChannelRealization {
    let mut rng = seed::rng(seed);
    let taps = spec
        .tap_powers()
        .iter()
        .map(|&p| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if p == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(re, im) * (p.sqrt() / 2f64.sqrt())
            }
        })
        .collect();
    ChannelRealization { taps }
}

/// Evaluates `h[k] = sum_i a_i exp(-j 2 pi k scs tau_i)` for `k = 0..k`.
pub fn cfr(real: &ChannelRealization, spec: &TdlChannelSpec, k: usize, scs_hz: f64) -> Result<Cfr> {
    if k == 0 {
        return Err(invalid("subcarrier count must be at least 1"));
    }
    if !(scs_hz > 0.0) {
        return Err(invalid("subcarrier spacing must be positive"));
    }
    if real.taps.len() != spec.num_paths() {
        return Err(Error::LengthMismatch {
            expected: spec.num_paths(),
            actual: real.taps.len(),
        });
    }
    let h = (0..k).map(|kk| evaluate(&real.taps, spec.path_delays_s(), kk as f64 * scs_hz)).collect();
    Ok(Cfr { h, scs_hz })
}

/// Frequency response of a tap set at an arbitrary frequency offset.
pub fn evaluate(taps: &[C64], delays: &[f64], freq_hz: f64) -> C64 {
    taps.iter()
        .zip(delays)
        .map(|(a, tau)| a * C64::from_polar(1.0, -2.0 * PI * freq_hz * tau))
        .sum()
}

/// Adds `CN(0, signal_power * 10^(-snr_db/10))` noise. A non-finite
/// positive `snr_db` (`f64::INFINITY`) disables noise.
pub fn awgn(x: &[C64], snr_db: f64, signal_power: f64, seed: u64) -> Result<Vec<C64>> {
    if !(signal_power > 0.0) || !signal_power.is_finite() {
        return Err(invalid(format!("signal power must be positive, got {signal_power}")));
    }
    if snr_db.is_nan() {
        return Err(invalid("snr_db is NaN"));
    }
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    let var = signal_power * 10f64.powf(-snr_db / 10.0);
    Ok(add_noise(x, var, seed))
}

/// Adds circular complex Gaussian noise of total variance `var`.
pub fn add_noise(x: &[C64], var: f64, seed: u64) -> Vec<C64> {
    let mut rng = seed::rng(seed);
    let s = (var / 2.0).sqrt();
    x.iter()
        .map(|v| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            v + C64::new(re, im) * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let spec = TdlChannelSpec::preset(name).unwrap();
            assert!(spec.num_paths() >= 1);
            let total: f64 = spec.tap_powers().iter().sum();
            assert!((total - 1.0).abs() < 1e-3, "{name} power {total}");
        }
        assert_eq!(TdlChannelSpec::preset("tdl4").unwrap().num_paths(), 4);
        assert_eq!(TdlChannelSpec::preset("tdl20").unwrap().num_paths(), 20);
        assert_eq!(TdlChannelSpec::preset("tdl24").unwrap().num_paths(), 24);
        assert!(TdlChannelSpec::preset("tdl7").is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(TdlChannelSpec::new("x", vec![], vec![]).is_err());
        assert!(TdlChannelSpec::new("x", vec![0.0, 1e-9], vec![0.0]).is_err());
        assert!(TdlChannelSpec::new("x", vec![1e-9, 0.0], vec![0.0, 0.0]).is_err());
        assert!(TdlChannelSpec::new("x", vec![-1e-9], vec![0.0]).is_err());
        assert!(TdlChannelSpec::new("x", vec![0.0], vec![f64::NEG_INFINITY]).is_ok());
        assert!(TdlChannelSpec::parse("x", "0 0\n").is_err());
        assert!(TdlChannelSpec::parse("x", "version 1\n0 0 0\n").is_err());
    }

    #[test]
    fn single_tap_mean_power() {
        let spec = TdlChannelSpec::flat();
        let n = 100_000u64;
        let mean: f64 = (0..n).map(|s| realize(&spec, s).taps[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
    }

    #[test]
    fn zero_power_tap_is_exactly_zero() {
        let spec = TdlChannelSpec::new("x", vec![0.0, 1e-7], vec![0.0, f64::NEG_INFINITY]).unwrap();
        for s in 0..20 {
            assert_eq!(realize(&spec, s).taps[1], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn realize_is_deterministic() {
        let spec = TdlChannelSpec::preset("tdl20").unwrap();
        assert_eq!(realize(&spec, 5), realize(&spec, 5));
        assert_ne!(realize(&spec, 5), realize(&spec, 6));
    }

    #[test]
    fn cfr_closed_forms() {
        let k = 160;
        let scs = 60e3;
        let one = ChannelRealization { taps: vec![C64::new(1.0, 0.0)] };
        let h = cfr(&one, &TdlChannelSpec::flat(), k, scs).unwrap();
        assert!(h.h.iter().all(|v| *v == C64::new(1.0, 0.0)));

        let tau = 1.0 / (2.0 * k as f64 * scs);
        let spec = TdlChannelSpec::new("d", vec![tau], vec![0.0]).unwrap();
        let h = cfr(&one, &spec, k, scs).unwrap();
        for (kk, v) in h.h.iter().enumerate() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let expect = C64::from_polar(1.0, -PI * kk as f64 / k as f64);
            assert!((v - expect).norm() < 1e-12);
        }

        // 2 pi scs tau1 k* = pi with k* = 10
        let kstar = 10usize;
        let tau1 = 1.0 / (2.0 * scs * kstar as f64);
        let spec = TdlChannelSpec::new("n", vec![0.0, tau1], vec![0.0, 0.0]).unwrap();
        let two = ChannelRealization {
            taps: vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
        };
        let h = cfr(&two, &spec, k, scs).unwrap();
        assert!(h.h[kstar].norm() < 1e-12);
        assert!(cfr(&two, &spec, 0, scs).is_err());
        assert!(cfr(&two, &spec, 4, 0.0).is_err());
        assert!(cfr(&one, &spec, 4, scs).is_err());
    }

    #[test]
    fn energy_identity_on_tap_grid() {
        // The presets sit on a uniform delay grid, so averaging |H(f)|^2 over
        // one period 1/step of that grid recovers the total tap energy.
        for name in PRESET_NAMES {
            let spec = TdlChannelSpec::preset(name).unwrap();
            let d = spec.path_delays_s();
            let step = d[1] - d[0];
            for (i, tau) in d.iter().enumerate() {
                assert!((tau - i as f64 * step).abs() < 1e-9 * step);
            }
            let real = realize(&spec, 3);
            let energy: f64 = real.taps.iter().map(|a| a.norm_sqr()).sum();
            let n = 64;
            let mean: f64 = (0..n)
                .map(|i| evaluate(&real.taps, d, i as f64 / (n as f64 * step)).norm_sqr())
                .sum::<f64>()
                / n as f64;
            assert!((mean - energy).abs() < 1e-9 * energy, "{name}: {mean} vs {energy}");
        }
    }

    #[test]
    fn antennas_from_disjoint_seeds_are_uncorrelated() {
        let spec = TdlChannelSpec::preset("tdl20").unwrap();
        let n = 4000u64;
        let mut cross = C64::new(0.0, 0.0);
        let (mut p1, mut p2) = (0.0, 0.0);
        for f in 0..n {
            let h1 = cfr(&realize(&spec, seed::frame_channel_seed(1, 0, f, 0)), &spec, 8, 60e3).unwrap();
            let h2 = cfr(&realize(&spec, seed::frame_channel_seed(1, 0, f, 1)), &spec, 8, 60e3).unwrap();
            for (a, b) in h1.h.iter().zip(h2.h.iter()) {
                cross += a * b.conj();
                p1 += a.norm_sqr();
                p2 += b.norm_sqr();
            }
        }
        let rho = cross.norm() / (p1 * p2).sqrt();
        assert!(rho < 0.05, "cross-correlation {rho}");
    }

    #[test]
    fn awgn_cases() {
        let x = vec![C64::new(1.0, -1.0); 16];
        assert_eq!(awgn(&x, f64::INFINITY, 1.0, 1).unwrap(), x);
        assert!(awgn(&x, 10.0, 0.0, 1).is_err());
        assert!(awgn(&x, 10.0, -1.0, 1).is_err());

        let n = 100_000;
        let zeros = vec![C64::new(0.0, 0.0); n];
        let a = awgn(&zeros, 0.0, 1.0, 10).unwrap();
        let b = awgn(&zeros, 0.0, 1.0, 11).unwrap();
        let pa: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((pa - 1.0).abs() < 0.02, "noise power {pa}");
        let pb: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let cross: C64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum::<C64>() / n as f64;
        assert!(cross.norm() / (pa * pb).sqrt() < 0.02);
    }

    proptest! {
        #[test]
        fn cfr_is_linear_in_taps(seed_a in 0u64..1000, seed_b in 0u64..1000) {
            let spec = TdlChannelSpec::preset("tdl20").unwrap();
            let a = realize(&spec, seed_a);
            let b = realize(&spec, seed_b ^ 0xABCD);
            let sum = ChannelRealization {
                taps: a.taps.iter().zip(&b.taps).map(|(x, y)| x + y).collect(),
            };
            let ha = cfr(&a, &spec, 32, 60e3).unwrap();
            let hb = cfr(&b, &spec, 32, 60e3).unwrap();
            let hs = cfr(&sum, &spec, 32, 60e3).unwrap();
            for k in 0..32 {
                prop_assert!((hs.h[k] - ha.h[k] - hb.h[k]).norm() < 1e-12);
            }
        }
    }
}
