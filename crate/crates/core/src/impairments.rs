//! Transmitter and receiver hardware impairments.
//!
//! A UE is described by an [`ImpairmentProfile`]: IQ gain/phase imbalance,
//! a carrier frequency offset and common phase offset shared by the whole
//! device, and a 5x5 memory-polynomial PA. The transmit chain runs in the
//! time domain in the order IQ mixer, PA, oscillator. Receive antennas only
//! carry IQ imbalance and are applied as a per-subcarrier multiplicative
//! response, see [`rx_response`].

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::link::{LinkConfig, OfdmEngine, PilotGrid};
use crate::{seed, C64};

/// Memory depth of the PA model.
pub const PA_MEMORY: usize = 5;
/// Nonlinear order of the PA model.
pub const PA_ORDER: usize = 5;

/// Version tag expected in PA coefficient files.
pub const PA_FILE_VERSION: u32 = 1;

const BASE_PA_TEXT: &str = include_str!("../data/pa_base_v1.txt");

/// Memory-polynomial coefficients `a[m][k-1]`, memory tap `m`, order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaCoefficients(pub [[C64; PA_ORDER]; PA_MEMORY]);

impl PaCoefficients {
    pub fn zeros() -> Self {
        PaCoefficients([[C64::new(0.0, 0.0); PA_ORDER]; PA_MEMORY])
    }

    /// A memoryless linear PA with gain `c`.
    pub fn linear(c: C64) -> Self {
        let mut a = Self::zeros();
        a.0[0][0] = c;
        a
    }

    /// The versioned base set shipped with the crate.
    pub fn base() -> Self {
        Self::parse(BASE_PA_TEXT).expect("bundled PA coefficient file is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the "m k re im" text format. Lines starting with `#` are
    /// comments; a `version N` line must precede the coefficients.
    pub fn parse(text: &str) -> Result<Self> {
        let mut a = Self::zeros();
        let mut version = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "version" {
                let v: u32 = fields
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("line {}: bad version", lineno + 1)))?;
                if v != PA_FILE_VERSION {
                    return Err(Error::Parse(format!("unsupported PA file version {v}")));
                }
                version = Some(v);
                continue;
            }
            if version.is_none() {
                return Err(Error::Parse("PA file is missing its version line".into()));
            }
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 'm k re im'",
                    lineno + 1
                )));
            }
            let perr = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let m: usize = fields[0].parse().map_err(|_| perr("m"))?;
            let k: usize = fields[1].parse().map_err(|_| perr("k"))?;
            let re: f64 = fields[2].parse().map_err(|_| perr("re"))?;
            let im: f64 = fields[3].parse().map_err(|_| perr("im"))?;
            if m >= PA_MEMORY || k == 0 || k > PA_ORDER {
                return Err(Error::Parse(format!(
                    "line {}: index (m={m}, k={k}) out of range",
                    lineno + 1
                )));
            }
            a.0[m][k - 1] = C64::new(re, im);
        }
        if version.is_none() {
            return Err(Error::Parse("PA file is missing its version line".into()));
        }
        Ok(a)
    }

    /// Serialises to the same text format accepted by [`Self::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("version {PA_FILE_VERSION}\n");
        for (m, row) in self.0.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    s.push_str(&format!("{m} {} {:e} {:e}\n", k + 1, c.re, c.im));
                }
            }
        }
        s
    }
}

/// Per-device transmitter parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentProfile {
    pub device_id: u32,
    pub iq_gain_db: f64,
    pub iq_phase_deg: f64,
    pub cfo_hz: f64,
    pub cpo_rad: f64,
    pub pa: PaCoefficients,
}

impl ImpairmentProfile {
    /// A profile with every impairment disabled.
    pub fn identity(device_id: u32) -> Self {
        ImpairmentProfile {
            device_id,
            iq_gain_db: 0.0,
            iq_phase_deg: 0.0,
            cfo_hz: 0.0,
            cpo_rad: 0.0,
            pa: PaCoefficients::linear(C64::new(1.0, 0.0)),
        }
    }
}

/// IQ parameters of one base-station receive antenna. All antennas share
/// the base-station oscillator, so there is no per-antenna CFO/CPO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RxAntennaProfile {
    pub antenna_id: u32,
    pub iq_gain_db: f64,
    pub iq_phase_deg: f64,
}

impl RxAntennaProfile {
    pub fn identity(antenna_id: u32) -> Self {
        RxAntennaProfile {
            antenna_id,
            iq_gain_db: 0.0,
            iq_phase_deg: 0.0,
        }
    }

    /// Draws gain in [-1, 1] dB and phase in [-5, 5] degrees.
    pub fn sample(antenna_id: u32, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        RxAntennaProfile {
            antenna_id,
            iq_gain_db: rng.gen_range(-1.0..=1.0),
            iq_phase_deg: rng.gen_range(-5.0..=5.0),
        }
    }
}

/// Ranges used when drawing device profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSampler {
    pub iq_gain_max_db: f64,
    pub iq_phase_max_deg: f64,
    /// CFO is drawn uniform in `[-cfo_max_hz, cfo_max_hz]`. Values well above
    /// the default break the per-subcarrier multiplicative model (ICI).
    pub cfo_max_hz: f64,
    /// Relative, component-wise perturbation applied to each PA coefficient.
    pub pa_perturbation: f64,
}

impl Default for ProfileSampler {
    fn default() -> Self {
        ProfileSampler {
            iq_gain_max_db: 1.0,
            iq_phase_max_deg: 5.0,
            cfo_max_hz: 200.0,
            pa_perturbation: 0.05,
        }
    }
}

impl ProfileSampler {
    /// True when the CFO range keeps inter-carrier interference negligible
    /// for the given subcarrier spacing (below 0.5% of the spacing).
    pub fn cfo_is_small(&self, scs_hz: f64) -> bool {
        self.cfo_max_hz <= 0.005 * scs_hz
    }

    pub fn sample(&self, device_id: u32, seed: u64, base_pa: &PaCoefficients) -> ImpairmentProfile {
        let mut rng = seed::rng(seed);
        let g = self.iq_gain_max_db;
        let p = self.iq_phase_max_deg;
        let iq_gain_db = if g > 0.0 { rng.gen_range(-g..=g) } else { 0.0 };
        let iq_phase_deg = if p > 0.0 { rng.gen_range(-p..=p) } else { 0.0 };
        let cfo_hz = if self.cfo_max_hz > 0.0 {
            rng.gen_range(-self.cfo_max_hz..=self.cfo_max_hz)
        } else {
            0.0
        };
        let cpo_rad = rng.gen_range(-PI..PI);
        let mut pa = *base_pa;
        let eps = self.pa_perturbation;
        for row in pa.0.iter_mut() {
            for c in row.iter_mut() {
                // Both draws happen even when eps == 0 so the stream layout
                // does not depend on the perturbation width.
                let u_re: f64 = rng.gen_range(-1.0..=1.0);
                let u_im: f64 = rng.gen_range(-1.0..=1.0);
                if eps > 0.0 {
                    *c = C64::new(c.re * (1.0 + eps * u_re), c.im * (1.0 + eps * u_im));
                }
            }
        }
        ImpairmentProfile {
            device_id,
            iq_gain_db,
            iq_phase_deg,
            cfo_hz,
            cpo_rad,
            pa,
        }
    }
}

/// Draws a device profile with the default ranges. Requires a dominant
/// linear PA term (`base_pa[0][0] != 0`).
pub fn sample_profile(seed: u64, base_pa: &PaCoefficients) -> Result<ImpairmentProfile> {
    if base_pa.0[0][0] == C64::new(0.0, 0.0) {
        return Err(invalid("base PA coefficient a[0][0] must be non-zero"));
    }
    Ok(ProfileSampler::default().sample(0, seed, base_pa))
}

/// Conjugate-mixing IQ model `y = mu x + nu conj(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqImbalance {
    pub mu: C64,
    pub nu: C64,
}

impl IqImbalance {
    pub fn new(gain_db: f64, phase_deg: f64) -> Self {
        let g = 10f64.powf(gain_db / 20.0);
        let e = C64::from_polar(g, phase_deg.to_radians());
        let one = C64::new(1.0, 0.0);
        IqImbalance {
            mu: (one + e) / 2.0,
            nu: (one - e) / 2.0,
        }
    }

    #[inline]
    pub fn apply(&self, x: C64) -> C64 {
        self.mu * x + self.nu * x.conj()
    }
}

pub fn apply_iq_imbalance(x: &[C64], gain_db: f64, phase_deg: f64) -> Vec<C64> {
    let iq = IqImbalance::new(gain_db, phase_deg);
    x.iter().map(|&s| iq.apply(s)).collect()
}

/// Memory-polynomial PA. Samples before `n = 0` are taken as zero.
pub fn apply_pa(x: &[C64], pa: &PaCoefficients) -> Vec<C64> {
    // Basis terms x[n] |x[n]|^(k-1) are computed once per sample.
    let basis: Vec<[C64; PA_ORDER]> = x
        .iter()
        .map(|&s| {
            let r = s.norm();
            let mut b = [C64::new(0.0, 0.0); PA_ORDER];
            let mut p = 1.0;
            for bk in b.iter_mut() {
                *bk = s * p;
                p *= r;
            }
            b
        })
        .collect();
    (0..x.len())
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            for (m, row) in pa.0.iter().enumerate().take(n + 1) {
                let b = &basis[n - m];
                for (a, bk) in row.iter().zip(b.iter()) {
                    acc += a * bk;
                }
            }
            acc
        })
        .collect()
}

/// Oscillator rotation `y[n] = x[n] exp(j(2 pi cfo (n0 + n)/fs + cpo))`.
/// `n0` is the absolute index of the first sample, so consecutive symbols
/// keep a continuous phase ramp.
pub fn apply_cfo_cpo_from(x: &[C64], cfo_hz: f64, cpo_rad: f64, fs_hz: f64, n0: usize) -> Result<Vec<C64>> {
    if !(fs_hz > 0.0) {
        return Err(invalid(format!("sample rate must be positive, got {fs_hz}")));
    }
    let w = 2.0 * PI * cfo_hz / fs_hz;
    Ok(x
        .iter()
        .enumerate()
        .map(|(n, &s)| s * C64::from_polar(1.0, w * (n0 + n) as f64 + cpo_rad))
        .collect())
}

pub fn apply_cfo_cpo(x: &[C64], cfo_hz: f64, cpo_rad: f64, fs_hz: f64) -> Result<Vec<C64>> {
    apply_cfo_cpo_from(x, cfo_hz, cpo_rad, fs_hz, 0)
}

/// Full transmit chain: IQ mixer, PA, oscillator.
pub fn tx_chain(profile: &ImpairmentProfile, x: &[C64], fs_hz: f64, n0: usize) -> Result<Vec<C64>> {
    let mixed = apply_iq_imbalance(x, profile.iq_gain_db, profile.iq_phase_deg);
    let amplified = apply_pa(&mixed, &profile.pa);
    apply_cfo_cpo_from(&amplified, profile.cfo_hz, profile.cpo_rad, fs_hz, n0)
}

/// Per-subcarrier multiplicative receive response `R(k)`.
///
/// A single tone on subcarrier `k` comes out of the conjugate-mixing model
/// scaled by `mu` on its own bin; the `nu` image lands on the mirror bin and
/// is outside the multiplicative model. The response is therefore flat.
pub fn rx_response(profile: &RxAntennaProfile, k: usize) -> Vec<C64> {
    let iq = IqImbalance::new(profile.iq_gain_db, profile.iq_phase_deg);
    vec![iq.mu; k]
}

/// Ground-truth transmit response `T(k)`: the pilot goes through the full
/// transmit chain with an ideal channel, ideal receivers and no noise, and
/// is LS-estimated on the active subcarriers.
pub fn oracle_tx_response(profile: &ImpairmentProfile, pilot: &PilotGrid, config: &LinkConfig) -> Result<Vec<C64>> {
    let engine = OfdmEngine::new(config)?;
    oracle_tx_response_with(&engine, profile, pilot, 0)
}

/// Same as [`oracle_tx_response`] for a symbol starting at absolute sample
/// `n0`, reusing an existing OFDM engine.
pub fn oracle_tx_response_with(
    engine: &OfdmEngine,
    profile: &ImpairmentProfile,
    pilot: &PilotGrid,
    n0: usize,
) -> Result<Vec<C64>> {
    if let Some(k) = pilot.x.iter().position(|v| v.norm_sqr() == 0.0) {
        return Err(Error::ZeroPilot(k));
    }
    let symbol = engine.modulate(&pilot.x)?;
    let tx = tx_chain(profile, &symbol.samples, engine.config().fs_hz(), n0)?;
    let y = engine.demodulate(&tx, symbol.scale)?;
    Ok(y.iter().zip(pilot.x.iter()).map(|(y, x)| y / x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bundled_base_matches_documented_values() {
        let a = PaCoefficients::base();
        assert_eq!(a.0[0][0], c(1.0, 0.0));
        assert_eq!(a.0[0][2], c(-0.05, 0.01));
        assert_eq!(a.0[1][0], c(0.02, -0.005));
        assert_eq!(a.0[2][2], c(0.0, 0.003));
        let nonzero = a.0.iter().flatten().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn pa_text_round_trip_and_errors() {
        let a = PaCoefficients::base();
        assert_eq!(PaCoefficients::parse(&a.to_text()).unwrap(), a);
        assert!(PaCoefficients::parse("0 1 1 0\n").is_err());
        assert!(PaCoefficients::parse("version 2\n0 1 1 0\n").is_err());
        assert!(PaCoefficients::parse("version 1\n5 1 1 0\n").is_err());
        assert!(PaCoefficients::parse("version 1\n0 0 1 0\n").is_err());
        assert!(PaCoefficients::parse("version 1\n0 1 x 0\n").is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let base = PaCoefficients::base();
        let a = sample_profile(42, &base).unwrap();
        let b = sample_profile(42, &base).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_profile(43, &base).unwrap());
    }

    #[test]
    fn zero_perturbation_keeps_base_pa() {
        let base = PaCoefficients::base();
        let s = ProfileSampler {
            pa_perturbation: 0.0,
            ..Default::default()
        };
        assert_eq!(s.sample(0, 9, &base).pa, base);
    }

    #[test]
    fn sample_rejects_missing_linear_term() {
        let mut base = PaCoefficients::base();
        base.0[0][0] = c(0.0, 0.0);
        assert!(sample_profile(1, &base).is_err());
    }

    #[test]
    fn iq_gain_samples_cover_range() {
        let base = PaCoefficients::base();
        let s = ProfileSampler::default();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..10_000u64 {
            let p = s.sample(0, seed, &base);
            lo = lo.min(p.iq_gain_db);
            hi = hi.max(p.iq_gain_db);
            assert!(p.iq_gain_db.abs() <= 1.0 && p.iq_phase_deg.abs() <= 5.0);
            assert!(p.cfo_hz.abs() <= 200.0);
        }
        assert!(hi - lo >= 0.9 * 2.0, "covered [{lo}, {hi}]");
    }

    #[test]
    fn pa_perturbation_is_bounded() {
        let base = PaCoefficients::base();
        for seed in 0..500u64 {
            let p = sample_profile(seed, &base).unwrap();
            for (row, brow) in p.pa.0.iter().zip(base.0.iter()) {
                for (v, b) in row.iter().zip(brow.iter()) {
                    assert!((v.re - b.re).abs() <= 0.05 * b.re.abs() + 1e-15);
                    assert!((v.im - b.im).abs() <= 0.05 * b.im.abs() + 1e-15);
                }
            }
        }
    }

    #[test]
    fn iq_identity_and_real_input() {
        let x = vec![c(0.3, -0.2), c(-1.0, 0.5), c(0.0, 1.0)];
        assert_eq!(apply_iq_imbalance(&x, 0.0, 0.0), x);
        // mu + nu == 1, so real input passes unchanged for any parameters.
        let real = vec![c(0.7, 0.0), c(-0.25, 0.0)];
        for (y, x) in apply_iq_imbalance(&real, 0.8, -3.0).iter().zip(real.iter()) {
            assert_abs_diff_eq!(y.re, x.re, epsilon = 1e-15);
            assert_abs_diff_eq!(y.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn iq_matches_scalar_evaluation() {
        // Independent scalar route: expand mu*x + nu*conj(x) for x = 1 by
        // hand in real arithmetic.
        let g = 10f64.powf(1.0 / 20.0);
        let b = 5f64.to_radians();
        let mu_re = (1.0 + g * b.cos()) / 2.0;
        let mu_im = g * b.sin() / 2.0;
        let nu_re = (1.0 - g * b.cos()) / 2.0;
        let nu_im = -g * b.sin() / 2.0;
        let y = apply_iq_imbalance(&[c(1.0, 0.0)], 1.0, 5.0)[0];
        assert_abs_diff_eq!(y.re, mu_re + nu_re, epsilon = 1e-15);
        assert_abs_diff_eq!(y.im, mu_im + nu_im, epsilon = 1e-15);
        // A purely imaginary input exposes mu - nu.
        let y = apply_iq_imbalance(&[c(0.0, 1.0)], 1.0, 5.0)[0];
        assert_abs_diff_eq!(y.re, -(mu_im - nu_im), epsilon = 1e-15);
        assert_abs_diff_eq!(y.im, mu_re - nu_re, epsilon = 1e-15);
    }

    #[test]
    fn pa_closed_forms() {
        let x = vec![c(0.5, 0.1), c(-0.2, 0.3), c(0.9, -0.4)];
        assert_eq!(apply_pa(&x, &PaCoefficients::linear(c(1.0, 0.0))), x);
        let mut a = PaCoefficients::zeros();
        a.0[0][1] = c(1.0, 0.0);
        assert_eq!(apply_pa(&[c(2.0, 0.0)], &a), vec![c(4.0, 0.0)]);
    }

    fn naive_pa(x: &[C64], a: &PaCoefficients) -> Vec<C64> {
        let mut y = vec![c(0.0, 0.0); x.len()];
        for n in 0..x.len() {
            for m in 0..PA_MEMORY {
                if n < m {
                    continue;
                }
                let s = x[n - m];
                for k in 1..=PA_ORDER {
                    y[n] += a.0[m][k - 1] * s * s.norm().powi(k as i32 - 1);
                }
            }
        }
        y
    }

    #[test]
    fn pa_matches_naive_reference() {
        let mut rng = seed::rng(5);
        let mut a = PaCoefficients::zeros();
        for row in a.0.iter_mut() {
            for v in row.iter_mut() {
                *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let x: Vec<C64> = (0..64)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let fast = apply_pa(&x, &a);
        let slow = naive_pa(&x, &a);
        for (f, s) in fast.iter().zip(slow.iter()) {
            assert!((f - s).norm() <= 1e-12 * s.norm().max(1e-300));
        }
    }

    #[test]
    fn cfo_cpo_cases() {
        let x = vec![c(1.0, 0.0); 4];
        assert_eq!(apply_cfo_cpo(&x, 0.0, 0.0, 1.0).unwrap(), x);
        for y in apply_cfo_cpo(&x, 0.0, PI, 1.0).unwrap() {
            assert_abs_diff_eq!(y.re, -1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(y.im, 0.0, epsilon = 1e-15);
        }
        let y = apply_cfo_cpo(&x, 250.0, 0.0, 1000.0).unwrap();
        let expect = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (y, e) in y.iter().zip(expect.iter()) {
            assert!((y - e).norm() < 1e-12);
        }
        assert!(apply_cfo_cpo(&x, 1.0, 0.0, 0.0).is_err());
        assert!(apply_cfo_cpo(&x, 1.0, 0.0, -5.0).is_err());
    }

    #[test]
    fn rx_response_identity_and_determinism() {
        let r = rx_response(&RxAntennaProfile::identity(0), 8);
        assert!(r.iter().all(|v| *v == c(1.0, 0.0)));
        let p = RxAntennaProfile::sample(1, 77);
        assert_eq!(rx_response(&p, 16), rx_response(&p, 16));
    }

    #[test]
    fn rx_response_matches_tone_measurement() {
        // Measurement oracle: push a single tone per subcarrier through the
        // time-domain IQ model and read back its own FFT bin.
        let cfg = LinkConfig::default();
        let engine = OfdmEngine::new(&cfg).unwrap();
        let p = RxAntennaProfile {
            antenna_id: 0,
            iq_gain_db: 1.0,
            iq_phase_deg: 0.0,
        };
        let r = rx_response(&p, cfg.k);
        let mag = r[0].norm();
        for k in [0usize, 17, 79, 80, 159] {
            let mut grid = vec![c(0.0, 0.0); cfg.k];
            grid[k] = c(1.0, 0.0);
            let sym = engine.modulate(&grid).unwrap();
            let y = apply_iq_imbalance(&sym.samples, p.iq_gain_db, p.iq_phase_deg);
            let measured = engine.demodulate(&y, sym.scale).unwrap()[k];
            assert!((measured - r[k]).norm() < 1e-12);
            assert!((r[k].norm() - mag).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_identity_and_constant_phase() {
        let cfg = LinkConfig::default();
        let pilot = PilotGrid::generate(&cfg, 3);
        let t = oracle_tx_response(&ImpairmentProfile::identity(0), &pilot, &cfg).unwrap();
        assert!(t.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-9));
        let mut p = ImpairmentProfile::identity(0);
        p.cpo_rad = PI / 2.0;
        let t = oracle_tx_response(&p, &pilot, &cfg).unwrap();
        assert!(t.iter().all(|v| (v - c(0.0, 1.0)).norm() < 1e-6));
    }

    #[test]
    fn oracle_rejects_zero_pilot() {
        let cfg = LinkConfig::default();
        let mut pilot = PilotGrid::generate(&cfg, 3);
        pilot.x[5] = c(0.0, 0.0);
        assert!(matches!(
            oracle_tx_response(&ImpairmentProfile::identity(0), &pilot, &cfg),
            Err(Error::ZeroPilot(5))
        ));
    }

    fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn pa_pilot_dependence_below_one_percent() {
        // PA and oscillator only: the IQ image term is pilot-dependent by
        // construction and is excluded here (see the image-consistent case).
        let cfg = LinkConfig::default();
        let base = PaCoefficients::base();
        let p1 = PilotGrid::generate(&cfg, 11);
        let p2 = PilotGrid::generate(&cfg, 12);
        let mut worst: f64 = 0.0;
        for seed in 0..30 {
            let mut prof = sample_profile(seed, &base).unwrap();
            prof.iq_gain_db = 0.0;
            prof.iq_phase_deg = 0.0;
            let t1 = oracle_tx_response(&prof, &p1, &cfg).unwrap();
            let t2 = oracle_tx_response(&prof, &p2, &cfg).unwrap();
            worst = worst.max(rel_diff(&t1, &t2));
        }
        assert!(worst < 0.01, "pilot dependence {worst}");
    }

    #[test]
    fn full_profile_stable_under_image_consistent_pilot() {
        // Rotating the lower half of the grid by +90 degrees and the upper
        // half by -90 degrees leaves every image ratio conj(X(m))/X(k)
        // unchanged while changing the transmitted waveform, so only the PA
        // and oscillator can make T(k) differ.
        let cfg = LinkConfig::default();
        let base = PaCoefficients::base();
        let p1 = PilotGrid::generate(&cfg, 11);
        let half = cfg.k / 2;
        let p2 = PilotGrid {
            x: p1
                .x
                .iter()
                .enumerate()
                .map(|(k, v)| if k < half { v * C64::i() } else { -v * C64::i() })
                .collect(),
        };
        let probe = sample_profile(0, &base).unwrap();
        let y1 = OfdmEngine::new(&cfg).unwrap().modulate(&p1.x).unwrap();
        let y2 = OfdmEngine::new(&cfg).unwrap().modulate(&p2.x).unwrap();
        assert!(rel_diff(&y1.samples, &y2.samples) > 0.1);
        let mut worst: f64 = 0.0;
        for seed in 0..30 {
            let prof = if seed == 0 { probe.clone() } else { sample_profile(seed, &base).unwrap() };
            let t1 = oracle_tx_response(&prof, &p1, &cfg).unwrap();
            let t2 = oracle_tx_response(&prof, &p2, &cfg).unwrap();
            worst = worst.max(rel_diff(&t1, &t2));
        }
        assert!(worst < 0.01, "pilot dependence {worst}");
    }

    #[test]
    fn oracle_distinct_across_devices() {
        let cfg = LinkConfig::default();
        let base = PaCoefficients::base();
        let pilot = PilotGrid::generate(&cfg, 1);
        let ts: Vec<Vec<C64>> = (0..30)
            .map(|s| oracle_tx_response(&sample_profile(s, &base).unwrap(), &pilot, &cfg).unwrap())
            .collect();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                assert!(rel_diff(&ts[i], &ts[j]) > 0.0);
            }
        }
        let p = sample_profile(4, &base).unwrap();
        assert_eq!(
            oracle_tx_response(&p, &pilot, &cfg).unwrap(),
            oracle_tx_response(&p, &pilot, &cfg).unwrap()
        );
    }

    proptest! {
        #[test]
        fn linear_pa_is_scalar_multiplication(re in -2.0f64..2.0, im in -2.0f64..2.0,
                                              xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
            let a = c(re, im);
            let x: Vec<C64> = xs.iter().map(|&(r, i)| c(r, i)).collect();
            for (y, x) in apply_pa(&x, &PaCoefficients::linear(a)).iter().zip(x.iter()) {
                prop_assert!((y - a * x).norm() <= 1e-12);
            }
        }

        #[test]
        fn oscillator_preserves_magnitude(cfo in -5e3f64..5e3, cpo in -7.0f64..7.0,
                                          xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
            let x: Vec<C64> = xs.iter().map(|&(r, i)| c(r, i)).collect();
            let y = apply_cfo_cpo(&x, cfo, cpo, 15.36e6).unwrap();
            for (y, x) in y.iter().zip(x.iter()) {
                prop_assert!((y.norm() - x.norm()).abs() <= 1e-12);
            }
        }

        #[test]
        fn zero_iq_is_identity(xs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 0..40)) {
            let x: Vec<C64> = xs.iter().map(|&(r, i)| c(r, i)).collect();
            prop_assert_eq!(apply_iq_imbalance(&x, 0.0, 0.0), x);
        }
    }
}
