//! Noiseless oracle check of the sub-band estimator: with the true sub-band
//! channel means, `T0_hat` should approach `R1 T` as the channel becomes
//! flat within each sub-band.

use serde::{Deserialize, Serialize};

use crate::channel::{self, TdlChannelSpec};
use crate::error::{invalid, Result};
use crate::extractor::{extract_lldr, CalibrationR, SubbandConfig};
use crate::impairments::{self, PaCoefficients, ProfileSampler, RxAntennaProfile};
use crate::link::{estimate_channels, ChannelEstimate, ChannelSource, FrameRequest, LinkConfig, LinkSimulator, PilotGrid};
use crate::seed::{self, tag};
use crate::C64;

/// Median relative error allowed at the reference width.
pub const DEFAULT_THEOREM_TOLERANCE: f64 = 0.05;

/// How the LS estimates of a trial are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalPath {
    /// `z_i = R_i H_i T`, the estimator's own signal model.
    Model,
    /// A noiseless frame through the full OFDM link, which adds the
    /// receive-side mirror image that the multiplicative model leaves out.
    Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub link: LinkConfig,
    pub channel: TdlChannelSpec,
    pub widths: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Width whose median is held to `tolerance`.
    pub reference_width: usize,
    pub path: SignalPath,
}

impl TheoremCheck {
    pub fn new(channel: TdlChannelSpec, reference_width: usize, trials: usize, seed: u64) -> Self {
        let mut widths = vec![4, reference_width, 32];
        widths.sort_unstable();
        widths.dedup();
        TheoremCheck {
            link: LinkConfig::default(),
            channel,
            widths,
            trials,
            seed,
            tolerance: DEFAULT_THEOREM_TOLERANCE,
            reference_width,
            path: SignalPath::Model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthError {
    pub width: usize,
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub channel: String,
    pub trials: usize,
    pub path: SignalPath,
    pub rows: Vec<WidthError>,
    pub reference_width: usize,
    pub reference_median: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// Medians strictly increase with width.
    pub strictly_ordered: bool,
    pub pass: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

/// Runs `trials` independent (device, antennas, pilot, channel pair) draws
/// and reports the error distribution of `|T0_hat - R1 T| / |R1 T|` per
/// width. Every width sees the same draws.
pub fn theorem_check(check: &TheoremCheck) -> Result<TheoremReport> {
    if check.trials == 0 {
        return Err(invalid("theorem check needs at least one trial"));
    }
    if !check.widths.contains(&check.reference_width) {
        return Err(invalid("reference width must be one of the checked widths"));
    }
    let link = &check.link;
    let k = link.k;
    let subs = check
        .widths
        .iter()
        .map(|&w| SubbandConfig::oracle(w))
        .collect::<Result<Vec<_>>>()?;
    let sim = LinkSimulator::new(link)?;
    let base = PaCoefficients::base();
    let sampler = ProfileSampler::default();
    let mut errs: Vec<Vec<f64>> = vec![Vec::with_capacity(check.trials * k); subs.len()];
    for t in 0..check.trials as u64 {
        let m = seed::derive(check.seed, &[tag::TRIAL, t]);
        let tx = sampler.sample(0, seed::derive(m, &[tag::DEVICE]), &base);
        let rx = [0u32, 1].map(|i| RxAntennaProfile::sample(i, seed::derive(m, &[tag::BS_ANTENNA, u64::from(i)])));
        let pilot = PilotGrid::generate(link, seed::derive(m, &[tag::PILOT]));
        let seeds = [0, 1].map(|a| seed::derive(m, &[tag::CHANNEL, a]));
        let h = seeds.map(|s| channel::cfr(&channel::realize(&check.channel, s), &check.channel, k, link.scs_hz));
        let [h1, h2] = h;
        let (h1, h2) = (h1?.h, h2?.h);
        let tt = sim.tx_response(&tx, &pilot, 0)?;
        let r1 = impairments::rx_response(&rx[0], k);
        let r2 = impairments::rx_response(&rx[1], k);
        let est = match check.path {
            SignalPath::Model => ChannelEstimate {
                z1: (0..k).map(|i| r1[i] * h1[i] * tt[i]).collect(),
                z2: (0..k).map(|i| r2[i] * h2[i] * tt[i]).collect(),
            },
            SignalPath::Link => {
                let cap = sim.simulate_frame(&FrameRequest {
                    pilot: &pilot,
                    second_pilot: None,
                    tx: &tx,
                    rx: [&rx[0], &rx[1]],
                    channel: ChannelSource::Given([h1.clone(), h2.clone()]),
                    snr_db: f64::INFINITY,
                    noise_seeds: [0, 0],
                    frame_index: 0,
                })?;
                estimate_channels(&cap, &pilot)?
            }
        };
        let r = CalibrationR::from_profiles(&rx[0], &rx[1], k)?;
        let truth: Vec<C64> = (0..k).map(|i| r1[i] * tt[i]).collect();
        for (sub, e) in subs.iter().zip(errs.iter_mut()) {
            let f = extract_lldr(&est, &r, sub, Some((&h1, &h2)))?;
            let th = f.t_hat().expect("LLDR features are complex");
            e.extend(th.iter().zip(&truth).map(|(a, b)| (a - b).norm() / b.norm()));
        }
    }
    let rows: Vec<WidthError> = check
        .widths
        .iter()
        .zip(errs.iter_mut())
        .map(|(&width, e)| {
            e.sort_by(|a, b| a.total_cmp(b));
            WidthError {
                width,
                median: quantile(e, 0.5),
                p90: quantile(e, 0.9),
                mean: e.iter().sum::<f64>() / e.len() as f64,
            }
        })
        .collect();
    let reference_median = rows
        .iter()
        .find(|r| r.width == check.reference_width)
        .map(|r| r.median)
        .expect("reference width is checked");
    let within_tolerance = reference_median <= check.tolerance;
    let strictly_ordered = rows.windows(2).all(|w| w[0].median < w[1].median);
    Ok(TheoremReport {
        channel: check.channel.name.clone(),
        trials: check.trials,
        path: check.path,
        rows,
        reference_width: check.reference_width,
        reference_median,
        tolerance: check.tolerance,
        within_tolerance,
        strictly_ordered,
        pass: within_tolerance && strictly_ordered,
    })
}
