//! Extracts every feature type from the same pair of noisy frames of one
//! device and prints their sizes and flag counts.

use simo_rff::channel::TdlChannelSpec;
use simo_rff::extractor::{
    extract_dolos, extract_lldr, extract_no_subband, extract_raw_iq, feature_to_vector, CalibrationR, SubbandConfig,
};
use simo_rff::impairments::{PaCoefficients, ProfileSampler, RxAntennaProfile};
use simo_rff::link::{estimate_channels, estimate_second, ChannelSource, FrameRequest, LinkConfig, LinkSimulator, PilotGrid};

fn main() -> simo_rff::Result<()> {
    let link = LinkConfig::default();
    let sim = LinkSimulator::new(&link)?;
    let pilot = PilotGrid::generate(&link, 3);
    let second = PilotGrid::generate(&link, 4);
    let tx = ProfileSampler::default().sample(0, 5, &PaCoefficients::base());
    let rx = [RxAntennaProfile::sample(0, 8), RxAntennaProfile::sample(1, 9)];
    let spec = TdlChannelSpec::preset("tdl20")?;
    let cap = sim.simulate_frame(&FrameRequest {
        pilot: &pilot,
        second_pilot: Some(&second),
        tx: &tx,
        rx: [&rx[0], &rx[1]],
        channel: ChannelSource::Tdl { spec: &spec, seeds: [21, 22] },
        snr_db: 25.0,
        noise_seeds: [1, 2],
        frame_index: 0,
    })?;
    let est = estimate_channels(&cap, &pilot)?;
    let est2 = estimate_second(&cap, &second)?.expect("frame carries a second symbol");
    let r = CalibrationR::from_profiles(&rx[0], &rx[1], link.k)?;
    let features = [
        extract_lldr(&est, &r, &SubbandConfig::estimate_mean(16)?, None)?,
        extract_no_subband(&est, &r)?,
        extract_dolos(&est, &est2)?,
        extract_raw_iq(&cap),
    ];
    for f in &features {
        println!(
            "{:<10} entries {:>3}  vector {:>3}  flagged {}",
            f.method.as_str(),
            f.values.len(),
            feature_to_vector(f).len(),
            f.flagged_count()
        );
    }
    Ok(())
}
