//! Sends one pilot frame through the two-antenna link and compares the LS
//! channel estimate against the noiseless product `R H T`.

use simo_rff::channel::TdlChannelSpec;
use simo_rff::impairments::{self, PaCoefficients, ProfileSampler, RxAntennaProfile};
use simo_rff::link::{estimate_channels, ChannelSource, FrameRequest, LinkConfig, LinkSimulator, PilotGrid};

fn main() -> simo_rff::Result<()> {
    let link = LinkConfig::default();
    let sim = LinkSimulator::new(&link)?;
    let pilot = PilotGrid::generate(&link, 3);
    let tx = ProfileSampler::default().sample(0, 5, &PaCoefficients::base());
    let rx = [RxAntennaProfile::sample(0, 8), RxAntennaProfile::sample(1, 9)];
    let spec = TdlChannelSpec::preset("tdl20")?;
    let source = ChannelSource::Tdl { spec: &spec, seeds: [21, 22] };
    let h = sim.channel_responses(&source)?;
    let t = sim.tx_response(&tx, &pilot, 0)?;
    let r1 = impairments::rx_response(&rx[0], link.k);
    for snr_db in [f64::INFINITY, 30.0, 10.0] {
        let cap = sim.simulate_frame(&FrameRequest {
            pilot: &pilot,
            second_pilot: None,
            tx: &tx,
            rx: [&rx[0], &rx[1]],
            channel: source.clone(),
            snr_db,
            noise_seeds: [1, 2],
            frame_index: 0,
        })?;
        let est = estimate_channels(&cap, &pilot)?;
        let mse: f64 = (0..link.k)
            .map(|i| (est.z1[i] - r1[i] * h[0][i] * t[i]).norm_sqr())
            .sum::<f64>()
            / link.k as f64;
        println!("snr {snr_db:>5} dB: noise var {:.2e}, estimate mse vs R1 H1 T {mse:.3e}", cap.noise_var[0]);
    }
    Ok(())
}
