//! Samples a few transmitter profiles and prints their fingerprint: the
//! multiplicative response each one imposes on the pilot subcarriers.

use simo_rff::impairments::{self, PaCoefficients, ProfileSampler};
use simo_rff::link::{LinkConfig, PilotGrid};
use simo_rff::seed;

fn main() -> simo_rff::Result<()> {
    let link = LinkConfig::default();
    let pilot = PilotGrid::generate(&link, 1);
    let sampler = ProfileSampler::default();
    let base = PaCoefficients::base();
    for d in 0..3u32 {
        let p = sampler.sample(d, seed::derive(11, &[seed::tag::DEVICE, u64::from(d)]), &base);
        println!(
            "device {d}: iq gain {:+.3} dB, iq phase {:+.3} deg, cfo {:+.1} Hz, cpo {:+.3} rad",
            p.iq_gain_db, p.iq_phase_deg, p.cfo_hz, p.cpo_rad
        );
        let t = impairments::oracle_tx_response(&p, &pilot, &link)?;
        let mags: Vec<String> = t.iter().step_by(32).map(|v| format!("{:.3}", v.norm())).collect();
        println!("  |T(k)| every 32nd subcarrier: {}", mags.join(" "));
    }
    Ok(())
}
