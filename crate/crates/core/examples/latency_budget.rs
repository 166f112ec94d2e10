//! Roofline latency of the fingerprinting pipeline: first with the reference
//! workload counts, then with counts measured from one simulated frame.

use simo_rff::classifier::CnnSpec;
use simo_rff::extractor::SubbandConfig;
use simo_rff::latency::{latency_report, profile_pipeline, RooflineParams, WorkloadProfile};
use simo_rff::link::LinkConfig;

fn main() -> simo_rff::Result<()> {
    let p = RooflineParams::default();
    let ue = WorkloadProfile::new("ue", 7.34e5, 5.91e5)?;
    let bs = WorkloadProfile::new("bs", 1.37e6, 1.39e6)?;
    let r = latency_report(&ue, &bs, 60e3, &p, None)?;
    println!("reference counts: {}", serde_json::to_string_pretty(&r).expect("report serialises"));

    let link = LinkConfig::default();
    let profile = profile_pipeline(&link, &SubbandConfig::estimate_mean(16)?, &CnnSpec::new(2, 30))?;
    for s in &profile.stages {
        println!("{:?} {:<16} {:>12.0} flop {:>12.0} byte", s.side, s.name, s.count.flops, s.count.bytes);
    }
    let r = latency_report(&profile.ue, &profile.bs, link.scs_hz, &p, None)?;
    println!(
        "measured counts: t_ue {:.2} us, t_rffi {:.2} us, t_air {:.1} us",
        r.t_ue * 1e6,
        r.t_rffi * 1e6,
        r.t_air * 1e6
    );
    Ok(())
}
