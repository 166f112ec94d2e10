//! Realises the built-in TDL presets and reports how flat their responses
//! are over sub-bands of each supported width.

use simo_rff::channel::{self, TdlChannelSpec};
use simo_rff::extractor::subband_deviation;
use simo_rff::link::{LinkConfig, SUPPORTED_SUBBAND_WIDTHS};

fn main() -> simo_rff::Result<()> {
    let link = LinkConfig::default();
    for name in ["tdl4", "tdl20", "tdl24"] {
        let spec = TdlChannelSpec::preset(name)?;
        println!(
            "{name}: {} paths, rms delay spread {:.1} ns",
            spec.num_paths(),
            spec.rms_delay_spread() * 1e9
        );
        let h = channel::cfr(&channel::realize(&spec, 7), &spec, link.k, link.scs_hz)?.h;
        let power = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64;
        println!("  mean |H|^2 over {} subcarriers: {power:.3}", h.len());
        for w in SUPPORTED_SUBBAND_WIDTHS {
            println!("  width {w:>2}: rms relative deviation from band mean {:.4}", subband_deviation(&h, w)?);
        }
    }
    Ok(())
}
