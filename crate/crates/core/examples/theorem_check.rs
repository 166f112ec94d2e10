//! Noiseless oracle check: the relative error of the recovered transmit
//! response against `R1 T` for each sub-band width and channel preset.

use simo_rff::channel::TdlChannelSpec;
use simo_rff::harness::{theorem_check, TheoremCheck};

fn main() -> simo_rff::Result<()> {
    for name in ["tdl4", "tdl20", "tdl24"] {
        let report = theorem_check(&TheoremCheck::new(TdlChannelSpec::preset(name)?, 16, 50, 1))?;
        println!("{name} (pass = {}):", report.pass);
        for row in &report.rows {
            println!("  width {:>2}: median {:.4}  p90 {:.4}  mean {:.4}", row.width, row.median, row.p90, row.mean);
        }
    }
    Ok(())
}
