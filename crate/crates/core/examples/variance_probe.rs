//! Monte-Carlo variance of the recovered fingerprint as a function of
//! channel scale and estimation noise.

use simo_rff::extractor::{variance_probe, VarianceProbe};
use simo_rff::impairments::{PaCoefficients, ProfileSampler, RxAntennaProfile};

fn main() -> simo_rff::Result<()> {
    let probe = VarianceProbe::default();
    let tx = ProfileSampler::default().sample(0, 1, &PaCoefficients::base());
    let rx = [RxAntennaProfile::sample(0, 2), RxAntennaProfile::sample(1, 3)];
    let table = variance_probe(&probe, &tx, [&rx[0], &rx[1]])?;
    print!("sigma_H \\ sigma_N");
    for sn in &table.sigma_n {
        print!("{sn:>12}");
    }
    println!();
    for (sh, row) in table.sigma_h.iter().zip(&table.variance) {
        print!("{sh:>17}");
        for v in row {
            print!("{v:>12.3e}");
        }
        println!();
    }
    println!("strictly increasing in noise: {}", table.strictly_increasing_in_noise());
    Ok(())
}
