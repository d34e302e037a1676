//! Maximal-length PRBS excitation, seeded Gaussian noise and the Toeplitz
//! regressor used by the FIR fits.

use dualsls::signals::{gaussian_noise, toeplitz_regressor, PrbsSpec, RngStream};
use dualsls::Result;

fn main() -> Result<()> {
    let spec = PrbsSpec::new(9, 10.0, 10);
    let prbs = spec.generate()?;
    let period = spec.period();
    let ones = prbs.samples()[..period].iter().filter(|&&v| v > 0.0).count();
    println!("order 9 PRBS: period {period}, total {} samples", prbs.len());
    println!("  +A samples per period: {ones} (balance {})", ones as i64 - (period - ones) as i64);
    println!("  first 16: {:?}", &prbs.samples()[..16]);

    let noise = gaussian_noise(prbs.len(), 2.0, RngStream::new(2020, 1))?;
    println!("noise mean {:.4}, variance {:.4}", noise.mean(), noise.variance());
    let again = gaussian_noise(prbs.len(), 2.0, RngStream::new(2020, 1))?;
    println!("same seed and stream reproduce the draw: {}", again == noise);

    let phi = toeplitz_regressor(&prbs, 15)?;
    println!("Toeplitz regressor for T = 15: {} x {}", phi.nrows(), phi.ncols());
    println!("  row 3: {:?}", phi.row(3).iter().take(5).collect::<Vec<_>>());
    Ok(())
}
