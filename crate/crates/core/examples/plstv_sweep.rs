//! Lambda selection for PLS-TV by lowest mean RMSE over a few phantoms.
//!
//! The side is not a multiple of the undersampling factor: then the sampled
//! rows would be periodic and the aliased copies exact.

use nullmap::linop::{MaskSpec, Operator};
use nullmap::recon::{sweep_lambda, PlsTvConfig};
use nullmap::simulate::{random_body_phantom, simulate_measurement_for, NoiseConfig};

fn main() -> nullmap::Result<()> {
    let mask = MaskSpec::uniform(50, 50, 3, 0)?;
    let op = Operator::fft_mask(mask.clone());
    let noise = NoiseConfig {
        gaussian_sigma: 0.02,
        phase_noise_amplitude: 0.1,
        seed: 11,
    };
    let data = (0..4)
        .map(|i| {
            let id = format!("img{i}");
            let theta = random_body_phantom(50, 50, 11, &id);
            Ok((simulate_measurement_for(&theta, &mask, &noise, &id)?, theta))
        })
        .collect::<nullmap::Result<Vec<_>>>()?;

    let base = PlsTvConfig {
        max_iters: 200,
        ..Default::default()
    };
    let sweep = sweep_lambda(&data, &op, &[0.0, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1], &base)?;
    for (lambda, rmse) in &sweep.mean_rmse {
        let mark = if *lambda == sweep.chosen_lambda { " <" } else { "" };
        println!("lambda {lambda:<6} mean rmse {rmse:.5}{mark}");
    }
    Ok(())
}
