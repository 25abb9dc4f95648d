//! Monte Carlo bias map of the zero-filled reconstruction. Its expectation
//! is minus the null-space component of the object.

use nullmap::halmap::bias_map;
use nullmap::linop::{compute_svd, MaskSpec, Operator, DEFAULT_EPSILON};
use nullmap::simulate::{shepp_logan, simulate_measurement_for, NoiseConfig};
use nullmap::subspace::{project_null, truncated_pinv};

fn main() -> nullmap::Result<()> {
    let mask = MaskSpec::uniform(32, 32, 3, 0)?;
    let dec = compute_svd(&Operator::fft_mask(mask.clone()), DEFAULT_EPSILON)?;
    let theta = shepp_logan(32, 32);
    let null = project_null(&dec, &theta)?;
    let noise = NoiseConfig {
        gaussian_sigma: 0.1,
        phase_noise_amplitude: 0.0,
        seed: 5,
    };

    for k in [1, 10, 100, 1000] {
        let estimates = (0..k)
            .map(|i| {
                truncated_pinv(
                    &dec,
                    &simulate_measurement_for(&theta, &mask, &noise, &format!("r{i}"))?,
                )
            })
            .collect::<nullmap::Result<Vec<_>>>()?;
        let b = bias_map(&estimates, &theta)?;
        println!(
            "K = {k:>4}: ||bias + null|| = {:.4}  (||null|| = {:.4})",
            b.add(&null)?.norm(),
            null.norm()
        );
    }
    Ok(())
}
