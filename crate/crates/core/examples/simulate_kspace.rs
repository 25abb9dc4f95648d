//! Simulated single-coil acquisitions: noiseless, Gaussian k-space noise,
//! and phase noise (model error). Pass a directory to also write the
//! measurements as `.cgrid` files.

use nullmap::formats::save_cgrid;
use nullmap::linop::{vec_norm, ImageGrid, MaskSpec, Operator};
use nullmap::simulate::{random_phantom, simulate_measurement_for, NoiseConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1);
    let (h, w) = (64, 64);
    let mask = MaskSpec::uniform(h, w, 3, 0)?;
    let op = Operator::fft_mask(mask.clone());
    let theta = random_phantom(h, w, 7, "demo");
    let clean = op.apply(&theta)?;

    let settings = [
        ("noiseless", NoiseConfig::noiseless()),
        (
            "gaussian",
            NoiseConfig {
                gaussian_sigma: 0.05,
                phase_noise_amplitude: 0.0,
                seed: 7,
            },
        ),
        (
            "phase",
            NoiseConfig {
                gaussian_sigma: 0.0,
                phase_noise_amplitude: 0.3,
                seed: 7,
            },
        ),
        (
            "both",
            NoiseConfig {
                gaussian_sigma: 0.05,
                phase_noise_amplitude: 0.3,
                seed: 7,
            },
        ),
    ];
    println!(
        "{} of {h} k-space rows sampled, {} values",
        mask.sampled_rows().len(),
        clean.len()
    );
    for (name, noise) in settings {
        let g = simulate_measurement_for(&theta, &mask, &noise, "demo")?;
        let dev: Vec<_> = g.iter().zip(&clean).map(|(a, b)| a - b).collect();
        println!(
            "{name:>9}: ||g|| {:.4}, ||g - H theta|| {:.4}",
            vec_norm(&g),
            vec_norm(&dev)
        );
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            let grid = ImageGrid::new(mask.sample_count(), w, g)?;
            save_cgrid(&std::path::Path::new(dir).join(format!("{name}.cgrid")), &grid)?;
        }
    }
    Ok(())
}
