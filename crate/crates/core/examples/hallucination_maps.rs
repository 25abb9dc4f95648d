//! Error, measurement-space and null-space maps for a zero-filled and a
//! PLS-TV reconstruction of the same noisy measurement.

use nullmap::halmap::{hallucination_report, TransformConfig};
use nullmap::linop::{compute_svd, MaskSpec, Operator, DEFAULT_EPSILON};
use nullmap::recon::{recon_plstv, recon_tp, PlsTvConfig};
use nullmap::simulate::{random_body_phantom, simulate_measurement_for, NoiseConfig};

fn main() -> nullmap::Result<()> {
    let mask = MaskSpec::uniform(64, 64, 3, 0)?;
    let op = Operator::fft_mask(mask.clone());
    let dec = compute_svd(&op, DEFAULT_EPSILON)?;
    let theta = random_body_phantom(64, 64, 3, "demo");
    let noise = NoiseConfig {
        gaussian_sigma: 0.02,
        phase_noise_amplitude: 0.2,
        seed: 3,
    };
    let g = simulate_measurement_for(&theta, &mask, &noise, "demo")?;

    let tp = recon_tp(&g, &dec)?;
    let tv = recon_plstv(
        &g,
        &op,
        &PlsTvConfig {
            lambda: 0.02,
            max_iters: 300,
            ..Default::default()
        },
    )?
    .image;
    let tcfg = TransformConfig {
        min_component_area: 5,
        ..Default::default()
    };

    println!("method  ||error||  ||meas hm||  ||meas err||  ||null hm||  shm regions");
    for (name, hat) in [("tp", &tp), ("plstv", &tv)] {
        let r = hallucination_report(name, &g, &dec, &theta, hat, &tcfg)?;
        println!(
            "{name:<6} {:>10.4} {:>12.2e} {:>13.4} {:>12.4} {:>12}",
            r.error_map.norm(),
            r.meas_hm.norm(),
            r.meas_error_map.norm(),
            r.null_hm.norm(),
            r.shm_regions.len()
        );
        for s in &r.shm_regions {
            println!(
                "        region {} at ({:.1}, {:.1}), {} px",
                s.component_id, s.centroid_row, s.centroid_col, s.area
            );
        }
    }
    Ok(())
}
