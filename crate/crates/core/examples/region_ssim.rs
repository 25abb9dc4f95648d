//! SSIM inside and outside a region, for a reconstruction that is damaged
//! only inside it.

use nullmap::analysis::{region_ssim, ssim, SsimConfig};
use nullmap::linop::ImageGrid;
use nullmap::simulate::shepp_logan;
use num_complex::Complex64;

fn main() -> nullmap::Result<()> {
    let truth = shepp_logan(64, 64);
    let in_region = |r: usize, c: usize| (20..36).contains(&r) && (24..40).contains(&c);
    let region = ImageGrid::from_fn(64, 64, |r, c| {
        Complex64::new(if in_region(r, c) { 1.0 } else { 0.0 }, 0.0)
    });
    let cfg = SsimConfig::default();

    for amp in [0.0, 0.05, 0.2] {
        let recon = ImageGrid::from_fn(64, 64, |r, c| {
            let bump = if in_region(r, c) {
                amp * ((r + 2 * c) as f64).sin()
            } else {
                0.0
            };
            truth.get(r, c) + Complex64::new(bump, 0.0)
        });
        let s = region_ssim(&recon, &truth, &region, None, &cfg)?;
        println!(
            "damage {amp:<4}: region {:.4}, background {:.4}, global {:.4} (plain {:.4})",
            s.region_mean.unwrap_or(f64::NAN),
            s.background_mean.unwrap_or(f64::NAN),
            s.global,
            ssim(&recon, &truth, &cfg)?.mean
        );
    }
    Ok(())
}
