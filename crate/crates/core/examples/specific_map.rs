//! The specific-map transform on a hand-made map: one 12x12 block that
//! survives and a 5x5 block that is too small.

use nullmap::halmap::{specific_map, TransformConfig};
use nullmap::linop::ImageGrid;
use num_complex::Complex64;

fn main() -> nullmap::Result<()> {
    let n = 64;
    let inside = |r: usize, c: usize| (4..60).contains(&r) && (4..60).contains(&c);
    let reference = ImageGrid::from_fn(n, n, |r, c| Complex64::new(if inside(r, c) { 1.0 } else { 0.0 }, 0.0));
    let map = ImageGrid::from_fn(n, n, |r, c| {
        let big = (26..38).contains(&r) && (26..38).contains(&c);
        let small = (4..9).contains(&r) && (48..53).contains(&c);
        let ripple = 0.01 * ((r * 7 + c * 3) % 11) as f64;
        Complex64::new(if big || small { 5.0 } else { ripple }, 0.0)
    });

    let out = specific_map(&map, &reference, &TransformConfig::default())?;
    println!(
        "support {} px, cut {:.4}, {} px above the cut",
        out.support_pixels(),
        out.threshold.unwrap_or(f64::NAN),
        out.thresholded_pixels
    );
    for r in &out.regions {
        println!(
            "component {}: centroid ({:.1}, {:.1}), area {}",
            r.component_id, r.centroid_row, r.centroid_col, r.area
        );
    }
    for row in (0..n).step_by(4) {
        let line: String = (0..n)
            .step_by(2)
            .map(|c| if out.mask.get(row, c).re > 0.0 { '#' } else { '.' })
            .collect();
        println!("{line}");
    }
    Ok(())
}
