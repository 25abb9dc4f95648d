//! Piecewise-constant ellipse phantoms.

use num_complex::Complex64;
use rand::Rng;

use super::substream;
use crate::linop::ImageGrid;

/// Ellipse on the `[-1, 1]^2` field of view; `x` points right, `y` up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub value: f64,
    pub semi_x: f64,
    pub semi_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Rotation in degrees, counter-clockwise.
    pub angle_deg: f64,
}

const fn e(value: f64, semi_x: f64, semi_y: f64, center_x: f64, center_y: f64, angle_deg: f64) -> Ellipse {
    Ellipse {
        value,
        semi_x,
        semi_y,
        center_x,
        center_y,
        angle_deg,
    }
}

/// Modified Shepp-Logan head (Toft's contrast-enhanced values).
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    e(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    e(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    e(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    e(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    e(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    e(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    e(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    e(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    e(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    e(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Sums ellipse indicators sampled at pixel centers.
pub fn render_ellipses(height: usize, width: usize, ellipses: &[Ellipse]) -> ImageGrid {
    ImageGrid::from_fn(height, width, |r, c| {
        let x = (2 * c + 1) as f64 / width as f64 - 1.0;
        let y = 1.0 - (2 * r + 1) as f64 / height as f64;
        let v: f64 = ellipses
            .iter()
            .filter(|el| {
                let (s, co) = el.angle_deg.to_radians().sin_cos();
                let (dx, dy) = (x - el.center_x, y - el.center_y);
                let u = (dx * co + dy * s) / el.semi_x;
                let w = (-dx * s + dy * co) / el.semi_y;
                u * u + w * w <= 1.0
            })
            .map(|el| el.value)
            .sum();
        Complex64::new(v, 0.0)
    })
}

pub fn shepp_logan(height: usize, width: usize) -> ImageGrid {
    render_ellipses(height, width, &SHEPP_LOGAN)
}

/// Shepp-Logan variant with jittered geometry and contrast, plus one or two
/// extra lesion-like ellipses inside the head. Deterministic in
/// `(seed, image_id)`.
pub fn random_phantom(height: usize, width: usize, seed: u64, image_id: &str) -> ImageGrid {
    let mut rng = substream(seed, image_id, "phantom");
    let mut ellipses: Vec<Ellipse> = SHEPP_LOGAN
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let jitter = if i < 2 { 0.01 } else { 0.04 };
            Ellipse {
                value: if i < 2 {
                    el.value
                } else {
                    el.value * rng.random_range(0.7..1.3)
                },
                semi_x: el.semi_x * rng.random_range(0.9..1.1),
                semi_y: el.semi_y * rng.random_range(0.9..1.1),
                center_x: el.center_x + rng.random_range(-jitter..jitter),
                center_y: el.center_y + rng.random_range(-jitter..jitter),
                angle_deg: el.angle_deg + rng.random_range(-5.0..5.0),
            }
        })
        .collect();
    let extra = rng.random_range(1..=2);
    for _ in 0..extra {
        ellipses.push(Ellipse {
            value: rng.random_range(0.1..0.3),
            semi_x: rng.random_range(0.05..0.12),
            semi_y: rng.random_range(0.05..0.12),
            center_x: rng.random_range(-0.4..0.4),
            center_y: rng.random_range(-0.5..0.5),
            angle_deg: rng.random_range(0.0..180.0),
        });
    }
    render_ellipses(height, width, &ellipses)
}

/// Uniform elliptical body with three to six inner ellipses of contrast in
/// `[-0.4, 0.4]`. Unlike the head phantoms there is no bright rim, so an
/// Otsu split of the magnitude recovers the whole body.
pub fn random_body_phantom(height: usize, width: usize, seed: u64, image_id: &str) -> ImageGrid {
    let mut rng = substream(seed, image_id, "body-phantom");
    let mut ellipses = vec![Ellipse {
        value: 1.0,
        semi_x: rng.random_range(0.7..0.85),
        semi_y: rng.random_range(0.75..0.9),
        center_x: 0.0,
        center_y: 0.0,
        angle_deg: rng.random_range(-10.0..10.0),
    }];
    for _ in 0..rng.random_range(3..=6) {
        ellipses.push(Ellipse {
            value: rng.random_range(-0.4..0.4),
            semi_x: rng.random_range(0.06..0.25),
            semi_y: rng.random_range(0.06..0.25),
            center_x: rng.random_range(-0.4..0.4),
            center_y: rng.random_range(-0.45..0.45),
            angle_deg: rng.random_range(0.0..180.0),
        });
    }
    render_ellipses(height, width, &ellipses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shepp_logan_levels() {
        let p = shepp_logan(64, 64);
        // outside the skull
        assert_eq!(p.get(0, 0).re, 0.0);
        // skull rim at top center
        assert!((p.get(3, 32).re - 1.0).abs() < 1e-12);
        // brain matter near center
        assert!((p.get(32, 32).re - 0.2).abs() < 0.11);
    }

    #[test]
    fn random_phantom_is_deterministic() {
        let a = random_phantom(32, 32, 5, "p0");
        assert_eq!(a, random_phantom(32, 32, 5, "p0"));
        assert_ne!(a, random_phantom(32, 32, 5, "p1"));
    }

    #[test]
    fn body_phantom_is_inside_field_of_view() {
        let p = random_body_phantom(32, 32, 5, "b0");
        assert_eq!(p, random_body_phantom(32, 32, 5, "b0"));
        assert_eq!(p.get(0, 0).re, 0.0);
        assert!(p.data().iter().all(|z| z.im == 0.0));
        assert!(p.get(16, 16).re > 0.5);
    }
}
