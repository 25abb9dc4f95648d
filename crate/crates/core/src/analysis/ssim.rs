use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halmap::gaussian_taps;
use crate::linop::ImageGrid;

/// Structural-similarity parameters. Defaults: 11x11 Gaussian window with
/// sigma 1.5, `k1 = 0.01`, `k2 = 0.03`, data range from the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// `None` uses the largest magnitude over both images (1 if both are zero).
    pub data_range: Option<f64>,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SsimResult {
    /// Mean of the per-pixel map.
    pub mean: f64,
    /// Per-pixel SSIM, row-major.
    pub map: Vec<f64>,
}

/// SSIM of pixel magnitudes.
///
/// Every pixel gets a value: near the border the Gaussian window is
/// truncated to the raster and renormalized.
pub fn ssim(a: &ImageGrid, b: &ImageGrid, cfg: &SsimConfig) -> Result<SsimResult> {
    a.ensure_same_shape(b, "ssim")?;
    let (h, w) = a.shape();
    if cfg.window > h || cfg.window > w {
        return Err(Error::param(format!(
            "SSIM window {} larger than image {h}x{w}",
            cfg.window
        )));
    }
    let taps = gaussian_taps(cfg.window, cfg.sigma)?;
    let x = a.magnitude();
    let y = b.magnitude();
    let range = match cfg.data_range {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::param(format!("data_range must be positive, got {r}"))),
        None => {
            let m = x.iter().chain(&y).copied().fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let c1 = (cfg.k1 * range).powi(2);
    let c2 = (cfg.k2 * range).powi(2);
    let rad = (cfg.window / 2) as isize;

    let mut map = Vec::with_capacity(h * w);
    let mut window: Vec<(usize, f64)> = Vec::with_capacity(cfg.window * cfg.window);
    for r in 0..h as isize {
        for c in 0..w as isize {
            window.clear();
            let mut total = 0.0;
            for dr in -rad..=rad {
                let rr = r + dr;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for dc in -rad..=rad {
                    let cc = c + dc;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    let wt = taps[(dr + rad) as usize] * taps[(dc + rad) as usize];
                    total += wt;
                    window.push((rr as usize * w + cc as usize, wt));
                }
            }
            let (mut mx, mut my) = (0.0, 0.0);
            for &(i, wt) in &window {
                mx += wt / total * x[i];
                my += wt / total * y[i];
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for &(i, wt) in &window {
                let wn = wt / total;
                let (dx, dy) = (x[i] - mx, y[i] - my);
                vx += wn * (dx * dx);
                vy += wn * (dy * dy);
                cxy += wn * (dx * dy);
            }
            let num = (2.0 * (mx * my) + c1) * (2.0 * cxy + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            map.push((num / den).clamp(-1.0, 1.0));
        }
    }
    let mean = map.iter().sum::<f64>() / map.len() as f64;
    Ok(SsimResult { mean, map })
}

/// Mean per-pixel SSIM inside a region and over the rest of the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSsim {
    /// `None` when the region is empty.
    pub region_mean: Option<f64>,
    /// `None` when the region covers the whole support.
    pub background_mean: Option<f64>,
    pub global: f64,
}

/// Region is the nonzero pixels of `region_mask` inside the support;
/// background is the support minus the region. Without a support mask the
/// whole image is the support.
pub fn region_ssim(
    a: &ImageGrid,
    b: &ImageGrid,
    region_mask: &ImageGrid,
    support: Option<&[bool]>,
    cfg: &SsimConfig,
) -> Result<RegionSsim> {
    region_mask.ensure_same_shape(a, "region_ssim")?;
    if let Some(s) = support {
        if s.len() != a.len() {
            return Err(Error::dims("region_ssim", a.len(), s.len()));
        }
    }
    let res = ssim(a, b, cfg)?;
    let in_support = |i: usize| support.is_none_or(|s| s[i]);
    let (mut rs, mut rn, mut bs, mut bn) = (0.0, 0usize, 0.0, 0usize);
    for (i, (&v, z)) in res.map.iter().zip(region_mask.data()).enumerate() {
        if !in_support(i) {
            continue;
        }
        if z.norm() != 0.0 {
            rs += v;
            rn += 1;
        } else {
            bs += v;
            bn += 1;
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    Ok(RegionSsim {
        region_mean: mean(rs, rn),
        background_mean: mean(bs, bn),
        global: res.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn textured(h: usize, w: usize, seed: usize) -> ImageGrid {
        ImageGrid::from_fn(h, w, |r, c| {
            Complex64::new((((r * 7 + c * 3 + seed) % 11) as f64) / 10.0, 0.0)
        })
    }

    #[test]
    fn identity_is_exactly_one() {
        let a = textured(16, 16, 0);
        let res = ssim(&a, &a, &SsimConfig::default()).unwrap();
        assert_eq!(res.mean, 1.0);
        assert!(res.map.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_images_closed_form() {
        let a = ImageGrid::zeros(12, 12);
        let b = ImageGrid::from_real(12, 12, &[1.0; 144]).unwrap();
        let cfg = SsimConfig {
            data_range: Some(1.0),
            ..Default::default()
        };
        let res = ssim(&a, &b, &cfg).unwrap();
        let c1 = 1e-4;
        assert!((res.mean - c1 / (1.0 + c1)).abs() < 1e-12);
    }

    #[test]
    fn window_guard() {
        let a = textured(8, 8, 0);
        assert!(ssim(&a, &a, &SsimConfig::default()).is_err());
    }

    #[test]
    fn full_and_empty_regions() {
        let a = textured(16, 16, 0);
        let b = textured(16, 16, 3);
        let cfg = SsimConfig::default();
        let global = ssim(&a, &b, &cfg).unwrap().mean;
        let full = ImageGrid::from_real(16, 16, &[1.0; 256]).unwrap();
        let r = region_ssim(&a, &b, &full, None, &cfg).unwrap();
        assert!((r.region_mean.unwrap() - global).abs() < 1e-12);
        assert_eq!(r.background_mean, None);
        let r = region_ssim(&a, &b, &ImageGrid::zeros(16, 16), None, &cfg).unwrap();
        assert_eq!(r.region_mean, None);
        assert!((r.background_mean.unwrap() - global).abs() < 1e-12);
    }
}
