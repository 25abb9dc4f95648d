//! Image-processing primitives behind the specific-map transform: Otsu
//! thresholding, histogram equalization, Gaussian smoothing, percentiles
//! and connected components. All operate on real intensities.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::ImageGrid;

/// Pixel adjacency used for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Uniform binning of `[lo, hi]`; the maximum falls in the last bin.
#[derive(Debug, Clone, Copy)]
struct Binning {
    lo: f64,
    width: f64,
    bins: usize,
}

impl Binning {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            width: (hi - lo) / bins as f64,
            bins,
        }
    }

    fn bin(&self, v: f64) -> usize {
        if self.width > 0.0 {
            (((v - self.lo) / self.width).floor().max(0.0) as usize).min(self.bins - 1)
        } else {
            0
        }
    }

    fn histogram(&self, values: impl Iterator<Item = f64>) -> Vec<u64> {
        let mut h = vec![0u64; self.bins];
        for v in values {
            h[self.bin(v)] += 1;
        }
        h
    }
}

fn is_constant(lo: f64, hi: f64) -> bool {
    hi - lo <= f64::EPSILON * hi.abs().max(lo.abs())
}

/// Otsu threshold on raw intensities. Pixels strictly above the returned
/// value form the foreground.
///
/// The histogram spans `[min, max]` with `bins` bins; the split after bin
/// `t` maximizing the between-class variance is chosen (lowest `t` on
/// ties) and the threshold is that bin's upper edge. A constant input
/// returns its value, which leaves the foreground empty.
pub fn otsu_threshold_values(values: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::param("Otsu needs at least 2 bins"));
    }
    let (lo, hi) =
        value_range(values.iter().copied()).ok_or_else(|| Error::param("Otsu threshold of an empty image"))?;
    if is_constant(lo, hi) {
        return Ok(hi);
    }
    let binning = Binning::new(lo, hi, bins);
    let t = otsu_bin(&binning.histogram(values.iter().copied()));
    Ok(lo + (t + 1) as f64 * binning.width)
}

/// Best split bin for a histogram.
pub(crate) fn otsu_bin(hist: &[u64]) -> usize {
    let total: f64 = hist.iter().map(|&c| c as f64).sum();
    let sum_total: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (t, &count) in hist.iter().enumerate().take(hist.len() - 1) {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_total - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.1 {
            best = (t, between);
        }
    }
    best.0
}

/// Otsu threshold on pixel magnitudes.
pub fn otsu_threshold(image: &ImageGrid, bins: usize) -> Result<f64> {
    otsu_threshold_values(&image.magnitude(), bins)
}

/// CDF remap of the selected values onto `[0, 1]`. Unselected entries
/// come back as zero. A constant selection maps to one.
pub fn equalize_values(values: &[f64], select: Option<&[bool]>, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::param("histogram equalization needs at least 2 bins"));
    }
    let chosen = |i: usize| select.is_none_or(|m| m[i]);
    let picked = || values.iter().enumerate().filter(|(i, _)| chosen(*i)).map(|(_, &v)| v);
    let Some((lo, hi)) = value_range(picked()) else {
        return Ok(vec![0.0; values.len()]);
    };
    let binning = if is_constant(lo, hi) {
        Binning::new(lo, lo, bins)
    } else {
        Binning::new(lo, hi, bins)
    };
    let hist = binning.histogram(picked());
    let total: u64 = hist.iter().sum();
    let mut cdf = Vec::with_capacity(bins);
    let mut acc = 0u64;
    for c in hist {
        acc += c;
        cdf.push(acc as f64 / total as f64);
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| if chosen(i) { cdf[binning.bin(v)] } else { 0.0 })
        .collect())
}

/// Histogram equalization of pixel magnitudes over the whole image; the
/// result is real-valued.
pub fn histogram_equalize(image: &ImageGrid, bins: usize) -> Result<ImageGrid> {
    let eq = equalize_values(&image.magnitude(), None, bins)?;
    ImageGrid::from_real(image.height(), image.width(), &eq)
}

/// Normalized 1D Gaussian taps; the 2D kernel is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size.is_multiple_of(2) {
        return Err(Error::param(format!("kernel size must be odd, got {size}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let r = (size / 2) as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / s).collect())
}

/// Separable Gaussian blur with zero padding outside the raster.
pub fn gaussian_blur(values: &[f64], height: usize, width: usize, size: usize, sigma: f64) -> Result<Vec<f64>> {
    assert_eq!(values.len(), height * width);
    let taps = gaussian_taps(size, sigma)?;
    let r = (size / 2) as isize;
    let (h, w) = (height as isize, width as isize);

    let mut tmp = vec![0.0; values.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let xx = x + k as isize - r;
                if (0..w).contains(&xx) {
                    acc += t * values[(y * w + xx) as usize];
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let yy = y + k as isize - r;
                if (0..h).contains(&yy) {
                    acc += t * tmp[(yy * w + x) as usize];
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    Ok(out)
}

/// Percentile with linear interpolation between order statistics
/// (position `p/100 * (n-1)` in the sorted sample).
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::param("percentile of an empty sample"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::param(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// One connected region of a binary mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Linear indices in discovery order; the first is the raster-first pixel.
    pub pixels: Vec<usize>,
    pub centroid_row: f64,
    pub centroid_col: f64,
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Labels connected foreground regions, ordered by their raster-first pixel.
pub fn connected_components(mask: &[bool], height: usize, width: usize, conn: Connectivity) -> Vec<Component> {
    assert_eq!(mask.len(), height * width);
    const N4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
    const N8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    let offsets: &[(isize, isize)] = match conn {
        Connectivity::Four => &N4,
        Connectivity::Eight => &N8,
    };

    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (r, c) = ((i / width) as isize, (i % width) as isize);
            for &(dr, dc) in offsets {
                let (rr, cc) = (r + dr, c + dc);
                if rr < 0 || cc < 0 || rr >= height as isize || cc >= width as isize {
                    continue;
                }
                let j = rr as usize * width + cc as usize;
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let n = pixels.len() as f64;
        let centroid_row = pixels.iter().map(|&i| (i / width) as f64).sum::<f64>() / n;
        let centroid_col = pixels.iter().map(|&i| (i % width) as f64).sum::<f64>() / n;
        out.push(Component {
            pixels,
            centroid_row,
            centroid_col,
        });
    }
    out
}
