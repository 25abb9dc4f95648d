//! Error maps, measurement- and null-space hallucination maps, bias maps and
//! the specific-map transform.
//!
//! [`hallucination_report`] runs the whole procedure for one reconstruction:
//!
//! 1. `theta_tp = H_P^+ g`
//! 2. `theta_hat_meas = P_meas theta_hat`
//! 3. `theta_null = P_null theta`, `theta_hat_null = P_null theta_hat`
//! 4. measurement-space map `theta_hat_meas - theta_tp`
//! 5. null-space map `1(theta_hat_null) * (theta_hat_null - theta_null)`
//! 6. specific map `T(null map)`

mod transform;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use transform::{
    connected_components, equalize_values, gaussian_blur, gaussian_taps, histogram_equalize, otsu_threshold,
    otsu_threshold_values, percentile, Component, Connectivity,
};

use crate::error::{Error, Result};
use crate::linop::{ImageGrid, SpectralDecomposition};
use crate::subspace::{project_meas, project_null, truncated_pinv};

/// Pixels of `theta_hat_null` with magnitude at most this fraction of
/// `max |theta_hat|` count as zero for the null-map indicator.
pub const INDICATOR_TOLERANCE: f64 = 1e-12;

/// `theta_hat - theta`.
pub fn error_map(theta_hat: &ImageGrid, theta: &ImageGrid) -> Result<ImageGrid> {
    theta_hat.ensure_same_shape(theta, "error_map")?;
    theta_hat.sub(theta)
}

/// `P_meas theta_hat - H_P^+ g`. Needs no knowledge of the true object.
pub fn meas_hallucination_map(
    theta_hat: &ImageGrid,
    dec: &SpectralDecomposition,
    meas: &[Complex64],
) -> Result<ImageGrid> {
    let hat_meas = project_meas(dec, theta_hat)?;
    let tp = truncated_pinv(dec, meas)?;
    hat_meas.sub(&tp)
}

/// `P_meas theta_hat - P_meas theta`.
pub fn meas_error_map(theta_hat: &ImageGrid, theta: &ImageGrid, dec: &SpectralDecomposition) -> Result<ImageGrid> {
    theta_hat.ensure_same_shape(theta, "meas_error_map")?;
    project_meas(dec, theta_hat)?.sub(&project_meas(dec, theta)?)
}

/// `1(theta_hat_null) * (theta_hat_null - theta_null)`.
pub fn null_hallucination_map(
    theta_hat: &ImageGrid,
    theta: &ImageGrid,
    dec: &SpectralDecomposition,
) -> Result<ImageGrid> {
    theta_hat.ensure_same_shape(theta, "null_hallucination_map")?;
    let hat_null = project_null(dec, theta_hat)?;
    let true_null = project_null(dec, theta)?;
    Ok(masked_null_difference(&hat_null, &true_null, theta_hat.max_abs()))
}

fn masked_null_difference(hat_null: &ImageGrid, true_null: &ImageGrid, scale: f64) -> ImageGrid {
    let tau = INDICATOR_TOLERANCE * scale;
    hat_null.zip_with(true_null, |a, b| {
        if a.norm() <= tau {
            Complex64::new(0.0, 0.0)
        } else {
            a - b
        }
    })
}

/// `(1/K) sum_k theta_hat_k - theta`.
pub fn bias_map(estimates: &[ImageGrid], theta: &ImageGrid) -> Result<ImageGrid> {
    if estimates.is_empty() {
        return Err(Error::param("bias map needs at least one estimate"));
    }
    let mut acc = ImageGrid::zeros(theta.height(), theta.width());
    for est in estimates {
        est.ensure_same_shape(theta, "bias_map")?;
        for (a, b) in acc.data_mut().iter_mut().zip(est.data()) {
            *a += b;
        }
    }
    let k = estimates.len() as f64;
    Ok(acc.zip_with(theta, |s, t| s / k - t))
}

/// Parameters of the specific-map transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub gaussian_kernel_size: usize,
    pub gaussian_sigma: f64,
    pub percentile: f64,
    pub min_component_area: usize,
    pub connectivity: Connectivity,
    pub histogram_bins: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            gaussian_kernel_size: 7,
            gaussian_sigma: 1.5,
            percentile: 95.0,
            min_component_area: 100,
            connectivity: Connectivity::Eight,
            histogram_bins: 256,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gaussian_kernel_size.is_multiple_of(2) {
            return Err(Error::param("gaussian_kernel_size must be odd"));
        }
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::param("gaussian_sigma must be positive"));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::param("percentile must lie in (0, 100)"));
        }
        if self.min_component_area == 0 {
            return Err(Error::param("min_component_area must be positive"));
        }
        if self.histogram_bins < 2 {
            return Err(Error::param("histogram_bins must be at least 2"));
        }
        Ok(())
    }
}

/// Centroid and area of one surviving component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStat {
    pub component_id: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
    pub area: usize,
}

/// Output of the specific-map transform.
#[derive(Debug, Clone)]
pub struct SpecificMap {
    /// `{0, 1}`-valued real mask.
    pub mask: ImageGrid,
    pub regions: Vec<RegionStat>,
    /// Object support from Otsu's method on the reference.
    pub support: Vec<bool>,
    /// Percentile cut applied to the smoothed map, if the map had structure.
    pub threshold: Option<f64>,
    /// Pixels above the cut before small components were removed.
    pub thresholded_pixels: usize,
}

impl SpecificMap {
    fn empty(height: usize, width: usize, support: Vec<bool>) -> Self {
        Self {
            mask: ImageGrid::zeros(height, width),
            regions: Vec::new(),
            support,
            threshold: None,
            thresholded_pixels: 0,
        }
    }

    pub fn support_pixels(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }
}

/// Localizes coherent structures of a map inside the support of
/// `support_reference`:
///
/// magnitude, Otsu support, in-support histogram equalization, Gaussian
/// smoothing, percentile threshold over in-support pixels, removal of
/// components smaller than `min_component_area`.
///
/// A constant reference has empty support and yields an empty map, as does
/// a map that is constant over the support.
pub fn specific_map(map: &ImageGrid, support_reference: &ImageGrid, cfg: &TransformConfig) -> Result<SpecificMap> {
    cfg.validate()?;
    map.ensure_same_shape(support_reference, "specific_map")?;
    let (h, w) = map.shape();

    let reference = support_reference.magnitude();
    let cut = otsu_threshold_values(&reference, cfg.histogram_bins)?;
    let support: Vec<bool> = reference.iter().map(|&v| v > cut).collect();
    if !support.contains(&true) {
        return Ok(SpecificMap::empty(h, w, support));
    }

    let magnitude = map.magnitude();
    let inside = || magnitude.iter().zip(&support).filter(|(_, &s)| s).map(|(&v, _)| v);
    let lo = inside().fold(f64::INFINITY, f64::min);
    let hi = inside().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(SpecificMap::empty(h, w, support));
    }

    let equalized = equalize_values(&magnitude, Some(&support), cfg.histogram_bins)?;
    let smooth = gaussian_blur(&equalized, h, w, cfg.gaussian_kernel_size, cfg.gaussian_sigma)?;
    let in_support: Vec<f64> = smooth
        .iter()
        .zip(&support)
        .filter(|(_, &s)| s)
        .map(|(&v, _)| v)
        .collect();
    let threshold = percentile(&in_support, cfg.percentile)?;
    let binary: Vec<bool> = smooth.iter().zip(&support).map(|(&v, &s)| s && v > threshold).collect();
    let thresholded_pixels = binary.iter().filter(|&&b| b).count();

    let mut mask = ImageGrid::zeros(h, w);
    let mut regions = Vec::new();
    for comp in connected_components(&binary, h, w, cfg.connectivity) {
        if comp.area() < cfg.min_component_area {
            continue;
        }
        for &i in &comp.pixels {
            mask.data_mut()[i] = Complex64::new(1.0, 0.0);
        }
        regions.push(RegionStat {
            component_id: regions.len(),
            centroid_row: comp.centroid_row,
            centroid_col: comp.centroid_col,
            area: comp.area(),
        });
    }
    Ok(SpecificMap {
        mask,
        regions,
        support,
        threshold: Some(threshold),
        thresholded_pixels,
    })
}

/// All maps produced for one reconstruction.
#[derive(Debug, Clone)]
pub struct HallucinationReport {
    pub image_id: String,
    pub error_map: ImageGrid,
    pub meas_hm: ImageGrid,
    pub meas_error_map: ImageGrid,
    pub null_hm: ImageGrid,
    pub shm_mask: ImageGrid,
    pub specific_error_mask: ImageGrid,
    pub shm_regions: Vec<RegionStat>,
    pub specific_error_regions: Vec<RegionStat>,
}

/// Runs the full hallucination-map procedure. The true object doubles as
/// the support reference for both specific maps.
pub fn hallucination_report(
    image_id: &str,
    meas: &[Complex64],
    dec: &SpectralDecomposition,
    theta: &ImageGrid,
    theta_hat: &ImageGrid,
    cfg: &TransformConfig,
) -> Result<HallucinationReport> {
    theta_hat.ensure_same_shape(theta, "hallucination_report")?;
    dec.operator().check_image(theta, "hallucination_report")?;

    let tp = truncated_pinv(dec, meas)?;
    let hat_meas = project_meas(dec, theta_hat)?;
    let true_meas = project_meas(dec, theta)?;
    let hat_null = theta_hat.sub(&hat_meas)?;
    let true_null = theta.sub(&true_meas)?;

    let meas_hm = hat_meas.sub(&tp)?;
    let null_hm = masked_null_difference(&hat_null, &true_null, theta_hat.max_abs());
    let shm = specific_map(&null_hm, theta, cfg)?;

    let error = error_map(theta_hat, theta)?;
    let specific_error = specific_map(&error, theta, cfg)?;

    Ok(HallucinationReport {
        image_id: image_id.to_owned(),
        meas_error_map: hat_meas.sub(&true_meas)?,
        error_map: error,
        meas_hm,
        null_hm,
        shm_mask: shm.mask,
        specific_error_mask: specific_error.mask,
        shm_regions: shm.regions,
        specific_error_regions: specific_error.regions,
    })
}
