//! Truncated pseudoinverse, generalized measurement/null projections and
//! the stability check, all evaluated through a [`SpectralDecomposition`].
//!
//! Projectors are applied operator-side; no `N x N` matrix is formed.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linop::{vec_norm, ImageGrid, SpectralDecomposition};

/// `H_P^+ g`. Returns the zero image when `P = 0`.
pub fn truncated_pinv(dec: &SpectralDecomposition, meas: &[Complex64]) -> Result<ImageGrid> {
    let op = dec.operator();
    op.check_measurement(meas, "truncated_pinv")?;
    let (h, w) = op.domain_shape();
    Ok(ImageGrid::from_raw(h, w, dec.pinv_raw(meas)))
}

/// Generalized measurement component `H_P^+ H theta`.
pub fn project_meas(dec: &SpectralDecomposition, image: &ImageGrid) -> Result<ImageGrid> {
    dec.operator().check_image(image, "project_meas")?;
    Ok(ImageGrid::from_raw(
        image.height(),
        image.width(),
        dec.project_meas_raw(image.data()),
    ))
}

/// Generalized null component `theta - H_P^+ H theta`.
pub fn project_null(dec: &SpectralDecomposition, image: &ImageGrid) -> Result<ImageGrid> {
    let meas = project_meas(dec, image)?;
    Ok(image.zip_with(&meas, |a, b| a - b))
}

/// Both components at once, `(theta_meas, theta_null)`.
pub fn decompose(dec: &SpectralDecomposition, image: &ImageGrid) -> Result<(ImageGrid, ImageGrid)> {
    let meas = project_meas(dec, image)?;
    let null = image.zip_with(&meas, |a, b| a - b);
    Ok((meas, null))
}

/// Outcome of the Lipschitz stability check `||H_P^+ g1 - H_P^+ g2|| <= alpha ||g1 - g2||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `1/s_P`, or zero when nothing survives truncation.
    pub alpha: f64,
    pub satisfied: bool,
}

pub fn verify_stability(dec: &SpectralDecomposition, g1: &[Complex64], g2: &[Complex64]) -> Result<StabilityReport> {
    if g1.len() != g2.len() {
        return Err(Error::dims(
            "verify_stability",
            format!("length {}", g1.len()),
            format!("length {}", g2.len()),
        ));
    }
    dec.operator().check_measurement(g1, "verify_stability")?;
    let diff: Vec<Complex64> = g1.iter().zip(g2).map(|(a, b)| a - b).collect();
    let rhs = vec_norm(&diff);
    let p = dec.truncation();
    if p == 0 {
        return Ok(StabilityReport {
            lhs: 0.0,
            rhs,
            alpha: 0.0,
            satisfied: true,
        });
    }
    let a = dec.pinv_raw(g1);
    let b = dec.pinv_raw(g2);
    let lhs = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let alpha = 1.0 / dec.singular_values()[p - 1];
    Ok(StabilityReport {
        lhs,
        rhs,
        alpha,
        satisfied: lhs <= alpha * rhs + 1e-12,
    })
}
