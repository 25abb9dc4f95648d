//! Reconstruction methods whose output can be analyzed: the truncated
//! pseudoinverse, PLS-TV, regularization sweeps, and ingestion of images
//! produced elsewhere.

mod plstv;
pub mod tv;

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use plstv::{complex_tv, plstv_objective, recon_plstv, squared_operator_norm, PlsTvConfig, PlsTvResult, StepSize};
pub use tv::TvFlavor;

use crate::analysis::rmse;
use crate::error::{Error, Result};
use crate::formats;
use crate::linop::{ImageGrid, Operator, SpectralDecomposition};
use crate::subspace::truncated_pinv;

/// Truncated-pseudoinverse reconstruction; for the FFT mask this is the
/// zero-filled inverse FFT.
pub fn recon_tp(meas: &[Complex64], dec: &SpectralDecomposition) -> Result<ImageGrid> {
    truncated_pinv(dec, meas)
}

/// Reads a `.cgrid` or binary PGM image. PGM samples are scaled to `[0, 1]`.
pub fn ingest_external(path: &Path) -> Result<ImageGrid> {
    formats::decode_image(&formats::read_bytes(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub image_index: usize,
    pub rmse: f64,
    /// Total variation of the reconstruction.
    pub tv: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub chosen_lambda: f64,
    /// `(lambda, mean RMSE)` in candidate order.
    pub mean_rmse: Vec<(f64, f64)>,
    pub cells: Vec<SweepCell>,
}

/// Reconstructs every item at every candidate and keeps the lambda with the
/// lowest mean RMSE against truth, preferring the smaller lambda on ties.
pub fn sweep_lambda(
    dataset: &[(Vec<Complex64>, ImageGrid)],
    op: &Operator,
    candidates: &[f64],
    base: &PlsTvConfig,
) -> Result<SweepResult> {
    if dataset.is_empty() {
        return Err(Error::param("lambda sweep needs at least one measurement"));
    }
    if candidates.is_empty() {
        return Err(Error::param("lambda sweep needs at least one candidate"));
    }
    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|l| (0..dataset.len()).map(move |i| (l, i)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(l, i)| {
            let cfg = PlsTvConfig {
                lambda: candidates[l],
                ..base.clone()
            };
            let (meas, truth) = &dataset[i];
            let out = recon_plstv(meas, op, &cfg)?;
            Ok(SweepCell {
                lambda: candidates[l],
                image_index: i,
                rmse: rmse(&out.image, truth)?,
                tv: complex_tv(&out.image, cfg.tv_flavor),
                iterations: out.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let k = dataset.len();
    let mean_rmse: Vec<(f64, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(l, &lam)| {
            (
                lam,
                cells[l * k..(l + 1) * k].iter().map(|c| c.rmse).sum::<f64>() / k as f64,
            )
        })
        .collect();
    let mut best = mean_rmse[0];
    for &(lam, m) in &mean_rmse[1..] {
        if m < best.1 || (m == best.1 && lam < best.0) {
            best = (lam, m);
        }
    }
    Ok(SweepResult {
        chosen_lambda: best.0,
        mean_rmse,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::MaskSpec;

    #[test]
    fn empty_inputs_rejected() {
        let op = Operator::fft_mask(MaskSpec::full(4, 4).unwrap());
        let theta = ImageGrid::zeros(4, 4);
        let g = op.apply(&theta).unwrap();
        let cfg = PlsTvConfig::default();
        assert!(sweep_lambda(&[], &op, &[0.0], &cfg).is_err());
        assert!(sweep_lambda(&[(g, theta)], &op, &[], &cfg).is_err());
    }

    #[test]
    fn single_candidate_is_returned() {
        let op = Operator::fft_mask(MaskSpec::full(4, 4).unwrap());
        let theta = ImageGrid::from_fn(4, 4, |r, _| Complex64::new(r as f64, 0.0));
        let g = op.apply(&theta).unwrap();
        let res = sweep_lambda(&[(g, theta)], &op, &[0.3], &PlsTvConfig::default()).unwrap();
        assert_eq!(res.chosen_lambda, 0.3);
        assert_eq!(res.cells.len(), 1);
        assert_eq!(res.mean_rmse[0].1, res.cells[0].rmse);
    }

    #[test]
    fn ingest_missing_file() {
        assert!(matches!(
            ingest_external(Path::new("/nonexistent/x.cgrid")),
            Err(Error::Io { .. })
        ));
    }
}
