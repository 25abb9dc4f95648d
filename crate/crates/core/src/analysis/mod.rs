//! Image-quality metrics and ensemble summaries: RMSE, SSIM (global, per
//! pixel and region-restricted), centroid scatter tables and empirical PDFs.

mod ssim;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use ssim::{region_ssim, ssim, RegionSsim, SsimConfig, SsimResult};

use crate::error::{Error, Result};
use crate::halmap::{HallucinationReport, RegionStat};
use crate::linop::ImageGrid;

/// `sqrt(mean |a - b|^2)`.
pub fn rmse(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    a.ensure_same_shape(b, "rmse")?;
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    Ok((s / a.len() as f64).sqrt())
}

/// Which specific map a centroid table is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterSource {
    SpecificHm,
    SpecificError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidRow {
    pub image_id: String,
    pub component_id: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
    pub area: usize,
}

pub const CENTROID_HEADER: [&str; 5] = ["image_id", "component_id", "centroid_row", "centroid_col", "area"];

pub fn centroid_rows(image_id: &str, regions: &[RegionStat]) -> Vec<CentroidRow> {
    regions
        .iter()
        .map(|r| CentroidRow {
            image_id: image_id.to_owned(),
            component_id: r.component_id,
            centroid_row: r.centroid_row,
            centroid_col: r.centroid_col,
            area: r.area,
        })
        .collect()
}

/// One row per component per report, in report order then component order.
pub fn export_centroid_scatter(reports: &[HallucinationReport], which: ScatterSource) -> Vec<CentroidRow> {
    reports
        .iter()
        .flat_map(|rep| {
            let regions = match which {
                ScatterSource::SpecificHm => &rep.shm_regions,
                ScatterSource::SpecificError => &rep.specific_error_regions,
            };
            centroid_rows(&rep.image_id, regions)
        })
        .collect()
}

pub fn write_centroids_csv<W: Write>(out: W, rows: &[CentroidRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CENTROID_HEADER)?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.component_id.to_string(),
            r.centroid_row.to_string(),
            r.centroid_col.to_string(),
            r.area.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Trace of the 2D centroid covariance (population), `None` below two rows.
pub fn centroid_variance(rows: &[CentroidRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let mr = rows.iter().map(|r| r.centroid_row).sum::<f64>() / n;
    let mc = rows.iter().map(|r| r.centroid_col).sum::<f64>() / n;
    Some(
        rows.iter()
            .map(|r| (r.centroid_row - mr).powi(2) + (r.centroid_col - mc).powi(2))
            .sum::<f64>()
            / n,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
}

/// Normalized histogram over `[min, max]`; the maximum lands in the last
/// bin. A sample with a single distinct value uses the unit interval
/// centred on it.
pub fn empirical_pdf(values: &[f64], bins: usize) -> Result<Vec<PdfBin>> {
    if values.is_empty() {
        return Err(Error::param("empirical PDF of an empty sample"));
    }
    if bins == 0 {
        return Err(Error::param("empirical PDF needs at least one bin"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("empirical PDF of non-finite values"));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = values.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| PdfBin {
            bin_left: lo + i as f64 * width,
            bin_right: lo + (i + 1) as f64 * width,
            density: c as f64 / (n * width),
        })
        .collect())
}

pub fn write_pdf_csv<W: Write>(out: W, bins: &[PdfBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_left", "bin_right", "density"])?;
    for b in bins {
        w.write_record([b.bin_left.to_string(), b.bin_right.to_string(), b.density.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Row of `ssim_table.csv`; absent regions are written as empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsimRow {
    pub image_id: String,
    pub method: String,
    pub region_mean: Option<f64>,
    pub background_mean: Option<f64>,
    pub global: f64,
}

pub fn write_ssim_csv<W: Write>(out: W, rows: &[SsimRow]) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["image_id", "method", "region_mean", "background_mean", "global"])?;
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.method.clone(),
            opt(r.region_mean),
            opt(r.background_mean),
            r.global.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Median per `(method, distribution)` cell, e.g. region SSIM by
/// reconstruction method and test-set distribution.
pub fn median_table<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> BTreeMap<(String, String), f64> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (method, dist, v) in entries {
        groups.entry((method.to_owned(), dist.to_owned())).or_default().push(v);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, median(&v).expect("nonempty group")))
        .collect()
}
