use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{CliError, MapKind, Method, PipelineConfig};
use crate::analysis::{
    empirical_pdf, region_ssim, ssim, write_centroids_csv, write_pdf_csv, write_ssim_csv, CentroidRow, RegionSsim,
    SsimRow,
};
use crate::formats::{self, decode_image, load_mask, read_bytes, save_cgrid, save_mask, write_atomic};
use crate::halmap::{connected_components, hallucination_report, otsu_threshold_values, specific_map, RegionStat};
use crate::linop::{compute_svd, ImageGrid, MaskSpec, Operator, SpectralDecomposition};
use crate::recon::{plstv_objective, recon_plstv, recon_tp, sweep_lambda, SweepResult};
use crate::simulate::{fnv1a64, simulate_measurement_for, NoiseConfig, GAUSSIAN_STREAM, PHASE_STREAM};
use crate::subspace::decompose;

const IMAGE_EXTENSIONS: [&str; 2] = ["cgrid", "pgm"];

/// Image files of a flat directory keyed by stem, sorted by stem.
fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let mut found: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?
            .path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !path.is_file() || !IMAGE_EXTENSIONS.contains(&ext) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if stem.starts_with('.') {
            continue;
        }
        if let Some(prev) = found.insert(stem.to_owned(), path.clone()) {
            return Err(CliError::data(format!(
                "image_id {stem} appears twice: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(found.into_iter().collect())
}

fn counterpart(dir: &Path, id: &str, role: &str) -> crate::Result<PathBuf, String> {
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| format!("image_id {id}: no {role} file in {}", dir.display()))
}

fn load_image(path: &Path) -> crate::Result<ImageGrid> {
    decode_image(&read_bytes(path)?)
}

/// Runs `f` on every item in parallel and keeps input order. All failures
/// are reported, each prefixed with its image id.
fn per_image<T, F>(items: &[(String, PathBuf)], f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(&str, &Path) -> Result<T, String> + Sync,
{
    let results: Vec<Result<T, String>> = items.par_iter().map(|(id, p)| f(id, p)).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (r, (id, _)) in results.into_iter().zip(items) {
        match r {
            Ok(v) => ok.push(v),
            Err(e) if e.starts_with("image_id ") => errors.push(e),
            Err(e) => errors.push(format!("image_id {id}: {e}")),
        }
    }
    if errors.is_empty() {
        Ok(ok)
    } else {
        Err(CliError::Data(errors))
    }
}

fn prepare_output(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::data)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(())
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> crate::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_atomic(path, &buf)?;
    Ok(())
}

fn measurement_grid(mask: &MaskSpec, meas: Vec<Complex64>) -> crate::Result<ImageGrid> {
    ImageGrid::new(mask.sampled_rows().len(), mask.width(), meas)
}

fn load_measurement(path: &Path, op: &Operator) -> crate::Result<Vec<Complex64>> {
    let grid = load_image(path)?;
    let (rows, cols) = op.range_shape();
    if grid.shape() != (rows, cols) {
        return Err(crate::Error::Dimensions {
            context: "measurement file",
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", grid.height(), grid.width()),
        });
    }
    Ok(grid.into_data())
}

fn load_sampling(meas_dir: &Path) -> Result<MaskSpec, CliError> {
    Ok(load_mask(&meas_dir.join("mask.json"))?)
}

fn decomposition(op: &Operator, cfg: &PipelineConfig) -> Result<SpectralDecomposition, CliError> {
    Ok(compute_svd(op, cfg.epsilon)?)
}

pub(super) fn simulate(cfg: &PipelineConfig, seed: Option<u64>, input: &Path, output: &Path) -> Result<(), CliError> {
    let mask_cfg = cfg
        .mask
        .ok_or_else(|| CliError::Config("mask: required by simulate".into()))?;
    let mut noise: NoiseConfig = cfg
        .noise
        .ok_or_else(|| CliError::Config("noise: required by simulate".into()))?;
    if let Some(s) = seed {
        noise.seed = s;
    }
    let images = list_images(input)?;
    let thetas = per_image(&images, |_, p| load_image(p).map_err(|e| e.to_string()))?;
    prepare_output(output)?;

    let mut mask = None;
    if let Some(first) = thetas.first() {
        for ((id, _), t) in images.iter().zip(&thetas) {
            if t.shape() != first.shape() {
                return Err(CliError::data(format!(
                    "image_id {id}: shape {}x{} differs from {}x{} of image_id {}",
                    t.height(),
                    t.width(),
                    first.height(),
                    first.width(),
                    images[0].0
                )));
            }
        }
        let m = MaskSpec::uniform(first.height(), first.width(), mask_cfg.factor, mask_cfg.offset)?;
        save_mask(&output.join("mask.json"), &m)?;
        mask = Some(m);
    }

    let jobs: Vec<(String, PathBuf)> = images.clone();
    per_image(&jobs, |id, _| {
        let i = images.iter().position(|x| x.0 == id).expect("listed");
        let mask = mask.as_ref().expect("mask built for nonempty input");
        let g = simulate_measurement_for(&thetas[i], mask, &noise, id).map_err(|e| e.to_string())?;
        let grid = measurement_grid(mask, g).map_err(|e| e.to_string())?;
        save_cgrid(&output.join(format!("{id}.cgrid")), &grid).map_err(|e| e.to_string())
    })?;

    let stream = |id: &str, purpose: &str| {
        let mut key = id.as_bytes().to_vec();
        key.push(0xff);
        key.extend_from_slice(purpose.as_bytes());
        fnv1a64(&key)
    };
    let manifest = json!({
        "stage": "simulate",
        "rng": "chacha20",
        "config": { "mask": mask_cfg, "noise": noise },
        "images": images.iter().map(|(id, _)| json!({
            "image_id": id,
            "seed": noise.seed,
            "phase_stream": stream(id, PHASE_STREAM),
            "gaussian_stream": stream(id, GAUSSIAN_STREAM),
        })).collect::<Vec<_>>(),
    });
    write_json(&output.join("manifest.json"), &manifest)
}

pub(super) fn reconstruct(
    cfg: &PipelineConfig,
    seed: Option<u64>,
    method: Method,
    meas_dir: &Path,
    sweep: Option<&Path>,
    output: &Path,
) -> Result<(), CliError> {
    let mut plstv = cfg.plstv.clone();
    if let Some(path) = sweep {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let result: SweepResult =
            serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        plstv.lambda = result.chosen_lambda;
    }
    let images = list_images(meas_dir)?;
    prepare_output(output)?;

    let mut entries = Vec::new();
    if !images.is_empty() {
        let op = Operator::fft_mask(load_sampling(meas_dir)?);
        let dec = match method {
            Method::Tp => Some(decomposition(&op, cfg)?),
            Method::Plstv => None,
        };
        entries = per_image(&images, |id, path| {
            let run = || -> crate::Result<_> {
                let g = load_measurement(path, &op)?;
                let (image, iters, objective) = match &dec {
                    Some(dec) => {
                        let x = recon_tp(&g, dec)?;
                        let f = plstv_objective(&op, &g, &x, 0.0, plstv.tv_flavor);
                        (x, 0, f)
                    }
                    None => {
                        let out = recon_plstv(&g, &op, &plstv)?;
                        let f = out.final_objective();
                        (out.image, out.iterations, f)
                    }
                };
                save_cgrid(&output.join(format!("{id}.cgrid")), &image)?;
                Ok(json!({ "image_id": id, "iters": iters, "final_objective": objective }))
            };
            run().map_err(|e| e.to_string())
        })?;
    }
    let manifest = json!({
        "stage": "reconstruct",
        "method": match method { Method::Tp => "tp", Method::Plstv => "plstv" },
        "lambda": match method { Method::Tp => None, Method::Plstv => Some(plstv.lambda) },
        "seed": seed.or(cfg.noise.map(|n| n.seed)),
        "epsilon": cfg.epsilon,
        "plstv": plstv,
        "images": entries,
    });
    write_json(&output.join("manifest.json"), &manifest)
}

pub(super) fn project(cfg: &PipelineConfig, input: &Path, mask_path: &Path, output: &Path) -> Result<(), CliError> {
    let mask = load_mask(mask_path)?;
    let op = Operator::fft_mask(mask.clone());
    let dec = decomposition(&op, cfg)?;
    let images = list_images(input)?;
    prepare_output(output)?;
    let norms = per_image(&images, |id, path| {
        let run = || -> crate::Result<_> {
            let theta = load_image(path)?;
            let (meas_part, null_part) = decompose(&dec, &theta)?;
            save_cgrid(&output.join(format!("{id}.meas.cgrid")), &meas_part)?;
            save_cgrid(&output.join(format!("{id}.null.cgrid")), &null_part)?;
            Ok(json!({ "image_id": id, "meas_norm": meas_part.norm(), "null_norm": null_part.norm() }))
        };
        run().map_err(|e| e.to_string())
    })?;
    save_mask(&output.join("mask.json"), &mask)?;
    let manifest = json!({
        "stage": "project",
        "epsilon": cfg.epsilon,
        "truncation": dec.truncation(),
        "images": norms,
    });
    write_json(&output.join("manifest.json"), &manifest)
}

fn region_rows(id: &str, regions: &[RegionStat]) -> Vec<CentroidRow> {
    crate::analysis::centroid_rows(id, regions)
}

pub(super) fn halmap(
    cfg: &PipelineConfig,
    recon_dir: &Path,
    truth_dir: &Path,
    meas_dir: &Path,
    output: &Path,
) -> Result<(), CliError> {
    let images = list_images(recon_dir)?;
    prepare_output(output)?;
    let mut reports = Vec::new();
    if !images.is_empty() {
        let op = Operator::fft_mask(load_sampling(meas_dir)?);
        let dec = decomposition(&op, cfg)?;
        reports = per_image(&images, |id, recon_path| {
            let truth_path = counterpart(truth_dir, id, "truth")?;
            let meas_path = counterpart(meas_dir, id, "measurement")?;
            let run = || -> crate::Result<_> {
                let theta_hat = load_image(recon_path)?;
                let theta = load_image(&truth_path)?;
                theta_hat.ensure_same_shape(&theta, "reconstruction vs truth")?;
                let g = load_measurement(&meas_path, &op)?;
                let rep = hallucination_report(id, &g, &dec, &theta, &theta_hat, &cfg.transform)?;
                for (suffix, grid) in [
                    ("error", &rep.error_map),
                    ("meas_hm", &rep.meas_hm),
                    ("meas_error", &rep.meas_error_map),
                    ("null_hm", &rep.null_hm),
                    ("shm_mask", &rep.shm_mask),
                    ("specific_error_mask", &rep.specific_error_mask),
                ] {
                    save_cgrid(&output.join(format!("{id}.{suffix}.cgrid")), grid)?;
                }
                Ok(rep)
            };
            run().map_err(|e| e.to_string())
        })?;
    }
    let shm_rows: Vec<_> = reports
        .iter()
        .flat_map(|r| region_rows(&r.image_id, &r.shm_regions))
        .collect();
    let err_rows: Vec<_> = reports
        .iter()
        .flat_map(|r| region_rows(&r.image_id, &r.specific_error_regions))
        .collect();
    write_with(&output.join("centroids_shm.csv"), |b| write_centroids_csv(b, &shm_rows))?;
    write_with(&output.join("centroids_specific_error.csv"), |b| {
        write_centroids_csv(b, &err_rows)
    })?;
    let manifest = json!({
        "stage": "halmap",
        "epsilon": cfg.epsilon,
        "transform": cfg.transform,
        "images": reports.iter().map(|r| json!({
            "image_id": r.image_id,
            "null_hm_norm": r.null_hm.norm(),
            "meas_hm_norm": r.meas_hm.norm(),
            "shm_regions": r.shm_regions.len(),
            "specific_error_regions": r.specific_error_regions.len(),
        })).collect::<Vec<_>>(),
    });
    write_json(&output.join("manifest.json"), &manifest)
}

pub(super) fn shm(cfg: &PipelineConfig, input: &Path, reference_dir: &Path, output: &Path) -> Result<(), CliError> {
    let images = list_images(input)?;
    prepare_output(output)?;
    let regions = per_image(&images, |id, path| {
        let reference_path = counterpart(reference_dir, id, "reference")?;
        let run = || -> crate::Result<_> {
            let map = load_image(path)?;
            let reference = load_image(&reference_path)?;
            let out = specific_map(&map, &reference, &cfg.transform)?;
            save_cgrid(&output.join(format!("{id}.cgrid")), &out.mask)?;
            Ok(region_rows(id, &out.regions))
        };
        run().map_err(|e| e.to_string())
    })?;
    let rows: Vec<_> = regions.into_iter().flatten().collect();
    write_with(&output.join("centroids.csv"), |b| write_centroids_csv(b, &rows))?;
    let manifest = json!({
        "stage": "shm",
        "transform": cfg.transform,
        "images": images.iter().map(|(id, _)| id).collect::<Vec<_>>(),
    });
    write_json(&output.join("manifest.json"), &manifest)
}

pub(super) fn analyze(
    cfg: &PipelineConfig,
    recon_dir: &Path,
    truth_dir: &Path,
    halmap_dir: Option<&Path>,
    regions: MapKind,
    method: &str,
    output: &Path,
) -> Result<(), CliError> {
    let images = list_images(recon_dir)?;
    prepare_output(output)?;
    let suffix = match regions {
        MapKind::NullHm => "shm_mask",
        MapKind::Error => "specific_error_mask",
    };
    let results = per_image(&images, |id, recon_path| {
        let truth_path = counterpart(truth_dir, id, "truth")?;
        let mask_path = halmap_dir.map(|d| d.join(format!("{id}.{suffix}.cgrid")));
        if let Some(p) = &mask_path {
            if !p.is_file() {
                return Err(format!("image_id {id}: no region mask {}", p.display()));
            }
        }
        let run = || -> crate::Result<_> {
            let recon = load_image(recon_path)?;
            let truth = load_image(&truth_path)?;
            recon.ensure_same_shape(&truth, "reconstruction vs truth")?;
            let Some(mask_path) = &mask_path else {
                let global = ssim(&recon, &truth, &cfg.ssim)?.mean;
                let stats = RegionSsim {
                    region_mean: None,
                    background_mean: None,
                    global,
                };
                return Ok((stats, Vec::new()));
            };
            let mask = formats::load_cgrid(mask_path)?;
            let magnitude = truth.magnitude();
            let cut = otsu_threshold_values(&magnitude, cfg.transform.histogram_bins)?;
            let support: Vec<bool> = magnitude.iter().map(|&v| v > cut).collect();
            let stats = region_ssim(&recon, &truth, &mask, Some(&support), &cfg.ssim)?;
            let binary: Vec<bool> = mask.data().iter().map(|z| z.norm() != 0.0).collect();
            let comps = connected_components(&binary, mask.height(), mask.width(), cfg.transform.connectivity);
            let rows: Vec<CentroidRow> = comps
                .iter()
                .enumerate()
                .map(|(k, c)| CentroidRow {
                    image_id: id.to_owned(),
                    component_id: k,
                    centroid_row: c.centroid_row,
                    centroid_col: c.centroid_col,
                    area: c.area(),
                })
                .collect();
            Ok((stats, rows))
        };
        run().map_err(|e| e.to_string())
    })?;

    let table: Vec<SsimRow> = images
        .iter()
        .zip(&results)
        .map(|((id, _), (s, _))| SsimRow {
            image_id: id.clone(),
            method: method.to_owned(),
            region_mean: s.region_mean,
            background_mean: s.background_mean,
            global: s.global,
        })
        .collect();
    let centroids: Vec<CentroidRow> = results.iter().flat_map(|(_, rows)| rows.iter().cloned()).collect();
    let values: Vec<f64> = if halmap_dir.is_some() {
        table.iter().filter_map(|r| r.region_mean).collect()
    } else {
        table.iter().map(|r| r.global).collect()
    };

    write_with(&output.join("ssim_table.csv"), |b| write_ssim_csv(b, &table))?;
    write_with(&output.join("centroids.csv"), |b| write_centroids_csv(b, &centroids))?;
    let bins = if values.is_empty() {
        Vec::new()
    } else {
        empirical_pdf(&values, cfg.pdf_bins)?
    };
    write_with(&output.join("pdf.csv"), |b| write_pdf_csv(b, &bins))?;
    let manifest = json!({
        "stage": "analyze",
        "method": method,
        "ssim": cfg.ssim,
        "regions": halmap_dir.map(|_| suffix),
        "pdf_of": if halmap_dir.is_some() { "region_mean" } else { "global" },
        "pdf_bins": cfg.pdf_bins,
        "images": images.len(),
    });
    write_json(&output.join("manifest.json"), &manifest)
}

pub(super) fn sweep(
    cfg: &PipelineConfig,
    meas_dir: &Path,
    truth_dir: &Path,
    lambdas: Option<&[f64]>,
    output: &Path,
) -> Result<(), CliError> {
    let candidates = lambdas.unwrap_or(&cfg.sweep.candidates).to_vec();
    if candidates.is_empty() {
        return Err(CliError::Config(
            "sweep.candidates: at least one lambda is required (or pass --lambdas)".into(),
        ));
    }
    if let Some(bad) = candidates.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(CliError::Config(format!("--lambdas: invalid lambda {bad}")));
    }
    let images = list_images(meas_dir)?;
    if images.is_empty() {
        return Err(CliError::data(format!(
            "{}: no measurements to sweep over",
            meas_dir.display()
        )));
    }
    let op = Operator::fft_mask(load_sampling(meas_dir)?);
    let dataset = per_image(&images, |id, path| {
        let truth_path = counterpart(truth_dir, id, "truth")?;
        let run = || -> crate::Result<_> {
            let g = load_measurement(path, &op)?;
            let theta = load_image(&truth_path)?;
            op.check_image(&theta, "truth image")?;
            Ok((g, theta))
        };
        run().map_err(|e| e.to_string())
    })?;
    prepare_output(output)?;
    let result = sweep_lambda(&dataset, &op, &candidates, &cfg.plstv)?;
    write_json(&output.join("sweep.json"), &result)?;
    write_with(&output.join("sweep.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["lambda", "image_id", "rmse", "tv", "iterations"])?;
        for c in &result.cells {
            w.write_record([
                c.lambda.to_string(),
                images[c.image_index].0.clone(),
                c.rmse.to_string(),
                c.tv.to_string(),
                c.iterations.to_string(),
            ])?;
        }
        w.flush().map_err(|e| crate::Error::io("sweep.csv", e))?;
        Ok(())
    })?;
    let manifest = json!({
        "stage": "sweep-lambda",
        "candidates": candidates,
        "plstv": cfg.plstv,
        "images": images.iter().map(|(id, _)| id).collect::<Vec<_>>(),
        "chosen_lambda": result.chosen_lambda,
    });
    write_json(&output.join("manifest.json"), &manifest)
}
