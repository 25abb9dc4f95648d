mod common;

use common::*;
use nullmap::analysis::{
    centroid_variance, empirical_pdf, export_centroid_scatter, region_ssim, rmse, ssim, write_centroids_csv,
    ScatterSource, SsimConfig,
};
use nullmap::halmap::{hallucination_report, TransformConfig};
use nullmap::linop::{compute_svd, ImageGrid, MaskSpec, Operator, DEFAULT_EPSILON};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn rmse_matches_direct_formula() {
    let mut r = rng(41);
    let a = random_image(9, 13, &mut r);
    let b = random_image(9, 13, &mut r);
    let mut total = 0.0;
    for i in 0..a.len() {
        let d = a.data()[i] - b.data()[i];
        total += d.re * d.re + d.im * d.im;
    }
    assert!((rmse(&a, &b).unwrap() - (total / a.len() as f64).sqrt()).abs() < 1e-14);
    let shifted = a.map(|z| z + C64::new(3.0, -4.0));
    assert!((rmse(&a, &shifted).unwrap() - 5.0).abs() < 1e-12);
}

/// Wang et al. SSIM with a truncated, renormalized Gaussian window, using
/// the raw-moment form of the local statistics.
fn ssim_oracle(a: &[f64], b: &[f64], h: usize, w: usize, win: usize, sigma: f64, range: f64) -> Vec<f64> {
    let c1 = (0.01 * range).powi(2);
    let c2 = (0.03 * range).powi(2);
    let rad = (win / 2) as i64;
    let mut out = Vec::new();
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let (mut sw, mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for dr in -rad..=rad {
                for dc in -rad..=rad {
                    let (y, x) = (r + dr, c + dc);
                    if y < 0 || x < 0 || y >= h as i64 || x >= w as i64 {
                        continue;
                    }
                    let k = (-((dr * dr + dc * dc) as f64) / (2.0 * sigma * sigma)).exp();
                    let i = y as usize * w + x as usize;
                    sw += k;
                    sa += k * a[i];
                    sb += k * b[i];
                    saa += k * a[i] * a[i];
                    sbb += k * b[i] * b[i];
                    sab += k * a[i] * b[i];
                }
            }
            let (ma, mb) = (sa / sw, sb / sw);
            let va = saa / sw - ma * ma;
            let vb = sbb / sw - mb * mb;
            let cov = sab / sw - ma * mb;
            out.push(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
    }
    out
}

#[test]
fn ssim_matches_wang_formula_on_8x8_pair() {
    let mut r = rng(42);
    let a = random_real_image(8, 8, &mut r);
    let b = a.map(|z| z * 0.8 + C64::new(0.1, 0.0));
    let b = ImageGrid::from_fn(8, 8, |i, j| b.get(i, j) + C64::new(r.random_range(-0.1..0.1), 0.0));
    let cfg = SsimConfig {
        window: 7,
        ..Default::default()
    };
    let ours = ssim(&a, &b, &cfg).unwrap();
    let range = a.magnitude().iter().chain(&b.magnitude()).copied().fold(0.0, f64::max);
    let oracle = ssim_oracle(&a.magnitude(), &b.magnitude(), 8, 8, 7, 1.5, range);
    for (x, y) in ours.map.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-10);
    }
    let mean = oracle.iter().sum::<f64>() / 64.0;
    assert!((ours.mean - mean).abs() < 1e-10);
}

#[test]
fn degraded_block_lowers_region_ssim() {
    let truth = disc_phantom(32, 32);
    let mut r = rng(43);
    let recon = ImageGrid::from_fn(32, 32, |i, j| {
        let mut v = truth.get(i, j);
        if (12..20).contains(&i) && (12..20).contains(&j) {
            v += C64::new(r.random_range(-0.5..0.5), 0.0);
        }
        v
    });
    let region = ImageGrid::from_fn(32, 32, |i, j| {
        C64::new(
            if (12..20).contains(&i) && (12..20).contains(&j) {
                1.0
            } else {
                0.0
            },
            0.0,
        )
    });
    let support: Vec<bool> = truth.magnitude().iter().map(|&v| v > 0.0).collect();
    let out = region_ssim(&recon, &truth, &region, Some(&support), &SsimConfig::default()).unwrap();
    assert!(out.region_mean.unwrap() < out.background_mean.unwrap());
}

#[test]
fn centroid_rows_recount_components() {
    let dec = compute_svd(
        &Operator::fft_mask(MaskSpec::uniform(48, 48, 3, 0).unwrap()),
        DEFAULT_EPSILON,
    )
    .unwrap();
    let mut r = rng(44);
    let reports: Vec<_> = (0..10)
        .map(|i| {
            let theta = nullmap::simulate::random_phantom(48, 48, 1, &format!("f{i}"));
            let hat = theta.add(&random_image(48, 48, &mut r).scale(0.2)).unwrap();
            let g = dec.operator().apply(&theta).unwrap();
            hallucination_report(&format!("f{i}"), &g, &dec, &theta, &hat, &TransformConfig::default()).unwrap()
        })
        .collect();
    for which in [ScatterSource::SpecificHm, ScatterSource::SpecificError] {
        let rows = export_centroid_scatter(&reports, which);
        let expected: usize = reports
            .iter()
            .map(|rep| match which {
                ScatterSource::SpecificHm => rep.shm_regions.len(),
                ScatterSource::SpecificError => rep.specific_error_regions.len(),
            })
            .sum();
        assert_eq!(rows.len(), expected);
        let mut buf = Vec::new();
        write_centroids_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), expected + 1);
        if rows.len() >= 2 {
            assert!(centroid_variance(&rows).unwrap() >= 0.0);
        }
    }
}

#[test]
fn pdf_matches_direct_binning() {
    let mut r = rng(45);
    let values: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
    let bins = 40;
    let pdf = empirical_pdf(&values, bins).unwrap();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in &values {
        let mut k = ((v - lo) / width).floor() as usize;
        if k >= bins {
            k = bins - 1;
        }
        counts[k] += 1;
    }
    for (b, &c) in pdf.iter().zip(&counts) {
        assert_eq!(b.density, c as f64 / (values.len() as f64 * width));
    }
    let mass: f64 = pdf.iter().map(|b| b.density * (b.bin_right - b.bin_left)).sum();
    assert!((mass - 1.0).abs() <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ssim_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_image(12, 12, &mut r);
        let b = random_image(12, 12, &mut r);
        let cfg = SsimConfig::default();
        let ab = ssim(&a, &b, &cfg).unwrap();
        let ba = ssim(&b, &a, &cfg).unwrap();
        prop_assert!((ab.mean - ba.mean).abs() <= 1e-12);
        prop_assert!(ab.map.iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert!(ab.map.iter().any(|v| (v - 1.0).abs() > 1e-12));
    }
}
