mod common;

use common::*;
use nullmap::linop::{compute_svd, ImageGrid, MaskSpec, Operator, DEFAULT_EPSILON};
use nullmap::recon::tv::{tv_prox, DualField, ProxOptions};
use nullmap::recon::{
    complex_tv, ingest_external, recon_plstv, recon_tp, sweep_lambda, PlsTvConfig, StepSize, TvFlavor,
};
use nullmap::simulate::{simulate_measurement_for, NoiseConfig};
use nullmap::subspace::truncated_pinv;
use proptest::prelude::*;
use rand::Rng;

fn tight_prox() -> ProxOptions {
    ProxOptions {
        max_iters: 20_000,
        tolerance: 1e-9,
    }
}

#[test]
fn tv_prox_matches_exhaustive_1d_oracle() {
    let mut r = rng(21);
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for _ in 0..25 {
            let z: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
            let w = r.random_range(0.05..1.5);
            let oracle = prox_oracle(&z, w);
            for flavor in [TvFlavor::Isotropic, TvFlavor::Anisotropic] {
                let mut dual = DualField::zeros(n);
                let ours = tv_prox(&z, 1, n, w, flavor, tight_prox(), &mut dual);
                let err = ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(err);
            }
        }
    }
    assert!(worst <= 1e-6, "worst deviation {worst}");
}

#[test]
fn tv_prox_along_columns_matches_oracle() {
    let z = [0.3, 1.9, 2.0, -0.4, -0.5, 0.1];
    let oracle = prox_oracle(&z, 0.4);
    let mut dual = DualField::zeros(6);
    let ours = tv_prox(&z, 6, 1, 0.4, TvFlavor::Isotropic, tight_prox(), &mut dual);
    assert!(ours.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn least_squares_recovery_with_full_mask() {
    let op = Operator::fft_mask(MaskSpec::full(16, 16).unwrap());
    let mut r = rng(22);
    let theta = random_image(16, 16, &mut r);
    let g = op.apply(&theta).unwrap();
    let out = recon_plstv(&g, &op, &PlsTvConfig::default()).unwrap();
    assert!(out.image.sub(&theta).unwrap().norm() <= 1e-6 * theta.norm());
}

#[test]
fn constant_object_is_a_fixed_point() {
    let op = Operator::fft_mask(MaskSpec::full(12, 12).unwrap());
    let theta = ImageGrid::from_real(12, 12, &[0.7; 144]).unwrap();
    let g = op.apply(&theta).unwrap();
    let cfg = PlsTvConfig {
        lambda: 0.5,
        ..Default::default()
    };
    let out = recon_plstv(&g, &op, &cfg).unwrap();
    assert!(out.image.sub(&theta).unwrap().max_abs() <= 1e-6);
}

fn assert_monotone(obj: &[f64]) {
    for p in obj.windows(2) {
        assert!(p[1] <= p[0] + 1e-9 * p[0].abs().max(1.0), "{} -> {}", p[0], p[1]);
    }
}

#[test]
fn plstv_solution_satisfies_first_order_optimality() {
    let (h, w) = (16, 16);
    let mask = MaskSpec::uniform(h, w, 2, 0).unwrap();
    let a = dft_selection_matrix(&mask);
    let op = Operator::fft_mask(mask);
    let theta = disc_phantom(h, w);
    let g = op.apply(&theta).unwrap();
    let lambda = 0.02;
    let cfg = PlsTvConfig {
        lambda,
        max_iters: 20_000,
        tolerance: 0.0,
        inner_iters: 200,
        ..Default::default()
    };
    let out = recon_plstv(&g, &op, &cfg).unwrap();
    assert_monotone(&out.objective);
    let x = out.image.data();
    let hx = mat_vec(&a, x);
    let r: Vec<C64> = hx.iter().zip(&g).map(|(p, q)| p - q).collect();
    let data_grad: Vec<C64> = mat_adj_vec(&a, &r).iter().map(|z| z * 2.0).collect();
    assert!(data_grad.iter().all(|z| z.im.abs() < 1e-9));
    let q: Vec<f64> = data_grad.iter().map(|z| z.re).collect();
    let xr: Vec<f64> = x.iter().map(|z| z.re).collect();
    let res = subgradient_residual(&q, &xr, h, w, lambda, 1e-6);
    assert!(res <= 1e-4, "optimality residual {res}");
}

#[test]
fn objective_is_monotone_on_noisy_problems() {
    let mask = MaskSpec::uniform(24, 24, 3, 1).unwrap();
    let op = Operator::fft_mask(mask.clone());
    let theta = disc_phantom(24, 24);
    let noise = NoiseConfig {
        gaussian_sigma: 0.05,
        phase_noise_amplitude: 0.2,
        seed: 5,
    };
    let g = simulate_measurement_for(&theta, &mask, &noise, "mono").unwrap();
    for (lambda, flavor) in [
        (0.0, TvFlavor::Isotropic),
        (0.01, TvFlavor::Isotropic),
        (0.1, TvFlavor::Anisotropic),
    ] {
        let cfg = PlsTvConfig {
            lambda,
            tv_flavor: flavor,
            ..Default::default()
        };
        let out = recon_plstv(&g, &op, &cfg).unwrap();
        assert_monotone(&out.objective);
        assert!(out.iterations > 0);
    }
}

#[test]
fn fixed_step_is_used_verbatim() {
    let op = Operator::fft_mask(MaskSpec::uniform(8, 8, 2, 0).unwrap());
    let g = op.apply(&disc_phantom(8, 8)).unwrap();
    let cfg = PlsTvConfig {
        lambda: 0.01,
        step_size: StepSize::Fixed(0.25),
        ..Default::default()
    };
    assert_eq!(recon_plstv(&g, &op, &cfg).unwrap().step_size, 0.25);
    let auto = recon_plstv(
        &g,
        &op,
        &PlsTvConfig {
            lambda: 0.01,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((auto.step_size - 0.5).abs() < 1e-8);
}

fn sweep_dataset() -> (Operator, Vec<(Vec<C64>, ImageGrid)>) {
    let mask = MaskSpec::uniform(16, 16, 2, 0).unwrap();
    let noise = NoiseConfig {
        gaussian_sigma: 0.05,
        phase_noise_amplitude: 0.0,
        seed: 8,
    };
    let data = (0..3)
        .map(|i| {
            let theta = nullmap::simulate::random_phantom(16, 16, 3, &format!("p{i}"));
            let g = simulate_measurement_for(&theta, &mask, &noise, &format!("p{i}")).unwrap();
            (g, theta)
        })
        .collect();
    (Operator::fft_mask(mask), data)
}

#[test]
fn sweep_matches_exhaustive_recomputation() {
    let (op, data) = sweep_dataset();
    let candidates = [0.0, 0.01, 0.05];
    let base = PlsTvConfig {
        max_iters: 100,
        ..Default::default()
    };
    let res = sweep_lambda(&data, &op, &candidates, &base).unwrap();
    let mut means = Vec::new();
    for &lambda in &candidates {
        let cfg = PlsTvConfig { lambda, ..base.clone() };
        let mut total = 0.0;
        for (g, theta) in &data {
            let x = recon_plstv(g, &op, &cfg).unwrap().image;
            let d: Vec<C64> = x.data().iter().zip(theta.data()).map(|(a, b)| a - b).collect();
            total += (d.iter().map(|z| z.norm_sqr()).sum::<f64>() / d.len() as f64).sqrt();
        }
        means.push(total / data.len() as f64);
    }
    for ((lam, m), (want_lam, want)) in res.mean_rmse.iter().zip(candidates.iter().zip(&means)) {
        assert_eq!(lam, want_lam);
        assert!((m - want).abs() < 1e-12);
    }
    let best = candidates[means
        .iter()
        .enumerate()
        .fold(0, |b, (i, &m)| if m < means[b] { i } else { b })];
    assert_eq!(res.chosen_lambda, best);
    assert_eq!(res.cells.len(), 9);
}

#[test]
fn sweep_prefers_zero_on_noiseless_full_data() {
    let op = Operator::fft_mask(MaskSpec::full(12, 12).unwrap());
    let theta = disc_phantom(12, 12);
    let data = vec![(op.apply(&theta).unwrap(), theta)];
    let res = sweep_lambda(&data, &op, &[5.0, 0.0], &PlsTvConfig::default()).unwrap();
    assert_eq!(res.chosen_lambda, 0.0);
}

#[test]
fn tv_shrinks_as_lambda_grows() {
    let (op, data) = sweep_dataset();
    let candidates = [0.0, 0.01, 0.05, 0.2, 1.0];
    let base = PlsTvConfig {
        max_iters: 300,
        ..Default::default()
    };
    let res = sweep_lambda(&data[..1], &op, &candidates, &base).unwrap();
    let tvs: Vec<f64> = res.cells.iter().map(|c| c.tv).collect();
    for p in tvs.windows(2) {
        assert!(p[1] <= p[0] * (1.0 + 1e-6), "{tvs:?}");
    }
}

#[test]
fn tp_is_zero_filled_inverse() {
    let mask = MaskSpec::uniform(8, 8, 3, 0).unwrap();
    let op = Operator::fft_mask(mask);
    let dec = compute_svd(&op, DEFAULT_EPSILON).unwrap();
    let mut r = rng(23);
    let g = random_vec(op.range_len(), &mut r);
    assert_eq!(
        recon_tp(&g, &dec).unwrap().data(),
        truncated_pinv(&dec, &g).unwrap().data()
    );
    assert!(max_diff(recon_tp(&g, &dec).unwrap().data(), op.adjoint(&g).unwrap().data()) < 1e-15);
}

#[test]
fn ingest_round_trip_and_pgm_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(24);
    let img = random_image(5, 7, &mut r);
    let p = dir.path().join("a.cgrid");
    nullmap::formats::save_cgrid(&p, &img).unwrap();
    assert_eq!(ingest_external(&p).unwrap().data(), img.data());

    let pgm = dir.path().join("b.pgm");
    std::fs::write(&pgm, nullmap::formats::encode_pgm16(&[0.0, 1.0, 1.0, 0.0], 2, 2)).unwrap();
    let v = ingest_external(&pgm).unwrap().real_part();
    assert_eq!(v, vec![0.0, 1.0, 1.0, 0.0]);

    let bytes = std::fs::read(&p).unwrap();
    let cut = dir.path().join("c.cgrid");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    match ingest_external(&cut) {
        Err(nullmap::Error::Format { offset, .. }) => assert_eq!(offset, bytes.len() - 5),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prox_never_increases_tv(z in prop::collection::vec(-3.0f64..3.0, 16), w in 0.01f64..2.0) {
        let mut dual = DualField::zeros(16);
        let x = tv_prox(&z, 4, 4, w, TvFlavor::Isotropic, ProxOptions::default(), &mut dual);
        let tv = |v: &[f64]| nullmap::recon::tv::tv_value(v, 4, 4, TvFlavor::Isotropic);
        prop_assert!(tv(&x) <= tv(&z) + 1e-9);
        let img = ImageGrid::from_real(4, 4, &x).unwrap();
        prop_assert!((complex_tv(&img, TvFlavor::Isotropic) - tv(&x)).abs() < 1e-12);
    }
}
