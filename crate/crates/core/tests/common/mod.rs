//! Test-side oracles, written independently of the library internals.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use nullmap::linop::{ImageGrid, MaskSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type C64 = Complex64;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_vec(len: usize, rng: &mut impl Rng) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn random_image(h: usize, w: usize, rng: &mut impl Rng) -> ImageGrid {
    ImageGrid::new(h, w, random_vec(h * w, rng)).unwrap()
}

pub fn random_real_image(h: usize, w: usize, rng: &mut impl Rng) -> ImageGrid {
    let v: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect();
    ImageGrid::from_real(h, w, &v).unwrap()
}

/// Explicit unitary DFT restricted to the sampled rows, one matrix row per
/// measurement entry (sampled rows ascending, columns ascending).
pub fn dft_selection_matrix(mask: &MaskSpec) -> DMatrix<C64> {
    let (h, w) = (mask.height(), mask.width());
    let rows = mask.sampled_rows();
    let scale = 1.0 / ((h * w) as f64).sqrt();
    DMatrix::from_fn(rows.len() * w, h * w, |m, n| {
        let (kr, kc) = (rows[m / w], m % w);
        let (r, c) = (n / w, n % w);
        let phase = -2.0 * PI * ((kr * r) as f64 / h as f64 + (kc * c) as f64 / w as f64);
        C64::from_polar(scale, phase)
    })
}

pub fn mat_vec(a: &DMatrix<C64>, x: &[C64]) -> Vec<C64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

pub fn mat_adj_vec(a: &DMatrix<C64>, y: &[C64]) -> Vec<C64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * y[i]).sum())
        .collect()
}

/// `<a, b>` conjugate-linear in `a`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn basis_image(h: usize, w: usize, k: usize) -> ImageGrid {
    let mut g = ImageGrid::zeros(h, w);
    g.data_mut()[k] = C64::new(1.0, 0.0);
    g
}

/// Piecewise-constant test object: a disc with an off-centre square inset.
pub fn disc_phantom(h: usize, w: usize) -> ImageGrid {
    ImageGrid::from_fn(h, w, |r, c| {
        let y = (r as f64 + 0.5) / h as f64 - 0.5;
        let x = (c as f64 + 0.5) / w as f64 - 0.5;
        let mut v = if x * x + y * y < 0.16 { 1.0 } else { 0.0 };
        if (0.05..0.2).contains(&x) && (-0.15..0.0).contains(&y) {
            v = 0.5;
        }
        C64::new(v, 0.0)
    })
}

pub fn prox_objective(x: &[f64], z: &[f64], w: f64) -> f64 {
    let fit: f64 = x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
    let tv: f64 = x.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
    0.5 * fit + w * tv
}

/// Exact 1D TV prox by enumeration. For a fixed partition into constant
/// runs and fixed jump signs the optimality condition gives each run value
/// in closed form; the minimizer is the best of these candidates.
pub fn prox_oracle(z: &[f64], w: f64) -> Vec<f64> {
    let n = z.len();
    let mut best = (f64::INFINITY, z.to_vec());
    for cuts in 0u32..(1 << (n - 1)) {
        let mut runs = vec![(0usize, 0usize)];
        for i in 0..n - 1 {
            if cuts & (1 << i) != 0 {
                runs.last_mut().unwrap().1 = i + 1;
                runs.push((i + 1, 0));
            }
        }
        runs.last_mut().unwrap().1 = n;
        let k = runs.len();
        for signs in 0u32..(1 << (k - 1)) {
            let s = |j: usize| -> f64 {
                if j == 0 || j == k {
                    0.0
                } else if signs & (1 << (j - 1)) != 0 {
                    1.0
                } else {
                    -1.0
                }
            };
            let mut x = vec![0.0; n];
            for (j, &(a, b)) in runs.iter().enumerate() {
                let len = (b - a) as f64;
                let mean = z[a..b].iter().sum::<f64>() / len;
                let v = mean + w * (s(j + 1) - s(j)) / len;
                x[a..b].iter_mut().for_each(|e| *e = v);
            }
            let f = prox_objective(&x, z, w);
            if f < best.0 {
                best = (f, x);
            }
        }
    }
    best.1
}

/// Forward differences with a zero at the last row and column.
fn grad(x: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; h * w];
    let mut dy = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                dx[i] = x[i + 1] - x[i];
            }
            if r + 1 < h {
                dy[i] = x[i + w] - x[i];
            }
        }
    }
    (dx, dy)
}

fn grad_t(px: &[f64], py: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w {
                out[i] -= px[i];
                out[i + 1] += px[i];
            }
            if r + 1 < h {
                out[i] -= py[i];
                out[i + w] += py[i];
            }
        }
    }
    out
}

/// `min_p ||q + lambda D^T p||` over subgradients `p` of isotropic TV at `x`:
/// unit vectors along the gradient where it is nonzero, the unit ball
/// elsewhere. Solved by accelerated projected gradient.
pub fn subgradient_residual(q: &[f64], x: &[f64], h: usize, w: usize, lambda: f64, zero_tol: f64) -> f64 {
    let (gx, gy) = grad(x, h, w);
    let n = h * w;
    let fixed: Vec<Option<(f64, f64)>> = (0..n)
        .map(|i| {
            let m = gx[i].hypot(gy[i]);
            (m > zero_tol).then(|| (gx[i] / m, gy[i] / m))
        })
        .collect();
    let project = |px: &mut [f64], py: &mut [f64]| {
        for i in 0..n {
            if let Some((a, b)) = fixed[i] {
                px[i] = a;
                py[i] = b;
            } else {
                let m = px[i].hypot(py[i]);
                if m > 1.0 {
                    px[i] /= m;
                    py[i] /= m;
                }
            }
            if i % w == w - 1 {
                px[i] = 0.0;
            }
            if i / w == h - 1 {
                py[i] = 0.0;
            }
        }
    };
    let resid = |px: &[f64], py: &[f64]| -> Vec<f64> {
        grad_t(px, py, h, w)
            .iter()
            .zip(q)
            .map(|(d, q)| q + lambda * d)
            .collect()
    };
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    project(&mut px, &mut py);
    let (mut yx, mut yy) = (px.clone(), py.clone());
    let step = 1.0 / (8.0 * lambda * lambda);
    let mut t: f64 = 1.0;
    for _ in 0..10_000 {
        let r = resid(&yx, &yy);
        let (rx, ry) = grad(&r, h, w);
        let mut nx: Vec<f64> = yx.iter().zip(&rx).map(|(p, g)| p - step * lambda * g).collect();
        let mut ny: Vec<f64> = yy.iter().zip(&ry).map(|(p, g)| p - step * lambda * g).collect();
        project(&mut nx, &mut ny);
        let t1 = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t1;
        yx = nx.iter().zip(&px).map(|(a, b)| a + beta * (a - b)).collect();
        yy = ny.iter().zip(&py).map(|(a, b)| a + beta * (a - b)).collect();
        px = nx;
        py = ny;
        t = t1;
    }
    resid(&px, &py).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// 64x64 fixture: support is a 56x56 square; a 12x12 block sits at the
/// centre and a 5x5 block touches the top edge of the support.
pub fn block_fixture(big: bool, small: bool) -> (ImageGrid, ImageGrid) {
    let reference = ImageGrid::from_fn(64, 64, |r, c| {
        let inside = (4..60).contains(&r) && (4..60).contains(&c);
        C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
    });
    let map = ImageGrid::from_fn(64, 64, |r, c| {
        let in_big = big && (26..38).contains(&r) && (26..38).contains(&c);
        let in_small = small && (4..9).contains(&r) && (48..53).contains(&c);
        C64::new(if in_big || in_small { 5.0 } else { 0.0 }, 0.0)
    });
    (map, reference)
}
