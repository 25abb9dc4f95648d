//! Stylized single-coil MR acquisition: unitary k-space, uniform phase
//! noise applied before masking, and additive complex Gaussian noise on the
//! sampled entries.
//!
//! Randomness comes from ChaCha20 substreams keyed by `(seed, image_id,
//! purpose)`; see [`substream`]. Phase and Gaussian noise use separate
//! purposes, so either can be held fixed while the other is redrawn.

mod phantom;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use phantom::{random_body_phantom, random_phantom, render_ellipses, shepp_logan, Ellipse, SHEPP_LOGAN};

use crate::error::{Error, Result};
use crate::linop::{FftMaskOperator, ImageGrid, MaskSpec};

pub const PHASE_STREAM: &str = "phase";
pub const GAUSSIAN_STREAM: &str = "gaussian";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of the iid Gaussian added to each of the real and
    /// imaginary channels of every sampled k-space entry.
    pub gaussian_sigma: f64,
    /// Phase noise is uniform on `[-a, a]` radians.
    pub phase_noise_amplitude: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            gaussian_sigma: 0.0,
            phase_noise_amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::param("gaussian_sigma must be a nonnegative number"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phase_noise_amplitude) {
            return Err(Error::param("phase_noise_amplitude must lie in [0, pi]"));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic generator for one `(seed, image_id, purpose)` triple.
///
/// `ChaCha20Rng::seed_from_u64(seed)` with its stream id set to
/// `fnv1a64(image_id || 0xff || purpose)`.
pub fn substream(seed: u64, image_id: &str, purpose: &str) -> ChaCha20Rng {
    let mut key = Vec::with_capacity(image_id.len() + purpose.len() + 1);
    key.extend_from_slice(image_id.as_bytes());
    key.push(0xff);
    key.extend_from_slice(purpose.as_bytes());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a64(&key));
    rng
}

/// Uniform phases on `[-amplitude, amplitude]`, one per k-space sample.
pub fn phase_screen<R: Rng>(len: usize, amplitude: f64, rng: &mut R) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![0.0; len];
    }
    (0..len).map(|_| rng.random_range(-amplitude..=amplitude)).collect()
}

/// `Mask(exp(i phi) * FFT(theta))`, the perturbed operator applied to `theta`.
pub fn perturbed_forward(theta: &ImageGrid, op: &FftMaskOperator, phase: &[f64]) -> Result<Vec<Complex64>> {
    let mask = op.mask();
    if theta.shape() != (mask.height(), mask.width()) {
        return Err(Error::dims(
            "perturbed_forward",
            format!("{}x{}", mask.height(), mask.width()),
            format!("{}x{}", theta.height(), theta.width()),
        ));
    }
    if phase.len() != theta.len() {
        return Err(Error::dims("perturbed_forward", theta.len(), phase.len()));
    }
    let mut k = op.kspace(theta.data());
    for (z, &p) in k.iter_mut().zip(phase) {
        if p != 0.0 {
            *z *= Complex64::from_polar(1.0, p);
        }
    }
    Ok(op.select(&k))
}

/// Adds `N(0, sigma^2)` to both channels of each entry, real then imaginary.
pub fn add_gaussian_noise<R: Rng>(meas: &mut [Complex64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    for z in meas.iter_mut() {
        let re = normal.sample(rng);
        let im = normal.sample(rng);
        *z += Complex64::new(re, im);
    }
}

pub fn make_uniform_mask(height: usize, width: usize, factor: usize, offset: usize) -> Result<MaskSpec> {
    MaskSpec::uniform(height, width, factor, offset)
}

/// Simulates with the anonymous image id `""`.
pub fn simulate_measurement(theta: &ImageGrid, mask: &MaskSpec, noise: &NoiseConfig) -> Result<Vec<Complex64>> {
    simulate_measurement_for(theta, mask, noise, "")
}

/// `g = Mask(exp(i phi) * FFT(theta)) + n` with noise drawn from the
/// substreams of `image_id`.
pub fn simulate_measurement_for(
    theta: &ImageGrid,
    mask: &MaskSpec,
    noise: &NoiseConfig,
    image_id: &str,
) -> Result<Vec<Complex64>> {
    noise.validate()?;
    let op = FftMaskOperator::new(mask.clone());
    let phase = phase_screen(
        theta.len(),
        noise.phase_noise_amplitude,
        &mut substream(noise.seed, image_id, PHASE_STREAM),
    );
    let mut g = perturbed_forward(theta, &op, &phase)?;
    add_gaussian_noise(
        &mut g,
        noise.gaussian_sigma,
        &mut substream(noise.seed, image_id, GAUSSIAN_STREAM),
    );
    Ok(g)
}
