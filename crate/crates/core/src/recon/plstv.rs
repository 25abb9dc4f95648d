use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::tv::{tv_prox, tv_value, DualField, ProxOptions, TvFlavor};
use crate::error::{Error, Result};
use crate::linop::{vec_norm, ImageGrid, Operator};
use crate::simulate::substream;

/// Gradient step of the proximal iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1/L` with `L = 2 ||H||^2`, the Lipschitz constant of the data-term gradient.
    Auto,
    Fixed(f64),
}

impl Serialize for StepSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StepSize::Auto => s.serialize_str("auto"),
            StepSize::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for StepSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v > 0.0 && v.is_finite() => Ok(StepSize::Fixed(v)),
            Repr::Num(v) => Err(serde::de::Error::custom(format!("step_size must be positive, got {v}"))),
            Repr::Str(s) if s == "auto" => Ok(StepSize::Auto),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "step_size must be a positive number or \"auto\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlsTvConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub step_size: StepSize,
    pub tv_flavor: TvFlavor,
    /// Relative objective change below which an accepted step stops the run.
    pub tolerance: f64,
    /// Dual iterations per TV prox evaluation (warm-started).
    pub inner_iters: usize,
}

impl Default for PlsTvConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iters: 500,
            step_size: StepSize::Auto,
            tv_flavor: TvFlavor::Isotropic,
            tolerance: 1e-6,
            inner_iters: 50,
        }
    }
}

impl PlsTvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda must be a nonnegative number"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be positive"));
        }
        if let StepSize::Fixed(s) = self.step_size {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::param("step_size must be positive"));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::param("tolerance must be nonnegative"));
        }
        if self.inner_iters == 0 {
            return Err(Error::param("inner_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlsTvResult {
    pub image: ImageGrid,
    /// Objective of the accepted iterate after each outer iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub step_size: f64,
}

impl PlsTvResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("at least one iteration")
    }
}

/// Power iterations for `||H||^2`, the largest eigenvalue of `H^dagger H`.
pub fn squared_operator_norm(op: &Operator, iters: usize, rel_tol: f64) -> f64 {
    use rand::Rng;
    let mut rng = substream(0, "", "power-iteration");
    let mut x: Vec<Complex64> = (0..op.domain_len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut estimate = 0.0;
    for _ in 0..iters {
        let n = vec_norm(&x);
        if n == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|z| *z /= n);
        let y = op.adjoint_raw(&op.forward_raw(&x));
        let next = vec_norm(&y);
        let done = (next - estimate).abs() <= rel_tol * next;
        estimate = next;
        x = y;
        if done {
            break;
        }
    }
    estimate
}

/// Real+imaginary TV of a complex image.
pub fn complex_tv(image: &ImageGrid, flavor: TvFlavor) -> f64 {
    let (h, w) = image.shape();
    tv_value(&image.real_part(), h, w, flavor) + tv_value(&image.imag_part(), h, w, flavor)
}

/// `||g - H x||^2 + lambda TV(x)`.
pub fn plstv_objective(op: &Operator, meas: &[Complex64], x: &ImageGrid, lambda: f64, flavor: TvFlavor) -> f64 {
    let r: f64 = op
        .forward_raw(x.data())
        .iter()
        .zip(meas)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if lambda == 0.0 {
        r
    } else {
        r + lambda * complex_tv(x, flavor)
    }
}

const DIVERGENCE_WINDOW: usize = 10;
const DIVERGENCE_RATIO: f64 = 1e-6;
const NOISE_FLOOR: f64 = 1e-14;

/// Penalized least squares with a TV penalty, solved by monotone FISTA.
///
/// Each candidate `z = prox(y - t grad f(y))` is accepted only if it does
/// not raise the objective; otherwise the iterate is kept and momentum is
/// reset. Ten consecutive candidates worse by more than `1e-6` relative are
/// reported as divergence.
pub fn recon_plstv(meas: &[Complex64], op: &Operator, cfg: &PlsTvConfig) -> Result<PlsTvResult> {
    cfg.validate()?;
    op.check_measurement(meas, "recon_plstv")?;
    let (h, w) = op.domain_shape();
    let n = h * w;

    let step = match cfg.step_size {
        StepSize::Fixed(s) => s,
        StepSize::Auto => {
            let l = 2.0 * squared_operator_norm(op, 50, 1e-8);
            if l == 0.0 {
                return Err(Error::Solver("operator norm is zero".into()));
            }
            1.0 / l
        }
    };
    let objective = |x: &ImageGrid| plstv_objective(op, meas, x, cfg.lambda, cfg.tv_flavor);
    let prox_opts = ProxOptions {
        max_iters: cfg.inner_iters,
        tolerance: 1e-12,
    };
    let mut dual_re = DualField::zeros(n);
    let mut dual_im = DualField::zeros(n);
    let weight = step * cfg.lambda;
    let mut prox = |v: Vec<Complex64>| -> ImageGrid {
        if weight == 0.0 {
            return ImageGrid::from_raw(h, w, v);
        }
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        let im: Vec<f64> = v.iter().map(|z| z.im).collect();
        let re = tv_prox(&re, h, w, weight, cfg.tv_flavor, prox_opts, &mut dual_re);
        let im = tv_prox(&im, h, w, weight, cfg.tv_flavor, prox_opts, &mut dual_im);
        ImageGrid::from_raw(
            h,
            w,
            re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect(),
        )
    };

    let mut x = ImageGrid::from_raw(h, w, op.adjoint_raw(meas));
    let mut fx = objective(&x);
    // Changes below this are rounding noise, e.g. when the data are fit exactly.
    let floor = NOISE_FLOOR * vec_norm(meas).powi(2).max(fx);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut history = Vec::with_capacity(cfg.max_iters);
    let mut worse_streak = 0;
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        let residual: Vec<Complex64> = op.forward_raw(y.data()).iter().zip(meas).map(|(a, b)| a - b).collect();
        let grad = op.adjoint_raw(&residual);
        let moved: Vec<Complex64> = y.data().iter().zip(&grad).map(|(v, g)| v - g * (2.0 * step)).collect();
        let z = prox(moved);
        let fz = objective(&z);

        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if fz <= fx {
            let prev = std::mem::replace(&mut x, z);
            let f_prev = fx;
            fx = fz;
            worse_streak = 0;
            let beta = (t - 1.0) / t_next;
            y = x.zip_with(&prev, |a, b| a + (a - b) * beta);
            t = t_next;
            history.push(fx);
            if (f_prev - fx).abs() <= cfg.tolerance * f_prev.abs() + floor {
                converged = true;
                break;
            }
        } else {
            if fz > fx * (1.0 + DIVERGENCE_RATIO) + floor {
                worse_streak += 1;
                if worse_streak >= DIVERGENCE_WINDOW {
                    return Err(Error::Solver(format!(
                        "PLS-TV diverged: objective rose for {DIVERGENCE_WINDOW} consecutive steps with step size {step:e}"
                    )));
                }
            } else {
                worse_streak = 0;
            }
            y = x.clone();
            t = 1.0;
            history.push(fx);
        }
    }

    Ok(PlsTvResult {
        image: x,
        iterations: history.len(),
        objective: history,
        converged,
        step_size: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::MaskSpec;

    #[test]
    fn step_size_serde() {
        let s: StepSize = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(s, StepSize::Auto);
        let s: StepSize = serde_json::from_str("0.25").unwrap();
        assert_eq!(s, StepSize::Fixed(0.25));
        assert!(serde_json::from_str::<StepSize>("-1").is_err());
        assert!(serde_json::from_str::<StepSize>("\"fast\"").is_err());
        assert_eq!(serde_json::to_string(&StepSize::Auto).unwrap(), "\"auto\"");
    }

    #[test]
    fn operator_norm_of_row_selection_is_one() {
        let op = Operator::fft_mask(MaskSpec::uniform(8, 8, 3, 2).unwrap());
        let l = squared_operator_norm(&op, 50, 1e-8);
        assert!((l - 1.0).abs() < 1e-8, "{l}");
    }

    #[test]
    fn oversized_step_is_reported() {
        use crate::linop::DenseOperator;
        let op = Operator::Dense(DenseOperator::diagonal(&[10.0, 5.0, 1.0]).unwrap());
        let theta = ImageGrid::from_real(1, 3, &[1.0, -1.0, 2.0]).unwrap();
        let g = op.apply(&theta).unwrap();
        let cfg = PlsTvConfig {
            step_size: StepSize::Fixed(1.0),
            ..Default::default()
        };
        match recon_plstv(&g, &op, &cfg) {
            Err(Error::Solver(msg)) => assert!(msg.contains("step size 1e0"), "{msg}"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        let cfg = PlsTvConfig {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<PlsTvConfig>(r#"{"lamda": 1}"#).is_err());
    }
}
