use nalgebra::DMatrix;
use num_complex::Complex64;

use super::grid::ImageGrid;
use super::operator::Operator;
use crate::error::{Error, Result};

/// Default stability tolerance. Only singular values at or below `1e-6`
/// are truncated.
pub const DEFAULT_EPSILON: f64 = 1e6;

/// Largest dense matrix (in entries) factorized without an explicit override.
pub const DEFAULT_DENSE_ENTRY_LIMIT: usize = 4096 * 4096;

/// Singular triples of an operator in nonincreasing order together with the
/// truncation index chosen for a stability tolerance.
///
/// Right vectors live in image space, left vectors in measurement space, so
/// that `H = sum_n s_n v_n u_n^dagger`. For the FFT-mask realization the
/// triples are analytic: every singular value is one, the left vectors are
/// canonical measurement vectors and the right vectors are their adjoint
/// images. Nothing is materialized for that case.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    op: Operator,
    singular_values: Vec<f64>,
    truncation: usize,
    epsilon: f64,
    basis: Basis,
}

#[derive(Debug, Clone)]
enum Basis {
    /// Columns are `u_n` (N x R) and `v_n` (M x R).
    Dense {
        right: DMatrix<Complex64>,
        left: DMatrix<Complex64>,
    },
    Fourier,
}

/// Number of leading modes with `mu_n > 1/epsilon^2`, where `mu_n = s_n^2`.
///
/// A mode whose `mu` equals `1/epsilon^2` exactly is truncated.
pub fn truncation_index(singular_values: &[f64], epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    let cutoff = 1.0 / (epsilon * epsilon);
    Ok(singular_values.iter().take_while(|&&s| s * s > cutoff).count())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

pub fn compute_svd(op: &Operator, epsilon: f64) -> Result<SpectralDecomposition> {
    compute_svd_with_limit(op, epsilon, DEFAULT_DENSE_ENTRY_LIMIT)
}

/// As [`compute_svd`] with an explicit guard on dense matrix size.
pub fn compute_svd_with_limit(op: &Operator, epsilon: f64, dense_entry_limit: usize) -> Result<SpectralDecomposition> {
    check_epsilon(epsilon)?;
    match op {
        Operator::FftMask(f) => {
            let singular_values = vec![1.0; f.mask().sample_count()];
            let truncation = truncation_index(&singular_values, epsilon)?;
            Ok(SpectralDecomposition {
                op: op.clone(),
                singular_values,
                truncation,
                epsilon,
                basis: Basis::Fourier,
            })
        }
        Operator::Dense(d) => {
            let m = d.matrix();
            let (rows, cols) = m.shape();
            if rows.saturating_mul(cols) > dense_entry_limit {
                return Err(Error::Size {
                    rows,
                    cols,
                    limit: dense_entry_limit,
                });
            }
            let svd = m.clone().svd(true, true);
            let u = svd.u.expect("left singular vectors requested");
            let v_t = svd.v_t.expect("right singular vectors requested");

            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

            let s_max = order.first().map_or(0.0, |&i| svd.singular_values[i]);
            let rank_tol = s_max * rows.max(cols) as f64 * f64::EPSILON;
            let kept: Vec<usize> = order
                .into_iter()
                .filter(|&i| svd.singular_values[i] > rank_tol)
                .collect();

            let rank = kept.len();
            let mut right = DMatrix::zeros(cols, rank);
            let mut left = DMatrix::zeros(rows, rank);
            let mut singular_values = Vec::with_capacity(rank);
            for (n, &i) in kept.iter().enumerate() {
                singular_values.push(svd.singular_values[i]);
                // nalgebra returns V^dagger; its i-th row is u_n^dagger.
                for j in 0..cols {
                    right[(j, n)] = v_t[(i, j)].conj();
                }
                left.set_column(n, &u.column(i));
            }
            let truncation = truncation_index(&singular_values, epsilon)?;
            Ok(SpectralDecomposition {
                op: op.clone(),
                singular_values,
                truncation,
                epsilon,
                basis: Basis::Dense { right, left },
            })
        }
    }
}

impl SpectralDecomposition {
    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// `s_1 >= s_2 >= ... >= s_R > 0`.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Truncation index `P`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same singular system re-truncated for another tolerance.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let truncation = truncation_index(&self.singular_values, epsilon)?;
        Ok(Self {
            truncation,
            epsilon,
            ..self.clone()
        })
    }

    /// Right singular vector `u_n` as an image (zero-based `n < R`).
    pub fn right_vector(&self, n: usize) -> ImageGrid {
        assert!(n < self.rank(), "mode {n} out of range");
        let (h, w) = self.op.domain_shape();
        match &self.basis {
            Basis::Dense { right, .. } => ImageGrid::from_raw(h, w, right.column(n).iter().copied().collect()),
            Basis::Fourier => ImageGrid::from_raw(h, w, self.op.adjoint_raw(&self.left_vector(n))),
        }
    }

    /// Left singular vector `v_n` in measurement space.
    pub fn left_vector(&self, n: usize) -> Vec<Complex64> {
        assert!(n < self.rank(), "mode {n} out of range");
        match &self.basis {
            Basis::Dense { left, .. } => left.column(n).iter().copied().collect(),
            Basis::Fourier => {
                let mut e = vec![Complex64::new(0.0, 0.0); self.op.range_len()];
                e[n] = Complex64::new(1.0, 0.0);
                e
            }
        }
    }

    /// `H_P^+ g` on a raw measurement slice of the right length.
    pub(crate) fn pinv_raw(&self, meas: &[Complex64]) -> Vec<Complex64> {
        let p = self.truncation;
        match &self.basis {
            Basis::Fourier => {
                // Unit singular values: H_P^+ g = H^dagger (first P entries of g).
                let mut kept = meas.to_vec();
                for z in &mut kept[p..] {
                    *z = Complex64::new(0.0, 0.0);
                }
                self.op.adjoint_raw(&kept)
            }
            Basis::Dense { right, left } => {
                let mut out = vec![Complex64::new(0.0, 0.0); right.nrows()];
                for n in 0..p {
                    let coef: Complex64 = left
                        .column(n)
                        .iter()
                        .zip(meas)
                        .map(|(v, g)| v.conj() * g)
                        .sum::<Complex64>()
                        / self.singular_values[n];
                    for (o, u) in out.iter_mut().zip(right.column(n).iter()) {
                        *o += u * coef;
                    }
                }
                out
            }
        }
    }

    /// `H_P^+ H x` on a raw image slice.
    pub(crate) fn project_meas_raw(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.basis {
            Basis::Fourier => self.pinv_raw(&self.op.forward_raw(x)),
            Basis::Dense { right, .. } => {
                // Equal to H_P^+ H x without the 1/s_n amplification of rounding.
                let mut out = vec![Complex64::new(0.0, 0.0); right.nrows()];
                for n in 0..self.truncation {
                    let col = right.column(n);
                    let coef: Complex64 = col.iter().zip(x).map(|(u, v)| u.conj() * v).sum();
                    for (o, u) in out.iter_mut().zip(col.iter()) {
                        *o += u * coef;
                    }
                }
                out
            }
        }
    }
}
