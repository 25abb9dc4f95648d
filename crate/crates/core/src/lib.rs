//! Measurement-space and null-space decompositions for linear imaging
//! operators, with hallucination maps built on top of them.
//!
//! An operator `H` (an explicit matrix or a row-subsampled 2D FFT) is
//! decomposed once with [`linop::compute_svd`]. The decomposition gives the
//! truncated pseudoinverse and the projectors onto the measurement space and
//! null space ([`subspace`]). [`halmap`] uses those to split the error of
//! any reconstruction into a part explained by the data and a part injected
//! by the prior, and localizes the latter with the specific-map transform.
//!
//! ```
//! use nullmap::linop::{compute_svd, ImageGrid, MaskSpec, Operator, DEFAULT_EPSILON};
//! use nullmap::subspace::{project_meas, project_null};
//!
//! let op = Operator::fft_mask(MaskSpec::uniform(8, 8, 2, 0).unwrap());
//! let dec = compute_svd(&op, DEFAULT_EPSILON).unwrap();
//! let theta = nullmap::simulate::shepp_logan(8, 8);
//! let sum = project_meas(&dec, &theta).unwrap().add(&project_null(&dec, &theta).unwrap()).unwrap();
//! assert!(sum.sub(&theta).unwrap().norm() < 1e-12);
//! # let _ = ImageGrid::zeros(1, 1);
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod formats;
pub mod halmap;
pub mod linop;
pub mod recon;
pub mod simulate;
pub mod subspace;

pub use error::{Error, Result};
