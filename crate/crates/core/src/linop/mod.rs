//! Linear imaging operators, the raster type they act on, and their
//! singular value decompositions.
//!
//! k-space arrays are DC-first and row-major (no fftshift). Measurement
//! vectors for the FFT-mask operator list the sampled rows in increasing
//! order, each row in full.

mod fft;
mod grid;
mod mask;
mod operator;
mod spectral;

pub use fft::Fft2;
pub use grid::{vec_dot, vec_norm, ImageGrid};
pub use mask::MaskSpec;
pub use operator::{DenseOperator, FftMaskOperator, Operator, OperatorKind};
pub use spectral::{
    compute_svd, compute_svd_with_limit, truncation_index, SpectralDecomposition, DEFAULT_DENSE_ENTRY_LIMIT,
    DEFAULT_EPSILON,
};
