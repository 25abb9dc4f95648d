use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fft::Fft2;
use super::grid::ImageGrid;
use super::mask::MaskSpec;
use crate::error::{Error, Result};

/// Which realization backs an [`Operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    DenseMatrix,
    FftMask,
}

/// Linear map from `height x width` images to measurement vectors.
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(DenseOperator),
    FftMask(FftMaskOperator),
}

/// Explicit `M x N` complex system matrix acting on row-major images.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: Arc<DMatrix<Complex64>>,
    height: usize,
    width: usize,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param("image dimensions must be positive"));
        }
        if matrix.ncols() != height * width {
            return Err(Error::dims(
                "DenseOperator::new",
                format!("{} columns ({height}x{width})", height * width),
                format!("{} columns", matrix.ncols()),
            ));
        }
        if matrix.nrows() == 0 {
            return Err(Error::param("dense operator needs at least one row"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("dense operator has non-finite entries"));
        }
        Ok(Self {
            matrix: Arc::new(matrix),
            height,
            width,
        })
    }

    /// Square diagonal operator on a `1 x n` image.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self::new(m, 1, n)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Unitary 2D DFT followed by retention of the sampled k-space rows.
#[derive(Debug, Clone)]
pub struct FftMaskOperator {
    mask: MaskSpec,
    fft: Fft2,
}

impl FftMaskOperator {
    pub fn new(mask: MaskSpec) -> Self {
        let fft = Fft2::new(mask.height(), mask.width());
        Self { mask, fft }
    }

    pub fn mask(&self) -> &MaskSpec {
        &self.mask
    }

    /// Full unitary k-space of an image, DC-first row-major.
    pub fn kspace(&self, image: &[Complex64]) -> Vec<Complex64> {
        let mut k = image.to_vec();
        self.fft.forward(&mut k);
        k
    }

    /// Keeps the sampled rows of a full k-space array.
    pub fn select(&self, kspace: &[Complex64]) -> Vec<Complex64> {
        let w = self.mask.width();
        let mut out = Vec::with_capacity(self.mask.sample_count());
        for &r in self.mask.sampled_rows() {
            out.extend_from_slice(&kspace[r * w..(r + 1) * w]);
        }
        out
    }

    /// Places measurements back on their rows, zeros elsewhere.
    pub fn zero_fill(&self, meas: &[Complex64]) -> Vec<Complex64> {
        let w = self.mask.width();
        let mut k = vec![Complex64::new(0.0, 0.0); self.mask.height() * w];
        for (i, &r) in self.mask.sampled_rows().iter().enumerate() {
            k[r * w..(r + 1) * w].copy_from_slice(&meas[i * w..(i + 1) * w]);
        }
        k
    }

    pub fn inverse_kspace(&self, mut kspace: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.inverse(&mut kspace);
        kspace
    }
}

impl Operator {
    pub fn dense(matrix: DMatrix<Complex64>, height: usize, width: usize) -> Result<Self> {
        DenseOperator::new(matrix, height, width).map(Operator::Dense)
    }

    pub fn fft_mask(mask: MaskSpec) -> Self {
        Operator::FftMask(FftMaskOperator::new(mask))
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            Operator::Dense(_) => OperatorKind::DenseMatrix,
            Operator::FftMask(_) => OperatorKind::FftMask,
        }
    }

    /// Object grid shape `(height, width)`.
    pub fn domain_shape(&self) -> (usize, usize) {
        match self {
            Operator::Dense(d) => (d.height, d.width),
            Operator::FftMask(f) => (f.mask.height(), f.mask.width()),
        }
    }

    pub fn domain_len(&self) -> usize {
        let (h, w) = self.domain_shape();
        h * w
    }

    pub fn range_len(&self) -> usize {
        match self {
            Operator::Dense(d) => d.matrix.nrows(),
            Operator::FftMask(f) => f.mask.sample_count(),
        }
    }

    /// Shape under which measurement vectors are stored as grids.
    pub fn range_shape(&self) -> (usize, usize) {
        match self {
            Operator::Dense(d) => (d.matrix.nrows(), 1),
            Operator::FftMask(f) => (f.mask.sampled_rows().len(), f.mask.width()),
        }
    }

    pub fn check_image(&self, image: &ImageGrid, context: &'static str) -> Result<()> {
        let (h, w) = self.domain_shape();
        if image.shape() != (h, w) {
            return Err(Error::dims(
                context,
                format!("{h}x{w}"),
                format!("{}x{}", image.height(), image.width()),
            ));
        }
        Ok(())
    }

    pub fn check_measurement(&self, meas: &[Complex64], context: &'static str) -> Result<()> {
        if meas.len() != self.range_len() {
            return Err(Error::dims(
                context,
                format!("measurement length {}", self.range_len()),
                format!("length {}", meas.len()),
            ));
        }
        Ok(())
    }

    /// `H theta`.
    pub fn apply(&self, image: &ImageGrid) -> Result<Vec<Complex64>> {
        self.check_image(image, "apply_forward")?;
        Ok(self.forward_raw(image.data()))
    }

    /// `H^dagger g`.
    pub fn adjoint(&self, meas: &[Complex64]) -> Result<ImageGrid> {
        self.check_measurement(meas, "apply_adjoint")?;
        let (h, w) = self.domain_shape();
        Ok(ImageGrid::from_raw(h, w, self.adjoint_raw(meas)))
    }

    /// `H^dagger H theta`.
    pub fn normal(&self, image: &ImageGrid) -> Result<ImageGrid> {
        let g = self.apply(image)?;
        self.adjoint(&g)
    }

    pub(crate) fn forward_raw(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Operator::Dense(d) => {
                let m = &d.matrix;
                (0..m.nrows())
                    .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
                    .collect()
            }
            Operator::FftMask(f) => f.select(&f.kspace(x)),
        }
    }

    pub(crate) fn adjoint_raw(&self, y: &[Complex64]) -> Vec<Complex64> {
        match self {
            Operator::Dense(d) => {
                let m = &d.matrix;
                let mut out = vec![Complex64::new(0.0, 0.0); m.ncols()];
                for (j, o) in out.iter_mut().enumerate() {
                    *o = m.column(j).iter().zip(y).map(|(a, b)| a.conj() * b).sum();
                }
                out
            }
            Operator::FftMask(f) => f.inverse_kspace(f.zero_fill(y)),
        }
    }
}
