use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary k-space row-sampling pattern.
///
/// Row indices refer to DC-first (unshifted) k-space ordering: row 0 holds
/// the zero vertical frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MaskFile", into = "MaskFile")]
pub struct MaskSpec {
    height: usize,
    width: usize,
    sampled_rows: Vec<usize>,
    factor: Option<usize>,
    offset: usize,
}

/// On-disk JSON form `{height, width, sampled_rows, factor, offset}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskFile {
    height: usize,
    width: usize,
    sampled_rows: Vec<usize>,
    #[serde(default)]
    factor: Option<usize>,
    #[serde(default)]
    offset: usize,
}

impl TryFrom<MaskFile> for MaskSpec {
    type Error = Error;

    fn try_from(f: MaskFile) -> Result<Self> {
        let mut mask = MaskSpec::from_rows(f.height, f.width, f.sampled_rows)?;
        mask.factor = f.factor;
        mask.offset = f.offset;
        Ok(mask)
    }
}

impl From<MaskSpec> for MaskFile {
    fn from(m: MaskSpec) -> Self {
        MaskFile {
            height: m.height,
            width: m.width,
            sampled_rows: m.sampled_rows,
            factor: m.factor,
            offset: m.offset,
        }
    }
}

impl MaskSpec {
    /// Arbitrary row set. Rows must be strictly increasing, in range and nonempty.
    pub fn from_rows(height: usize, width: usize, sampled_rows: Vec<usize>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param("mask dimensions must be positive"));
        }
        if sampled_rows.is_empty() {
            return Err(Error::param("mask must sample at least one row"));
        }
        if sampled_rows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sampled_rows must be strictly increasing"));
        }
        if let Some(&last) = sampled_rows.last() {
            if last >= height {
                return Err(Error::param(format!(
                    "sampled row {last} out of range for height {height}"
                )));
            }
        }
        Ok(Self {
            height,
            width,
            sampled_rows,
            factor: None,
            offset: 0,
        })
    }

    /// Samples rows `offset, offset + factor, ...`.
    pub fn uniform(height: usize, width: usize, factor: usize, offset: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::param("undersampling factor must be at least 1"));
        }
        if offset >= factor {
            return Err(Error::param(format!(
                "offset {offset} must be smaller than factor {factor}"
            )));
        }
        if factor > height {
            return Err(Error::param(format!("factor {factor} exceeds mask height {height}")));
        }
        let rows = (offset..height).step_by(factor).collect();
        let mut mask = Self::from_rows(height, width, rows)?;
        mask.factor = Some(factor);
        mask.offset = offset;
        Ok(mask)
    }

    pub fn full(height: usize, width: usize) -> Result<Self> {
        Self::uniform(height, width, 1, 0)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sampled_rows(&self) -> &[usize] {
        &self.sampled_rows
    }

    pub fn factor(&self) -> Option<usize> {
        self.factor
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of sampled k-space entries.
    pub fn sample_count(&self) -> usize {
        self.sampled_rows.len() * self.width
    }

    pub fn is_full(&self) -> bool {
        self.sampled_rows.len() == self.height
    }
}
