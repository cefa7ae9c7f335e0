//! Anchor masks.
//!
//! Masks are generated with exact cardinality: `round(p * m * n)` positions are
//! drawn uniformly without replacement. The random source is `ChaCha8`
//! seeded through `SeedableRng::seed_from_u64(seed)`; positions come from a
//! partial Fisher-Yates shuffle of the row-major index list `0..m*n` where step
//! `i` swaps slot `i` with slot `i + (next_u64() % (m*n - i))`. The first
//! `round(p * m * n)` slots after shuffling are the anchors. Any
//! implementation following these rules reproduces masks bit for bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SplicError};
use crate::linalg::ImageMatrix;

/// Binary `m x n` mask; `true` marks an anchor pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// Builds a mask from row-major bits.
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(SplicError::param(
                "mask",
                format!(
                    "expected {} bits for {rows}x{cols}, got {}",
                    rows * cols,
                    bits.len()
                ),
            ));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    /// Mask whose anchors are the pixels where `(i + j)` is even.
    pub fn checkerboard(rows: usize, cols: usize) -> Self {
        let bits = (0..rows * cols)
            .map(|k| (k / cols + k % cols).is_multiple_of(2))
            .collect();
        Self { rows, cols, bits }
    }

    /// Mask from a matrix: entries at or above one half become anchors.
    pub fn from_matrix(x: &ImageMatrix) -> Self {
        let bits = x.to_row_major().into_iter().map(|v| v >= 0.5).collect();
        Self {
            rows: x.rows(),
            cols: x.cols(),
            bits,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_anchor(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_anchors(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of anchor pixels.
    pub fn anchor_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            return 0.0;
        }
        self.count_anchors() as f64 / self.bits.len() as f64
    }

    /// 0/1 matrix view of the mask.
    pub fn to_matrix(&self) -> ImageMatrix {
        ImageMatrix::from_fn(self.rows, self.cols, |i, j| {
            if self.is_anchor(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// A mask can drive the solver only if it anchors at least one pixel.
    pub fn ensure_usable(&self) -> Result<()> {
        if self.count_anchors() == 0 {
            return Err(SplicError::param("mask", "anchor set is empty"));
        }
        Ok(())
    }
}

/// Random anchor mask with exactly `round(p * m * n)` anchors.
pub fn generate_mask(rows: usize, cols: usize, p: f64, seed: u64) -> Result<BinaryMask> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SplicError::param(
            "anchor_fraction",
            format!("must lie in (0, 1], got {p}"),
        ));
    }
    let total = rows * cols;
    let anchors = ((p * total as f64).round() as usize).min(total);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..total).collect();
    for i in 0..anchors {
        let remaining = (total - i) as u64;
        let j = i + (rng.next_u64() % remaining) as usize;
        slots.swap(i, j);
    }

    let mut bits = vec![false; total];
    for &k in &slots[..anchors] {
        bits[k] = true;
    }
    Ok(BinaryMask { rows, cols, bits })
}

/// Swaps anchors and targets.
pub fn complement(mask: &BinaryMask) -> BinaryMask {
    BinaryMask {
        rows: mask.rows,
        cols: mask.cols,
        bits: mask.bits.iter().map(|b| !b).collect(),
    }
}
