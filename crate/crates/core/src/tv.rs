//! Quadratic total-variation penalty.
//!
//! The penalty is half the sum of squared forward differences along both
//! axes:
//!
//! ```text
//! C(X) = 1/2 * sum_{i<m, j} (x[i][j] - x[i+1][j])^2
//!      + 1/2 * sum_{i, j<n} (x[i][j] - x[i][j+1])^2
//! ```
//!
//! Two gradients are provided. [`tv_gradient_exact`] is the true derivative of
//! [`tv_value`]. [`tv_gradient_paper`] keeps only the forward-neighbor terms;
//! it is not a gradient of `C` and its entries generally do not sum to zero.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::ImageMatrix;

/// Which TV gradient the solver uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvMode {
    #[default]
    Exact,
    Paper,
}

impl TvMode {
    pub fn gradient(self, x: &ImageMatrix) -> Result<ImageMatrix> {
        match self {
            TvMode::Exact => tv_gradient_exact(x),
            TvMode::Paper => tv_gradient_paper(x),
        }
    }
}

impl std::str::FromStr for TvMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(TvMode::Exact),
            "paper" => Ok(TvMode::Paper),
            other => Err(format!(
                "unknown tv mode `{other}` (expected `exact` or `paper`)"
            )),
        }
    }
}

impl std::fmt::Display for TvMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TvMode::Exact => "exact",
            TvMode::Paper => "paper",
        })
    }
}

pub fn tv_value(x: &ImageMatrix) -> Result<f64> {
    x.ensure_solver_shape()?;
    let (m, n) = x.shape();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..m {
            let v = x.get(i, j);
            if i + 1 < m {
                let d = v - x.get(i + 1, j);
                acc += d * d;
            }
            if j + 1 < n {
                let d = v - x.get(i, j + 1);
                acc += d * d;
            }
        }
    }
    Ok(0.5 * acc)
}

/// Forward-neighbor update rule; the bottom-right corner is zero.
pub fn tv_gradient_paper(x: &ImageMatrix) -> Result<ImageMatrix> {
    x.ensure_solver_shape()?;
    let (m, n) = x.shape();
    Ok(ImageMatrix::from_fn(m, n, |i, j| {
        let v = x.get(i, j);
        match (i + 1 < m, j + 1 < n) {
            (true, true) => 2.0 * v - x.get(i + 1, j) - x.get(i, j + 1),
            (false, true) => v - x.get(i, j + 1),
            (true, false) => v - x.get(i + 1, j),
            (false, false) => 0.0,
        }
    }))
}

/// Gradient of [`tv_value`]: each pixel is pulled toward all of its
/// 4-neighbors.
pub fn tv_gradient_exact(x: &ImageMatrix) -> Result<ImageMatrix> {
    x.ensure_solver_shape()?;
    let (m, n) = x.shape();
    Ok(ImageMatrix::from_fn(m, n, |i, j| {
        let v = x.get(i, j);
        let mut g = 0.0;
        if i + 1 < m {
            g += v - x.get(i + 1, j);
        }
        if i > 0 {
            g += v - x.get(i - 1, j);
        }
        if j + 1 < n {
            g += v - x.get(i, j + 1);
        }
        if j > 0 {
            g += v - x.get(i, j - 1);
        }
        g
    }))
}
