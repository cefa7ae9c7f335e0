//! Gaussian smoothed rank function.
//!
//! `F_delta(X) = l - sum_k exp(-sigma_k^2 / (2 delta^2))` approaches the rank of
//! `X` as `delta -> 0` and flattens to zero as `delta` grows, which is what makes
//! the graduated schedule in [`crate::solver`] work.

use crate::error::{Result, SplicError};
use crate::linalg::{svd, ImageMatrix, SvdFactors};

/// Smoothing width `delta`, always strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SmoothnessParam(f64);

impl SmoothnessParam {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(SplicError::param(
                "delta",
                format!("smoothness must be finite and > 0, got {delta}"),
            ));
        }
        Ok(Self(delta))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `rho * delta`, a single multiplication.
    pub fn shrink(self, rho: f64) -> Result<Self> {
        Self::new(self.0 * rho)
    }
}

/// Smoothed rank of a matrix.
pub fn srf_value(x: &ImageMatrix, delta: SmoothnessParam) -> Result<f64> {
    Ok(srf_value_of(&svd(x)?, delta))
}

/// Smoothed rank from precomputed singular values.
pub fn srf_value_of(f: &SvdFactors, delta: SmoothnessParam) -> f64 {
    srf_from_sigma(f.sigma(), delta)
}

pub fn srf_from_sigma(sigma: &[f64], delta: SmoothnessParam) -> f64 {
    let two_d2 = 2.0 * delta.0 * delta.0;
    let kept: f64 = sigma.iter().map(|&s| (-(s * s) / two_d2).exp()).sum();
    (sigma.len() as f64 - kept).max(0.0)
}

/// Gradient `U diag(sigma_k / delta^2 * exp(-sigma_k^2 / 2 delta^2)) V^T`.
///
/// Evaluated from existing factors so the solver needs one SVD per step. At
/// repeated singular values the formula is applied as is.
pub fn srf_gradient(f: &SvdFactors, delta: SmoothnessParam) -> ImageMatrix {
    let d2 = delta.0 * delta.0;
    f.reconstruct_with(|s| s / d2 * (-(s * s) / (2.0 * d2)).exp())
}
