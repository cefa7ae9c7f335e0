//! Reference completers: Soft-Impute, USVT and the TV-free SRF solver.

use crate::error::{Result, SplicError};
use crate::linalg::{svd, ImageMatrix, SvdFactors};
use crate::sampling::BinaryMask;
use crate::solver::{project, relative_change, splic_complete, CompletionResult, SplicConfig};

/// Proximal operator of `tau * ||.||_*`: `U diag(max(sigma - tau, 0)) V^T`.
pub fn soft_threshold_singular(f: &SvdFactors, tau: f64) -> Result<ImageMatrix> {
    if !(tau >= 0.0) {
        return Err(SplicError::param("tau", format!("must be >= 0, got {tau}")));
    }
    Ok(f.reconstruct_with(|s| (s - tau).max(0.0)))
}

#[derive(Clone, Debug)]
pub struct SoftImputeOutput {
    pub completed: ImageMatrix,
    pub iterations: usize,
    /// Nuclear norm of every iterate, in order.
    pub nuclear_norms: Vec<f64>,
}

/// Soft-Impute fixed point `Z <- SVT_tau(M * X + (1 - M) * Z)` from `Z = 0`.
///
/// Observed entries of the result are not forced back to `X`.
pub fn soft_impute(
    x: &ImageMatrix,
    mask: &BinaryMask,
    tau: f64,
    iters: usize,
    tol: f64,
) -> Result<ImageMatrix> {
    Ok(soft_impute_detailed(x, mask, tau, iters, tol)?.completed)
}

pub fn soft_impute_detailed(
    x: &ImageMatrix,
    mask: &BinaryMask,
    tau: f64,
    iters: usize,
    tol: f64,
) -> Result<SoftImputeOutput> {
    x.ensure_finite()?;
    if iters == 0 {
        return Err(SplicError::param("iters", "must be >= 1"));
    }
    if !(tau >= 0.0) {
        return Err(SplicError::param("tau", format!("must be >= 0, got {tau}")));
    }
    let mut z = ImageMatrix::zeros(x.rows(), x.cols());
    let mut nuclear_norms = Vec::new();
    let mut done = 0;
    for k in 1..=iters {
        let filled = project(&z, x, mask)?;
        let f = svd(&filled)?;
        let next = soft_threshold_singular(&f, tau)?;
        nuclear_norms.push(f.sigma().iter().map(|s| (s - tau).max(0.0)).sum());
        let change = relative_change(&next, &z)?;
        z = next;
        done = k;
        if change < tol {
            break;
        }
    }
    Ok(SoftImputeOutput {
        completed: z,
        iterations: done,
        nuclear_norms,
    })
}

/// One-shot universal singular value thresholding.
///
/// With `p` the observed fraction, the rescaled observation `(1/p) M * X` is
/// hard-thresholded at `(1 + eta) * sqrt(max(m, n) * p)`; the result is
/// clipped to `[0, 1]`.
pub fn usvt(x: &ImageMatrix, mask: &BinaryMask, eta: f64) -> Result<ImageMatrix> {
    x.ensure_finite()?;
    if !(eta >= 0.0) {
        return Err(SplicError::param("eta", format!("must be >= 0, got {eta}")));
    }
    mask.ensure_usable()?;
    let p = mask.anchor_fraction();
    let observed = project(&ImageMatrix::zeros(x.rows(), x.cols()), x, mask)?.scale(1.0 / p);
    let tau = usvt_threshold(x.rows(), x.cols(), p, eta);
    let f = svd(&observed)?;
    Ok(f.reconstruct_with(|s| if s >= tau { s } else { 0.0 })
        .clamp(0.0, 1.0))
}

pub fn usvt_threshold(rows: usize, cols: usize, observed_fraction: f64, eta: f64) -> f64 {
    (1.0 + eta) * (rows.max(cols) as f64 * observed_fraction).sqrt()
}

/// The SPLIC solver with the TV term switched off.
pub fn srf_only(x: &ImageMatrix, mask: &BinaryMask, cfg: &SplicConfig) -> Result<CompletionResult> {
    let cfg = SplicConfig {
        lambda: 0.0,
        ..cfg.clone()
    };
    splic_complete(x, mask, &cfg)
}
