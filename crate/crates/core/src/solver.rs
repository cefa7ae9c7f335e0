//! Progressive smoothed-rank completion with a TV penalty.
//!
//! [`splic_complete`] re-estimates the target (non-anchor) pixels of an image
//! by gradient projection on `F_delta(X) + lambda * C(X)` subject to the
//! anchors staying fixed. Every outer block runs `inner_steps` iterations of:
//!
//! 1. SVD of the current iterate, singular values past `r` zeroed and the
//!    iterate rebuilt from the truncated factors;
//! 2. a gradient step `X - mu * (grad F_delta + lambda * grad C)` on the
//!    rebuilt iterate;
//! 3. projection that restores every anchor pixel.
//!
//! After each block `delta` shrinks by `rho`. The loop stops once the change
//! between consecutive iterates, `||X_{t+1} - X_t||_F / (m n)`, drops to
//! `epsilon` or `maxiter` iterations have run.
//!
//! [`splic_alternated`] runs the solver twice with complementary masks so
//! every pixel is re-estimated exactly once.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplicError};
use crate::linalg::{ensure_same_shape, svd, ImageMatrix};
use crate::sampling::{complement, generate_mask, BinaryMask};
use crate::srf::{srf_from_sigma, srf_gradient, SmoothnessParam};
use crate::tv::{tv_value, TvMode};

/// Solver hyperparameters. Field names double as the JSON config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplicConfig {
    /// TV weight.
    pub lambda: f64,
    /// Per-block decay of `delta`, in `(0, 1)`.
    pub rho: f64,
    /// Gradient step size.
    pub mu: f64,
    /// Target rank. `None` means `round(min(m, n) / 4)`.
    pub r: Option<usize>,
    /// Stop threshold on the normalized iterate change.
    pub epsilon: f64,
    pub maxiter: usize,
    /// Iterations per `delta` level.
    pub inner_steps: usize,
    pub anchor_fraction: f64,
    pub seed: u64,
    pub tv_mode: TvMode,
    /// Clip target pixels of the final iterate to `[0, 1]`.
    pub clamp_output: bool,
}

impl Default for SplicConfig {
    fn default() -> Self {
        Self {
            lambda: 0.02,
            rho: 0.45,
            mu: 0.5,
            r: None,
            epsilon: 1e-4,
            maxiter: 210,
            inner_steps: 7,
            anchor_fraction: 0.5,
            seed: 0,
            tv_mode: TvMode::Exact,
            clamp_output: true,
        }
    }
}

impl SplicConfig {
    /// Checks every shape-independent invariant.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(SplicError::param(
                "rho",
                format!("must lie in (0, 1), got {}", self.rho),
            ));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(SplicError::param(
                "mu",
                format!("must be > 0, got {}", self.mu),
            ));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SplicError::param(
                "lambda",
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(SplicError::param(
                "epsilon",
                format!("must be > 0, got {}", self.epsilon),
            ));
        }
        if self.inner_steps == 0 {
            return Err(SplicError::param("inner_steps", "must be >= 1"));
        }
        if !(self.anchor_fraction > 0.0 && self.anchor_fraction <= 1.0) {
            return Err(SplicError::param(
                "anchor_fraction",
                format!("must lie in (0, 1], got {}", self.anchor_fraction),
            ));
        }
        if self.r == Some(0) {
            return Err(SplicError::param("r", "target rank must be >= 1"));
        }
        Ok(())
    }

    /// Target rank for an `m x n` image, validated against `min(m, n)`.
    pub fn rank_for(&self, rows: usize, cols: usize) -> Result<usize> {
        let l = rows.min(cols);
        let r = self
            .r
            .unwrap_or_else(|| ((l as f64 / 4.0).round() as usize).max(1));
        if r == 0 || r > l {
            return Err(SplicError::param(
                "r",
                format!("target rank must satisfy 1 <= r <= {l}, got {r}"),
            ));
        }
        Ok(r)
    }
}

/// One solver iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub delta: f64,
    pub rel_change: f64,
    /// Smoothed rank of the truncated iterate.
    pub srf: f64,
    /// TV of the projected iterate.
    pub tv: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceRecord> {
        self.records.iter()
    }

    /// Splits the records into consecutive runs of equal `delta`.
    pub fn blocks(&self) -> Vec<&[TraceRecord]> {
        self.records
            .chunk_by(|a, b| a.delta == b.delta && b.t == a.t + 1)
            .collect()
    }

    pub fn extend(&mut self, other: ConvergenceTrace) {
        self.records.extend(other.records);
    }
}

#[derive(Clone, Debug)]
pub struct CompletionResult {
    /// Final projected iterate; anchors equal the input.
    pub completed: ImageMatrix,
    /// Best rank-`r` approximation of the final iterate, before clamping.
    pub low_rank: ImageMatrix,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    pub converged: bool,
}

/// State handed to an observer after every iteration.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub t: usize,
    pub delta: f64,
    /// Iterate rebuilt from the rank-`r` factors.
    pub truncated: &'a ImageMatrix,
    /// Gradient step result, before anchors are restored.
    pub pre_projection: &'a ImageMatrix,
    pub projected: &'a ImageMatrix,
}

/// `(1 - M) * tilde + M * x`, entrywise.
pub fn project(tilde: &ImageMatrix, x: &ImageMatrix, mask: &BinaryMask) -> Result<ImageMatrix> {
    ensure_same_shape(tilde, x)?;
    ensure_mask_shape(x, mask)?;
    Ok(ImageMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        if mask.is_anchor(i, j) {
            x.get(i, j)
        } else {
            tilde.get(i, j)
        }
    }))
}

/// `||new - old||_F / (m n)`.
pub fn relative_change(new: &ImageMatrix, old: &ImageMatrix) -> Result<f64> {
    let diff = new.sub(old)?;
    Ok(diff.frobenius_norm() / new.len() as f64)
}

fn ensure_mask_shape(x: &ImageMatrix, mask: &BinaryMask) -> Result<()> {
    if mask.shape() != x.shape() {
        return Err(SplicError::ShapeMismatch {
            expected: x.shape(),
            actual: mask.shape(),
        });
    }
    Ok(())
}

pub fn splic_complete(
    x: &ImageMatrix,
    mask: &BinaryMask,
    cfg: &SplicConfig,
) -> Result<CompletionResult> {
    splic_complete_observed(x, mask, cfg, |_| {})
}

/// [`splic_complete`] with a callback invoked after each iteration.
pub fn splic_complete_observed(
    x: &ImageMatrix,
    mask: &BinaryMask,
    cfg: &SplicConfig,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<CompletionResult> {
    x.ensure_solver_shape()?;
    x.ensure_finite()?;
    ensure_mask_shape(x, mask)?;
    cfg.validate()?;
    let r = cfg.rank_for(x.rows(), x.cols())?;
    mask.ensure_usable()?;

    let mut current = project(&ImageMatrix::zeros(x.rows(), x.cols()), x, mask)?;
    let sigma_max = svd(&current)?.sigma_max();
    if sigma_max == 0.0 {
        return Err(SplicError::ZeroMaskedInput);
    }
    let mut delta = SmoothnessParam::new(sigma_max)?;

    let mut trace = ConvergenceTrace::default();
    let mut rel = f64::INFINITY;
    let mut t = 0usize;
    while rel > cfg.epsilon && t < cfg.maxiter {
        for _ in 0..cfg.inner_steps {
            let factors = svd(&current)?.truncated(r)?;
            let truncated = factors.reconstruct();
            let grad_srf = srf_gradient(&factors, delta);
            let grad_tv = cfg.tv_mode.gradient(&truncated)?;
            let step = grad_srf.add(&grad_tv.scale(cfg.lambda))?;
            let tilde = truncated.sub(&step.scale(cfg.mu))?;
            let next = project(&tilde, x, mask)?;

            rel = relative_change(&next, &current)?;
            t += 1;
            trace.records.push(TraceRecord {
                t,
                delta: delta.get(),
                rel_change: rel,
                srf: srf_from_sigma(factors.sigma(), delta),
                tv: tv_value(&next)?,
            });
            observer(&IterationView {
                t,
                delta: delta.get(),
                truncated: &truncated,
                pre_projection: &tilde,
                projected: &next,
            });
            current = next;
        }
        delta = delta.shrink(cfg.rho)?;
    }

    let low_rank = svd(&current)?.truncated(r)?.reconstruct();
    if cfg.clamp_output {
        current = project(&current.clamp(0.0, 1.0), x, mask)?;
    }
    Ok(CompletionResult {
        completed: current,
        low_rank,
        trace,
        iterations: t,
        converged: rel <= cfg.epsilon,
    })
}

/// Two-pass completion: anchors from a random mask, then the complementary
/// set anchored on the first-pass estimates. The traces are concatenated and
/// `t` restarts at 1 for the second pass.
pub fn splic_alternated(x: &ImageMatrix, cfg: &SplicConfig) -> Result<CompletionResult> {
    cfg.validate()?;
    let mask = generate_mask(x.rows(), x.cols(), cfg.anchor_fraction, cfg.seed)?;
    splic_alternated_with_mask(x, &mask, cfg)
}

/// [`splic_alternated`] with an explicit first-pass mask.
pub fn splic_alternated_with_mask(
    x: &ImageMatrix,
    mask: &BinaryMask,
    cfg: &SplicConfig,
) -> Result<CompletionResult> {
    let first = splic_complete(x, mask, cfg)?;
    let flipped = complement(mask);
    let second = splic_complete(&first.completed, &flipped, cfg)?;

    let mut trace = first.trace;
    trace.extend(second.trace);
    Ok(CompletionResult {
        completed: second.completed,
        low_rank: second.low_rank,
        trace,
        iterations: first.iterations + second.iterations,
        converged: first.converged && second.converged,
    })
}

/// Completes each plane of a multi-channel image with the same mask and config.
pub fn complete_channels(
    planes: &[ImageMatrix],
    mask: &BinaryMask,
    cfg: &SplicConfig,
) -> Result<Vec<CompletionResult>> {
    planes
        .iter()
        .map(|p| splic_complete(p, mask, cfg))
        .collect()
}

/// Alternated completion of each plane; all planes share one first-pass mask.
pub fn alternate_channels(
    planes: &[ImageMatrix],
    cfg: &SplicConfig,
) -> Result<Vec<CompletionResult>> {
    let first = planes
        .first()
        .ok_or_else(|| SplicError::param("planes", "no channel planes"))?;
    cfg.validate()?;
    let mask = generate_mask(first.rows(), first.cols(), cfg.anchor_fraction, cfg.seed)?;
    planes
        .iter()
        .map(|p| splic_alternated_with_mask(p, &mask, cfg))
        .collect()
}
