//! Structure-preserving progressive low-rank image completion.
//!
//! Given an image and a binary anchor mask, the solver re-estimates every
//! non-anchor pixel by minimizing a Gaussian smoothed rank function plus a
//! quadratic total-variation penalty. The smoothing width shrinks
//! geometrically from the largest singular value of the masked input, so
//! early iterations see a nearly convex surrogate and later ones approach the
//! true rank. An alternated two-pass mode swaps anchors and targets so that
//! every pixel is re-estimated once.
//!
//! ```
//! use splic::{generate_mask, splic_complete, synth, SplicConfig};
//!
//! let image = synth::natural_image(32, 32, 1);
//! let mask = generate_mask(32, 32, 0.5, 7).unwrap();
//! let result = splic_complete(&image, &mask, &SplicConfig::default()).unwrap();
//! assert_eq!(result.completed.shape(), (32, 32));
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod sampling;
pub mod solver;
pub mod srf;
pub mod synth;
pub mod tv;

#[cfg(test)]
mod testutil;

pub use baselines::{soft_impute, soft_threshold_singular, srf_only, usvt};
pub use error::{Result, SplicError};
pub use linalg::{numerical_rank, svd, truncate_rank, ImageMatrix, SvdFactors};
pub use metrics::{compare_methods, nuclear_norm, psnr, ComparisonRecord, Method};
pub use sampling::{complement, generate_mask, BinaryMask};
pub use solver::{
    alternate_channels, complete_channels, project, relative_change, splic_alternated,
    splic_alternated_with_mask, splic_complete, splic_complete_observed, CompletionResult,
    ConvergenceTrace, SplicConfig, TraceRecord,
};
pub use srf::{srf_gradient, srf_value, SmoothnessParam};
pub use tv::{tv_gradient_exact, tv_gradient_paper, tv_value, TvMode};
