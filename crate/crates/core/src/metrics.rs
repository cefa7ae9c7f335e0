//! PSNR, nuclear norm and the method comparison driver.

use std::fmt;
use std::time::Instant;

use crate::baselines::{soft_impute_detailed, srf_only, usvt};
use crate::error::{Result, SplicError};
use crate::linalg::{ensure_same_shape, numerical_rank, svd, ImageMatrix};
use crate::sampling::{generate_mask, BinaryMask};
use crate::solver::{project, splic_complete, SplicConfig};

/// Rank tolerance used in comparison reports.
pub const REPORT_RANK_TOL: f64 = 1e-6;

/// Peak signal-to-noise ratio in dB. Identical inputs give `f64::INFINITY`.
pub fn psnr(a: &ImageMatrix, b: &ImageMatrix, peak: f64) -> Result<f64> {
    psnr_channels(std::slice::from_ref(a), std::slice::from_ref(b), peak)
}

/// PSNR with the squared error pooled over all channel planes.
pub fn psnr_channels(a: &[ImageMatrix], b: &[ImageMatrix], peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(SplicError::param(
            "peak",
            format!("must be > 0, got {peak}"),
        ));
    }
    if a.len() != b.len() {
        return Err(SplicError::param(
            "channels",
            format!("channel count mismatch: {} vs {}", a.len(), b.len()),
        ));
    }
    let mut sq = 0.0;
    let mut count = 0usize;
    for (pa, pb) in a.iter().zip(b) {
        ensure_same_shape(pa, pb)?;
        sq += pa.sub(pb)?.iter().map(|d| d * d).sum::<f64>();
        count += pa.len();
    }
    if count == 0 {
        return Err(SplicError::param("channels", "no pixels to compare"));
    }
    let mse = sq / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Formats a PSNR value for CSV output; the infinite marker prints as `inf`.
pub fn format_psnr(value: f64) -> String {
    if value.is_infinite() && value > 0.0 {
        "inf".to_string()
    } else {
        format!("{value:.4}")
    }
}

/// Sum of singular values.
pub fn nuclear_norm(x: &ImageMatrix) -> Result<f64> {
    Ok(svd(x)?.sigma().iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Splic,
    SrfOnly,
    SoftImpute,
    Usvt,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Splic,
        Method::SrfOnly,
        Method::SoftImpute,
        Method::Usvt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Splic => "splic",
            Method::SrfOnly => "srf",
            Method::SoftImpute => "soft-impute",
            Method::Usvt => "usvt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings for the two nuclear-norm baselines.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineParams {
    /// Soft-Impute threshold; `None` means `0.05 * sigma_1(M * X)`.
    pub soft_impute_tau: Option<f64>,
    pub soft_impute_iters: usize,
    pub soft_impute_tol: f64,
    pub usvt_eta: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            soft_impute_tau: None,
            soft_impute_iters: 200,
            soft_impute_tol: 1e-6,
            usvt_eta: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodRow {
    pub method: Method,
    pub psnr_db: f64,
    pub rank: usize,
    pub iters: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonRecord {
    pub rows: Vec<MethodRow>,
}

impl ComparisonRecord {
    pub const CSV_HEADER: &'static str = "method,psnr_db,rank,iters,seconds";

    pub fn get(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn csv_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{:.6}",
                    r.method,
                    format_psnr(r.psnr_db),
                    r.rank,
                    r.iters,
                    r.seconds
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for line in self.csv_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Runs SPLIC, SRF-only, Soft-Impute and USVT on `(corrupt, mask)` and scores
/// each output against `clean`.
pub fn compare_methods(
    clean: &ImageMatrix,
    corrupt: &ImageMatrix,
    mask: &BinaryMask,
    cfg: &SplicConfig,
    params: &BaselineParams,
) -> Result<ComparisonRecord> {
    ensure_same_shape(clean, corrupt)?;
    let mut rows = Vec::with_capacity(4);

    for method in Method::ALL {
        let start = Instant::now();
        let (output, iters) = match method {
            Method::Splic => {
                let r = splic_complete(corrupt, mask, cfg)?;
                (r.completed, r.iterations)
            }
            Method::SrfOnly => {
                let r = srf_only(corrupt, mask, cfg)?;
                (r.completed, r.iterations)
            }
            Method::SoftImpute => {
                let tau = match params.soft_impute_tau {
                    Some(t) => t,
                    None => default_soft_impute_tau(corrupt, mask)?,
                };
                let r = soft_impute_detailed(
                    corrupt,
                    mask,
                    tau,
                    params.soft_impute_iters,
                    params.soft_impute_tol,
                )?;
                (r.completed, r.iterations)
            }
            Method::Usvt => (usvt(corrupt, mask, params.usvt_eta)?, 1),
        };
        let seconds = start.elapsed().as_secs_f64();
        rows.push(MethodRow {
            method,
            psnr_db: psnr(&output, clean, 1.0)?,
            rank: numerical_rank(&output, REPORT_RANK_TOL)?,
            iters,
            seconds,
        });
    }
    Ok(ComparisonRecord { rows })
}

/// `0.05 * sigma_1(M * X)`.
pub fn default_soft_impute_tau(x: &ImageMatrix, mask: &BinaryMask) -> Result<f64> {
    let masked = project(&ImageMatrix::zeros(x.rows(), x.cols()), x, mask)?;
    Ok(0.05 * svd(&masked)?.sigma_max())
}

/// Comparison records for several anchor fractions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FractionSweep {
    pub entries: Vec<(f64, ComparisonRecord)>,
}

impl FractionSweep {
    pub const CSV_HEADER: &'static str = "fraction,method,psnr_db,rank,iters,seconds";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (fraction, record) in &self.entries {
            for line in record.csv_lines() {
                out.push_str(&format!("{fraction},{line}\n"));
            }
        }
        out
    }
}

/// Runs [`compare_methods`] once per fraction, each with the mask
/// `generate_mask(m, n, fraction, seed)`.
pub fn fraction_sweep(
    clean: &ImageMatrix,
    corrupt: &ImageMatrix,
    fractions: &[f64],
    seed: u64,
    cfg: &SplicConfig,
    params: &BaselineParams,
) -> Result<FractionSweep> {
    let mut entries = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let mask = generate_mask(clean.rows(), clean.cols(), fraction, seed)?;
        entries.push((
            fraction,
            compare_methods(clean, corrupt, &mask, cfg, params)?,
        ));
    }
    Ok(FractionSweep { entries })
}

#[derive(Clone, Debug)]
pub struct RankSweepRow {
    pub rank: usize,
    /// Rank-`rank` estimate of the final iterate, before clamping.
    pub estimate: ImageMatrix,
    pub numerical_rank: usize,
    pub psnr_db: f64,
    pub converged: bool,
}

pub const RANK_SWEEP_CSV_HEADER: &str = "rank,psnr_db,numerical_rank";

/// Completes `x` once per target rank; PSNR is taken against `x` after
/// clipping the estimate to `[0, 1]`.
pub fn rank_sweep(
    x: &ImageMatrix,
    mask: &BinaryMask,
    cfg: &SplicConfig,
    ranks: &[usize],
) -> Result<Vec<RankSweepRow>> {
    ranks
        .iter()
        .map(|&rank| {
            let res = splic_complete(
                x,
                mask,
                &SplicConfig {
                    r: Some(rank),
                    ..cfg.clone()
                },
            )?;
            Ok(RankSweepRow {
                rank,
                numerical_rank: numerical_rank(&res.low_rank, REPORT_RANK_TOL)?,
                psnr_db: psnr(&res.low_rank.clamp(0.0, 1.0), x, 1.0)?,
                estimate: res.low_rank,
                converged: res.converged,
            })
        })
        .collect()
}

pub fn rank_sweep_csv(rows: &[RankSweepRow]) -> String {
    let mut out = String::from(RANK_SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.rank,
            format_psnr(row.psnr_db),
            row.numerical_rank
        ));
    }
    out
}
