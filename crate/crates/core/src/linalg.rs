//! Symmetric PSD square roots of many small blocks, with eigenvalue clipping.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// What happened to the eigenvalues while taking square roots.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClipReport {
    /// Eigenvalues set to zero (negative, or below `clip_tol · max_eigenvalue`).
    pub clipped: usize,
    /// Most negative eigenvalue seen before clipping, or 0 if none was negative.
    pub most_negative: f64,
    /// Smallest eigenvalue across all blocks before clipping.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Sum of `|λ|` over clipped negative eigenvalues.
    pub negative_mass: f64,
    /// Sum of all eigenvalues (trace of the block-diagonal matrix).
    pub trace: f64,
    pub blocks: usize,
}

impl std::fmt::Display for ClipReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "clipped {} eigenvalue(s) over {} block(s), most negative {:.3e}, max {:.3e}",
            self.clipped, self.blocks, self.most_negative, self.max_eigenvalue
        )
    }
}

/// How the per-block square root is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqrtMethod {
    /// `V diag(√λ) Vᵀ` with clipping; handles semidefinite blocks.
    Eigen,
    /// Lower Cholesky factor; fails on any block that is not numerically
    /// positive definite.
    Cholesky,
}

/// Response to negative eigenvalues beyond rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NegativePolicy {
    /// Fail with `IndefiniteBlocks` if any eigenvalue is below `-threshold · λ_max`.
    Reject { threshold: f64 },
    /// Clip and report; warn if the clipped mass exceeds `warn_fraction` of the trace.
    Report { warn_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtOptions {
    pub method: SqrtMethod,
    /// Relative clip tolerance against the largest eigenvalue across all blocks.
    pub clip_tol: f64,
    pub negative: NegativePolicy,
}

impl Default for SqrtOptions {
    fn default() -> Self {
        Self {
            method: SqrtMethod::Eigen,
            clip_tol: 1e-12,
            negative: NegativePolicy::Reject { threshold: 1e-6 },
        }
    }
}

/// Square roots `R_i` with `R_i R_iᵀ = Λ_i` for every block.
pub fn sqrt_blocks<T: Real>(
    blocks: &[DMatrix<T>],
    opts: &SqrtOptions,
) -> Result<(Vec<DMatrix<T>>, ClipReport)> {
    let eigs: Vec<SymmetricEigen<T, nalgebra::Dyn>> = blocks
        .par_iter()
        .map(|b| SymmetricEigen::new(symmetrized(b)))
        .collect();

    let mut report = ClipReport {
        blocks: blocks.len(),
        min_eigenvalue: f64::INFINITY,
        max_eigenvalue: f64::NEG_INFINITY,
        ..Default::default()
    };
    for e in &eigs {
        for &v in e.eigenvalues.iter() {
            let v = v.as_f64();
            report.min_eigenvalue = report.min_eigenvalue.min(v);
            report.max_eigenvalue = report.max_eigenvalue.max(v);
            report.trace += v;
        }
    }
    if blocks.is_empty() {
        report.min_eigenvalue = 0.0;
        report.max_eigenvalue = 0.0;
    }
    let scale = report.max_eigenvalue.max(0.0);
    let cutoff = opts.clip_tol * scale;

    if let NegativePolicy::Reject { threshold } = opts.negative {
        for (i, e) in eigs.iter().enumerate() {
            for &v in e.eigenvalues.iter() {
                if v.as_f64() < -threshold * scale {
                    return Err(Error::IndefiniteBlocks {
                        block: i,
                        eigenvalue: v.as_f64(),
                        threshold: threshold * scale,
                    });
                }
            }
        }
    }

    for e in &eigs {
        for &v in e.eigenvalues.iter() {
            let v = v.as_f64();
            if v < cutoff || v <= 0.0 {
                report.clipped += 1;
                if v < 0.0 {
                    report.most_negative = report.most_negative.min(v);
                    report.negative_mass += -v;
                }
            }
        }
    }
    if let NegativePolicy::Report { warn_fraction } = opts.negative {
        if report.negative_mass > warn_fraction * report.trace.abs() {
            log::warn!(
                "clipped negative eigenvalue mass {:.3e} exceeds {:.1}% of the trace {:.3e}; \
                 consider a larger embedding factor",
                report.negative_mass,
                100.0 * warn_fraction,
                report.trace
            );
        }
    }

    let cutoff_t = T::lit(cutoff);
    let roots: Result<Vec<DMatrix<T>>> = match opts.method {
        SqrtMethod::Eigen => Ok(eigs
            .into_par_iter()
            .map(|e| {
                let roots = e.eigenvalues.map(|v| {
                    if v < cutoff_t || v <= T::zero() {
                        T::zero()
                    } else {
                        v.sqrt()
                    }
                });
                let scaled = &e.eigenvectors * DMatrix::from_diagonal(&roots);
                &scaled * e.eigenvectors.transpose()
            })
            .collect()),
        SqrtMethod::Cholesky => blocks
            .par_iter()
            .enumerate()
            .map(|(i, b)| cholesky_lower(b).map_err(|_| Error::NotPositiveDefinite { pivot: i }))
            .collect(),
    };
    Ok((roots?, report))
}

fn symmetrized<T: Real>(b: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    (b + b.transpose()) * half
}

/// Lower Cholesky factor, rejecting pivots below `1e-12 · max diag`.
pub(crate) fn cholesky_lower<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(T::zero(), |m, v| m.max(v));
    let floor = T::lit(1e-12) * max_diag;
    let chol =
        nalgebra::Cholesky::new(symmetrized(a)).ok_or(Error::NotPositiveDefinite { pivot: 0 })?;
    let l = chol.unpack();
    for i in 0..n {
        if l[(i, i)] * l[(i, i)] <= floor {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
    }
    Ok(l)
}
