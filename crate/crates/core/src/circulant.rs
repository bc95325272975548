//! Exact sampling on the sphere through the block circulant structure of the
//! grid covariance.
//!
//! On the regular grid the covariance between ring `a` and ring `b` only
//! depends on `(b - a) mod N`, so the `NM × NM` covariance is block
//! circulant with first block row `[Σ_1 … Σ_N]`. Its entrywise DFT over the
//! block index gives `N` real symmetric `M × M` blocks `Λ_k`, and
//!
//! ```text
//! S = N^{-1/2} (F_N ⊗ I_M) diag(Λ_k^{1/2}),   S S* = Σ.
//! ```
//!
//! Sampling draws a complex standard normal vector `Z` (independent unit
//! variance real and imaginary parts), so that `Re(SZ)` and `Im(SZ)` are two
//! independent `N(0, Σ)` fields. Only `O(N M²)` numbers are ever stored.

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::covmodels::SpatialModel;
use crate::error::{Error, Result};
use crate::field::{FieldRealization, FieldShape, Pair};
use crate::grid::SphereGrid;
use crate::linalg::{self, ClipReport, SqrtOptions};
use crate::rng::NormalStream;
use crate::scalar::Real;
use crate::spectral;

/// Largest factor dimension [`SpectralBlocks::materialize_factor`] will build.
pub const MATERIALIZE_CAP: usize = 4096;

/// First block row `[Σ_1 … Σ_N]`: `Σ_k` is the covariance between ring 0 and ring `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow<T: Real> {
    blocks: Vec<DMatrix<T>>,
}

impl<T: Real> BlockRow<T> {
    pub fn n_lon(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_colat(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    /// Wraps caller-provided blocks; they must all be square and the same size.
    pub fn from_blocks(blocks: Vec<DMatrix<T>>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::domain("block row", "no blocks"));
        };
        let m = first.nrows();
        if blocks.iter().any(|b| b.nrows() != m || b.ncols() != m) || m == 0 {
            return Err(Error::domain(
                "block row",
                "blocks must be square and equal-sized",
            ));
        }
        Ok(Self { blocks })
    }
}

/// `[Σ_k]_{j,l} = σ² r(θ(s_{0,j}, s_{k,l}))`. Offsets `k` and `N - k` share one
/// evaluation, so the row is exactly even.
pub fn assemble_block_row<T: Real>(grid: &SphereGrid<T>, model: &SpatialModel<T>) -> BlockRow<T> {
    let (n, m) = (grid.n_lon(), grid.n_colat());
    let half: Vec<DMatrix<T>> = (0..=n / 2)
        .into_par_iter()
        .map(|k| DMatrix::from_fn(m, m, |j, l| model.covariance(grid.ring_distance(k, j, l))))
        .collect();
    let blocks = (0..n).map(|k| half[k.min(n - k)].clone()).collect();
    BlockRow { blocks }
}

/// Spectral blocks `Λ` of a block circulant covariance (or of the torus-wrapped
/// space-time embedding, with `n_time > 1`), and optionally their square roots.
#[derive(Debug, Clone)]
pub struct SpectralBlocks<T: Real> {
    n_time: usize,
    n_lon: usize,
    blocks: Vec<DMatrix<T>>,
    roots: Option<Vec<DMatrix<T>>>,
    clip_report: Option<ClipReport>,
    imaginary_residue: f64,
}

impl<T: Real> SpectralBlocks<T> {
    pub(crate) fn from_row(blocks: &[DMatrix<T>], n_time: usize, n_lon: usize) -> Result<Self> {
        let (blocks, imaginary_residue) = spectral::transform_block_row(blocks, n_time, n_lon)?;
        Ok(Self {
            n_time,
            n_lon,
            blocks,
            roots: None,
            clip_report: None,
            imaginary_residue,
        })
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn n_colat(&self) -> usize {
        self.blocks[0].nrows()
    }

    /// `Λ` blocks, ordered `q·n_lon + k`.
    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    pub fn roots(&self) -> Option<&[DMatrix<T>]> {
        self.roots.as_deref()
    }

    pub fn clip_report(&self) -> Option<&ClipReport> {
        self.clip_report.as_ref()
    }

    /// Largest discarded imaginary part, relative to the largest block-row entry.
    pub fn imaginary_residue(&self) -> f64 {
        self.imaginary_residue
    }

    /// Populates the square roots `Λ_k^{1/2}`.
    pub fn with_sqrt(mut self, opts: &SqrtOptions) -> Result<Self> {
        let (roots, report) = linalg::sqrt_blocks(&self.blocks, opts)?;
        self.roots = Some(roots);
        self.clip_report = Some(report);
        Ok(self)
    }

    pub(crate) fn require_roots(&self) -> Result<&[DMatrix<T>]> {
        self.roots.as_deref().ok_or(Error::MissingSqrt)
    }

    /// The dense complex factor `S` with `S S* = Σ` (or the embedded `Ψ̃`).
    /// Refuses dimensions above [`MATERIALIZE_CAP`]; meant for verification.
    pub fn materialize_factor(&self) -> Result<DMatrix<Complex<T>>> {
        let roots = self.require_roots()?;
        let dim = self.n_time * self.n_lon * self.n_colat();
        if dim > MATERIALIZE_CAP {
            return Err(Error::CapExceeded {
                what: "circulant factor",
                dim,
                cap: MATERIALIZE_CAP,
            });
        }
        Ok(spectral::materialize(roots, self.n_time, self.n_lon))
    }

    /// Rebuilds the dense block circulant matrix `(1/B)(F ⊗ I) Λ (F ⊗ I)*`
    /// from the spectral blocks (`B` = number of blocks). Verification only.
    pub fn reconstruct_dense(&self) -> Result<DMatrix<T>> {
        let dim = self.n_time * self.n_lon * self.n_colat();
        if dim > MATERIALIZE_CAP {
            return Err(Error::CapExceeded {
                what: "reconstructed covariance",
                dim,
                cap: MATERIALIZE_CAP,
            });
        }
        let (nt, nl, m) = (self.n_time, self.n_lon, self.n_colat());
        let nb = nt * nl;
        // Block lag (dq, dk) entry: (1/B) Σ_{p,s} Λ_{p,s} w^{-(dq p)/Q - (dk s)/N}.
        let lag_blocks: Vec<DMatrix<T>> = (0..nb)
            .map(|lag| {
                let (dq, dk) = (lag / nl, lag % nl);
                let mut acc = DMatrix::<T>::zeros(m, m);
                for p in 0..nt {
                    for s in 0..nl {
                        let ang = T::two_pi()
                            * (T::from_usize_lossy((dq * p) % nt) / T::from_usize_lossy(nt)
                                + T::from_usize_lossy((dk * s) % nl) / T::from_usize_lossy(nl));
                        acc += &self.blocks[p * nl + s] * ang.cos();
                    }
                }
                acc / T::from_usize_lossy(nb)
            })
            .collect();
        let mut out = DMatrix::<T>::zeros(dim, dim);
        for t in 0..nt {
            for a in 0..nl {
                for q in 0..nt {
                    for k in 0..nl {
                        let lag = ((q + nt - t) % nt) * nl + (k + nl - a) % nl;
                        out.view_mut(((t * nl + a) * m, (q * nl + k) * m), (m, m))
                            .copy_from(&lag_blocks[lag]);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Entrywise length-`N` DFT of the block row. Fails with `RealnessViolation`
/// when the row is not even.
pub fn block_diagonalize<T: Real>(row: &BlockRow<T>) -> Result<SpectralBlocks<T>> {
    SpectralBlocks::from_row(&row.blocks, 1, row.n_lon())
}

/// Square roots of every `Λ_k` per `opts` (eigen with clipping by default).
pub fn sqrt_blocks<T: Real>(
    spectral: SpectralBlocks<T>,
    opts: &SqrtOptions,
) -> Result<SpectralBlocks<T>> {
    spectral.with_sqrt(opts)
}

/// Both realizations from complex draw `pair_index`.
pub fn sample_pair<T: Real>(
    spectral: &SpectralBlocks<T>,
    seed: u64,
    pair_index: u64,
) -> Result<[FieldRealization<T>; 2]> {
    let roots = spectral.require_roots()?;
    if spectral.n_time != 1 {
        return Err(Error::domain(
            "spectral blocks",
            "space-time blocks must be sampled with sample_spheretime",
        ));
    }
    let mut stream = NormalStream::new(seed, pair_index);
    let (re, im) = spectral::synthesize(roots, 1, spectral.n_lon, 1, &mut stream);
    let shape = FieldShape::spatial(spectral.n_lon, spectral.n_colat());
    Ok(pair_fields(re, im, shape, seed, pair_index))
}

pub(crate) fn pair_fields<T>(
    re: Vec<T>,
    im: Vec<T>,
    shape: FieldShape,
    seed: u64,
    replicate: u64,
) -> [FieldRealization<T>; 2] {
    [
        FieldRealization {
            values: re,
            shape,
            seed,
            replicate,
            pair: Pair::A,
        },
        FieldRealization {
            values: im,
            shape,
            seed,
            replicate,
            pair: Pair::B,
        },
    ]
}

/// `count` realizations of `N(0, Σ)` from `⌈count/2⌉` complex draws.
/// Draw `p` uses random stream `p`, so output is reproducible per seed and
/// any replicate can be regenerated alone with [`sample_pair`].
pub fn sample_sphere<T: Real>(
    spectral: &SpectralBlocks<T>,
    seed: u64,
    count: usize,
) -> Result<Vec<FieldRealization<T>>> {
    collect_pairs(count, |p| sample_pair(spectral, seed, p))
}

pub(crate) fn collect_pairs<T: Real>(
    count: usize,
    draw: impl Fn(u64) -> Result<[FieldRealization<T>; 2]> + Sync + Send,
) -> Result<Vec<FieldRealization<T>>> {
    let pairs = count.div_ceil(2) as u64;
    let drawn: Result<Vec<[FieldRealization<T>; 2]>> =
        (0..pairs).into_par_iter().map(draw).collect();
    let mut out: Vec<FieldRealization<T>> = drawn?.into_iter().flatten().collect();
    out.truncate(count);
    Ok(out)
}

/// Assembly, diagonalization and square roots in one step.
pub fn prepare<T: Real>(
    grid: &SphereGrid<T>,
    model: &SpatialModel<T>,
    opts: &SqrtOptions,
) -> Result<SpectralBlocks<T>> {
    block_diagonalize(&assemble_block_row(grid, model))?.with_sqrt(opts)
}
