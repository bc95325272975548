//! Exact sampling on sphere x time by torus-wrapping the time axis.
//!
//! For `T` time steps the time lags are reflected through the tent map
//! `g(τ) = τ` for `τ ≤ κT`, `2κT - τ` beyond (in units of `H/T`), giving a
//! circulant time axis of length `Q = 2κT`. The embedded covariance `Ψ̃` is
//! then block circulant in both time and longitude and is diagonalized by a
//! two-dimensional DFT over the `(τ, k)` block axes:
//!
//! ```text
//! S = (QN)^{-1/2} (F_Q ⊗ F_N ⊗ I_M) diag(Υ^{1/2}),   S S* = Ψ̃.
//! ```
//!
//! The first `T` time blocks of `SZ` carry the law of the unembedded field.
//! The embedding is not guaranteed to be positive semidefinite; negative
//! eigenvalues are clipped and reported, and a larger `κ` is the remedy.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::circulant::{collect_pairs, pair_fields, SpectralBlocks};
use crate::covmodels::SpaceTimeModel;
use crate::error::{Error, Result};
use crate::field::{FieldRealization, FieldShape};
use crate::grid::{SphereGrid, TimeGrid};
use crate::linalg::{NegativePolicy, SqrtOptions};
use crate::rng::NormalStream;
use crate::scalar::Real;
use crate::spectral;

/// Padding factor `κ` and the resulting embedded time length `Q = 2κT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    kappa: usize,
    steps: usize,
}

impl EmbeddingConfig {
    pub fn new(kappa: usize, steps: usize) -> Result<Self> {
        if kappa < 1 {
            return Err(Error::domain("embedding", "kappa must be at least 1"));
        }
        if steps < 1 {
            return Err(Error::domain("embedding", "T must be at least 1"));
        }
        Ok(Self { kappa, steps })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of embedded time blocks.
    pub fn embedded_len(&self) -> usize {
        2 * self.kappa * self.steps
    }

    /// Reflected lag index: `τ` up to `κT`, `2κT - τ` beyond.
    fn lag_index(&self, tau: usize) -> usize {
        let peak = self.kappa * self.steps;
        if tau <= peak {
            tau
        } else {
            2 * peak - tau
        }
    }
}

/// Torus-wrapped time lag `g(τ)` in time units, for `0 ≤ τ ≤ 2κT - 1`.
pub fn reflect_time<T: Real>(tau: usize, steps: usize, horizon: T, kappa: usize) -> Result<T> {
    let cfg = EmbeddingConfig::new(kappa, steps)?;
    if tau >= cfg.embedded_len() {
        return Err(Error::domain(
            "time index",
            format!("τ = {tau} outside [0, {}]", cfg.embedded_len() - 1),
        ));
    }
    Ok(T::from_usize_lossy(cfg.lag_index(tau)) * horizon / T::from_usize_lossy(steps))
}

/// Blocks `Ψ_{0,k}(g(τ))` for `τ < Q`, `k < N`, stored at `τ·N + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeBlockRow<T: Real> {
    cfg: EmbeddingConfig,
    n_lon: usize,
    blocks: Vec<DMatrix<T>>,
}

impl<T: Real> SpaceTimeBlockRow<T> {
    pub fn config(&self) -> EmbeddingConfig {
        self.cfg
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn block(&self, tau: usize, k: usize) -> &DMatrix<T> {
        &self.blocks[tau * self.n_lon + k]
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }
}

pub fn assemble_st_block_row<T: Real>(
    grid: &SphereGrid<T>,
    tgrid: &TimeGrid<T>,
    cfg: &EmbeddingConfig,
    model: &SpaceTimeModel<T>,
) -> Result<SpaceTimeBlockRow<T>> {
    if cfg.steps() != tgrid.steps() {
        return Err(Error::domain(
            "embedding",
            format!(
                "config built for T = {}, time grid has T = {}",
                cfg.steps(),
                tgrid.steps()
            ),
        ));
    }
    let (n, m) = (grid.n_lon(), grid.n_colat());
    let q = cfg.embedded_len();
    let peak = cfg.kappa() * cfg.steps();
    let step = tgrid.step();
    // Distinct (lag, offset) pairs only; the rest are exact copies.
    let distinct: Vec<(usize, usize)> = (0..=peak)
        .flat_map(|lag| (0..=n / 2).map(move |k| (lag, k)))
        .collect();
    let computed: Vec<DMatrix<T>> = distinct
        .par_iter()
        .map(|&(lag, k)| {
            let u = T::from_usize_lossy(lag) * step;
            DMatrix::from_fn(m, m, |j, l| {
                model.covariance(grid.ring_distance(k, j, l), u)
            })
        })
        .collect();
    let width = n / 2 + 1;
    let blocks = (0..q)
        .flat_map(|tau| (0..n).map(move |k| (tau, k)))
        .map(|(tau, k)| computed[cfg.lag_index(tau) * width + k.min(n - k)].clone())
        .collect();
    Ok(SpaceTimeBlockRow {
        cfg: *cfg,
        n_lon: n,
        blocks,
    })
}

/// Spectral blocks `Υ` of the embedded covariance plus the retained length `T`.
#[derive(Debug, Clone)]
pub struct SpaceTimeSpectralBlocks<T: Real> {
    inner: SpectralBlocks<T>,
    cfg: EmbeddingConfig,
}

impl<T: Real> SpaceTimeSpectralBlocks<T> {
    pub fn spectral(&self) -> &SpectralBlocks<T> {
        &self.inner
    }

    pub fn config(&self) -> EmbeddingConfig {
        self.cfg
    }

    /// `Υ_{q,k}` blocks, ordered `q·N + k`.
    pub fn blocks(&self) -> &[DMatrix<T>] {
        self.inner.blocks()
    }

    pub fn with_sqrt(self, opts: &SqrtOptions) -> Result<Self> {
        Ok(Self {
            inner: self.inner.with_sqrt(opts)?,
            cfg: self.cfg,
        })
    }

    /// Default policy for the embedding: clip at 1e-12 relative, warn when the
    /// clipped negative mass passes 1% of the trace, never fail.
    pub fn default_sqrt_options() -> SqrtOptions {
        SqrtOptions {
            negative: NegativePolicy::Report {
                warn_fraction: 0.01,
            },
            ..SqrtOptions::default()
        }
    }
}

/// Two-dimensional DFT over the `(τ, k)` block axes.
pub fn st_block_diagonalize<T: Real>(
    row: &SpaceTimeBlockRow<T>,
) -> Result<SpaceTimeSpectralBlocks<T>> {
    Ok(SpaceTimeSpectralBlocks {
        inner: SpectralBlocks::from_row(&row.blocks, row.cfg.embedded_len(), row.n_lon)?,
        cfg: row.cfg,
    })
}

/// Both realizations from complex draw `pair_index`, each `T·N·M` values.
pub fn sample_spacetime_pair<T: Real>(
    spectral: &SpaceTimeSpectralBlocks<T>,
    seed: u64,
    pair_index: u64,
) -> Result<[FieldRealization<T>; 2]> {
    let inner = &spectral.inner;
    let roots = inner.require_roots()?;
    let steps = spectral.cfg.steps();
    let mut stream = NormalStream::new(seed, pair_index);
    let (re, im) = spectral::synthesize(roots, inner.n_time(), inner.n_lon(), steps, &mut stream);
    let shape = FieldShape::spacetime(steps, inner.n_lon(), inner.n_colat());
    Ok(pair_fields(re, im, shape, seed, pair_index))
}

/// `count` realizations on the `T·N·M` space-time grid from `⌈count/2⌉` draws.
pub fn sample_spheretime<T: Real>(
    spectral: &SpaceTimeSpectralBlocks<T>,
    seed: u64,
    count: usize,
) -> Result<Vec<FieldRealization<T>>> {
    collect_pairs(count, |p| sample_spacetime_pair(spectral, seed, p))
}

/// Assembly, diagonalization and square roots with the embedding's default policy.
pub fn prepare_spacetime<T: Real>(
    grid: &SphereGrid<T>,
    tgrid: &TimeGrid<T>,
    cfg: &EmbeddingConfig,
    model: &SpaceTimeModel<T>,
) -> Result<SpaceTimeSpectralBlocks<T>> {
    st_block_diagonalize(&assemble_st_block_row(grid, tgrid, cfg, model)?)?
        .with_sqrt(&SpaceTimeSpectralBlocks::<T>::default_sqrt_options())
}
