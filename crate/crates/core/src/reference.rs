//! Dense covariance assembly and direct factorization samplers.
//!
//! These exist to check the circulant path and to serve as the benchmark
//! baseline. Every dense operation is guarded by a dimension cap.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::covmodels::{SpaceTimeModel, SpatialModel};
use crate::error::{Error, Result};
use crate::field::{FieldRealization, FieldShape, Pair};
use crate::grid::{SphereGrid, TimeGrid};
use crate::linalg::{self, SqrtOptions};
use crate::rng::NormalStream;
use crate::scalar::Real;
use crate::stcirculant::{reflect_time, EmbeddingConfig, SpaceTimeSpectralBlocks};

/// Default largest dense dimension.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Upper bound on the dimension of dense matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseCap {
    pub max_dim: usize,
}

impl Default for DenseCap {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_DENSE_CAP,
        }
    }
}

impl DenseCap {
    /// Largest `n` such that one `n × n` matrix of `T` fits in `bytes`.
    pub fn from_memory_bytes<T>(bytes: u64) -> Self {
        let entries = bytes / std::mem::size_of::<T>() as u64;
        Self {
            max_dim: (entries as f64).sqrt().floor() as usize,
        }
    }

    fn check(&self, what: &'static str, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            Err(Error::CapExceeded {
                what,
                dim,
                cap: self.max_dim,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseOrigin {
    /// `Σ` over the `N·M` grid.
    Spatial,
    /// `Ψ` over the `T·N·M` space-time grid.
    SpaceTime,
    /// The torus-wrapped `Ψ̃` over `Q·N·M` points.
    Embedded,
}

/// A dense covariance matrix in `X_Ω` point order (colatitude fastest, then
/// ring, then time).
///
/// `expand`, when present, maps each output grid index to a row of the
/// matrix: the matrix then covers distinct points only and coincident grid
/// points share a row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCovariance<T: Real> {
    matrix: DMatrix<T>,
    origin: DenseOrigin,
    shape: FieldShape,
    expand: Option<Vec<usize>>,
}

impl<T: Real> DenseCovariance<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn origin(&self) -> DenseOrigin {
        self.origin
    }

    /// Layout of fields sampled from this covariance.
    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn expansion(&self) -> Option<&[usize]> {
        self.expand.as_deref()
    }
}

fn symmetric_from_fn<T: Real>(n: usize, entry: impl Fn(usize, usize) -> T + Sync) -> DMatrix<T> {
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|p| (0..=p).map(|q| entry(p, q)).collect())
        .collect();
    let mut out = DMatrix::zeros(n, n);
    for (p, row) in rows.iter().enumerate() {
        for (q, &v) in row.iter().enumerate() {
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    out
}

/// `Σ_{p,q} = σ² r(θ(s_p, s_q))` over all `N·M` grid points.
pub fn assemble_dense_spatial<T: Real>(
    grid: &SphereGrid<T>,
    model: &SpatialModel<T>,
    cap: DenseCap,
) -> Result<DenseCovariance<T>> {
    cap.check("spatial covariance", grid.len())?;
    let m = grid.n_colat();
    let n_lon = grid.n_lon();
    let matrix = symmetric_from_fn(grid.len(), |p, q| {
        let (ra, a) = (p / m, p % m);
        let (rb, b) = (q / m, q % m);
        model.covariance(grid.ring_distance((rb + n_lon - ra) % n_lon, a, b))
    });
    Ok(DenseCovariance {
        matrix,
        origin: DenseOrigin::Spatial,
        shape: FieldShape::spatial(n_lon, m),
        expand: None,
    })
}

/// Grid indices with the `N` south pole copies collapsed onto one point.
/// Returns `(representatives, expand)`: `representatives[r]` is a grid index
/// for distinct point `r`, `expand[i]` the distinct point of grid index `i`.
pub fn collapse_south_pole<T: Real>(grid: &SphereGrid<T>) -> (Vec<usize>, Vec<usize>) {
    let (n, m) = (grid.n_lon(), grid.n_colat());
    let mut reps = Vec::with_capacity(n * (m - 1) + 1);
    let mut expand = vec![0; n * m];
    let mut pole = None;
    for ring in 0..n {
        for j in 0..m {
            let idx = grid.index(ring, j);
            if j == m - 1 {
                let r = *pole.get_or_insert_with(|| {
                    reps.push(idx);
                    reps.len() - 1
                });
                expand[idx] = r;
            } else {
                reps.push(idx);
                expand[idx] = reps.len() - 1;
            }
        }
    }
    (reps, expand)
}

/// `Σ` restricted to distinct points: the `N` pole copies become one row,
/// so the matrix is positive definite for a strictly valid model. Samples
/// are expanded back onto the full grid.
pub fn assemble_dense_distinct<T: Real>(
    grid: &SphereGrid<T>,
    model: &SpatialModel<T>,
    cap: DenseCap,
) -> Result<DenseCovariance<T>> {
    let (reps, expand) = collapse_south_pole(grid);
    cap.check("distinct-point covariance", reps.len())?;
    let (n_lon, m) = (grid.n_lon(), grid.n_colat());
    let matrix = symmetric_from_fn(reps.len(), |p, q| {
        let (ra, a) = (reps[p] / m, reps[p] % m);
        let (rb, b) = (reps[q] / m, reps[q] % m);
        model.covariance(grid.ring_distance((rb + n_lon - ra) % n_lon, a, b))
    });
    Ok(DenseCovariance {
        matrix,
        origin: DenseOrigin::Spatial,
        shape: FieldShape::spatial(n_lon, m),
        expand: Some(expand),
    })
}

fn spacetime_matrix<T: Real>(
    grid: &SphereGrid<T>,
    n_time: usize,
    lag: impl Fn(usize, usize) -> T + Sync,
    model: &SpaceTimeModel<T>,
) -> DMatrix<T> {
    let (n_lon, m) = (grid.n_lon(), grid.n_colat());
    let per_time = n_lon * m;
    symmetric_from_fn(n_time * per_time, |p, q| {
        let (tp, sp) = (p / per_time, p % per_time);
        let (tq, sq) = (q / per_time, q % per_time);
        let (ra, a) = (sp / m, sp % m);
        let (rb, b) = (sq / m, sq % m);
        let theta = grid.ring_distance((rb + n_lon - ra) % n_lon, a, b);
        model.covariance(theta, lag(tp, tq))
    })
}

/// `Ψ` with entries `C(θ, |t_p - t_q|)` over the `T·N·M` space-time grid.
pub fn assemble_dense_spacetime<T: Real>(
    grid: &SphereGrid<T>,
    tgrid: &TimeGrid<T>,
    model: &SpaceTimeModel<T>,
    cap: DenseCap,
) -> Result<DenseCovariance<T>> {
    let steps = tgrid.steps();
    cap.check("space-time covariance", steps * grid.len())?;
    let step = tgrid.step();
    let matrix = spacetime_matrix(
        grid,
        steps,
        |a, b| T::from_usize_lossy(a.abs_diff(b)) * step,
        model,
    );
    Ok(DenseCovariance {
        matrix,
        origin: DenseOrigin::SpaceTime,
        shape: FieldShape::spacetime(steps, grid.n_lon(), grid.n_colat()),
        expand: None,
    })
}

/// The torus-wrapped `Ψ̃`: time blocks `(a, b)` use lag `g(|b - a|)`.
pub fn assemble_dense_embedded<T: Real>(
    grid: &SphereGrid<T>,
    tgrid: &TimeGrid<T>,
    cfg: &EmbeddingConfig,
    model: &SpaceTimeModel<T>,
    cap: DenseCap,
) -> Result<DenseCovariance<T>> {
    let q = cfg.embedded_len();
    cap.check("embedded covariance", q * grid.len())?;
    let lags: Vec<T> = (0..q)
        .map(|tau| reflect_time(tau, cfg.steps(), tgrid.horizon(), cfg.kappa()))
        .collect::<Result<_>>()?;
    let matrix = spacetime_matrix(grid, q, |a, b| lags[a.abs_diff(b)], model);
    Ok(DenseCovariance {
        matrix,
        origin: DenseOrigin::Embedded,
        shape: FieldShape::spacetime(q, grid.n_lon(), grid.n_colat()),
        expand: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseMethod {
    /// Lower Cholesky factor; requires strict positive definiteness.
    Triangular,
    /// Symmetric square root by eigendecomposition with clipping.
    Eigen,
}

/// Real factor `S` with `S Sᵀ = cov`, carrying the covariance's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFactor<T: Real> {
    matrix: DMatrix<T>,
    shape: FieldShape,
    expand: Option<Vec<usize>>,
}

impl<T: Real> DenseFactor<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    /// Wraps an explicit factor for fields of the given shape.
    pub fn from_matrix(matrix: DMatrix<T>, shape: FieldShape) -> Result<Self> {
        if matrix.nrows() != shape.len() || !matrix.is_square() {
            return Err(Error::domain(
                "dense factor",
                format!(
                    "{}×{} factor for {} points",
                    matrix.nrows(),
                    matrix.ncols(),
                    shape.len()
                ),
            ));
        }
        Ok(Self {
            matrix,
            shape,
            expand: None,
        })
    }
}

pub fn dense_factor<T: Real>(
    cov: &DenseCovariance<T>,
    method: DenseMethod,
) -> Result<DenseFactor<T>> {
    let matrix = match method {
        DenseMethod::Triangular => linalg::cholesky_lower(&cov.matrix)?,
        DenseMethod::Eigen => {
            let opts = match cov.origin {
                DenseOrigin::Embedded => SpaceTimeSpectralBlocks::<T>::default_sqrt_options(),
                _ => SqrtOptions::default(),
            };
            let (mut roots, _) = linalg::sqrt_blocks(std::slice::from_ref(&cov.matrix), &opts)?;
            roots.pop().expect("one block in, one root out")
        }
    };
    Ok(DenseFactor {
        matrix,
        shape: cov.shape,
        expand: cov.expand.clone(),
    })
}

/// `count` fields `Y = S Z` with real standard normal `Z`; replicate `r`
/// draws from random stream `r`.
pub fn dense_sample<T: Real>(
    factor: &DenseFactor<T>,
    seed: u64,
    count: usize,
) -> Vec<FieldRealization<T>> {
    (0..count as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = NormalStream::new(seed, r);
            let n = factor.matrix.ncols();
            let z = DVector::from_fn(n, |_, _| T::lit(stream.next_normal()));
            let y = &factor.matrix * z;
            let values = match &factor.expand {
                Some(expand) => expand.iter().map(|&i| y[i]).collect(),
                None => y.as_slice().to_vec(),
            };
            FieldRealization {
                values,
                shape: factor.shape,
                seed,
                replicate: r,
                pair: Pair::A,
            }
        })
        .collect()
}
