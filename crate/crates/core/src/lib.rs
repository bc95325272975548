//! Exact simulation of isotropic Gaussian random fields on the sphere and on
//! the sphere cross time.
//!
//! On a regular longitude × colatitude grid the covariance matrix of an
//! isotropic field is block circulant, so it factors through `N` small
//! `M × M` blocks and an FFT over longitude. Space-time fields use a
//! torus-wrapped embedding in time and a two-dimensional FFT.
//!
//! ```
//! use spherefield::{circulant, SphereGrid64, SpatialModel64, SqrtOptions};
//!
//! let grid = SphereGrid64::new(36, 18).unwrap();
//! let model = SpatialModel64::exponential(0.5243).unwrap();
//! let spectral = circulant::prepare(&grid, &model, &SqrtOptions::default()).unwrap();
//! let fields = circulant::sample_sphere(&spectral, 7, 2).unwrap();
//! assert_eq!(fields[0].values.len(), 36 * 18);
//! ```
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases fix the scalar to `f64`.

pub mod circulant;
pub mod covmodels;
pub mod error;
pub mod field;
pub mod fieldio;
pub mod grid;
pub mod linalg;
pub mod modelspec;
pub mod reference;
pub mod rng;
mod scalar;
mod special;
mod spectral;
pub mod stcirculant;
pub mod variogram;

pub use covmodels::{
    calibrate_range, Calibration, SpaceTimeModel, SpatialKind, SpatialModel, TemporalCorrelation,
};
pub use error::{Error, Result};
pub use field::{FieldRealization, FieldShape, Pair};
pub use grid::{geodesic_distance, GridPoint, SphereGrid, TimeGrid};
pub use linalg::{ClipReport, NegativePolicy, SqrtMethod, SqrtOptions};
pub use modelspec::{Model, ModelSpec};
pub use rng::NormalStream;
pub use scalar::Real;
pub use stcirculant::EmbeddingConfig;

pub type SphereGrid64 = SphereGrid<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type SpatialModel64 = SpatialModel<f64>;
pub type SpaceTimeModel64 = SpaceTimeModel<f64>;
pub type FieldRealization64 = FieldRealization<f64>;
pub type SpectralBlocks64 = circulant::SpectralBlocks<f64>;
pub type SpaceTimeSpectralBlocks64 = stcirculant::SpaceTimeSpectralBlocks<f64>;

/// Matérn correlation `2^{1-ν}/Γ(ν) x^ν K_ν(x)` for `ν ∈ (0, 1/2]`, `x ≥ 0`.
pub fn matern_correlation(nu: f64, x: f64) -> f64 {
    special::matern_correlation(nu, x)
}
