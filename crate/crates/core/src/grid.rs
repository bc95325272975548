//! Regular longitude x colatitude lattices on the unit sphere and regular time grids.
//!
//! Grid indices are zero-based in the API: ring `i` sits at longitude
//! `2π(i + 1)/N` and colatitude index `j` at `π(j + 1)/M`. The last ring is at
//! longitude `2π` and the last colatitude is the south pole, where all `N`
//! points of that row coincide. The north pole is not on the grid.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point on the unit sphere in angular and Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint<T> {
    pub longitude: T,
    pub colatitude: T,
    pub cartesian: [T; 3],
}

impl<T: Real> GridPoint<T> {
    pub fn new(longitude: T, colatitude: T) -> Self {
        let (sl, cl) = longitude.sin_cos();
        let (sp, cp) = colatitude.sin_cos();
        Self {
            longitude,
            colatitude,
            cartesian: [cl * sp, sl * sp, cp],
        }
    }
}

/// Great-circle angle between two points, in `[0, π]`.
///
/// Haversine form: `hav θ = hav(Δφ) + sin φ₁ sin φ₂ hav(Δλ)`. Unlike `acos` of
/// the inner product it keeps full relative accuracy for nearby points, and
/// it is exactly symmetric in its arguments.
pub fn geodesic_distance<T: Real>(a: &GridPoint<T>, b: &GridPoint<T>) -> T {
    let half = T::lit(0.5);
    let dphi = ((a.colatitude - b.colatitude) * half).sin();
    let dlam = ((b.longitude - a.longitude) * half).sin();
    haversine_angle(dphi * dphi + a.colatitude.sin() * b.colatitude.sin() * dlam * dlam)
}

/// `θ` from `h = sin²(θ/2)`, with `h` clamped to `[0, 1]`.
#[inline]
pub(crate) fn haversine_angle<T: Real>(h: T) -> T {
    let h = h.clamp(T::zero(), T::one());
    let two = T::lit(2.0);
    two * h.sqrt().atan2((T::one() - h).sqrt())
}

/// The regular grid of `N` longitudes by `M` colatitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid<T> {
    longitudes: Vec<T>,
    colatitudes: Vec<T>,
    // sin²(πm/N) for m = 0..N with m folded onto min(m, N - m) so that offsets
    // m and N - m share bit-identical values.
    ring_hav: Vec<T>,
    // sin²(φ_a - φ_b)/2, indexed a·M + b.
    colat_hav: Vec<T>,
    // sin φ_j folded about the equator; exactly 0 at the south pole.
    colat_sin: Vec<T>,
}

impl<T: Real> SphereGrid<T> {
    pub fn new(n_lon: usize, n_colat: usize) -> Result<Self> {
        if n_lon < 2 {
            return Err(Error::domain("grid", format!("N = {n_lon}, need N >= 2")));
        }
        if n_colat < 2 {
            return Err(Error::domain("grid", format!("M = {n_colat}, need M >= 2")));
        }
        let two_pi = T::two_pi();
        let nl = T::from_usize_lossy(n_lon);
        let nc = T::from_usize_lossy(n_colat);
        let longitudes = (1..=n_lon)
            .map(|i| two_pi * T::from_usize_lossy(i) / nl)
            .collect();
        let colatitudes = (1..=n_colat)
            .map(|j| T::pi() * T::from_usize_lossy(j) / nc)
            .collect();
        let ring_hav = (0..n_lon)
            .map(|m| {
                let folded = m.min(n_lon - m);
                let s = (T::pi() * T::from_usize_lossy(folded) / nl).sin();
                s * s
            })
            .collect();
        let colat_hav = (0..n_colat * n_colat)
            .map(|ab| {
                let (a, b) = (ab / n_colat, ab % n_colat);
                let d = T::pi() * (T::from_usize_lossy(a) - T::from_usize_lossy(b)) / (nc + nc);
                let s = d.sin();
                s * s
            })
            .collect();
        let colat_sin = (1..=n_colat)
            .map(|j| (T::pi() * T::from_usize_lossy(j.min(n_colat - j)) / nc).sin())
            .collect();
        Ok(Self {
            longitudes,
            colatitudes,
            ring_hav,
            colat_hav,
            colat_sin,
        })
    }

    /// Number of longitudes (rings), `N`.
    pub fn n_lon(&self) -> usize {
        self.longitudes.len()
    }

    /// Number of colatitudes per ring, `M`.
    pub fn n_colat(&self) -> usize {
        self.colatitudes.len()
    }

    /// Total number of grid points, `N·M`, counting every pole copy.
    pub fn len(&self) -> usize {
        self.n_lon() * self.n_colat()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn longitudes(&self) -> &[T] {
        &self.longitudes
    }

    pub fn colatitudes(&self) -> &[T] {
        &self.colatitudes
    }

    pub fn point(&self, ring: usize, colat: usize) -> GridPoint<T> {
        GridPoint::new(self.longitudes[ring], self.colatitudes[colat])
    }

    /// Flat index of `(ring, colat)`: colatitude fastest, then ring.
    #[inline]
    pub fn index(&self, ring: usize, colat: usize) -> usize {
        ring * self.n_colat() + colat
    }

    /// All points in storage order (colatitude fastest, then ring).
    pub fn points(&self) -> impl Iterator<Item = GridPoint<T>> + '_ {
        (0..self.n_lon()).flat_map(move |i| (0..self.n_colat()).map(move |j| self.point(i, j)))
    }

    /// Distance between colatitude `a` on one ring and colatitude `b` on the
    /// ring `offset` positions further east.
    ///
    /// Depends on the rings only through `offset mod N`, and offsets `m` and
    /// `N - m` give bit-identical results.
    #[inline]
    pub fn ring_distance(&self, offset: usize, a: usize, b: usize) -> T {
        let m = self.n_colat();
        let cross = self.colat_sin[a] * self.colat_sin[b];
        haversine_angle(self.colat_hav[a * m + b] + cross * self.ring_hav[offset % self.n_lon()])
    }

    /// Distance table indexed `[offset][a][b]`, `N·M²` entries.
    pub(crate) fn distance_table(&self) -> Vec<T> {
        let (n, m) = (self.n_lon(), self.n_colat());
        let sines = &self.colat_sin;
        let mut out = Vec::with_capacity(n * m * m);
        for off in 0..n {
            let rh = self.ring_hav[off];
            for a in 0..m {
                for b in 0..m {
                    out.push(haversine_angle(
                        self.colat_hav[a * m + b] + sines[a] * sines[b] * rh,
                    ));
                }
            }
        }
        out
    }
}

/// Regular time grid `t_τ = τH/T`, `τ = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    times: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(steps: usize, horizon: T) -> Result<Self> {
        if steps < 1 {
            return Err(Error::domain("time grid", "T must be at least 1"));
        }
        if horizon <= T::zero() || !horizon.is_finite() {
            return Err(Error::domain(
                "time grid",
                format!("horizon H = {horizon} must be positive"),
            ));
        }
        let t = T::from_usize_lossy(steps);
        let times = (1..=steps)
            .map(|tau| T::from_usize_lossy(tau) * horizon / t)
            .collect();
        Ok(Self { horizon, times })
    }

    /// Number of time steps, `T`.
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn step(&self) -> T {
        self.horizon / T::from_usize_lossy(self.steps())
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }
}
