//! Nonparametric variogram estimates from sampled fields.
//!
//! For a bin centered at `θ` with half-width `l`,
//!
//! ```text
//! γ̂(θ) = 1 / (2 |N_l(θ)|) · Σ_{{s,s'} ∈ N_l(θ)} (X(s) - X(s'))²
//! ```
//!
//! over unordered point pairs at geodesic distance within `l` of `θ`, so that
//! `E γ̂(θ) = σ²(1 - r)` averaged over the pairs in the bin. The space-time
//! estimator adds a time-lag window `||t - t'| - u| ≤ l'`.
//!
//! All accumulation is in `f64` with a fixed reduction order, so results are
//! independent of the thread count.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldRealization;
use crate::grid::{geodesic_distance, GridPoint, SphereGrid, TimeGrid};
use crate::scalar::Real;

/// Largest number of points accepted by the `O(n²)` estimators.
pub const MAX_POINTS: usize = 20_000;

/// Default number of spatial bins.
pub const DEFAULT_BINS: usize = 20;

/// Default spatial half-width `π/40`: with [`default_bin_centers`] the bins tile `[0, π]`.
pub const DEFAULT_BANDWIDTH: f64 = PI / 40.0;

/// `(k + 1/2)·π/20`, `k = 0..20`.
pub fn default_bin_centers() -> Vec<f64> {
    (0..DEFAULT_BINS)
        .map(|k| (k as f64 + 0.5) * PI / DEFAULT_BINS as f64)
        .collect()
}

/// Time-lag centers `k·H/T`, `k = 0..T`, and half-width `H/(2T)`.
pub fn default_lag_centers<T: Real>(tgrid: &TimeGrid<T>) -> (Vec<f64>, f64) {
    let step = tgrid.step().as_f64();
    (
        (0..tgrid.steps()).map(|k| k as f64 * step).collect(),
        0.5 * step,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    /// Nominal center.
    pub theta: f64,
    /// Mean geodesic distance of the pairs in the bin.
    pub mean_theta: f64,
    /// Nominal time-lag center (space-time estimates only).
    pub u: Option<f64>,
    pub mean_u: Option<f64>,
    pub gamma: f64,
    /// Number of unordered pairs.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariogramEstimate {
    /// Populated bins only, ordered by `u` then `θ`.
    pub bins: Vec<Bin>,
    pub bandwidth: f64,
    pub time_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sq: f64,
    theta: f64,
    u: f64,
    count: u64,
}

impl Acc {
    fn add(&mut self, other: &Acc) {
        self.sq += other.sq;
        self.theta += other.theta;
        self.u += other.u;
        self.count += other.count;
    }
}

fn validate(centers: &[f64], l: f64) -> Result<()> {
    if l <= 0.0 || !l.is_finite() {
        return Err(Error::domain(
            "bandwidth",
            format!("l = {l} must be positive"),
        ));
    }
    if let Some(c) = centers.iter().find(|c| !(0.0..=PI).contains(*c)) {
        return Err(Error::domain("bin center", format!("{c} outside [0, π]")));
    }
    Ok(())
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_POINTS {
        return Err(Error::CapExceeded {
            what: "variogram point set",
            dim: n,
            cap: MAX_POINTS,
        });
    }
    Ok(())
}

/// Bins whose window contains `x`.
fn bins_for(x: f64, centers: &[f64], l: f64) -> Vec<u16> {
    centers
        .iter()
        .enumerate()
        .filter(|(_, &c)| (x - c).abs() <= l)
        .map(|(k, _)| k as u16)
        .collect()
}

/// Sums per-chunk accumulators in chunk order.
fn reduce_in_order(parts: Vec<Vec<Acc>>, nbins: usize) -> Vec<Acc> {
    let mut total = vec![Acc::default(); nbins];
    for part in parts {
        for (t, p) in total.iter_mut().zip(&part) {
            t.add(p);
        }
    }
    total
}

fn finish(
    acc: Vec<Acc>,
    theta_centers: &[f64],
    u_centers: Option<&[f64]>,
    l: f64,
    l_time: Option<f64>,
) -> VariogramEstimate {
    let nt = theta_centers.len();
    let bins = acc
        .into_iter()
        .enumerate()
        .filter(|(_, a)| a.count > 0)
        .map(|(i, a)| {
            let n = a.count as f64;
            Bin {
                theta: theta_centers[i % nt],
                mean_theta: a.theta / n,
                u: u_centers.map(|u| u[i / nt]),
                mean_u: u_centers.map(|_| a.u / n),
                gamma: a.sq / (2.0 * n),
                count: a.count,
            }
        })
        .collect();
    VariogramEstimate {
        bins,
        bandwidth: l,
        time_bandwidth: l_time,
    }
}

const CHUNK: usize = 64;

/// Spatial estimate over all `N·M` grid points of one field (time slice 0
/// of a space-time field).
pub fn empirical_variogram<T: Real>(
    field: &FieldRealization<T>,
    grid: &SphereGrid<T>,
    centers: &[f64],
    l: f64,
) -> Result<VariogramEstimate> {
    validate(centers, l)?;
    let (n_lon, m) = (grid.n_lon(), grid.n_colat());
    if field.shape.n_lon != n_lon || field.shape.n_colat != m {
        return Err(Error::domain("field", "shape does not match the grid"));
    }
    let n = grid.len();
    check_size(n)?;
    let values: Vec<f64> = field.time_slice(0).iter().map(|v| v.as_f64()).collect();
    let table: Vec<f64> = grid.distance_table().iter().map(|d| d.as_f64()).collect();
    let table_bins: Vec<Vec<u16>> = table.iter().map(|&d| bins_for(d, centers, l)).collect();
    let nbins = centers.len();

    let parts: Vec<Vec<Acc>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Acc::default(); nbins];
            for p in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let (ra, a) = (p / m, p % m);
                for q in p + 1..n {
                    let (rb, b) = (q / m, q % m);
                    let t = ((rb + n_lon - ra) % n_lon) * m * m + a * m + b;
                    let d = values[p] - values[q];
                    for &k in &table_bins[t] {
                        let e = &mut acc[k as usize];
                        e.sq += d * d;
                        e.theta += table[t];
                        e.count += 1;
                    }
                }
            }
            acc
        })
        .collect();
    Ok(finish(
        reduce_in_order(parts, nbins),
        centers,
        None,
        l,
        None,
    ))
}

/// Spatial estimate over an arbitrary point set.
pub fn empirical_variogram_points<T: Real>(
    values: &[T],
    points: &[GridPoint<T>],
    centers: &[f64],
    l: f64,
) -> Result<VariogramEstimate> {
    validate(centers, l)?;
    if values.len() != points.len() {
        return Err(Error::domain("field", "one value per point required"));
    }
    let n = points.len();
    check_size(n)?;
    let nbins = centers.len();
    let parts: Vec<Vec<Acc>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Acc::default(); nbins];
            for p in c * CHUNK..((c + 1) * CHUNK).min(n) {
                for q in p + 1..n {
                    let theta = geodesic_distance(&points[p], &points[q]).as_f64();
                    let d = (values[p] - values[q]).as_f64();
                    for k in bins_for(theta, centers, l) {
                        let e = &mut acc[k as usize];
                        e.sq += d * d;
                        e.theta += theta;
                        e.count += 1;
                    }
                }
            }
            acc
        })
        .collect();
    Ok(finish(
        reduce_in_order(parts, nbins),
        centers,
        None,
        l,
        None,
    ))
}

/// Space-time estimate over all `T·N·M` points; bin `(θ_i, u_k)` is stored
/// at `k·len(θ) + i`.
pub fn empirical_st_variogram<T: Real>(
    field: &FieldRealization<T>,
    grid: &SphereGrid<T>,
    tgrid: &TimeGrid<T>,
    theta_centers: &[f64],
    u_centers: &[f64],
    l: f64,
    l_time: f64,
) -> Result<VariogramEstimate> {
    validate(theta_centers, l)?;
    if l_time <= 0.0 || !l_time.is_finite() {
        return Err(Error::domain(
            "time bandwidth",
            format!("l' = {l_time} must be positive"),
        ));
    }
    let (n_lon, m, steps) = (grid.n_lon(), grid.n_colat(), tgrid.steps());
    if field.shape.n_lon != n_lon || field.shape.n_colat != m || field.shape.n_time != steps {
        return Err(Error::domain("field", "shape does not match the grids"));
    }
    let ns = grid.len();
    check_size(ns * steps)?;
    let values: Vec<f64> = field.values.iter().map(|v| v.as_f64()).collect();
    let table: Vec<f64> = grid.distance_table().iter().map(|d| d.as_f64()).collect();
    let table_bins: Vec<Vec<u16>> = table
        .iter()
        .map(|&d| bins_for(d, theta_centers, l))
        .collect();
    let step = tgrid.step().as_f64();
    let lag_bins: Vec<Vec<u16>> = (0..steps)
        .map(|dt| bins_for(dt as f64 * step, u_centers, l_time))
        .collect();
    let nt = theta_centers.len();
    let nbins = nt * u_centers.len();

    // Each unordered space-time pair once: dt = 0 with p < q, dt > 0 with all (p, q).
    let parts: Vec<Vec<Acc>> = (0..ns.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Acc::default(); nbins];
            for p in c * CHUNK..((c + 1) * CHUNK).min(ns) {
                let (ra, a) = (p / m, p % m);
                for q in 0..ns {
                    let (rb, b) = (q / m, q % m);
                    let t = ((rb + n_lon - ra) % n_lon) * m * m + a * m + b;
                    if table_bins[t].is_empty() {
                        continue;
                    }
                    for (dt, ubins) in lag_bins.iter().enumerate() {
                        if ubins.is_empty() || (dt == 0 && q <= p) {
                            continue;
                        }
                        let mut sq = 0.0;
                        for t1 in 0..steps - dt {
                            let d = values[t1 * ns + p] - values[(t1 + dt) * ns + q];
                            sq += d * d;
                        }
                        let count = (steps - dt) as u64;
                        let u = dt as f64 * step;
                        for &ku in ubins {
                            for &kt in &table_bins[t] {
                                let e = &mut acc[ku as usize * nt + kt as usize];
                                e.sq += sq;
                                e.theta += table[t] * count as f64;
                                e.u += u * count as f64;
                                e.count += count;
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    Ok(finish(
        reduce_in_order(parts, nbins),
        theta_centers,
        Some(u_centers),
        l,
        Some(l_time),
    ))
}

/// Bin-wise mean of `γ̂` across replicate estimates made with the same bins.
pub fn mean_estimate(estimates: &[VariogramEstimate]) -> Result<VariogramEstimate> {
    let Some(first) = estimates.first() else {
        return Err(Error::domain("variogram estimates", "nothing to average"));
    };
    let mut out = first.clone();
    for e in &estimates[1..] {
        let same = e.bins.len() == out.bins.len()
            && e.bins
                .iter()
                .zip(&out.bins)
                .all(|(a, b)| a.theta == b.theta && a.u == b.u);
        if !same {
            return Err(Error::domain(
                "variogram estimates",
                "bins differ between replicates",
            ));
        }
        for (o, b) in out.bins.iter_mut().zip(&e.bins) {
            o.gamma += b.gamma;
        }
    }
    let k = estimates.len() as f64;
    for o in &mut out.bins {
        o.gamma /= k;
    }
    Ok(out)
}

/// CSV with columns `theta,u,gamma,count` (angles in degrees, `u` empty for
/// spatial estimates) plus `truth` when a reference curve is given. The
/// reference is evaluated at the bin's mean pair distance and lag.
pub fn write_csv<W: Write>(
    mut w: W,
    estimate: &VariogramEstimate,
    truth: Option<&dyn Fn(f64, f64) -> f64>,
) -> std::io::Result<()> {
    write!(w, "theta,u,gamma,count")?;
    if truth.is_some() {
        write!(w, ",truth")?;
    }
    writeln!(w)?;
    for b in &estimate.bins {
        let u = b.u.map(|u| u.to_string()).unwrap_or_default();
        write!(w, "{},{},{},{}", b.theta.to_degrees(), u, b.gamma, b.count)?;
        if let Some(f) = truth {
            write!(w, ",{}", f(b.mean_theta, b.mean_u.unwrap_or(0.0)))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
