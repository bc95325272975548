//! Isotropic correlation models on the sphere and on sphere x time.
//!
//! Parameter ranges are the known validity classes on `S²` (geodesic
//! distance): generalized Cauchy needs `α ∈ (0, 1]`, Matérn needs
//! `ν ∈ (0, 1/2]`. They are enforced at construction; no spectral test is
//! run on the resulting function.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialKind<T> {
    /// `exp(-θ/φ₀)`
    Exponential { range: T },
    /// `(1 + (θ/φ₁)^α)^(-β/α)`
    GeneralizedCauchy { range: T, alpha: T, beta: T },
    /// `2^{1-ν}/Γ(ν) (θ/φ₂)^ν K_ν(θ/φ₂)`
    Matern { range: T, nu: T },
}

/// A validated isotropic spatial covariance: sill times a correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialModel<T> {
    kind: SpatialKind<T>,
    sill: T,
}

fn positive<T: Real>(what: &'static str, name: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            what,
            format!("{name} = {v} must be positive"),
        ))
    }
}

fn check_theta<T: Real>(theta: T) -> Result<()> {
    if theta >= T::zero() && theta <= T::pi() {
        Ok(())
    } else {
        Err(Error::domain(
            "angle",
            format!("θ = {theta} outside [0, π]"),
        ))
    }
}

impl<T: Real> SpatialModel<T> {
    pub fn new(kind: SpatialKind<T>) -> Result<Self> {
        const WHAT: &str = "spatial model";
        match kind {
            SpatialKind::Exponential { range } => positive(WHAT, "phi0", range)?,
            SpatialKind::GeneralizedCauchy { range, alpha, beta } => {
                positive(WHAT, "phi1", range)?;
                positive(WHAT, "beta", beta)?;
                if !(alpha > T::zero() && alpha <= T::one()) {
                    return Err(Error::domain(
                        WHAT,
                        format!("alpha = {alpha} outside (0, 1]"),
                    ));
                }
            }
            SpatialKind::Matern { range, nu } => {
                positive(WHAT, "phi2", range)?;
                if !(nu > T::zero() && nu <= T::lit(0.5)) {
                    return Err(Error::domain(WHAT, format!("nu = {nu} outside (0, 1/2]")));
                }
            }
        }
        Ok(Self {
            kind,
            sill: T::one(),
        })
    }

    pub fn exponential(range: T) -> Result<Self> {
        Self::new(SpatialKind::Exponential { range })
    }

    pub fn generalized_cauchy(range: T, alpha: T, beta: T) -> Result<Self> {
        Self::new(SpatialKind::GeneralizedCauchy { range, alpha, beta })
    }

    pub fn matern(range: T, nu: T) -> Result<Self> {
        Self::new(SpatialKind::Matern { range, nu })
    }

    pub fn with_sill(mut self, sill: T) -> Result<Self> {
        positive("spatial model", "sill", sill)?;
        self.sill = sill;
        Ok(self)
    }

    pub fn kind(&self) -> SpatialKind<T> {
        self.kind
    }

    pub fn sill(&self) -> T {
        self.sill
    }

    /// Correlation `r(θ)`; rejects `θ` outside `[0, π]`.
    pub fn correlation(&self, theta: T) -> Result<T> {
        check_theta(theta)?;
        Ok(self.correlation_unchecked(theta))
    }

    pub(crate) fn correlation_unchecked(&self, theta: T) -> T {
        match self.kind {
            SpatialKind::Exponential { range } => (-theta / range).exp(),
            SpatialKind::GeneralizedCauchy { range, alpha, beta } => {
                (T::one() + (theta / range).powf(alpha)).powf(-beta / alpha)
            }
            SpatialKind::Matern { range, nu } => T::lit(special::matern_correlation(
                nu.as_f64(),
                (theta / range).as_f64(),
            )),
        }
    }

    /// Covariance `σ² r(θ)` without range checking; used on grid distances.
    #[inline]
    pub fn covariance(&self, theta: T) -> T {
        self.sill * self.correlation_unchecked(theta)
    }

    /// Variogram `σ²(1 - r(θ))`.
    pub fn variogram(&self, theta: T) -> Result<T> {
        Ok(self.sill * (T::one() - self.correlation(theta)?))
    }
}

/// Temporal correlation `g(u)` used inside the space-time family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalCorrelation<T> {
    /// `exp(-u/c₀)`
    Exponential { scale: T },
    /// `(1 + (u/c₁)²)^{-1}`
    Cauchy { scale: T },
}

impl<T: Real> TemporalCorrelation<T> {
    pub fn exponential(scale: T) -> Result<Self> {
        positive("temporal correlation", "c0", scale)?;
        Ok(Self::Exponential { scale })
    }

    pub fn cauchy(scale: T) -> Result<Self> {
        positive("temporal correlation", "c1", scale)?;
        Ok(Self::Cauchy { scale })
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        let u = u.abs();
        match *self {
            Self::Exponential { scale } => (-u / scale).exp(),
            Self::Cauchy { scale } => T::one() / (T::one() + (u / scale).powi(2)),
        }
    }
}

/// `C(θ, u) = ((1 - δ) / (1 - δ g(u) cos θ))^τ`, scaled by the sill.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeModel<T> {
    delta: T,
    exponent: T,
    temporal: TemporalCorrelation<T>,
    sill: T,
}

impl<T: Real> SpaceTimeModel<T> {
    pub fn new(delta: T, exponent: T, temporal: TemporalCorrelation<T>) -> Result<Self> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::domain(
                "space-time model",
                format!("delta = {delta} outside (0, 1)"),
            ));
        }
        positive("space-time model", "tau", exponent)?;
        // Re-validate in case the enum was built directly.
        match temporal {
            TemporalCorrelation::Exponential { scale } => {
                positive("temporal correlation", "c0", scale)?
            }
            TemporalCorrelation::Cauchy { scale } => positive("temporal correlation", "c1", scale)?,
        }
        Ok(Self {
            delta,
            exponent,
            temporal,
            sill: T::one(),
        })
    }

    pub fn with_sill(mut self, sill: T) -> Result<Self> {
        positive("space-time model", "sill", sill)?;
        self.sill = sill;
        Ok(self)
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn temporal(&self) -> TemporalCorrelation<T> {
        self.temporal
    }

    pub fn sill(&self) -> T {
        self.sill
    }

    pub fn correlation(&self, theta: T, u: T) -> Result<T> {
        check_theta(theta)?;
        if !matches!(
            u.partial_cmp(&T::zero()),
            Some(Ordering::Greater | Ordering::Equal)
        ) {
            return Err(Error::domain("time lag", format!("u = {u} must be >= 0")));
        }
        Ok(self.correlation_unchecked(theta, u))
    }

    pub(crate) fn correlation_unchecked(&self, theta: T, u: T) -> T {
        let one = T::one();
        ((one - self.delta) / (one - self.delta * self.temporal.eval(u) * theta.cos()))
            .powf(self.exponent)
    }

    #[inline]
    pub fn covariance(&self, theta: T, u: T) -> T {
        self.sill * self.correlation_unchecked(theta, u)
    }

    pub fn variogram(&self, theta: T, u: T) -> Result<T> {
        Ok(self.sill * (T::one() - self.correlation(theta, u)?))
    }
}

/// Which parameter of a spatial family to solve for, with the others held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration<T> {
    ExponentialRange,
    CauchyRange { alpha: T, beta: T },
    CauchyBeta { range: T, alpha: T },
    MaternRange { nu: T },
}

impl<T: Real> Calibration<T> {
    pub fn model(&self, p: T) -> Result<SpatialModel<T>> {
        match *self {
            Calibration::ExponentialRange => SpatialModel::exponential(p),
            Calibration::CauchyRange { alpha, beta } => {
                SpatialModel::generalized_cauchy(p, alpha, beta)
            }
            Calibration::CauchyBeta { range, alpha } => {
                SpatialModel::generalized_cauchy(range, alpha, p)
            }
            Calibration::MaternRange { nu } => SpatialModel::matern(p, nu),
        }
    }
}

/// Solves for the free parameter so that `r(θ*) = r*`, by bisection in
/// log-parameter space over `[1e-8, 1e4]`.
pub fn calibrate_range<T: Real>(calibration: Calibration<T>, theta: T, target: T) -> Result<T> {
    if !(target > T::zero() && target < T::one()) {
        return Err(Error::domain(
            "calibration target",
            format!("r* = {target} outside (0, 1)"),
        ));
    }
    if !(theta > T::zero() && theta <= T::pi()) {
        return Err(Error::domain(
            "calibration target",
            format!("θ* = {theta} outside (0, π]"),
        ));
    }
    let (lo0, hi0) = (1e-8, 1e4);
    let f = |p: T| -> Result<T> { Ok(calibration.model(p)?.correlation(theta)? - target) };
    let mut lo = T::lit(lo0);
    let mut hi = T::lit(hi0);
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return Err(Error::Bracketing { lo: lo0, hi: hi0 });
    }
    let lo_positive = f_lo > T::zero();
    let tol = T::default_epsilon() * T::lit(4.0);
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - T::one() <= tol {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn catalog() -> Vec<SpatialModel<f64>> {
        vec![
            SpatialModel::exponential(0.5243).unwrap(),
            SpatialModel::generalized_cauchy(1.0, 0.75, 2.5626).unwrap(),
            SpatialModel::matern(0.7079, 0.25).unwrap(),
            SpatialModel::matern(0.3, 0.5).unwrap(),
            SpatialModel::matern(2.0, 0.05).unwrap(),
        ]
    }

    #[test]
    fn calibrated_values_hit_five_percent() {
        for m in &catalog()[..3] {
            let r = m.correlation(FRAC_PI_2).unwrap();
            assert!((r - 0.05).abs() < 1e-3, "{m:?}: {r}");
        }
    }

    #[test]
    fn unit_at_origin() {
        for m in catalog() {
            assert_eq!(m.correlation(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(SpatialModel::<f64>::exponential(0.0).is_err());
        assert!(SpatialModel::<f64>::generalized_cauchy(1.0, 1.2, 1.0).is_err());
        assert!(SpatialModel::<f64>::generalized_cauchy(1.0, 0.0, 1.0).is_err());
        assert!(SpatialModel::<f64>::matern(1.0, 0.51).is_err());
        assert!(SpatialModel::<f64>::matern(1.0, 0.0).is_err());
        assert!(SpatialModel::<f64>::exponential(1.0)
            .unwrap()
            .with_sill(-1.0)
            .is_err());
        assert!(
            SpaceTimeModel::new(1.0, 0.25, TemporalCorrelation::exponential(1.0).unwrap()).is_err()
        );
        assert!(TemporalCorrelation::<f64>::cauchy(-1.0).is_err());
    }

    #[test]
    fn rejects_angles_outside_domain() {
        let m = SpatialModel::exponential(0.5).unwrap();
        assert!(m.correlation(-0.1).is_err());
        assert!(m.correlation(3.2).is_err());
        assert!(m.correlation(f64::NAN).is_err());
    }

    #[test]
    fn variogram_examples() {
        let m = SpatialModel::exponential(0.5243).unwrap();
        assert_eq!(m.variogram(0.0).unwrap(), 0.0);
        assert!((m.variogram(FRAC_PI_2).unwrap() - 0.95).abs() < 1e-3);
        let m2 = m.with_sill(2.0).unwrap();
        assert!((m2.variogram(FRAC_PI_2).unwrap() - 1.90).abs() < 2e-3);
    }

    fn c0() -> SpaceTimeModel<f64> {
        SpaceTimeModel::new(
            0.95,
            0.25,
            TemporalCorrelation::exponential(1.8951).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn spacetime_examples() {
        let m = c0();
        assert_eq!(m.correlation(0.0, 0.0).unwrap(), 1.0);
        let expected = (0.05 / (1.0 - 0.95 * (-3.0f64 / 1.8951).exp())).powf(0.25);
        assert!((m.correlation(0.0, 3.0).unwrap() - expected).abs() < 1e-15);
        // Direct evaluation lands near 0.5, not in the 0.047–0.052 range one
        // might expect from the calibration target.
        assert!((expected - 0.4992).abs() < 1e-3);
        let antipodal = (0.05f64 / 1.95).powf(0.25);
        assert!((m.correlation(PI, 0.0).unwrap() - antipodal).abs() < 1e-15);
        assert_eq!(m.variogram(0.0, 0.0).unwrap(), 0.0);
        assert!(m.correlation(0.1, -1.0).is_err());
    }

    #[test]
    fn temporal_margins_agree_at_three() {
        let g0 = TemporalCorrelation::exponential(1.8951f64).unwrap();
        let g1 = TemporalCorrelation::cauchy(1.5250).unwrap();
        assert!((g0.eval(3.0) - g1.eval(3.0)).abs() < 1e-3);
        assert_eq!(g0.eval(0.0), 1.0);
        assert_eq!(g1.eval(0.0), 1.0);
    }

    #[test]
    fn monotone_decay_and_bounds() {
        for m in catalog() {
            let mut prev = f64::INFINITY;
            for k in 0..1000 {
                let theta = PI * k as f64 / 999.0;
                let r = m.correlation(theta).unwrap();
                assert!(r <= prev + 1e-15, "{m:?} not monotone at {theta}");
                assert!(r.abs() <= 1.0);
                prev = r;
            }
        }
        for g in [
            TemporalCorrelation::exponential(1.8951).unwrap(),
            TemporalCorrelation::cauchy(1.525).unwrap(),
        ] {
            let m = SpaceTimeModel::new(0.95, 0.25, g).unwrap();
            for i in 0..60 {
                for k in 0..60 {
                    let c = m.correlation(PI * i as f64 / 59.0, 0.2 * k as f64).unwrap();
                    assert!(c.abs() <= 1.0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn temporal_margin_consistency() {
        let m = c0();
        for i in 0..200 {
            let t = PI * i as f64 / 199.0;
            let expected = ((1.0 - 0.95) / (1.0 - 0.95 * t.cos())).powf(0.25);
            assert_eq!(m.correlation(t, 0.0).unwrap(), expected);
        }
    }

    #[test]
    fn calibration_examples() {
        let phi0 = calibrate_range(Calibration::ExponentialRange, FRAC_PI_2, 0.05).unwrap();
        assert!((phi0 - 0.5243).abs() < 1e-3);
        assert!((phi0 - (-FRAC_PI_2 / 0.05f64.ln())).abs() < 1e-12);
        let beta = calibrate_range(
            Calibration::CauchyBeta {
                range: 1.0,
                alpha: 0.75,
            },
            FRAC_PI_2,
            0.05,
        )
        .unwrap();
        assert!((beta - 2.5626).abs() < 1e-3);
        let phi2 = calibrate_range(Calibration::MaternRange { nu: 0.25 }, FRAC_PI_2, 0.05).unwrap();
        assert!((phi2 - 0.7079).abs() < 1e-3);
        let err = calibrate_range(Calibration::<f64>::ExponentialRange, FRAC_PI_2, 1.5);
        assert!(err.unwrap_err().is_validation());
    }

    #[test]
    fn calibration_reports_missing_bracket() {
        // β is capped at 1e4 and floored at 1e-8; r(π/2) can't reach 1 - 1e-12.
        let err = calibrate_range(
            Calibration::CauchyBeta {
                range: 1.0,
                alpha: 0.75,
            },
            FRAC_PI_2,
            1.0 - 1e-12,
        );
        assert!(matches!(err, Err(Error::Bracketing { .. })));
    }

    proptest! {
        #[test]
        fn calibration_round_trip(theta in 0.05..PI, target in 0.01..0.95f64, which in 0usize..3) {
            let cal = match which {
                0 => Calibration::ExponentialRange,
                1 => Calibration::CauchyRange { alpha: 0.6, beta: 1.5 },
                _ => Calibration::MaternRange { nu: 0.35 },
            };
            if let Ok(p) = calibrate_range(cal, theta, target) {
                let r = cal.model(p).unwrap().correlation(theta).unwrap();
                prop_assert!((r - target).abs() < 1e-8, "{r} vs {target}");
            }
        }
    }
}
