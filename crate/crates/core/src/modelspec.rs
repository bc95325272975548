//! Text model specifications: `key=value` pairs, one per line, `#` comments.
//!
//! Keys: `model` (`exp`, `gcauchy`, `matern`, `st`, `st-exp`, `st-cauchy`),
//! `sill`, `phi0`, `phi1`, `alpha`, `beta`, `phi2`, `nu`, `delta`, `tau`,
//! `c0`, `c1`, `gkind` (`exp` or `cauchy`, selects the temporal factor of
//! `model=st`). Unset parameters take the reference calibration values.

use std::str::FromStr;

use crate::covmodels::{SpaceTimeModel, SpatialKind, SpatialModel, TemporalCorrelation};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_KEYS: [&str; 13] = [
    "model", "sill", "phi0", "phi1", "alpha", "beta", "phi2", "nu", "delta", "tau", "c0", "c1",
    "gkind",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    Exponential,
    GeneralizedCauchy,
    Matern,
    SpaceTime,
    SpaceTimeExponential,
    SpaceTimeCauchy,
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exp" => Self::Exponential,
            "gcauchy" => Self::GeneralizedCauchy,
            "matern" => Self::Matern,
            "st" => Self::SpaceTime,
            "st-exp" => Self::SpaceTimeExponential,
            "st-cauchy" => Self::SpaceTimeCauchy,
            other => {
                return Err(Error::domain(
                    "model",
                    format!("unknown model {other:?}; expected exp, gcauchy, matern, st, st-exp or st-cauchy"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalKind {
    Exponential,
    Cauchy,
}

impl FromStr for TemporalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Self::Exponential),
            "cauchy" => Ok(Self::Cauchy),
            other => Err(Error::domain(
                "gkind",
                format!("{other:?}; expected exp or cauchy"),
            )),
        }
    }
}

/// Parameter set with reference defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: ModelName,
    pub sill: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phi2: f64,
    pub nu: f64,
    pub delta: f64,
    pub tau: f64,
    pub c0: f64,
    pub c1: f64,
    pub gkind: TemporalKind,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            model: ModelName::Exponential,
            sill: 1.0,
            phi0: 0.5243,
            phi1: 1.0,
            alpha: 0.75,
            beta: 2.5626,
            phi2: 0.7079,
            nu: 0.25,
            delta: 0.95,
            tau: 0.25,
            c0: 1.8951,
            c1: 1.5250,
            gkind: TemporalKind::Exponential,
        }
    }
}

/// A constructed model of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model<T> {
    Spatial(SpatialModel<T>),
    SpaceTime(SpaceTimeModel<T>),
}

impl<T: Real> Model<T> {
    pub fn is_spacetime(&self) -> bool {
        matches!(self, Model::SpaceTime(_))
    }

    pub fn sill(&self) -> T {
        match self {
            Model::Spatial(m) => m.sill(),
            Model::SpaceTime(m) => m.sill(),
        }
    }

    /// `σ²(1 - r)`; the time lag is ignored for spatial models.
    pub fn variogram(&self, theta: T, u: T) -> Result<T> {
        match self {
            Model::Spatial(m) => m.variogram(theta),
            Model::SpaceTime(m) => m.variogram(theta, u),
        }
    }
}

fn parse_number(key: &'static str, value: &str) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::domain(key, format!("{value:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::domain(key, format!("{value:?} is not finite")));
    }
    Ok(v)
}

impl ModelSpec {
    pub fn is_model_key(key: &str) -> bool {
        MODEL_KEYS.contains(&key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "model" => self.model = value.parse()?,
            "gkind" => self.gkind = value.parse()?,
            "sill" => self.sill = parse_number("sill", value)?,
            "phi0" => self.phi0 = parse_number("phi0", value)?,
            "phi1" => self.phi1 = parse_number("phi1", value)?,
            "alpha" => self.alpha = parse_number("alpha", value)?,
            "beta" => self.beta = parse_number("beta", value)?,
            "phi2" => self.phi2 = parse_number("phi2", value)?,
            "nu" => self.nu = parse_number("nu", value)?,
            "delta" => self.delta = parse_number("delta", value)?,
            "tau" => self.tau = parse_number("tau", value)?,
            "c0" => self.c0 = parse_number("c0", value)?,
            "c1" => self.c1 = parse_number("c1", value)?,
            other => return Err(Error::domain("model key", format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text` on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (key, value) in parse_pairs(text)? {
            spec.set(&key, &value)?;
        }
        Ok(spec)
    }

    pub fn build<T: Real>(&self) -> Result<Model<T>> {
        let t = T::lit;
        let temporal = |kind| match kind {
            TemporalKind::Exponential => TemporalCorrelation::exponential(t(self.c0)),
            TemporalKind::Cauchy => TemporalCorrelation::cauchy(t(self.c1)),
        };
        let spatial = |kind| {
            Ok(Model::Spatial(
                SpatialModel::new(kind)?.with_sill(t(self.sill))?,
            ))
        };
        let spacetime = |kind| {
            Ok(Model::SpaceTime(
                SpaceTimeModel::new(t(self.delta), t(self.tau), temporal(kind)?)?
                    .with_sill(t(self.sill))?,
            ))
        };
        match self.model {
            ModelName::Exponential => spatial(SpatialKind::Exponential {
                range: t(self.phi0),
            }),
            ModelName::GeneralizedCauchy => spatial(SpatialKind::GeneralizedCauchy {
                range: t(self.phi1),
                alpha: t(self.alpha),
                beta: t(self.beta),
            }),
            ModelName::Matern => spatial(SpatialKind::Matern {
                range: t(self.phi2),
                nu: t(self.nu),
            }),
            ModelName::SpaceTime => spacetime(self.gkind),
            ModelName::SpaceTimeExponential => spacetime(TemporalKind::Exponential),
            ModelName::SpaceTimeCauchy => spacetime(TemporalKind::Cauchy),
        }
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::domain(
                "config",
                format!("line {}: expected key=value", i + 1),
            ));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_every_model() {
        for name in ["exp", "gcauchy", "matern", "st", "st-exp", "st-cauchy"] {
            let spec = ModelSpec::parse(&format!("model = {name}\n")).unwrap();
            let model = spec.build::<f64>().unwrap();
            assert_eq!(model.is_spacetime(), name.starts_with("st"));
            assert_eq!(model.sill(), 1.0);
            assert_eq!(model.variogram(0.0, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponential_default_is_calibrated() {
        let m = ModelSpec::default().build::<f64>().unwrap();
        assert!((m.variogram(std::f64::consts::FRAC_PI_2, 0.0).unwrap() - 0.95).abs() < 1e-3);
    }

    #[test]
    fn parses_comments_and_overrides() {
        let spec = ModelSpec::parse("# test\nmodel=st\ngkind=cauchy # inline\nsill = 2\n\nc1=3\n")
            .unwrap();
        assert_eq!(spec.model, ModelName::SpaceTime);
        assert_eq!(spec.gkind, TemporalKind::Cauchy);
        assert_eq!(spec.sill, 2.0);
        let Model::SpaceTime(m) = spec.build::<f64>().unwrap() else {
            panic!()
        };
        assert_eq!(m.temporal(), TemporalCorrelation::cauchy(3.0).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ModelSpec::parse("model=gauss").is_err());
        assert!(ModelSpec::parse("phi9=1").is_err());
        assert!(ModelSpec::parse("phi0").is_err());
        assert!(ModelSpec::parse("phi0=abc").is_err());
        let err = ModelSpec::parse("nu=0.9\nmodel=matern")
            .unwrap()
            .build::<f64>()
            .unwrap_err();
        assert!(err.is_validation());
    }
}
