//! Scan configuration documents.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tpa_core::averaging::{OracleAverageSpec, QuadratureSpec};
use tpa_core::{DistributionKind, NormalizedParams, TpaError, VelocityDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "n2")]
    N2,
    #[serde(rename = "n2+n3")]
    N2N3,
    #[serde(rename = "oracle_avg")]
    OracleAvg,
    #[serde(rename = "width")]
    Width,
    #[serde(rename = "stark")]
    Stark,
    #[serde(rename = "n2max")]
    N2Max,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::N2 => "n2",
            Observable::N2N3 => "n2+n3",
            Observable::OracleAvg => "oracle_avg",
            Observable::Width => "width",
            Observable::Stark => "stark",
            Observable::N2Max => "n2max",
        }
    }

    /// Observables that do not depend on the two-photon detuning.
    pub fn detuning_free(&self) -> bool {
        matches!(self, Observable::Width | Observable::Stark | Observable::N2Max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    DeltaTilde,
    GammaVTilde,
    ARatio,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::DeltaTilde => "delta_tilde",
            Axis::GammaVTilde => "gamma_v_tilde",
            Axis::ARatio => "a_ratio",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Parameters held constant during a sweep, in units of γ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_big: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_v_tilde: Option<f64>,
}

pub const DEFAULT_DELTA_BIG: f64 = 1000.0;
pub const DEFAULT_PHI: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub observable: Observable,
    pub sweep: Sweep,
    #[serde(default)]
    pub fixed: Fixed,
    /// Broadening shape; a zero `gamma_v_tilde` always means homogeneous.
    #[serde(default = "default_dist")]
    pub dist: DistributionKind,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub oracle: OracleAverageSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_dist() -> DistributionKind {
    DistributionKind::Lorentzian
}

/// Fully resolved parameters of one scan point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub delta_big: f64,
    pub phi: f64,
    pub mu: f64,
    pub a_ratio: f64,
    pub delta_tilde: f64,
    pub gamma_v_tilde: f64,
}

impl ScanConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScanConfig = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.sweep;
        if !(s.start.is_finite() && s.stop.is_finite()) {
            return Err(ConfigError("sweep range must be finite".into()));
        }
        if s.points < 2 {
            return Err(ConfigError(format!("sweep needs at least 2 points, got {}", s.points)));
        }
        if s.start == s.stop {
            return Err(ConfigError("sweep range is empty".into()));
        }
        let swept = match s.axis {
            Axis::DeltaTilde => self.fixed.delta_tilde,
            Axis::GammaVTilde => self.fixed.gamma_v_tilde,
            Axis::ARatio => self.fixed.a_ratio,
        };
        if swept.is_some() {
            return Err(ConfigError(format!("{} is swept and cannot also be fixed", s.axis)));
        }
        if s.axis == Axis::DeltaTilde && self.observable.detuning_free() {
            return Err(ConfigError(format!(
                "{} does not depend on delta_tilde; sweep gamma_v_tilde or a_ratio",
                self.observable.name()
            )));
        }
        self.quadrature.validate().map_err(|e| ConfigError(e.to_string()))?;
        for v in self.sweep.values() {
            self.point(v).normalized_with(self.dist).map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(())
    }

    pub fn point(&self, value: f64) -> Point {
        let f = &self.fixed;
        let mut p = Point {
            delta_big: f.delta_big.unwrap_or(DEFAULT_DELTA_BIG),
            phi: f.phi.unwrap_or(DEFAULT_PHI),
            mu: f.mu.unwrap_or(1.0),
            a_ratio: f.a_ratio.unwrap_or(1.0),
            delta_tilde: f.delta_tilde.unwrap_or(0.0),
            gamma_v_tilde: f.gamma_v_tilde.unwrap_or(0.0),
        };
        match self.sweep.axis {
            Axis::DeltaTilde => p.delta_tilde = value,
            Axis::GammaVTilde => p.gamma_v_tilde = value,
            Axis::ARatio => p.a_ratio = value,
        }
        p
    }
}

impl Point {
    pub fn normalized_with(&self, kind: DistributionKind) -> Result<NormalizedParams, TpaError> {
        let dist = VelocityDistribution::broadened(kind, self.gamma_v_tilde)?;
        NormalizedParams::new(self.delta_big, self.phi, self.a_ratio, self.mu, self.delta_tilde, dist)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<ScanConfig, ConfigError> {
        ScanConfig::from_json(text)
    }

    #[test]
    fn defaults_and_endpoints() {
        let c = config(r#"{"observable":"n2","sweep":{"axis":"delta_tilde","start":-1,"stop":0.3,"points":14}}"#).unwrap();
        let v = c.sweep.values();
        assert_eq!(v.len(), 14);
        assert_eq!((v[0], v[13]), (-1.0, 0.3));
        assert_eq!(c.dist, DistributionKind::Lorentzian);
        let p = c.point(0.2);
        assert_eq!((p.delta_big, p.phi, p.mu, p.a_ratio, p.delta_tilde, p.gamma_v_tilde), (1000.0, 1.0, 1.0, 1.0, 0.2, 0.0));
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"observable":"n2","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":1}}"#,
            r#"{"observable":"n2","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":3},"fixed":{"a_ratio":1}}"#,
            r#"{"observable":"stark","sweep":{"axis":"delta_tilde","start":0,"stop":1,"points":3}}"#,
            r#"{"observable":"n2","sweep":{"axis":"gamma_v_tilde","start":-1,"stop":1,"points":3}}"#,
            r#"{"observable":"n2","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":3},"extra":1}"#,
            r#"{"observable":"n2","sweep":{"axis":"a_ratio","start":0,"stop":1,"points":3},"quadrature":{"tol":0}}"#,
        ] {
            assert!(config(bad).is_err(), "{bad}");
        }
    }
}
