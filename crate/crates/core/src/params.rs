//! Physical parameters, the γ = 1 normalization, and per-velocity denominators.
//!
//! Every downstream routine works in units where the common relaxation rate γ
//! is 1. Velocities only ever appear through the two-photon Doppler variable
//! Ω = 2kv, also measured in units of γ.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Level structure and relaxation of the three-level ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// Common decay rate of every density-matrix element (γ > 0).
    pub gamma: f64,
    /// Intermediate-level detuning Δ = ω₂₀ − ω₀₁ (signed, non-zero).
    pub delta_big: f64,
    /// Ratio of the upper to the lower transition dipole projections.
    pub mu: f64,
}

/// The two counterpropagating waves.
///
/// The complex drive seen by an atom at phase θ = kz is
/// `E(θ) = φ e^{iθ} − Aφ e^{−iθ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// Rabi half-amplitude of the forward wave, φ₁ = φ.
    pub phi: f64,
    /// Backward-to-forward amplitude ratio, φ₂ = Aφ.
    pub a_ratio: f64,
    /// Two-photon detuning δ = 2ω − ω₂₁.
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Homogeneous,
    Lorentzian,
    Gaussian,
}

/// Distribution of the Doppler variable Ω = 2kv.
///
/// `gamma_v` is the half width at half maximum in Ω for both broadened
/// shapes, so Lorentzian and Gaussian scans at equal `gamma_v` are directly
/// comparable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityDistribution {
    pub kind: DistributionKind,
    pub gamma_v: f64,
}

impl VelocityDistribution {
    pub const HOMOGENEOUS: VelocityDistribution = VelocityDistribution {
        kind: DistributionKind::Homogeneous,
        gamma_v: 0.0,
    };

    /// Strict constructor: broadened kinds need `gamma_v > 0`, the
    /// homogeneous kind needs `gamma_v == 0`.
    pub fn new(kind: DistributionKind, gamma_v: f64) -> Result<Self> {
        let dist = VelocityDistribution { kind, gamma_v };
        dist.validate()?;
        Ok(dist)
    }

    /// Like [`VelocityDistribution::new`], but a zero width collapses to the
    /// homogeneous distribution. Convenient for sweeps that start at γᵥ = 0.
    pub fn broadened(kind: DistributionKind, gamma_v: f64) -> Result<Self> {
        if gamma_v == 0.0 {
            Ok(Self::HOMOGENEOUS)
        } else {
            Self::new(kind, gamma_v)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma_v.is_finite() || self.gamma_v < 0.0 {
            return Err(invalid(format!("gamma_v must be finite and >= 0, got {}", self.gamma_v)));
        }
        match self.kind {
            DistributionKind::Homogeneous if self.gamma_v != 0.0 => Err(invalid(
                "homogeneous distribution requires gamma_v = 0",
            )),
            DistributionKind::Lorentzian | DistributionKind::Gaussian if self.gamma_v == 0.0 => Err(
                invalid("broadened distributions require gamma_v > 0 (use homogeneous)"),
            ),
            _ => Ok(()),
        }
    }

    /// Probability density in Ω. `None` for the homogeneous case, which is a
    /// point mass at Ω = 0.
    pub fn density(&self, omega: f64) -> Option<f64> {
        let gv = self.gamma_v;
        match self.kind {
            DistributionKind::Homogeneous => None,
            DistributionKind::Lorentzian => Some(gv / (PI * (gv * gv + omega * omega))),
            DistributionKind::Gaussian => {
                let s = omega / gv;
                Some((LN_2 / PI).sqrt() / gv * (-LN_2 * s * s).exp())
            }
        }
    }
}

/// Full raw-unit parameter document.
///
/// JSON layout: `{"gamma","delta_big","mu","phi","a_ratio","delta","dist":{"kind","gamma_v"}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub gamma: f64,
    pub delta_big: f64,
    pub mu: f64,
    pub phi: f64,
    pub a_ratio: f64,
    pub delta: f64,
    pub dist: VelocityDistribution,
}

impl ParameterSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let set: ParameterSet = serde_json::from_str(text)?;
        set.normalize()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter set serializes")
    }

    pub fn atom(&self) -> AtomSpec {
        AtomSpec { gamma: self.gamma, delta_big: self.delta_big, mu: self.mu }
    }

    pub fn field(&self) -> FieldSpec {
        FieldSpec { phi: self.phi, a_ratio: self.a_ratio, delta: self.delta }
    }

    pub fn normalize(&self) -> Result<NormalizedParams> {
        normalize(&self.atom(), &self.field(), &self.dist)
    }

    pub fn from_parts(atom: AtomSpec, field: FieldSpec, dist: VelocityDistribution) -> Self {
        ParameterSet {
            gamma: atom.gamma,
            delta_big: atom.delta_big,
            mu: atom.mu,
            phi: field.phi,
            a_ratio: field.a_ratio,
            delta: field.delta,
            dist,
        }
    }
}

/// Parameters in units of γ. `gamma` keeps the raw rate so that results can
/// be converted back.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// The raw relaxation rate that defines the frequency unit.
    pub gamma: f64,
    /// Δ/γ.
    pub delta_big: f64,
    /// φ/γ.
    pub phi: f64,
    pub a_ratio: f64,
    pub mu: f64,
    /// δ/γ.
    pub delta: f64,
    /// Distribution with `gamma_v` measured in units of γ.
    pub dist: VelocityDistribution,
}

impl NormalizedParams {
    /// Build directly in units of γ (γ = 1).
    pub fn new(
        delta_big: f64,
        phi: f64,
        a_ratio: f64,
        mu: f64,
        delta: f64,
        dist: VelocityDistribution,
    ) -> Result<Self> {
        let p = NormalizedParams { gamma: 1.0, delta_big, phi, a_ratio, mu, delta, dist };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.delta_big, self.phi, self.a_ratio, self.mu, self.delta];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if self.gamma <= 0.0 {
            return Err(invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.delta_big == 0.0 {
            return Err(invalid("intermediate detuning delta_big must be non-zero"));
        }
        if self.phi < 0.0 || self.a_ratio < 0.0 {
            return Err(invalid("phi and a_ratio must be >= 0"));
        }
        self.dist.validate()
    }

    /// x = φ²/(γΔ), signed with Δ.
    pub fn x(&self) -> f64 {
        self.phi * self.phi / self.delta_big
    }

    pub fn phi1(&self) -> f64 {
        self.phi
    }

    pub fn phi2(&self) -> f64 {
        self.a_ratio * self.phi
    }

    pub fn gamma_v(&self) -> f64 {
        self.dist.gamma_v
    }

    /// Pragmatic validity ratio max(γ, |δ|, φ, γᵥ)/|Δ|; the expansion in
    /// 1/Δ is meaningful only when this is small.
    pub fn eps_eff(&self) -> f64 {
        let largest = 1.0_f64.max(self.delta.abs()).max(self.phi).max(self.dist.gamma_v);
        largest / self.delta_big.abs()
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_dist(mut self, dist: VelocityDistribution) -> Self {
        self.dist = dist;
        self
    }

    /// Back to raw units.
    pub fn denormalize(&self) -> (AtomSpec, FieldSpec, VelocityDistribution) {
        let g = self.gamma;
        (
            AtomSpec { gamma: g, delta_big: self.delta_big * g, mu: self.mu },
            FieldSpec { phi: self.phi * g, a_ratio: self.a_ratio, delta: self.delta * g },
            VelocityDistribution { kind: self.dist.kind, gamma_v: self.dist.gamma_v * g },
        )
    }
}

/// Convert raw-unit inputs to units of γ.
pub fn normalize(
    atom: &AtomSpec,
    field: &FieldSpec,
    dist: &VelocityDistribution,
) -> Result<NormalizedParams> {
    if !(atom.gamma > 0.0) {
        return Err(invalid(format!("gamma must be > 0, got {}", atom.gamma)));
    }
    if atom.delta_big == 0.0 {
        return Err(invalid("intermediate detuning delta_big must be non-zero"));
    }
    let g = atom.gamma;
    let p = NormalizedParams {
        gamma: g,
        delta_big: atom.delta_big / g,
        phi: field.phi / g,
        a_ratio: field.a_ratio,
        mu: atom.mu,
        delta: field.delta / g,
        dist: VelocityDistribution { kind: dist.kind, gamma_v: dist.gamma_v / g },
    };
    p.validate()?;
    Ok(p)
}

/// Complex two-photon denominators seen by atoms with Doppler variable Ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerVelocityContext {
    /// D₊ = γ − i(δ − Ω)
    pub d_plus: Complex64,
    /// D₋ = γ − i(δ + Ω)
    pub d_minus: Complex64,
    /// D₀ = γ − iδ
    pub d_zero: Complex64,
    pub omega: f64,
}

impl PerVelocityContext {
    /// kv = Ω/2, the single-photon Doppler shift.
    pub fn kv(&self) -> f64 {
        0.5 * self.omega
    }
}

/// Denominators for Doppler variable `omega` (units of γ).
pub fn per_velocity_context(params: &NormalizedParams, omega: f64) -> PerVelocityContext {
    let d = params.delta;
    PerVelocityContext {
        d_plus: Complex64::new(1.0, -(d - omega)),
        d_minus: Complex64::new(1.0, -(d + omega)),
        d_zero: Complex64::new(1.0, -d),
        omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(gamma: f64, delta_big: f64, phi: f64, delta: f64) -> NormalizedParams {
        normalize(
            &AtomSpec { gamma, delta_big, mu: 1.0 },
            &FieldSpec { phi, a_ratio: 1.0, delta },
            &VelocityDistribution::HOMOGENEOUS,
        )
        .unwrap()
    }

    #[test]
    fn normalize_definition_arithmetic() {
        let p = raw(1.0, 100.0, 1.0, 0.0);
        assert_eq!(p.delta, 0.0);
        assert_eq!(p.gamma_v(), 0.0);
        assert!((p.x() - 0.01).abs() < 1e-15);

        let p = raw(2.0, 200.0, 2.0, 4.0);
        assert_eq!(p.delta, 2.0);
        assert!((p.x() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn cesium_like_detuning_is_deep_in_the_perturbative_regime() {
        let p = normalize(
            &AtomSpec { gamma: 2.21e9, delta_big: -3.609e18, mu: 1.0 },
            &FieldSpec { phi: 0.0, a_ratio: 1.0, delta: 0.0 },
            &VelocityDistribution::HOMOGENEOUS,
        )
        .unwrap();
        assert!((p.delta_big.abs() - 1.633e9).abs() / 1.633e9 < 1e-3);
        assert!(p.eps_eff() < 1e-8);
    }

    #[test]
    fn normalize_rejects_bad_inputs() {
        let field = FieldSpec { phi: 1.0, a_ratio: 1.0, delta: 0.0 };
        let h = VelocityDistribution::HOMOGENEOUS;
        assert!(normalize(&AtomSpec { gamma: 0.0, delta_big: 1.0, mu: 1.0 }, &field, &h).is_err());
        assert!(normalize(&AtomSpec { gamma: -1.0, delta_big: 1.0, mu: 1.0 }, &field, &h).is_err());
        assert!(normalize(&AtomSpec { gamma: 1.0, delta_big: 0.0, mu: 1.0 }, &field, &h).is_err());
        let neg = FieldSpec { phi: -1.0, ..field };
        assert!(normalize(&AtomSpec { gamma: 1.0, delta_big: 1.0, mu: 1.0 }, &neg, &h).is_err());
    }

    #[test]
    fn distribution_kind_and_width_must_agree() {
        assert!(VelocityDistribution::new(DistributionKind::Homogeneous, 1.0).is_err());
        assert!(VelocityDistribution::new(DistributionKind::Lorentzian, 0.0).is_err());
        assert!(VelocityDistribution::new(DistributionKind::Gaussian, -1.0).is_err());
        let d = VelocityDistribution::broadened(DistributionKind::Gaussian, 0.0).unwrap();
        assert_eq!(d.kind, DistributionKind::Homogeneous);
    }

    #[test]
    fn half_maximum_at_gamma_v() {
        for gv in [0.3, 1.0, 7.5] {
            let l = VelocityDistribution::new(DistributionKind::Lorentzian, gv).unwrap();
            let g = VelocityDistribution::new(DistributionKind::Gaussian, gv).unwrap();
            for d in [l, g] {
                let peak = d.density(0.0).unwrap();
                for s in [-1.0, 1.0] {
                    let half = d.density(s * gv).unwrap();
                    assert!((half / peak - 0.5).abs() < 1e-12, "{:?}", d);
                }
            }
        }
    }

    #[test]
    fn per_velocity_denominators() {
        let p = NormalizedParams::new(100.0, 1.0, 1.0, 1.0, 0.0, VelocityDistribution::HOMOGENEOUS).unwrap();
        let c = per_velocity_context(&p, 0.0);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!((c.d_plus, c.d_minus, c.d_zero), (one, one, one));

        let c = per_velocity_context(&p.with_delta(2.0), 1.0);
        assert_eq!(c.d_plus, Complex64::new(1.0, -1.0));
        assert_eq!(c.d_minus, Complex64::new(1.0, -3.0));
        assert_eq!(c.d_zero, Complex64::new(1.0, -2.0));

        let a = per_velocity_context(&p.with_delta(1.0), 2.0);
        let b = per_velocity_context(&p.with_delta(-1.0), 2.0);
        assert_eq!(a.d_plus.conj(), b.d_minus);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let text = r#"{"gamma":1.0,"delta_big":1000.0,"mu":1.2,"phi":1.0,"a_ratio":0.5,
                       "delta":0.25,"dist":{"kind":"lorentzian","gamma_v":2.0}}"#;
        let set = ParameterSet::from_json(text).unwrap();
        assert_eq!(set.dist.kind, DistributionKind::Lorentzian);
        let back = ParameterSet::from_json(&set.to_json()).unwrap();
        assert_eq!(set, back);

        let extra = text.replace("\"mu\":1.2", "\"mu\":1.2,\"temperature\":300");
        assert!(ParameterSet::from_json(&extra).is_err());
        let extra_dist = text.replace("\"gamma_v\":2.0", "\"gamma_v\":2.0,\"u\":1");
        assert!(ParameterSet::from_json(&extra_dist).is_err());
        let bad = text.replace("\"delta_big\":1000.0", "\"delta_big\":0.0");
        assert!(ParameterSet::from_json(&bad).is_err());
    }
}
