//! Spatial dc extraction and averaging over the Doppler variable Ω.
//!
//! Lorentzian averages are computed after the substitution Ω = γᵥ·tan θ,
//! which maps the density onto the uniform measure dθ/π on (−π/2, π/2), so
//! the heavy tails are integrated exactly rather than cut off. Gaussian
//! averages use either adaptive Gauss–Kronrod on |Ω| ≤ L·γᵥ or Gauss–Hermite
//! with node doubling.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TpaError};
use crate::oracle::{self, HarmonicDensityMatrix, SteadyStateProblem, DEFAULT_N_MAX_CAP, MIN_N_MAX};
use crate::params::{per_velocity_context, DistributionKind, NormalizedParams, VelocityDistribution};
use crate::perturbative::{self, ThirdOrderDc};
use crate::quadrature::{gauss_hermite, integrate, DEFAULT_MAX_SUBINTERVALS};

/// Largest Gauss–Hermite rule tried before giving up.
pub const MAX_HERMITE_NODES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    GaussHermite,
    AdaptiveFinite,
}

/// How velocity averages are computed.
///
/// `nodes` is the starting Gauss–Hermite rule size; `domain_halfwidth` is
/// the Gaussian truncation |Ω| ≤ L·γᵥ for the adaptive method; `tol` is
/// the relative accuracy requested. Lorentzian averages always use the
/// adaptive method on the mapped interval and ignore `nodes` and
/// `domain_halfwidth`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    pub nodes: usize,
    pub domain_halfwidth: f64,
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { method: QuadratureMethod::AdaptiveFinite, nodes: 32, domain_halfwidth: 12.0, tol: 1e-10 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(invalid(format!("quadrature nodes must be >= 8, got {}", self.nodes)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("quadrature tol must be > 0, got {}", self.tol)));
        }
        if !(self.domain_halfwidth > 0.0 && self.domain_halfwidth.is_finite()) {
            return Err(invalid(format!(
                "domain_halfwidth must be > 0, got {}",
                self.domain_halfwidth
            )));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// (1/π)∫dΩ [γᵥ/(γᵥ²+Ω²)]·[γ/(γ²+(δ±Ω)²)] = (γ+γᵥ)/((γ+γᵥ)²+δ²).
pub fn lorentz_int1(gamma: f64, gamma_v: f64, delta: f64) -> f64 {
    let g = gamma + gamma_v;
    g / (g * g + delta * delta)
}

/// (1/π)∫dΩ [γᵥ/(γᵥ²+Ω²)]·Ω/[γ²+(δ−Ω)²]ⁿ for n ∈ {1, 2}.
///
/// With (δ + Ω) in the denominator the value changes sign.
pub fn lorentz_int2(n: u32, gamma: f64, gamma_v: f64, delta: f64) -> Result<f64> {
    let g = gamma + gamma_v;
    let d2 = g * g + delta * delta;
    let first = gamma_v * delta / d2;
    match n {
        1 => Ok(first),
        2 => Ok(first * (g * (3.0 * gamma + gamma_v) + delta * delta) / (2.0 * gamma * gamma * d2)),
        _ => Err(invalid(format!("lorentz_int2 is defined for n = 1, 2 only, got {n}"))),
    }
}

/// c(i,j,0): what survives averaging over many wavelengths.
pub fn spatial_dc(rho: &HarmonicDensityMatrix, i: usize, j: usize) -> Complex64 {
    rho.get(i, j, 0)
}

/// ⟨f⟩ over the distribution of Ω.
pub fn velocity_average<F: FnMut(f64) -> f64>(
    mut f: F,
    dist: &VelocityDistribution,
    quad: &QuadratureSpec,
) -> Result<f64> {
    try_velocity_average(|w| Ok(f(w)), dist, quad, &[])
}

/// Like [`velocity_average`], with known narrow features of `f` (in Ω) used
/// as quadrature breakpoints.
pub fn velocity_average_with_features<F: FnMut(f64) -> f64>(
    mut f: F,
    dist: &VelocityDistribution,
    quad: &QuadratureSpec,
    features: &[f64],
) -> Result<f64> {
    try_velocity_average(|w| Ok(f(w)), dist, quad, features)
}

/// Velocity average of a fallible integrand; the first integrand error is
/// returned unchanged.
pub fn try_velocity_average<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    dist: &VelocityDistribution,
    quad: &QuadratureSpec,
    features: &[f64],
) -> Result<f64> {
    dist.validate()?;
    quad.validate()?;
    let failure: RefCell<Option<TpaError>> = RefCell::new(None);
    let mut eval = |omega: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match f(omega) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let gv = dist.gamma_v;
    let result = match (dist.kind, quad.method) {
        (DistributionKind::Homogeneous, _) => Ok(eval(0.0)),
        (DistributionKind::Lorentzian, _) => {
            let cuts: Vec<f64> = features.iter().map(|&w| (w / gv).atan()).collect();
            integrate(|t| eval(gv * t.tan()), -FRAC_PI_2, FRAC_PI_2, &cuts, quad.tol, 0.0, DEFAULT_MAX_SUBINTERVALS)
                .map(|r| r.value / PI)
        }
        (DistributionKind::Gaussian, QuadratureMethod::AdaptiveFinite) => {
            let half = quad.domain_halfwidth * gv;
            let norm = (LN_2 / PI).sqrt() / gv;
            integrate(
                |w| {
                    let s = w / gv;
                    eval(w) * norm * (-LN_2 * s * s).exp()
                },
                -half,
                half,
                features,
                quad.tol,
                0.0,
                DEFAULT_MAX_SUBINTERVALS,
            )
            .map(|r| r.value)
        }
        (DistributionKind::Gaussian, QuadratureMethod::GaussHermite) => {
            gauss_hermite_average(&mut eval, gv, quad.nodes, quad.tol)
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result
}

fn gauss_hermite_average<F: FnMut(f64) -> f64>(f: &mut F, gamma_v: f64, start: usize, tol: f64) -> Result<f64> {
    let scale = gamma_v / LN_2.sqrt();
    // Returns the rule's value and the same sum over |terms|.
    let mut rule = |n: usize| -> Result<(f64, f64)> {
        let (x, w) = gauss_hermite(n)?;
        let (mut sum, mut abs) = (0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let v = wi * f(scale * xi);
            sum += v;
            abs += v.abs();
        }
        if !sum.is_finite() {
            return Err(invalid("integrand is not finite at a Gauss-Hermite node"));
        }
        Ok((sum / PI.sqrt(), abs / PI.sqrt()))
    };
    let mut n = start;
    let (mut prev, _) = rule(n)?;
    let mut change = f64::INFINITY;
    while 2 * n <= MAX_HERMITE_NODES {
        n *= 2;
        let (next, abs) = rule(n)?;
        change = (next - prev).abs();
        if change <= tol * next.abs() || change <= 1e3 * f64::EPSILON * abs {
            return Ok(next);
        }
        prev = next;
    }
    Err(TpaError::Quadrature { achieved: change / prev.abs(), requested: tol })
}

fn require_lorentzian_or_homogeneous(params: &NormalizedParams) -> Result<()> {
    match params.dist.kind {
        DistributionKind::Gaussian => {
            Err(invalid("closed-form averages exist only for Lorentzian or homogeneous broadening"))
        }
        _ => Ok(()),
    }
}

/// Order-2 averaged upper population from the Lorentzian integrals:
/// (8μ²/Δ²)[int₁·(φ₁⁴+φ₂⁴) + 4φ₁²φ₂²/(1+δ²)].
pub fn averaged_n2(params: &NormalizedParams) -> Result<f64> {
    params.validate()?;
    require_lorentzian_or_homogeneous(params)?;
    let (p1s, p2s) = (params.phi1().powi(2), params.phi2().powi(2));
    let d = params.delta;
    let mu2 = params.mu * params.mu;
    let int1 = lorentz_int1(1.0, params.gamma_v(), d);
    Ok(8.0 * mu2 / params.delta_big.powi(2) * (int1 * (p1s * p1s + p2s * p2s) + 4.0 * p1s * p2s / (1.0 + d * d)))
}

/// Order-3 averaged upper population from the Lorentzian integrals.
///
/// Built on [`perturbative::order3_upper_dc`], so it inherits that form's
/// mixed-beam discrepancy: exact for A = 0 or μ = 1 only.
///
/// The A² bracket is written with the 1/γᵥ difference already cancelled,
/// (1/γᵥ)[1/(1+δ²) − 1/((1+γᵥ)²+δ²)] = (2+γᵥ)/((1+δ²)((1+γᵥ)²+δ²)),
/// which is exact for every γᵥ ≥ 0 including the homogeneous limit.
pub fn averaged_n3(params: &NormalizedParams) -> Result<f64> {
    params.validate()?;
    require_lorentzian_or_homogeneous(params)?;
    let (a, mu, d, gv) = (params.a_ratio, params.mu, params.delta, params.gamma_v());
    let a2 = a * a;
    let x = params.phi * params.phi / params.delta_big;
    let h = 1.0 + d * d;
    let inh = (1.0 + gv).powi(2) + d * d;
    let bracket = a2 * ((2.0 + gv) / (h * inh) + 2.0 / (h * h)) + 2.0 * (1.0 + a2 * a2) * (1.0 + gv) / (inh * inh);
    Ok(16.0 * mu * mu * (1.0 + a2) * (mu * mu - 1.0) * d * x * x * x * bracket)
}

/// Narrow features of the perturbative dc population in Ω.
fn perturbative_features(params: &NormalizedParams) -> Vec<f64> {
    vec![0.0, params.delta, -params.delta]
}

/// Velocity average of the per-velocity perturbative dc population: order 2,
/// plus order 3 when `third` is given.
pub fn perturbative_average(
    params: &NormalizedParams,
    quad: &QuadratureSpec,
    third: Option<ThirdOrderDc>,
) -> Result<f64> {
    params.validate()?;
    let f = |omega: f64| {
        let ctx = per_velocity_context(params, omega);
        match third {
            None => perturbative::order2_upper_dc(&ctx, params),
            Some(kind) => perturbative::upper_dc(&ctx, params, kind),
        }
    };
    velocity_average_with_features(f, &params.dist, quad, &perturbative_features(params))
}

/// Fully averaged order-2 + order-3 population for any distribution: the
/// closed forms for Lorentzian and homogeneous broadening, quadrature of the
/// per-velocity closed forms otherwise.
pub fn averaged_population(params: &NormalizedParams, quad: &QuadratureSpec) -> Result<f64> {
    match params.dist.kind {
        DistributionKind::Gaussian => perturbative_average(params, quad, Some(ThirdOrderDc::ClosedForm)),
        _ => Ok(averaged_n2(params)? + averaged_n3(params)?),
    }
}

/// Truncation policy for the oracle average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleAverageSpec {
    /// Fixed truncation; when absent it is chosen by refinement.
    pub n_max: Option<usize>,
    /// Refinement stops when the dc upper population changes by less than
    /// this fraction of its order-2 estimate.
    pub refine_rel_tol: f64,
    pub n_max_cap: usize,
}

impl Default for OracleAverageSpec {
    fn default() -> Self {
        OracleAverageSpec { n_max: None, refine_rel_tol: 1e-10, n_max_cap: DEFAULT_N_MAX_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleAverage {
    pub value: f64,
    pub n_max: usize,
    pub worst_residual: f64,
    pub solves: usize,
}

/// Ω values where the steady state has narrow structure: the two-photon
/// resonances ±δ, the one-photon resonances ±(Δ ± δ) and their
/// three-harmonic images.
pub fn oracle_features(params: &NormalizedParams) -> Vec<f64> {
    let (d, big) = (params.delta, params.delta_big);
    let mut out = vec![0.0, d, -d];
    for r in [big + d, big - d] {
        out.extend([r, -r, r / 3.0, -r / 3.0]);
    }
    out
}

/// Truncation chosen for the oracle average: refinement at Ω = 0 and, for
/// broadened distributions, at the first one-photon resonance.
pub fn oracle_truncation(params: &NormalizedParams, spec: &OracleAverageSpec) -> Result<usize> {
    if let Some(n) = spec.n_max {
        if n < MIN_N_MAX {
            return Err(invalid(format!("n_max must be >= {MIN_N_MAX}, got {n}")));
        }
        return Ok(n);
    }
    if !(spec.refine_rel_tol > 0.0) {
        return Err(invalid("refine_rel_tol must be > 0"));
    }
    let peak = per_velocity_context(params, params.delta);
    let scale = perturbative::order2_upper_dc(&peak, params).abs();
    let tol = (spec.refine_rel_tol * scale).max(f64::MIN_POSITIVE);
    let mut probes = vec![0.0];
    if params.dist.kind != DistributionKind::Homogeneous {
        probes.push(params.delta_big.abs() + params.delta);
    }
    let mut n_max = MIN_N_MAX;
    for omega in probes {
        let problem = SteadyStateProblem::new(*params, omega, MIN_N_MAX)?;
        let (_, n) = oracle::refine_with_cap(&problem, tol, spec.n_max_cap)?;
        n_max = n_max.max(n);
    }
    Ok(n_max)
}

/// Velocity average of the brute-force dc upper population.
pub fn oracle_average(
    params: &NormalizedParams,
    quad: &QuadratureSpec,
    spec: &OracleAverageSpec,
) -> Result<OracleAverage> {
    params.validate()?;
    let n_max = oracle_truncation(params, spec)?;
    let mut worst_residual: f64 = 0.0;
    let mut solves = 0;
    let f = |omega: f64| -> Result<f64> {
        let problem = SteadyStateProblem::new(*params, omega, n_max)?;
        let (rho, diag) = oracle::solve_with_diagnostics(&problem)?;
        worst_residual = worst_residual.max(diag.residual);
        solves += 1;
        oracle::dc_upper_population(&rho)
    };
    let value = try_velocity_average(f, &params.dist, quad, &oracle_features(params))?;
    Ok(OracleAverage { value, n_max, worst_residual, solves })
}
