//! Closed-form averaged lineshape observables in normalized variables
//! (δ̃ = δ/γ, γ̃ᵥ = γᵥ/γ, x = φ²/(γΔ)), and numeric locators that check them.

use serde::{Deserialize, Serialize};

use crate::averaging::{perturbative_average, QuadratureSpec};
use crate::error::{invalid, Result, TpaError};
use crate::params::{DistributionKind, NormalizedParams};
use crate::perturbative::ThirdOrderDc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineshapeParams {
    /// φ²/(γΔ), carrying the sign of Δ.
    pub x: f64,
    pub a_ratio: f64,
    pub gamma_v_tilde: f64,
    pub mu: f64,
}

impl LineshapeParams {
    pub fn new(x: f64, a_ratio: f64, gamma_v_tilde: f64, mu: f64) -> Result<Self> {
        let p = LineshapeParams { x, a_ratio, gamma_v_tilde, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.a_ratio, self.gamma_v_tilde, self.mu].iter().all(|v| v.is_finite()) {
            return Err(invalid("lineshape parameters must be finite"));
        }
        if self.a_ratio < 0.0 || self.gamma_v_tilde < 0.0 {
            return Err(invalid("a_ratio and gamma_v_tilde must be >= 0"));
        }
        Ok(())
    }

    /// Lineshape view of a Lorentzian or homogeneous parameter set.
    pub fn from_normalized(p: &NormalizedParams) -> Result<Self> {
        if p.dist.kind == DistributionKind::Gaussian {
            return Err(invalid("closed-form lineshapes need Lorentzian or homogeneous broadening"));
        }
        LineshapeParams::new(p.x(), p.a_ratio, p.gamma_v(), p.mu)
    }

    pub fn with_a(mut self, a_ratio: f64) -> Self {
        self.a_ratio = a_ratio;
        self
    }

    pub fn with_gamma_v(mut self, gamma_v_tilde: f64) -> Self {
        self.gamma_v_tilde = gamma_v_tilde;
        self
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }
}

/// w and f of the width formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthAuxiliaries {
    pub w: f64,
    pub f: f64,
}

impl WidthAuxiliaries {
    pub fn new(a_ratio: f64, gamma_v_tilde: f64) -> Self {
        let g = 1.0 + gamma_v_tilde;
        let a2 = a_ratio * a_ratio;
        let a4 = a2 * a2;
        WidthAuxiliaries { w: g * g, f: 0.5 * (1.0 + a4 - 4.0 * g * a2) / (1.0 + a4 + 4.0 * g * a2) }
    }
}

/// N₂ = 8μ²x²[(1+γ̃ᵥ)(1+A⁴)/((1+γ̃ᵥ)²+δ̃²) + 4A²/(1+δ̃²)].
pub fn n2(p: &LineshapeParams, delta_tilde: f64) -> f64 {
    let g = 1.0 + p.gamma_v_tilde;
    let a2 = p.a_ratio * p.a_ratio;
    let d2 = delta_tilde * delta_tilde;
    8.0 * p.mu * p.mu * p.x * p.x * (g * (1.0 + a2 * a2) / (g * g + d2) + 4.0 * a2 / (1.0 + d2))
}

/// Homogeneous broadening: 8μ²x²(A⁴+4A²+1)/(1+δ̃²).
pub fn n2_hom(p: &LineshapeParams, delta_tilde: f64) -> f64 {
    let a2 = p.a_ratio * p.a_ratio;
    8.0 * p.mu * p.mu * p.x * p.x * (a2 * a2 + 4.0 * a2 + 1.0) / (1.0 + delta_tilde * delta_tilde)
}

/// Single traveling wave: 8μ²x²(1+γ̃ᵥ)/((1+γ̃ᵥ)²+δ̃²).
pub fn n2_tw(p: &LineshapeParams, delta_tilde: f64) -> f64 {
    let g = 1.0 + p.gamma_v_tilde;
    8.0 * p.mu * p.mu * p.x * p.x * g / (g * g + delta_tilde * delta_tilde)
}

/// Balanced standing wave: 16μ²x²[(1+γ̃ᵥ)/((1+γ̃ᵥ)²+δ̃²) + 2/(1+δ̃²)].
pub fn n2_sw(p: &LineshapeParams, delta_tilde: f64) -> f64 {
    let g = 1.0 + p.gamma_v_tilde;
    let d2 = delta_tilde * delta_tilde;
    16.0 * p.mu * p.mu * p.x * p.x * (g / (g * g + d2) + 2.0 / (1.0 + d2))
}

/// N₂ at δ̃ = 0: 8μ²x²[(A⁴+4A²+1)+4γ̃ᵥA²]/(1+γ̃ᵥ).
pub fn n2_max(p: &LineshapeParams) -> f64 {
    let a2 = p.a_ratio * p.a_ratio;
    let gv = p.gamma_v_tilde;
    8.0 * p.mu * p.mu * p.x * p.x * ((a2 * a2 + 4.0 * a2 + 1.0) + 4.0 * gv * a2) / (1.0 + gv)
}

/// N₃ = 16μ²(μ²−1)(1+A²)δ̃x³(B₁+B₂).
///
/// B₁ = A²[2/(1+δ̃²)² + (2+γ̃ᵥ)/((1+δ̃²)((1+γ̃ᵥ)²+δ̃²))] is the 1/γ̃ᵥ
/// difference quotient with the cancellation done by hand, so it holds at
/// γ̃ᵥ = 0 without a special branch. B₂ = 2(1+A⁴)(1+γ̃ᵥ)/((1+γ̃ᵥ)²+δ̃²)².
pub fn n3(p: &LineshapeParams, delta_tilde: f64) -> f64 {
    let g = 1.0 + p.gamma_v_tilde;
    let a2 = p.a_ratio * p.a_ratio;
    let h = 1.0 + delta_tilde * delta_tilde;
    let inh = g * g + delta_tilde * delta_tilde;
    let b1 = a2 * (2.0 / (h * h) + (1.0 + g) / (h * inh));
    let b2 = 2.0 * (1.0 + a2 * a2) * g / (inh * inh);
    let mu2 = p.mu * p.mu;
    16.0 * mu2 * (mu2 - 1.0) * (1.0 + a2) * delta_tilde * p.x.powi(3) * (b1 + b2)
}

/// Full width at half maximum of N₂ in δ̃: Γ² = 4[√(w+(w−1)²f²) + (w−1)f].
pub fn width_fwhm(a_ratio: f64, gamma_v_tilde: f64) -> f64 {
    let WidthAuxiliaries { w, f } = WidthAuxiliaries::new(a_ratio, gamma_v_tilde);
    let wm1 = w - 1.0;
    (4.0 * ((w + wm1 * wm1 * f * f).sqrt() + wm1 * f)).sqrt()
}

/// Leading-order peak displacement of N₂ + N₃:
/// 2(1+A²)(μ²−1)x[(1+A⁴)+A²(1+γ̃ᵥ)(2+5γ̃ᵥ/2+γ̃ᵥ²)] / [(1+A⁴)+4A²(1+γ̃ᵥ)³].
///
/// Follows from [`n3`]; for A > 0 and μ ≠ 1 the full dynamics give a larger
/// shift, see [`leading_order_shift`] with [`ThirdOrderDc::FromCoherences`].
pub fn stark_shift(p: &LineshapeParams) -> f64 {
    let a2 = p.a_ratio * p.a_ratio;
    let a4 = a2 * a2;
    let gv = p.gamma_v_tilde;
    let g = 1.0 + gv;
    let num = (1.0 + a4) + a2 * g * (2.0 + 2.5 * gv + gv * gv);
    let den = (1.0 + a4) + 4.0 * a2 * g * g * g;
    2.0 * (1.0 + a2) * (p.mu * p.mu - 1.0) * p.x * num / den
}

fn locator(msg: impl Into<String>) -> TpaError {
    TpaError::Locator(msg.into())
}

/// Full width at half of `curve(0)` for an even curve peaked at 0.
///
/// The half-maximum point is bracketed by doubling from δ̃ = 1 and then
/// bisected until the bracket is narrower than `tol`.
pub fn numeric_fwhm<F: Fn(f64) -> f64>(curve: F, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid("numeric_fwhm tolerance must be > 0"));
    }
    let top = curve(0.0);
    if !(top.is_finite() && top > 0.0) {
        return Err(locator(format!("curve value at 0 must be positive, got {top}")));
    }
    let half = 0.5 * top;
    let mut hi = 1.0;
    let mut steps = 0;
    while curve(hi) >= half {
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(locator("curve does not fall below half maximum"));
        }
    }
    for k in 1..=8 {
        let t = hi * k as f64 / 8.0;
        let (l, r) = (curve(-t), curve(t));
        if (l - r).abs() > 1e-8 * top {
            return Err(locator(format!("curve is not even: f({t}) = {r}, f(-{t}) = {l}")));
        }
        if r > top * (1.0 + 1e-12) {
            return Err(locator(format!("curve exceeds its value at 0 at {t}")));
        }
    }
    let mut lo = if steps == 0 { 0.0 } else { 0.5 * hi };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if curve(mid) >= half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + hi)
}

/// Argmax of a curve with a single maximum near 0.
///
/// The search starts on ±4·`scale`, widening geometrically when the best
/// sample sits on the edge. Golden-section search narrows the bracket, and
/// the result is polished by bisecting the sign of a centered difference.
pub fn numeric_peak<F: Fn(f64) -> f64>(curve: F, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("numeric_peak scale must be > 0"));
    }
    const GRID: usize = 80;
    let mut half = 4.0 * scale;
    let (mut a, mut b);
    let mut expansions = 0;
    loop {
        let xs: Vec<f64> = (0..=GRID).map(|k| -half + 2.0 * half * k as f64 / GRID as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| curve(x)).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(locator("curve is not finite inside the bracket"));
        }
        let best = (0..=GRID).fold(0, |acc, k| if ys[k] > ys[acc] { k } else { acc });
        if best > 0 && best < GRID {
            a = xs[best - 1];
            b = xs[best + 1];
            break;
        }
        expansions += 1;
        if expansions > 20 {
            return Err(locator("no interior maximum found"));
        }
        half *= 4.0;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (curve(c), curve(d));
    while b - a > 1e-6 * scale {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = curve(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = curve(d);
        }
    }
    let h = 1e-5 * scale;
    let slope = |t: f64| curve(t + h) - curve(t - h);
    let (mut lo, mut hi) = (a - 1e-6 * scale, b + 1e-6 * scale);
    if slope(lo) <= 0.0 || slope(hi) >= 0.0 {
        return Ok(0.5 * (a + b));
    }
    while hi - lo > 1e-12 * scale.max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Leading-order shift of the averaged resonance, δ* = −N₃′(0)/N₂″(0),
/// for any distribution. Both derivatives are taken by Richardson-extrapolated
/// centered differences of velocity averages of the per-velocity forms.
///
/// [`ThirdOrderDc::ClosedForm`] reproduces [`stark_shift`];
/// [`ThirdOrderDc::FromCoherences`] follows the full dynamics, which differ
/// from the closed form when both beams are present.
pub fn leading_order_shift(params: &NormalizedParams, quad: &QuadratureSpec, third: ThirdOrderDc) -> Result<f64> {
    let n2 = |d: f64| perturbative_average(&params.with_delta(d), quad, None);
    let n3 = |d: f64| -> Result<f64> {
        let p = params.with_delta(d);
        Ok(perturbative_average(&p, quad, Some(third))? - perturbative_average(&p, quad, None)?)
    };
    let second = |h: f64| -> Result<f64> { Ok((n2(h)? - 2.0 * n2(0.0)? + n2(-h)?) / (h * h)) };
    let first = |h: f64| -> Result<f64> { Ok((n3(h)? - n3(-h)?) / (2.0 * h)) };
    // The narrowest structure of either curve has width γ.
    let h = 0.02;
    let curvature = (4.0 * second(0.5 * h)? - second(h)?) / 3.0;
    let slope = (4.0 * first(0.5 * h)? - first(h)?) / 3.0;
    if !(curvature < 0.0) {
        return Err(locator(format!("N2 is not peaked at 0 (curvature {curvature:.3e})")));
    }
    Ok(-slope / curvature)
}

/// N₂ at δ̃ = 0 for any distribution.
pub fn averaged_n2_max(params: &NormalizedParams, quad: &QuadratureSpec) -> Result<f64> {
    match params.dist.kind {
        DistributionKind::Gaussian => perturbative_average(&params.with_delta(0.0), quad, None),
        _ => Ok(n2_max(&LineshapeParams::from_normalized(params)?)),
    }
}

/// FWHM in δ̃ of the averaged order-2 population: the closed form for
/// Lorentzian and homogeneous broadening, a numeric width otherwise.
pub fn averaged_width(params: &NormalizedParams, quad: &QuadratureSpec) -> Result<f64> {
    if params.dist.kind != DistributionKind::Gaussian {
        return Ok(width_fwhm(params.a_ratio, params.gamma_v()));
    }
    let failure = std::cell::RefCell::new(None);
    let curve = |d: f64| match perturbative_average(&params.with_delta(d), quad, None) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let width = numeric_fwhm(curve, 1e-10);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => width,
    }
}

/// Leading-order Stark shift in δ̃: the closed form for Lorentzian and
/// homogeneous broadening, [`leading_order_shift`] otherwise.
pub fn averaged_shift(params: &NormalizedParams, quad: &QuadratureSpec) -> Result<f64> {
    match params.dist.kind {
        DistributionKind::Gaussian => leading_order_shift(params, quad, ThirdOrderDc::ClosedForm),
        _ => Ok(stark_shift(&LineshapeParams::from_normalized(params)?)),
    }
}
