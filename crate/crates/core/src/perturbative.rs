//! Closed-form per-velocity solution of the steady state, order by order in 1/Δ.
//!
//! All expressions are written in the physical detuning Δ and in units of γ,
//! so the order-n components scale exactly as Δ⁻ⁿ. Only the harmonics that
//! have explicit closed forms are populated; the brute-force solver in
//! [`crate::oracle`] covers everything else.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::params::{NormalizedParams, PerVelocityContext};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Harmonic coefficients (i, j, n) ↦ c of one perturbative order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbativeComponents {
    pub order: u32,
    pub terms: BTreeMap<(usize, usize, i64), Complex64>,
}

impl PerturbativeComponents {
    fn new(order: u32) -> Self {
        PerturbativeComponents { order, terms: BTreeMap::new() }
    }

    fn set(&mut self, i: usize, j: usize, n: i64, value: Complex64) {
        self.terms.insert((i, j, n), value);
    }

    /// `None` when this order has no closed form for the requested harmonic.
    pub fn get(&self, i: usize, j: usize, n: i64) -> Option<Complex64> {
        self.terms.get(&(i, j, n)).copied()
    }
}

/// Which closed form to use for the third-order dc upper population.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThirdOrderDc {
    /// The compact expression returned by [`order3_upper_dc`].
    ClosedForm,
    /// Reduction of the order-3 one-photon coherences, [`order3_upper_dc_from_coherences`].
    FromCoherences,
}

struct Drive {
    p1: f64,
    p2: f64,
    mu: f64,
    big: f64,
}

impl Drive {
    fn new(params: &NormalizedParams) -> Self {
        Drive { p1: params.phi1(), p2: params.phi2(), mu: params.mu, big: params.delta_big }
    }
}

/// Zeroth order: everything in the lower level.
pub fn order0() -> PerturbativeComponents {
    let mut c = PerturbativeComponents::new(0);
    c.set(1, 1, 0, re(1.0));
    c.set(0, 1, 1, re(0.0));
    c.set(0, 1, -1, re(0.0));
    c.set(2, 0, 1, re(0.0));
    c.set(2, 0, -1, re(0.0));
    c
}

/// First-order one-photon coherences: ρ₀₁ = −(2/Δ)E, ρ₂₀ = 0.
pub fn order1_coherences(_ctx: &PerVelocityContext, params: &NormalizedParams) -> PerturbativeComponents {
    let d = Drive::new(params);
    let mut c = PerturbativeComponents::new(1);
    c.set(0, 1, 1, re(-2.0 * d.p1 / d.big));
    c.set(0, 1, -1, re(2.0 * d.p2 / d.big));
    c.set(2, 0, 1, re(0.0));
    c.set(2, 0, -1, re(0.0));
    c
}

/// First-order two-photon coherence ρ₂₁ on harmonics 0, ±2.
pub fn order1_twophoton(ctx: &PerVelocityContext, params: &NormalizedParams) -> PerturbativeComponents {
    let d = Drive::new(params);
    let pre = -2.0 * I * d.mu / d.big;
    let mut c = PerturbativeComponents::new(1);
    c.set(2, 1, 2, pre * d.p1 * d.p1 / ctx.d_plus);
    c.set(2, 1, 0, -pre * 2.0 * d.p1 * d.p2 / ctx.d_zero);
    c.set(2, 1, -2, pre * d.p2 * d.p2 / ctx.d_minus);
    for i in 0..3 {
        c.set(i, i, 0, re(0.0));
    }
    c
}

/// Second-order components: one-photon coherences on harmonics ±1, ±3, and
/// the dc and ±2 parts of ρ₂₂, ρ₀₀ and ρ₂₁.
pub fn order2_components(ctx: &PerVelocityContext, params: &NormalizedParams) -> PerturbativeComponents {
    let Drive { p1, p2, mu, big } = Drive::new(params);
    let (dp, dm, d0) = (ctx.d_plus, ctx.d_minus, ctx.d_zero);
    let kv = ctx.kv();
    let g = re(1.0);
    let big2 = big * big;
    let (p1s, p2s) = (p1 * p1, p2 * p2);
    let mut c = PerturbativeComponents::new(2);

    // ρ₂₀⁽²⁾
    let pre = 4.0 * I * mu / big2;
    c.set(2, 0, 3, pre * (-p1s * p2 / dp));
    c.set(2, 0, 1, pre * (p1s * p1 / dp + 2.0 * p1 * p2s / d0));
    c.set(2, 0, -1, -pre * (p2s * p2 / dm + 2.0 * p1s * p2 / d0));
    c.set(2, 0, -3, pre * (p1 * p2s / dm));

    // ρ₀₁⁽²⁾, including the (γ + D±) relaxation pieces.
    let pre = 4.0 * I * mu * mu / big2;
    let mu2x2 = 2.0 * mu * mu;
    c.set(0, 1, 3, pre * (-p1s * p2 / dp));
    c.set(0, 1, 1, pre * ((g + dp) * p1 / mu2x2 + p1s * p1 / dp + 2.0 * p1 * p2s / d0));
    c.set(0, 1, -1, -pre * ((g + dm) * p2 / mu2x2 + p2s * p2 / dm + 2.0 * p1s * p2 / d0));
    c.set(0, 1, -3, pre * (p1 * p2s / dm));

    // ρ₂₂⁽²⁾: dc and e^{±2ikz}; the e^{±4ikz} parts have no closed form here.
    let dc = 4.0 * mu * mu / big2 * (p1s * p1s / dp + p2s * p2s / dm + 4.0 * p1s * p2s / d0);
    c.set(2, 2, 0, re(2.0 * dc.re));
    let motional = (g + I * kv) / (g - 2.0 * I * kv);
    let second = -16.0 * mu * mu * p1 * p2 / big2
        * motional
        * (p1s / (d0.conj() * dp) + p2s / (d0 * dm.conj()));
    c.set(2, 2, 2, second);
    c.set(2, 2, -2, second.conj());

    // ρ₀₀⁽²⁾
    c.set(0, 0, 0, re(8.0 * (p1s + p2s) / big2));
    let second = -8.0 / big2 * (g + I * kv) / (g + 2.0 * I * kv) * p1 * p2;
    c.set(0, 0, 2, second);
    c.set(0, 0, -2, second.conj());

    // ρ₂₁⁽²⁾
    let mm1 = mu * mu - 1.0;
    c.set(
        2,
        1,
        0,
        4.0 * mu * p1 * p2 / (big2 * d0)
            * (g + d0 + mm1 * (2.0 * (p1s + p2s) / d0 + p1s / dp + p2s / dm)),
    );
    c.set(
        2,
        1,
        2,
        -2.0 * mu * p1s / (big2 * d0) * (g + dp + 2.0 * mm1 * (2.0 * p2s / d0 + (p1s + p2s) / dm)),
    );
    c.set(
        2,
        1,
        -2,
        -2.0 * mu * p2s / (big2 * d0) * (g + dm + 2.0 * mm1 * (2.0 * p1s / d0 + (p1s + p2s) / dp)),
    );
    c
}

/// Spatial dc part of the second-order upper population:
/// (4μ²/γΔ²)[φ₁⁴/D₊ + φ₂⁴/D₋ + 4φ₁²φ₂²/D₀] + c.c.
pub fn order2_upper_dc(ctx: &PerVelocityContext, params: &NormalizedParams) -> f64 {
    let Drive { p1, p2, mu, big } = Drive::new(params);
    let (p1s, p2s) = (p1 * p1, p2 * p2);
    let bracket = p1s * p1s / ctx.d_plus + p2s * p2s / ctx.d_minus + 4.0 * p1s * p2s / ctx.d_zero;
    8.0 * mu * mu / (big * big) * bracket.re
}

/// Compact closed form of the third-order dc upper population.
///
/// Proportional to μ²(μ² − 1)/Δ³. For a single traveling wave (φ₂ = 0) it
/// agrees with the steady-state solver; its mixed φ₁²φ₂² part does not (see
/// [`order3_upper_dc_from_coherences`]).
pub fn order3_upper_dc(ctx: &PerVelocityContext, params: &NormalizedParams) -> f64 {
    let Drive { p1, p2, mu, big } = Drive::new(params);
    let delta = params.delta;
    let (om, kv) = (ctx.omega, ctx.kv());
    let (p1s, p2s) = (p1 * p1, p2 * p2);
    let sum = p1s + p2s;
    let (ap, am, a0) = (ctx.d_plus.norm_sqr(), ctx.d_minus.norm_sqr(), ctx.d_zero.norm_sqr());
    let forward = (delta - om) / (ap * ap) * sum * p1s * p1s;
    let mixed = ((delta - kv) / ap * p1s + (delta + kv) / am * p2s + delta / a0 * sum) * p1s * p2s / a0;
    let backward = (delta + om) / (am * am) * sum * p2s * p2s;
    32.0 * mu * mu * (mu * mu - 1.0) / (big * big * big) * (forward + mixed + backward)
}

/// Third-order one-photon coherence ρ₂₀⁽³⁾ on harmonics ±1.
///
/// Only the combination used by [`order3_upper_dc_from_coherences`] agrees
/// with the steady-state solver; the individual harmonics do not.
pub fn order3_coherences(ctx: &PerVelocityContext, params: &NormalizedParams) -> PerturbativeComponents {
    let Drive { p1, p2, mu, big } = Drive::new(params);
    let (dp, dm, d0) = (ctx.d_plus, ctx.d_minus, ctx.d_zero);
    let kv = ctx.kv();
    let g = re(1.0);
    let (p1s, p2s) = (p1 * p1, p2 * p2);
    let mm1 = mu * mu - 1.0;
    let four_mu2 = 4.0 * mu * mu;
    let big3 = big * big * big;
    // Motional factors (γ ± ikv)/(γ ∓ 2ikv) and γ/(γ ± 2ikv).
    let m_plus = (g + I * kv) / (g - 2.0 * I * kv);
    let m_minus = (g - I * kv) / (g + 2.0 * I * kv);

    let plus = {
        let t4 = (mm1 / (dp * dp) - four_mu2 / dp.norm_sqr()) * p1s * p1s;
        let t_mixed = (mm1 / d0 * (2.0 / d0 + 3.0 / dp + d0 / (dp * dp))
            - four_mu2 / d0.conj() * (4.0 / d0 - m_plus / dp))
            * p1s
            * p2s;
        let t_back = (4.0 - dp / d0 + g / (g + 2.0 * I * kv)) * p2s;
        let t_back4 =
            (mm1 / d0 * (1.0 / dm + 2.0 / d0) - four_mu2 / dm.conj() * (1.0 / dm + m_plus / d0)) * p2s * p2s;
        8.0 * mu * p1 / big3 * (t4 + 2.0 * p1s + t_mixed + t_back + t_back4)
    };
    let minus = {
        let t4 = (mm1 / (dm * dm) - four_mu2 / dm.norm_sqr()) * p2s * p2s;
        let t_mixed = (mm1 / d0 * (2.0 / d0 + 3.0 / dm + d0 / (dm * dm))
            - four_mu2 / d0.conj() * (4.0 / d0 + m_minus / dm))
            * p2s
            * p1s;
        let t_fwd = (4.0 - dm / d0 + g / (g - 2.0 * I * kv)) * p1s;
        let t_fwd4 =
            (mm1 / d0 * (1.0 / dp + 2.0 / d0) - four_mu2 / dp.conj() * (1.0 / dp - m_minus / d0)) * p1s * p1s;
        -8.0 * mu * p2 / big3 * (t4 + 2.0 * p2s + t_mixed + t_fwd + t_fwd4)
    };
    let mut c = PerturbativeComponents::new(3);
    c.set(2, 0, 1, plus);
    c.set(2, 0, -1, minus);
    c
}

/// Third-order dc upper population obtained by inserting the order-3
/// coherences into the ρ₂₂ equation and keeping the spatial dc part:
/// (2μ/γ)·(φ₁ Im ρ₂₀⁽³⁾₊₁ − φ₂ Im ρ₂₀⁽³⁾₋₁).
pub fn order3_upper_dc_from_coherences(ctx: &PerVelocityContext, params: &NormalizedParams) -> f64 {
    let c = order3_coherences(ctx, params);
    let plus = c.get(2, 0, 1).unwrap_or_default();
    let minus = c.get(2, 0, -1).unwrap_or_default();
    2.0 * params.mu * (params.phi1() * plus.im - params.phi2() * minus.im)
}

/// Second- plus third-order dc upper population for one velocity class.
pub fn upper_dc(ctx: &PerVelocityContext, params: &NormalizedParams, third: ThirdOrderDc) -> f64 {
    let n3 = match third {
        ThirdOrderDc::ClosedForm => order3_upper_dc(ctx, params),
        ThirdOrderDc::FromCoherences => order3_upper_dc_from_coherences(ctx, params),
    };
    order2_upper_dc(ctx, params) + n3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{per_velocity_context, VelocityDistribution};

    fn params(big: f64, a: f64, mu: f64, delta: f64) -> NormalizedParams {
        NormalizedParams::new(big, 1.0, a, mu, delta, VelocityDistribution::HOMOGENEOUS).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn zeroth_order_is_ground_state_without_coherence() {
        let c = order0();
        assert_eq!(c.get(1, 1, 0), Some(re(1.0)));
        assert_eq!(c.get(2, 0, 1), Some(re(0.0)));
        assert_eq!(c.get(0, 1, -1), Some(re(0.0)));
    }

    #[test]
    fn first_order_coherences() {
        let p = params(100.0, 1.0, 1.0, 0.0);
        let ctx = per_velocity_context(&p, 0.0);
        let c = order1_coherences(&ctx, &p);
        assert_eq!(c.get(0, 1, 1), Some(re(-0.02)));
        assert_eq!(c.get(0, 1, -1), Some(re(0.02)));
        assert_eq!(c.get(2, 0, 1), Some(re(0.0)));

        let undriven = NormalizedParams { phi: 0.0, ..p };
        let c = order1_coherences(&ctx, &undriven);
        assert!(c.terms.values().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn first_order_two_photon_coherence() {
        let p = params(100.0, 1.0, 1.0, 0.0);
        let ctx = per_velocity_context(&p, 0.0);
        let c = order1_twophoton(&ctx, &p);
        assert!((c.get(2, 1, 0).unwrap() - Complex64::new(0.0, 0.04)).norm() < 1e-16);

        let tw = params(100.0, 0.0, 1.0, 0.3);
        let c = order1_twophoton(&per_velocity_context(&tw, 0.7), &tw);
        assert_eq!(c.get(2, 1, 0).unwrap().norm(), 0.0);
        assert_eq!(c.get(2, 1, -2).unwrap().norm(), 0.0);

        let decoupled = params(100.0, 1.0, 0.0, 0.3);
        let c = order1_twophoton(&per_velocity_context(&decoupled, 0.7), &decoupled);
        assert!(c.terms.values().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn second_order_dc_values() {
        let p = params(100.0, 1.0, 1.0, 0.0);
        let ctx = per_velocity_context(&p, 0.0);
        assert!(close(order2_upper_dc(&ctx, &p), 4.8e-3, 1e-14));
        let c = order2_components(&ctx, &p);
        assert!(close(c.get(2, 2, 0).unwrap().re, 4.8e-3, 1e-14));

        // Traveling wave: 8μ²φ⁴/Δ² · γ/(γ² + (δ − Ω)²), peaked at δ = Ω.
        let tw = params(100.0, 0.0, 1.3, 0.8);
        for omega in [-1.0, 0.0, 0.8, 2.5] {
            let ctx = per_velocity_context(&tw, omega);
            let want = 8.0 * 1.69 / 1e4 / (1.0 + (0.8 - omega) * (0.8 - omega));
            assert!(close(order2_upper_dc(&ctx, &tw), want, 1e-13));
        }

        let undriven = NormalizedParams { phi: 0.0, ..p };
        let c = order2_components(&ctx, &undriven);
        assert!(c.terms.values().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn third_order_dc_closed_form_values() {
        // μ = 1: no third-order correction at all.
        let p = params(100.0, 0.7, 1.0, 0.4);
        assert_eq!(order3_upper_dc(&per_velocity_context(&p, 1.3), &p), 0.0);
        // δ = Ω = 0: every term carries a vanishing detuning factor.
        let p = params(100.0, 0.7, 1.5, 0.0);
        assert_eq!(order3_upper_dc(&per_velocity_context(&p, 0.0), &p), 0.0);
        // μ = √2, δ = 1, Ω = 0, traveling wave: 32·2·1·(1/(1+1)²)/10⁶.
        let p = params(100.0, 0.0, 2f64.sqrt(), 1.0);
        let got = order3_upper_dc(&per_velocity_context(&p, 0.0), &p);
        assert!(close(got, 1.6e-5, 1e-12), "{got}");
    }

    #[test]
    fn third_order_coherences_structure() {
        let tw = params(50.0, 0.0, 1.7, 0.6);
        let c = order3_coherences(&per_velocity_context(&tw, 0.9), &tw);
        assert_eq!(c.get(2, 0, -1).unwrap().norm(), 0.0);
        assert!(c.get(2, 0, 1).unwrap().norm() > 0.0);

        // μ² = 1 removes the (μ² − 1) pieces but not the 4μ² pieces.
        let p = params(50.0, 0.6, 1.0, 0.6);
        let c = order3_coherences(&per_velocity_context(&p, 0.9), &p);
        assert!(c.get(2, 0, 1).unwrap().norm() > 0.0);
    }

    #[test]
    fn coherence_reduction_matches_closed_form_for_traveling_wave() {
        for (mu, delta, omega) in [(1.4, 1.0, 0.5), (0.6, -0.3, 2.0), (2.0, 2.5, -1.0)] {
            let p = params(80.0, 0.0, mu, delta);
            let ctx = per_velocity_context(&p, omega);
            let a = order3_upper_dc(&ctx, &p);
            let b = order3_upper_dc_from_coherences(&ctx, &p);
            assert!(close(b, a, 1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn exact_power_law_in_detuning() {
        let p = params(100.0, 0.6, 1.3, 0.7);
        let q = NormalizedParams { delta_big: 200.0, ..p };
        let (cp, cq) = (per_velocity_context(&p, 0.4), per_velocity_context(&q, 0.4));
        assert!(close(order2_upper_dc(&cq, &q), order2_upper_dc(&cp, &p) / 4.0, 1e-15));
        assert!(close(order3_upper_dc(&cq, &q), order3_upper_dc(&cp, &p) / 8.0, 1e-15));
        assert!(close(
            order3_upper_dc_from_coherences(&cq, &q),
            order3_upper_dc_from_coherences(&cp, &p) / 8.0,
            1e-14
        ));
    }

    #[test]
    fn parity_under_detuning_and_velocity_reversal() {
        let p = params(100.0, 0.6, 1.3, 0.7);
        let m = p.with_delta(-0.7);
        for omega in [0.0, 0.4, -2.0] {
            let (a, b) = (per_velocity_context(&p, omega), per_velocity_context(&m, -omega));
            assert!(close(order2_upper_dc(&b, &m), order2_upper_dc(&a, &p), 1e-14));
            assert!(close(order3_upper_dc(&b, &m), -order3_upper_dc(&a, &p), 1e-14));
        }
    }
}
