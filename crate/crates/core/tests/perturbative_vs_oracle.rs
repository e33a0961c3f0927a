use num_complex::Complex64;
use tpa_core::oracle::{dc_upper_population, refine, HarmonicDensityMatrix, SteadyStateProblem};
use tpa_core::perturbative::{
    order0, order1_coherences, order1_twophoton, order2_components, order2_upper_dc, order3_coherences,
    order3_upper_dc, order3_upper_dc_from_coherences, PerturbativeComponents,
};
use tpa_core::{per_velocity_context, NormalizedParams, VelocityDistribution};

const CASES: [(f64, f64, f64, f64); 4] = [
    // (A, μ, δ̃, Ω)
    (0.7, 1.3, 1.0, 0.8),
    (1.0, 1.3, -0.5, 2.0),
    (0.0, 2.0, 0.3, -1.5),
    (0.4, 0.8, 2.0, 0.0),
];

fn params(big: f64, a: f64, mu: f64, d: f64) -> NormalizedParams {
    NormalizedParams::new(big, 1.0, a, mu, d, VelocityDistribution::HOMOGENEOUS).unwrap()
}

fn solve(p: NormalizedParams, omega: f64) -> HarmonicDensityMatrix {
    refine(&SteadyStateProblem::new(p, omega, 5).unwrap(), 1e-18).unwrap().0
}

fn all_orders(p: &NormalizedParams, omega: f64) -> Vec<PerturbativeComponents> {
    let ctx = per_velocity_context(p, omega);
    vec![
        order0(),
        order1_coherences(&ctx, p),
        order1_twophoton(&ctx, p),
        order2_components(&ctx, p),
        order3_coherences(&ctx, p),
    ]
}

/// Δⁿ-scaled order-n part of c(i,j,m) from the solver, with the O(1/Δ)
/// remainder removed by Richardson extrapolation between Δ and 2Δ.
fn extracted(order: u32, (i, j, m): (usize, usize, i64), a: f64, mu: f64, d: f64, omega: f64) -> Complex64 {
    let scaled = |big: f64| {
        let p = params(big, a, mu, d);
        let rho = solve(p, omega);
        let lower: Complex64 =
            all_orders(&p, omega).iter().filter(|c| c.order < order).filter_map(|c| c.get(i, j, m)).sum();
        (rho.get(i, j, m) - lower) * big.powi(order as i32)
    };
    let big = 2000.0;
    2.0 * scaled(2.0 * big) - scaled(big)
}

fn predicted(set: usize, key: (usize, usize, i64), a: f64, mu: f64, d: f64, omega: f64) -> Complex64 {
    let big = 2000.0;
    let p = params(big, a, mu, d);
    let c = &all_orders(&p, omega)[set];
    c.get(key.0, key.1, key.2).unwrap() * big.powi(c.order as i32)
}

fn assert_component(set: usize, key: (usize, usize, i64), tol: f64) {
    for (a, mu, d, omega) in CASES {
        let order = all_orders(&params(1e3, a, mu, d), omega)[set].order;
        let want = predicted(set, key, a, mu, d, omega);
        let got = extracted(order, key, a, mu, d, omega);
        let scale = want.norm().max(1.0);
        assert!(
            (got - want).norm() <= tol * scale,
            "order {order} c{key:?} at A={a} mu={mu} d={d} omega={omega}: solver {got} vs {want}"
        );
    }
}

#[test]
fn first_order_one_photon_coherences() {
    for key in [(0, 1, 1), (0, 1, -1), (2, 0, 1), (2, 0, -1)] {
        assert_component(1, key, 1e-4);
    }
}

#[test]
fn first_order_two_photon_coherence() {
    for key in [(2, 1, 2), (2, 1, 0), (2, 1, -2)] {
        assert_component(2, key, 1e-4);
    }
}

#[test]
fn second_order_one_photon_coherences() {
    for key in [(2, 0, 3), (2, 0, 1), (2, 0, -1), (2, 0, -3), (0, 1, 3), (0, 1, 1), (0, 1, -1), (0, 1, -3)] {
        assert_component(3, key, 1e-4);
    }
}

#[test]
fn second_order_populations() {
    for key in [(2, 2, 0), (0, 0, 0), (0, 0, 2), (0, 0, -2), (2, 1, 0)] {
        assert_component(3, key, 1e-4);
    }
}

#[test]
fn second_order_upper_grating_magnitude() {
    for (a, mu, d, omega) in CASES {
        for m in [2, -2] {
            let want = predicted(3, (2, 2, m), a, mu, d, omega).norm();
            let got = extracted(2, (2, 2, m), a, mu, d, omega).norm();
            assert!((got - want).abs() <= 1e-4 * want.max(1.0), "m={m}: {got} vs {want}");
        }
    }
}

#[test]
fn third_order_upper_population() {
    for (a, mu, d, omega) in CASES {
        let scaled = |big: f64| {
            let p = params(big, a, mu, d);
            let ctx = per_velocity_context(&p, omega);
            (dc_upper_population(&solve(p, omega)).unwrap() - order2_upper_dc(&ctx, &p)) * big.powi(3)
        };
        let got = 2.0 * scaled(4000.0) - scaled(2000.0);
        let p = params(2000.0, a, mu, d);
        let ctx = per_velocity_context(&p, omega);
        let want = order3_upper_dc_from_coherences(&ctx, &p) * 2000f64.powi(3);
        assert!((got - want).abs() <= 1e-3 * want.abs().max(1.0), "A={a}: {got} vs {want}");
        if a == 0.0 || mu == 1.0 {
            let closed = order3_upper_dc(&ctx, &p) * 2000f64.powi(3);
            assert!((closed - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }
}

#[test]
fn closed_third_order_misses_mixed_beam_terms() {
    let (a, mu, d, omega) = CASES[0];
    let p = params(2000.0, a, mu, d);
    let ctx = per_velocity_context(&p, omega);
    let closed = order3_upper_dc(&ctx, &p);
    let coherent = order3_upper_dc_from_coherences(&ctx, &p);
    assert!((closed - coherent).abs() > 0.1 * coherent.abs());
}
