//! Brute-force steady state of the population-matrix equations at fixed Ω.
//!
//! Each element is expanded in spatial harmonics, ρᵢⱼ(z) = Σₙ c(i,j,n) e^{inkz},
//! truncated at |n| ≤ n_max. With ∂t → 0 the advective term v∂z becomes the
//! diagonal factor i·n·Ω/2, and the drive E(z) = φ₁e^{ikz} − φ₂e^{−ikz} couples
//! harmonic n to n ± 1. All nine components are unknowns; hermiticity is
//! checked afterwards rather than imposed.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Result, TpaError};
use crate::linalg::SparseMatrix;
use crate::params::NormalizedParams;

/// Smallest truncation able to hold the e^{±3ikz} content of the second-order coherences.
pub const MIN_N_MAX: usize = 3;
pub const DEFAULT_N_MAX_CAP: usize = 41;
const CONDITION_WARNING: f64 = 1e12;
const RESIDUAL_LIMIT: f64 = 1e-10;
const IMAG_LIMIT: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyStateProblem {
    pub params: NormalizedParams,
    /// Doppler variable Ω = 2kv in units of γ.
    pub omega: f64,
    pub n_max: usize,
}

impl SteadyStateProblem {
    pub fn new(params: NormalizedParams, omega: f64, n_max: usize) -> Result<Self> {
        let p = SteadyStateProblem { params, omega, n_max };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.n_max < MIN_N_MAX {
            return Err(TpaError::InvalidParameter(format!(
                "n_max must be >= {MIN_N_MAX}, got {}",
                self.n_max
            )));
        }
        if !self.omega.is_finite() {
            return Err(TpaError::InvalidParameter("omega must be finite".into()));
        }
        self.params.validate()
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn unknowns(&self) -> usize {
        9 * (2 * self.n_max + 1)
    }
}

/// Position of c(i,j,n) in the unknown vector.
#[inline]
pub fn unknown_index(n_max: usize, i: usize, j: usize, n: i64) -> usize {
    let width = 2 * n_max + 1;
    (i * 3 + j) * width + (n + n_max as i64) as usize
}

/// Harmonic components of the field-interaction-picture Hamiltonian (ħ = 1).
struct Hamiltonian {
    /// Diagonal, time independent: (0, δ₁, −δ₂) with δ₁,₂ = (δ ± Δ)/2.
    diag: [f64; 3],
    /// Coefficients of e^{+ikz} and e^{−ikz}.
    plus: [[Complex64; 3]; 3],
    minus: [[Complex64; 3]; 3],
}

impl Hamiltonian {
    fn new(p: &NormalizedParams) -> Self {
        let (phi1, phi2, mu) = (p.phi1(), p.phi2(), p.mu);
        let delta1 = 0.5 * (p.delta + p.delta_big);
        let delta2 = 0.5 * (p.delta - p.delta_big);
        let r = |v: f64| Complex64::new(v, 0.0);
        let mut plus = [[ZERO; 3]; 3];
        let mut minus = [[ZERO; 3]; 3];
        // H₂₀ = −μE, H₀₂ = −μE*, H₀₁ = −E, H₁₀ = −E*
        // E = φ₁e^{+} − φ₂e^{−},  E* = φ₁e^{−} − φ₂e^{+}
        plus[2][0] = r(-mu * phi1);
        minus[2][0] = r(mu * phi2);
        plus[0][2] = r(mu * phi2);
        minus[0][2] = r(-mu * phi1);
        plus[0][1] = r(-phi1);
        minus[0][1] = r(phi2);
        plus[1][0] = r(phi2);
        minus[1][0] = r(-phi1);
        Hamiltonian { diag: [0.0, delta1, -delta2], plus, minus }
    }
}

/// The assembled complex system M·c = b.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub n_max: usize,
    pub matrix: SparseMatrix,
    pub rhs: Vec<Complex64>,
}

impl LinearSystem {
    /// max |M·c − b|
    pub fn residual(&self, c: &[Complex64]) -> f64 {
        self.matrix
            .mul_vec(c)
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Plain-text dump, one `row col re im` line per nonzero matrix entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (r, c, v) in self.matrix.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Build the harmonic-balance system for one velocity class.
pub fn assemble(problem: &SteadyStateProblem) -> Result<LinearSystem> {
    problem.validate()?;
    let n_max = problem.n_max;
    let nm = n_max as i64;
    let ham = Hamiltonian::new(&problem.params);
    let half_omega = 0.5 * problem.omega;
    let mut m = SparseMatrix::zeros(problem.unknowns());
    let mut rhs = vec![ZERO; problem.unknowns()];
    let idx = |i, j, n| unknown_index(n_max, i, j, n);

    for i in 0..3 {
        for j in 0..3 {
            for n in -nm..=nm {
                let row = idx(i, j, n);
                // −γ c − i n (Ω/2) c − i (H₀ᵢᵢ − H₀ⱼⱼ) c
                let diag = -1.0 - I * (n as f64 * half_omega + ham.diag[i] - ham.diag[j]);
                m.add(row, row, diag);
                // −i [H_m, ρ] couples to harmonic n − m for m = ±1.
                for (shift, h) in [(1i64, &ham.plus), (-1, &ham.minus)] {
                    let src = n - shift;
                    if src.abs() > nm {
                        continue;
                    }
                    for k in 0..3 {
                        if h[i][k] != ZERO {
                            m.add(row, idx(k, j, src), -I * h[i][k]);
                        }
                        if h[k][j] != ZERO {
                            m.add(row, idx(i, k, src), I * h[k][j]);
                        }
                    }
                }
            }
        }
    }
    // Pump γ·δᵢ₁δⱼ₁ at the spatial dc harmonic, moved to the right-hand side.
    rhs[idx(1, 1, 0)] = Complex64::new(-1.0, 0.0);
    Ok(LinearSystem { n_max, matrix: m, rhs })
}

/// Truncated Fourier representation of the population matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicDensityMatrix {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicDensityMatrix {
    pub fn from_coefficients(n_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 9 * (2 * n_max + 1));
        HarmonicDensityMatrix { n_max, coeffs }
    }

    /// All population in the lower level, no coherences.
    pub fn ground_state(n_max: usize) -> Self {
        let mut coeffs = vec![ZERO; 9 * (2 * n_max + 1)];
        coeffs[unknown_index(n_max, 1, 1, 0)] = Complex64::new(1.0, 0.0);
        HarmonicDensityMatrix { n_max, coeffs }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// c(i,j,n); zero outside the truncation.
    pub fn get(&self, i: usize, j: usize, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            ZERO
        } else {
            self.coeffs[unknown_index(self.n_max, i, j, n)]
        }
    }

    fn harmonics(&self) -> std::ops::RangeInclusive<i64> {
        -(self.n_max as i64)..=self.n_max as i64
    }

    /// max |c(i,j,n) − conj(c(j,i,−n))|
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for n in self.harmonics() {
                    worst = worst.max((self.get(i, j, n) - self.get(j, i, -n).conj()).norm());
                }
            }
        }
        worst
    }

    /// Deviation of Σᵢ c(i,i,n) from δₙ₀.
    pub fn trace_defect(&self) -> f64 {
        self.harmonics()
            .map(|n| {
                let tr: Complex64 = (0..3).map(|i| self.get(i, i, n)).sum();
                let target = if n == 0 { 1.0 } else { 0.0 };
                (tr - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest coefficient on a harmonic of the wrong parity. Populations and
    /// the two-photon coherence live on even harmonics, one-photon
    /// coherences on odd ones.
    pub fn parity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let one_photon = (i == 0) != (j == 0);
                for n in self.harmonics() {
                    let odd = n.rem_euclid(2) == 1;
                    if odd != one_photon {
                        worst = worst.max(self.get(i, j, n).norm());
                    }
                }
            }
        }
        worst
    }

    /// How far the dc populations stray from real values in [0, 1].
    pub fn population_defect(&self) -> f64 {
        (0..3)
            .map(|i| {
                let c = self.get(i, i, 0);
                let below = (-c.re).max(0.0);
                let above = (c.re - 1.0).max(0.0);
                c.im.abs().max(below).max(above)
            })
            .fold(0.0, f64::max)
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let checks = [
            ("hermiticity", self.hermiticity_defect()),
            ("trace", self.trace_defect()),
            ("parity", self.parity_defect()),
            ("population range", self.population_defect()),
        ];
        for (name, defect) in checks {
            if !(defect <= tol) {
                return Err(TpaError::InternalConsistency(format!(
                    "{name} defect {defect:.3e} exceeds {tol:.1e}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveDiagnostics {
    /// max |M·c − b|
    pub residual: f64,
    /// 1-norm condition estimate of M.
    pub condition: f64,
}

pub fn solve_steady_state(problem: &SteadyStateProblem) -> Result<HarmonicDensityMatrix> {
    solve_with_diagnostics(problem).map(|(rho, _)| rho)
}

pub fn solve_with_diagnostics(
    problem: &SteadyStateProblem,
) -> Result<(HarmonicDensityMatrix, SolveDiagnostics)> {
    let system = assemble(problem)?;
    let lu = system.matrix.factor().ok_or_else(|| TpaError::SolverFailure {
        reason: "zero pivot in LU factorization".into(),
        condition: f64::INFINITY,
    })?;
    let condition = system.matrix.norm1() * lu.inverse_norm1_estimate();
    if condition > CONDITION_WARNING {
        log::warn!(
            "ill-conditioned steady-state system: cond ≈ {condition:.3e} (omega = {}, n_max = {})",
            problem.omega,
            problem.n_max
        );
    }
    let c = lu.solve(&system.rhs);
    let residual = system.residual(&c);
    if !residual.is_finite() || residual > RESIDUAL_LIMIT {
        return Err(TpaError::SolverFailure {
            reason: format!("residual {residual:.3e} exceeds {RESIDUAL_LIMIT:.0e}"),
            condition,
        });
    }
    Ok((
        HarmonicDensityMatrix { n_max: problem.n_max, coeffs: c },
        SolveDiagnostics { residual, condition },
    ))
}

const ROUNDOFF_FLOOR: f64 = 16.0 * f64::EPSILON;

/// Raise n_max through 3, 5, 7, … until the dc upper population changes by
/// less than `tol` between consecutive truncations. Changes at the rounding
/// level of the unit-trace solution also count as converged.
pub fn refine(problem: &SteadyStateProblem, tol: f64) -> Result<(HarmonicDensityMatrix, usize)> {
    refine_with_cap(problem, tol, DEFAULT_N_MAX_CAP)
}

pub fn refine_with_cap(
    problem: &SteadyStateProblem,
    tol: f64,
    cap: usize,
) -> Result<(HarmonicDensityMatrix, usize)> {
    if tol.is_nan() || tol < 0.0 {
        return Err(TpaError::InvalidParameter(format!("tolerance must be >= 0, got {tol}")));
    }
    let mut n = MIN_N_MAX;
    let mut prev = solve_steady_state(&problem.with_n_max(n))?;
    let mut last_change = f64::INFINITY;
    while n + 2 <= cap {
        n += 2;
        let next = solve_steady_state(&problem.with_n_max(n))?;
        last_change = (next.get(2, 2, 0) - prev.get(2, 2, 0)).norm();
        if last_change < tol.max(ROUNDOFF_FLOOR) {
            return Ok((next, n));
        }
        prev = next;
    }
    Err(TpaError::Truncation { n_max: n, cap, last_change })
}

/// Re c(2,2,0), the spatially averaged upper-level population.
pub fn dc_upper_population(rho: &HarmonicDensityMatrix) -> Result<f64> {
    let c = rho.get(2, 2, 0);
    if c.im.abs() > IMAG_LIMIT {
        return Err(TpaError::InternalConsistency(format!(
            "dc upper population has imaginary part {:.3e}",
            c.im
        )));
    }
    Ok(c.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::VelocityDistribution;

    fn params(delta_big: f64, phi: f64, a: f64, mu: f64, delta: f64) -> NormalizedParams {
        NormalizedParams::new(delta_big, phi, a, mu, delta, VelocityDistribution::HOMOGENEOUS).unwrap()
    }

    #[test]
    fn dimension_and_truncation_floor() {
        let p = params(100.0, 1.0, 1.0, 1.0, 0.0);
        let sys = assemble(&SteadyStateProblem::new(p, 0.0, 5).unwrap()).unwrap();
        assert_eq!(sys.matrix.dim(), 99);
        assert!(SteadyStateProblem::new(p, 0.0, 2).is_err());
    }

    #[test]
    fn undriven_atoms_sit_in_the_ground_state() {
        for (omega, delta) in [(0.0, 0.0), (3.0, -2.0), (-40.0, 7.5)] {
            let p = params(100.0, 0.0, 1.0, 1.3, delta);
            let rho = solve_steady_state(&SteadyStateProblem::new(p, omega, 4).unwrap()).unwrap();
            let ground = HarmonicDensityMatrix::ground_state(4);
            for (a, b) in rho.coefficients().iter().zip(ground.coefficients()) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn two_photon_coherence_couples_to_neighbouring_harmonics() {
        let (phi, a, mu) = (0.7, 0.4, 1.9);
        let p = params(100.0, phi, a, mu, 0.3);
        let sys = assemble(&SteadyStateProblem::new(p, 1.1, 3).unwrap()).unwrap();
        let idx = |i, j, n| unknown_index(3, i, j, n);
        let row = idx(2, 1, 0);
        let at = |col| sys.matrix.get(row, col);
        let close = |z: Complex64, w: Complex64| (z - w).norm() < 1e-12;
        // iE(μρ₀₁ − ρ₂₀) with E = φe^{ikz} − Aφe^{−ikz}
        assert!(close(at(idx(0, 1, -1)), I * mu * phi));
        assert!(close(at(idx(0, 1, 1)), -I * mu * a * phi));
        assert!(close(at(idx(2, 0, -1)), -I * phi));
        assert!(close(at(idx(2, 0, 1)), I * a * phi));
        // No coupling to the populations or to |n| = 2 from this row.
        assert_eq!(at(idx(2, 2, 0)), ZERO);
        assert_eq!(at(idx(0, 1, 3)), ZERO);
        // Diagonal: −(γ − iδ).
        assert!(close(at(row), Complex64::new(-1.0, 0.3)));
    }

    #[test]
    fn solution_satisfies_structural_invariants() {
        let p = params(60.0, 2.0, 0.8, 1.4, 0.9);
        let (rho, diag) = solve_with_diagnostics(&SteadyStateProblem::new(p, -1.7, 9).unwrap()).unwrap();
        assert!(diag.residual < 1e-10);
        assert!(diag.condition.is_finite());
        rho.check_invariants(1e-10).unwrap();
        let n2 = dc_upper_population(&rho).unwrap();
        assert!(n2 > 0.0 && n2 < 1.0);
    }

    #[test]
    fn weak_standing_wave_matches_leading_order_strength() {
        // Δ = 1000, φ = 1, A = 1, μ = 1, δ = 0, Ω = 0: leading order is 48·x².
        let p = params(1000.0, 1.0, 1.0, 1.0, 0.0);
        let rho = solve_steady_state(&SteadyStateProblem::new(p, 0.0, 5).unwrap()).unwrap();
        let n2 = dc_upper_population(&rho).unwrap();
        let expected = 48.0 * 1e-6;
        assert!(((n2 - expected) / expected).abs() < 1e-3, "{n2}");
    }

    #[test]
    fn refine_converges_quickly_for_weak_drive() {
        let p = params(100.0, 0.01, 1.0, 1.0, 0.0);
        let (_, n) = refine(&SteadyStateProblem::new(p, 0.5, 3).unwrap(), 1e-16).unwrap();
        assert!(n <= 5, "n_used = {n}");
    }

    #[test]
    fn refine_with_unreachable_tolerance_reports_truncation() {
        let p = params(100.0, 1.0, 1.0, 1.0, 0.0);
        let err = refine_with_cap(&SteadyStateProblem::new(p, 0.0, 3).unwrap(), 0.0, 9).unwrap_err();
        assert!(matches!(err, TpaError::Truncation { cap: 9, .. }), "{err}");
    }

    #[test]
    fn triplet_dump_lists_every_nonzero() {
        let p = params(100.0, 1.0, 1.0, 1.0, 0.0);
        let sys = assemble(&SteadyStateProblem::new(p, 0.0, 3).unwrap()).unwrap();
        let mut out = Vec::new();
        sys.write_triplets(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), sys.matrix.triplets().count());
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first.len(), 4);
    }
}
