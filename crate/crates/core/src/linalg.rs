//! Sparse complex LU with partial pivoting and a 1-norm condition estimate.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

/// Square matrix stored by its nonzero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

fn column(b: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn to_vec(m: &Mat<Complex64>) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix { n, entries: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries.get(&(row, col)).copied().unwrap_or_default()
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        assert!(row < self.n && col < self.n, "entry ({row}, {col}) outside {0}x{0}", self.n);
        *self.entries.entry((row, col)).or_default() += value;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n];
        for (&(r, c), v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Max absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (&(_, c), v) in &self.entries {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Nonzero entries as (row, col, value), row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().filter(|(_, v)| v.norm_sqr() != 0.0).map(|(&(r, c), &v)| (r, c, v))
    }

    /// Returns `None` when the matrix is structurally singular.
    pub fn factor(&self) -> Option<LuFactors> {
        let triplets: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(self.n, self.n, &triplets).ok()?;
        let lu = m.sp_lu().ok()?;
        Some(LuFactors { lu, n: self.n })
    }
}

/// PA = LU.
#[derive(Debug)]
pub struct LuFactors {
    lu: Lu<usize, Complex64>,
    n: usize,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = column(b);
        self.lu.solve_in_place(&mut x);
        to_vec(&x)
    }

    /// Solve Aᴴ x = b.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = column(b);
        self.lu.solve_adjoint_in_place(&mut x);
        to_vec(&x)
    }

    /// Hager–Higham estimate of ‖A⁻¹‖₁.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            let norm: f64 = y.iter().map(|v| v.norm()).sum();
            if norm <= estimate {
                break;
            }
            estimate = norm;
            let sign: Vec<Complex64> = y
                .iter()
                .map(|v| if v.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { v / v.norm() })
                .collect();
            let z = self.solve_adjoint(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.norm()))
                .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if j == last_j || zmax <= z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum::<f64>() {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        estimate
    }
}
