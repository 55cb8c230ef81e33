//! Sparse direct solver backed by faer.

use afem_core::linalg::{CsrMatrix, LinearSolver};
use afem_core::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

/// Sparse Cholesky for symmetric matrices with an LU fallback (also used for
/// nonsymmetric systems). Every right-hand side is refined iteratively until
/// `‖b − Ax‖ ≤ tolerance · ‖b‖`.
#[derive(Debug, Clone, Copy)]
pub struct DirectSolver {
    pub tolerance: f64,
    pub refinement_steps: usize,
}

impl Default for DirectSolver {
    fn default() -> Self {
        DirectSolver {
            tolerance: 1e-10,
            refinement_steps: 3,
        }
    }
}

enum Factor {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

impl Factor {
    fn solve(&self, rhs: &Mat<f64>) -> Mat<f64> {
        match self {
            Factor::Cholesky(f) => f.solve(rhs),
            Factor::Lu(f) => f.solve(rhs),
        }
    }
}

fn to_faer(a: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..a.n_rows() {
        triplets.extend(a.row(r).map(|(c, v)| Triplet::new(r, c, v)));
    }
    SparseColMat::try_new_from_triplets(a.n_rows(), a.n_cols(), &triplets).map_err(|_| Error::SingularMatrix)
}

fn factorize(a: &CsrMatrix) -> Result<Factor> {
    let m = to_faer(a)?;
    let scale = a.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if a.is_symmetric(1e-12 * scale) {
        if let Ok(llt) = m.sp_cholesky(Side::Lower) {
            return Ok(Factor::Cholesky(llt));
        }
    }
    m.sp_lu().map(Factor::Lu).map_err(|_| Error::SingularMatrix)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl LinearSolver for DirectSolver {
    fn solve(&self, a: &CsrMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.n_cols(),
            });
        }
        if let Some(b) = rhs.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        if n == 0 || rhs.is_empty() {
            return Ok(vec![Vec::new(); rhs.len()]);
        }
        let factor = factorize(a)?;
        let b = Mat::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        let first = factor.solve(&b);
        let mut solutions: Vec<Vec<f64>> = (0..rhs.len())
            .map(|j| (0..n).map(|i| first[(i, j)]).collect())
            .collect();

        for (x, b) in solutions.iter_mut().zip(rhs) {
            let target = self.tolerance * norm(b);
            let mut step = 0;
            loop {
                let ax = a.matvec(x);
                let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
                let residual = norm(&r);
                if !residual.is_finite() {
                    return Err(Error::SingularMatrix);
                }
                if residual <= target {
                    break;
                }
                if step == self.refinement_steps {
                    return Err(Error::SolverBreakdown {
                        iterations: step,
                        residual,
                    });
                }
                let correction = factor.solve(&Mat::from_fn(n, 1, |i, _| r[i]));
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi += correction[(i, 0)];
                }
                step += 1;
            }
        }
        Ok(solutions)
    }
}
