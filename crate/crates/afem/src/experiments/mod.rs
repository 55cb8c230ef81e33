//! Adaptive loops: solve, estimate, mark, refine.

mod ailfem;
mod goafem;
mod lshape;
mod poisson;

pub use ailfem::{ailfem, mu, mu_prime, Linearization};
pub use goafem::{goafem, goafem_with, PiecewiseData};
pub use lshape::{lshape, lshape_exact, lshape_neumann};
pub use poisson::poisson;

use afem_core::mark::mark_doerfler;
use afem_core::refinement::{refine_locally, RefinementRecord, Strategy};
use afem_core::mesh::Mesh;

use crate::geometry::load_geometry;
use crate::history::{timed, ConvergenceHistory, Level, Timings};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Dörfler parameter in `(0, 1]`.
    pub theta: f64,
    /// Stop once a level has at least this many DOFs.
    pub max_dofs: usize,
    pub max_elements: Option<usize>,
    pub max_levels: usize,
    pub strategy: Strategy,
    pub order: usize,
    /// Overrides the experiment's default geometry.
    pub geometry: Option<String>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            theta: 0.5,
            max_dofs: 10_000,
            max_elements: None,
            max_levels: 500,
            strategy: Strategy::Nvb3,
            order: 1,
            geometry: None,
        }
    }
}

impl LoopConfig {
    fn mesh(&self, default: &str) -> Result<Mesh> {
        Ok(load_geometry(self.geometry.as_deref().unwrap_or(default))?)
    }
}

/// Result of an adaptive run: the history and the final mesh.
#[derive(Debug, Clone)]
pub struct Run {
    pub history: ConvergenceHistory,
    pub mesh: Mesh,
}

pub(crate) struct Estimate {
    pub marking: Vec<f64>,
    pub estimator: f64,
    pub h1_error: Option<f64>,
    pub dual_estimator: Option<f64>,
    pub goal_estimate: Option<f64>,
    pub inner_updates: Vec<f64>,
}

pub(crate) trait Adaptive {
    fn n_dofs(&self) -> usize;
    fn solve(&mut self, mesh: &Mesh, timings: &mut Timings) -> Result<()>;
    fn estimate(&mut self, mesh: &Mesh, timings: &mut Timings) -> Result<Estimate>;
    /// Moves the discrete data to the refined mesh.
    fn transfer(&mut self, mesh: &Mesh, record: &RefinementRecord) -> Result<()>;
}

pub(crate) fn run(problem: &mut impl Adaptive, mut mesh: Mesh, config: &LoopConfig) -> Result<Run> {
    let mut history = ConvergenceHistory::default();
    let mut total = 0.0;
    for level in 0.. {
        let mut t = Timings::default();
        problem.solve(&mesh, &mut t)?;
        let estimate = problem.estimate(&mesh, &mut t)?;
        let n_dofs = problem.n_dofs();
        let n_elements = mesh.n_elements();
        let mut done = n_dofs >= config.max_dofs
            || config.max_elements.is_some_and(|m| n_elements >= m)
            || level + 1 >= config.max_levels;
        if !done {
            let marked = timed(&mut t.mark, || mark_doerfler(&estimate.marking, config.theta))?;
            if marked.is_empty() {
                done = true;
            } else {
                let start = std::time::Instant::now();
                let record = refine_locally(&mut mesh, &marked, config.strategy)?;
                problem.transfer(&mesh, &record)?;
                t.refine += start.elapsed().as_secs_f64();
            }
        }
        total += t.sum();
        history.push(Level {
            level,
            n_dofs,
            n_elements,
            estimator: estimate.estimator,
            h1_error: estimate.h1_error,
            dual_estimator: estimate.dual_estimator,
            goal_estimate: estimate.goal_estimate,
            inner_updates: estimate.inner_updates,
            timings: t,
            total,
        });
        if done {
            break;
        }
    }
    Ok(Run { history, mesh })
}

/// `√(xᵀ A x)`.
pub(crate) fn energy(a: &afem_core::linalg::CsrMatrix, x: &[f64]) -> f64 {
    a.quadratic_form(x).max(0.0).sqrt()
}
