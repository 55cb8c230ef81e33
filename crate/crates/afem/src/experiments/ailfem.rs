use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use afem_core::assembly::{BilinearForm, LinearForm};
use afem_core::estimate::{estimate_quasilinear, Indicators};
use afem_core::fem::{BoundarySelection, FeFunction, FeSpace, FiniteElement, Prolongation};
use afem_core::integration::{Field, Shape};
use afem_core::linalg::{solve_free, CsrMatrix};
use afem_core::mesh::Mesh;
use afem_core::refinement::RefinementRecord;

use super::{energy, run, Adaptive, Estimate, LoopConfig, Run};
use crate::history::{timed, Timings};
use crate::solver::DirectSolver;
use crate::{Error, Result};

pub fn mu(t: f64) -> f64 {
    1.0 + (-t).exp()
}

pub fn mu_prime(t: f64) -> f64 {
    -(-t).exp()
}

/// Linearization of `−div(μ(|∇u|²)∇u) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linearization {
    /// Damped Laplace preconditioning `u ← u + δv`.
    Zarantonello { delta: f64 },
    /// Frozen coefficient `μ(|∇uⁿ|²)`.
    Kacanov,
    Newton,
}

impl fmt::Display for Linearization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Linearization::Zarantonello { .. } => f.write_str("zarantonello"),
            Linearization::Kacanov => f.write_str("kacanov"),
            Linearization::Newton => f.write_str("newton"),
        }
    }
}

impl FromStr for Linearization {
    type Err = String;

    /// Zarantonello gets the default damping `δ = 0.5`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "zarantonello" => Ok(Linearization::Zarantonello { delta: 0.5 }),
            "kacanov" => Ok(Linearization::Kacanov),
            "newton" => Ok(Linearization::Newton),
            _ => Err(format!("unknown linearization {s:?}")),
        }
    }
}

/// `−μ(|p|²) p` for `p = ∇u`.
fn negative_flux(u: &FeFunction) -> Field {
    Field::composite(Shape::vector(2), vec![Field::gradient(u)], |args, out| {
        let p = args[0];
        let m = mu(p[0] * p[0] + p[1] * p[1]);
        out[0] = -m * p[0];
        out[1] = -m * p[1];
    })
}

fn kacanov_coefficient(u: &FeFunction) -> Field {
    Field::composite(Shape::SCALAR, vec![Field::gradient(u)], |args, out| {
        let p = args[0];
        out[0] = mu(p[0] * p[0] + p[1] * p[1]);
    })
}

/// `μ(|p|²) I + 2μ'(|p|²) p ⊗ p`, column-major.
fn newton_coefficient(u: &FeFunction) -> Field {
    Field::composite(Shape::matrix(2, 2), vec![Field::gradient(u)], |args, out| {
        let p = args[0];
        let t = p[0] * p[0] + p[1] * p[1];
        let (m, dm) = (mu(t), 2.0 * mu_prime(t));
        out[0] = m + dm * p[0] * p[0];
        out[1] = dm * p[1] * p[0];
        out[2] = dm * p[0] * p[1];
        out[3] = m + dm * p[1] * p[1];
    })
}

struct Ailfem {
    method: Linearization,
    space: Rc<FeSpace>,
    u: FeFunction,
    max_inner: usize,
    level: usize,
    indicators: Option<Indicators>,
    updates: Vec<f64>,
}

impl Ailfem {
    fn step(&self, mesh: &Mesh, laplace: &CsrMatrix, t: &mut Timings) -> Result<Vec<f64>> {
        let one = Some(Field::constant(1.0));
        let (blf, lf) = match self.method {
            Linearization::Zarantonello { .. } => (
                None,
                LinearForm {
                    f: one,
                    fvec: Some(negative_flux(&self.u)),
                    ..Default::default()
                },
            ),
            Linearization::Kacanov => (
                Some(BilinearForm {
                    a: Some(kacanov_coefficient(&self.u)),
                    ..Default::default()
                }),
                LinearForm {
                    f: one,
                    ..Default::default()
                },
            ),
            Linearization::Newton => (
                Some(BilinearForm {
                    a: Some(newton_coefficient(&self.u)),
                    ..Default::default()
                }),
                LinearForm {
                    f: one,
                    fvec: Some(negative_flux(&self.u)),
                    ..Default::default()
                },
            ),
        };
        let assembled = match &blf {
            Some(blf) => Some(timed(&mut t.assemble_a, || blf.assemble_matrix(mesh, &self.space))?),
            None => None,
        };
        let a = assembled.as_ref().unwrap_or(laplace);
        let f = timed(&mut t.assemble_f, || lf.assemble(mesh, &self.space))?;
        let x = timed(&mut t.solve, || {
            solve_free(&DirectSolver::default(), a, &[f], self.space.free_dofs())
        })?;
        Ok(x.into_iter().next().unwrap_or_default())
    }
}

impl Adaptive for Ailfem {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    /// Inner iteration until the update's energy drops below a tenth of the
    /// estimator.
    fn solve(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<()> {
        let laplace = timed(&mut t.assemble_a, || {
            BilinearForm {
                a: Some(Field::constant(1.0)),
                ..Default::default()
            }
            .assemble_matrix(mesh, &self.space)
        })?;
        self.updates.clear();
        for _ in 0..self.max_inner {
            let x = self.step(mesh, &laplace, t)?;
            let old = self.u.coefficients();
            let new: Vec<f64> = match self.method {
                Linearization::Zarantonello { delta } => old.iter().zip(&x).map(|(u, v)| u + delta * v).collect(),
                Linearization::Kacanov => x,
                Linearization::Newton => old.iter().zip(&x).map(|(u, v)| u + v).collect(),
            };
            let update: Vec<f64> = new.iter().zip(&old).map(|(a, b)| a - b).collect();
            self.u.set_coefficients(new)?;
            let size = energy(&laplace, &update);
            self.updates.push(size);
            let eta = timed(&mut t.estimate, || estimate_quasilinear(&self.u, mesh, mu))?;
            let stop = size <= 0.1 * eta.total();
            self.indicators = Some(eta);
            if stop {
                return Ok(());
            }
        }
        Err(Error::InnerIteration {
            level: self.level,
            steps: self.max_inner,
        })
    }

    fn estimate(&mut self, _: &Mesh, _: &mut Timings) -> Result<Estimate> {
        let eta = self.indicators.take().expect("solve computes the indicators");
        Ok(Estimate {
            estimator: eta.total(),
            marking: eta.into_values(),
            h1_error: None,
            dual_estimator: None,
            goal_estimate: None,
            inner_updates: self.updates.clone(),
        })
    }

    /// Nested iteration: the final iterate is the next initial guess.
    fn transfer(&mut self, mesh: &Mesh, record: &RefinementRecord) -> Result<()> {
        let space = Rc::new(self.space.rebuild(mesh)?);
        Prolongation::lowest_order(&self.space, &space, record)?.prolongate_function(&self.u, space.clone())?;
        self.space = space;
        self.level += 1;
        Ok(())
    }
}

/// Quasilinear problem on the L-shape with homogeneous Dirichlet data, P1,
/// starting from `u = 0`; at most 50 linearization steps per level.
pub fn ailfem(config: &LoopConfig, method: Linearization) -> Result<Run> {
    if let Linearization::Zarantonello { delta } = method {
        if !(delta > 0.0) {
            return Err(Error::InvalidDamping(delta));
        }
    }
    let mesh = config.mesh("Lshape")?;
    let space = Rc::new(FeSpace::new(&mesh, FiniteElement::lagrange(1)?, BoundarySelection::All)?);
    let mut problem = Ailfem {
        method,
        u: FeFunction::new(space.clone()),
        space,
        max_inner: 50,
        level: 0,
        indicators: None,
        updates: Vec::new(),
    };
    run(&mut problem, mesh, config)
}
