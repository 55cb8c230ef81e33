use std::rc::Rc;

use afem_core::assembly::{BilinearForm, LinearForm};
use afem_core::estimate::estimate_poisson_p1;
use afem_core::fem::{BoundarySelection, FeFunction, FeSpace, FiniteElement};
use afem_core::integration::Field;
use afem_core::linalg::solve_free;
use afem_core::mesh::Mesh;
use afem_core::refinement::RefinementRecord;

use super::{run, Adaptive, Estimate, LoopConfig, Run};
use crate::history::{timed, Timings};
use crate::solver::DirectSolver;
use crate::Result;

struct Poisson {
    space: Rc<FeSpace>,
    u: FeFunction,
    f: Field,
    blf: BilinearForm,
    lf: LinearForm,
}

impl Adaptive for Poisson {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    fn solve(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<()> {
        let a = timed(&mut t.assemble_a, || self.blf.assemble_matrix(mesh, &self.space))?;
        let f = timed(&mut t.assemble_f, || self.lf.assemble(mesh, &self.space))?;
        let x = timed(&mut t.solve, || {
            solve_free(&DirectSolver::default(), &a, &[f], self.space.free_dofs())
        })?;
        self.u.set_coefficients(x.into_iter().next().unwrap_or_default())?;
        Ok(())
    }

    fn estimate(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<Estimate> {
        let eta = timed(&mut t.estimate, || estimate_poisson_p1(&self.u, &self.f, mesh))?;
        Ok(Estimate {
            estimator: eta.total(),
            marking: eta.into_values(),
            h1_error: None,
            dual_estimator: None,
            goal_estimate: None,
            inner_updates: Vec::new(),
        })
    }

    fn transfer(&mut self, mesh: &Mesh, _: &RefinementRecord) -> Result<()> {
        self.space = Rc::new(self.space.rebuild(mesh)?);
        self.u = FeFunction::new(self.space.clone());
        Ok(())
    }
}

/// `−Δu = 1` on the unit square, homogeneous Dirichlet data, P1 elements.
pub fn poisson(config: &LoopConfig) -> Result<Run> {
    let mesh = config.mesh("unitsquare")?;
    let space = Rc::new(FeSpace::new(&mesh, FiniteElement::lagrange(1)?, BoundarySelection::All)?);
    let f = Field::constant(1.0);
    let mut problem = Poisson {
        u: FeFunction::new(space.clone()),
        space,
        blf: BilinearForm {
            a: Some(Field::constant(1.0)),
            ..Default::default()
        },
        lf: LinearForm {
            f: Some(f.clone()),
            ..Default::default()
        },
        f,
    };
    run(&mut problem, mesh, config)
}
