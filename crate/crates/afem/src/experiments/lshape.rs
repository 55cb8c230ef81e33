use std::f64::consts::PI;
use std::rc::Rc;

use afem_core::assembly::{BilinearForm, LinearForm};
use afem_core::estimate::estimate_laplace;
use afem_core::fem::{nodal_interpolation, BoundarySelection, FeFunction, FeSpace, FiniteElement};
use afem_core::integration::{EdgeRule, Field, TriangleRule};
use afem_core::linalg::{solve_free, CsrMatrix};
use afem_core::mesh::{Mesh, Point};
use afem_core::refinement::RefinementRecord;

use super::{energy, run, Adaptive, Estimate, LoopConfig, Run};
use crate::history::{timed, Timings};
use crate::solver::DirectSolver;
use crate::Result;

const DIRICHLET: usize = 0;
const NEUMANN: usize = 1;

fn angle(x: Point) -> f64 {
    let phi = x[1].atan2(x[0]);
    if phi < 0.0 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// `r^{2/3} sin(2φ/3)` with `φ ∈ [0, 2π)`.
pub fn lshape_exact(x: Point) -> f64 {
    let r = x[0].hypot(x[1]);
    r.powf(2.0 / 3.0) * (2.0 * angle(x) / 3.0).sin()
}

/// `∇u·n` on the outer boundary of the L-shape, the side being chosen from
/// the dominant coordinate.
pub fn lshape_neumann(x: Point) -> f64 {
    let [x1, x2] = x;
    let r = x1.hypot(x2);
    let cr = 2.0 / 3.0 * r.powf(-4.0 / 3.0);
    let cphi = 2.0 / 3.0 * angle(x);
    let dudx = cr * (x1 * cphi.sin() - x2 * cphi.cos());
    let dudy = cr * (x2 * cphi.sin() + x1 * cphi.cos());
    if x1.abs() > x2.abs() {
        if x1 > 0.0 {
            dudx
        } else {
            -dudx
        }
    } else if x1.abs() < x2.abs() {
        if x2 > 0.0 {
            dudy
        } else {
            -dudy
        }
    } else {
        0.0
    }
}

struct LShape {
    space: Rc<FeSpace>,
    u: FeFunction,
    neumann: Field,
    blf: BilinearForm,
    lf: LinearForm,
    a: Option<CsrMatrix>,
}

impl Adaptive for LShape {
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
        self.a = Some(a);
        Ok(())
    }

    fn estimate(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<Estimate> {
        let eta = timed(&mut t.estimate, || {
            estimate_laplace(&self.u, mesh, &[DIRICHLET], Some((&self.neumann, &[NEUMANN])))
        })?;
        let interpolant = nodal_interpolation(&Field::scalar(lshape_exact), mesh, &self.space)?;
        let error: Vec<f64> = self
            .u
            .with_data(|u| interpolant.iter().zip(u).map(|(a, b)| a - b).collect());
        let a = self.a.as_ref().expect("solve runs before estimate");
        Ok(Estimate {
            estimator: eta.total(),
            marking: eta.into_values(),
            h1_error: Some(energy(a, &error)),
            dual_estimator: None,
            goal_estimate: None,
            inner_updates: Vec::new(),
        })
    }

    fn transfer(&mut self, mesh: &Mesh, _: &RefinementRecord) -> Result<()> {
        self.space = Rc::new(self.space.rebuild(mesh)?);
        self.u = FeFunction::new(self.space.clone());
        self.a = None;
        Ok(())
    }
}

/// `−Δu = 0` on the L-shape with the singular exact solution, Dirichlet data
/// on the edges at the re-entrant corner and Neumann data elsewhere.
pub fn lshape(config: &LoopConfig) -> Result<Run> {
    let p = config.order;
    let mesh = config.mesh("Lshape")?;
    let space = Rc::new(FeSpace::new(
        &mesh,
        FiniteElement::lagrange(p)?,
        BoundarySelection::Parts(vec![DIRICHLET]),
    )?);
    let neumann = Field::scalar(lshape_neumann);
    let mut problem = LShape {
        u: FeFunction::new(space.clone()),
        space,
        blf: BilinearForm {
            a: Some(Field::constant(1.0)),
            qra: Some(TriangleRule::of_order((2 * p).saturating_sub(2).max(1))?),
            ..Default::default()
        },
        lf: LinearForm {
            neumann: Some(neumann.clone()),
            neumann_parts: Some(vec![NEUMANN]),
            qr_neumann: Some(EdgeRule::of_order(2 * p)?),
            ..Default::default()
        },
        neumann,
        a: None,
    };
    run(&mut problem, mesh, config)
}
