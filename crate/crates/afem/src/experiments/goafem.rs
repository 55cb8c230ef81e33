use std::rc::Rc;

use afem_core::assembly::{BilinearForm, LinearForm};
use afem_core::estimate::{estimate_flux, goal_indicators};
use afem_core::fem::{nodal_interpolation, BoundarySelection, FeFunction, FeSpace, FiniteElement, Prolongation};
use afem_core::integration::{Field, Shape};
use afem_core::linalg::solve_free;
use afem_core::mesh::{Mesh, Point};
use afem_core::refinement::{refine_uniform, RefinementRecord, Strategy};

use super::{run, Adaptive, Estimate, LoopConfig, Run};
use crate::history::{timed, Timings};
use crate::solver::DirectSolver;
use crate::Result;

/// Vector data `value · χ_region`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseData {
    pub region: fn(Point) -> bool,
    pub value: [f64; 2],
}

impl PiecewiseData {
    /// `(1, 0)` where `x1 + x2 < 1/2`.
    pub fn primal() -> Self {
        PiecewiseData {
            region: |x| x[0] + x[1] < 0.5,
            value: [1.0, 0.0],
        }
    }

    /// `(−1, 0)` where `x1 + x2 > 3/2`.
    pub fn dual() -> Self {
        PiecewiseData {
            region: |x| x[0] + x[1] > 1.5,
            value: [-1.0, 0.0],
        }
    }
}

/// Indicator interpolated on P0 together with the vector field it induces.
struct Data {
    chi: FeFunction,
    field: Field,
}

impl Data {
    fn new(data: PiecewiseData, mesh: &Mesh, l2: &Rc<FeSpace>) -> Result<Self> {
        let region = data.region;
        let indicator = Field::scalar(move |x| f64::from(u8::from(region(x))));
        let chi = FeFunction::with_coefficients(l2.clone(), nodal_interpolation(&indicator, mesh, l2)?)?;
        let [v0, v1] = data.value;
        let field = Field::composite(Shape::vector(2), vec![Field::fe(&chi)], move |args, out| {
            out[0] = v0 * args[0][0];
            out[1] = v1 * args[0][0];
        });
        Ok(Data { chi, field })
    }
}

struct Goafem {
    space: Rc<FeSpace>,
    l2: Rc<FeSpace>,
    u: FeFunction,
    z: FeFunction,
    f: Data,
    g: Data,
    blf: BilinearForm,
}

impl Adaptive for Goafem {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    fn solve(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<()> {
        let a = timed(&mut t.assemble_a, || self.blf.assemble_matrix(mesh, &self.space))?;
        let rhs = timed(&mut t.assemble_f, || {
            [&self.f, &self.g]
                .iter()
                .map(|d| {
                    LinearForm {
                        fvec: Some(d.field.clone()),
                        ..Default::default()
                    }
                    .assemble(mesh, &self.space)
                })
                .collect::<afem_core::Result<Vec<_>>>()
        })?;
        let mut x = timed(&mut t.solve, || {
            solve_free(&DirectSolver::default(), &a, &rhs, self.space.free_dofs())
        })?
        .into_iter();
        self.u.set_coefficients(x.next().unwrap_or_default())?;
        self.z.set_coefficients(x.next().unwrap_or_default())?;
        Ok(())
    }

    fn estimate(&mut self, mesh: &Mesh, t: &mut Timings) -> Result<Estimate> {
        let (eta, zeta) = timed(&mut t.estimate, || -> Result<_> {
            Ok((
                estimate_flux(&self.u, &self.f.field, mesh)?,
                estimate_flux(&self.z, &self.g.field, mesh)?,
            ))
        })?;
        let combined = timed(&mut t.mark, || goal_indicators(&eta, &zeta));
        Ok(Estimate {
            estimator: eta.total(),
            goal_estimate: Some(eta.total() * zeta.total()),
            marking: combined.into_values(),
            h1_error: None,
            dual_estimator: Some(zeta.total()),
            inner_updates: Vec::new(),
        })
    }

    fn transfer(&mut self, mesh: &Mesh, record: &RefinementRecord) -> Result<()> {
        let l2 = Rc::new(self.l2.rebuild(mesh)?);
        let p = Prolongation::lowest_order(&self.l2, &l2, record)?;
        p.prolongate_function(&self.f.chi, l2.clone())?;
        p.prolongate_function(&self.g.chi, l2.clone())?;
        self.l2 = l2;
        self.space = Rc::new(self.space.rebuild(mesh)?);
        self.u = FeFunction::new(self.space.clone());
        self.z = FeFunction::new(self.space.clone());
        Ok(())
    }
}

/// Goal-oriented run for `−Δu = −div f` and the dual problem `−Δz = −div g`
/// on the unit square with homogeneous Dirichlet data.
pub fn goafem(config: &LoopConfig) -> Result<Run> {
    goafem_with(config, PiecewiseData::primal(), PiecewiseData::dual())
}

pub fn goafem_with(config: &LoopConfig, f: PiecewiseData, g: PiecewiseData) -> Result<Run> {
    let mut mesh = config.mesh("unitsquare")?;
    // one red refinement resolves both data discontinuities
    refine_uniform(&mut mesh, 1, Strategy::Rgb)?;
    let space = Rc::new(FeSpace::new(&mesh, FiniteElement::lagrange(config.order)?, BoundarySelection::All)?);
    let l2 = Rc::new(FeSpace::new(&mesh, FiniteElement::discontinuous(0)?, BoundarySelection::None)?);
    let mut problem = Goafem {
        u: FeFunction::new(space.clone()),
        z: FeFunction::new(space.clone()),
        f: Data::new(f, &mesh, &l2)?,
        g: Data::new(g, &mesh, &l2)?,
        space,
        l2,
        blf: BilinearForm {
            a: Some(Field::constant(1.0)),
            ..Default::default()
        },
    };
    run(&mut problem, mesh, config)
}
