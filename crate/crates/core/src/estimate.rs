//! Residual a posteriori error indicators.
//!
//! Every estimator has the form `η²(T) = h_T² vol(T) + h_T Σ_{E ⊂ ∂T} edge(E)`
//! with `h_T = |T|^{1/2}`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::integration::{
    integrate_element, integrate_normal_jump, EdgeRule, EdgeSet, Field, JumpPostProcess, Shape, TriangleRule,
};
use crate::mesh::Mesh;

/// Squared per-element indicators on one mesh generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicators {
    values: Vec<f64>,
    generation: u64,
}

impl Indicators {
    pub fn new(values: Vec<f64>, generation: u64) -> Self {
        Indicators { values, generation }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `(Σ_T η²(T))^{1/2}`.
    pub fn total(&self) -> f64 {
        self.sum().sqrt()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Combines volume and edge contributions into indicators.
pub fn collect(mesh: &Mesh, volume: &[f64], edges: &[f64]) -> Result<Indicators> {
    let area = &mesh.affine()?.area;
    let values = mesh
        .element2edges()
        .iter()
        .enumerate()
        .map(|(t, e)| {
            let h = area[t].sqrt();
            h * h * volume[t] + h * (edges[e[0]] + edges[e[1]] + edges[e[2]])
        })
        .collect();
    Ok(Indicators::new(values, mesh.generation()))
}

fn check_stale(u: &FeFunction, mesh: &Mesh) -> Result<()> {
    u.space().check_generation(mesh)
}

fn square(field: &Field) -> Field {
    Field::composite(Shape::SCALAR, vec![field.clone()], |args, out| out[0] = args[0][0] * args[0][0])
}

fn all(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.n_elements()).collect()
}

/// Lowest-order Poisson problem `−Δu = f` with homogeneous Dirichlet data on
/// the whole boundary.
pub fn estimate_poisson_p1(u: &FeFunction, f: &Field, mesh: &Mesh) -> Result<Indicators> {
    check_stale(u, mesh)?;
    let volume = integrate_element(&square(f), mesh, &TriangleRule::of_order(1)?, &all(mesh))?;
    let edges = integrate_normal_jump(
        &Field::gradient(u),
        mesh,
        &EdgeRule::of_order(1)?,
        &[JumpPostProcess::square(EdgeSet::All), JumpPostProcess::zero(EdgeSet::Boundary)],
    )?;
    collect(mesh, &volume, &edges)
}

/// Laplace problem `−Δu = 0` of arbitrary order with Dirichlet parts and an
/// optional Neumann trace `∇u·n` on the given parts.
pub fn estimate_laplace(
    u: &FeFunction,
    mesh: &Mesh,
    dirichlet_parts: &[usize],
    neumann: Option<(&Field, &[usize])>,
) -> Result<Indicators> {
    check_stale(u, mesh)?;
    let p = u.space().element().order();
    let trace = Field::composite(Shape::SCALAR, vec![Field::hessian(u)], |args, out| {
        let h = args[0];
        out[0] = (h[0] + h[3]) * (h[0] + h[3]);
    });
    let rule = TriangleRule::of_order((2 * p).saturating_sub(4).max(1))?;
    let volume = integrate_element(&trace, mesh, &rule, &all(mesh))?;
    let mut post = vec![JumpPostProcess::zero(EdgeSet::Parts(dirichlet_parts.to_vec()))];
    if let Some((phi, parts)) = neumann {
        post.push(JumpPostProcess::subtract(EdgeSet::Parts(parts.to_vec()), phi.clone()));
    }
    post.push(JumpPostProcess::square(EdgeSet::All));
    let edges = integrate_normal_jump(&Field::gradient(u), mesh, &EdgeRule::of_order(p)?, &post)?;
    collect(mesh, &volume, &edges)
}

/// Problem `−Δu = −div fvec` with homogeneous Dirichlet data on the whole
/// boundary and elementwise constant `fvec`: volume term `‖Δu‖²`, edge term
/// the jump of `(∇u − fvec)·n`.
pub fn estimate_flux(u: &FeFunction, fvec: &Field, mesh: &Mesh) -> Result<Indicators> {
    check_stale(u, mesh)?;
    if fvec.components() != 2 {
        return Err(Error::ShapeMismatch {
            expected: 2,
            found: fvec.components(),
        });
    }
    let p = u.space().element().order();
    let laplacian = Field::composite(Shape::SCALAR, vec![Field::hessian(u)], |args, out| {
        let h = args[0];
        out[0] = (h[0] + h[3]) * (h[0] + h[3]);
    });
    let rule = TriangleRule::of_order((2 * p).saturating_sub(4).max(1))?;
    let volume = integrate_element(&laplacian, mesh, &rule, &all(mesh))?;
    let flux = Field::composite(Shape::vector(2), vec![Field::gradient(u), fvec.clone()], |args, out| {
        out[0] = args[0][0] - args[1][0];
        out[1] = args[0][1] - args[1][1];
    });
    let edges = integrate_normal_jump(
        &flux,
        mesh,
        &EdgeRule::of_order(p)?,
        &[JumpPostProcess::zero(EdgeSet::Boundary), JumpPostProcess::square(EdgeSet::All)],
    )?;
    collect(mesh, &volume, &edges)
}

/// Quasilinear problem `−div(μ(|∇u|²)∇u) = 1`, homogeneous Dirichlet data,
/// lowest order: `h_T²|T| + h_T ‖[μ(|∇u|²)∇u·n]‖²`.
pub fn estimate_quasilinear(u: &FeFunction, mesh: &Mesh, mu: fn(f64) -> f64) -> Result<Indicators> {
    check_stale(u, mesh)?;
    let area = &mesh.affine()?.area;
    let flux = Field::composite(Shape::vector(2), vec![Field::gradient(u)], move |args, out| {
        let g = args[0];
        let m = mu(g[0] * g[0] + g[1] * g[1]);
        out[0] = m * g[0];
        out[1] = m * g[1];
    });
    let p = u.space().element().order();
    let edges = integrate_normal_jump(
        &flux,
        mesh,
        &EdgeRule::of_order((2 * p).saturating_sub(1).max(1))?,
        &[JumpPostProcess::zero(EdgeSet::Boundary), JumpPostProcess::square(EdgeSet::All)],
    )?;
    collect(mesh, area, &edges)
}

/// Combined goal-oriented indicators `η²(T) Σζ² + ζ²(T) Ση²`.
pub fn goal_indicators(eta: &Indicators, zeta: &Indicators) -> Indicators {
    let (se, sz) = (eta.sum(), zeta.sum());
    let values = eta
        .values()
        .iter()
        .zip(zeta.values())
        .map(|(e, z)| e * sz + z * se)
        .collect();
    Indicators::new(values, eta.generation())
}
