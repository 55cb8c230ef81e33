//! Assembly of general second-order elliptic bilinear and linear forms
//!
//! ```text
//! a(u, v) = ∫ A∇u·∇v + b·∇u v + c u v dx + ∫_ΓR α u v ds
//! F(v)    = ∫ f v + fvec·∇v dx + ∫_ΓN φ v ds + ∫_ΓR γ v ds
//! ```
//!
//! Unset quadrature rules default to exactness for constant coefficients:
//! `max(2p − 2, 1)` for `a`, `2p` for `b`, `c`, `f`, `max(2p − 1, 1)` for
//! `fvec` and `2p` on edges.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{FeSpace, FiniteElement};
use crate::integration::{lift_edge_bary, Barycentric1D, EdgeRule, Field, TriangleRule};
use crate::linalg::{CsrMatrix, SparseSystem};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Default)]
pub struct BilinearForm {
    /// Diffusion, a 2×2 column-major matrix or a scalar multiple of the
    /// identity.
    pub a: Option<Field>,
    /// Convection vector.
    pub b: Option<Field>,
    /// Reaction.
    pub c: Option<Field>,
    pub robin: Option<Field>,
    pub robin_parts: Option<Vec<usize>>,
    pub qra: Option<TriangleRule>,
    pub qrb: Option<TriangleRule>,
    pub qrc: Option<TriangleRule>,
    pub qr_robin: Option<EdgeRule>,
}

#[derive(Debug, Clone, Default)]
pub struct LinearForm {
    pub f: Option<Field>,
    pub fvec: Option<Field>,
    pub neumann: Option<Field>,
    pub neumann_parts: Option<Vec<usize>>,
    pub robin: Option<Field>,
    pub robin_parts: Option<Vec<usize>>,
    pub qrf: Option<TriangleRule>,
    pub qrfvec: Option<TriangleRule>,
    pub qr_neumann: Option<EdgeRule>,
    pub qr_robin: Option<EdgeRule>,
}

fn rule_2d(rule: &Option<TriangleRule>, default: usize) -> Result<TriangleRule> {
    match rule {
        Some(r) => Ok(r.clone()),
        None => TriangleRule::of_order(default.max(1)),
    }
}

fn rule_1d(rule: &Option<EdgeRule>, default: usize) -> Result<EdgeRule> {
    match rule {
        Some(r) => Ok(r.clone()),
        None => EdgeRule::of_order(default.max(1)),
    }
}

fn check_components(field: &Field, allowed: &[usize]) -> Result<()> {
    if allowed.contains(&field.components()) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            expected: allowed[0],
            found: field.components(),
        })
    }
}

fn boundary_edges(mesh: &Mesh, parts: &Option<Vec<usize>>) -> Result<Vec<usize>> {
    let parts = parts.as_ref().ok_or(Error::MissingBoundaryParts)?;
    let mut edges = Vec::new();
    for &p in parts {
        edges.extend_from_slice(mesh.boundary(p)?);
    }
    Ok(edges)
}

/// Physical basis gradients per (element, node): `grads[(j·nq + q)·n + i]`.
fn physical_gradients(mesh: &Mesh, element: &FiniteElement, rule: &TriangleRule) -> Result<Vec<[f64; 2]>> {
    let affine = mesh.affine()?;
    let n = element.n_local();
    let nq = rule.len();
    let reference: Vec<Vec<[f64; 2]>> = rule.bary.coords().iter().map(|l| element.gradients(l)).collect();
    let mut grads = vec![[0.0; 2]; mesh.n_elements() * nq * n];
    for (t, m) in affine.df_inv_t.iter().enumerate() {
        for (q, local) in reference.iter().enumerate() {
            for (i, g) in local.iter().enumerate() {
                grads[(t * nq + q) * n + i] = [m[0] * g[0] + m[2] * g[1], m[1] * g[0] + m[3] * g[1]];
            }
        }
    }
    Ok(grads)
}

fn all_elements(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.n_elements()).collect()
}

/// Basis values on boundary edges seen from their (only) element:
/// `(element, values[q][i])` per edge.
fn edge_basis(mesh: &Mesh, element: &FiniteElement, bary: &Barycentric1D, edges: &[usize]) -> Vec<(usize, Vec<Vec<f64>>)> {
    let mut cache: [Option<Vec<Vec<f64>>>; 6] = Default::default();
    edges
        .iter()
        .map(|&e| {
            let side = mesh.edge2elements()[e][0].expect("every edge has a positive side");
            let flipped = mesh.edge_flipped()[side.element][side.local];
            let slot = &mut cache[2 * side.local + usize::from(flipped)];
            let values = slot
                .get_or_insert_with(|| {
                    lift_edge_bary(bary, side.local, flipped)
                        .coords()
                        .iter()
                        .map(|l| element.values(l))
                        .collect()
                })
                .clone();
            (side.element, values)
        })
        .collect()
}

impl BilinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_none() && self.b.is_none() && self.c.is_none() && self.robin.is_none()
    }

    /// Accumulates the element and Robin-edge contributions as triplets.
    pub fn assemble(&self, mesh: &Mesh, space: &FeSpace) -> Result<SparseSystem> {
        if self.is_empty() {
            return Err(Error::EmptyForm);
        }
        space.check_generation(mesh)?;
        let element = space.element();
        let p = element.order();
        let n = element.n_local();
        let n_el = mesh.n_elements();
        let area = &mesh.affine()?.area;
        let elements = all_elements(mesh);
        let mut local = vec![0.0; n_el * n * n];

        if let Some(a) = &self.a {
            check_components(a, &[4, 1])?;
            let rule = rule_2d(&self.qra, (2 * p).saturating_sub(2))?;
            let coefficient = a.eval(mesh, &rule.bary, &elements)?;
            let grads = physical_gradients(mesh, element, &rule)?;
            let nq = rule.len();
            let mut ag = vec![[0.0; 2]; n];
            for t in 0..n_el {
                let block = &mut local[t * n * n..(t + 1) * n * n];
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * area[t];
                    let c = coefficient.at(t, q);
                    let g = &grads[(t * nq + q) * n..(t * nq + q + 1) * n];
                    for (j, gj) in g.iter().enumerate() {
                        ag[j] = if c.len() == 1 {
                            [c[0] * gj[0], c[0] * gj[1]]
                        } else {
                            [c[0] * gj[0] + c[2] * gj[1], c[1] * gj[0] + c[3] * gj[1]]
                        };
                    }
                    for (i, gi) in g.iter().enumerate() {
                        for (j, agj) in ag.iter().enumerate() {
                            block[i * n + j] += scale * (agj[0] * gi[0] + agj[1] * gi[1]);
                        }
                    }
                }
            }
        }

        if let Some(b) = &self.b {
            check_components(b, &[2])?;
            let rule = rule_2d(&self.qrb, 2 * p)?;
            let coefficient = b.eval(mesh, &rule.bary, &elements)?;
            let grads = physical_gradients(mesh, element, &rule)?;
            let values: Vec<Vec<f64>> = rule.bary.coords().iter().map(|l| element.values(l)).collect();
            let nq = rule.len();
            for t in 0..n_el {
                let block = &mut local[t * n * n..(t + 1) * n * n];
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * area[t];
                    let c = coefficient.at(t, q);
                    let g = &grads[(t * nq + q) * n..(t * nq + q + 1) * n];
                    for (i, phi_i) in values[q].iter().enumerate() {
                        for (j, gj) in g.iter().enumerate() {
                            block[i * n + j] += scale * (c[0] * gj[0] + c[1] * gj[1]) * phi_i;
                        }
                    }
                }
            }
        }

        if let Some(c) = &self.c {
            check_components(c, &[1])?;
            let rule = rule_2d(&self.qrc, 2 * p)?;
            let coefficient = c.eval(mesh, &rule.bary, &elements)?;
            let values: Vec<Vec<f64>> = rule.bary.coords().iter().map(|l| element.values(l)).collect();
            for t in 0..n_el {
                let block = &mut local[t * n * n..(t + 1) * n * n];
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * area[t] * coefficient.get(0, t, q);
                    mass_update(block, &values[q], scale);
                }
            }
        }

        let mut system = SparseSystem::with_capacity(space.n_dofs(), n_el * n * n);
        for t in 0..n_el {
            let dofs = space.element_dofs(t);
            for (i, &di) in dofs.iter().enumerate() {
                for (j, &dj) in dofs.iter().enumerate() {
                    system.push(di, dj, local[t * n * n + i * n + j])?;
                }
            }
        }

        if let Some(robin) = &self.robin {
            check_components(robin, &[1])?;
            let edges = boundary_edges(mesh, &self.robin_parts)?;
            let rule = rule_1d(&self.qr_robin, 2 * p)?;
            let coefficient = robin.eval_edge(mesh, &rule.bary, &edges)?;
            let lengths = &mesh.affine()?.edge_length;
            let mut block = vec![0.0; n * n];
            for (k, (&e, (t, values))) in edges.iter().zip(edge_basis(mesh, element, &rule.bary, &edges)).enumerate() {
                block.fill(0.0);
                for (q, w) in rule.weights.iter().enumerate() {
                    mass_update(&mut block, &values[q], w * lengths[e] * coefficient.get(0, k, q));
                }
                let dofs = space.element_dofs(t);
                for (i, &di) in dofs.iter().enumerate() {
                    for (j, &dj) in dofs.iter().enumerate() {
                        system.push(di, dj, block[i * n + j])?;
                    }
                }
            }
        }
        Ok(system)
    }

    pub fn assemble_matrix(&self, mesh: &Mesh, space: &FeSpace) -> Result<CsrMatrix> {
        Ok(self.assemble(mesh, space)?.compress())
    }
}

fn mass_update(block: &mut [f64], values: &[f64], scale: f64) {
    let n = values.len();
    for (i, vi) in values.iter().enumerate() {
        for (j, vj) in values.iter().enumerate() {
            block[i * n + j] += scale * vi * vj;
        }
    }
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_none() && self.fvec.is_none() && self.neumann.is_none() && self.robin.is_none()
    }

    pub fn assemble(&self, mesh: &Mesh, space: &FeSpace) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::EmptyForm);
        }
        space.check_generation(mesh)?;
        let element = space.element();
        let p = element.order();
        let area = &mesh.affine()?.area;
        let elements = all_elements(mesh);
        let mut rhs = vec![0.0; space.n_dofs()];

        if let Some(f) = &self.f {
            check_components(f, &[1])?;
            let rule = rule_2d(&self.qrf, 2 * p)?;
            let values = f.eval(mesh, &rule.bary, &elements)?;
            let basis: Vec<Vec<f64>> = rule.bary.coords().iter().map(|l| element.values(l)).collect();
            for t in 0..mesh.n_elements() {
                let dofs = space.element_dofs(t);
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * area[t] * values.get(0, t, q);
                    for (&d, phi) in dofs.iter().zip(&basis[q]) {
                        rhs[d] += scale * phi;
                    }
                }
            }
        }

        if let Some(fvec) = &self.fvec {
            check_components(fvec, &[2])?;
            let rule = rule_2d(&self.qrfvec, (2 * p).saturating_sub(1))?;
            let values = fvec.eval(mesh, &rule.bary, &elements)?;
            let grads = physical_gradients(mesh, element, &rule)?;
            let (n, nq) = (element.n_local(), rule.len());
            for t in 0..mesh.n_elements() {
                let dofs = space.element_dofs(t);
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * area[t];
                    let v = values.at(t, q);
                    let g = &grads[(t * nq + q) * n..(t * nq + q + 1) * n];
                    for (&d, gi) in dofs.iter().zip(g) {
                        rhs[d] += scale * (v[0] * gi[0] + v[1] * gi[1]);
                    }
                }
            }
        }

        for (field, parts, rule) in [
            (&self.neumann, &self.neumann_parts, &self.qr_neumann),
            (&self.robin, &self.robin_parts, &self.qr_robin),
        ] {
            let Some(field) = field else { continue };
            check_components(field, &[1])?;
            let edges = boundary_edges(mesh, parts)?;
            let rule = rule_1d(rule, 2 * p)?;
            let values = field.eval_edge(mesh, &rule.bary, &edges)?;
            let lengths = &mesh.affine()?.edge_length;
            for (k, (&e, (t, basis))) in edges.iter().zip(edge_basis(mesh, element, &rule.bary, &edges)).enumerate() {
                let dofs = space.element_dofs(t);
                for (q, w) in rule.weights.iter().enumerate() {
                    let scale = w * lengths[e] * values.get(0, k, q);
                    for (&d, phi) in dofs.iter().zip(&basis[q]) {
                        rhs[d] += scale * phi;
                    }
                }
            }
        }
        Ok(rhs)
    }
}
