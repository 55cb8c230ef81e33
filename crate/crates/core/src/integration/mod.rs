//! Barycentric coordinates, quadrature, mesh functions and integration over
//! elements, edges and edge jumps.

mod field;
mod quadrature;

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

pub(crate) use field::lift_edge_bary;
pub use field::Field;
pub use quadrature::{gauss_legendre, Barycentric1D, Barycentric2D, EdgeRule, TriangleRule};

pub use crate::linalg::Shape;

use crate::error::{Error, Result};
use crate::linalg::Batch;
use crate::mesh::Mesh;

/// A set of edges addressed by index or boundary part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeSet {
    All,
    /// Every boundary edge.
    Boundary,
    Part(usize),
    Parts(Vec<usize>),
    Edges(Vec<usize>),
}

impl EdgeSet {
    pub fn resolve(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        Ok(match self {
            EdgeSet::All => (0..mesh.n_edges()).collect(),
            EdgeSet::Boundary => mesh.boundaries().iter().flatten().copied().collect(),
            EdgeSet::Part(p) => mesh.boundary(*p)?.to_vec(),
            EdgeSet::Parts(parts) => {
                let mut edges = Vec::new();
                for &p in parts {
                    edges.extend_from_slice(mesh.boundary(p)?);
                }
                edges
            }
            EdgeSet::Edges(edges) => {
                if let Some(&e) = edges.iter().find(|&&e| e >= mesh.n_edges()) {
                    return Err(Error::IndexOutOfRange {
                        what: "edge",
                        index: e,
                        len: mesh.n_edges(),
                    });
                }
                edges.clone()
            }
        })
    }
}

type JumpCombinator = dyn Fn(&[&[f64]], &mut [f64]);

/// Replaces jump values on `edges` by `combinator(jump, aux…)`, evaluated
/// nodewise. Auxiliary fields must have an edge trace.
#[derive(Clone)]
pub struct JumpPostProcess {
    combinator: Rc<JumpCombinator>,
    aux: Vec<Field>,
    edges: EdgeSet,
}

impl core::fmt::Debug for JumpPostProcess {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("JumpPostProcess")
            .field("aux", &self.aux)
            .field("edges", &self.edges)
            .finish_non_exhaustive()
    }
}

impl JumpPostProcess {
    pub fn new(
        edges: EdgeSet,
        aux: Vec<Field>,
        combinator: impl Fn(&[&[f64]], &mut [f64]) + 'static,
    ) -> Self {
        JumpPostProcess {
            combinator: Rc::new(combinator),
            aux,
            edges,
        }
    }

    pub fn zero(edges: EdgeSet) -> Self {
        Self::new(edges, Vec::new(), |_, out| out.fill(0.0))
    }

    /// Componentwise square.
    pub fn square(edges: EdgeSet) -> Self {
        Self::new(edges, Vec::new(), |args, out| {
            for (o, j) in out.iter_mut().zip(args[0]) {
                *o = j * j;
            }
        })
    }

    /// `jump − aux`, componentwise.
    pub fn subtract(edges: EdgeSet, aux: Field) -> Self {
        Self::new(edges, vec![aux], |args, out| {
            for ((o, j), a) in out.iter_mut().zip(args[0]).zip(args[1]) {
                *o = j - a;
            }
        })
    }
}

/// `|T| Σ_k ω_k f(x_k)` per element; result index `c + comps · j`.
pub fn integrate_element(
    field: &Field,
    mesh: &Mesh,
    rule: &TriangleRule,
    elements: &[usize],
) -> Result<Vec<f64>> {
    let values = field.eval(mesh, &rule.bary, elements)?;
    let area = &mesh.affine()?.area;
    let areas: Vec<f64> = elements.iter().map(|&t| area[t]).collect();
    Ok(weighted_sum(&values, &rule.weights, &areas))
}

/// `|E| Σ_k ω_k f(x_k)` per edge; result index `c + comps · j`.
pub fn integrate_edge(field: &Field, mesh: &Mesh, rule: &EdgeRule, edges: &[usize]) -> Result<Vec<f64>> {
    let values = field.eval_edge(mesh, &rule.bary, edges)?;
    let length = &mesh.affine()?.edge_length;
    let lengths: Vec<f64> = edges.iter().map(|&e| length[e]).collect();
    Ok(weighted_sum(&values, &rule.weights, &lengths))
}

/// Integral of the post-processed jump `f|T+ − f|T−` over every edge; on
/// boundary edges the jump is the one-sided value. `T+` is the element that
/// traverses the edge in its stored direction.
pub fn integrate_jump(
    field: &Field,
    mesh: &Mesh,
    rule: &EdgeRule,
    post: &[JumpPostProcess],
) -> Result<Vec<f64>> {
    let jump = jump_values(field, mesh, &rule.bary)?;
    finish_jump(jump, mesh, rule, post)
}

/// As [`integrate_jump`] with the jump contracted with the unit normal
/// pointing from `T+` to `T−` (outwards on the boundary).
pub fn integrate_normal_jump(
    field: &Field,
    mesh: &Mesh,
    rule: &EdgeRule,
    post: &[JumpPostProcess],
) -> Result<Vec<f64>> {
    let jump = jump_values(field, mesh, &rule.bary)?;
    let comps = jump.components();
    if comps != 2 {
        return Err(Error::ShapeMismatch {
            expected: 2,
            found: comps,
        });
    }
    let normals = &mesh.affine()?.unit_normal;
    let mut contracted = Batch::zeros(1, jump.entities(), jump.nodes());
    for q in 0..jump.nodes() {
        for e in 0..jump.entities() {
            let j = jump.at(e, q);
            contracted.set(0, e, q, j[0] * normals[e][0] + j[1] * normals[e][1]);
        }
    }
    finish_jump(contracted, mesh, rule, post)
}

fn jump_values(field: &Field, mesh: &Mesh, bary: &Barycentric1D) -> Result<Batch> {
    let edges: Vec<usize> = (0..mesh.n_edges()).collect();
    let mut plus = field::eval_from_side(field, mesh, bary, &edges, 0)?;
    let minus = field::eval_from_side(field, mesh, bary, &edges, 1)?;
    for (p, m) in plus.data_mut().iter_mut().zip(minus.data()) {
        *p -= m;
    }
    Ok(plus)
}

fn finish_jump(mut jump: Batch, mesh: &Mesh, rule: &EdgeRule, post: &[JumpPostProcess]) -> Result<Vec<f64>> {
    let comps = jump.components();
    for step in post {
        let edges = step.edges.resolve(mesh)?;
        let aux = step
            .aux
            .iter()
            .map(|a| a.eval_edge(mesh, &rule.bary, &edges))
            .collect::<Result<Vec<_>>>()?;
        let mut buffer = vec![0.0; comps];
        let mut current = vec![0.0; comps];
        for q in 0..rule.len() {
            for (i, &e) in edges.iter().enumerate() {
                current.copy_from_slice(jump.at(e, q));
                let mut args: Vec<&[f64]> = Vec::with_capacity(aux.len() + 1);
                args.push(&current);
                args.extend(aux.iter().map(|a| a.at(i, q)));
                (step.combinator)(&args, &mut buffer);
                jump.at_mut(e, q).copy_from_slice(&buffer);
            }
        }
    }
    let lengths = &mesh.affine()?.edge_length;
    Ok(weighted_sum(&jump, &rule.weights, lengths))
}

fn weighted_sum(values: &Batch, weights: &[f64], measures: &[f64]) -> Vec<f64> {
    let comps = values.components();
    let mut out = vec![0.0; comps * values.entities()];
    for (q, &w) in weights.iter().enumerate() {
        for j in 0..values.entities() {
            for (c, v) in values.at(j, q).iter().enumerate() {
                out[c + comps * j] += w * v;
            }
        }
    }
    for (j, &m) in measures.iter().enumerate() {
        for c in 0..comps {
            out[c + comps * j] *= m;
        }
    }
    out
}
