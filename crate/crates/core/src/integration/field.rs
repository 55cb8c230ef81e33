use alloc::boxed::Box;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::integration::{Barycentric1D, Barycentric2D};
use crate::linalg::{Batch, Shape};
use crate::mesh::{Mesh, Point};

type SpatialFn = dyn Fn(Point, &mut [f64]);
type Combinator = dyn Fn(&[&[f64]], &mut [f64]);

enum FieldKind {
    Constant(Vec<f64>),
    Spatial(Box<SpatialFn>),
    Fe(FeFunction),
    Gradient(FeFunction),
    Hessian(FeFunction),
    Composite {
        args: Vec<Field>,
        combinator: Box<Combinator>,
    },
}

/// A function on the mesh that can be evaluated at barycentric points of
/// elements (and, where a trace exists, of edges).
///
/// Cloning is cheap and shares the underlying data; fields built on an
/// [`FeFunction`] follow later updates of its coefficients.
#[derive(Clone)]
pub struct Field {
    kind: Rc<FieldKind>,
    shape: Shape,
}

impl core::fmt::Debug for Field {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match &*self.kind {
            FieldKind::Constant(_) => "Constant",
            FieldKind::Spatial(_) => "Spatial",
            FieldKind::Fe(_) => "Fe",
            FieldKind::Gradient(_) => "Gradient",
            FieldKind::Hessian(_) => "Hessian",
            FieldKind::Composite { .. } => "Composite",
        };
        f.debug_struct("Field")
            .field("kind", &name)
            .field("shape", &self.shape)
            .finish()
    }
}

impl Field {
    pub fn constant(value: f64) -> Self {
        Field {
            kind: Rc::new(FieldKind::Constant(vec![value])),
            shape: Shape::SCALAR,
        }
    }

    pub fn constant_array(values: Vec<f64>, shape: Shape) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                found: values.len(),
            });
        }
        Ok(Field {
            kind: Rc::new(FieldKind::Constant(values)),
            shape,
        })
    }

    pub fn spatial(shape: Shape, f: impl Fn(Point, &mut [f64]) + 'static) -> Self {
        Field {
            kind: Rc::new(FieldKind::Spatial(Box::new(f))),
            shape,
        }
    }

    pub fn scalar(f: impl Fn(Point) -> f64 + 'static) -> Self {
        Self::spatial(Shape::SCALAR, move |x, out| out[0] = f(x))
    }

    pub fn fe(u: &FeFunction) -> Self {
        Field {
            kind: Rc::new(FieldKind::Fe(u.clone())),
            shape: Shape::SCALAR,
        }
    }

    pub fn gradient(u: &FeFunction) -> Self {
        Field {
            kind: Rc::new(FieldKind::Gradient(u.clone())),
            shape: Shape::vector(2),
        }
    }

    /// Column-major 2×2 Hessian.
    pub fn hessian(u: &FeFunction) -> Self {
        Field {
            kind: Rc::new(FieldKind::Hessian(u.clone())),
            shape: Shape::matrix(2, 2),
        }
    }

    /// Pointwise combinator of the argument values. The combinator writes
    /// `shape.len()` components.
    pub fn composite(
        shape: Shape,
        args: Vec<Field>,
        combinator: impl Fn(&[&[f64]], &mut [f64]) + 'static,
    ) -> Self {
        Field {
            kind: Rc::new(FieldKind::Composite {
                args,
                combinator: Box::new(combinator),
            }),
            shape,
        }
    }

    /// As [`Field::composite`] but checks the argument shapes first.
    pub fn composite_checked(
        shape: Shape,
        args: Vec<Field>,
        expected: &[Shape],
        combinator: impl Fn(&[&[f64]], &mut [f64]) + 'static,
    ) -> Result<Self> {
        if args.len() != expected.len() {
            return Err(Error::ShapeMismatch {
                expected: expected.len(),
                found: args.len(),
            });
        }
        for (arg, shape) in args.iter().zip(expected) {
            if arg.shape != *shape {
                return Err(Error::ShapeMismatch {
                    expected: shape.len(),
                    found: arg.shape.len(),
                });
            }
        }
        Ok(Self::composite(shape, args, combinator))
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn components(&self) -> usize {
        self.shape.len()
    }

    /// Values indexed (component, element, node) at `bary` in each of
    /// `elements`.
    pub fn eval(&self, mesh: &Mesh, bary: &Barycentric2D, elements: &[usize]) -> Result<Batch> {
        for &t in elements {
            if t >= mesh.n_elements() {
                return Err(Error::IndexOutOfRange {
                    what: "element",
                    index: t,
                    len: mesh.n_elements(),
                });
            }
        }
        let comps = self.components();
        match &*self.kind {
            FieldKind::Constant(value) => Ok(broadcast_constant(value, elements.len(), bary.len())),
            FieldKind::Spatial(f) => {
                let mut out = Batch::zeros(comps, elements.len(), bary.len());
                for (q, lambda) in bary.coords().iter().enumerate() {
                    for (j, &t) in elements.iter().enumerate() {
                        f(mesh.point(t, lambda), out.at_mut(j, q));
                    }
                }
                Ok(out)
            }
            FieldKind::Fe(u) => u.eval_values(mesh, bary, elements),
            FieldKind::Gradient(u) => u.eval_gradients(mesh, bary, elements),
            FieldKind::Hessian(u) => u.eval_hessians(mesh, bary, elements),
            FieldKind::Composite { args, combinator } => {
                let values = args
                    .iter()
                    .map(|a| a.eval(mesh, bary, elements))
                    .collect::<Result<Vec<_>>>()?;
                Ok(combine(comps, &values, combinator, elements.len(), bary.len()))
            }
        }
    }

    /// Values indexed (component, edge, node) at `bary` along each edge,
    /// parametrized from its stored start to end vertex.
    pub fn eval_edge(&self, mesh: &Mesh, bary: &Barycentric1D, edges: &[usize]) -> Result<Batch> {
        for &e in edges {
            if e >= mesh.n_edges() {
                return Err(Error::IndexOutOfRange {
                    what: "edge",
                    index: e,
                    len: mesh.n_edges(),
                });
            }
        }
        let comps = self.components();
        match &*self.kind {
            FieldKind::Constant(value) => Ok(broadcast_constant(value, edges.len(), bary.len())),
            FieldKind::Spatial(f) => {
                let mut out = Batch::zeros(comps, edges.len(), bary.len());
                for (q, lambda) in bary.coords().iter().enumerate() {
                    for (j, &e) in edges.iter().enumerate() {
                        f(mesh.edge_point(e, lambda), out.at_mut(j, q));
                    }
                }
                Ok(out)
            }
            FieldKind::Fe(u) => {
                if !u.has_edge_trace() {
                    return Err(Error::NoEdgeTrace("a discontinuous finite element function"));
                }
                // continuous, so the value from the positive side is the trace
                eval_from_side(self, mesh, bary, edges, 0)
            }
            FieldKind::Gradient(_) => Err(Error::NoEdgeTrace("the gradient of a finite element function")),
            FieldKind::Hessian(_) => Err(Error::NoEdgeTrace("the Hessian of a finite element function")),
            FieldKind::Composite { args, combinator } => {
                let values = args
                    .iter()
                    .map(|a| a.eval_edge(mesh, bary, edges))
                    .collect::<Result<Vec<_>>>()?;
                Ok(combine(comps, &values, combinator, edges.len(), bary.len()))
            }
        }
    }
}

fn broadcast_constant(value: &[f64], entities: usize, nodes: usize) -> Batch {
    let mut out = Batch::zeros(value.len(), entities, nodes);
    for chunk in out.data_mut().chunks_exact_mut(value.len().max(1)) {
        chunk.copy_from_slice(value);
    }
    out
}

fn combine(
    comps: usize,
    values: &[Batch],
    combinator: &Combinator,
    entities: usize,
    nodes: usize,
) -> Batch {
    let mut out = Batch::zeros(comps, entities, nodes);
    let mut slices: Vec<&[f64]> = Vec::with_capacity(values.len());
    for q in 0..nodes {
        for j in 0..entities {
            slices.clear();
            slices.extend(values.iter().map(|v| v.at(j, q)));
            combinator(&slices, out.at_mut(j, q));
        }
    }
    out
}

/// Element barycentric coordinates of edge points seen from local edge
/// `local`, traversed against the stored direction if `flipped`.
pub(crate) fn lift_edge_bary(bary: &Barycentric1D, local: usize, flipped: bool) -> Barycentric2D {
    let coords = bary
        .coords()
        .iter()
        .map(|&[l0, l1]| {
            let (a, b) = if flipped { (l1, l0) } else { (l0, l1) };
            let mut lambda = [0.0; 3];
            lambda[local] = a;
            lambda[(local + 1) % 3] = b;
            lambda
        })
        .collect();
    Barycentric2D::new(coords).expect("lifted edge coordinates are valid")
}

/// Evaluates `field` on `edges` from the element on `side` (0: the element
/// traversing the stored edge direction, 1: the opposite one). Edges
/// without an element on that side get zeros.
pub(crate) fn eval_from_side(
    field: &Field,
    mesh: &Mesh,
    bary: &Barycentric1D,
    edges: &[usize],
    side: usize,
) -> Result<Batch> {
    let comps = field.components();
    let mut out = Batch::zeros(comps, edges.len(), bary.len());
    let mut groups: [Vec<(usize, usize)>; 6] = Default::default();
    for (j, &e) in edges.iter().enumerate() {
        if let Some(s) = mesh.edge2elements()[e][side] {
            let flipped = mesh.edge_flipped()[s.element][s.local];
            groups[2 * s.local + usize::from(flipped)].push((j, s.element));
        }
    }
    for (g, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let lifted = lift_edge_bary(bary, g / 2, g % 2 == 1);
        let elements: Vec<usize> = group.iter().map(|&(_, t)| t).collect();
        let values = field.eval(mesh, &lifted, &elements)?;
        for q in 0..bary.len() {
            for (i, &(j, _)) in group.iter().enumerate() {
                out.at_mut(j, q).copy_from_slice(values.at(i, q));
            }
        }
    }
    Ok(out)
}
