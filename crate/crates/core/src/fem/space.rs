use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::error::{Error, Result};
use crate::fem::{Family, FiniteElement};
use crate::integration::{Barycentric2D, Field};
use crate::linalg::Batch;
use crate::mesh::Mesh;

/// Boundary parts carrying homogeneous Dirichlet conditions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BoundarySelection {
    #[default]
    All,
    None,
    Parts(Vec<usize>),
}

impl BoundarySelection {
    pub fn parts(&self, mesh: &Mesh) -> Result<Vec<usize>> {
        match self {
            BoundarySelection::All => Ok((0..mesh.boundaries().len()).collect()),
            BoundarySelection::None => Ok(Vec::new()),
            BoundarySelection::Parts(parts) => {
                for &p in parts {
                    mesh.boundary(p)?;
                }
                Ok(parts.clone())
            }
        }
    }
}

/// Global DOF numbering of a finite element on one mesh generation.
///
/// Continuous spaces number vertex DOFs first (DOF = vertex index), then
/// `p − 1` DOFs per edge in stored edge direction, then element-interior
/// DOFs. Discontinuous spaces number all DOFs element by element.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    element: FiniteElement,
    generation: u64,
    dirichlet: BoundarySelection,
    n_local: usize,
    element2dofs: Vec<usize>,
    edge2dofs: Vec<usize>,
    n_dofs: usize,
    free_dofs: Vec<usize>,
    is_free: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, element: FiniteElement, dirichlet: BoundarySelection) -> Result<Self> {
        let parts = dirichlet.parts(mesh)?;
        let n_local = element.n_local();
        let (element2dofs, edge2dofs, n_dofs) = match element.family() {
            Family::L2 => ((0..mesh.n_elements() * n_local).collect(), Vec::new(), mesh.n_elements() * n_local),
            Family::H1 => h1_numbering(mesh, &element),
        };
        let mut is_free = vec![true; n_dofs];
        if element.family() == Family::H1 {
            let per_edge = element.order() + 1;
            for p in parts {
                for &e in mesh.boundary(p)? {
                    for &d in &edge2dofs[e * per_edge..(e + 1) * per_edge] {
                        is_free[d] = false;
                    }
                }
            }
        }
        let free_dofs = (0..n_dofs).filter(|&d| is_free[d]).collect();
        Ok(FeSpace {
            element,
            generation: mesh.generation(),
            dirichlet,
            n_local,
            element2dofs,
            edge2dofs,
            n_dofs,
            free_dofs,
            is_free,
        })
    }

    /// The same element and boundary conditions on a (refined) mesh.
    pub fn rebuild(&self, mesh: &Mesh) -> Result<Self> {
        Self::new(mesh, self.element.clone(), self.dirichlet.clone())
    }

    pub fn element(&self) -> &FiniteElement {
        &self.element
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn dirichlet(&self) -> &BoundarySelection {
        &self.dirichlet
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn element_dofs(&self, element: usize) -> &[usize] {
        &self.element2dofs[element * self.n_local..(element + 1) * self.n_local]
    }

    /// DOFs on a closed edge, from its start to its end vertex. Empty for
    /// discontinuous spaces.
    pub fn edge_dofs(&self, edge: usize) -> &[usize] {
        if self.edge2dofs.is_empty() {
            return &[];
        }
        let k = self.element.order() + 1;
        &self.edge2dofs[edge * k..(edge + 1) * k]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.is_free[dof]
    }

    pub fn check_generation(&self, mesh: &Mesh) -> Result<()> {
        if self.generation != mesh.generation() {
            return Err(Error::StaleFunction {
                stamp: self.generation,
                current: mesh.generation(),
            });
        }
        Ok(())
    }
}

fn h1_numbering(mesh: &Mesh, element: &FiniteElement) -> (Vec<usize>, Vec<usize>, usize) {
    let p = element.order();
    let n_local = element.n_local();
    let per_edge = element.dofs_per_edge();
    let per_interior = element.dofs_per_interior();
    let n_vertices = mesh.n_vertices();
    let edge_base = n_vertices;
    let interior_base = edge_base + per_edge * mesh.n_edges();
    let n_dofs = interior_base + per_interior * mesh.n_elements();

    let mut element2dofs = Vec::with_capacity(n_local * mesh.n_elements());
    for (t, vertices) in mesh.elements().iter().enumerate() {
        element2dofs.extend_from_slice(vertices);
        for j in 0..3 {
            let e = mesh.element2edges()[t][j];
            let flipped = mesh.edge_flipped()[t][j];
            for m in 1..p {
                let k = if flipped { p - 1 - m } else { m - 1 };
                element2dofs.push(edge_base + e * per_edge + k);
            }
        }
        for i in 0..per_interior {
            element2dofs.push(interior_base + t * per_interior + i);
        }
    }

    let mut edge2dofs = Vec::with_capacity((p + 1) * mesh.n_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        edge2dofs.push(a);
        edge2dofs.extend((0..per_edge).map(|k| edge_base + e * per_edge + k));
        edge2dofs.push(b);
    }
    (element2dofs, edge2dofs, n_dofs)
}

#[derive(Debug)]
struct FeFunctionData {
    space: Rc<FeSpace>,
    coefficients: Vec<f64>,
}

/// Coefficient vector over an [`FeSpace`]. Clones share their data, so
/// fields built from a function see later coefficient updates.
#[derive(Debug, Clone)]
pub struct FeFunction(Rc<RefCell<FeFunctionData>>);

impl FeFunction {
    pub fn new(space: Rc<FeSpace>) -> Self {
        let coefficients = vec![0.0; space.n_dofs()];
        FeFunction(Rc::new(RefCell::new(FeFunctionData { space, coefficients })))
    }

    pub fn with_coefficients(space: Rc<FeSpace>, coefficients: Vec<f64>) -> Result<Self> {
        let u = Self::new(space);
        u.set_coefficients(coefficients)?;
        Ok(u)
    }

    pub fn space(&self) -> Rc<FeSpace> {
        self.0.borrow().space.clone()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.0.borrow().coefficients.clone()
    }

    pub fn with_data<R>(&self, f: impl FnOnce(&[f64]) -> R) -> R {
        f(&self.0.borrow().coefficients)
    }

    pub fn set_coefficients(&self, coefficients: Vec<f64>) -> Result<()> {
        let mut data = self.0.borrow_mut();
        if coefficients.len() != data.space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: data.space.n_dofs(),
                found: coefficients.len(),
            });
        }
        data.coefficients = coefficients;
        Ok(())
    }

    /// Moves the function to a new space, e.g. after refinement.
    pub fn rebind(&self, space: Rc<FeSpace>, coefficients: Vec<f64>) -> Result<()> {
        if coefficients.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.n_dofs(),
                found: coefficients.len(),
            });
        }
        *self.0.borrow_mut() = FeFunctionData { space, coefficients };
        Ok(())
    }

    pub fn has_edge_trace(&self) -> bool {
        self.0.borrow().space.element().family() == Family::H1
    }

    fn eval_with<const C: usize>(
        &self,
        mesh: &Mesh,
        bary: &Barycentric2D,
        elements: &[usize],
        local: impl Fn(&FiniteElement, &[f64; 3]) -> Vec<[f64; C]>,
        physical: impl Fn(usize, &[f64; C], &mut [f64]),
        out_comps: usize,
    ) -> Result<Batch> {
        let data = self.0.borrow();
        data.space.check_generation(mesh)?;
        let space = &data.space;
        let mut out = Batch::zeros(out_comps, elements.len(), bary.len());
        let mut reference = [0.0; C];
        for (q, lambda) in bary.coords().iter().enumerate() {
            let basis = local(space.element(), lambda);
            for (j, &t) in elements.iter().enumerate() {
                reference.fill(0.0);
                for (&d, b) in space.element_dofs(t).iter().zip(&basis) {
                    let c = data.coefficients[d];
                    for k in 0..C {
                        reference[k] += c * b[k];
                    }
                }
                physical(t, &reference, out.at_mut(j, q));
            }
        }
        Ok(out)
    }

    pub(crate) fn eval_values(&self, mesh: &Mesh, bary: &Barycentric2D, elements: &[usize]) -> Result<Batch> {
        self.eval_with::<1>(
            mesh,
            bary,
            elements,
            |e, l| e.values(l).into_iter().map(|v| [v]).collect(),
            |_, r, out| out[0] = r[0],
            1,
        )
    }

    pub(crate) fn eval_gradients(&self, mesh: &Mesh, bary: &Barycentric2D, elements: &[usize]) -> Result<Batch> {
        let affine = mesh.affine()?;
        self.eval_with::<2>(
            mesh,
            bary,
            elements,
            |e, l| e.gradients(l),
            |t, g, out| {
                let m = affine.df_inv_t[t];
                out[0] = m[0] * g[0] + m[2] * g[1];
                out[1] = m[1] * g[0] + m[3] * g[1];
            },
            2,
        )
    }

    pub(crate) fn eval_hessians(&self, mesh: &Mesh, bary: &Barycentric2D, elements: &[usize]) -> Result<Batch> {
        let affine = mesh.affine()?;
        self.eval_with::<3>(
            mesh,
            bary,
            elements,
            |e, l| e.hessians(l),
            |t, h, out| {
                // M Ĥ Mᵀ with M = DF^{-T}
                let m = affine.df_inv_t[t];
                let (m00, m10, m01, m11) = (m[0], m[1], m[2], m[3]);
                let (hxx, hxy, hyy) = (h[0], h[1], h[2]);
                let a00 = m00 * hxx + m01 * hxy;
                let a01 = m00 * hxy + m01 * hyy;
                let a10 = m10 * hxx + m11 * hxy;
                let a11 = m10 * hxy + m11 * hyy;
                out[0] = a00 * m00 + a01 * m01;
                out[1] = a10 * m00 + a11 * m01;
                out[2] = a00 * m10 + a01 * m11;
                out[3] = a10 * m10 + a11 * m11;
            },
            4,
        )
    }
}

/// Coefficients of the Lagrange interpolant of a scalar field. Shared nodes
/// take the value seen from the adjacent element of lowest index.
pub fn nodal_interpolation(field: &Field, mesh: &Mesh, space: &FeSpace) -> Result<Vec<f64>> {
    space.check_generation(mesh)?;
    if field.components() != 1 {
        return Err(Error::ShapeMismatch {
            expected: 1,
            found: field.components(),
        });
    }
    let nodes = Barycentric2D::new(space.element().nodes().to_vec())?;
    let elements: Vec<usize> = (0..mesh.n_elements()).collect();
    let values = field.eval(mesh, &nodes, &elements)?;
    let mut coefficients = vec![0.0; space.n_dofs()];
    let mut assigned = vec![false; space.n_dofs()];
    for t in 0..mesh.n_elements() {
        for (i, &d) in space.element_dofs(t).iter().enumerate() {
            if !assigned[d] {
                assigned[d] = true;
                coefficients[d] = values.get(0, t, i);
            }
        }
    }
    Ok(coefficients)
}
