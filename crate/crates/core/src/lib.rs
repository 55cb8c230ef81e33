//! Core algorithms of a 2D adaptive finite element toolkit.
//!
//! The crate is `no_std` and only needs an allocator. It contains the mesh
//! data structure with newest-vertex-bisection refinement, barycentric
//! quadrature and a composable field model, arbitrary-order Lagrange spaces,
//! assembly of general second-order elliptic forms, residual error
//! estimators and Dörfler marking. File formats, wall-clock timing, direct
//! sparse solvers and the experiment drivers live in the `afem` crate.
//!
//! In-memory indices (vertices, edges, elements, boundary parts, DOFs) are
//! 0-based throughout.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod error;
pub mod estimate;
pub mod fem;
pub mod integration;
pub mod linalg;
pub mod mark;
pub mod mesh;
pub mod refinement;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::assembly::{BilinearForm, LinearForm};
    pub use crate::error::{Error, Result};
    pub use crate::fem::{
        nodal_interpolation, BoundarySelection, FeFunction, FeSpace, FiniteElement, Prolongation,
    };
    pub use crate::integration::{
        integrate_edge, integrate_element, integrate_jump, integrate_normal_jump, Barycentric1D,
        Barycentric2D, EdgeRule, EdgeSet, Field, JumpPostProcess, Shape, TriangleRule,
    };
    pub use crate::linalg::{Batch, CsrMatrix, LinearSolver, SparseSystem};
    pub use crate::mark::mark_doerfler;
    pub use crate::mesh::{AffineTransformation, Mesh, Point};
    pub use crate::refinement::{refine_locally, refine_uniform, RefinementRecord, Strategy};
}
