//! Conforming triangulations with full edge connectivity.
//!
//! Edges are numbered in lexicographic order of their (smaller, larger)
//! vertex pair. Boundary edges keep the orientation of the element they
//! belong to, so the domain lies on their left; interior edges run from the
//! lower to the higher vertex index. The `j`-th local edge of an element
//! connects its local vertices `j` and `j + 1 (mod 3)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use once_cell::race::OnceBox;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// One side of an edge: the element and the local index of the edge in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSide {
    pub element: usize,
    pub local: usize,
}

pub struct Mesh {
    coordinates: Vec<Point>,
    elements: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    element2edges: Vec<[usize; 3]>,
    edge_flipped: Vec<[bool; 3]>,
    // [0]: element traversing the edge in stored direction, [1]: the other one
    edge2elements: Vec<[Option<EdgeSide>; 2]>,
    boundaries: Vec<Vec<usize>>,
    generation: u64,
    affine: OnceBox<AffineTransformation>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Self {
            coordinates: self.coordinates.clone(),
            elements: self.elements.clone(),
            edges: self.edges.clone(),
            element2edges: self.element2edges.clone(),
            edge_flipped: self.edge_flipped.clone(),
            edge2elements: self.edge2elements.clone(),
            boundaries: self.boundaries.clone(),
            generation: self.generation,
            affine: OnceBox::new(),
        }
    }
}

impl core::fmt::Debug for Mesh {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Mesh")
            .field("n_vertices", &self.n_vertices())
            .field("n_edges", &self.n_edges())
            .field("n_elements", &self.n_elements())
            .field("n_boundaries", &self.boundaries.len())
            .field("generation", &self.generation)
            .finish()
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh from coordinates, counter-clockwise element triples and
    /// oriented boundary edges (domain on the left), one list per boundary
    /// part. The input is validated.
    pub fn from_arrays(
        coordinates: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary_edges: Vec<Vec<[usize; 2]>>,
    ) -> Result<Self> {
        Self::build(coordinates, elements, boundary_edges, true)
    }

    /// Same as [`Mesh::from_arrays`] but skips the geometric checks
    /// (orientation, degeneracy, boundary coverage). Topological lookups still
    /// fail on inconsistent input.
    pub fn from_arrays_unchecked(
        coordinates: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary_edges: Vec<Vec<[usize; 2]>>,
    ) -> Result<Self> {
        Self::build(coordinates, elements, boundary_edges, false)
    }

    fn build(
        coordinates: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary_edges: Vec<Vec<[usize; 2]>>,
        validate: bool,
    ) -> Result<Self> {
        let n_vertices = coordinates.len();
        for element in &elements {
            for &v in element {
                if v >= n_vertices {
                    return Err(Error::IndexOutOfRange {
                        what: "vertex",
                        index: v,
                        len: n_vertices,
                    });
                }
            }
        }
        if validate {
            check_orientation(&coordinates, &elements)?;
        }

        // half-edges sorted by their undirected key
        let mut half_edges: Vec<(usize, usize, u32, u8)> = Vec::with_capacity(3 * elements.len());
        for (t, element) in elements.iter().enumerate() {
            for j in 0..3 {
                let a = element[j];
                let b = element[(j + 1) % 3];
                if a == b {
                    return Err(Error::DegenerateElement(t));
                }
                half_edges.push((a.min(b), a.max(b), t as u32, j as u8));
            }
        }
        half_edges.sort_unstable();

        let mut edges = Vec::with_capacity(half_edges.len() / 2 + 1);
        let mut keys: Vec<(usize, usize)> = Vec::with_capacity(half_edges.len() / 2 + 1);
        let mut edge2elements = Vec::with_capacity(half_edges.len() / 2 + 1);
        let mut element2edges = vec![[0usize; 3]; elements.len()];
        let mut edge_flipped = vec![[false; 3]; elements.len()];

        let mut i = 0;
        while i < half_edges.len() {
            let (lo, hi, t0, j0) = half_edges[i];
            let mut group_end = i + 1;
            while group_end < half_edges.len()
                && half_edges[group_end].0 == lo
                && half_edges[group_end].1 == hi
            {
                group_end += 1;
            }
            let e = edges.len();
            let side0 = EdgeSide {
                element: t0 as usize,
                local: j0 as usize,
            };
            let start0 = elements[side0.element][side0.local];
            match group_end - i {
                1 => {
                    // boundary edge: keep the element's traversal direction
                    edges.push([start0, if start0 == lo { hi } else { lo }]);
                    edge2elements.push([Some(side0), None]);
                    element2edges[side0.element][side0.local] = e;
                }
                2 => {
                    let (_, _, t1, j1) = half_edges[i + 1];
                    let side1 = EdgeSide {
                        element: t1 as usize,
                        local: j1 as usize,
                    };
                    let start1 = elements[side1.element][side1.local];
                    if start0 == start1 {
                        return Err(Error::NonManifoldEdge { start: lo, end: hi });
                    }
                    edges.push([lo, hi]);
                    let (plus, minus) = if start0 == lo {
                        (side0, side1)
                    } else {
                        (side1, side0)
                    };
                    edge2elements.push([Some(plus), Some(minus)]);
                    element2edges[plus.element][plus.local] = e;
                    element2edges[minus.element][minus.local] = e;
                    edge_flipped[minus.element][minus.local] = true;
                }
                _ => return Err(Error::NonManifoldEdge { start: lo, end: hi }),
            }
            keys.push((lo, hi));
            i = group_end;
        }

        let mut boundaries = Vec::with_capacity(boundary_edges.len());
        let mut owner: Vec<Option<usize>> = vec![None; edges.len()];
        for (part, list) in boundary_edges.iter().enumerate() {
            let mut indices = Vec::with_capacity(list.len());
            for &[start, end] in list {
                let not_found = Error::BoundaryEdgeNotFound { part, start, end };
                let key = (start.min(end), start.max(end));
                let e = keys.binary_search(&key).map_err(|_| not_found.clone())?;
                if edge2elements[e][1].is_some() || edges[e] != [start, end] {
                    return Err(not_found);
                }
                if owner[e].is_some() {
                    return Err(Error::DuplicateBoundaryEdge { part, start, end });
                }
                owner[e] = Some(part);
                indices.push(e);
            }
            boundaries.push(indices);
        }
        if validate {
            for (e, sides) in edge2elements.iter().enumerate() {
                if sides[1].is_none() && owner[e].is_none() {
                    return Err(Error::UncoveredBoundaryEdge {
                        start: edges[e][0],
                        end: edges[e][1],
                    });
                }
            }
        }

        Ok(Self {
            coordinates,
            elements,
            edges,
            element2edges,
            edge_flipped,
            edge2elements,
            boundaries,
            generation: 0,
            affine: OnceBox::new(),
        })
    }

    /// Swaps in refined arrays; the generation advances and cached data is
    /// dropped.
    pub(crate) fn replace_with(&mut self, refined: Mesh) {
        let generation = self.generation + 1;
        *self = refined;
        self.generation = generation;
    }

    pub fn n_vertices(&self) -> usize {
        self.coordinates.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn coordinates(&self) -> &[Point] {
        &self.coordinates
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn element2edges(&self) -> &[[usize; 3]] {
        &self.element2edges
    }

    /// `true` where local edge `j` of an element runs against the stored
    /// edge orientation.
    pub fn edge_flipped(&self) -> &[[bool; 3]] {
        &self.edge_flipped
    }

    /// Adjacent elements of each edge. Entry `[0]` traverses the edge in its
    /// stored direction (the edge normal points out of it); entry `[1]` is
    /// `None` for boundary edges.
    pub fn edge2elements(&self) -> &[[Option<EdgeSide>; 2]] {
        &self.edge2elements
    }

    pub fn boundaries(&self) -> &[Vec<usize>] {
        &self.boundaries
    }

    pub fn boundary(&self, part: usize) -> Result<&[usize]> {
        self.boundaries
            .get(part)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownBoundaryPart(part))
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge2elements[edge][1].is_none()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn element_vertices(&self, element: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[element];
        [self.coordinates[a], self.coordinates[b], self.coordinates[c]]
    }

    /// Cartesian point of barycentric coordinates `lambda` on `element`.
    pub fn point(&self, element: usize, lambda: &[f64; 3]) -> Point {
        let [a, b, c] = self.element_vertices(element);
        [
            lambda[0] * a[0] + lambda[1] * b[0] + lambda[2] * c[0],
            lambda[0] * a[1] + lambda[1] * b[1] + lambda[2] * c[1],
        ]
    }

    /// Cartesian point of `lambda = (s, 1 - s)` on `edge`, weighting start
    /// and end vertex respectively.
    pub fn edge_point(&self, edge: usize, lambda: &[f64; 2]) -> Point {
        let [a, b] = self.edges[edge];
        let (a, b) = (self.coordinates[a], self.coordinates[b]);
        [
            lambda[0] * a[0] + lambda[1] * b[0],
            lambda[0] * a[1] + lambda[1] * b[1],
        ]
    }

    /// Geometric data of all elements and edges, computed on first request
    /// and cached until the next refinement.
    pub fn affine(&self) -> Result<&AffineTransformation> {
        self.affine
            .get_or_try_init(|| AffineTransformation::new(self).map(Box::new))
    }

    /// Each element's oriented boundary edges per part, as accepted by
    /// [`Mesh::from_arrays`].
    pub fn boundary_edge_lists(&self) -> Vec<Vec<[usize; 2]>> {
        self.boundaries
            .iter()
            .map(|part| part.iter().map(|&e| self.edges[e]).collect())
            .collect()
    }

    /// Checks the structural invariants of the triangulation.
    pub fn check_invariants(&self) -> Result<()> {
        check_orientation(&self.coordinates, &self.elements)?;
        let mut count = vec![0usize; self.n_edges()];
        for (t, edges) in self.element2edges.iter().enumerate() {
            for j in 0..3 {
                let e = edges[j];
                count[e] += 1;
                let a = self.elements[t][j];
                let b = self.elements[t][(j + 1) % 3];
                let stored = self.edges[e];
                let expected = if self.edge_flipped[t][j] { [b, a] } else { [a, b] };
                if stored != expected {
                    return Err(Error::NonManifoldEdge { start: a, end: b });
                }
            }
        }
        let mut owner = vec![false; self.n_edges()];
        for part in &self.boundaries {
            for &e in part {
                if owner[e] || !self.is_boundary_edge(e) {
                    let [start, end] = self.edges[e];
                    return Err(Error::DuplicateBoundaryEdge { part: 0, start, end });
                }
                owner[e] = true;
            }
        }
        for e in 0..self.n_edges() {
            let expected = if self.is_boundary_edge(e) { 1 } else { 2 };
            let [start, end] = self.edges[e];
            if count[e] != expected {
                return Err(Error::NonManifoldEdge { start, end });
            }
            if self.is_boundary_edge(e) && !owner[e] {
                return Err(Error::UncoveredBoundaryEdge { start, end });
            }
            if !self.is_boundary_edge(e) && start > end {
                return Err(Error::NonManifoldEdge { start, end });
            }
        }
        Ok(())
    }
}

fn check_orientation(coordinates: &[Point], elements: &[[usize; 3]]) -> Result<()> {
    if coordinates.is_empty() {
        return Ok(());
    }
    let mut lo = coordinates[0];
    let mut hi = coordinates[0];
    for p in coordinates {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diagonal2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
    let tolerance = 1e-14 * diagonal2;
    for (t, &[a, b, c]) in elements.iter().enumerate() {
        let area = signed_area(coordinates[a], coordinates[b], coordinates[c]);
        if area <= -tolerance {
            return Err(Error::ClockwiseElement(t));
        }
        if area <= tolerance {
            return Err(Error::DegenerateElement(t));
        }
    }
    Ok(())
}

/// Per-element Jacobian data of the affine maps from the reference triangle
/// and per-edge lengths and normals.
#[derive(Debug, Clone)]
pub struct AffineTransformation {
    generation: u64,
    /// `det DF_T = 2 |T|`.
    pub det_df: Vec<f64>,
    /// `DF_T^{-T}`, column-major.
    pub df_inv_t: Vec<[f64; 4]>,
    pub area: Vec<f64>,
    pub edge_length: Vec<f64>,
    /// Unit normals pointing to the right of the edge direction.
    pub unit_normal: Vec<Point>,
}

impl AffineTransformation {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let n = mesh.n_elements();
        let mut det_df = Vec::with_capacity(n);
        let mut df_inv_t = Vec::with_capacity(n);
        let mut area = Vec::with_capacity(n);
        for t in 0..n {
            let [z1, z2, z3] = mesh.element_vertices(t);
            let (a, b) = (z2[0] - z1[0], z3[0] - z1[0]);
            let (c, d) = (z2[1] - z1[1], z3[1] - z1[1]);
            let det = a * d - b * c;
            if det <= 0.0 {
                return Err(Error::DegenerateElement(t));
            }
            det_df.push(det);
            df_inv_t.push([d / det, -b / det, -c / det, a / det]);
            area.push(det / 2.0);
        }
        let mut edge_length = Vec::with_capacity(mesh.n_edges());
        let mut unit_normal = Vec::with_capacity(mesh.n_edges());
        for &[s, e] in mesh.edges() {
            let (p, q) = (mesh.coordinates[s], mesh.coordinates[e]);
            let (tx, ty) = (q[0] - p[0], q[1] - p[1]);
            let length = tx.hypot(ty);
            edge_length.push(length);
            unit_normal.push([ty / length, -tx / length]);
        }
        Ok(Self {
            generation: mesh.generation(),
            det_df,
            df_inv_t,
            area,
            edge_length,
            unit_normal,
        })
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The criss-cross unit square with two boundary parts (bottom + left,
    /// right + top), 0-based.
    pub fn criss_cross() -> Mesh {
        Mesh::from_arrays(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
            vec![vec![[0, 1], [3, 0]], vec![[1, 2], [2, 3]]],
        )
        .unwrap()
    }

    pub fn reference_triangle() -> Mesh {
        Mesh::from_arrays(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![vec![[0, 1], [1, 2], [2, 0]]],
        )
        .unwrap()
    }

    /// Unit square split along the (1,0)-(0,1) diagonal.
    pub fn unit_square() -> Mesh {
        Mesh::from_arrays(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[1, 3, 0], [3, 1, 2]],
            vec![vec![[0, 1], [1, 2], [2, 3], [3, 0]]],
        )
        .unwrap()
    }

    /// (-1,1)^2 minus the fourth quadrant; part 0 holds the two edges at the
    /// re-entrant corner, part 1 the rest.
    pub fn l_shape() -> Mesh {
        Mesh::from_arrays(
            vec![
                [-1.0, -1.0],
                [0.0, -1.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [-1.0, 1.0],
                [-1.0, 0.0],
            ],
            vec![[0, 2, 7], [2, 0, 1], [2, 6, 7], [6, 2, 5], [2, 4, 5], [4, 2, 3]],
            vec![
                vec![[1, 2], [2, 3]],
                vec![[3, 4], [4, 5], [5, 6], [6, 7], [7, 0], [0, 1]],
            ],
        )
        .unwrap()
    }
}
