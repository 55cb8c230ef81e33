//! Conforming local refinement by newest vertex bisection and its variants.
//!
//! The refinement edge of an element is its first local edge (between its
//! first two vertices). Refinement runs in four steps: mark edges for the
//! marked elements, close the marks so no hanging vertices remain, pick a
//! bisection rule per element from its marked-edge pattern, and execute.
//!
//! Child tables use local entity indices: `0..3` parent vertices, `3..6`
//! midpoints of local edges `0..3`, `6` the interior point of `Bisec5`
//! (midpoint between the refinement-edge midpoint and the opposite vertex).
//! Every child is listed counter-clockwise with its own refinement edge first.

use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BisectionRule {
    NoBisection,
    Bisec1,
    Bisec12,
    Bisec13,
    Bisec123,
    Bisec5,
    BisecRed,
}

impl BisectionRule {
    pub fn children(self) -> &'static [[usize; 3]] {
        match self {
            Self::NoBisection => &[[0, 1, 2]],
            Self::Bisec1 => &[[2, 0, 3], [1, 2, 3]],
            Self::Bisec12 => &[[2, 0, 3], [3, 1, 4], [2, 3, 4]],
            Self::Bisec13 => &[[1, 2, 3], [0, 3, 5], [3, 2, 5]],
            Self::Bisec123 => &[[0, 3, 5], [3, 1, 4], [3, 2, 5], [2, 3, 4]],
            // transcribed from the five-bisection pattern; 6 = mid(m0, z3)
            Self::Bisec5 => &[
                [0, 3, 5],
                [3, 1, 4],
                [3, 4, 6],
                [4, 2, 6],
                [2, 5, 6],
                [5, 3, 6],
            ],
            // red refinement; the corner child at vertex 2 and the middle
            // child keep refinement edges parallel to the parent's
            Self::BisecRed => &[[0, 3, 5], [3, 1, 4], [4, 5, 3], [5, 4, 2]],
        }
    }

    /// Which local edges are bisected.
    pub fn bisected_edges(self) -> [bool; 3] {
        match self {
            Self::NoBisection => [false; 3],
            Self::Bisec1 => [true, false, false],
            Self::Bisec12 => [true, true, false],
            Self::Bisec13 => [true, false, true],
            Self::Bisec123 | Self::Bisec5 | Self::BisecRed => [true; 3],
        }
    }

    pub fn has_interior_point(self) -> bool {
        self == Self::Bisec5
    }

    /// Barycentric coordinates of a local entity in the parent element.
    pub fn entity_barycentric(entity: usize) -> [f64; 3] {
        match entity {
            0 => [1.0, 0.0, 0.0],
            1 => [0.0, 1.0, 0.0],
            2 => [0.0, 0.0, 1.0],
            3 => [0.5, 0.5, 0.0],
            4 => [0.0, 0.5, 0.5],
            5 => [0.5, 0.0, 0.5],
            6 => [0.25, 0.25, 0.5],
            _ => panic!("local entity {entity} out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Nvb1,
    Nvb3,
    Nvb5,
    Rgb,
    /// Edge-driven variant: the marked set holds edge indices.
    /// Experimental.
    NvbEdge,
}

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nvb1" => Ok(Self::Nvb1),
            "nvb" | "nvb3" => Ok(Self::Nvb3),
            "nvb5" => Ok(Self::Nvb5),
            "rgb" => Ok(Self::Rgb),
            "nvbedge" => Ok(Self::NvbEdge),
            _ => Err(UnknownStrategy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownStrategy;

impl core::fmt::Display for UnknownStrategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("unknown refinement strategy (expected nvb1, nvb, nvb5, rgb or nvbedge)")
    }
}

/// Step (i): edges that must be bisected to refine the marked elements.
pub fn mark_edges(mesh: &Mesh, marked: &[usize], strategy: Strategy) -> Result<Vec<bool>> {
    let mut marks = vec![false; mesh.n_edges()];
    let limit = match strategy {
        Strategy::NvbEdge => mesh.n_edges(),
        _ => mesh.n_elements(),
    };
    for &m in marked {
        if m >= limit {
            return Err(Error::IndexOutOfRange {
                what: if strategy == Strategy::NvbEdge { "edge" } else { "element" },
                index: m,
                len: limit,
            });
        }
        match strategy {
            Strategy::NvbEdge => marks[m] = true,
            Strategy::Nvb1 => marks[mesh.element2edges()[m][0]] = true,
            Strategy::Nvb3 | Strategy::Nvb5 | Strategy::Rgb => {
                for e in mesh.element2edges()[m] {
                    marks[e] = true;
                }
            }
        }
    }
    Ok(marks)
}

/// Step (ii): smallest superset of `marks` in which every element with a
/// marked edge also has its refinement edge marked.
pub fn closure(mesh: &Mesh, marks: &[bool]) -> Vec<bool> {
    let mut closed = marks.to_vec();
    let element2edges = mesh.element2edges();
    let mut stack: Vec<usize> = (0..mesh.n_elements()).collect();
    while let Some(t) = stack.pop() {
        let [refinement, e1, e2] = element2edges[t];
        if !closed[refinement] && (closed[e1] || closed[e2]) {
            closed[refinement] = true;
            for side in mesh.edge2elements()[refinement].iter().flatten() {
                if side.element != t {
                    stack.push(side.element);
                }
            }
        }
    }
    closed
}

/// Step (iii): bisection rule per element from its marked-edge pattern.
pub fn assign_bisections(
    mesh: &Mesh,
    closed_marks: &[bool],
    strategy: Strategy,
) -> Result<Vec<BisectionRule>> {
    mesh.element2edges()
        .iter()
        .enumerate()
        .map(|(t, &[e0, e1, e2])| {
            Ok(match (closed_marks[e0], closed_marks[e1], closed_marks[e2]) {
                (false, false, false) => BisectionRule::NoBisection,
                (false, _, _) => return Err(Error::InconsistentMarks(t)),
                (true, false, false) => BisectionRule::Bisec1,
                (true, true, false) => BisectionRule::Bisec12,
                (true, false, true) => BisectionRule::Bisec13,
                (true, true, true) => match strategy {
                    Strategy::Nvb5 => BisectionRule::Bisec5,
                    Strategy::Rgb => BisectionRule::BisecRed,
                    Strategy::Nvb1 | Strategy::Nvb3 | Strategy::NvbEdge => BisectionRule::Bisec123,
                },
            })
        })
        .collect()
}

/// Everything needed to transfer data from the coarse to the refined mesh.
///
/// Surviving vertices keep their indices. New vertices are appended: first
/// the midpoints of bisected edges in coarse edge order, then interior
/// points in coarse element order. Children of coarse element `t` are the
/// fine elements `child_offsets[t]..child_offsets[t + 1]`, in the order of
/// [`BisectionRule::children`].
#[derive(Debug, Clone)]
pub struct RefinementRecord {
    pub generation_before: u64,
    pub generation_after: u64,
    pub rules: Vec<BisectionRule>,
    pub child_offsets: Vec<usize>,
    pub edge_bisected: Vec<bool>,
    /// New vertex per coarse edge, `None` if not bisected.
    pub edge_midpoint: Vec<Option<usize>>,
    /// New interior vertex per coarse element (`Bisec5` only).
    pub interior_point: Vec<Option<usize>>,
    pub coarse_edges: Vec<[usize; 2]>,
    pub coarse_elements: Vec<[usize; 3]>,
    pub n_coarse_vertices: usize,
}

impl RefinementRecord {
    pub fn children(&self, parent: usize) -> core::ops::Range<usize> {
        self.child_offsets[parent]..self.child_offsets[parent + 1]
    }

    /// Surviving vertices keep their index.
    pub fn old_vertex_to_new(&self, vertex: usize) -> usize {
        debug_assert!(vertex < self.n_coarse_vertices);
        vertex
    }

    pub fn n_fine_elements(&self) -> usize {
        *self.child_offsets.last().unwrap_or(&0)
    }

    pub fn is_identity(&self) -> bool {
        self.generation_before == self.generation_after
    }
}

/// Refines (at least) the marked elements and keeps the mesh conforming.
/// An empty marked set leaves the mesh and its generation untouched.
pub fn refine_locally(
    mesh: &mut Mesh,
    marked: &[usize],
    strategy: Strategy,
) -> Result<RefinementRecord> {
    let marks = mark_edges(mesh, marked, strategy)?;
    let closed = closure(mesh, &marks);
    let rules = assign_bisections(mesh, &closed, strategy)?;
    execute(mesh, rules, closed)
}

/// `rounds` successive refinements with all elements marked; one record per
/// round.
pub fn refine_uniform(
    mesh: &mut Mesh,
    rounds: usize,
    strategy: Strategy,
) -> Result<Vec<RefinementRecord>> {
    (0..rounds)
        .map(|_| {
            let all: Vec<usize> = match strategy {
                Strategy::NvbEdge => (0..mesh.n_edges()).collect(),
                _ => (0..mesh.n_elements()).collect(),
            };
            refine_locally(mesh, &all, strategy)
        })
        .collect()
}

/// Step (iv): carries out the assigned bisections.
pub fn execute(
    mesh: &mut Mesh,
    rules: Vec<BisectionRule>,
    edge_bisected: Vec<bool>,
) -> Result<RefinementRecord> {
    let n_vertices = mesh.n_vertices();
    let generation_before = mesh.generation();

    let mut coordinates = mesh.coordinates().to_vec();
    let mut edge_midpoint = vec![None; mesh.n_edges()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if edge_bisected[e] {
            let (p, q) = (coordinates[a], coordinates[b]);
            edge_midpoint[e] = Some(coordinates.len());
            coordinates.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
        }
    }
    let mut interior_point = vec![None; mesh.n_elements()];
    for (t, rule) in rules.iter().enumerate() {
        if rule.has_interior_point() {
            interior_point[t] = Some(coordinates.len());
            coordinates.push(mesh.point(t, &BisectionRule::entity_barycentric(6)));
        }
    }

    let mut elements = Vec::with_capacity(mesh.n_elements() * 2);
    let mut child_offsets = Vec::with_capacity(mesh.n_elements() + 1);
    child_offsets.push(0);
    for (t, rule) in rules.iter().enumerate() {
        let bisected = rule.bisected_edges();
        let edges = mesh.element2edges()[t];
        let mut local = [usize::MAX; 7];
        local[..3].copy_from_slice(&mesh.elements()[t]);
        for j in 0..3 {
            if bisected[j] {
                local[3 + j] = edge_midpoint[edges[j]].ok_or(Error::InconsistentMarks(t))?;
            }
        }
        if let Some(c) = interior_point[t] {
            local[6] = c;
        }
        for child in rule.children() {
            elements.push([local[child[0]], local[child[1]], local[child[2]]]);
        }
        child_offsets.push(elements.len());
    }

    let boundary_edges = mesh
        .boundaries()
        .iter()
        .map(|part| {
            let mut refined = Vec::with_capacity(part.len());
            for &e in part {
                let [a, b] = mesh.edges()[e];
                match edge_midpoint[e] {
                    Some(m) => {
                        refined.push([a, m]);
                        refined.push([m, b]);
                    }
                    None => refined.push([a, b]),
                }
            }
            refined
        })
        .collect();

    let record = RefinementRecord {
        generation_before,
        generation_after: generation_before,
        rules,
        child_offsets,
        edge_bisected,
        edge_midpoint,
        interior_point,
        coarse_edges: mesh.edges().to_vec(),
        coarse_elements: mesh.elements().to_vec(),
        n_coarse_vertices: n_vertices,
    };
    if coordinates.len() == n_vertices {
        return Ok(record);
    }
    let refined = Mesh::from_arrays_unchecked(coordinates, elements, boundary_edges)?;
    mesh.replace_with(refined);
    Ok(RefinementRecord {
        generation_after: mesh.generation(),
        ..record
    })
}
