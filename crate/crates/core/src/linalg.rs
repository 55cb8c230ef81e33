//! Batched small-matrix products, sparse accumulation and iterative solves.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};

/// Pointwise value shape. Vectors are columns, matrices are stored
/// column-major in the flat component dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const SCALAR: Shape = Shape { rows: 1, cols: 1 };

    pub const fn vector(n: usize) -> Self {
        Shape { rows: n, cols: 1 }
    }

    pub const fn matrix(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Values indexed by (component, entity, node); the component index runs
/// fastest so per-entity component blocks are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    components: usize,
    entities: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl Batch {
    pub fn zeros(components: usize, entities: usize, nodes: usize) -> Self {
        Batch {
            components,
            entities,
            nodes,
            data: vec![0.0; components * entities * nodes],
        }
    }

    pub fn from_vec(components: usize, entities: usize, nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != components * entities * nodes {
            return Err(Error::DimensionMismatch {
                expected: components * entities * nodes,
                found: data.len(),
            });
        }
        Ok(Batch {
            components,
            entities,
            nodes,
            data,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn entities(&self) -> usize {
        self.entities
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn index(&self, component: usize, entity: usize, node: usize) -> usize {
        component + self.components * (entity + self.entities * node)
    }

    #[inline]
    pub fn get(&self, component: usize, entity: usize, node: usize) -> f64 {
        self.data[self.index(component, entity, node)]
    }

    #[inline]
    pub fn set(&mut self, component: usize, entity: usize, node: usize, value: f64) {
        let i = self.index(component, entity, node);
        self.data[i] = value;
    }

    /// Components at one (entity, node) pair.
    #[inline]
    pub fn at(&self, entity: usize, node: usize) -> &[f64] {
        let start = self.index(0, entity, node);
        &self.data[start..start + self.components]
    }

    #[inline]
    pub fn at_mut(&mut self, entity: usize, node: usize) -> &mut [f64] {
        let start = self.index(0, entity, node);
        &mut self.data[start..start + self.components]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Matrix interpretation of a batch operand in [`vector_product`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operand {
    pub rows: usize,
    pub cols: usize,
    pub transposed: bool,
}

impl Operand {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Operand {
            rows,
            cols,
            transposed: false,
        }
    }

    pub const fn t(self) -> Self {
        Operand {
            transposed: !self.transposed,
            ..self
        }
    }

    fn op_dims(&self) -> (usize, usize) {
        if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    #[inline]
    fn op_index(&self, i: usize, j: usize) -> usize {
        if self.transposed {
            j + self.rows * i
        } else {
            i + self.rows * j
        }
    }
}

fn broadcast(a: usize, b: usize) -> Result<usize> {
    match (a, b) {
        _ if a == b => Ok(a),
        (1, _) => Ok(b),
        (_, 1) => Ok(a),
        _ => Err(Error::IncompatibleShapes),
    }
}

/// Per (entity, node): `op(A) · op(B)`. Singleton entity or node dimensions
/// are expanded.
pub fn vector_product(a: &Batch, b: &Batch, size_a: Operand, size_b: Operand) -> Result<Batch> {
    if size_a.rows * size_a.cols != a.components || size_b.rows * size_b.cols != b.components {
        return Err(Error::IncompatibleShapes);
    }
    let (m, k) = size_a.op_dims();
    let (k2, n) = size_b.op_dims();
    if k != k2 {
        return Err(Error::IncompatibleShapes);
    }
    let entities = broadcast(a.entities, b.entities)?;
    let nodes = broadcast(a.nodes, b.nodes)?;
    let mut c = Batch::zeros(m * n, entities, nodes);
    for q in 0..nodes {
        for e in 0..entities {
            let av = a.at(e.min(a.entities - 1), q.min(a.nodes - 1));
            let bv = b.at(e.min(b.entities - 1), q.min(b.nodes - 1));
            let cv = c.at_mut(e, q);
            for j in 0..n {
                for i in 0..m {
                    let mut s = 0.0;
                    for l in 0..k {
                        s += av[size_a.op_index(i, l)] * bv[size_b.op_index(l, j)];
                    }
                    cv[i + m * j] = s;
                }
            }
        }
    }
    Ok(c)
}

/// Default product: `Aᵀ B` of column vectors, i.e. the componentwise dot
/// product.
pub fn dot(a: &Batch, b: &Batch) -> Result<Batch> {
    vector_product(
        a,
        b,
        Operand::new(a.components, 1).t(),
        Operand::new(b.components, 1),
    )
}

/// Triplet accumulator for a square sparse matrix.
#[derive(Debug, Clone, Default)]
pub struct SparseSystem {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        SparseSystem {
            n,
            ..Default::default()
        }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        SparseSystem {
            n,
            rows: Vec::with_capacity(capacity),
            cols: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_triplets(&self) -> usize {
        self.values.len()
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        for index in [row, col] {
            if index >= self.n {
                return Err(Error::IndexOutOfRange {
                    what: "matrix",
                    index,
                    len: self.n,
                });
            }
        }
        self.rows.push(row);
        self.cols.push(col);
        self.values.push(value);
        Ok(())
    }

    pub fn accumulate(&mut self, rows: &[usize], cols: &[usize], values: &[f64]) -> Result<()> {
        if rows.len() != values.len() || cols.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: rows.len().min(cols.len()),
            });
        }
        for ((&r, &c), &v) in rows.iter().zip(cols).zip(values) {
            self.push(r, c, v)?;
        }
        Ok(())
    }

    /// Compressed row storage with duplicates summed.
    pub fn compress(&self) -> CsrMatrix {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0); self.values.len()];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.values) {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.values.len());
        let mut values = Vec::with_capacity(self.values.len());
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// From sorted, duplicate-free rows.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "matvec dimension");
        (0..self.n_rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Submatrix on `free × free` (indices into the full matrix, ascending).
    pub fn restrict(&self, free: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n_cols];
        for (i, &f) in free.iter().enumerate() {
            local[f] = i;
        }
        let rows = free
            .iter()
            .map(|&r| {
                self.row(r)
                    .filter(|&(c, _)| local[c] != usize::MAX)
                    .map(|(c, v)| (local[c], v))
                    .collect()
            })
            .collect();
        let mut m = CsrMatrix::from_rows(free.len(), rows);
        // `free` may be unsorted; keep rows sorted by column
        for r in 0..m.n_rows {
            let range = m.row_ptr[r]..m.row_ptr[r + 1];
            let mut row: Vec<(usize, f64)> = m.col_idx[range.clone()]
                .iter()
                .copied()
                .zip(m.values[range.clone()].iter().copied())
                .collect();
            row.sort_unstable_by_key(|&(c, _)| c);
            for (i, (c, v)) in row.into_iter().enumerate() {
                m.col_idx[range.start + i] = c;
                m.values[range.start + i] = v;
            }
        }
        m
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n_cols];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                rows[c].push((r, v));
            }
        }
        CsrMatrix::from_rows(self.n_rows, rows)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        (0..self.n_rows).all(|r| {
            self.row(r)
                .all(|(c, v)| (v - self.get(c, r)).abs() <= tol * scale)
        })
    }
}

/// Solves `A X = B` for one or several right-hand sides.
pub trait LinearSolver {
    fn solve(&self, a: &CsrMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;
}

/// Solves on the free DOFs and returns full-length vectors that vanish on
/// the constrained DOFs.
pub fn solve_free<S: LinearSolver + ?Sized>(
    solver: &S,
    a: &CsrMatrix,
    rhs: &[Vec<f64>],
    free: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let n = a.n_rows();
    for b in rhs {
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
    }
    let reduced = a.restrict(free);
    let reduced_rhs: Vec<Vec<f64>> = rhs
        .iter()
        .map(|b| free.iter().map(|&i| b[i]).collect())
        .collect();
    let solutions = if free.is_empty() {
        vec![Vec::new(); rhs.len()]
    } else {
        solver.solve(&reduced, &reduced_rhs)?
    };
    Ok(solutions
        .into_iter()
        .map(|x| {
            let mut full = vec![0.0; n];
            for (&i, v) in free.iter().zip(x) {
                full[i] = v;
            }
            full
        })
        .collect())
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems.
#[derive(Debug, Clone, Copy)]
pub struct Pcg {
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
}

impl Default for Pcg {
    fn default() -> Self {
        Pcg {
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

impl Pcg {
    pub fn solve_one(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let n = a.n_rows();
        let norm_b = norm(b);
        let mut x = vec![0.0; n];
        if norm_b == 0.0 {
            return Ok(x);
        }
        let inv_diag: Vec<f64> = a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot_slices(&r, &z);
        let max_iterations = self.max_iterations.unwrap_or(10 * n + 100);
        for iteration in 0..max_iterations {
            if norm(&r) <= self.tolerance * norm_b {
                return Ok(x);
            }
            let ap = a.matvec(&p);
            let pap = dot_slices(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SolverBreakdown {
                    iterations: iteration,
                    residual: norm(&r) / norm_b,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot_slices(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let residual = norm(&r) / norm_b;
        if residual <= self.tolerance {
            Ok(x)
        } else {
            Err(Error::SolverBreakdown {
                iterations: max_iterations,
                residual,
            })
        }
    }
}

impl LinearSolver for Pcg {
    fn solve(&self, a: &CsrMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rhs.iter().map(|b| self.solve_one(a, b)).collect()
    }
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot_slices(a, a).sqrt()
}
