use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::integration::Barycentric2D;
use crate::linalg::Batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous Lagrange elements.
    H1,
    /// Elementwise (discontinuous) Lagrange elements.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Derivative {
    Value,
    Gradient,
    Hessian,
}

/// Lagrange element of arbitrary order on the reference triangle.
///
/// The nodal basis is expressed in Bernstein polynomials, which are
/// evaluated by the degree-raising recurrence
/// `B^n_α = Σ_k λ_k B^{n-1}_{α-e_k}`.
///
/// Local node order: the three vertices, then `p − 1` nodes per local edge
/// `j` (from vertex `j` towards vertex `j + 1`), then interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteElement {
    family: Family,
    order: usize,
    nodes: Vec<[f64; 3]>,
    /// Bernstein multi-indices `(a1, a2)`; `a0 = p − a1 − a2`.
    multi: Vec<[usize; 2]>,
    /// Nodal basis `φ_i = Σ_j coeffs[i·n + j] B_j`.
    coeffs: Vec<f64>,
}

impl FiniteElement {
    pub fn lagrange(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidElementOrder(order));
        }
        Ok(Self::build(Family::H1, order))
    }

    pub fn discontinuous(order: usize) -> Result<Self> {
        Ok(Self::build(Family::L2, order))
    }

    fn build(family: Family, p: usize) -> Self {
        let nodes = lagrange_nodes(p);
        let mut multi = Vec::with_capacity(nodes.len());
        for a1 in 0..=p {
            for a2 in 0..=p - a1 {
                multi.push([a1, a2]);
            }
        }
        let n = nodes.len();
        let mut vandermonde = vec![0.0; n * n];
        let mut tables = BernsteinTables::new(p);
        for (i, lambda) in nodes.iter().enumerate() {
            tables.fill(lambda);
            for (j, &[a1, a2]) in multi.iter().enumerate() {
                vandermonde[i * n + j] = tables.get(p, a1, a2);
            }
        }
        // V C = I, so the nodal basis is Cᵀ b
        let inverse = invert(n, vandermonde);
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coeffs[i * n + j] = inverse[j * n + i];
            }
        }
        FiniteElement {
            family,
            order: p,
            nodes,
            multi,
            coeffs,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    /// Barycentric coordinates of the local Lagrange nodes.
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn dofs_per_edge(&self) -> usize {
        self.order.saturating_sub(1)
    }

    pub fn dofs_per_interior(&self) -> usize {
        let p = self.order;
        if p < 3 {
            0
        } else {
            (p - 1) * (p - 2) / 2
        }
    }

    /// Values of all basis functions at `lambda`.
    pub fn values(&self, lambda: &[f64; 3]) -> Vec<f64> {
        let mut tables = BernsteinTables::new(self.order);
        tables.fill(lambda);
        let b: Vec<f64> = self
            .multi
            .iter()
            .map(|&[a1, a2]| tables.get(self.order, a1, a2))
            .collect();
        self.to_nodal(&b)
    }

    /// Reference gradients `(∂x1, ∂x2)` of all basis functions.
    pub fn gradients(&self, lambda: &[f64; 3]) -> Vec<[f64; 2]> {
        let p = self.order;
        let n = self.n_local();
        if p == 0 {
            return vec![[0.0; 2]; n];
        }
        let mut tables = BernsteinTables::new(p);
        tables.fill(lambda);
        let pf = p as f64;
        let mut d = [vec![0.0; n], vec![0.0; n]];
        for (j, &[a1, a2]) in self.multi.iter().enumerate() {
            let a0 = p - a1 - a2;
            // ∂B/∂λ_k = p B^{p-1}_{α-e_k}
            let dl = [
                if a0 > 0 { tables.get(p - 1, a1, a2) } else { 0.0 },
                if a1 > 0 { tables.get(p - 1, a1 - 1, a2) } else { 0.0 },
                if a2 > 0 { tables.get(p - 1, a1, a2 - 1) } else { 0.0 },
            ];
            d[0][j] = pf * (dl[1] - dl[0]);
            d[1][j] = pf * (dl[2] - dl[0]);
        }
        let (gx, gy) = (self.to_nodal(&d[0]), self.to_nodal(&d[1]));
        gx.into_iter().zip(gy).map(|(x, y)| [x, y]).collect()
    }

    /// Reference Hessians `(∂x1x1, ∂x1x2, ∂x2x2)` of all basis functions.
    pub fn hessians(&self, lambda: &[f64; 3]) -> Vec<[f64; 3]> {
        let p = self.order;
        let n = self.n_local();
        if p < 2 {
            return vec![[0.0; 3]; n];
        }
        let mut tables = BernsteinTables::new(p);
        tables.fill(lambda);
        let scale = (p * (p - 1)) as f64;
        let mut d = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (j, &[a1, a2]) in self.multi.iter().enumerate() {
            let alpha = [p - a1 - a2, a1, a2];
            let second = |k: usize, l: usize| {
                let mut beta = alpha;
                if beta[k] == 0 {
                    return 0.0;
                }
                beta[k] -= 1;
                if beta[l] == 0 {
                    return 0.0;
                }
                beta[l] -= 1;
                tables.get(p - 2, beta[1], beta[2])
            };
            let (b00, b01, b02) = (second(0, 0), second(0, 1), second(0, 2));
            let (b11, b12, b22) = (second(1, 1), second(1, 2), second(2, 2));
            d[0][j] = scale * (b00 - 2.0 * b01 + b11);
            d[1][j] = scale * (b00 - b01 - b02 + b12);
            d[2][j] = scale * (b00 - 2.0 * b02 + b22);
        }
        let (xx, xy, yy) = (self.to_nodal(&d[0]), self.to_nodal(&d[1]), self.to_nodal(&d[2]));
        (0..n).map(|i| [xx[i], xy[i], yy[i]]).collect()
    }

    /// Batch indexed (basis function, component, node).
    pub fn reference_basis(&self, bary: &Barycentric2D, derivative: Derivative) -> Batch {
        let n = self.n_local();
        let comps = match derivative {
            Derivative::Value => 1,
            Derivative::Gradient => 2,
            Derivative::Hessian => 4,
        };
        let mut out = Batch::zeros(n, comps, bary.len());
        for (q, lambda) in bary.coords().iter().enumerate() {
            match derivative {
                Derivative::Value => out.at_mut(0, q).copy_from_slice(&self.values(lambda)),
                Derivative::Gradient => {
                    for (i, g) in self.gradients(lambda).into_iter().enumerate() {
                        out.set(i, 0, q, g[0]);
                        out.set(i, 1, q, g[1]);
                    }
                }
                Derivative::Hessian => {
                    for (i, h) in self.hessians(lambda).into_iter().enumerate() {
                        out.set(i, 0, q, h[0]);
                        out.set(i, 1, q, h[1]);
                        out.set(i, 2, q, h[1]);
                        out.set(i, 3, q, h[2]);
                    }
                }
            }
        }
        out
    }

    fn to_nodal(&self, bernstein: &[f64]) -> Vec<f64> {
        let n = self.n_local();
        (0..n)
            .map(|i| {
                self.coeffs[i * n..(i + 1) * n]
                    .iter()
                    .zip(bernstein)
                    .map(|(c, b)| c * b)
                    .sum()
            })
            .collect()
    }
}

fn lagrange_nodes(p: usize) -> Vec<[f64; 3]> {
    if p == 0 {
        return vec![[1.0 / 3.0; 3]];
    }
    let pf = p as f64;
    let mut nodes = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for j in 0..3 {
        for m in 1..p {
            let mut lambda = [0.0; 3];
            lambda[j] = (p - m) as f64 / pf;
            lambda[(j + 1) % 3] = m as f64 / pf;
            nodes.push(lambda);
        }
    }
    for i in 1..p {
        for k in 1..p - i {
            let a0 = p - i - k;
            nodes.push([a0 as f64 / pf, i as f64 / pf, k as f64 / pf]);
        }
    }
    nodes
}

/// Bernstein polynomials of all degrees `0..=p` at one point.
struct BernsteinTables {
    p: usize,
    /// Degree `n` entry `(a1, a2)` at `n·s² + a1·s + a2`, `s = p + 1`.
    data: Vec<f64>,
}

impl BernsteinTables {
    fn new(p: usize) -> Self {
        let s = p + 1;
        BernsteinTables {
            p,
            data: vec![0.0; s * s * s],
        }
    }

    #[inline]
    fn get(&self, n: usize, a1: usize, a2: usize) -> f64 {
        let s = self.p + 1;
        self.data[n * s * s + a1 * s + a2]
    }

    fn fill(&mut self, lambda: &[f64; 3]) {
        let s = self.p + 1;
        self.data[0] = 1.0;
        for n in 1..=self.p {
            for a1 in 0..=n {
                for a2 in 0..=n - a1 {
                    let mut v = 0.0;
                    if a1 + a2 < n {
                        v += lambda[0] * self.get(n - 1, a1, a2);
                    }
                    if a1 > 0 {
                        v += lambda[1] * self.get(n - 1, a1 - 1, a2);
                    }
                    if a2 > 0 {
                        v += lambda[2] * self.get(n - 1, a1, a2 - 1);
                    }
                    self.data[n * s * s + a1 * s + a2] = v;
                }
            }
        }
    }
}

/// Inverse of a small dense row-major matrix by Gauss-Jordan elimination
/// with partial pivoting.
fn invert(n: usize, mut a: Vec<f64>) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("nonempty");
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for row in 0..n {
            if row != col {
                let f = a[row * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[row * n + k] -= f * a[col * n + k];
                        inv[row * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_elements() -> Vec<FiniteElement> {
        let mut v: Vec<FiniteElement> = (1..=7).map(|p| FiniteElement::lagrange(p).unwrap()).collect();
        v.push(FiniteElement::discontinuous(0).unwrap());
        v
    }

    #[test]
    fn basis_is_nodal() {
        for element in all_elements() {
            for (k, node) in element.nodes().iter().enumerate() {
                for (i, v) in element.values(node).into_iter().enumerate() {
                    let expected = if i == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(v, expected, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn local_dimension() {
        for p in 1..=7 {
            let element = FiniteElement::lagrange(p).unwrap();
            assert_eq!(element.n_local(), (p + 1) * (p + 2) / 2);
            assert_eq!(element.n_local(), 3 + 3 * element.dofs_per_edge() + element.dofs_per_interior());
        }
        assert_eq!(FiniteElement::lagrange(0), Err(Error::InvalidElementOrder(0)));
    }

    #[test]
    fn p1_examples() {
        let element = FiniteElement::lagrange(1).unwrap();
        assert_eq!(element.gradients(&[0.2, 0.3, 0.5]), vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
        let bary = Barycentric2D::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let values = element.reference_basis(&bary, Derivative::Value);
        for q in 0..3 {
            for i in 0..3 {
                assert_eq!(values.get(i, 0, q), if i == q { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn p2_centroid_values() {
        let element = FiniteElement::lagrange(2).unwrap();
        let values = element.values(&[1.0 / 3.0; 3]);
        // λ(2λ − 1) and 4 λ_i λ_j at the centroid
        for (i, v) in values.into_iter().enumerate() {
            let expected = if i < 3 { -1.0 / 9.0 } else { 4.0 / 9.0 };
            assert_abs_diff_eq!(v, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn p2_hessians_match_closed_form() {
        let element = FiniteElement::lagrange(2).unwrap();
        // φ0 = λ0(2λ0 − 1) with λ0 = 1 − x − y has constant Hessian 4
        let h = element.hessians(&[0.3, 0.3, 0.4]);
        for c in 0..3 {
            assert_abs_diff_eq!(h[0][c], 4.0, epsilon = 1e-12);
        }
        // φ3 = 4 λ0 λ1 = 4x(1 − x − y): (−8, −4, 0)
        assert_abs_diff_eq!(h[3][0], -8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h[3][1], -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h[3][2], 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn partition_of_unity(a in 0.0f64..1.0, b in 0.0f64..1.0, p in 1usize..8) {
            let (x, y) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let lambda = [1.0 - x - y, x, y];
            let element = FiniteElement::lagrange(p).unwrap();
            prop_assert!((element.values(&lambda).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let g = element.gradients(&lambda);
            prop_assert!(g.iter().map(|g| g[0]).sum::<f64>().abs() < 1e-9);
            prop_assert!(g.iter().map(|g| g[1]).sum::<f64>().abs() < 1e-9);
            let h = element.hessians(&lambda);
            for c in 0..3 {
                prop_assert!(h.iter().map(|h| h[c]).sum::<f64>().abs() < 1e-7);
            }
        }

        #[test]
        fn gradients_match_finite_differences(a in 0.1f64..0.8, b in 0.05f64..0.15, p in 1usize..6) {
            let element = FiniteElement::lagrange(p).unwrap();
            let at = |x: f64, y: f64| element.values(&[1.0 - x - y, x, y]);
            let h = 1e-6;
            let g = element.gradients(&[1.0 - a - b, a, b]);
            let (xp, xm) = (at(a + h, b), at(a - h, b));
            let (yp, ym) = (at(a, b + h), at(a, b - h));
            for i in 0..element.n_local() {
                prop_assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-5);
                prop_assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-5);
            }
        }
    }
}
