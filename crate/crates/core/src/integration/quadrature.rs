use alloc::vec;
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::error::{Error, Result};

const BARY_TOL: f64 = 1e-14;

/// Barycentric coordinates on edges, `λ = (x, 1 − x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barycentric1D {
    coords: Vec<[f64; 2]>,
}

/// Barycentric coordinates on triangles, `λ = (1 − x1 − x2, x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barycentric2D {
    coords: Vec<[f64; 3]>,
}

fn valid(tuple: &[f64]) -> bool {
    let sum: f64 = tuple.iter().sum();
    (sum - 1.0).abs() <= BARY_TOL * tuple.len() as f64
        && tuple.iter().all(|&l| (-BARY_TOL..=1.0 + BARY_TOL).contains(&l))
}

impl Barycentric1D {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        match coords.iter().position(|c| !valid(c)) {
            Some(k) => Err(Error::InvalidBarycentric(k)),
            None => Ok(Barycentric1D { coords }),
        }
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

impl Barycentric2D {
    pub fn new(coords: Vec<[f64; 3]>) -> Result<Self> {
        match coords.iter().position(|c| !valid(c)) {
            Some(k) => Err(Error::InvalidBarycentric(k)),
            None => Ok(Barycentric2D { coords }),
        }
    }

    pub fn centroid() -> Self {
        Barycentric2D {
            coords: vec![[1.0 / 3.0; 3]],
        }
    }

    /// From reference coordinates `(x1, x2)`.
    pub fn from_reference(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().map(|&[x, y]| [1.0 - x - y, x, y]).collect())
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Quadrature on the reference edge; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub bary: Barycentric1D,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// Quadrature on the reference triangle; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub bary: Barycentric2D,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// Gauss-Legendre nodes and weights on [0, 1] (weights sum to one).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(n, x).1;
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = (1.0 - x) / 2.0;
        nodes[n - 1 - i] = (1.0 + x) / 2.0;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

impl EdgeRule {
    /// Gauss rule with the minimal number of points, `⌈(order + 1)/2⌉`.
    pub fn of_order(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidOrder(order));
        }
        let (nodes, weights) = gauss_legendre((order + 2) / 2);
        Ok(EdgeRule {
            bary: Barycentric1D {
                coords: nodes.iter().map(|&x| [x, 1.0 - x]).collect(),
            },
            weights,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TriangleRule {
    /// Symmetric rules up to order 5, collapsed Gauss rules beyond.
    pub fn of_order(order: usize) -> Result<Self> {
        let (coords, weights): (Vec<[f64; 3]>, Vec<f64>) = match order {
            0 => return Err(Error::InvalidOrder(order)),
            1 => (vec![[1.0 / 3.0; 3]], vec![1.0]),
            2 => (orbit_21(1.0 / 6.0), vec![1.0 / 3.0; 3]),
            3 | 4 => {
                let mut coords = orbit_21(0.445_948_490_915_964_886_3);
                coords.extend(orbit_21(0.091_576_213_509_770_743_46));
                let mut weights = vec![0.223_381_589_678_011_465_7; 3];
                weights.extend([0.109_951_743_655_321_867_6; 3]);
                (coords, weights)
            }
            5 => {
                let s = 15.0f64.sqrt();
                let mut coords = vec![[1.0 / 3.0; 3]];
                coords.extend(orbit_21((6.0 - s) / 21.0));
                coords.extend(orbit_21((6.0 + s) / 21.0));
                let mut weights = vec![9.0 / 40.0];
                weights.extend([(155.0 - s) / 1200.0; 3]);
                weights.extend([(155.0 + s) / 1200.0; 3]);
                (coords, weights)
            }
            _ => duffy(order),
        };
        Ok(TriangleRule {
            bary: Barycentric2D { coords },
            weights,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// The three permutations of `(1 − 2a, a, a)`.
fn orbit_21(a: f64) -> Vec<[f64; 3]> {
    let b = 1.0 - 2.0 * a;
    vec![[b, a, a], [a, b, a], [a, a, b]]
}

/// Tensor Gauss on the square pushed through `(s, t) ↦ (s, t(1 − s))`.
fn duffy(order: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    // the Jacobian adds one degree in s
    let (s_nodes, s_weights) = gauss_legendre((order + 3) / 2);
    let (t_nodes, t_weights) = gauss_legendre((order + 2) / 2);
    let mut coords = Vec::with_capacity(s_nodes.len() * t_nodes.len());
    let mut weights = Vec::with_capacity(coords.capacity());
    for (&s, &ws) in s_nodes.iter().zip(&s_weights) {
        for (&t, &wt) in t_nodes.iter().zip(&t_weights) {
            let x2 = t * (1.0 - s);
            coords.push([1.0 - s - x2, s, x2]);
            weights.push(2.0 * ws * wt * (1.0 - s));
        }
    }
    (coords, weights)
}
