//! Lagrange finite elements, DOF maps, finite element functions and
//! prolongation between nested spaces.

mod element;
mod prolongation;
mod space;

pub use element::{Derivative, Family, FiniteElement};
pub use prolongation::Prolongation;
pub use space::{nodal_interpolation, BoundarySelection, FeFunction, FeSpace};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::integration::{Barycentric2D, Field};
    use crate::mesh::fixtures::*;
    use crate::mesh::Mesh;
    use crate::refinement::{refine_locally, refine_uniform, Strategy};
    use alloc::rc::Rc;
    use alloc::vec;
    use alloc::vec::Vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn space(mesh: &Mesh, p: usize) -> FeSpace {
        FeSpace::new(mesh, FiniteElement::lagrange(p).unwrap(), BoundarySelection::All).unwrap()
    }

    #[test]
    fn criss_cross_spaces() {
        let mesh = criss_cross();
        let p1 = space(&mesh, 1);
        assert_eq!(p1.n_dofs(), 5);
        assert_eq!(p1.free_dofs(), &[4]);
        assert_eq!(space(&mesh, 2).n_dofs(), 13);
        let p0 = FeSpace::new(&mesh, FiniteElement::discontinuous(0).unwrap(), BoundarySelection::All).unwrap();
        assert_eq!(p0.n_dofs(), 4);
        assert_eq!(p0.free_dofs(), &[0, 1, 2, 3]);
        assert_eq!(
            FeSpace::new(&mesh, FiniteElement::lagrange(1).unwrap(), BoundarySelection::Parts(vec![7])),
            Err(Error::UnknownBoundaryPart(7))
        );
    }

    #[test]
    fn dimension_formula_and_conformity() {
        let mut mesh = l_shape();
        refine_uniform(&mut mesh, 1, Strategy::Nvb3).unwrap();
        refine_locally(&mut mesh, &[0, 3, 5], Strategy::Nvb3).unwrap();
        for p in 1..=6 {
            let fes = space(&mesh, p);
            let expected = mesh.n_vertices()
                + (p - 1) * mesh.n_edges()
                + (p - 1) * p.saturating_sub(2) / 2 * mesh.n_elements();
            assert_eq!(fes.n_dofs(), expected);
            // shared edge nodes map to the same DOF from both sides
            let nodes = fes.element().nodes();
            for t in 0..mesh.n_elements() {
                for (i, &d) in fes.element_dofs(t).iter().enumerate() {
                    let x = mesh.point(t, &nodes[i]);
                    for s in 0..mesh.n_elements() {
                        for (k, &d2) in fes.element_dofs(s).iter().enumerate() {
                            let y = mesh.point(s, &nodes[k]);
                            let same = (x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12;
                            assert_eq!(same, d == d2);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dirichlet_dofs_lie_on_dirichlet_edges() {
        let mesh = l_shape();
        let fes = FeSpace::new(&mesh, FiniteElement::lagrange(3).unwrap(), BoundarySelection::Parts(vec![0])).unwrap();
        // two Dirichlet edges with 4 nodes each, one shared vertex
        assert_eq!(fes.n_dofs() - fes.free_dofs().len(), 7);
    }

    #[test]
    fn interpolation_examples() {
        let mesh = criss_cross();
        let fes = space(&mesh, 1);
        let x1 = nodal_interpolation(&Field::scalar(|x| x[0]), &mesh, &fes).unwrap();
        assert_eq!(x1, vec![0.0, 1.0, 1.0, 0.0, 0.5]);
        let ones = nodal_interpolation(&Field::constant(1.0), &mesh, &space(&mesh, 3)).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));

        let mut square = unit_square();
        refine_uniform(&mut square, 1, Strategy::Rgb).unwrap();
        let p0 = FeSpace::new(&square, FiniteElement::discontinuous(0).unwrap(), BoundarySelection::None).unwrap();
        let chi = Field::scalar(|x| f64::from(u8::from(x[0] + x[1] < 0.5)));
        let w = nodal_interpolation(&chi, &square, &p0).unwrap();
        for (t, &v) in w.iter().enumerate() {
            let c = square.point(t, &[1.0 / 3.0; 3]);
            assert_eq!(v, f64::from(u8::from(c[0] + c[1] < 0.5)));
        }
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        assert!(nodal_interpolation(&Field::gradient(&FeFunction::new(Rc::new(fes))), &mesh, &space(&mesh, 1)).is_err());
    }

    fn poly(q: usize, x: [f64; 2]) -> f64 {
        (0..=q).map(|k| (k as f64 + 1.0) * x[0].powi(k as i32) * x[1].powi((q - k) as i32)).sum::<f64>() + 0.5
    }

    #[test]
    fn patch_test() {
        let mut mesh = l_shape();
        refine_locally(&mut mesh, &[1, 4], Strategy::Nvb3).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for p in 1..=4 {
            let fes = Rc::new(space(&mesh, p));
            for q in 1..=p {
                let exact = Field::scalar(move |x| poly(q, x));
                let u = FeFunction::with_coefficients(fes.clone(), nodal_interpolation(&exact, &mesh, &fes).unwrap()).unwrap();
                let pts: Vec<[f64; 3]> = (0..20)
                    .map(|_| {
                        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
                        [1.0 - a - b, a, b]
                    })
                    .collect();
                let bary = Barycentric2D::new(pts).unwrap();
                let elements: Vec<usize> = (0..mesh.n_elements()).collect();
                let got = Field::fe(&u).eval(&mesh, &bary, &elements).unwrap();
                let want = exact.eval(&mesh, &bary, &elements).unwrap();
                for (g, w) in got.data().iter().zip(want.data()) {
                    assert_abs_diff_eq!(g, w, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn gradient_and_hessian_of_quadratic() {
        let mesh = criss_cross();
        let fes = Rc::new(space(&mesh, 2));
        let f = Field::scalar(|x| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1]);
        let u = FeFunction::with_coefficients(fes.clone(), nodal_interpolation(&f, &mesh, &fes).unwrap()).unwrap();
        let bary = Barycentric2D::new(vec![[0.2, 0.3, 0.5]]).unwrap();
        let elements = [0, 1, 2, 3];
        let g = Field::gradient(&u).eval(&mesh, &bary, &elements).unwrap();
        let h = Field::hessian(&u).eval(&mesh, &bary, &elements).unwrap();
        for t in 0..4 {
            let x = mesh.point(t, &[0.2, 0.3, 0.5]);
            assert_abs_diff_eq!(g.get(0, t, 0), 2.0 * x[0] + 3.0 * x[1], epsilon = 1e-12);
            assert_abs_diff_eq!(g.get(1, t, 0), 3.0 * x[0] - 2.0 * x[1], epsilon = 1e-12);
            for (c, v) in [2.0, 3.0, 3.0, -2.0].into_iter().enumerate() {
                assert_abs_diff_eq!(h.get(c, t, 0), v, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn stale_function_is_rejected() {
        let mut mesh = criss_cross();
        let u = FeFunction::new(Rc::new(space(&mesh, 1)));
        refine_uniform(&mut mesh, 1, Strategy::Nvb3).unwrap();
        let err = Field::fe(&u).eval(&mesh, &Barycentric2D::centroid(), &[0]).unwrap_err();
        assert_eq!(err, Error::StaleFunction { stamp: 0, current: 1 });
    }

    #[test]
    fn lowest_order_matches_general() {
        for strategy in [Strategy::Nvb3, Strategy::Nvb5, Strategy::Rgb, Strategy::Nvb1] {
            let mut mesh = l_shape();
            let coarse = space(&mesh, 1);
            let record = refine_locally(&mut mesh, &[0, 2, 5], strategy).unwrap();
            let fine = space(&mesh, 1);
            let general = Prolongation::general(&coarse, &fine, &record).unwrap();
            let lowest = Prolongation::lowest_order(&coarse, &fine, &record).unwrap();
            assert_eq!(general.matrix(), lowest.matrix());
        }
        let mut mesh = l_shape();
        let element = FiniteElement::discontinuous(0).unwrap();
        let coarse = FeSpace::new(&mesh, element.clone(), BoundarySelection::None).unwrap();
        let record = refine_locally(&mut mesh, &[1], Strategy::Nvb3).unwrap();
        let fine = FeSpace::new(&mesh, element, BoundarySelection::None).unwrap();
        assert_eq!(
            Prolongation::general(&coarse, &fine, &record).unwrap().matrix(),
            Prolongation::lowest_order(&coarse, &fine, &record).unwrap().matrix()
        );
    }

    #[test]
    fn p1_uniform_prolongation_example() {
        let mut mesh = criss_cross();
        let coarse = space(&mesh, 1);
        let record = refine_uniform(&mut mesh, 1, Strategy::Nvb3).unwrap().remove(0);
        let fine = space(&mesh, 1);
        let p = Prolongation::lowest_order(&coarse, &fine, &record).unwrap();
        let c = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let f = p.prolongate(&c).unwrap();
        assert_eq!(&f[..5], &c[..]);
        for (e, m) in record.edge_midpoint.iter().enumerate() {
            let [a, b] = record.coarse_edges[e];
            assert_eq!(f[m.unwrap()], (c[a] + c[b]) / 2.0);
        }
        assert_eq!(p.prolongate(&[1.0; 4]), Err(Error::DimensionMismatch { expected: 5, found: 4 }));
        let ones = Prolongation::general(&space(&mesh, 1), &fine, &record);
        assert!(matches!(ones, Err(Error::StaleProlongation { .. })));
    }

    #[test]
    fn stale_prolongation_is_rejected() {
        let mut mesh = criss_cross();
        let coarse = Rc::new(space(&mesh, 1));
        let record = refine_uniform(&mut mesh, 1, Strategy::Nvb3).unwrap().remove(0);
        let fine = Rc::new(space(&mesh, 1));
        let p = Prolongation::lowest_order(&coarse, &fine, &record).unwrap();
        let u = FeFunction::new(coarse);
        p.prolongate_function(&u, fine.clone()).unwrap();
        assert!(matches!(p.prolongate_function(&u, fine), Err(Error::StaleProlongation { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prolongation_preserves_functions(
            p in 1usize..5,
            seed in any::<u64>(),
            strategy in prop::sample::select(vec![Strategy::Nvb1, Strategy::Nvb3, Strategy::Nvb5, Strategy::Rgb]),
            discontinuous in any::<bool>(),
        ) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut mesh = criss_cross();
            let element = if discontinuous { FiniteElement::discontinuous(p - 1).unwrap() } else { FiniteElement::lagrange(p).unwrap() };
            let coarse = Rc::new(FeSpace::new(&mesh, element.clone(), BoundarySelection::All).unwrap());
            let coefficients: Vec<f64> = (0..coarse.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = FeFunction::with_coefficients(coarse.clone(), coefficients).unwrap();
            let ones = vec![1.0; coarse.n_dofs()];

            // sample points before refinement
            let samples: Vec<(usize, [f64; 3])> = (0..50).map(|_| {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
                (rng.gen_range(0..4), [1.0 - a - b, a, b])
            }).collect();
            let points: Vec<[f64; 2]> = samples.iter().map(|(t, l)| mesh.point(*t, l)).collect();
            let before: Vec<f64> = samples.iter().map(|(t, l)| {
                Field::fe(&u).eval(&mesh, &Barycentric2D::new(vec![*l]).unwrap(), &[*t]).unwrap().get(0, 0, 0)
            }).collect();

            let marked: Vec<usize> = (0..4).filter(|_| rng.gen_bool(0.5)).collect();
            let record = refine_locally(&mut mesh, &marked, strategy).unwrap();
            let fine = Rc::new(FeSpace::new(&mesh, element, BoundarySelection::All).unwrap());
            let prolongation = Prolongation::general(&coarse, &fine, &record).unwrap();
            let fine_ones = prolongation.prolongate(&ones).unwrap();
            prop_assert!(fine_ones.iter().all(|v| (v - 1.0).abs() < 1e-12));
            prolongation.prolongate_function(&u, fine).unwrap();

            for (x, v) in points.iter().zip(&before) {
                let (t, lambda) = locate(&mesh, *x);
                let w = Field::fe(&u).eval(&mesh, &Barycentric2D::new(vec![lambda]).unwrap(), &[t]).unwrap().get(0, 0, 0);
                if !discontinuous {
                    prop_assert!((w - v).abs() < 1e-12, "{w} vs {v}");
                } else {
                    // points on fine interfaces may see a different coarse
                    // element only at coarse edges, which the samples avoid
                    prop_assert!((w - v).abs() < 1e-12 || on_coarse_edge(*x));
                }
            }
        }
    }

    fn on_coarse_edge(x: [f64; 2]) -> bool {
        (x[0] - x[1]).abs() < 1e-9 || (x[0] + x[1] - 1.0).abs() < 1e-9
    }

    fn locate(mesh: &Mesh, x: [f64; 2]) -> (usize, [f64; 3]) {
        for t in 0..mesh.n_elements() {
            let [a, b, c] = mesh.element_vertices(t);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
            let l0 = 1.0 - l1 - l2;
            if l0 >= -1e-14 && l1 >= -1e-14 && l2 >= -1e-14 {
                return (t, [l0.clamp(0.0, 1.0), l1.clamp(0.0, 1.0), (1.0 - l0.clamp(0.0, 1.0) - l1.clamp(0.0, 1.0)).max(0.0)]);
            }
        }
        panic!("point outside mesh");
    }
}
