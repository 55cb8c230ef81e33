//! Acceptance suite: one PASS/FAIL line per criterion. Runs the full
//! adaptive experiments, so it takes a few minutes in an optimized build.

use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use afem::experiments::{ailfem, goafem, lshape, poisson, Linearization, LoopConfig, Run};
use afem::history::{loglog_interpolate, ConvergenceHistory, Level};
use afem::{load_geometry, DirectSolver};
use afem_core::assembly::{BilinearForm, LinearForm};
use afem_core::fem::{nodal_interpolation, BoundarySelection, FeFunction, FeSpace, FiniteElement, Prolongation};
use afem_core::integration::{Barycentric2D, EdgeRule, Field, TriangleRule};
use afem_core::linalg::{solve_free, vector_product, Batch, Operand};
use afem_core::mark::mark_doerfler;
use afem_core::refinement::{refine_locally, refine_uniform, Strategy};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn slope(history: &ConvergenceHistory, y: impl Fn(&Level) -> Option<f64>) -> Result<f64, String> {
    history.slope(y).ok_or_else(|| "too few levels for a slope".to_string())
}

fn config(order: usize, max_dofs: usize) -> LoopConfig {
    LoopConfig {
        order,
        max_dofs,
        ..LoopConfig::default()
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1
fn poisson_rate(run: &Run, seconds: f64) -> Outcome {
    let s = slope(&run.history, |l| Some(l.estimator))?;
    let last = run.history.last().ok_or("empty history")?;
    check(
        (s + 0.5).abs() <= 0.07 && seconds < 60.0 && last.n_elements >= 200_000,
        format!("slope {s:.4} (target -0.5 ± 0.07), {} elements, {seconds:.1} s (limit 60 s)", last.n_elements),
    )
}

// 2 and 3
fn lshape_rates() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut runs = Vec::new();
    for p in 1..=4 {
        match lshape(&config(p, 100_000)) {
            Ok(run) => runs.push((p, run)),
            Err(e) => {
                let e = format!("p = {p}: {e}");
                return (Err(e.clone()), Err(e));
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();

    let mut ok = seconds < 300.0;
    let mut detail = Vec::new();
    for (p, run) in &runs {
        let p = *p as f64;
        let (Ok(se), Ok(sh)) = (
            slope(&run.history, |l| Some(l.estimator)),
            slope(&run.history, |l| l.h1_error),
        ) else {
            return (Err("too few levels".into()), Err("too few levels".into()));
        };
        ok &= (se + p / 2.0).abs() <= 0.1 * p && (se - sh).abs() <= 0.1;
        detail.push(format!("p={p}: estimator {se:.3} (target {:.1} ± {:.1}), error {sh:.3}", -p / 2.0, 0.1 * p));
    }
    detail.push(format!("{seconds:.1} s (limit 300 s)"));
    let rates = check(ok, detail.join("; "));

    let mut ok = true;
    let mut detail = Vec::new();
    for (p, run) in &runs {
        let ratios: Vec<f64> = run
            .history
            .levels
            .iter()
            .filter_map(|l| l.h1_error.filter(|e| *e > 0.0).map(|e| l.estimator / e))
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        ok &= !ratios.is_empty() && max / min <= 100.0;
        detail.push(format!("p={p}: efficiency in [{min:.3}, {max:.3}], spread {:.2}", max / min));
    }
    (rates, check(ok, detail.join("; ")))
}

// 4
fn goafem_rates() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, target, tol) in [(1, -1.0, 0.15), (3, -3.0, 0.3)] {
        let run = goafem(&config(p, 100_000)).map_err(err)?;
        let s = slope(&run.history, |l| l.goal_estimate)?;
        ok &= (s - target).abs() <= tol;
        detail.push(format!("p={p}: product slope {s:.3} (target {target} ± {tol})"));
    }
    check(ok, detail.join("; "))
}

// 5
fn ailfem_rates() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut runs = Vec::new();
    for method in [
        Linearization::Zarantonello { delta: 0.5 },
        Linearization::Kacanov,
        Linearization::Newton,
    ] {
        let start = Instant::now();
        let run = ailfem(&config(1, 50_000), method).map_err(|e| format!("{method}: {e}"))?;
        let s = slope(&run.history, |l| Some(l.estimator))?;
        ok &= (s + 0.5).abs() <= 0.1;
        detail.push(format!(
            "{method}: slope {s:.3}, final eta {:.4e} at {} DOFs, total {:.2} s ({:.1} s wall)",
            run.history.last().unwrap().estimator,
            run.history.last().unwrap().n_dofs,
            run.history.last().unwrap().total,
            start.elapsed().as_secs_f64()
        ));
        runs.push(run);
    }
    // compare at the largest DOF count reached by every method
    let common = runs
        .iter()
        .map(|r| r.history.last().unwrap().n_dofs)
        .min()
        .unwrap() as f64;
    let finals: Vec<f64> = runs
        .iter()
        .map(|r| loglog_interpolate(&r.history.levels, |l| l.estimator, common).unwrap_or(f64::NAN))
        .collect();
    let max = finals.iter().cloned().fold(f64::MIN, f64::max);
    let min = finals.iter().cloned().fold(f64::MAX, f64::min);
    ok &= max / min - 1.0 <= 0.2;
    detail.push(format!("estimators at {common} DOFs differ by {:.1}% (limit 20%)", 100.0 * (max / min - 1.0)));
    check(ok, detail.join("; "))
}

// 6
fn scaling(run: &Run) -> Outcome {
    let levels = run.history.last_decade();
    let phases: [(&str, fn(&Level) -> f64); 4] = [
        ("assembly", |l| l.timings.assemble_a + l.timings.assemble_f),
        ("estimate", |l| l.timings.estimate),
        ("mark", |l| l.timings.mark),
        ("refine", |l| l.timings.refine),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, time) in phases {
        // the last level is not refined
        let per_dof: Vec<f64> = levels
            .iter()
            .filter(|l| l.timings.refine > 0.0)
            .map(|l| time(l) / l.n_dofs as f64)
            .collect();
        let max = per_dof.iter().cloned().fold(f64::MIN, f64::max);
        let min = per_dof.iter().cloned().fold(f64::MAX, f64::min);
        ok &= per_dof.len() >= 2 && min > 0.0 && max / min <= 4.0;
        detail.push(format!("{name} {:.2}", max / min));
    }
    check(ok, format!("max/min time per DOF over the last decade: {} (limit 4)", detail.join(", ")))
}

// 7
fn fixture() -> Outcome {
    let mesh = load_geometry("crisscross").map_err(err)?;
    let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let edges: Vec<Vec<usize>> = mesh.edges().iter().map(|e| one_based(e)).collect();
    let e2e: Vec<Vec<usize>> = mesh.element2edges().iter().map(|e| one_based(e)).collect();
    let boundaries: Vec<Vec<usize>> = mesh.boundaries().iter().map(|b| one_based(b)).collect();
    let expected_edges = [[1, 2], [4, 1], [1, 5], [2, 3], [2, 5], [3, 4], [3, 5], [4, 5]];
    let expected_e2e = [[1, 5, 3], [4, 7, 5], [6, 8, 7], [2, 3, 8]];
    let ok = edges == expected_edges.map(|e| e.to_vec())
        && e2e == expected_e2e.map(|e| e.to_vec())
        && boundaries == [vec![1, 2], vec![4, 6]];
    check(ok, format!("edges {edges:?}, element2edges {e2e:?}, boundaries {boundaries:?}"))
}

// 8
fn quadrature_exactness() -> Outcome {
    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }
    let mut worst = 0.0f64;
    for q in 1..=9 {
        let rule = TriangleRule::of_order(q).map_err(err)?;
        for a in 0..=q as i32 {
            for b in 0..=(q as i32 - a) {
                // normalized by the reference area 1/2
                let exact = 2.0 * factorial(a as u32) * factorial(b as u32) / factorial((a + b + 2) as u32);
                let approx: f64 = rule
                    .bary
                    .coords()
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * l[1].powi(a) * l[2].powi(b))
                    .sum();
                worst = worst.max((approx - exact).abs());
            }
        }
        let rule = EdgeRule::of_order(q).map_err(err)?;
        for a in 0..=q as i32 {
            let approx: f64 = rule.bary.coords().iter().zip(&rule.weights).map(|(l, w)| w * l[0].powi(a)).sum();
            worst = worst.max((approx - 1.0 / f64::from(a + 1)).abs());
        }
    }
    check(worst <= 1e-12, format!("quadrature max error {worst:.1e}"))
}

fn min_angle(mesh: &afem_core::mesh::Mesh) -> f64 {
    let c = mesh.coordinates();
    mesh.elements()
        .iter()
        .flat_map(|t| {
            (0..3).map(move |i| {
                let (a, b, o) = (c[t[(i + 1) % 3]], c[t[(i + 2) % 3]], c[t[i]]);
                let (u, v) = ([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                cos.clamp(-1.0, 1.0).acos()
            })
        })
        .fold(f64::MAX, f64::min)
}

/// Poisson with f = 1 on the L-shape, P1 residual estimator, Dörfler θ = 0.5.
fn adaptive_conformity() -> Outcome {
    let f = Field::constant(1.0);
    let mut detail = Vec::new();
    for strategy in [Strategy::Nvb1, Strategy::Nvb3, Strategy::Nvb5, Strategy::Rgb] {
        let mut mesh = load_geometry("Lshape").map_err(err)?;
        let initial = min_angle(&mesh);
        let mut smallest = initial;
        for _ in 0..15 {
            let space = Rc::new(FeSpace::new(&mesh, FiniteElement::lagrange(1).map_err(err)?, BoundarySelection::All).map_err(err)?);
            let a = BilinearForm {
                a: Some(Field::constant(1.0)),
                ..Default::default()
            }
            .assemble_matrix(&mesh, &space)
            .map_err(err)?;
            let rhs = LinearForm {
                f: Some(f.clone()),
                ..Default::default()
            }
            .assemble(&mesh, &space)
            .map_err(err)?;
            let x = solve_free(&DirectSolver::default(), &a, &[rhs], space.free_dofs()).map_err(err)?;
            let u = FeFunction::with_coefficients(space, x[0].clone()).map_err(err)?;
            let eta = afem_core::estimate::estimate_poisson_p1(&u, &f, &mesh).map_err(err)?;
            let marked = mark_doerfler(eta.values(), 0.5).map_err(err)?;
            refine_locally(&mut mesh, &marked, strategy).map_err(err)?;
            mesh.check_invariants().map_err(err)?;
            if mesh.n_vertices() + mesh.n_elements() != mesh.n_edges() + 1 {
                return Err(format!("Euler formula violated for {strategy:?}"));
            }
            smallest = smallest.min(min_angle(&mesh));
        }
        // RGB green closures are not bisection-only, so the angle bound is for NVB
        if strategy != Strategy::Rgb && smallest < initial / 2.0 - 1e-12 {
            return Err(format!("{strategy:?}: minimal angle {smallest:.4} below half of {initial:.4}"));
        }
        detail.push(format!("{strategy:?} {} elements, min angle {:.1}°", mesh.n_elements(), smallest.to_degrees()));
    }
    Ok(format!("Euler formula and conformity after 15 adaptive rounds: {}", detail.join(", ")))
}

fn patch_test() -> Outcome {
    let mut worst = 0.0f64;
    for p in 1..=4usize {
        let mut mesh = load_geometry("Lshape").map_err(err)?;
        refine_uniform(&mut mesh, 2, Strategy::Nvb3).map_err(err)?;
        let space = Rc::new(FeSpace::new(&mesh, FiniteElement::lagrange(p).map_err(err)?, BoundarySelection::All).map_err(err)?);
        let k = p as i32;
        // u = x^p + x y^(p-1) + 1, −Δu = −p(p−1)x^(p−2) − x (p−1)(p−2) y^(p−3)
        let exact = Field::scalar(move |x| x[0].powi(k) + x[0] * x[1].powi(k - 1) + 1.0);
        let f = Field::scalar(move |x| {
            let mut v = 0.0;
            if k >= 2 {
                v -= f64::from(k * (k - 1)) * x[0].powi(k - 2);
            }
            if k >= 3 {
                v -= f64::from((k - 1) * (k - 2)) * x[0] * x[1].powi(k - 3);
            }
            v
        });
        let a = BilinearForm {
            a: Some(Field::constant(1.0)),
            ..Default::default()
        }
        .assemble_matrix(&mesh, &space)
        .map_err(err)?;
        let rhs = LinearForm {
            f: Some(f),
            ..Default::default()
        }
        .assemble(&mesh, &space)
        .map_err(err)?;
        let interpolant = nodal_interpolation(&exact, &mesh, &space).map_err(err)?;
        let mut lifted = interpolant.clone();
        for &d in space.free_dofs() {
            lifted[d] = 0.0;
        }
        let shifted: Vec<f64> = rhs.iter().zip(a.matvec(&lifted)).map(|(f, g)| f - g).collect();
        let x = solve_free(&DirectSolver::default(), &a, &[shifted], space.free_dofs()).map_err(err)?;
        let e: Vec<f64> = interpolant.iter().zip(&x[0]).zip(&lifted).map(|((u, x), l)| u - x - l).collect();
        worst = worst.max(a.quadratic_form(&e).max(0.0).sqrt());
    }
    check(worst <= 1e-9, format!("patch test energy error {worst:.1e} for p ≤ 4"))
}

fn nested_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for p in 1..=4 {
        let coarse_mesh = load_geometry("Lshape").map_err(err)?;
        let element = FiniteElement::lagrange(p).map_err(err)?;
        let coarse = Rc::new(FeSpace::new(&coarse_mesh, element.clone(), BoundarySelection::None).map_err(err)?);
        let coefficients: Vec<f64> = (0..coarse.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = FeFunction::with_coefficients(coarse.clone(), coefficients.clone()).map_err(err)?;
        let mut mesh = coarse_mesh.clone();
        let marked: Vec<usize> = (0..mesh.n_elements()).filter(|t| t % 2 == 0).collect();
        let record = refine_locally(&mut mesh, &marked, Strategy::Nvb3).map_err(err)?;
        let fine = Rc::new(coarse.rebuild(&mesh).map_err(err)?);
        let prolongated = Prolongation::general(&coarse, &fine, &record)
            .and_then(|pr| pr.prolongate(&coefficients))
            .map_err(err)?;
        let v = FeFunction::with_coefficients(fine.clone(), prolongated).map_err(err)?;
        for parent in 0..coarse_mesh.n_elements() {
            let [a, b, c] = coarse_mesh.element_vertices(parent);
            for child in record.children(parent) {
                let l: [f64; 3] = {
                    let r = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                    let s: f64 = r.iter().sum();
                    [r[0] / s, r[1] / s, r[2] / s]
                };
                let x = mesh.point(child, &l);
                // barycentric coordinates of x in the parent
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
                let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
                let coarse_bary = Barycentric2D::new(vec![[1.0 - l1 - l2, l1, l2]]).map_err(err)?;
                let fine_bary = Barycentric2D::new(vec![l]).map_err(err)?;
                let uc = Field::fe(&u).eval(&coarse_mesh, &coarse_bary, &[parent]).map_err(err)?;
                let uf = Field::fe(&v).eval(&mesh, &fine_bary, &[child]).map_err(err)?;
                worst = worst.max((uc.get(0, 0, 0) - uf.get(0, 0, 0)).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("prolongation nested identity error {worst:.1e} for p ≤ 4"))
}

fn vector_product_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (m, k, n) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4));
        let (ta, tb) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        let (entities, nodes) = (rng.gen_range(1..5), rng.gen_range(1..5));
        let sa = if ta { Operand::new(k, m).t() } else { Operand::new(m, k) };
        let sb = if tb { Operand::new(n, k).t() } else { Operand::new(k, n) };
        let random = |rng: &mut StdRng, len: usize| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a = Batch::from_vec(m * k, entities, nodes, random(&mut rng, m * k * entities * nodes)).map_err(err)?;
        let b = Batch::from_vec(k * n, entities, nodes, random(&mut rng, k * n * entities * nodes)).map_err(err)?;
        let c = vector_product(&a, &b, sa, sb).map_err(err)?;
        for e in 0..entities {
            for q in 0..nodes {
                let (x, y) = (a.at(e, q), b.at(e, q));
                let at = |i: usize, l: usize| if ta { x[l + k * i] } else { x[i + m * l] };
                let bt = |l: usize, j: usize| if tb { y[j + n * l] } else { y[l + k * j] };
                for i in 0..m {
                    for j in 0..n {
                        let naive: f64 = (0..k).map(|l| at(i, l) * bt(l, j)).sum();
                        worst = worst.max((c.at(e, q)[i + m * j] - naive).abs());
                    }
                }
            }
        }
    }
    check(worst <= 1e-13, format!("vector_product max deviation {worst:.1e}"))
}

fn doerfler_minimality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..300 {
        let n = rng.gen_range(1..=15);
        let eta2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let theta = rng.gen_range(0.01..=1.0);
        let marked = mark_doerfler(&eta2, theta).map_err(err)?;
        let total: f64 = eta2.iter().sum();
        let captured: f64 = marked.iter().map(|&t| eta2[t]).sum();
        if captured < theta * total * (1.0 - 1e-12) {
            return Err(format!("bulk criterion violated for {eta2:?}, θ = {theta}"));
        }
        let best = (0u32..1 << n)
            .filter(|mask| {
                (0..n).filter(|i| mask & (1 << i) != 0).map(|i| eta2[i]).sum::<f64>() >= theta * total * (1.0 + 1e-12)
            })
            .map(u32::count_ones)
            .min();
        if best.is_some_and(|b| marked.len() > b as usize) {
            return Err(format!("non-minimal set for {eta2:?}, θ = {theta}"));
        }
    }
    Ok("Dörfler sets minimal on 300 random cases with ≤ 15 elements".into())
}

fn criss_cross_solve() -> Outcome {
    let mesh = load_geometry("crisscross").map_err(err)?;
    let space = FeSpace::new(&mesh, FiniteElement::lagrange(1).map_err(err)?, BoundarySelection::All).map_err(err)?;
    let a = BilinearForm {
        a: Some(Field::constant(1.0)),
        ..Default::default()
    }
    .assemble_matrix(&mesh, &space)
    .map_err(err)?;
    let f = LinearForm {
        f: Some(Field::constant(1.0)),
        ..Default::default()
    }
    .assemble(&mesh, &space)
    .map_err(err)?;
    let x = solve_free(&DirectSolver::default(), &a, &[f], space.free_dofs()).map_err(err)?;
    let u5 = x[0][4];
    check((u5 - 1.0 / 12.0).abs() <= 1e-12, format!("u5 = {u5:.15} (expected 1/12)"))
}

fn property_suites() -> Outcome {
    let suites: [(&str, fn() -> Outcome); 7] = [
        ("quadrature", quadrature_exactness),
        ("refinement", adaptive_conformity),
        ("patch", patch_test),
        ("prolongation", nested_identity),
        ("vector_product", vector_product_oracle),
        ("doerfler", doerfler_minimality),
        ("criss-cross", criss_cross_solve),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, suite) in suites {
        eprintln!("running {name}");
        let start = Instant::now();
        let result = suite();
        let seconds = start.elapsed().as_secs_f64();
        let passed = result.is_ok() && seconds < 30.0;
        ok &= passed;
        let text = match result {
            Ok(s) | Err(s) => s,
        };
        detail.push(format!("[{}] {name}: {text} ({seconds:.2} s)", if passed { "ok" } else { "FAILED" }));
    }
    check(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {id} ({name}): {detail}");
    };

    report(7, "fixture tables", fixture());
    report(8, "property suites", property_suites());

    let start = Instant::now();
    let poisson_run = poisson(&LoopConfig {
        max_dofs: usize::MAX,
        max_elements: Some(200_000),
        ..LoopConfig::default()
    });
    let seconds = start.elapsed().as_secs_f64();
    match &poisson_run {
        Ok(run) => {
            report(1, "poisson rate", poisson_rate(run, seconds));
            report(6, "scaling", scaling(run));
        }
        Err(e) => {
            report(1, "poisson rate", Err(e.to_string()));
            report(6, "scaling", Err(e.to_string()));
        }
    }

    let (rates, efficiency) = lshape_rates();
    report(2, "L-shape rates", rates);
    report(3, "efficiency", efficiency);
    report(4, "GOAFEM rates", goafem_rates());
    report(5, "AILFEM rates", ailfem_rates());

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
