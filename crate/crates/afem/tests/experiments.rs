use std::process::Command;

use afem::experiments::{ailfem, goafem_with, poisson, Linearization, LoopConfig, PiecewiseData};
use afem::geometry::{load_geometry, read_dir, write_dir};
use afem_core::refinement::{refine_locally, Strategy};
use approx::assert_relative_eq;

fn small(max_dofs: usize) -> LoopConfig {
    LoopConfig {
        max_dofs,
        ..LoopConfig::default()
    }
}

#[test]
fn geometry_round_trip() {
    let mut mesh = load_geometry("Lshape").unwrap();
    refine_locally(&mut mesh, &[0, 3], Strategy::Nvb3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dir(&mesh, dir.path()).unwrap();
    let back = read_dir(dir.path()).unwrap();
    assert_eq!(back.elements(), mesh.elements());
    assert_eq!(back.edges(), mesh.edges());
    assert_eq!(back.boundaries(), mesh.boundaries());
    assert_eq!(back.coordinates(), mesh.coordinates());
}

#[test]
fn self_dual_goal_gives_equal_estimators() {
    let run = goafem_with(&small(2_000), PiecewiseData::primal(), PiecewiseData::primal()).unwrap();
    for level in &run.history.levels {
        assert_relative_eq!(level.dual_estimator.unwrap(), level.estimator, max_relative = 1e-12);
    }
}

#[test]
fn dofs_grow_and_estimator_decreases() {
    let run = poisson(&small(3_000)).unwrap();
    let levels = &run.history.levels;
    assert!(levels.windows(2).all(|w| w[1].n_dofs > w[0].n_dofs));
    assert!(levels.last().unwrap().estimator < levels[0].estimator);
    assert!(levels.last().unwrap().n_dofs >= 3_000);
}

#[test]
fn linearizations_stop_on_every_level() {
    for method in [Linearization::Kacanov, Linearization::Newton] {
        let run = ailfem(&small(1_000), method).unwrap();
        for level in &run.history.levels {
            let eta = level.estimator;
            let last = *level.inner_updates.last().unwrap();
            assert!(last <= 0.1 * eta, "{method}: update {last} vs estimator {eta}");
        }
    }
}

#[test]
fn rejects_nonpositive_damping() {
    assert!(ailfem(&small(100), Linearization::Zarantonello { delta: 0.0 }).is_err());
}

#[test]
fn cli_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lshape.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_afem"))
        .args(["lshape", "--order", "2", "--max-dofs", "500", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,nDofs,estimator,H1Error,goalEstimate,tAssembleA,tAssembleF,tSolve,tEstimate,tMark,tRefine,tTotal"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 2);
    for row in &rows {
        assert_eq!(row.len(), 12);
        assert!(row[3].parse::<f64>().is_ok());
        assert!(row[4].is_empty());
    }
}

#[test]
fn cli_rejects_unknown_strategy() {
    let output = Command::new(env!("CARGO_BIN_EXE_afem"))
        .args(["poisson", "--strategy", "purple"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}
