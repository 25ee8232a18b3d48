use std::fs;

use gaugewalk::experiment::{run, Experiment, ExperimentConfig};
use gaugewalk::io::{sha256_hex, Checkpoint, Origin};
use gaugewalk::Error;

fn small(experiment: Experiment, dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        t_max: 4.0,
        x_max: 100.0,
        sigma: 1.0,
        trials: 4,
        steps: 10,
        check_p_max: 10,
        epsilons: vec![0.4, 0.2, 0.1],
        output_dir: dir.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn manifest_checksums_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    for e in [
        Experiment::Evolve,
        Experiment::Convergence,
        Experiment::Trajectory,
        Experiment::GaugeCheck,
        Experiment::CurvatureCheck,
    ] {
        let dir = tmp.path().join(e.name());
        let cfg = small(e, &dir);
        let outcome = run(&cfg).unwrap();
        let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], e.name());
        assert_eq!(ExperimentConfig::from_json(&manifest["config"].to_string()).unwrap(), cfg);
        assert!(!outcome.manifest.artifacts.is_empty());
        for a in &outcome.manifest.artifacts {
            let bytes = fs::read(dir.join(&a.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), a.sha256, "{}", a.path);
            assert_eq!(bytes.len() as u64, a.bytes);
        }
    }
}

#[test]
fn evolve_checkpoints_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        checkpoint_every: Some(20),
        ..small(Experiment::Evolve, tmp.path())
    };
    let outcome = run(&cfg).unwrap();
    assert_eq!(outcome.report["checkpoints"].as_array().unwrap().len(), 2);
    let ck = Checkpoint::read(&tmp.path().join("walk_j40.bin")).unwrap();
    let fin = Checkpoint::read(&tmp.path().join("walk_final.bin")).unwrap();
    assert_eq!((ck.origin, ck.j, ck.dim), (Origin::Walk, 40, 2));
    assert_eq!(ck, fin);
    let xbar = fs::read_to_string(tmp.path().join("xbar.csv")).unwrap();
    assert_eq!(xbar.lines().count(), 42);
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&small(Experiment::GaugeCheck, &tmp.path().join("a"))).unwrap();
    let b = run(&small(Experiment::GaugeCheck, &tmp.path().join("b"))).unwrap();
    assert_eq!(a.report, b.report);
    let sums = |m: &gaugewalk::io::Manifest| m.artifacts.iter().map(|a| a.sha256.clone()).collect::<Vec<_>>();
    assert_eq!(sums(&a.manifest), sums(&b.manifest));
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = ExperimentConfig {
        sigma: -1.0,
        ..small(Experiment::Evolve, tmp.path())
    };
    assert_eq!(run(&bad).unwrap_err().exit_code(), 1);

    let wide = ExperimentConfig {
        t_max: 30.0,
        x_max: 12.0,
        ..small(Experiment::Trajectory, tmp.path())
    };
    let err = run(&wide).unwrap_err();
    assert!(matches!(err, Error::NumericalAbort { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);

    let curvature = ExperimentConfig {
        curvature_epsilons: vec![0.1, 0.2],
        ..small(Experiment::CurvatureCheck, tmp.path())
    };
    assert_eq!(run(&curvature).unwrap_err().exit_code(), 1);
}
