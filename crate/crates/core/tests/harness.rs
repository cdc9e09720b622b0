use std::fs;

use moreau_slab::harness::io::{load_csv, write_dataset};
use moreau_slab::harness::run::{execute, run_simulate};
use moreau_slab::harness::{Mode, RunConfig};
use moreau_slab::{Dataset, Error};
use nalgebra::{DMatrix, DVector};

fn cfg(mode: Mode, pairs: &[(&str, &str)]) -> RunConfig {
    RunConfig::from_pairs(mode, pairs.iter().copied()).unwrap()
}

#[test]
fn identity_design_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let data = Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.1, -2.5]), 1.0).unwrap();
    write_dataset(dir.path(), &data).unwrap();
    let back = load_csv(&dir.path().join("x.csv"), &dir.path().join("z.csv"), 1.0).unwrap();
    write_dataset(dir.path(), &back).unwrap();
    let again = load_csv(&dir.path().join("x.csv"), &dir.path().join("z.csv"), 1.0).unwrap();
    assert_eq!(back, data);
    assert_eq!(again, data);
}

#[test]
fn malformed_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (x, z) = (dir.path().join("x.csv"), dir.path().join("z.csv"));
    fs::write(&x, "a,b\n1,2\n3,4\n5\n").unwrap();
    fs::write(&z, "z\n1\n2\n3\n").unwrap();
    let err = load_csv(&x, &z, 1.0).unwrap_err();
    assert!(matches!(err, Error::Csv { line: 4, .. }), "{err}");
    fs::write(&x, "a,b\n1,2\n3,4\n").unwrap();
    assert!(matches!(load_csv(&x, &z, 1.0).unwrap_err(), Error::DimensionMismatch { .. }));
    fs::write(&z, "z\n1\nfoo\n").unwrap();
    assert!(load_csv(&x, &z, 1.0).unwrap_err().to_string().contains("line 3"));
}

#[test]
fn unthinned_trace_has_one_line_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Simulate, &[("seed", "4"), ("n", "20"), ("d", "6"), ("s_star", "2"), ("iterations", "3"), ("burn_in", "0"), ("thin", "1")]);
    c.out_dir = dir.path().join("run");
    execute(&c).unwrap();
    let text = fs::read_to_string(c.out_dir.join("trace.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    for key in ["iter", "delta", "theta", "q", "lambda1", "lambda2", "log_target", "acc_mala", "acc_ind", "acc_rwm"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["delta"].as_str().unwrap().len(), 6);
}

#[test]
fn default_thinning_applies_above_one_hundred_coordinates() {
    let c = cfg(Mode::Simulate, &[("seed", "1")]);
    assert_eq!((c.thinning(101), c.thinning(100)), (10, 1));
}

#[test]
fn failed_runs_leave_no_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (x, z) = (dir.path().join("x.csv"), dir.path().join("z.csv"));
    fs::write(&x, "a\n1\n2\n").unwrap();
    fs::write(&z, "z\n1\n").unwrap();
    let mut c = RunConfig::from_pairs(
        Mode::Fit,
        [("seed", "1"), ("sigma2", "1"), ("x_path", x.to_str().unwrap()), ("z_path", z.to_str().unwrap())],
    )
    .unwrap();
    c.out_dir = dir.path().join("out");
    assert!(execute(&c).is_err());
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn reruns_replace_a_previous_run_but_not_foreign_directories() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(Mode::Simulate, &[("seed", "2"), ("n", "20"), ("d", "5"), ("s_star", "1"), ("iterations", "20"), ("burn_in", "5")]);
    c.out_dir = dir.path().join("run");
    execute(&c).unwrap();
    execute(&c).unwrap();
    let foreign = dir.path().join("mine");
    fs::create_dir(&foreign).unwrap();
    fs::write(foreign.join("notes.txt"), "keep").unwrap();
    c.out_dir = foreign.clone();
    assert!(execute(&c).is_err());
    assert_eq!(fs::read_to_string(foreign.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn replicated_aggregates_depend_only_on_the_master_seed() {
    let c = cfg(
        Mode::Simulate,
        &[("seed", "8"), ("n", "30"), ("d", "12"), ("s_star", "2"), ("replications", "30"), ("iterations", "200"), ("burn_in", "50"), ("threads", "3")],
    );
    let a = run_simulate(&c, None).unwrap();
    let b = run_simulate(&RunConfig { threads: 1, ..c.clone() }, None).unwrap();
    assert_eq!(a.reps, b.reps);
    assert_eq!(a.curve, b.curve);
    assert_eq!((a.rel_err, a.f_score), (b.rel_err, b.f_score));
    assert_eq!(a.curve.len(), 20);
    assert!(a.curve.windows(2).all(|w| w[0].sweep < w[1].sweep));
    assert_eq!(a.curve.last().unwrap().sweep, 200);
}
