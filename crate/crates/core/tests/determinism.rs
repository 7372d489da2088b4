mod common;

use opportune::batch::{run_batch, run_single, BatchSpec};
use sha2::{Digest, Sha256};
use std::path::Path;

fn digest(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    format!("{:x}", Sha256::digest(&bytes))
}

fn small(dir: &Path) -> std::path::PathBuf {
    common::write_scenario(dir, &common::small_scenario("EpidemicRouter", 1), &common::grid_wkt())
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let scen = small(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ra, fa) = run_single(&scen, &[], Some(&a)).unwrap();
    let (rb, fb) = run_single(&scen, &[], Some(&b)).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(digest(x), digest(y), "{}", x.display());
    }
}

#[test]
fn seed_changes_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let scen = small(dir.path());
    let set = |s: &str| vec![("MovementModel.rngSeed".to_string(), s.to_string())];
    let (r1, _) = run_single(&scen, &set("1"), Some(&dir.path().join("1"))).unwrap();
    let (r2, _) = run_single(&scen, &set("2"), Some(&dir.path().join("2"))).unwrap();
    assert_eq!(r2.seed, 2);
    assert_ne!(r1, r2);
}

#[test]
fn batch_output_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let scen = small(dir.path());
    let spec = |jobs: usize, out: &str| BatchSpec {
        jobs,
        out_dir: Some(dir.path().join(out)),
        seeds: vec![1, 2, 3],
        ..BatchSpec::default_grid(&scen)
    };
    let one = run_batch(&spec(1, "one")).unwrap();
    let four = run_batch(&spec(4, "four")).unwrap();
    assert!(one.failures.is_empty());
    assert_eq!(one.reports.len(), 6);
    assert_eq!(one.summary.len(), 2);
    for f in ["runs.csv", "summary.csv", "deliveries.csv"] {
        assert_eq!(digest(&one.out_dir.join(f)), digest(&four.out_dir.join(f)), "{f}");
    }
}

#[test]
fn single_seed_batch_has_zero_sd() {
    let dir = tempfile::tempdir().unwrap();
    let scen = small(dir.path());
    let out = run_batch(&BatchSpec {
        seeds: vec![1],
        out_dir: Some(dir.path().join("o")),
        ..BatchSpec::default_grid(&scen)
    })
    .unwrap();
    for s in &out.summary {
        for st in &s.stats {
            if let Some(sd) = st.sd {
                assert_eq!(sd, 0.0);
            }
        }
    }
}

#[test]
fn failing_cell_does_not_stop_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let scen = small(dir.path());
    let out = run_batch(&BatchSpec {
        protocols: vec!["epidemic".into(), "nosuchrouter".into()],
        seeds: vec![1, 2],
        out_dir: Some(dir.path().join("o")),
        ..BatchSpec::default_grid(&scen)
    })
    .unwrap();
    assert_eq!(out.reports.len(), 2);
    assert_eq!(out.failures.len(), 2);
    assert!(out.failures.iter().all(|f| f.protocol == "nosuchrouter"));
}
