use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MAP: &str = "LINESTRING (0 0, 100 0, 200 0, 300 0)
LINESTRING (0 100, 100 100, 200 100, 300 100)
LINESTRING (0 0, 0 100)
LINESTRING (100 0, 100 100)
LINESTRING (300 0, 300 100)
";

const SCEN: &str = "Scenario.name = tiny
Scenario.endTime = 120
Scenario.updateInterval = 0.1
Scenario.nrofHostGroups = 2
MovementModel.rngSeed = 1
MapBasedMovement.mapFile1 = map.wkt
btInterface.transmitSpeed = 250k
btInterface.transmitRange = 30
Group.router = EpidemicRouter
Group.interface1 = btInterface
Group1.nrofHosts = 20
Group1.movementModel = MapBasedMovement
Group1.speed = 5,10
Group1.bufferSize = 1M
Group1.msgTtl = 30
Group2.nrofHosts = 1
Group2.movementModel = StationaryMovement
Group2.bufferSize = 10M
Group2.nodeLocation = 200,100
Events.nrof = 1
Events1.interval = 5,10
Events1.size = 100k,200k
Events1.hosts = 0,20
Events1.tohosts = 20,21
Events1.prefix = T
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opportune"))
}

fn setup(scen: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("map.wkt"), MAP).unwrap();
    let path = dir.path().join("tiny.scen");
    std::fs::write(&path, scen).unwrap();
    (dir, path)
}

fn text(o: &Output) -> (String, String) {
    (
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn island_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hachijojima.scen")
}

#[test]
fn validate_prints_island_id_layout() {
    let o = bin().arg("validate").arg(island_scenario()).output().unwrap();
    let (out, err) = text(&o);
    assert!(o.status.success(), "{out}\n{err}");
    for range in ["0-1499", "1500-2249", "2250-2259", "2260-2267"] {
        assert!(out.contains(range), "missing {range} in\n{out}");
    }
}

#[test]
fn validate_rejects_overlapping_ranges() {
    let (_d, scen) = setup(SCEN);
    let o = bin()
        .args(["validate", scen.to_str().unwrap(), "--set", "Events1.tohosts=19,21"])
        .output()
        .unwrap();
    let (out, err) = text(&o);
    assert!(!o.status.success());
    assert!(out.contains("overlap"), "{out}\n{err}");
}

#[test]
fn validate_warns_on_distant_shelter() {
    let (_d, scen) = setup(SCEN);
    let o = bin()
        .args(["validate", scen.to_str().unwrap(), "--set", "Group2.nodeLocation=200,400"])
        .output()
        .unwrap();
    let (out, _) = text(&o);
    assert!(o.status.success());
    assert!(out.contains("warning: Group2[0]") && out.contains("300.0 m"), "{out}");
}

#[test]
fn missing_map_fails_with_path() {
    let (_d, scen) = setup(&SCEN.replace("map.wkt", "nowhere.wkt"));
    let o = bin().args(["run", scen.to_str().unwrap()]).output().unwrap();
    let (_, err) = text(&o);
    assert!(!o.status.success());
    assert!(err.contains("nowhere.wkt"), "{err}");
}

#[test]
fn malformed_override_is_rejected() {
    let (_d, scen) = setup(SCEN);
    let o = bin().args(["run", scen.to_str().unwrap(), "--set", "novalue"]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn run_writes_reports_and_honours_seed() {
    let (d, scen) = setup(SCEN);
    let out = d.path().join("out");
    let o = bin()
        .args(["run", scen.to_str().unwrap(), "--set", "MovementModel.rngSeed=3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    let (stdout, err) = text(&o);
    assert!(o.status.success(), "{stdout}\n{err}");
    assert!(stdout.contains("seed 3"), "{stdout}");
    for f in ["runs.csv", "summary.csv", "deliveries.csv", "plot_delivery_prob.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.lines().nth(1).unwrap().starts_with("EpidemicRouter,3,"), "{runs}");
}

#[test]
fn batch_runs_grid_and_is_worker_invariant() {
    let (d, scen) = setup(SCEN);
    let mut files = Vec::new();
    for jobs in ["1", "3"] {
        let out = d.path().join(format!("b{jobs}"));
        let o = bin()
            .args(["batch", scen.to_str().unwrap(), "--seeds", "1,2", "--protocols", "epidemic,prophet"])
            .args(["--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        let (stdout, err) = text(&o);
        assert!(o.status.success(), "{stdout}\n{err}");
        files.push(std::fs::read(out.join("runs.csv")).unwrap());
        let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3, "{summary}");
    }
    assert_eq!(files[0], files[1]);
    let runs = String::from_utf8(files.remove(0)).unwrap();
    assert_eq!(runs.lines().count(), 5);
}

#[test]
fn batch_with_unknown_protocol_fails_after_other_cells() {
    let (d, scen) = setup(SCEN);
    let out = d.path().join("o");
    let o = bin()
        .args(["batch", scen.to_str().unwrap(), "--seeds", "1", "--protocols", "epidemic,bogus", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    let (_, err) = text(&o);
    assert!(!o.status.success());
    assert!(err.contains("bogus"), "{err}");
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2);
}
