#![allow(dead_code)]

use std::path::{Path, PathBuf};

use opportune::config::{ScenarioConfig, Settings};
use opportune::map::{build_graph, parse_wkt, RoadGraph};

pub fn graph(wkt: &str) -> RoadGraph {
    build_graph(&parse_wkt(wkt).unwrap()).unwrap()
}

pub fn config(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_settings(Settings::parse(text).unwrap(), Path::new(".")).unwrap()
}

/// Writes `map.wkt` and `test.scen` into `dir`, returning the scenario path.
pub fn write_scenario(dir: &Path, scen: &str, wkt: &str) -> PathBuf {
    std::fs::write(dir.join("map.wkt"), wkt).unwrap();
    let path = dir.join("test.scen");
    std::fs::write(&path, scen).unwrap();
    path
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn island_scenario() -> PathBuf {
    workspace_root().join("scenarios/hachijojima.scen")
}

/// Three stationary hosts on a straight road, A at 0, B at 20, C at 40 m.
pub const LINE_WKT: &str = "LINESTRING (0 0, 20 0, 40 0)\n";

pub fn line_scenario(range: f64) -> String {
    format!(
        "Scenario.name = line
Scenario.endTime = 60
Scenario.updateInterval = 0.1
Scenario.nrofHostGroups = 1
MovementModel.rngSeed = 1
MapBasedMovement.mapFile1 = map.wkt
btInterface.transmitSpeed = 250k
btInterface.transmitRange = {range}
Group.router = EpidemicRouter
Group.interface1 = btInterface
Group1.nrofHosts = 3
Group1.movementModel = StationaryMovement
Group1.bufferSize = 5M
Group1.msgTtl = 30
Group1.nodeLocation = 0,0
Group1.nodeLocation = 20,0
Group1.nodeLocation = 40,0
Events.nrof = 1
Events1.interval = 50,50
Events1.size = 100k,100k
Events1.hosts = 0,1
Events1.tohosts = 2,3
Events1.prefix = M
"
    )
}

/// Road grid of 6 x 6 vertices, 100 m apart.
pub fn grid_graph() -> RoadGraph {
    graph(&grid_wkt())
}

pub fn grid_wkt() -> String {
    let mut out = String::new();
    for j in 0..6 {
        let row: Vec<String> = (0..6).map(|i| format!("{} {}", i * 100, j * 100)).collect();
        out.push_str(&format!("LINESTRING ({})\n", row.join(", ")));
        let col: Vec<String> = (0..6).map(|i| format!("{} {}", j * 100, i * 100)).collect();
        out.push_str(&format!("LINESTRING ({})\n", col.join(", ")));
    }
    out
}

/// 50 hosts (40 walkers, 8 cars, 2 shelters) on the grid for 300 s.
pub fn small_scenario(router: &str, seed: u64) -> String {
    format!(
        "Scenario.name = small
Scenario.endTime = 300
Scenario.updateInterval = 0.1
Scenario.nrofHostGroups = 3
MovementModel.rngSeed = {seed}
MapBasedMovement.mapFile1 = map.wkt
btInterface.transmitSpeed = 250k
btInterface.transmitRange = 30
Group.router = {router}
Group.interface1 = btInterface
Group.msgTtl = 3
Group1.nrofHosts = 40
Group1.movementModel = MapBasedMovement
Group1.speed = 0.4,1.4
Group1.waitTime = 0,10
Group1.bufferSize = 1M
Group2.nrofHosts = 8
Group2.movementModel = MapBasedMovement
Group2.speed = 5,18
Group2.bufferSize = 2M
Group3.nrofHosts = 2
Group3.movementModel = StationaryMovement
Group3.bufferSize = 200M
Group3.nodeLocation = 110,190
Group3.nodeLocation = 400,400
Events.nrof = 1
Events1.interval = 5,10
Events1.size = 100k,500k
Events1.hosts = 0,48
Events1.tohosts = 48,50
Events1.prefix = S
"
    )
}
