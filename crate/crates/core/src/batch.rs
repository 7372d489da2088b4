//! Protocol × seed sweeps and scenario validation.

use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{load_config, ConfigError, ScenarioConfig};
use crate::engine::{self, EngineError};
use crate::map::{load_map, Point, RoadGraph};
use crate::mobility::{MovementRegistry, MovementSpec};
use crate::report::{aggregate, write_outputs, ProtocolSummary, ReportError, RunMetrics, RunReport};
use crate::routing::RouterRegistry;

/// Shelter snaps further than this from their configured point are flagged.
pub const SNAP_WARN_DISTANCE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid batch: {0}")]
    Spec(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl From<ConfigError> for BatchError {
    fn from(e: ConfigError) -> Self {
        BatchError::Engine(e.into())
    }
}

#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub scenario: PathBuf,
    pub overrides: Vec<(String, String)>,
    /// Router names or aliases (`epidemic`, `prophet`).
    pub protocols: Vec<String>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
}

impl BatchSpec {
    /// Both protocols over seeds 1–5.
    pub fn default_grid(scenario: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.into(),
            overrides: Vec::new(),
            protocols: vec!["epidemic".into(), "prophet".into()],
            seeds: (1..=5).collect(),
            jobs: 1,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), BatchError> {
        if self.protocols.is_empty() {
            return Err(BatchError::Spec("no protocols given".into()));
        }
        if self.seeds.is_empty() {
            return Err(BatchError::Spec("no seeds given".into()));
        }
        if self.jobs == 0 {
            return Err(BatchError::Spec("jobs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct CellFailure {
    pub protocol: String,
    pub seed: u64,
    pub error: EngineError,
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// Successful runs in grid order (protocol-major, then seed).
    pub reports: Vec<RunReport>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<ProtocolSummary>,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn run_cell(base: &ScenarioConfig, graph: &RoadGraph, protocol: &str, seed: u64) -> Result<RunReport, EngineError> {
    let mut cfg = base.clone();
    let router = RouterRegistry::default().resolve(protocol)?;
    cfg.set_router(router);
    cfg.rng_seed = seed;
    let started = std::time::Instant::now();
    let report = engine::run(&cfg, graph)?;
    info!(
        "{} seed {}: created {} delivered {} relayed {} ({:.1}s)",
        report.protocol,
        seed,
        report.n_created,
        report.n_delivered,
        report.n_relayed,
        started.elapsed().as_secs_f64()
    );
    Ok(report)
}

/// Runs every (protocol, seed) cell on `graph` and aggregates. Cells fail
/// independently; results come back in grid order whatever the worker count.
pub fn run_grid(
    base: &ScenarioConfig,
    graph: &RoadGraph,
    protocols: &[String],
    seeds: &[u64],
    jobs: usize,
) -> Result<(Vec<RunReport>, Vec<CellFailure>), BatchError> {
    let cells: Vec<(&str, u64)> = protocols
        .iter()
        .flat_map(|p| seeds.iter().map(move |&s| (p.as_str(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(p, s)| (p, s, run_cell(base, graph, p, s)))
            .collect()
    });
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (p, s, r) in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(error) => {
                warn!("{p} seed {s} failed: {error}");
                failures.push(CellFailure {
                    protocol: p.to_string(),
                    seed: s,
                    error,
                });
            }
        }
    }
    Ok((reports, failures))
}

/// Loads the scenario and map once, runs the grid, writes all report files.
pub fn run_batch(spec: &BatchSpec) -> Result<BatchOutcome, BatchError> {
    spec.validate()?;
    let base = load_config(&spec.scenario, &spec.overrides)?;
    let graph = load_map(&base.map_file).map_err(EngineError::from)?;
    let (reports, failures) = run_grid(&base, &graph, &spec.protocols, &spec.seeds, spec.jobs)?;
    let metrics: Vec<RunMetrics> = reports.iter().map(RunMetrics::from_report).collect();
    let summary = aggregate(&metrics);
    let out_dir = spec.out_dir.clone().unwrap_or_else(|| base.report_dir.clone());
    let files = write_outputs(&reports, &summary, &out_dir)?;
    Ok(BatchOutcome {
        reports,
        failures,
        summary,
        out_dir,
        files,
    })
}

/// Runs one scenario and writes its report files.
pub fn run_single(
    scenario: &Path,
    overrides: &[(String, String)],
    out_dir: Option<&Path>,
) -> Result<(RunReport, Vec<PathBuf>), BatchError> {
    let cfg = load_config(scenario, overrides)?;
    let graph = load_map(&cfg.map_file).map_err(EngineError::from)?;
    let report = engine::run(&cfg, &graph)?;
    let summary = aggregate(&[RunMetrics::from_report(&report)]);
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.report_dir.clone());
    let files = write_outputs(std::slice::from_ref(&report), &summary, &dir)?;
    Ok((report, files))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLayout {
    pub group: String,
    pub first_id: usize,
    pub last_id: usize,
    pub movement: String,
    pub router: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShelterSnap {
    pub group: String,
    pub index: usize,
    pub configured: Point,
    pub snapped: Point,
    pub distance: f64,
}

#[derive(Debug, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub layout: Vec<GroupLayout>,
    pub snaps: Vec<ShelterSnap>,
    pub vertices: usize,
    pub edges: usize,
    pub components: usize,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.layout.is_empty() {
            writeln!(f, "{:<8} {:>11}  {:<20} router", "group", "node ids", "movement")?;
            for g in &self.layout {
                writeln!(
                    f,
                    "{:<8} {:>11}  {:<20} {}",
                    g.group,
                    format!("{}-{}", g.first_id, g.last_id),
                    g.movement,
                    g.router
                )?;
            }
        }
        if self.vertices > 0 {
            writeln!(
                f,
                "map: {} vertices, {} edges, {} component(s)",
                self.vertices, self.edges, self.components
            )?;
        }
        for s in &self.snaps {
            writeln!(
                f,
                "{}[{}] ({}, {}) -> ({:.1}, {:.1}), {:.1} m",
                s.group, s.index, s.configured.x, s.configured.y, s.snapped.x, s.snapped.y, s.distance
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        Ok(())
    }
}

/// Static checks: config, map, connectivity, shelter snapping, id ranges.
pub fn validate_scenario(path: &Path, overrides: &[(String, String)]) -> ValidationReport {
    let mut v = ValidationReport::default();
    let cfg = match load_config(path, overrides) {
        Ok(c) => c,
        Err(e) => {
            v.errors.push(e.to_string());
            return v;
        }
    };
    v.warnings.extend(cfg.warnings.iter().cloned());
    let movements = MovementRegistry::default();
    let routers = RouterRegistry::default();
    for g in &cfg.groups {
        v.layout.push(GroupLayout {
            group: g.name.clone(),
            first_id: g.first_id,
            last_id: g.first_id + g.count - 1,
            movement: g.movement.clone(),
            router: g.router.clone(),
        });
        let spec = MovementSpec {
            speed: g.speed,
            wait: g.wait,
            locations: g.locations.clone(),
        };
        if let Err(e) = movements.create(&g.movement, &spec) {
            v.errors.push(format!("{}: {e}", g.name));
        }
        if let Err(e) = routers.resolve(&g.router) {
            v.errors.push(format!("{}: {e}", g.name));
        }
    }
    for e in &cfg.events {
        for (what, range) in [("hosts", &e.hosts), ("tohosts", &e.to_hosts)] {
            let spans: Vec<&str> = cfg
                .groups
                .iter()
                .filter(|g| g.ids().start < range.end && range.start < g.ids().end)
                .map(|g| g.name.as_str())
                .collect();
            info!("{}.{what} {range:?} covers {}", e.name, spans.join(", "));
        }
        if let Some(g) = cfg
            .groups
            .iter()
            .find(|g| g.msg_ttl.is_none() && g.ids().start < e.hosts.end && e.hosts.start < g.ids().end)
        {
            v.warnings.push(format!("{} generates messages from {} which has no msgTtl", e.name, g.name));
        }
    }

    let graph = match load_map(&cfg.map_file) {
        Ok(g) => g,
        Err(e) => {
            v.errors.push(e.to_string());
            return v;
        }
    };
    v.vertices = graph.vertex_count();
    v.edges = graph.edge_count();
    v.components = graph.component_count();
    if v.components > 1 {
        v.warnings.push(format!(
            "road graph has {} connected components; mobile hosts use the largest ({} of {} vertices)",
            v.components,
            graph.component(graph.largest_component()).len(),
            v.vertices
        ));
    }
    for g in &cfg.groups {
        for (i, &p) in g.locations.iter().enumerate() {
            let Ok(vid) = graph.nearest_vertex(p) else { continue };
            let snapped = graph.vertex(vid);
            let distance = p.dist(snapped);
            if distance > SNAP_WARN_DISTANCE {
                v.warnings.push(format!(
                    "{}[{i}] at ({}, {}) is {distance:.1} m from the nearest road vertex",
                    g.name, p.x, p.y
                ));
            }
            v.snaps.push(ShelterSnap {
                group: g.name.clone(),
                index: i,
                configured: p,
                snapped,
                distance,
            });
        }
    }
    v
}
