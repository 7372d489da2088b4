//! Road network: WKT ingestion, graph construction and shortest paths.

mod graph;
mod wkt;

pub use graph::{build_graph, RoadGraph, ShortestPath, VertexId, SNAP_TOLERANCE};
pub use wkt::{parse_wkt, to_wkt, Polyline};

use thiserror::Error;

/// Planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Point `t` of the way from `self` to `other`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("WKT parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("road graph is empty")]
    EmptyGraph,
    #[error("vertex {dst} is unreachable from vertex {src}")]
    Unreachable { src: VertexId, dst: VertexId },
    #[error("vertex id {0} out of range")]
    BadVertex(VertexId),
    #[error("cannot read map file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Reads and builds a road graph from a WKT file.
pub fn load_map(path: &std::path::Path) -> Result<RoadGraph, MapError> {
    let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })?;
    build_graph(&parse_wkt(&text)?)
}
