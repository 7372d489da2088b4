use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use log::warn;

use super::{MapError, Point, Polyline};

pub type VertexId = usize;

/// Points closer than this are merged into one vertex.
pub const SNAP_TOLERANCE: f64 = 1e-6;

/// Undirected road graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    vertices: Vec<Point>,
    /// Sorted by neighbour id.
    adjacency: Vec<Vec<(VertexId, f64)>>,
    edges: Vec<(VertexId, VertexId, f64)>,
    component_of: Vec<usize>,
    components: Vec<Vec<VertexId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub vertices: Vec<VertexId>,
    pub length: f64,
}

/// Consecutive points become edges; coincident points merge; duplicate edges
/// collapse.
pub fn build_graph(polylines: &[Polyline]) -> Result<RoadGraph, MapError> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut index: HashMap<(i64, i64), Vec<VertexId>> = HashMap::new();
    let cell = |p: Point| {
        (
            (p.x / SNAP_TOLERANCE).floor() as i64,
            (p.y / SNAP_TOLERANCE).floor() as i64,
        )
    };
    let mut intern = |p: Point| -> VertexId {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = index.get(&(cx + dx, cy + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| vertices[id].dist(p) <= SNAP_TOLERANCE) {
                        return id;
                    }
                }
            }
        }
        let id = vertices.len();
        vertices.push(p);
        index.entry((cx, cy)).or_default().push(id);
        id
    };

    let mut edge_set: HashMap<(VertexId, VertexId), ()> = HashMap::new();
    let mut edges = Vec::new();
    for line in polylines {
        let ids: Vec<VertexId> = line.iter().map(|&p| intern(p)).collect();
        for w in ids.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            if a == b {
                continue;
            }
            if edge_set.insert((a, b), ()).is_none() {
                edges.push((a, b));
            }
        }
    }
    if vertices.is_empty() {
        return Err(MapError::EmptyGraph);
    }

    let mut adjacency = vec![Vec::new(); vertices.len()];
    let edges: Vec<_> = edges
        .into_iter()
        .map(|(a, b)| {
            let len = vertices[a].dist(vertices[b]);
            adjacency[a].push((b, len));
            adjacency[b].push((a, len));
            (a, b, len)
        })
        .collect();
    for adj in &mut adjacency {
        adj.sort_by_key(|&(v, _)| v);
    }

    let (component_of, components) = label_components(&adjacency);
    if components.len() > 1 {
        warn!(
            "road graph has {} connected components (largest {} of {} vertices)",
            components.len(),
            components.iter().map(Vec::len).max().unwrap_or(0),
            vertices.len()
        );
    }
    Ok(RoadGraph {
        vertices,
        adjacency,
        edges,
        component_of,
        components,
    })
}

fn label_components(adjacency: &[Vec<(VertexId, f64)>]) -> (Vec<usize>, Vec<Vec<VertexId>>) {
    let n = adjacency.len();
    let mut comp = vec![usize::MAX; n];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![];
        comp[start] = id;
        stack.push(start);
        while let Some(u) = stack.pop() {
            members.push(u);
            for &(v, _) in &adjacency[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    (comp, comps)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    v: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RoadGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v]
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_of(&self, v: VertexId) -> usize {
        self.component_of[v]
    }

    /// Sorted vertex ids of component `c`.
    pub fn component(&self, c: usize) -> &[VertexId] {
        &self.components[c]
    }

    /// Index of the component with the most vertices (lowest index on ties).
    pub fn largest_component(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.components.iter().enumerate() {
            if c.len() > self.components[best].len() {
                best = i;
            }
        }
        best
    }

    /// Vertex closest to `p`; ties go to the smallest id.
    pub fn nearest_vertex(&self, p: Point) -> Result<VertexId, MapError> {
        let mut best: Option<(f64, VertexId)> = None;
        for (i, &v) in self.vertices.iter().enumerate() {
            let d = v.dist_sq(p);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i).ok_or(MapError::EmptyGraph)
    }

    /// Minimum-length path from `src` to `dst`. Among equal-length paths the
    /// lexicographically smallest vertex sequence wins.
    pub fn shortest_path(&self, src: VertexId, dst: VertexId) -> Result<ShortestPath, MapError> {
        let n = self.vertices.len();
        for v in [src, dst] {
            if v >= n {
                return Err(MapError::BadVertex(v));
            }
        }
        if src == dst {
            return Ok(ShortestPath {
                vertices: vec![src],
                length: 0.0,
            });
        }
        if self.component_of[src] != self.component_of[dst] {
            return Err(MapError::Unreachable { src, dst });
        }

        // Distances *to* dst, settled until src is popped. Every vertex on a
        // shortest src→dst path is then settled.
        let mut dist = vec![f64::INFINITY; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[dst] = 0.0;
        heap.push(HeapItem { dist: 0.0, v: dst });
        while let Some(HeapItem { dist: d, v: u }) = heap.pop() {
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if u == src {
                break;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(HeapItem { dist: nd, v });
                }
            }
        }
        if !settled[src] {
            return Err(MapError::Unreachable { src, dst });
        }

        let total = dist[src];
        let eps = 1e-9 * total.max(1.0);
        let mut path = vec![src];
        let mut u = src;
        while u != dst {
            // adjacency is sorted, so the first match is the smallest id
            let next = self.adjacency[u]
                .iter()
                .find(|&&(v, w)| settled[v] && dist[v] < dist[u] && (w + dist[v] - dist[u]).abs() <= eps)
                .map(|&(v, _)| v)
                .expect("settled vertex on a shortest path has a successor");
            path.push(next);
            u = next;
        }
        let length = path
            .windows(2)
            .map(|w| self.vertices[w[0]].dist(self.vertices[w[1]]))
            .sum();
        Ok(ShortestPath {
            vertices: path,
            length,
        })
    }
}
