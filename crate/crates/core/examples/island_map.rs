//! Generates the synthetic island road network in `data/hachijojima.wkt`.
//!
//! ```text
//! cargo run -p opportune --example island_map -- data/hachijojima.wkt
//! ```
//!
//! A jittered street grid clipped to an irregular coastline. Each shelter
//! sits on its own short spur, off the main network, with one junction
//! placed `ACCESS_OFFSET` metres away so passing hosts come within radio
//! range of it.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use opportune::map::{build_graph, to_wkt, Point, Polyline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const CENTER: (f64, f64) = (4900.0, 4000.0);
const RADII: (f64, f64) = (4800.0, 3800.0);
const SPACING: f64 = 190.0;
const JITTER: f64 = 35.0;
const DROP_EDGE: f64 = 0.22;
const CLEARANCE: f64 = 45.0;
const ACCESS_OFFSET: f64 = 24.0;
const MIN_PASS: f64 = 20.0;
const ACCESS_LINKS: usize = 1;

const SHELTERS: [(f64, f64); 8] = [
    (5622.0, 4593.0),
    (5683.0, 4270.0),
    (5565.0, 5385.0),
    (4981.0, 5320.0),
    (4824.0, 3848.0),
    (4474.0, 3751.0),
    (3871.0, 2854.0),
    (4427.0, 2598.0),
];

fn inside_island(p: Point) -> bool {
    let dx = (p.x - CENTER.0) / RADII.0;
    let dy = (p.y - CENTER.1) / RADII.1;
    let theta = dy.atan2(dx);
    let coast = 1.0 + 0.08 * (3.0 * theta).sin() + 0.05 * (5.0 * theta + 1.0).cos();
    (dx * dx + dy * dy).sqrt() < coast
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0)
    };
    p.dist(a.lerp(b, t))
}

fn clear_of_shelters(shelters: &[Point], a: Point, b: Point, min: f64) -> bool {
    shelters.iter().all(|&s| seg_dist(s, a, b) >= min)
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data/hachijojima.wkt".into());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shelters: Vec<Point> = SHELTERS.iter().map(|&(x, y)| Point::new(x, y)).collect();

    let nx = (2.0 * RADII.0 * 1.2 / SPACING) as i64;
    let ny = (2.0 * RADII.1 * 1.2 / SPACING) as i64;
    let x0 = CENTER.0 - nx as f64 * SPACING / 2.0;
    let y0 = CENTER.1 - ny as f64 * SPACING / 2.0;
    let mut grid: HashMap<(i64, i64), Point> = HashMap::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point::new(
                x0 + i as f64 * SPACING + rng.gen_range(-JITTER..=JITTER),
                y0 + j as f64 * SPACING + rng.gen_range(-JITTER..=JITTER),
            );
            if inside_island(p) && shelters.iter().all(|&s| s.dist(p) > CLEARANCE) {
                grid.insert((i, j), p);
            }
        }
    }

    let mut edges: Vec<(Point, Point)> = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let Some(&a) = grid.get(&(i, j)) else { continue };
            for (di, dj) in [(1, 0), (0, 1)] {
                let Some(&b) = grid.get(&(i + di, j + dj)) else { continue };
                if rng.gen_bool(DROP_EDGE) {
                    continue;
                }
                if clear_of_shelters(&shelters, a, b, CLEARANCE) {
                    edges.push((a, b));
                }
            }
        }
    }

    // Keep only the largest connected piece of the grid.
    let polylines: Vec<Polyline> = edges.iter().map(|&(a, b)| vec![a, b]).collect();
    let g = build_graph(&polylines).expect("grid graph");
    let main = g.largest_component();
    let keep: BTreeSet<usize> = g.component(main).iter().copied().collect();
    let mut roads: Vec<Polyline> = g
        .edges()
        .iter()
        .filter(|(u, _, _)| keep.contains(u))
        .map(|&(u, v, _)| vec![g.vertex(u), g.vertex(v)])
        .collect();
    let main_vertices: Vec<Point> = keep.iter().map(|&v| g.vertex(v)).collect();

    for &s in &shelters {
        let mut near: Vec<Point> = main_vertices.clone();
        near.sort_by(|a, b| s.dist(*a).total_cmp(&s.dist(*b)));
        let first = near[0];
        let d = s.dist(first);
        let n = ((first.x - s.x) / d, (first.y - s.y) / d);
        let access = Point::new(s.x + n.0 * ACCESS_OFFSET, s.y + n.1 * ACCESS_OFFSET);
        let mut linked = 0;
        for &v in near.iter().take(6) {
            if linked == ACCESS_LINKS {
                break;
            }
            if clear_of_shelters(&shelters, access, v, MIN_PASS) {
                roads.push(vec![access, v]);
                linked += 1;
            }
        }
        assert!(linked > 0, "shelter at ({}, {}) has no access road", s.x, s.y);
        let angle = rng.gen_range(0.0..2.0 * PI);
        roads.push(vec![s, Point::new(s.x + 3.0 * angle.cos(), s.y + 3.0 * angle.sin())]);
    }

    let g = build_graph(&roads).expect("final graph");
    let total: f64 = g.edges().iter().map(|e| e.2).sum();
    eprintln!(
        "{} vertices, {} edges, {:.1} km of road, {} components",
        g.vertex_count(),
        g.edge_count(),
        total / 1000.0,
        g.component_count()
    );
    std::fs::write(&out, to_wkt(&roads)).expect("write map");
}
