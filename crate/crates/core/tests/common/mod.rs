//! Reference implementations shared by the oracle and acceptance suites.
#![allow(dead_code)]

use rand::Rng;
use safenav::graph::{NavGraph, TrainingSample};
use safenav::heatmap::Waypoint;
use safenav::jps::{Cell, EgoGrid};
use safenav::rng::SplitMix64;
use safenav::scene::{OccupancyGrid, OctileCost, Point2D, Pose, Scene};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn value(c: (u32, u32)) -> f64 {
    c.0 as f64 + c.1 as f64 * SQRT_2
}

/// Bellman-Ford style relaxation to a fixpoint over 8-connected free cells
/// with no corner cutting. Costs are (axial, diagonal) step counts.
pub fn brute_field(free: &dyn Fn(i64, i64) -> bool, w: usize, h: usize, goal: (usize, usize)) -> Vec<Option<(u32, u32)>> {
    let mut cost: Vec<Option<(u32, u32)>> = vec![None; w * h];
    if !free(goal.0 as i64, goal.1 as i64) {
        return cost;
    }
    cost[goal.1 * w + goal.0] = Some((0, 0));
    loop {
        let mut changed = false;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if !free(x, y) {
                    continue;
                }
                for dx in -1..=1i64 {
                    for dy in -1..=1i64 {
                        if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                            continue;
                        }
                        let diag = dx != 0 && dy != 0;
                        if diag && !(free(x + dx, y) && free(x, y + dy)) {
                            continue;
                        }
                        let Some(c) = cost[((y + dy) as usize) * w + (x + dx) as usize] else {
                            continue;
                        };
                        let cand = if diag { (c.0, c.1 + 1) } else { (c.0 + 1, c.1) };
                        let slot = &mut cost[y as usize * w + x as usize];
                        if slot.is_none_or(|cur| value(cand) < value(cur)) {
                            *slot = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return cost;
        }
    }
}

/// Plain O(V²) Dijkstra over the ego grid.
pub fn reference_cost(grid: &EgoGrid, start: Cell, goal: Cell) -> Option<(u32, u32)> {
    let (w, h) = (grid.width(), grid.height());
    let free = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && !grid.is_blocked((x as usize, y as usize));
    if !free(start.0 as i64, start.1 as i64) || !free(goal.0 as i64, goal.1 as i64) {
        return None;
    }
    let mut dist: Vec<Option<(u32, u32)>> = vec![None; w * h];
    let mut done = vec![false; w * h];
    dist[start.1 * w + start.0] = Some((0, 0));
    loop {
        let mut best: Option<usize> = None;
        for i in 0..w * h {
            if let (false, Some(d)) = (done[i], dist[i]) {
                if best.is_none_or(|b| value(d) < value(dist[b].unwrap())) {
                    best = Some(i);
                }
            }
        }
        let Some(u) = best else { return None };
        if u == goal.1 * w + goal.0 {
            return dist[u];
        }
        done[u] = true;
        let (x, y) = ((u % w) as i64, (u / w) as i64);
        let d = dist[u].unwrap();
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                if (dx, dy) == (0, 0) || !free(x + dx, y + dy) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(free(x + dx, y) && free(x, y + dy)) {
                    continue;
                }
                let cand = if diag { (d.0, d.1 + 1) } else { (d.0 + 1, d.1) };
                let v = (y + dy) as usize * w + (x + dx) as usize;
                if dist[v].is_none_or(|cur| value(cand) < value(cur)) {
                    dist[v] = Some(cand);
                }
            }
        }
    }
}

pub fn random_grid(rng: &mut SplitMix64, density: f64) -> EgoGrid {
    let mut g = EgoGrid::with_size(50, 50, 0.12, Pose::new(0.0, 0.0, 0.0));
    for y in 0..50 {
        for x in 0..50 {
            if rng.random_bool(density) {
                g.set_blocked((x, y), true);
            }
        }
    }
    g
}

pub fn assert_valid_path(grid: &EgoGrid, path: &[Cell], start: Cell, goal: Cell) -> OctileCost {
    assert_eq!(path.first(), Some(&start));
    assert_eq!(path.last(), Some(&goal));
    let mut cost = OctileCost::ZERO;
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dx = b.0 as i64 - a.0 as i64;
        let dy = b.1 as i64 - a.1 as i64;
        assert!(dx.abs() <= 1 && dy.abs() <= 1 && (dx, dy) != (0, 0), "{a:?} -> {b:?}");
        assert!(!grid.is_blocked(b));
        if dx != 0 && dy != 0 {
            assert!(!grid.is_blocked((b.0, a.1)) && !grid.is_blocked((a.0, b.1)), "corner cut at {a:?}");
        }
        cost = cost.add_step(dx != 0 && dy != 0);
    }
    cost
}

pub fn random_sample(rng: &mut SplitMix64, scene: &Scene) -> TrainingSample {
    loop {
        let mut g = NavGraph::new();
        for step in 0..rng.random_range(1..4) {
            let pose = Pose::new(rng.random_range(1.0..9.0), rng.random_range(1.0..9.0), rng.random_range(0.0..360.0));
            let waypoints: Vec<Waypoint> = (0..rng.random_range(2..7))
                .map(|_| Waypoint {
                    heading_bin: 0,
                    range_bin: 0,
                    position: Point2D::new(rng.random_range(0.3..9.7), rng.random_range(0.3..9.7)),
                    score: 0.0,
                })
                .collect();
            g.update(&pose, &waypoints, step * 10);
        }
        if let Some(s) = TrainingSample::from_graph(&g, scene) {
            return s;
        }
    }
}

pub fn open_scene() -> Scene {
    let mut grid = OccupancyGrid::new(200, 200, 0.05).unwrap();
    grid.add_border(2);
    grid.fill_rect(Point2D::new(4.0, 2.0), Point2D::new(4.3, 8.0), None);
    Scene::new("grad", grid, Pose::new(1.0, 1.0, 0.0), Point2D::new(8.0, 5.0)).unwrap()
}
