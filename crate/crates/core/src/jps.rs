//! Jump point search on an egocentric occupancy grid.
//!
//! Diagonal moves are allowed only when both adjacent axial cells are free,
//! so paths never clip obstacle corners. Costs are tracked exactly as
//! [`OctileCost`] pairs, which makes planner comparisons bit-exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::scene::{OctileCost, Point2D, Pose};

pub const EGO_GRID_SIZE: usize = 50;
pub const DEFAULT_CELL_SIZE: f64 = 0.12;

pub type Cell = (usize, usize);

/// Boolean obstacle grid. Egocentric grids place the agent at the centre
/// cell with columns running along its heading and rows to its left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    blocked: Vec<bool>,
    origin: Pose,
}

impl EgoGrid {
    /// Empty 50×50 egocentric grid around `origin`.
    pub fn new(origin: Pose, cell_size: f64) -> Self {
        Self::with_size(EGO_GRID_SIZE, EGO_GRID_SIZE, cell_size, origin)
    }

    /// Grid of arbitrary size, mainly for planner tests.
    pub fn with_size(width: usize, height: usize, cell_size: f64, origin: Pose) -> Self {
        Self {
            width,
            height,
            cell_size,
            blocked: vec![false; width * height],
            origin,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Pose {
        self.origin
    }

    pub fn center(&self) -> Cell {
        (self.width / 2, self.height / 2)
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[c.1 * self.width + c.0]
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        self.blocked[c.1 * self.width + c.0] = blocked;
    }

    fn free(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && !self.blocked[y as usize * self.width + x as usize]
    }

    fn cell_at_offset(&self, dx: i64, dy: i64) -> Option<Cell> {
        let (cx, cy) = self.center();
        let (x, y) = (cx as i64 + dx, cy as i64 + dy);
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height).then_some((x as usize, y as usize))
    }

    /// Cell containing a world point, if it lies on the grid.
    pub fn cell_of(&self, p: Point2D) -> Option<Cell> {
        let (fx, fy) = self.to_ego(p);
        self.cell_at_offset(
            (fx / self.cell_size).round() as i64,
            (fy / self.cell_size).round() as i64,
        )
    }

    fn to_ego(&self, p: Point2D) -> (f64, f64) {
        let (s, c) = self.origin.heading().to_radians().sin_cos();
        let (dx, dy) = (p.x - self.origin.x, p.y - self.origin.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// World position of a cell centre.
    pub fn world_of(&self, cell: Cell) -> Point2D {
        let (cx, cy) = self.center();
        let fx = (cell.0 as f64 - cx as f64) * self.cell_size;
        let fy = (cell.1 as f64 - cy as f64) * self.cell_size;
        let (s, c) = self.origin.heading().to_radians().sin_cos();
        Point2D::new(self.origin.x + c * fx - s * fy, self.origin.y + s * fx + c * fy)
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    /// One text line per row, top row first; `#` marks blocked cells.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                out.push(if self.is_blocked((x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

/// Projects a full 360° horizontal scan into an egocentric grid: each hit
/// marks its cell, then every marked cell is dilated by one cell. With a
/// noise seed each hit is jittered by up to one cell per axis first.
pub fn project_to_grid(scan: &[f64], max_range: f64, pose: &Pose, cell_size: f64, noise_seed: Option<u64>) -> EgoGrid {
    let mut grid = EgoGrid::new(*pose, cell_size);
    if scan.is_empty() {
        return grid;
    }
    let step = 360.0 / scan.len() as f64;
    let mut rng = noise_seed.map(SplitMix64::new);
    let mut hits = Vec::new();
    for (i, &r) in scan.iter().enumerate() {
        if r >= max_range {
            continue;
        }
        let (s, c) = (i as f64 * step).to_radians().sin_cos();
        let mut dx = (r * c / cell_size).round() as i64;
        let mut dy = (r * s / cell_size).round() as i64;
        if let Some(rng) = rng.as_mut() {
            dx += (rng.next_f64() * 3.0).floor() as i64 - 1;
            dy += (rng.next_f64() * 3.0).floor() as i64 - 1;
        }
        hits.push((dx, dy));
    }
    for (dx, dy) in hits {
        for ox in -1..=1 {
            for oy in -1..=1 {
                if let Some(c) = grid.cell_at_offset(dx + ox, dy + oy) {
                    grid.set_blocked(c, true);
                }
            }
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PlanError {
    #[error("goal cell is blocked or unreachable")]
    GoalUnreachable,
    #[error("start cell is blocked or off the grid")]
    StartInvalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    /// Every cell along the path, start and goal included.
    pub cells: Vec<Cell>,
    /// Cost in cell units.
    pub cost: OctileCost,
    /// Nodes taken off the open list while planning.
    pub expanded: usize,
}

impl GridPath {
    pub fn cost_cells(&self) -> f64 {
        self.cost.value()
    }

    pub fn cost_m(&self, cell_size: f64) -> f64 {
        self.cost.value() * cell_size
    }
}

fn octile(a: Cell, b: Cell) -> OctileCost {
    let dx = a.0.abs_diff(b.0) as u32;
    let dy = a.1.abs_diff(b.1) as u32;
    OctileCost::ZERO.add(dx.max(dy) - dx.min(dy), dx.min(dy))
}

fn check_endpoints(grid: &EgoGrid, start: Cell, goal: Cell) -> Result<(), PlanError> {
    let inside = |c: Cell| c.0 < grid.width && c.1 < grid.height;
    if !inside(start) || grid.is_blocked(start) {
        return Err(PlanError::StartInvalid);
    }
    if !inside(goal) || grid.is_blocked(goal) {
        return Err(PlanError::GoalUnreachable);
    }
    Ok(())
}

const DIRS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

fn step_allowed(grid: &EgoGrid, x: i64, y: i64, dx: i64, dy: i64) -> bool {
    grid.free(x + dx, y + dy) && (dx == 0 || dy == 0 || (grid.free(x + dx, y) && grid.free(x, y + dy)))
}

/// Jump point search from `start` to `goal`.
pub fn plan(grid: &EgoGrid, start: Cell, goal: Cell) -> Result<GridPath, PlanError> {
    check_endpoints(grid, start, goal)?;
    let search = Search { grid, goal };
    let jump_points = search.run(start)?;
    let mut cells = vec![jump_points[0].0];
    let mut cost = OctileCost::ZERO;
    for pair in jump_points.windows(2) {
        let (a, b) = (pair[0].0, pair[1].0);
        let dx = (b.0 as i64 - a.0 as i64).signum();
        let dy = (b.1 as i64 - a.1 as i64).signum();
        let mut c = a;
        while c != b {
            c = ((c.0 as i64 + dx) as usize, (c.1 as i64 + dy) as usize);
            cost = cost.add_step(dx != 0 && dy != 0);
            cells.push(c);
        }
    }
    Ok(GridPath {
        cells,
        cost,
        expanded: jump_points[0].1,
    })
}

struct Search<'a> {
    grid: &'a EgoGrid,
    goal: Cell,
}

impl Search<'_> {
    /// A* over jump points. Returns the jump-point chain; the expansion
    /// count rides along in the first entry.
    fn run(&self, start: Cell) -> Result<Vec<(Cell, usize)>, PlanError> {
        let g = self.grid;
        let n = g.width * g.height;
        let idx = |c: Cell| c.1 * g.width + c.0;
        let mut best: Vec<Option<OctileCost>> = vec![None; n];
        let mut parent: Vec<Option<Cell>> = vec![None; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        best[idx(start)] = Some(OctileCost::ZERO);
        open.push(Reverse((octile(start, self.goal), OctileCost::ZERO, start)));
        let mut expanded = 0;
        while let Some(Reverse((_, cost, cell))) = open.pop() {
            if closed[idx(cell)] {
                continue;
            }
            closed[idx(cell)] = true;
            expanded += 1;
            if cell == self.goal {
                let mut chain = vec![(cell, 0)];
                while let Some(p) = parent[idx(chain.last().unwrap().0)] {
                    chain.push((p, 0));
                }
                chain.reverse();
                chain[0].1 = expanded;
                return Ok(chain);
            }
            for next in self.neighbors(cell, parent[idx(cell)]) {
                let Some(jp) = self.jump(next, cell) else { continue };
                if closed[idx(jp)] {
                    continue;
                }
                let c = cost + octile(cell, jp);
                if best[idx(jp)].is_none_or(|b| c < b) {
                    best[idx(jp)] = Some(c);
                    parent[idx(jp)] = Some(cell);
                    open.push(Reverse((c + octile(jp, self.goal), c, jp)));
                }
            }
        }
        Err(PlanError::GoalUnreachable)
    }

    /// Pruned successors of `cell` given the direction it was reached from.
    fn neighbors(&self, cell: Cell, parent: Option<Cell>) -> Vec<(i64, i64)> {
        let g = self.grid;
        let (x, y) = (cell.0 as i64, cell.1 as i64);
        let mut out = Vec::with_capacity(8);
        let Some(p) = parent else {
            for (dx, dy) in DIRS {
                if step_allowed(g, x, y, dx, dy) {
                    out.push((x + dx, y + dy));
                }
            }
            return out;
        };
        let dx = (x - p.0 as i64).signum();
        let dy = (y - p.1 as i64).signum();
        if dx != 0 && dy != 0 {
            let (vert, horiz) = (g.free(x, y + dy), g.free(x + dx, y));
            if vert {
                out.push((x, y + dy));
            }
            if horiz {
                out.push((x + dx, y));
            }
            if vert && horiz {
                out.push((x + dx, y + dy));
            }
        } else if dx != 0 {
            let (next, up, down) = (g.free(x + dx, y), g.free(x, y + 1), g.free(x, y - 1));
            if next {
                out.push((x + dx, y));
                if up {
                    out.push((x + dx, y + 1));
                }
                if down {
                    out.push((x + dx, y - 1));
                }
            }
            if up {
                out.push((x, y + 1));
            }
            if down {
                out.push((x, y - 1));
            }
        } else {
            let (next, right, left) = (g.free(x, y + dy), g.free(x + 1, y), g.free(x - 1, y));
            if next {
                out.push((x, y + dy));
                if right {
                    out.push((x + 1, y + dy));
                }
                if left {
                    out.push((x - 1, y + dy));
                }
            }
            if right {
                out.push((x + 1, y));
            }
            if left {
                out.push((x - 1, y));
            }
        }
        out
    }

    /// Walks from `from` toward `to` until a jump point, the goal, or an
    /// obstacle.
    fn jump(&self, to: (i64, i64), from: Cell) -> Option<Cell> {
        let g = self.grid;
        let (mut x, mut y) = to;
        let (mut px, mut py) = (from.0 as i64, from.1 as i64);
        loop {
            let (dx, dy) = (x - px, y - py);
            if !g.free(x, y) {
                return None;
            }
            let here = (x as usize, y as usize);
            if here == self.goal {
                return Some(here);
            }
            if dx != 0 && dy != 0 {
                if self.jump((x + dx, y), here).is_some() || self.jump((x, y + dy), here).is_some() {
                    return Some(here);
                }
            } else if dx != 0 {
                if (g.free(x, y - 1) && !g.free(x - dx, y - 1)) || (g.free(x, y + 1) && !g.free(x - dx, y + 1)) {
                    return Some(here);
                }
            } else if (g.free(x - 1, y) && !g.free(x - 1, y - dy)) || (g.free(x + 1, y) && !g.free(x + 1, y - dy)) {
                return Some(here);
            }
            if !(g.free(x + dx, y) && g.free(x, y + dy)) {
                return None;
            }
            (px, py) = (x, y);
            (x, y) = (x + dx, y + dy);
        }
    }
}

/// Plain Dijkstra over all eight moves, with the same corner rule. Used as
/// the reference planner and for expansion-count comparisons.
pub fn dijkstra(grid: &EgoGrid, start: Cell, goal: Cell) -> Result<GridPath, PlanError> {
    check_endpoints(grid, start, goal)?;
    let idx = |c: Cell| c.1 * grid.width + c.0;
    let n = grid.width * grid.height;
    let mut best: Vec<Option<OctileCost>> = vec![None; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    best[idx(start)] = Some(OctileCost::ZERO);
    open.push(Reverse((OctileCost::ZERO, start)));
    let mut expanded = 0;
    while let Some(Reverse((cost, cell))) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        expanded += 1;
        if cell == goal {
            let mut cells = vec![cell];
            while let Some(p) = parent[idx(*cells.last().unwrap())] {
                cells.push(p);
            }
            cells.reverse();
            return Ok(GridPath { cells, cost, expanded });
        }
        let (x, y) = (cell.0 as i64, cell.1 as i64);
        for (dx, dy) in DIRS {
            if !step_allowed(grid, x, y, dx, dy) {
                continue;
            }
            let next = ((x + dx) as usize, (y + dy) as usize);
            let c = cost.add_step(dx != 0 && dy != 0);
            if best[idx(next)].is_none_or(|b| c < b) {
                best[idx(next)] = Some(c);
                parent[idx(next)] = Some(cell);
                open.push(Reverse((c, next)));
            }
        }
    }
    Err(PlanError::GoalUnreachable)
}
