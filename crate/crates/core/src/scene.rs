//! World model: occupancy raster, agent kinematics, ray casting and the
//! geodesic distance field.
//!
//! Cell `(ix, iy)` covers `[ix·res, (ix+1)·res) × [iy·res, (iy+1)·res)` in
//! world meters. Headings are degrees counterclockwise from `+x`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: f64 = 0.05;
pub const DEFAULT_AGENT_RADIUS: f64 = 0.18;
pub const FORWARD_STEP_M: f64 = 0.25;
pub const TURN_STEP_DEG: f64 = 15.0;

/// Smallest distance a ray cast may report.
const MIN_RAY_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point at `range` meters along `angle_deg` from `self`.
    pub fn offset(&self, angle_deg: f64, range: f64) -> Point2D {
        let a = angle_deg.to_radians();
        Point2D::new(self.x + range * a.cos(), self.y + range * a.sin())
    }

    /// Bearing from `self` to `other` in degrees, normalised to `[0, 360)`.
    pub fn bearing_to(&self, other: &Point2D) -> f64 {
        normalize_heading((other.y - self.y).atan2(other.x - self.x).to_degrees())
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs.
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Signed smallest rotation from `from` to `to`, in `(-180, 180]`.
pub fn heading_difference(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_heading(heading_deg),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn position(&self) -> Point2D {
        Point2D::new(self.x, self.y)
    }

    pub fn rotated(&self, delta_deg: f64) -> Pose {
        Pose::new(self.x, self.y, self.heading + delta_deg)
    }

    /// Transforms an agent-frame polar offset into world coordinates.
    pub fn polar_to_world(&self, relative_angle_deg: f64, range: f64) -> Point2D {
        self.position().offset(self.heading + relative_angle_deg, range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Action::Forward => "FWD",
            Action::TurnLeft => "TL",
            Action::TurnRight => "TR",
            Action::Stop => "STOP",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Action> {
        match s {
            "FWD" => Some(Action::Forward),
            "TL" => Some(Action::TurnLeft),
            "TR" => Some(Action::TurnRight),
            "STOP" => Some(Action::Stop),
            _ => None,
        }
    }
}

/// Formats an action trace as one mnemonic per line.
pub fn format_trace(actions: &[Action]) -> String {
    let mut out = String::with_capacity(actions.len() * 4);
    for a in actions {
        out.push_str(a.mnemonic());
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<Action>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Action::from_mnemonic(l.trim())
                .ok_or_else(|| Error::parse(Some(i + 1), format!("unknown action `{}`", l.trim())))
        })
        .collect()
}

/// Dense occupancy raster with an optional per-cell obstacle height.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    width: usize,
    height: usize,
    cells: Vec<bool>,
    /// Obstacle top heights; `INFINITY` marks full-height obstacles.
    heights: Option<Vec<f64>>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::contract(format!("resolution must be positive, got {resolution}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::contract("grid must have at least one cell"));
        }
        Ok(Self {
            resolution,
            width,
            height,
            cells: vec![false; width * height],
            heights: None,
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn has_heightfield(&self) -> bool {
        self.heights.is_some()
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.index(ix, iy)]
    }

    /// Out-of-bounds cells read as occupied.
    pub fn is_occupied_or_outside(&self, ix: i64, iy: i64) -> bool {
        !self.in_bounds(ix, iy) || self.cells[self.index(ix as usize, iy as usize)]
    }

    /// Obstacle top height of an occupied cell; free cells report 0.
    pub fn obstacle_height(&self, ix: usize, iy: usize) -> f64 {
        let i = self.index(ix, iy);
        if !self.cells[i] {
            return 0.0;
        }
        match &self.heights {
            Some(h) => h[i],
            None => f64::INFINITY,
        }
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.index(ix, iy);
        self.cells[i] = occupied;
        if let Some(h) = &mut self.heights {
            h[i] = f64::INFINITY;
        }
    }

    /// Marks an occupied cell with an explicit obstacle height in meters.
    pub fn set_with_height(&mut self, ix: usize, iy: usize, height_m: f64) {
        let n = self.cells.len();
        let i = self.index(ix, iy);
        self.cells[i] = true;
        self.heights.get_or_insert_with(|| vec![f64::INFINITY; n])[i] = height_m;
    }

    pub fn cell_of(&self, p: Point2D) -> (i64, i64) {
        (
            (p.x / self.resolution).floor() as i64,
            (p.y / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2D {
        Point2D::new(
            (ix as f64 + 0.5) * self.resolution,
            (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Fills every cell whose center lies in the axis-aligned box `[min, max]`.
    /// `height_m = None` means full height.
    pub fn fill_rect(&mut self, min: Point2D, max: Point2D, height_m: Option<f64>) {
        let r = self.resolution;
        let x0 = ((min.x / r) - 0.5).ceil().max(0.0) as usize;
        let y0 = ((min.y / r) - 0.5).ceil().max(0.0) as usize;
        let x1 = ((max.x / r) - 0.5).floor();
        let y1 = ((max.y / r) - 0.5).floor();
        if x1 < 0.0 || y1 < 0.0 {
            return;
        }
        let x1 = (x1 as usize).min(self.width - 1);
        let y1 = (y1 as usize).min(self.height - 1);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                match height_m {
                    Some(h) => self.set_with_height(ix, iy, h),
                    None => self.set(ix, iy, true),
                }
            }
        }
    }

    /// Clears every cell whose center lies in `[min, max]`.
    pub fn clear_rect(&mut self, min: Point2D, max: Point2D) {
        let r = self.resolution;
        let x0 = ((min.x / r) - 0.5).ceil().max(0.0) as usize;
        let y0 = ((min.y / r) - 0.5).ceil().max(0.0) as usize;
        let x1 = ((max.x / r) - 0.5).floor();
        let y1 = ((max.y / r) - 0.5).floor();
        if x1 < 0.0 || y1 < 0.0 {
            return;
        }
        let x1 = (x1 as usize).min(self.width - 1);
        let y1 = (y1 as usize).min(self.height - 1);
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                self.set(ix, iy, false);
            }
        }
    }

    /// Border of full-height wall cells `thickness` cells deep.
    pub fn add_border(&mut self, thickness: usize) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                if ix < thickness
                    || iy < thickness
                    || ix + thickness >= self.width
                    || iy + thickness >= self.height
                {
                    self.set(ix, iy, true);
                }
            }
        }
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True when the segment `a→b` swept by a disc of `radius` stays clear
    /// of every occupied (or out-of-bounds) cell.
    pub fn capsule_clear(&self, a: Point2D, b: Point2D, radius: f64) -> bool {
        let r = self.resolution;
        let reach = radius + 1e-9;
        let x0 = ((a.x.min(b.x) - reach) / r).floor() as i64;
        let x1 = ((a.x.max(b.x) + reach) / r).floor() as i64;
        let y0 = ((a.y.min(b.y) - reach) / r).floor() as i64;
        let y1 = ((a.y.max(b.y) + reach) / r).floor() as i64;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if !self.is_occupied_or_outside(ix, iy) {
                    continue;
                }
                let lo = Point2D::new(ix as f64 * r, iy as f64 * r);
                let hi = Point2D::new(lo.x + r, lo.y + r);
                if segment_box_distance(a, b, lo, hi) < radius {
                    return false;
                }
            }
        }
        true
    }

    /// True when a disc of `radius` at `p` overlaps no occupied cell.
    pub fn disc_clear(&self, p: Point2D, radius: f64) -> bool {
        self.capsule_clear(p, p, radius)
    }

    /// Amanatides–Woo traversal along a ray. `hit` receives each visited
    /// cell with its entry and exit parameters (meters along the ray) and
    /// returns the hit distance, if any. Cells outside the raster are free.
    fn traverse(
        &self,
        origin: Point2D,
        angle_deg: f64,
        max_range: f64,
        mut hit: impl FnMut(usize, usize, f64, f64) -> Option<f64>,
    ) -> Option<f64> {
        let r = self.resolution;
        let a = angle_deg.to_radians();
        let (dx, dy) = (a.cos(), a.sin());
        let (mut ix, mut iy) = self.cell_of(origin);
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        let t_delta_x = if dx != 0.0 { r / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { r / dy.abs() } else { f64::INFINITY };
        let mut t_max_x = if dx > 0.0 {
            ((ix + 1) as f64 * r - origin.x) / dx
        } else if dx < 0.0 {
            (ix as f64 * r - origin.x) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy > 0.0 {
            ((iy + 1) as f64 * r - origin.y) / dy
        } else if dy < 0.0 {
            (iy as f64 * r - origin.y) / dy
        } else {
            f64::INFINITY
        };
        let mut t_in = 0.0;
        while t_in < max_range {
            let t_out = t_max_x.min(t_max_y).min(max_range);
            if self.in_bounds(ix, iy) {
                if let Some(t) = hit(ix as usize, iy as usize, t_in, t_out) {
                    return Some(t);
                }
            } else if !self.ray_can_reenter(ix, iy, step_x, step_y) {
                return None;
            }
            if t_max_x < t_max_y {
                t_in = t_max_x;
                t_max_x += t_delta_x;
                ix += step_x;
            } else {
                t_in = t_max_y;
                t_max_y += t_delta_y;
                iy += step_y;
            }
        }
        None
    }

    /// Once a ray has left the raster moving away from it, no later cell
    /// can be inside.
    fn ray_can_reenter(&self, ix: i64, iy: i64, step_x: i64, step_y: i64) -> bool {
        let w = self.width as i64;
        let h = self.height as i64;
        !((ix < 0 && step_x < 0) || (ix >= w && step_x > 0) || (iy < 0 && step_y < 0) || (iy >= h && step_y > 0))
    }

    /// Distance along a horizontal ray at `ray_height` to the first
    /// occupied cell at least that tall, or `max_range` if none.
    pub fn raycast(&self, origin: Point2D, angle_deg: f64, max_range: f64, ray_height: f64) -> f64 {
        self.traverse(origin, angle_deg, max_range, |ix, iy, t_in, _| {
            (self.is_occupied(ix, iy) && self.obstacle_height(ix, iy) >= ray_height).then_some(t_in)
        })
        .map_or(max_range, |t| t.clamp(MIN_RAY_DISTANCE, max_range))
    }

    /// Horizontal distance to the first obstacle hit by a ray leaving
    /// `origin` at `sensor_height` with elevation `elevation_deg`.
    /// Obstacles occupy `[0, obstacle_height]` vertically; a ray that
    /// reaches the floor first reports `max_range`.
    pub fn raycast_elevated(
        &self,
        origin: Point2D,
        angle_deg: f64,
        max_range: f64,
        sensor_height: f64,
        elevation_deg: f64,
    ) -> f64 {
        let slope = elevation_deg.to_radians().tan();
        let z = |t: f64| sensor_height + slope * t;
        let floor_t = if slope < 0.0 { -sensor_height / slope } else { f64::INFINITY };
        let limit = max_range.min(floor_t);
        self.traverse(origin, angle_deg, limit, |ix, iy, t_in, t_out| {
            if !self.is_occupied(ix, iy) {
                return None;
            }
            let top = self.obstacle_height(ix, iy);
            if z(t_in) <= top {
                return Some(t_in);
            }
            if slope < 0.0 {
                // Descending ray crosses the obstacle top inside this cell.
                let t_top = (top - sensor_height) / slope;
                if t_top <= t_out {
                    return Some(t_top.max(t_in));
                }
            }
            None
        })
        .map_or(max_range, |t| t.clamp(MIN_RAY_DISTANCE, max_range))
    }
}

/// Euclidean distance between segment `a→b` and the box `[lo, hi]`.
fn segment_box_distance(a: Point2D, b: Point2D, lo: Point2D, hi: Point2D) -> f64 {
    if segment_intersects_box(a, b, lo, hi) {
        return 0.0;
    }
    // Disjoint convex sets: the minimum is attained at a vertex of one of them.
    let mut d = point_box_distance(a, lo, hi).min(point_box_distance(b, lo, hi));
    for c in [lo, Point2D::new(hi.x, lo.y), hi, Point2D::new(lo.x, hi.y)] {
        d = d.min(point_segment_distance(c, a, b));
    }
    d
}

fn point_box_distance(p: Point2D, lo: Point2D, hi: Point2D) -> f64 {
    let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
    let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
    dx.hypot(dy)
}

fn point_segment_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0);
    p.distance(&Point2D::new(a.x + t * vx, a.y + t * vy))
}

/// Slab clipping test.
fn segment_intersects_box(a: Point2D, b: Point2D, lo: Point2D, hi: Point2D) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, d, min, max) in [(a.x, b.x - a.x, lo.x, hi.x), (a.y, b.y - a.y, lo.y, hi.y)] {
        if d == 0.0 {
            if p < min || p > max {
                return false;
            }
        } else {
            let (mut ta, mut tb) = ((min - p) / d, (max - p) / d);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Exact octile path cost `axial + diagonal·√2`, in cells.
///
/// Distinct `(axial, diagonal)` pairs never compare equal because √2 is
/// irrational, so shortest-path costs built from these are reproducible to
/// the bit regardless of the order in which relaxations happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct OctileCost {
    pub axial: u32,
    pub diagonal: u32,
}

impl OctileCost {
    pub const ZERO: OctileCost = OctileCost { axial: 0, diagonal: 0 };

    pub fn value(&self) -> f64 {
        self.axial as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn add_step(self, diagonal: bool) -> OctileCost {
        self.add(if diagonal { 0 } else { 1 }, if diagonal { 1 } else { 0 })
    }

    pub fn add(self, axial: u32, diagonal: u32) -> OctileCost {
        OctileCost {
            axial: self.axial + axial,
            diagonal: self.diagonal + diagonal,
        }
    }
}

impl std::ops::Add for OctileCost {
    type Output = OctileCost;

    fn add(self, rhs: OctileCost) -> OctileCost {
        OctileCost::add(self, rhs.axial, rhs.diagonal)
    }
}

impl PartialOrd for OctileCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OctileCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value()
            .total_cmp(&other.value())
            .then_with(|| self.axial.cmp(&other.axial))
    }
}

/// The 8-connected neighbourhood, axial moves first.
pub(crate) const OCTILE_DIRS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Shortest-path distance to the goal over free cells.
///
/// 8-connected; a diagonal move requires both adjacent axial cells to be
/// free (no corner cutting).
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicField {
    width: usize,
    height: usize,
    resolution: f64,
    costs: Vec<Option<OctileCost>>,
}

impl GeodesicField {
    pub fn compute(grid: &OccupancyGrid, goal_cell: (usize, usize)) -> GeodesicField {
        let (w, h) = (grid.width(), grid.height());
        let mut costs: Vec<Option<OctileCost>> = vec![None; w * h];
        let mut heap = BinaryHeap::new();
        if !grid.is_occupied(goal_cell.0, goal_cell.1) {
            costs[goal_cell.1 * w + goal_cell.0] = Some(OctileCost::ZERO);
            heap.push(std::cmp::Reverse((OctileCost::ZERO, goal_cell)));
        }
        while let Some(std::cmp::Reverse((cost, (cx, cy)))) = heap.pop() {
            if costs[cy * w + cx] != Some(cost) {
                continue;
            }
            for (dx, dy) in OCTILE_DIRS {
                let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                if grid.is_occupied_or_outside(nx, ny) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal
                    && (grid.is_occupied_or_outside(cx as i64 + dx, cy as i64)
                        || grid.is_occupied_or_outside(cx as i64, cy as i64 + dy))
                {
                    continue;
                }
                let next = cost.add_step(diagonal);
                let ni = ny as usize * w + nx as usize;
                if costs[ni].is_none_or(|c| next < c) {
                    costs[ni] = Some(next);
                    heap.push(std::cmp::Reverse((next, (nx as usize, ny as usize))));
                }
            }
        }
        GeodesicField {
            width: w,
            height: h,
            resolution: grid.resolution(),
            costs,
        }
    }

    /// Distance in meters from cell `(ix, iy)`; `INFINITY` when unreachable.
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.costs[iy * self.width + ix].map_or(f64::INFINITY, |c| c.value() * self.resolution)
    }

    /// Exact octile cost in cells, `None` when unreachable.
    pub fn cost_at(&self, ix: usize, iy: usize) -> Option<OctileCost> {
        self.costs[iy * self.width + ix]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Immutable simulation world.
#[derive(Debug, Clone)]
pub struct Scene {
    id: String,
    grid: OccupancyGrid,
    start: Pose,
    goal: Point2D,
    agent_radius: f64,
    geodesic: GeodesicField,
}

impl Scene {
    /// Validates the start and goal and precomputes the geodesic field.
    pub fn new(id: impl Into<String>, grid: OccupancyGrid, start: Pose, goal: Point2D) -> Result<Scene> {
        let check = |p: Point2D, what: &str| -> Result<(usize, usize)> {
            let (ix, iy) = grid.cell_of(p);
            if !grid.in_bounds(ix, iy) {
                return Err(Error::contract(format!("{what} ({}, {}) is outside the scene", p.x, p.y)));
            }
            if grid.is_occupied(ix as usize, iy as usize) {
                return Err(Error::contract(format!("{what} ({}, {}) is occupied", p.x, p.y)));
            }
            Ok((ix as usize, iy as usize))
        };
        check(start.position(), "start")?;
        let goal_cell = check(goal, "goal")?;
        let geodesic = GeodesicField::compute(&grid, goal_cell);
        Ok(Scene {
            id: id.into(),
            grid,
            start,
            goal,
            agent_radius: DEFAULT_AGENT_RADIUS,
            geodesic,
        })
    }

    pub fn with_agent_radius(mut self, radius: f64) -> Self {
        self.agent_radius = radius;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution()
    }

    pub fn start(&self) -> Pose {
        self.start
    }

    pub fn goal(&self) -> Point2D {
        self.goal
    }

    pub fn agent_radius(&self) -> f64 {
        self.agent_radius
    }

    pub fn geodesic_field(&self) -> &GeodesicField {
        &self.geodesic
    }

    pub fn contains(&self, p: Point2D) -> bool {
        let (ix, iy) = self.grid.cell_of(p);
        self.grid.in_bounds(ix, iy)
    }

    /// Raw occupancy of the cell containing `p`; outside counts as occupied.
    pub fn is_occupied_at(&self, p: Point2D) -> bool {
        let (ix, iy) = self.grid.cell_of(p);
        self.grid.is_occupied_or_outside(ix, iy)
    }

    /// True when the agent disc centred at `p` touches no occupied cell.
    pub fn agent_fits(&self, p: Point2D) -> bool {
        self.grid.disc_clear(p, self.agent_radius)
    }

    /// True when the agent can translate straight from `a` to `b`.
    pub fn sweep_clear(&self, a: Point2D, b: Point2D) -> bool {
        self.grid.capsule_clear(a, b, self.agent_radius)
    }

    /// Applies one action. Turns always succeed; a blocked forward leaves
    /// the pose unchanged and reports a collision (no sliding).
    pub fn step(&self, pose: Pose, action: Action) -> Result<(Pose, bool)> {
        if !self.contains(pose.position()) {
            return Err(Error::contract(format!(
                "pose ({}, {}) is outside the scene",
                pose.x, pose.y
            )));
        }
        Ok(match action {
            Action::TurnLeft => (pose.rotated(TURN_STEP_DEG), false),
            Action::TurnRight => (pose.rotated(-TURN_STEP_DEG), false),
            Action::Stop => (pose, false),
            Action::Forward => {
                let from = pose.position();
                let to = from.offset(pose.heading(), FORWARD_STEP_M);
                if self.sweep_clear(from, to) {
                    (Pose::new(to.x, to.y, pose.heading()), false)
                } else {
                    (pose, true)
                }
            }
        })
    }

    pub fn raycast(&self, origin: Point2D, angle_deg: f64, max_range: f64, ray_height: f64) -> f64 {
        self.grid.raycast(origin, angle_deg, max_range, ray_height)
    }

    /// Geodesic distance to the goal from the cell containing `from`.
    pub fn geodesic(&self, from: Point2D) -> f64 {
        let (ix, iy) = self.grid.cell_of(from);
        if !self.grid.in_bounds(ix, iy) {
            return f64::INFINITY;
        }
        self.geodesic.at(ix as usize, iy as usize)
    }

    pub fn geodesic_cost(&self, from: Point2D) -> Option<OctileCost> {
        let (ix, iy) = self.grid.cell_of(from);
        if !self.grid.in_bounds(ix, iy) {
            return None;
        }
        self.geodesic.cost_at(ix as usize, iy as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn empty_scene(w_m: f64, h_m: f64) -> Scene {
        let res = DEFAULT_RESOLUTION;
        let grid = OccupancyGrid::new((w_m / res).round() as usize, (h_m / res).round() as usize, res).unwrap();
        Scene::new("empty", grid, Pose::new(1.0, 1.0, 0.0), Point2D::new(w_m - 0.5, h_m - 0.5)).unwrap()
    }

    /// 4 m × 4 m interior with one-cell walls; interior spans [0.05, 4.05].
    fn square_room() -> Scene {
        let mut grid = OccupancyGrid::new(82, 82, 0.05).unwrap();
        grid.add_border(1);
        Scene::new("room", grid, Pose::new(2.05, 2.05, 0.0), Point2D::new(3.0, 3.0)).unwrap()
    }

    #[test]
    fn forward_in_free_space() {
        let s = empty_scene(4.0, 4.0);
        let (p, hit) = s.step(Pose::new(1.0, 1.0, 0.0), Action::Forward).unwrap();
        assert!(!hit);
        assert_abs_diff_eq!(p.x, 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_eq!(p.heading(), 0.0);
    }

    #[test]
    fn forward_blocked_by_wall_leaves_pose() {
        let mut grid = OccupancyGrid::new(80, 80, 0.05).unwrap();
        // Wall face 0.10 m ahead of the agent centre.
        grid.fill_rect(Point2D::new(1.10, 0.0), Point2D::new(1.5, 4.0), None);
        let s = Scene::new("wall", grid, Pose::new(1.0, 1.0, 0.0), Point2D::new(0.5, 0.5)).unwrap();
        let pose = Pose::new(1.0, 1.0, 0.0);
        let (after, hit) = s.step(pose, Action::Forward).unwrap();
        assert!(hit);
        assert_eq!(after, pose);
    }

    #[test]
    fn turns_never_collide() {
        let s = square_room();
        let (p, hit) = s.step(Pose::new(1.0, 1.0, 0.0), Action::TurnLeft).unwrap();
        assert!(!hit);
        assert_eq!(p, Pose::new(1.0, 1.0, 15.0));
        let (p, _) = s.step(Pose::new(1.0, 1.0, 0.0), Action::TurnRight).unwrap();
        assert_eq!(p.heading(), 345.0);
        let (p, hit) = s.step(Pose::new(1.0, 1.0, 30.0), Action::Stop).unwrap();
        assert!(!hit);
        assert_eq!(p, Pose::new(1.0, 1.0, 30.0));
    }

    #[test]
    fn out_of_bounds_pose_is_rejected() {
        let s = square_room();
        assert!(matches!(
            s.step(Pose::new(-1.0, 1.0, 0.0), Action::Forward),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn heading_normalisation() {
        assert_eq!(Pose::new(0.0, 0.0, -15.0).heading(), 345.0);
        assert_eq!(Pose::new(0.0, 0.0, 720.0).heading(), 0.0);
        assert_eq!(Pose::new(0.0, 0.0, -1e-20).heading(), 0.0);
        assert_eq!(heading_difference(350.0, 10.0), 20.0);
        assert_eq!(heading_difference(10.0, 350.0), -20.0);
        assert_eq!(heading_difference(0.0, 180.0), 180.0);
    }

    #[test]
    fn raycast_square_room() {
        let s = square_room();
        let c = s.start().position();
        // Analytic: the wall faces are 2.0 m from the centre along the axes
        // and 2·√2 along the diagonals, capped by the range.
        for (angle, expected) in [(0.0, 2.0), (90.0, 2.0), (180.0, 2.0), (270.0, 2.0), (45.0, 2.0 * SQRT_2)] {
            assert_abs_diff_eq!(s.raycast(c, angle, 3.0, 1.5), expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(s.raycast(c, 30.0, 3.0, 1.5), 2.0 / 30f64.to_radians().cos(), epsilon = 1e-9);
        assert_abs_diff_eq!(s.raycast(c, 45.0, 2.5, 1.5), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn raycast_unbounded_returns_max_range() {
        let s = empty_scene(2.0, 2.0);
        for k in 0..24 {
            assert_eq!(s.raycast(Point2D::new(1.0, 1.0), k as f64 * 15.0, 3.0, 1.0), 3.0);
        }
    }

    #[test]
    fn raycast_ignores_obstacles_below_ray() {
        let mut grid = OccupancyGrid::new(100, 60, 0.05).unwrap();
        // 1.0 m-tall block whose face is 1.0 m ahead, full wall at 2.5 m.
        grid.fill_rect(Point2D::new(1.5, 0.5), Point2D::new(1.8, 2.5), Some(1.0));
        grid.fill_rect(Point2D::new(3.0, 0.0), Point2D::new(4.0, 3.0), None);
        let s = Scene::new("low", grid, Pose::new(0.5, 1.525, 0.0), Point2D::new(0.2, 0.2)).unwrap();
        let o = s.start().position();
        assert_abs_diff_eq!(s.raycast(o, 0.0, 3.0, 1.5), 2.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.raycast(o, 0.0, 3.0, 0.8), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn geodesic_basics() {
        let s = empty_scene(5.0, 5.0);
        assert_eq!(s.geodesic(s.goal()), 0.0);
        // 3 m straight line from the goal along -x.
        let g = s.goal();
        let d = s.geodesic(Point2D::new(g.x - 3.0, g.y));
        assert!((d - 3.0).abs() <= 2.0 * s.resolution(), "{d}");
    }

    #[test]
    fn geodesic_sealed_pocket_is_infinite() {
        let mut grid = OccupancyGrid::new(80, 80, 0.05).unwrap();
        grid.fill_rect(Point2D::new(0.5, 0.5), Point2D::new(1.5, 1.5), None);
        grid.clear_rect(Point2D::new(0.7, 0.7), Point2D::new(1.3, 1.3));
        let s = Scene::new("pocket", grid, Pose::new(3.0, 3.0, 0.0), Point2D::new(3.5, 3.5)).unwrap();
        assert_eq!(s.geodesic(Point2D::new(1.0, 1.0)), f64::INFINITY);
        assert_eq!(s.geodesic(Point2D::new(0.6, 0.6)), f64::INFINITY);
        assert!(s.geodesic(Point2D::new(0.2, 0.2)).is_finite());
    }

    #[test]
    fn capsule_matches_disc_sampling() {
        let mut grid = OccupancyGrid::new(40, 40, 0.05).unwrap();
        grid.set(20, 20, true);
        let a = Point2D::new(0.5, 1.025);
        // Obstacle square spans [1.0, 1.05]²; nearest approach of the path
        // y = 1.025 is zero, so every radius collides once the path reaches it.
        assert!(!grid.capsule_clear(a, Point2D::new(1.5, 1.025), 0.01));
        // Path 0.2 m below the square stays clear for radius 0.18.
        let low = Point2D::new(0.5, 0.8);
        assert!(grid.capsule_clear(low, Point2D::new(1.5, 0.8), 0.18));
        assert!(!grid.capsule_clear(low, Point2D::new(1.5, 0.8), 0.21));
    }

    #[test]
    fn trace_roundtrip() {
        let trace = vec![Action::Forward, Action::TurnLeft, Action::TurnRight, Action::Stop];
        let text = format_trace(&trace);
        assert_eq!(text, "FWD\nTL\nTR\nSTOP\n");
        assert_eq!(parse_trace(&text).unwrap(), trace);
        assert!(parse_trace("FWD\nJUMP\n").is_err());
    }
}
