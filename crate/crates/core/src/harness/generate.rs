//! Procedural scene suites.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scene::{OccupancyGrid, Point2D, Pose, Scene, DEFAULT_AGENT_RADIUS, DEFAULT_RESOLUTION, TURN_STEP_DEG};

const MAX_ATTEMPTS: usize = 200;
const WALL_CELLS: usize = 2;
/// Free margin kept around start and goal when placing obstacles.
const KEEP_CLEAR_M: f64 = 0.5;
const POCKET_WALL_M: f64 = 0.1;

/// Parameters of a scene family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub name: String,
    pub count: usize,
    /// Side length of the square room, meters.
    pub size_m: f64,
    /// Fraction of the floor covered by full-height clutter blocks.
    pub density: f64,
    /// U-shaped pockets across the straight start–goal line, closed end
    /// toward the goal.
    pub trap_pockets: usize,
    /// Boxes shorter than the 2D scanner.
    pub low_furniture: usize,
    /// Width of the single door in a wall splitting the room, if any.
    pub door_width: Option<f64>,
    pub min_start_goal_m: f64,
    pub max_start_goal_m: f64,
}

impl Recipe {
    /// Pillars and blocks, no traps.
    pub fn open(count: usize) -> Self {
        Self {
            name: "open".into(),
            count,
            size_m: 8.0,
            density: 0.03,
            trap_pockets: 0,
            low_furniture: 0,
            door_width: None,
            min_start_goal_m: 4.5,
            max_start_goal_m: 7.0,
        }
    }

    /// One concave pocket on every direct path.
    pub fn traps(count: usize) -> Self {
        Self {
            name: "traps".into(),
            count,
            size_m: 9.0,
            density: 0.0,
            trap_pockets: 1,
            low_furniture: 0,
            door_width: None,
            min_start_goal_m: 6.0,
            max_start_goal_m: 7.5,
        }
    }

    /// Low boxes invisible to a 2D scanner mounted above them.
    pub fn furniture(count: usize) -> Self {
        Self {
            name: "furniture".into(),
            count,
            size_m: 8.0,
            density: 0.0,
            trap_pockets: 0,
            low_furniture: 5,
            door_width: None,
            min_start_goal_m: 4.5,
            max_start_goal_m: 7.0,
        }
    }

    pub fn by_name(name: &str, count: usize) -> Option<Self> {
        match name {
            "open" => Some(Self::open(count)),
            "traps" => Some(Self::traps(count)),
            "furniture" => Some(Self::furniture(count)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.size_m >= 3.0
            && (0.0..0.5).contains(&self.density)
            && self.min_start_goal_m > 0.0
            && self.max_start_goal_m >= self.min_start_goal_m
            && self.door_width.is_none_or(|w| w > 2.0 * DEFAULT_AGENT_RADIUS);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("recipe `{}` has out-of-range parameters", self.name)))
        }
    }
}

/// A U-shaped pocket in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pocket {
    pub center: Point2D,
    /// Unit vector from the open mouth to the closed back.
    pub axis: (f64, f64),
    pub width: f64,
    pub depth: f64,
}

impl Pocket {
    fn walls(&self) -> [(Point2D, (f64, f64), f64, f64); 3] {
        let (ux, uy) = self.axis;
        let (vx, vy) = (-uy, ux);
        let c = self.center;
        let at = |a: f64, b: f64| Point2D::new(c.x + ux * a + vx * b, c.y + uy * a + vy * b);
        let t = POCKET_WALL_M / 2.0;
        [
            (at(self.depth / 2.0, 0.0), self.axis, t, self.width / 2.0 + t),
            (at(0.0, self.width / 2.0), self.axis, self.depth / 2.0, t),
            (at(0.0, -self.width / 2.0), self.axis, self.depth / 2.0, t),
        ]
    }

    pub fn rasterize(&self, grid: &mut OccupancyGrid) {
        for (center, axis, half_u, half_v) in self.walls() {
            fill_oriented_box(grid, center, axis, half_u, half_v, None);
        }
    }
}

/// Fills cells whose centres lie in the box of half-extents `half_u` along
/// `axis` and `half_v` across it.
pub fn fill_oriented_box(
    grid: &mut OccupancyGrid,
    center: Point2D,
    axis: (f64, f64),
    half_u: f64,
    half_v: f64,
    height: Option<f64>,
) {
    let r = grid.resolution();
    let reach = half_u.hypot(half_v);
    let lo_x = ((center.x - reach) / r).floor().max(0.0) as usize;
    let lo_y = ((center.y - reach) / r).floor().max(0.0) as usize;
    let hi_x = (((center.x + reach) / r).ceil() as usize).min(grid.width() - 1);
    let hi_y = (((center.y + reach) / r).ceil() as usize).min(grid.height() - 1);
    let (ux, uy) = axis;
    for iy in lo_y..=hi_y {
        for ix in lo_x..=hi_x {
            let p = grid.cell_center(ix, iy);
            let (dx, dy) = (p.x - center.x, p.y - center.y);
            if (dx * ux + dy * uy).abs() <= half_u && (dy * ux - dx * uy).abs() <= half_v {
                match height {
                    Some(h) => grid.set_with_height(ix, iy, h),
                    None => grid.set(ix, iy, true),
                }
            }
        }
    }
}

/// Cells where the agent disc fits, as a row-major mask.
pub fn fit_map(grid: &OccupancyGrid, radius: f64) -> Vec<bool> {
    let mut out = Vec::with_capacity(grid.width() * grid.height());
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            out.push(grid.disc_clear(grid.cell_center(ix, iy), radius));
        }
    }
    out
}

/// Whether `b` is reachable from `a` through cells where the agent fits,
/// moving 8-connected without cutting corners.
pub fn agent_connected(grid: &OccupancyGrid, radius: f64, a: Point2D, b: Point2D) -> bool {
    let fits = fit_map(grid, radius);
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let ok = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && fits[(y * w + x) as usize];
    let (ax, ay) = grid.cell_of(a);
    let (bx, by) = grid.cell_of(b);
    if !ok(ax, ay) || !ok(bx, by) {
        return false;
    }
    let mut seen = vec![false; fits.len()];
    let mut queue = VecDeque::from([(ax, ay)]);
    seen[(ay * w + ax) as usize] = true;
    while let Some((x, y)) = queue.pop_front() {
        if (x, y) == (bx, by) {
            return true;
        }
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                let (nx, ny) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || !ok(nx, ny) || (dx != 0 && dy != 0 && !(ok(x + dx, y) && ok(x, y + dy))) {
                    continue;
                }
                let i = (ny * w + nx) as usize;
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    false
}

/// Whether the straight start→goal segment crosses a pocket wall.
pub fn direct_path_hits_pocket(pockets: &[Pocket], grid_like: &OccupancyGrid, start: Point2D, goal: Point2D) -> bool {
    let mut only = OccupancyGrid::new(grid_like.width(), grid_like.height(), grid_like.resolution()).expect("valid dims");
    for p in pockets {
        p.rasterize(&mut only);
    }
    let d = start.distance(&goal);
    only.raycast(start, start.bearing_to(&goal), d, 0.0) < d
}

/// A generated scene with the pockets used to build it.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub scene: Scene,
    pub pockets: Vec<Pocket>,
}

/// Deterministic scene set for `recipe`.
pub fn generate_scenes(recipe: &Recipe, seed: u64) -> Result<Vec<Scene>> {
    Ok(generate_detailed(recipe, seed)?.into_iter().map(|g| g.scene).collect())
}

pub fn generate_detailed(recipe: &Recipe, seed: u64) -> Result<Vec<GeneratedScene>> {
    recipe.validate()?;
    (0..recipe.count)
        .map(|i| {
            let mut rng = SplitMix64::derive(seed, i as u64);
            for _ in 0..MAX_ATTEMPTS {
                if let Some(g) = attempt(recipe, i, &mut rng)? {
                    return Ok(g);
                }
            }
            Err(Error::Generation {
                recipe: recipe.name.clone(),
                attempts: MAX_ATTEMPTS,
            })
        })
        .collect()
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

fn attempt(recipe: &Recipe, index: usize, rng: &mut SplitMix64) -> Result<Option<GeneratedScene>> {
    let cells = (recipe.size_m / DEFAULT_RESOLUTION).round() as usize;
    let mut grid = OccupancyGrid::new(cells, cells, DEFAULT_RESOLUTION)?;
    grid.add_border(WALL_CELLS);
    let size = recipe.size_m;
    let margin = 0.6;
    let mid = size / 2.0;

    let (start_lo, start_hi, goal_lo, goal_hi) = match recipe.door_width {
        Some(_) => (margin, mid - 0.6, mid + 0.6, size - margin),
        None => (margin, size - margin, margin, size - margin),
    };
    let start = Point2D::new(uniform(rng, start_lo, start_hi), uniform(rng, margin, size - margin));
    let goal = Point2D::new(uniform(rng, goal_lo, goal_hi), uniform(rng, margin, size - margin));
    let d = start.distance(&goal);
    if d < recipe.min_start_goal_m || d > recipe.max_start_goal_m {
        return Ok(None);
    }
    let heading = (rng.next_f64() * (360.0 / TURN_STEP_DEG)).floor() * TURN_STEP_DEG;
    let start_pose = Pose::new(start.x, start.y, heading);
    let keep_clear = |p: Point2D, pad: f64| p.distance(&start) > KEEP_CLEAR_M + pad && p.distance(&goal) > KEEP_CLEAR_M + pad;

    if let Some(door) = recipe.door_width {
        let y0 = uniform(rng, margin, size - margin - door);
        grid.fill_rect(Point2D::new(mid - 0.05, 0.0), Point2D::new(mid + 0.05, y0), None);
        grid.fill_rect(Point2D::new(mid - 0.05, y0 + door), Point2D::new(mid + 0.05, size), None);
    }

    let mut pockets = Vec::new();
    let axis = ((goal.x - start.x) / d, (goal.y - start.y) / d);
    for _ in 0..recipe.trap_pockets {
        let width = uniform(rng, 1.6, 2.2);
        let depth = uniform(rng, 1.0, 1.4);
        let t = uniform(rng, 0.5, 0.6);
        let center = Point2D::new(start.x + axis.0 * t * d, start.y + axis.1 * t * d);
        // Start well outside the mouth and goal well beyond the back wall.
        let mouth = t * d - depth / 2.0;
        let back = (1.0 - t) * d - depth / 2.0;
        if mouth < 1.5 || back < 1.2 {
            return Ok(None);
        }
        let pocket = Pocket { center, axis, width, depth };
        pocket.rasterize(&mut grid);
        pockets.push(pocket);
    }

    let floor = (size - 2.0 * WALL_CELLS as f64 * DEFAULT_RESOLUTION).powi(2);
    let mut covered = 0.0;
    let mut tries = 0;
    while covered < recipe.density * floor && tries < 1000 {
        tries += 1;
        let (w, h) = (uniform(rng, 0.2, 0.6), uniform(rng, 0.2, 0.6));
        let c = Point2D::new(uniform(rng, 0.0, size), uniform(rng, 0.0, size));
        if !keep_clear(c, w.max(h)) || pockets.iter().any(|p| p.center.distance(&c) < p.width + w.max(h)) {
            continue;
        }
        grid.fill_rect(Point2D::new(c.x - w / 2.0, c.y - h / 2.0), Point2D::new(c.x + w / 2.0, c.y + h / 2.0), None);
        covered += w * h;
    }

    for k in 0..recipe.low_furniture {
        let (w, h) = (uniform(rng, 0.4, 0.9), uniform(rng, 0.4, 0.9));
        let (c, top) = if k == 0 {
            // The first piece stands in front of the start where any scanner
            // mounted at or below its top sees it.
            let ahead = uniform(rng, 1.2, 2.0);
            (start.offset(heading, ahead), uniform(rng, 1.05, 1.3))
        } else {
            (
                Point2D::new(uniform(rng, 0.0, size), uniform(rng, 0.0, size)),
                uniform(rng, 0.6, 1.3),
            )
        };
        // The first piece must also stand off the outer walls so it is seen
        // against open floor rather than hidden in front of a wall.
        let inner = WALL_CELLS as f64 * DEFAULT_RESOLUTION + 0.5;
        let inside = c.x - w / 2.0 >= inner && c.x + w / 2.0 <= size - inner && c.y - h / 2.0 >= inner && c.y + h / 2.0 <= size - inner;
        if !keep_clear(c, w.max(h) / 2.0 * std::f64::consts::SQRT_2) || (k == 0 && !inside) {
            if k == 0 {
                return Ok(None);
            }
            continue;
        }
        grid.fill_rect(Point2D::new(c.x - w / 2.0, c.y - h / 2.0), Point2D::new(c.x + w / 2.0, c.y + h / 2.0), Some(top));
    }

    let radius = DEFAULT_AGENT_RADIUS;
    if !grid.disc_clear(start, radius) || !grid.disc_clear(goal, radius) {
        return Ok(None);
    }
    if !agent_connected(&grid, radius, start, goal) {
        return Ok(None);
    }
    if !pockets.is_empty() && !direct_path_hits_pocket(&pockets, &grid, start, goal) {
        return Ok(None);
    }
    let id = format!("{}-{index:03}", recipe.name);
    let scene = Scene::new(id, grid, start_pose, goal)?;
    if !scene.geodesic(start).is_finite() {
        return Ok(None);
    }
    Ok(Some(GeneratedScene { scene, pockets }))
}
