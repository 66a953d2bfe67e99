//! Scene documents.
//!
//! A scene is one JSON document:
//!
//! ```text
//! {
//!   "id": "open-000",
//!   "resolution": 0.05,
//!   "width": 160, "height": 160,
//!   "agent_radius": 0.18,
//!   "rows": ["160.", "3#154.3#", ...],
//!   "heights": [[12, 40, 0.9], ...],
//!   "start": {"x": 1.0, "y": 2.0, "heading": 90.0},
//!   "goal": {"x": 6.5, "y": 5.0}
//! }
//! ```
//!
//! `rows[j]` is grid row `j` (y index, bottom row first), run-length
//! encoded as `run*` with `run = count? ('.' | '#')`; a missing count means
//! one. `heights` lists occupied cells `[ix, iy, meters]` that are shorter
//! than full height and may be omitted.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{OccupancyGrid, Point2D, Pose, Scene};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StartDoc {
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GoalDoc {
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SceneDoc {
    id: String,
    resolution: f64,
    width: usize,
    height: usize,
    #[serde(default)]
    agent_radius: Option<f64>,
    rows: Vec<String>,
    #[serde(default)]
    heights: Vec<(usize, usize, f64)>,
    start: StartDoc,
    goal: GoalDoc,
}

pub fn encode_row(cells: impl Iterator<Item = bool>) -> String {
    let mut out = String::new();
    let mut run: Option<(bool, usize)> = None;
    let flush = |out: &mut String, (occ, n): (bool, usize)| {
        if n > 1 {
            out.push_str(&n.to_string());
        }
        out.push(if occ { '#' } else { '.' });
    };
    for c in cells {
        run = match run {
            Some((occ, n)) if occ == c => Some((occ, n + 1)),
            Some(r) => {
                flush(&mut out, r);
                Some((c, 1))
            }
            None => Some((c, 1)),
        };
    }
    if let Some(r) = run {
        flush(&mut out, r);
    }
    out
}

pub fn decode_row(row: &str, width: usize, line: usize) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(width);
    let mut count = String::new();
    for ch in row.chars() {
        match ch {
            '0'..='9' => count.push(ch),
            '.' | '#' => {
                let n = if count.is_empty() {
                    1
                } else {
                    count
                        .parse::<usize>()
                        .map_err(|_| Error::parse(Some(line), format!("bad run length `{count}`")))?
                };
                if n == 0 {
                    return Err(Error::parse(Some(line), "zero-length run"));
                }
                count.clear();
                out.extend(std::iter::repeat_n(ch == '#', n));
            }
            c if c.is_whitespace() => {}
            c => return Err(Error::parse(Some(line), format!("unexpected character `{c}` in row"))),
        }
    }
    if !count.is_empty() {
        return Err(Error::parse(Some(line), "row ends with a dangling run length"));
    }
    if out.len() != width {
        return Err(Error::parse(Some(line), format!("row decodes to {} cells, expected {width}", out.len())));
    }
    Ok(out)
}

pub fn scene_to_json(scene: &Scene) -> Result<String> {
    let g = scene.grid();
    let rows = (0..g.height())
        .map(|iy| encode_row((0..g.width()).map(|ix| g.is_occupied(ix, iy))))
        .collect();
    let mut heights = Vec::new();
    if g.has_heightfield() {
        for iy in 0..g.height() {
            for ix in 0..g.width() {
                let h = g.obstacle_height(ix, iy);
                if g.is_occupied(ix, iy) && h.is_finite() {
                    heights.push((ix, iy, h));
                }
            }
        }
    }
    let start = scene.start();
    let doc = SceneDoc {
        id: scene.id().to_string(),
        resolution: g.resolution(),
        width: g.width(),
        height: g.height(),
        agent_radius: Some(scene.agent_radius()),
        rows,
        heights,
        start: StartDoc {
            x: start.x,
            y: start.y,
            heading: start.heading(),
        },
        goal: GoalDoc {
            x: scene.goal().x,
            y: scene.goal().y,
        },
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn scene_from_json(text: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text)?;
    if doc.rows.len() != doc.height {
        return Err(Error::parse(None, format!("{} rows listed, height is {}", doc.rows.len(), doc.height)));
    }
    let mut grid = OccupancyGrid::new(doc.width, doc.height, doc.resolution)?;
    for (iy, row) in doc.rows.iter().enumerate() {
        for (ix, occ) in decode_row(row, doc.width, iy + 1)?.into_iter().enumerate() {
            if occ {
                grid.set(ix, iy, true);
            }
        }
    }
    for &(ix, iy, h) in &doc.heights {
        if ix >= doc.width || iy >= doc.height || !grid.is_occupied(ix, iy) {
            return Err(Error::parse(None, format!("height entry ({ix}, {iy}) is not an occupied cell")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::parse(None, format!("height at ({ix}, {iy}) must be positive")));
        }
        grid.set_with_height(ix, iy, h);
    }
    let start = Pose::new(doc.start.x, doc.start.y, doc.start.heading);
    let scene = Scene::new(doc.id, grid, start, Point2D::new(doc.goal.x, doc.goal.y))?;
    Ok(match doc.agent_radius {
        Some(r) => scene.with_agent_radius(r),
        None => scene,
    })
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    fs::write(path, scene_to_json(scene)?).map_err(|e| Error::io(path, e))
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    scene_from_json(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::parse(line, format!("{}: {message}", path.display())),
        other => other,
    })
}

/// Writes each scene to `<dir>/<id>.json`, creating `dir` if needed.
pub fn save_scene_set(dir: &Path, scenes: &[Scene]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    scenes
        .iter()
        .map(|s| {
            let path = dir.join(format!("{}.json", s.id()));
            save_scene(&path, s).map(|_| path)
        })
        .collect()
}

/// Loads one scene file, or every `*.json` in a directory, sorted by id.
pub fn load_scenes(path: &Path) -> Result<Vec<Scene>> {
    let mut scenes = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files.iter().map(|f| load_scene(f)).collect::<Result<Vec<_>>>()?
    } else {
        vec![load_scene(path)?]
    };
    scenes.sort_by(|a, b| a.id().cmp(b.id()));
    if scenes.windows(2).any(|w| w[0].id() == w[1].id()) {
        return Err(Error::Config(format!("duplicate scene ids under {}", path.display())));
    }
    Ok(scenes)
}
