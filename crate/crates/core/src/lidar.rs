//! Simulated 2D/3D LiDAR and the radial occupancy mask.
//!
//! A scan is 1440 horizontal readings (0.25° apart, starting at the agent
//! heading). The mask collapses each 3° heading bin to its nearest return
//! and marks the hit range bin and everything beyond it as occupied: cells
//! past the first return are unobservable and treated as blocked.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar::{CELLS, HEADING_BINS, HEADING_BIN_DEG, MAX_RANGE_M, RANGE_BINS, RANGE_BIN_M};
use crate::scene::{Pose, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LidarMode {
    TwoD,
    ThreeD,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub max_range: f64,
    pub angular_resolution: f64,
    pub mode: LidarMode,
    /// Mounting height of the 2D scanner.
    pub sensor_height: f64,
    /// Mounting height of the 3D scanner (used by `ThreeD` and `Fused`).
    pub sensor_height_3d: f64,
    pub vertical_fov: f64,
    pub n_vertical_rays: usize,
    pub range_noise_sigma: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            max_range: MAX_RANGE_M,
            angular_resolution: 0.25,
            mode: LidarMode::TwoD,
            sensor_height: 1.5,
            sensor_height_3d: 1.5,
            vertical_fov: 22.5,
            n_vertical_rays: 16,
            range_noise_sigma: 0.0,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        if (self.max_range - MAX_RANGE_M).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "max_range must equal {RANGE_BINS} × {RANGE_BIN_M} m, got {}",
                self.max_range
            )));
        }
        let per_bin = HEADING_BIN_DEG / self.angular_resolution;
        if !(self.angular_resolution > 0.0) || (per_bin - per_bin.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "angular_resolution {} must divide {HEADING_BIN_DEG}°",
                self.angular_resolution
            )));
        }
        if self.n_vertical_rays < 2 || !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(Error::Config("3D fan needs ≥ 2 rays and a fov in (0°, 180°)".into()));
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err(Error::Config("range_noise_sigma must be ≥ 0".into()));
        }
        if !(self.sensor_height > 0.0 && self.sensor_height_3d > 0.0) {
            return Err(Error::Config("sensor heights must be positive".into()));
        }
        Ok(())
    }

    pub fn readings_per_scan(&self) -> usize {
        (360.0 / self.angular_resolution).round() as usize
    }

    pub fn readings_per_bin(&self) -> usize {
        (HEADING_BIN_DEG / self.angular_resolution).round() as usize
    }

    /// Elevation angles of the vertical fan, evenly spaced over the fov.
    pub fn elevations(&self) -> Vec<f64> {
        let n = self.n_vertical_rays;
        let half = self.vertical_fov / 2.0;
        (0..n)
            .map(|j| -half + self.vertical_fov * j as f64 / (n - 1) as f64)
            .collect()
    }
}

fn perturb<R: Rng + ?Sized>(readings: &mut [f64], config: &LidarConfig, rng: &mut R) {
    if config.range_noise_sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, config.range_noise_sigma).expect("sigma validated");
    for r in readings {
        *r = (*r + normal.sample(rng)).clamp(1e-6, config.max_range);
    }
}

/// 360° horizontal scan at `sensor_height`. With zero noise no random
/// draws are consumed.
pub fn scan2d<R: Rng + ?Sized>(scene: &Scene, pose: &Pose, config: &LidarConfig, rng: &mut R) -> Vec<f64> {
    let origin = pose.position();
    let mut out: Vec<f64> = (0..config.readings_per_scan())
        .map(|i| {
            let angle = pose.heading() + i as f64 * config.angular_resolution;
            scene.raycast(origin, angle, config.max_range, config.sensor_height)
        })
        .collect();
    perturb(&mut out, config, rng);
    out
}

/// Vertical-fan scan at `sensor_height_3d`: per horizontal angle, the
/// minimum horizontal hit distance over the fan. The horizontal ray is
/// always part of the fan so a 3D reading never exceeds the 2D reading
/// taken at the same height.
pub fn scan3d<R: Rng + ?Sized>(scene: &Scene, pose: &Pose, config: &LidarConfig, rng: &mut R) -> Vec<f64> {
    let origin = pose.position();
    let grid = scene.grid();
    let mut elevations = config.elevations();
    if !elevations.contains(&0.0) {
        elevations.push(0.0);
    }
    let h = config.sensor_height_3d;
    let mut out: Vec<f64> = (0..config.readings_per_scan())
        .map(|i| {
            let angle = pose.heading() + i as f64 * config.angular_resolution;
            elevations
                .iter()
                .map(|&e| {
                    if e == 0.0 {
                        grid.raycast(origin, angle, config.max_range, h)
                    } else {
                        grid.raycast_elevated(origin, angle, config.max_range, h, e)
                    }
                })
                .fold(config.max_range, f64::min)
        })
        .collect();
    perturb(&mut out, config, rng);
    out
}

/// Agent-centred polar occupancy mask; every cell is `-1` or `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialOccupancyMask {
    cells: Vec<i8>,
    center: Pose,
}

impl RadialOccupancyMask {
    pub fn empty(center: Pose) -> Self {
        Self {
            cells: vec![0; CELLS],
            center,
        }
    }

    pub fn from_cells(cells: Vec<i8>, center: Pose) -> Result<Self> {
        if cells.len() != CELLS {
            return Err(Error::contract(format!("mask needs {CELLS} cells, got {}", cells.len())));
        }
        if cells.iter().any(|&c| c != 0 && c != -1) {
            return Err(Error::contract("mask cells must be -1 or 0"));
        }
        Ok(Self { cells, center })
    }

    pub fn cells(&self) -> &[i8] {
        &self.cells
    }

    pub fn center(&self) -> Pose {
        self.center
    }

    pub fn get(&self, heading_bin: usize, range_bin: usize) -> i8 {
        self.cells[heading_bin * RANGE_BINS + range_bin]
    }

    pub fn is_occupied(&self, index: usize) -> bool {
        self.cells[index] == -1
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == -1).count()
    }

    /// Fraction of occupied cells, `-sum(M) / dim(M)`.
    pub fn occupied_fraction(&self) -> f64 {
        self.occupied_count() as f64 / CELLS as f64
    }
}

/// Collapses a scan into the polar mask.
pub fn build_mask(ranges: &[f64], config: &LidarConfig, center: Pose) -> Result<RadialOccupancyMask> {
    let expected = config.readings_per_scan();
    if ranges.len() != expected {
        return Err(Error::contract(format!(
            "scan has {} readings, expected {expected}",
            ranges.len()
        )));
    }
    let per_bin = config.readings_per_bin();
    let mut cells = vec![0i8; CELLS];
    for h in 0..HEADING_BINS {
        let r = ranges[h * per_bin..(h + 1) * per_bin]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if r < config.max_range {
            let first = ((r / RANGE_BIN_M).floor() as usize).min(RANGE_BINS - 1);
            cells[h * RANGE_BINS + first..(h + 1) * RANGE_BINS].fill(-1);
        }
    }
    Ok(RadialOccupancyMask { cells, center })
}

/// Occupied-union of two masks taken at the same pose.
pub fn fuse_masks(a: &RadialOccupancyMask, b: &RadialOccupancyMask) -> Result<RadialOccupancyMask> {
    if a.cells.len() != b.cells.len() {
        return Err(Error::contract("mask dimensions differ"));
    }
    if a.center != b.center {
        return Err(Error::contract("masks were taken at different poses"));
    }
    let cells = a.cells.iter().zip(&b.cells).map(|(&x, &y)| x.min(y)).collect();
    Ok(RadialOccupancyMask { cells, center: a.center })
}

/// Mean occupied fraction over an episode's masks.
pub fn occupied_proportion(masks: &[RadialOccupancyMask]) -> Result<f64> {
    if masks.is_empty() {
        return Err(Error::contract("occupied proportion of an empty mask sequence"));
    }
    Ok(masks.iter().map(RadialOccupancyMask::occupied_fraction).sum::<f64>() / masks.len() as f64)
}

/// Same statistic from recorded occupied-cell counts.
pub fn occupied_proportion_from_counts(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::contract("occupied proportion of an empty mask sequence"));
    }
    Ok(counts.iter().map(|&c| c as f64 / CELLS as f64).sum::<f64>() / counts.len() as f64)
}

/// Mask (and the per-sensor components in fused mode) seen from one pose.
#[derive(Debug, Clone)]
pub struct Observation {
    pub mask: RadialOccupancyMask,
    pub scan_2d: Option<Vec<f64>>,
    pub scan_3d: Option<Vec<f64>>,
    pub mask_2d: Option<RadialOccupancyMask>,
}

/// Scans according to `config.mode` and builds the mask the planner uses.
pub fn observe<R: Rng + ?Sized>(scene: &Scene, pose: &Pose, config: &LidarConfig, rng: &mut R) -> Result<Observation> {
    match config.mode {
        LidarMode::TwoD => {
            let s = scan2d(scene, pose, config, rng);
            let mask = build_mask(&s, config, *pose)?;
            Ok(Observation {
                mask_2d: Some(mask.clone()),
                mask,
                scan_2d: Some(s),
                scan_3d: None,
            })
        }
        LidarMode::ThreeD => {
            let s = scan3d(scene, pose, config, rng);
            Ok(Observation {
                mask: build_mask(&s, config, *pose)?,
                scan_2d: None,
                scan_3d: Some(s),
                mask_2d: None,
            })
        }
        LidarMode::Fused => {
            let s2 = scan2d(scene, pose, config, rng);
            let s3 = scan3d(scene, pose, config, rng);
            let m2 = build_mask(&s2, config, *pose)?;
            let m3 = build_mask(&s3, config, *pose)?;
            Ok(Observation {
                mask: fuse_masks(&m2, &m3)?,
                scan_2d: Some(s2),
                scan_3d: Some(s3),
                mask_2d: Some(m2),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::scene::{OccupancyGrid, Point2D};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn cfg() -> LidarConfig {
        LidarConfig::default()
    }

    fn open_scene() -> Scene {
        let grid = OccupancyGrid::new(200, 200, 0.05).unwrap();
        Scene::new("open", grid, Pose::new(5.0, 5.0, 0.0), Point2D::new(6.0, 6.0)).unwrap()
    }

    fn square_room() -> Scene {
        let mut grid = OccupancyGrid::new(82, 82, 0.05).unwrap();
        grid.add_border(1);
        Scene::new("room", grid, Pose::new(2.05, 2.05, 0.0), Point2D::new(3.0, 3.0)).unwrap()
    }

    #[test]
    fn empty_region_reads_max_range() {
        let s = open_scene();
        let scan = scan2d(&s, &s.start(), &cfg(), &mut SplitMix64::new(0));
        assert_eq!(scan.len(), 1440);
        assert!(scan.iter().all(|&r| r == 3.0));
    }

    #[test]
    fn square_room_scan() {
        let s = square_room();
        let scan = scan2d(&s, &s.start(), &cfg(), &mut SplitMix64::new(0));
        assert_abs_diff_eq!(scan[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(scan[360], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(scan[180], 2.0 * SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn noiseless_scan_is_deterministic_and_draw_free() {
        let s = square_room();
        let mut rng = SplitMix64::new(3);
        let a = scan2d(&s, &s.start(), &cfg(), &mut rng);
        let b = scan2d(&s, &s.start(), &cfg(), &mut rng);
        assert_eq!(a, b);
        assert_eq!(rng, SplitMix64::new(3));
    }

    #[test]
    fn noisy_scan_stays_in_range() {
        let s = square_room();
        let c = LidarConfig {
            range_noise_sigma: 0.5,
            ..cfg()
        };
        let scan = scan2d(&s, &s.start(), &c, &mut SplitMix64::new(9));
        assert!(scan.iter().all(|&r| r > 0.0 && r <= 3.0));
        let again = scan2d(&s, &s.start(), &c, &mut SplitMix64::new(9));
        assert_eq!(scan, again);
    }

    /// 0.85 m box whose face is 1.0 m ahead, full wall at 2.5 m, 3D sensor
    /// at 1.0 m. The lowest fan ray is at 1 − tan(11.25°) ≈ 0.801 m when it
    /// reaches the box face, below the box top.
    #[test]
    fn fan_sees_low_box() {
        let mut grid = OccupancyGrid::new(120, 60, 0.05).unwrap();
        grid.fill_rect(Point2D::new(1.5, 1.0), Point2D::new(1.9, 2.0), Some(0.85));
        grid.fill_rect(Point2D::new(3.0, 0.0), Point2D::new(3.5, 3.0), None);
        let s = Scene::new("box", grid, Pose::new(0.5, 1.525, 0.0), Point2D::new(0.2, 0.2)).unwrap();
        let c = LidarConfig {
            sensor_height: 1.0,
            sensor_height_3d: 1.0,
            ..cfg()
        };
        let mut rng = SplitMix64::new(0);
        let s2 = scan2d(&s, &s.start(), &c, &mut rng);
        let s3 = scan3d(&s, &s.start(), &c, &mut rng);
        assert_abs_diff_eq!(s2[0], 2.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s3[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fan_agrees_with_2d_without_low_obstacles() {
        let s = square_room();
        let c = cfg();
        let mut rng = SplitMix64::new(0);
        assert_eq!(scan2d(&s, &s.start(), &c, &mut rng), scan3d(&s, &s.start(), &c, &mut rng));
        let o = open_scene();
        assert!(scan3d(&o, &o.start(), &c, &mut rng).iter().all(|&r| r == 3.0));
    }

    fn uniform_scan(r: f64) -> Vec<f64> {
        vec![r; 1440]
    }

    #[test]
    fn mask_bin_arithmetic() {
        let c = cfg();
        let pose = Pose::new(0.0, 0.0, 0.0);
        let mut ranges = uniform_scan(3.0);
        ranges[5] = 1.3;
        ranges[12] = 0.10;
        let m = build_mask(&ranges, &c, pose).unwrap();
        for w in 0..12 {
            assert_eq!(m.get(0, w), if w >= 5 { -1 } else { 0 }, "bin 0 range {w}");
            assert_eq!(m.get(1, w), -1);
            assert_eq!(m.get(2, w), 0);
        }
        let free = build_mask(&uniform_scan(3.0), &c, pose).unwrap();
        assert_eq!(free.occupied_count(), 0);
        assert!(build_mask(&ranges[..100], &c, pose).is_err());
    }

    #[test]
    fn fusion_is_occupied_union() {
        let pose = Pose::new(0.0, 0.0, 0.0);
        let mut a = vec![0i8; CELLS];
        let mut b = vec![0i8; CELLS];
        a[0] = -1;
        b[1] = -1;
        let ma = RadialOccupancyMask::from_cells(a, pose).unwrap();
        let mb = RadialOccupancyMask::from_cells(b, pose).unwrap();
        let f = fuse_masks(&ma, &mb).unwrap();
        assert_eq!(&f.cells()[..3], &[-1, -1, 0]);
        assert_eq!(fuse_masks(&ma, &RadialOccupancyMask::empty(pose)).unwrap(), ma);
        assert_eq!(fuse_masks(&ma, &ma).unwrap(), ma);
        let moved = RadialOccupancyMask::empty(Pose::new(1.0, 0.0, 0.0));
        assert!(fuse_masks(&ma, &moved).is_err());
    }

    #[test]
    fn occupied_proportion_cases() {
        let pose = Pose::new(0.0, 0.0, 0.0);
        let zero = RadialOccupancyMask::empty(pose);
        assert_eq!(occupied_proportion(&[zero.clone(), zero.clone()]).unwrap(), 0.0);
        let full = RadialOccupancyMask::from_cells(vec![-1; CELLS], pose).unwrap();
        assert_eq!(occupied_proportion(&[full]).unwrap(), 1.0);
        let mut cells = vec![0i8; CELLS];
        cells[..144].fill(-1);
        let tenth = RadialOccupancyMask::from_cells(cells, pose).unwrap();
        assert_abs_diff_eq!(occupied_proportion(&[tenth]).unwrap(), 0.1, epsilon = 1e-15);
        assert!(occupied_proportion(&[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(LidarConfig { angular_resolution: 0.7, ..cfg() }.validate().is_err());
        assert!(LidarConfig { max_range: 4.0, ..cfg() }.validate().is_err());
        assert_eq!(cfg().elevations().len(), 16);
        assert_abs_diff_eq!(cfg().elevations()[15], 11.25, epsilon = 1e-12);
    }
}
