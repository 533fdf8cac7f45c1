//! Rectangular-room scenes and a deterministic image-method path tracer.
//!
//! Paths are the LOS ray (unless blocked), one specular bounce per wall,
//! and, when the band's path budget is not yet met, second-order bounces.
//! In a box every image source corresponds to a valid specular path, so no
//! visibility test is needed. Geometry is shared by both bands; only the
//! wavelength-dependent power and phase differ.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pose::{gcs_to_lcs, Pose};
use super::SPEED_OF_LIGHT;
use crate::sphgrid::{dot, Direction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Sub6,
    MmWave,
}

/// How user-terminal orientations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OrientationMode {
    /// Half portrait (`α ∈ [-π, π)`, `β = 0`, `γ ∈ [0, π/2]`), half landscape
    /// (`α ∈ [-π, π)`, `β ∈ [-π/2, 0]`, `γ = 0`).
    PortraitLandscape,
    Fixed { angles: [f64; 3] },
}

/// Axis-aligned user grid at a fixed height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserGrid {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub height: f64,
}

/// Room, AP placement, and propagation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// Room extent along x, y, z; the room spans `[0, dims]`.
    pub room: [f64; 3],
    pub ap: Pose,
    pub user_grid: UserGrid,
    /// Reflection loss per wall in dB: x=0, x=max, y=0, y=max, floor, ceiling.
    pub wall_loss_db: [f64; 6],
    pub sub6_hz: f64,
    pub mmwave_hz: f64,
    pub los_block_probability: f64,
    pub max_paths_mmwave: usize,
    pub max_paths_sub6: usize,
    pub orientation: OrientationMode,
}

impl Scene {
    /// 7×7×3 m room, AP near the middle of the x=0 wall, 60 GHz.
    pub fn indoor() -> Self {
        Scene {
            room: [7.0, 7.0, 3.0],
            ap: Pose::new([0.1, 3.5, 2.5], [0.0, 0.0, 0.0]),
            user_grid: UserGrid {
                x: [2.5, 6.5],
                y: [0.25, 6.75],
                height: 1.5,
            },
            wall_loss_db: [8.0; 6],
            sub6_hz: 3.5e9,
            mmwave_hz: 60e9,
            los_block_probability: 0.5,
            max_paths_mmwave: 5,
            max_paths_sub6: 15,
            orientation: OrientationMode::PortraitLandscape,
        }
    }

    /// Same room as a dual-band 3.5/28 GHz cell with a fixed-orientation terminal.
    pub fn dual_band() -> Self {
        Scene {
            mmwave_hz: 28e9,
            orientation: OrientationMode::Fixed { angles: [0.0; 3] },
            ..Scene::indoor()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.room.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::config("room dimensions must be positive"));
        }
        if self.wall_loss_db.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::config("wall losses must be >= 0 dB"));
        }
        if !self.inside(&self.ap.position) {
            return Err(Error::config("AP must be strictly inside the room"));
        }
        let g = &self.user_grid;
        if g.x[0] > g.x[1] || g.y[0] > g.y[1] {
            return Err(Error::config("user grid bounds are inverted"));
        }
        for corner in [[g.x[0], g.y[0], g.height], [g.x[1], g.y[1], g.height]] {
            if !self.inside(&corner) {
                return Err(Error::config("user grid must lie inside the room"));
            }
        }
        if !(0.0..=1.0).contains(&self.los_block_probability) {
            return Err(Error::config("LOS block probability must be in [0, 1]"));
        }
        if self.sub6_hz <= 0.0 || self.mmwave_hz <= 0.0 {
            return Err(Error::config("carrier frequencies must be positive"));
        }
        if self.max_paths_mmwave == 0 || self.max_paths_sub6 == 0 {
            return Err(Error::config("path budgets must be >= 1"));
        }
        Ok(())
    }

    pub fn inside(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] > 0.0 && p[i] < self.room[i])
    }

    pub fn carrier_hz(&self, band: Band) -> f64 {
        match band {
            Band::Sub6 => self.sub6_hz,
            Band::MmWave => self.mmwave_hz,
        }
    }

    pub fn wavelength(&self, band: Band) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz(band)
    }

    pub fn path_budget(&self, band: Band) -> usize {
        match band {
            Band::Sub6 => self.max_paths_sub6,
            Band::MmWave => self.max_paths_mmwave,
        }
    }

    /// The six walls with inward normals.
    pub fn walls(&self) -> [Wall; 6] {
        let [x, y, z] = self.room;
        let loss = self.wall_loss_db;
        [
            Wall::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], loss[0]),
            Wall::new([x, 0.0, 0.0], [-1.0, 0.0, 0.0], loss[1]),
            Wall::new([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], loss[2]),
            Wall::new([0.0, y, 0.0], [0.0, -1.0, 0.0], loss[3]),
            Wall::new([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], loss[4]),
            Wall::new([0.0, 0.0, z], [0.0, 0.0, -1.0], loss[5]),
        ]
    }
}

/// A reflecting plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub loss_db: f64,
}

impl Wall {
    pub fn new(point: [f64; 3], normal: [f64; 3], loss_db: f64) -> Self {
        let n = dot(&normal, &normal).sqrt();
        Wall {
            point,
            normal: [normal[0] / n, normal[1] / n, normal[2] / n],
            loss_db,
        }
    }

    /// Mirror image of `p` across the wall plane.
    pub fn reflect(&self, p: &[f64; 3]) -> [f64; 3] {
        let d = sub(p, &self.point);
        let s = 2.0 * dot(&d, &self.normal);
        [p[0] - s * self.normal[0], p[1] - s * self.normal[1], p[2] - s * self.normal[2]]
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Band-independent geometry of one propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPath {
    pub length: f64,
    /// GCS direction leaving the AP.
    pub departure: [f64; 3],
    /// GCS direction from the UT toward where the wave arrives from.
    pub arrival: [f64; 3],
    pub loss_db: f64,
    /// Walls hit in order.
    pub bounces: Vec<usize>,
}

impl GeoPath {
    pub fn is_los(&self) -> bool {
        self.bounces.is_empty()
    }
}

/// LOS, first-order, and (optionally) second-order image paths between two
/// points inside a set of walls. Duplicate images are dropped.
pub fn trace_geometry(
    ap: &[f64; 3],
    ut: &[f64; 3],
    walls: &[Wall],
    los_blocked: bool,
    second_order: bool,
) -> Vec<GeoPath> {
    let mut out = Vec::new();
    if !los_blocked {
        out.push(GeoPath {
            length: norm(&sub(ut, ap)),
            departure: sub(ut, ap),
            arrival: sub(ap, ut),
            loss_db: 0.0,
            bounces: vec![],
        });
    }
    for (w, wall) in walls.iter().enumerate() {
        let image = wall.reflect(ap);
        let ut_image = wall.reflect(ut);
        out.push(GeoPath {
            length: norm(&sub(ut, &image)),
            departure: sub(&ut_image, ap),
            arrival: sub(&image, ut),
            loss_db: wall.loss_db,
            bounces: vec![w],
        });
    }
    if second_order {
        let mut images: Vec<[f64; 3]> = Vec::new();
        for (w1, first) in walls.iter().enumerate() {
            for (w2, second) in walls.iter().enumerate() {
                if w1 == w2 {
                    continue;
                }
                let image = second.reflect(&first.reflect(ap));
                if images.iter().any(|p| norm(&sub(p, &image)) < 1e-9) {
                    continue;
                }
                images.push(image);
                // the UT is unfolded through the walls in reverse order
                let ut_image = first.reflect(&second.reflect(ut));
                out.push(GeoPath {
                    length: norm(&sub(ut, &image)),
                    departure: sub(&ut_image, ap),
                    arrival: sub(&image, ut),
                    loss_db: first.loss_db + second.loss_db,
                    bounces: vec![w1, w2],
                });
            }
        }
    }
    out
}

/// One path of a [`PathSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Linear power gain `ρ_l`.
    pub power: f64,
    /// Phase `ϑ_l` in `[0, 2π)`.
    pub phase: f64,
    /// Departure direction in the AP LCS.
    pub aod: Direction,
    /// Arrival direction in the UT LCS.
    pub aoa: Direction,
    /// Delay in seconds.
    pub delay: f64,
    pub is_los: bool,
}

impl Path {
    /// `α_l = √ρ_l · e^{jϑ_l}`.
    pub fn complex_gain(&self) -> crate::C64 {
        crate::C64::from_polar(self.power.sqrt(), self.phase)
    }
}

/// Multipath description of one link in one band, strongest path first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub band: Band,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn has_los(&self) -> bool {
        self.paths.iter().any(|p| p.is_los)
    }
}

/// Converts geometric paths to band-specific paths and keeps the strongest
/// `budget` of them. Ties keep tracing order.
pub fn paths_for_band(
    geo: &[GeoPath],
    ap: &Pose,
    ut: &Pose,
    wavelength: f64,
    band: Band,
    budget: usize,
) -> Result<PathSet> {
    let mut paths = Vec::with_capacity(geo.len());
    for g in geo {
        let friis = (wavelength / (4.0 * PI * g.length)).powi(2);
        let power = friis * 10f64.powf(-g.loss_db / 10.0);
        let mut phase = (-TAU * g.length / wavelength).rem_euclid(TAU);
        if phase >= TAU {
            phase = 0.0;
        }
        paths.push(Path {
            power,
            phase,
            aod: gcs_to_lcs(&g.departure, ap)?,
            aoa: gcs_to_lcs(&g.arrival, ut)?,
            delay: g.length / SPEED_OF_LIGHT,
            is_los: g.is_los(),
        });
    }
    // stable sort keeps tracing order among equal powers
    paths.sort_by(|a, b| b.power.total_cmp(&a.power));
    paths.truncate(budget);
    Ok(PathSet { band, paths })
}

/// Traces the AP→UT link in `scene` for one band.
pub fn trace_paths(scene: &Scene, ut: &Pose, los_blocked: bool, band: Band) -> Result<PathSet> {
    if !scene.inside(&ut.position) {
        return Err(Error::invalid(format!("UT position {:?} is outside the room", ut.position)));
    }
    let walls = scene.walls();
    let budget = scene.path_budget(band);
    let first_order = walls.len() + usize::from(!los_blocked);
    let geo = trace_geometry(&scene.ap.position, &ut.position, &walls, los_blocked, first_order < budget);
    paths_for_band(&geo, &scene.ap, ut, scene.wavelength(band), band, budget)
}

/// Draws a UT pose on the user grid.
pub fn sample_pose<R: Rng + ?Sized>(scene: &Scene, rng: &mut R) -> Pose {
    let g = &scene.user_grid;
    let x = uniform(rng, g.x[0], g.x[1]);
    let y = uniform(rng, g.y[0], g.y[1]);
    let orientation = match scene.orientation {
        OrientationMode::Fixed { angles } => angles,
        OrientationMode::PortraitLandscape => {
            let alpha = rng.random_range(-PI..PI);
            if rng.random_bool(0.5) {
                [alpha, 0.0, rng.random_range(0.0..=FRAC_PI_2)]
            } else {
                [alpha, rng.random_range(-FRAC_PI_2..=0.0), 0.0]
            }
        }
    };
    Pose::new([x, y, g.height], orientation)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::pose::rotation_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn los_only(scene: &Scene) -> Scene {
        Scene {
            max_paths_mmwave: 1,
            ..scene.clone()
        }
    }

    #[test]
    fn los_on_boresight() {
        let scene = los_only(&Scene::indoor());
        let ut = Pose::new([4.1, 3.5, 2.5], [0.0; 3]);
        let ps = trace_paths(&scene, &ut, false, Band::MmWave).unwrap();
        assert_eq!(ps.len(), 1);
        let p = ps.paths[0];
        assert!(p.is_los);
        let lambda = SPEED_OF_LIGHT / 60e9;
        let want = (lambda / (4.0 * PI * 4.0)).powi(2);
        assert!((p.power - want).abs() < 1e-12 * want);
        // AoD on AP boresight, AoA pointing back at the AP (-x)
        assert!(p.aod.angle_to(&Direction::new(0.0, FRAC_PI_2)) < 1e-12);
        assert!(p.aoa.angle_to(&Direction::new(PI, FRAC_PI_2)) < 1e-12);
        assert!((p.delay - 4.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn outside_room_rejected() {
        let scene = Scene::indoor();
        let ut = Pose::new([8.0, 3.0, 1.5], [0.0; 3]);
        assert!(matches!(trace_paths(&scene, &ut, false, Band::MmWave), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn image_path_length_matches_geometric_oracle() {
        // Oracle: reflect the AP across each axis-aligned wall by hand.
        let scene = Scene::indoor();
        let ap = scene.ap.position;
        let ut = [4.0, 2.0, 1.5];
        let [x, y, z] = scene.room;
        let images = [
            [-ap[0], ap[1], ap[2]],
            [2.0 * x - ap[0], ap[1], ap[2]],
            [ap[0], -ap[1], ap[2]],
            [ap[0], 2.0 * y - ap[1], ap[2]],
            [ap[0], ap[1], -ap[2]],
            [ap[0], ap[1], 2.0 * z - ap[2]],
        ];
        let geo = trace_geometry(&ap, &ut, &scene.walls(), true, false);
        assert_eq!(geo.len(), 6);
        for (g, img) in geo.iter().zip(images) {
            let d = ((img[0] - ut[0]).powi(2) + (img[1] - ut[1]).powi(2) + (img[2] - ut[2]).powi(2)).sqrt();
            assert!((g.length - d).abs() < 1e-12);
            // the bounce point lies on the wall and on both ray legs
            let w = scene.walls()[g.bounces[0]];
            let t = dot(&sub(&w.point, &ut), &w.normal) / dot(&g.arrival, &w.normal);
            let hit = [ut[0] + t * g.arrival[0], ut[1] + t * g.arrival[1], ut[2] + t * g.arrival[2]];
            let legs = norm(&sub(&hit, &ap)) + norm(&sub(&hit, &ut));
            assert!((legs - d).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_pathset() {
        let scene = Scene::indoor();
        let ut = Pose::new([3.3, 4.4, 1.5], [0.3, -0.2, 0.1]);
        let a = trace_paths(&scene, &ut, false, Band::Sub6).unwrap();
        let b = trace_paths(&scene, &ut, false, Band::Sub6).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn path_budgets_and_los_first() {
        let scene = Scene::indoor();
        let ut = Pose::new([5.0, 2.0, 1.5], [0.0; 3]);
        let mm = trace_paths(&scene, &ut, false, Band::MmWave).unwrap();
        assert_eq!(mm.len(), 5);
        let s6 = trace_paths(&scene, &ut, false, Band::Sub6).unwrap();
        assert_eq!(s6.len(), 15);
        let min_delay = s6.paths.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min);
        let los = s6.paths.iter().find(|p| p.is_los).unwrap();
        assert_eq!(los.delay, min_delay);
        assert!(mm.paths[0].is_los);
        let blocked = trace_paths(&scene, &ut, true, Band::MmWave).unwrap();
        assert!(!blocked.has_los());
        for p in s6.paths.iter().chain(&mm.paths) {
            assert!(p.power >= 0.0 && p.delay >= 0.0);
        }
    }

    #[test]
    fn second_order_images_unique() {
        let scene = Scene::indoor();
        let geo = trace_geometry(&scene.ap.position, &[4.0, 4.0, 1.5], &scene.walls(), false, true);
        // 1 LOS + 6 first order + 12 corner + 6 parallel-pair images
        assert_eq!(geo.len(), 1 + 6 + 18);
    }

    #[test]
    fn friis_distance_scaling() {
        let scene = los_only(&Scene {
            room: [30.0, 7.0, 3.0],
            ..Scene::indoor()
        });
        let near = Pose::new([2.1, 3.5, 2.5], [0.0; 3]);
        let far = Pose::new([4.1, 3.5, 2.5], [0.0; 3]);
        let p1 = trace_paths(&scene, &near, false, Band::MmWave).unwrap().paths[0].power;
        let p2 = trace_paths(&scene, &far, false, Band::MmWave).unwrap().paths[0].power;
        assert!((p1 / p2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn joint_rotation_leaves_lcs_quantities_unchanged() {
        let scene = Scene::indoor();
        let ap = scene.ap;
        let ut = Pose::new([4.2, 1.7, 1.5], [0.7, -0.3, 0.2]);
        let walls = scene.walls();
        let geo = trace_geometry(&ap.position, &ut.position, &walls, false, true);
        let base = paths_for_band(&geo, &ap, &ut, 0.005, Band::MmWave, 25).unwrap();

        let q = rotation_matrix(1.1, -0.4, 0.9);
        let rot_pose = |p: &Pose| Pose::new(q.apply(&p.position), q.compose(&p.rotation()).to_zyx_angles());
        let rwalls: Vec<Wall> = walls
            .iter()
            .map(|w| Wall::new(q.apply(&w.point), q.apply(&w.normal), w.loss_db))
            .collect();
        let (ap2, ut2) = (rot_pose(&ap), rot_pose(&ut));
        let geo2 = trace_geometry(&ap2.position, &ut2.position, &rwalls, false, true);
        let rotated = paths_for_band(&geo2, &ap2, &ut2, 0.005, Band::MmWave, 25).unwrap();
        assert_eq!(base.len(), rotated.len());
        for (a, b) in base.paths.iter().zip(&rotated.paths) {
            assert!((a.power - b.power).abs() < 1e-12 * a.power);
            assert!((a.delay - b.delay).abs() < 1e-20);
            assert!(a.aod.angle_to(&b.aod) < 1e-9);
            assert!(a.aoa.angle_to(&b.aoa) < 1e-9);
        }
    }

    #[test]
    fn pose_sampling() {
        let scene = Scene::indoor();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut portrait = 0usize;
        for _ in 0..n {
            let p = sample_pose(&scene, &mut rng);
            let g = scene.user_grid;
            assert!(p.position[0] >= g.x[0] && p.position[0] <= g.x[1]);
            assert!(p.position[1] >= g.y[0] && p.position[1] <= g.y[1]);
            assert_eq!(p.position[2], g.height);
            let [a, b, c] = p.orientation;
            assert!((-PI..PI).contains(&a));
            if b == 0.0 && c != 0.0 {
                portrait += 1;
                assert!((0.0..=FRAC_PI_2).contains(&c));
            } else if c == 0.0 && b != 0.0 {
                assert!((-FRAC_PI_2..=0.0).contains(&b));
            } else {
                // both zero has measure zero; count as portrait to stay total
                portrait += usize::from(b == 0.0);
            }
        }
        let frac = portrait as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.01, "portrait fraction {frac}");
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::indoor().validate().is_ok());
        assert!(Scene::dual_band().validate().is_ok());
        let bad = Scene {
            wall_loss_db: [-1.0; 6],
            ..Scene::indoor()
        };
        assert!(bad.validate().is_err());
        let bad = Scene {
            user_grid: UserGrid {
                x: [1.0, 9.0],
                y: [1.0, 2.0],
                height: 1.5,
            },
            ..Scene::indoor()
        };
        assert!(bad.validate().is_err());
    }
}
