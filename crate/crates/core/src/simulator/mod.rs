//! Synthetic multiview scenes with exact ground truth.
//!
//! Pedestrians are upright camera-facing silhouettes: two feet on the
//! ground around the standing point, a body rectangle from knee to shoulder
//! height and the head apex on the vertical through the standing point.
//! Boxes are the pixel bounds of the projected silhouette, so at zero noise
//! the box top is exactly the projected head and the standing-point pixel is
//! exactly the projected ground position.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::GridSpec;
use crate::cardboard::{BBox, Detection, Rgb};
use crate::derive_seed;
use crate::geometry::{CameraModel, PixelPoint, WorldPoint};

mod rig;

pub use rig::{ground_coverage, rig_grid, rig_preset, IMAGE_HEIGHT, IMAGE_WIDTH, RIG_PRESETS};

/// Height prior used by the fixed-height ablation.
pub const FIXED_HEIGHT: f64 = 1.8;

const KNEE_FRACTION: f64 = 0.3;
const SHOULDER_FRACTION: f64 = 0.82;
/// Share of a far box's width a nearer box must cover to hide its bottom.
const TRUNCATION_COVERAGE: f64 = 0.5;
/// Truncated boxes keeping less than this share of their height are dropped.
const MIN_VISIBLE_FRACTION: f64 = 0.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cannot place {n} pedestrians {min_separation} m apart after {attempts} attempts")]
    PlacementInfeasible {
        n: usize,
        min_separation: f64,
        attempts: usize,
    },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid scene configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub grid: GridSpec,
    pub n_pedestrians: usize,
    pub height_range: (f64, f64),
    pub body_width: f64,
    /// Distance between the feet along the walking direction.
    pub stance_width: f64,
    pub min_separation: f64,
    pub cameras: Vec<CameraModel>,
    pub seed: u64,
}

impl SceneConfig {
    /// Defaults around a camera rig and grid.
    pub fn new(grid: GridSpec, cameras: Vec<CameraModel>) -> Self {
        Self {
            grid,
            n_pedestrians: 20,
            height_range: (1.6, 1.9),
            body_width: 0.4,
            stance_width: 0.6,
            min_separation: 0.6,
            cameras,
            seed: 0,
        }
    }

    pub fn preset(rig: &str) -> Result<Self, SimError> {
        Ok(Self::new(rig_grid(rig)?, rig_preset(rig)?))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (lo, hi) = self.height_range;
        if !(lo > 0.0 && lo <= hi && hi < 3.0) {
            return Err(SimError::InvalidConfig(format!(
                "height range ({lo}, {hi}) must lie within (0, 3)"
            )));
        }
        if !(self.min_separation > 0.0) {
            return Err(SimError::InvalidConfig("min_separation must be positive".into()));
        }
        if !(self.body_width > 0.0) || !(self.stance_width >= 0.0) {
            return Err(SimError::InvalidConfig("body dimensions must be non-negative".into()));
        }
        self.grid
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Standard deviation of each box edge, pixels.
    pub box_sigma_px: f64,
    /// Standard deviation of each standing-point coordinate, pixels.
    pub standing_sigma_px: f64,
    /// Probability that a visible detection is missed.
    pub miss_rate: f64,
    /// Probability per view and frame of one false positive.
    pub false_positive_rate: f64,
    /// Boxes overlapping a nearer box beyond this IoU are dropped; a nearer
    /// box covering a box's lower part truncates it. 1 disables occlusion.
    pub occlusion_iou_threshold: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            box_sigma_px: 2.0,
            standing_sigma_px: 2.0,
            miss_rate: 0.05,
            false_positive_rate: 0.1,
            occlusion_iou_threshold: 0.5,
        }
    }
}

impl NoiseModel {
    /// Exact projections: no pixel noise, misses, false positives or occlusion.
    pub fn none() -> Self {
        Self {
            box_sigma_px: 0.0,
            standing_sigma_px: 0.0,
            miss_rate: 0.0,
            false_positive_rate: 0.0,
            occlusion_iou_threshold: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [self.miss_rate, self.false_positive_rate, self.occlusion_iou_threshold];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(SimError::InvalidConfig("noise rates must lie in [0, 1]".into()));
        }
        if !(self.box_sigma_px >= 0.0 && self.standing_sigma_px >= 0.0) {
            return Err(SimError::InvalidConfig("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }

    fn occlusion_enabled(&self) -> bool {
        self.occlusion_iou_threshold < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u32,
    pub position: WorldPoint,
    pub height: f64,
    pub color: Rgb,
    /// Walking direction, radians from world `X`.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub noise: NoiseModel,
    pub pedestrians: Vec<Pedestrian>,
    /// Detections per camera, in rig order.
    pub detections: Vec<Vec<Detection>>,
}

impl Scene {
    pub fn positions(&self) -> Vec<WorldPoint> {
        self.pedestrians.iter().map(|p| p.position).collect()
    }

    pub fn detection_count(&self) -> usize {
        self.detections.iter().map(Vec::len).sum()
    }
}

fn hsv_color(id: u32) -> Rgb {
    let h = (f64::from(id) * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.7, 0.9);
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) as f32, (g + m) as f32, (b + m) as f32]
}

/// Uniform positions over the grid extent with rejection sampling for the
/// minimum separation; heights uniform in the configured range.
pub fn place_pedestrians(cfg: &SceneConfig) -> Result<Vec<Pedestrian>, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let extent = cfg.grid.extent();
    let max_attempts = 10_000 * cfg.n_pedestrians;
    let mut attempts = 0;
    // Disks of diameter min_separation centered in the area fit in the area
    // grown by half a separation; hexagonal packing bounds how many fit.
    let s = cfg.min_separation;
    if s > 0.0 {
        let grown = (extent.width() + s) * (extent.height() + s);
        let capacity = grown / (s * s * 3f64.sqrt() / 2.0);
        if cfg.n_pedestrians as f64 > capacity {
            return Err(SimError::PlacementInfeasible {
                n: cfg.n_pedestrians,
                min_separation: s,
                attempts: 0,
            });
        }
    }
    let mut peds: Vec<Pedestrian> = Vec::with_capacity(cfg.n_pedestrians);
    while peds.len() < cfg.n_pedestrians {
        if attempts >= max_attempts {
            return Err(SimError::PlacementInfeasible {
                n: cfg.n_pedestrians,
                min_separation: cfg.min_separation,
                attempts,
            });
        }
        attempts += 1;
        let p = WorldPoint::ground(
            rng.random_range(extent.x_min..extent.x_max),
            rng.random_range(extent.y_min..extent.y_max),
        );
        if peds
            .iter()
            .any(|q| q.position.ground_distance(&p) < cfg.min_separation)
        {
            continue;
        }
        let (lo, hi) = cfg.height_range;
        let height = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        let id = peds.len() as u32;
        peds.push(Pedestrian {
            id,
            position: p,
            height,
            color: hsv_color(id),
            heading,
        });
    }
    Ok(peds)
}

/// Projected silhouette of a pedestrian in one view.
#[derive(Debug, Clone, Copy)]
struct Rendered {
    bbox: BBox,
    standing: PixelPoint,
    depth: f64,
}

fn render_silhouette(
    cam: &CameraModel,
    position: &WorldPoint,
    height: f64,
    heading: f64,
    cfg: &SceneConfig,
) -> Option<Rendered> {
    let center = cam.center();
    let (dx, dy) = (center.x() - position.x(), center.y() - position.y());
    let norm = dx.hypot(dy);
    // normal toward the camera; lateral axis in the silhouette plane
    let (lx, ly) = if norm > 1e-9 { (-dy / norm, dx / norm) } else { (1.0, 0.0) };
    let half_w = 0.5 * cfg.body_width;
    let half_s = 0.5 * cfg.stance_width;
    let (hx, hy) = (heading.cos(), heading.sin());
    let (x, y) = (position.x(), position.y());

    let mut vertices = vec![
        WorldPoint::ground(x + half_s * hx, y + half_s * hy),
        WorldPoint::ground(x - half_s * hx, y - half_s * hy),
        WorldPoint::new(x, y, height),
    ];
    for z in [KNEE_FRACTION * height, SHOULDER_FRACTION * height] {
        vertices.push(WorldPoint::new(x + half_w * lx, y + half_w * ly, z));
        vertices.push(WorldPoint::new(x - half_w * lx, y - half_w * ly, z));
    }

    let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &vertices {
        let px = cam.project(p).ok()?;
        if !cam.contains(&px) {
            return None;
        }
        u0 = u0.min(px.u);
        v0 = v0.min(px.v);
        u1 = u1.max(px.u);
        v1 = v1.max(px.v);
    }
    let standing = cam.project(position).ok()?;
    Some(Rendered {
        bbox: BBox::new(u0, v0, u1, v1).ok()?,
        standing,
        depth: cam.world_to_camera(position).depth(),
    })
}

/// Applies IoU dropout and bottom truncation to clean boxes; returns the
/// surviving boxes by index.
fn apply_occlusion(rendered: &[(usize, Rendered)], threshold: f64) -> Vec<(usize, BBox)> {
    let mut order: Vec<usize> = (0..rendered.len()).collect();
    order.sort_by(|&a, &b| rendered[a].1.depth.total_cmp(&rendered[b].1.depth).then(a.cmp(&b)));
    let mut kept = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let far = rendered[i].1.bbox;
        let mut bottom = far.v_max;
        let mut dropped = false;
        for &j in &order[..k] {
            let near = rendered[j].1.bbox;
            if far.iou(&near) > threshold {
                dropped = true;
                break;
            }
            let overlap = far.u_max.min(near.u_max) - far.u_min.max(near.u_min);
            if overlap >= TRUNCATION_COVERAGE * far.width() && near.v_min < bottom && near.v_max >= far.v_max {
                bottom = bottom.min(near.v_min);
            }
        }
        if dropped || bottom - far.v_min < MIN_VISIBLE_FRACTION * far.height() {
            continue;
        }
        if let Ok(b) = BBox::new(far.u_min, far.v_min, far.u_max, bottom) {
            kept.push((rendered[i].0, b));
        }
    }
    kept.sort_by_key(|&(idx, _)| idx);
    kept
}

fn jitter_box(b: &BBox, sigma: f64, rng: &mut ChaCha8Rng, cam: &CameraModel) -> Option<BBox> {
    let mut e = [b.u_min, b.v_min, b.u_max, b.v_max];
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("sigma is finite");
        e.iter_mut().for_each(|v| *v += normal.sample(rng));
    }
    let (w, h) = (f64::from(cam.width), f64::from(cam.height));
    BBox::new(e[0].clamp(0.0, w), e[1].clamp(0.0, h), e[2].clamp(0.0, w), e[3].clamp(0.0, h)).ok()
}

fn render_view(
    view: usize,
    cam: &CameraModel,
    peds: &[Pedestrian],
    cfg: &SceneConfig,
    noise: &NoiseModel,
) -> Vec<Detection> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1000 + view as u64));
    let rendered: Vec<(usize, Rendered)> = peds
        .iter()
        .enumerate()
        .filter_map(|(i, p)| render_silhouette(cam, &p.position, p.height, p.heading, cfg).map(|r| (i, r)))
        .collect();
    let survivors: Vec<(usize, BBox)> = if noise.occlusion_enabled() {
        apply_occlusion(&rendered, noise.occlusion_iou_threshold)
    } else {
        rendered.iter().map(|(i, r)| (*i, r.bbox)).collect()
    };

    let standing_noise = (noise.standing_sigma_px > 0.0)
        .then(|| Normal::new(0.0, noise.standing_sigma_px).expect("sigma is finite"));
    let mut out = Vec::new();
    for (i, bbox) in survivors {
        // fixed draw order per detection keeps streams aligned across settings
        let miss: f64 = rng.random();
        let confidence = rng.random_range(0.7..1.0);
        let Some(bbox) = jitter_box(&bbox, noise.box_sigma_px, &mut rng, cam) else {
            continue;
        };
        let clean = rendered.iter().find(|(k, _)| *k == i).expect("survivor was rendered").1.standing;
        let standing = match &standing_noise {
            Some(n) => PixelPoint::new(clean.u + n.sample(&mut rng), clean.v + n.sample(&mut rng)),
            None => clean,
        };
        if miss < noise.miss_rate {
            continue;
        }
        let ped = &peds[i];
        let mut det = Detection::new(cam.id.clone(), bbox, standing)
            .with_color(ped.color)
            .with_confidence(confidence);
        det.pedestrian_id = Some(ped.id);
        out.push(det);
    }

    let fp_draw: f64 = rng.random();
    if fp_draw < noise.false_positive_rate {
        let extent = cfg.grid.extent();
        let position = WorldPoint::ground(
            rng.random_range(extent.x_min..extent.x_max),
            rng.random_range(extent.y_min..extent.y_max),
        );
        let (lo, hi) = cfg.height_range;
        let height = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        let color = [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()];
        let confidence = rng.random_range(0.3..0.8);
        if let Some(r) = render_silhouette(cam, &position, height, heading, cfg) {
            if let Some(bbox) = jitter_box(&r.bbox, noise.box_sigma_px, &mut rng, cam) {
                out.push(
                    Detection::new(cam.id.clone(), bbox, r.standing)
                        .with_color(color)
                        .with_confidence(confidence),
                );
            }
        }
    }
    out
}

/// Per-camera detections for the given pedestrians. Each view draws from
/// its own random stream, so rendering order does not affect the result.
pub fn render_detections(peds: &[Pedestrian], cfg: &SceneConfig, noise: &NoiseModel) -> Vec<Vec<Detection>> {
    cfg.cameras
        .par_iter()
        .enumerate()
        .map(|(view, cam)| render_view(view, cam, peds, cfg, noise))
        .collect()
}

/// Places pedestrians and renders every view.
pub fn simulate(cfg: &SceneConfig, noise: &NoiseModel) -> Result<Scene, SimError> {
    noise.validate()?;
    let pedestrians = place_pedestrians(cfg)?;
    let detections = render_detections(&pedestrians, cfg, noise);
    Ok(Scene {
        config: cfg.clone(),
        noise: *noise,
        pedestrians,
        detections,
    })
}

/// Number of views in which each pedestrian is rendered at all, ignoring
/// noise and occlusion.
pub fn visible_view_counts(peds: &[Pedestrian], cfg: &SceneConfig) -> Vec<usize> {
    peds.iter()
        .map(|p| {
            cfg.cameras
                .iter()
                .filter(|cam| render_silhouette(cam, &p.position, p.height, p.heading, cfg).is_some())
                .count()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raytrace::{anchor_from_detection, AnchorOptions};

    fn wildtrack(n: usize, seed: u64) -> SceneConfig {
        let mut cfg = SceneConfig::preset("wildtrack_like").unwrap();
        cfg.n_pedestrians = n;
        cfg.seed = seed;
        cfg
    }

    #[test]
    fn empty_scene() {
        let scene = simulate(&wildtrack(0, 1), &NoiseModel::none()).unwrap();
        assert!(scene.pedestrians.is_empty());
        assert_eq!(scene.detection_count(), 0);
        assert_eq!(scene.detections.len(), 7);
    }

    #[test]
    fn separation_is_respected() {
        let mut cfg = wildtrack(2, 5);
        cfg.min_separation = 5.0;
        let peds = place_pedestrians(&cfg).unwrap();
        assert!(peds[0].position.ground_distance(&peds[1].position) >= 5.0);
    }

    #[test]
    fn placement_can_be_infeasible() {
        let mut cfg = wildtrack(5, 5);
        cfg.min_separation = 100.0;
        assert!(matches!(place_pedestrians(&cfg), Err(SimError::PlacementInfeasible { .. })));
        // beyond the packing bound: rejected before any attempt
        let cfg = wildtrack(100_000, 5);
        assert!(matches!(
            place_pedestrians(&cfg),
            Err(SimError::PlacementInfeasible { attempts: 0, .. })
        ));
    }

    #[test]
    fn same_seed_same_scene() {
        let cfg = wildtrack(15, 42);
        let a = simulate(&cfg, &NoiseModel::default()).unwrap();
        let b = simulate(&cfg, &NoiseModel::default()).unwrap();
        assert_eq!(a, b);
        let c = simulate(&wildtrack(15, 43), &NoiseModel::default()).unwrap();
        assert_ne!(a.pedestrians, c.pedestrians);
    }

    #[test]
    fn zero_noise_detections_are_exact() {
        let cfg = wildtrack(20, 9);
        let scene = simulate(&cfg, &NoiseModel::none()).unwrap();
        assert!(scene.detection_count() > 40);
        for (view, dets) in scene.detections.iter().enumerate() {
            let cam = &cfg.cameras[view];
            for det in dets {
                let ped = &scene.pedestrians[det.pedestrian_id.unwrap() as usize];
                assert_eq!(det.standing_px, cam.project(&ped.position).unwrap());
                let head = cam.project(&WorldPoint::new(ped.position.x(), ped.position.y(), ped.height)).unwrap();
                assert_eq!(det.bbox.v_min, head.v, "box top must be the head apex");
                let a = anchor_from_detection(cam, det, &AnchorOptions::default()).unwrap();
                assert!(a.standing_world.ground_distance(&ped.position) < 1e-9);
                assert!((a.height - ped.height).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn full_miss_rate_removes_everything() {
        let noise = NoiseModel {
            miss_rate: 1.0,
            false_positive_rate: 0.0,
            ..NoiseModel::default()
        };
        let scene = simulate(&wildtrack(20, 3), &noise).unwrap();
        assert_eq!(scene.detection_count(), 0);
    }

    #[test]
    fn occlusion_only_removes_or_shrinks() {
        let cfg = wildtrack(60, 17);
        let clean = simulate(&cfg, &NoiseModel::none()).unwrap();
        let occluded = simulate(
            &cfg,
            &NoiseModel {
                occlusion_iou_threshold: 0.5,
                ..NoiseModel::none()
            },
        )
        .unwrap();
        assert!(occluded.detection_count() <= clean.detection_count());
        let mut truncated = 0;
        for (a, b) in clean.detections.iter().zip(&occluded.detections) {
            for det in b {
                let orig = a.iter().find(|d| d.pedestrian_id == det.pedestrian_id).unwrap();
                assert_eq!(det.bbox.v_min, orig.bbox.v_min);
                assert!(det.bbox.v_max <= orig.bbox.v_max);
                truncated += usize::from(det.bbox.v_max < orig.bbox.v_max);
            }
        }
        assert!(truncated > 0);
    }

    #[test]
    fn streams_are_per_view() {
        // dropping a camera leaves the other views' detections unchanged
        let cfg = wildtrack(20, 8);
        let full = simulate(&cfg, &NoiseModel::default()).unwrap();
        let mut fewer = cfg.clone();
        fewer.cameras.truncate(3);
        let part = simulate(&fewer, &NoiseModel::default()).unwrap();
        assert_eq!(&full.detections[..3], &part.detections[..]);
    }

    #[test]
    fn every_pedestrian_is_seen_twice() {
        for seed in 0..5 {
            let cfg = wildtrack(20, seed);
            let peds = place_pedestrians(&cfg).unwrap();
            let counts = visible_view_counts(&peds, &cfg);
            assert!(counts.iter().all(|&c| c >= 2), "seed {seed}: {counts:?}");
        }
    }
}
