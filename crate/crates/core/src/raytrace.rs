//! Closed-form depth recovery by intersecting pixel rays with the ground
//! plane, and row-wise depth interpolation over a detection box.
//!
//! A pixel ray is `P = O + t D` with `O` the camera center and
//! `D = R^T [(u - cx)/fx, (v - cy)/fy, 1]`. The standing point is where the
//! ray through the standing-point pixel meets `Z = 0`, i.e. `t = -O_z / D_z`.
//! The head shares the standing point's `X`/`Y`, so the head ray is solved
//! for `t` through one of those coordinates and the resulting `Z` is the
//! pedestrian height.

use nalgebra::Vector3;
use thiserror::Error;

use crate::cardboard::{BBox, Detection};
use crate::geometry::{CameraModel, CameraPoint, GeometryError, PixelPoint, WorldPoint};

/// Direction components below this magnitude are treated as zero.
pub const DIRECTION_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayError {
    #[error("ray is parallel to the ground plane")]
    RayParallelToGround,
    #[error("ground intersection lies behind the camera (t = {t})")]
    IntersectionBehindCamera { t: f64 },
    #[error("head ray has no horizontal component")]
    DegenerateHeadRay,
    #[error("head lies at or below the ground (z = {z})")]
    NegativeHeight { z: f64 },
    #[error("recovered height {height:.3} m is outside [{min}, {max}]")]
    ImplausibleHeight { height: f64, min: f64, max: f64 },
    #[error("standing point ({u:.1}, {v:.1}) is outside the image")]
    StandingPointOutsideImage { u: f64, v: f64 },
    #[error("box is too small to interpolate ({height:.2} px tall)")]
    DegenerateBox { height: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl RayError {
    /// Short stable label used when counting dropped detections.
    pub fn category(&self) -> &'static str {
        match self {
            RayError::RayParallelToGround => "ray_parallel_to_ground",
            RayError::IntersectionBehindCamera { .. } => "intersection_behind_camera",
            RayError::DegenerateHeadRay => "degenerate_head_ray",
            RayError::NegativeHeight { .. } => "negative_height",
            RayError::ImplausibleHeight { .. } => "implausible_height",
            RayError::StandingPointOutsideImage { .. } => "standing_point_outside_image",
            RayError::DegenerateBox { .. } => "degenerate_box",
            RayError::Geometry(_) => "geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: WorldPoint,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn at(&self, t: f64) -> WorldPoint {
        WorldPoint(self.origin.0 + t * self.direction)
    }
}

/// Where the standing-point pixel of a detection comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandingPointMode {
    /// The detection's own standing-point estimate.
    #[default]
    Keypoint,
    /// The bottom-center of the bounding box.
    BottomCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeightBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for HeightBounds {
    fn default() -> Self {
        Self { min: 0.5, max: 2.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnchorOptions {
    pub mode: StandingPointMode,
    pub height_bounds: HeightBounds,
}

/// Standing point and head of one pedestrian as seen from one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedestrianAnchor {
    pub standing_world: WorldPoint,
    pub head_world: WorldPoint,
    pub standing_depth: f64,
    pub head_depth: f64,
    pub height: f64,
}

impl PedestrianAnchor {
    fn from_points(cam: &CameraModel, standing: WorldPoint, height: f64) -> Self {
        let head = WorldPoint::new(standing.x(), standing.y(), height);
        Self {
            standing_world: standing,
            head_world: head,
            standing_depth: cam.world_to_camera(&standing).depth(),
            head_depth: cam.world_to_camera(&head).depth(),
            height,
        }
    }

    /// The same anchor with its height replaced, e.g. by a fixed 1.8 m prior.
    pub fn with_height(&self, cam: &CameraModel, height: f64) -> Self {
        Self::from_points(cam, self.standing_world, height)
    }
}

pub fn pixel_ray(cam: &CameraModel, px: &PixelPoint) -> Ray {
    let k = &cam.intrinsics;
    let camera_dir = Vector3::new((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0);
    Ray {
        origin: cam.center(),
        direction: cam.extrinsics.rotation().transpose() * camera_dir,
    }
}

pub fn intersect_ground(ray: &Ray) -> Result<WorldPoint, RayError> {
    let dz = ray.direction.z;
    if dz.abs() < DIRECTION_EPSILON {
        return Err(RayError::RayParallelToGround);
    }
    let t = -ray.origin.z() / dz;
    if t <= 0.0 {
        return Err(RayError::IntersectionBehindCamera { t });
    }
    let mut p = ray.at(t);
    p.0.z = 0.0;
    Ok(p)
}

/// Solves the head ray for the point above `standing`, substituting through
/// whichever horizontal direction component is larger.
pub fn solve_head(ray_head: &Ray, standing: &WorldPoint) -> Result<WorldPoint, RayError> {
    let d = &ray_head.direction;
    let o = &ray_head.origin;
    if d.x.abs() < DIRECTION_EPSILON && d.y.abs() < DIRECTION_EPSILON {
        return Err(RayError::DegenerateHeadRay);
    }
    let t = if d.x.abs() >= d.y.abs() {
        (standing.x() - o.x()) / d.x
    } else {
        (standing.y() - o.y()) / d.y
    };
    if t <= 0.0 {
        return Err(RayError::IntersectionBehindCamera { t });
    }
    let head = ray_head.at(t);
    if head.z() <= 0.0 {
        return Err(RayError::NegativeHeight { z: head.z() });
    }
    Ok(head)
}

/// Pixel in row `v_top` that lies on the image of the vertical line through
/// `standing`.
///
/// Vertical world lines are not vertical in the image for a pitched camera,
/// so the head pixel is taken on the projected vertical rather than in the
/// standing point's column.
pub fn head_pixel(cam: &CameraModel, standing: &WorldPoint, v_top: f64) -> Result<PixelPoint, RayError> {
    let k = &cam.intrinsics;
    let base = cam.world_to_camera(standing).0;
    let up = cam.extrinsics.rotation().column(2).into_owned();
    let dv = v_top - k.cy;
    // fy (b_y + z u_y) = dv (b_z + z u_z), solved for the height z
    let denom = k.fy * up.y - dv * up.z;
    if denom.abs() < DIRECTION_EPSILON {
        return Err(RayError::DegenerateHeadRay);
    }
    let z = (dv * base.z - k.fy * base.y) / denom;
    let head = CameraPoint(base + z * up);
    if head.depth() <= 0.0 {
        return Err(RayError::IntersectionBehindCamera { t: head.depth() });
    }
    Ok(PixelPoint::new(k.fx * head.0.x / head.0.z + k.cx, v_top))
}

/// Standing-point pixel of a detection under the chosen mode.
pub fn standing_pixel(det: &Detection, mode: StandingPointMode) -> PixelPoint {
    match mode {
        StandingPointMode::Keypoint => det.standing_px,
        StandingPointMode::BottomCenter => det.bbox.bottom_center(),
    }
}

pub fn anchor_from_detection(
    cam: &CameraModel,
    det: &Detection,
    opts: &AnchorOptions,
) -> Result<PedestrianAnchor, RayError> {
    let standing_px = standing_pixel(det, opts.mode);
    if !cam.contains(&standing_px) {
        return Err(RayError::StandingPointOutsideImage {
            u: standing_px.u,
            v: standing_px.v,
        });
    }
    let standing = intersect_ground(&pixel_ray(cam, &standing_px))?;

    let head_px = head_pixel(cam, &standing, det.bbox.v_min)?;
    let head = solve_head(&pixel_ray(cam, &head_px), &standing)?;
    let height = head.z();
    let bounds = opts.height_bounds;
    if !(bounds.min..=bounds.max).contains(&height) {
        return Err(RayError::ImplausibleHeight {
            height,
            min: bounds.min,
            max: bounds.max,
        });
    }
    Ok(PedestrianAnchor::from_points(cam, standing, height))
}

/// Per-pixel camera-frame depth over a box raster (see [`BBox::raster_dims`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthPatch {
    pub cols: usize,
    pub rows: usize,
    depths: Vec<f64>,
}

impl DepthPatch {
    pub fn new(cols: usize, rows: usize, depths: Vec<f64>) -> Self {
        assert_eq!(depths.len(), cols * rows, "depth buffer does not match dimensions");
        Self { cols, rows, depths }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.depths[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.depths[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.depths
    }
}

/// Fills the box with depths interpolated linearly by row, from the head
/// depth on the top row to the standing depth on the bottom row.
pub fn interpolate_box_depth(anchor: &PedestrianAnchor, bbox: &BBox) -> Result<DepthPatch, RayError> {
    let (cols, rows) = bbox.raster_dims();
    if rows < 2 {
        return Err(RayError::DegenerateBox { height: bbox.height() });
    }
    let last = (rows - 1) as f64;
    let lo = anchor.head_depth.min(anchor.standing_depth);
    let hi = anchor.head_depth.max(anchor.standing_depth);
    let mut depths = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let depth = if i == rows - 1 {
            anchor.standing_depth
        } else {
            let s = i as f64 / last;
            (anchor.head_depth + s * (anchor.standing_depth - anchor.head_depth)).clamp(lo, hi)
        };
        depths.extend(std::iter::repeat_n(depth, cols));
    }
    Ok(DepthPatch::new(cols, rows, depths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Extrinsics, Intrinsics};
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    fn identity_camera() -> CameraModel {
        CameraModel::new(
            "c",
            Intrinsics::new(1000.0, 1000.0, 960.0, 540.0).unwrap(),
            Extrinsics::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -5.0)).unwrap(),
            1920,
            1080,
        )
        .unwrap()
    }

    fn tilted_camera() -> CameraModel {
        CameraModel::new(
            "t",
            Intrinsics::new(1100.0, 1050.0, 955.0, 530.0).unwrap(),
            Extrinsics::look_at(Vector3::new(-4.0, -6.0, 5.0), Vector3::new(8.0, 4.0, 0.0)).unwrap(),
            1920,
            1080,
        )
        .unwrap()
    }

    fn ray(o: [f64; 3], d: [f64; 3]) -> Ray {
        Ray {
            origin: WorldPoint::new(o[0], o[1], o[2]),
            direction: Vector3::new(d[0], d[1], d[2]),
        }
    }

    #[test]
    fn principal_point_ray_is_optical_axis() {
        let cam = identity_camera();
        let r = pixel_ray(&cam, &PixelPoint::new(960.0, 540.0));
        assert_eq!(r.direction, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(r.origin, WorldPoint::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn analytic_ray_direction() {
        let cam = identity_camera();
        let r = pixel_ray(&cam, &PixelPoint::new(1960.0, 540.0));
        assert_eq!(r.direction, Vector3::new(1.0, 0.0, 1.0));
    }

    #[test]
    fn ray_reprojects_to_its_pixel() {
        let cam = tilted_camera();
        for (u, v) in [(0.0, 0.0), (960.0, 540.0), (1919.0, 1079.0), (123.4, 876.5)] {
            let r = pixel_ray(&cam, &PixelPoint::new(u, v));
            let px = cam.project(&r.at(2.0)).unwrap();
            assert!((px.u - u).abs() < 1e-9 && (px.v - v).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_intersection_examples() {
        let p = intersect_ground(&ray([0.0, 0.0, 5.0], [0.0, 0.0, -1.0])).unwrap();
        assert_eq!(p, WorldPoint::new(0.0, 0.0, 0.0));
        let p = intersect_ground(&ray([0.0, 0.0, 4.0], [0.6, 0.0, -0.8])).unwrap();
        assert_abs_diff_eq!(p.x(), 3.0, epsilon = 1e-12);
        assert_eq!(p.y(), 0.0);
        assert_eq!(p.z(), 0.0);
        assert!(matches!(
            intersect_ground(&ray([0.0, 0.0, 5.0], [1.0, 0.0, 1.0])),
            Err(RayError::IntersectionBehindCamera { .. })
        ));
        assert_eq!(
            intersect_ground(&ray([0.0, 0.0, 5.0], [1.0, 0.0, 0.0])),
            Err(RayError::RayParallelToGround)
        );
    }

    #[test]
    fn head_examples() {
        let standing = WorldPoint::new(2.0, 3.0, 0.0);
        let head = solve_head(&ray([0.0, 0.0, 2.0], [2.0, 3.0, -1.0]), &standing).unwrap();
        assert_abs_diff_eq!(head.x(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(head.y(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(head.z(), 1.0, epsilon = 1e-12);
        assert_eq!(
            solve_head(&ray([0.0, 0.0, 2.0], [0.0, 0.0, -1.0]), &standing),
            Err(RayError::DegenerateHeadRay)
        );
        assert!(matches!(
            solve_head(&ray([0.0, 0.0, 2.0], [2.0, 3.0, -3.0]), &standing),
            Err(RayError::NegativeHeight { .. })
        ));
    }

    fn detection_for(cam: &CameraModel, x: f64, y: f64, height: f64) -> Detection {
        let standing = cam.project(&WorldPoint::ground(x, y)).unwrap();
        let head = cam.project(&WorldPoint::new(x, y, height)).unwrap();
        let bbox = BBox::new(standing.u.min(head.u) - 20.0, head.v, standing.u.max(head.u) + 20.0, standing.v)
            .unwrap();
        Detection::new(cam.id.clone(), bbox, standing)
    }

    #[test]
    fn anchor_recovers_exact_pedestrian() {
        let cam = tilted_camera();
        for (x, y, h) in [(8.0, 4.0, 1.75), (2.0, 9.0, 1.62), (14.0, 1.0, 1.9)] {
            let det = detection_for(&cam, x, y, h);
            let a = anchor_from_detection(&cam, &det, &AnchorOptions::default()).unwrap();
            assert!(a.standing_world.ground_distance(&WorldPoint::ground(x, y)) < 1e-9);
            assert!((a.height - h).abs() < 1e-9);
            assert_eq!(a.standing_world.z(), 0.0);
            assert_eq!(a.head_world.x(), a.standing_world.x());
            assert_eq!(a.head_world.y(), a.standing_world.y());
            assert_abs_diff_eq!(
                a.standing_depth,
                cam.world_to_camera(&WorldPoint::ground(x, y)).depth(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn anchor_standing_on_horizon_is_parallel() {
        // level camera: the principal row is the horizon
        let ext = Extrinsics::look_at(Vector3::new(0.0, 0.0, 2.0), Vector3::new(10.0, 0.0, 2.0)).unwrap();
        let cam = CameraModel::new("h", Intrinsics::new(1000.0, 1000.0, 960.0, 540.0).unwrap(), ext, 1920, 1080)
            .unwrap();
        let bbox = BBox::new(0.0, 300.0, 40.0, 540.0).unwrap();
        let det = Detection::new("h", bbox, PixelPoint::new(0.0, 540.0));
        assert_eq!(
            anchor_from_detection(&cam, &det, &AnchorOptions::default()),
            Err(RayError::RayParallelToGround)
        );
    }

    #[test]
    fn anchor_rejects_implausible_height() {
        let cam = tilted_camera();
        let det = detection_for(&cam, 8.0, 4.0, 5.0);
        assert!(matches!(
            anchor_from_detection(&cam, &det, &AnchorOptions::default()),
            Err(RayError::ImplausibleHeight { .. })
        ));
    }

    #[test]
    fn anchor_rejects_standing_outside_image() {
        let cam = tilted_camera();
        let bbox = BBox::new(10.0, 10.0, 50.0, 100.0).unwrap();
        let det = Detection::new("t", bbox, PixelPoint::new(-5.0, 90.0));
        assert!(matches!(
            anchor_from_detection(&cam, &det, &AnchorOptions::default()),
            Err(RayError::StandingPointOutsideImage { .. })
        ));
    }

    #[test]
    fn bottom_center_mode_uses_box() {
        let bbox = BBox::new(100.0, 200.0, 140.0, 400.0).unwrap();
        let det = Detection::new("c", bbox, PixelPoint::new(0.0, 0.0));
        assert_eq!(
            standing_pixel(&det, StandingPointMode::BottomCenter),
            PixelPoint::new(120.0, 400.0)
        );
    }

    fn anchor(head_depth: f64, standing_depth: f64) -> PedestrianAnchor {
        PedestrianAnchor {
            standing_world: WorldPoint::ground(0.0, 0.0),
            head_world: WorldPoint::new(0.0, 0.0, 1.7),
            standing_depth,
            head_depth,
            height: 1.7,
        }
    }

    #[test]
    fn depth_patch_endpoints_and_midpoint() {
        let bbox = BBox::new(0.0, 0.0, 10.0, 21.0).unwrap();
        let patch = interpolate_box_depth(&anchor(9.0, 12.0), &bbox).unwrap();
        assert_eq!((patch.cols, patch.rows), (10, 21));
        assert!(patch.row(0).iter().all(|&d| d == 9.0));
        assert!(patch.row(20).iter().all(|&d| d == 12.0));
        assert!(patch.row(10).iter().all(|&d| (d - 10.5).abs() < 1e-12));
    }

    #[test]
    fn depth_patch_rejects_flat_box() {
        let bbox = BBox::new(0.0, 0.0, 10.0, 1.2).unwrap();
        assert!(matches!(
            interpolate_box_depth(&anchor(9.0, 12.0), &bbox),
            Err(RayError::DegenerateBox { .. })
        ));
    }

    proptest! {
        #[test]
        fn depth_patch_is_monotone_and_bounded(
            head in 0.5f64..80.0,
            standing in 0.5f64..80.0,
            w in 1.0f64..60.0,
            h in 2.0f64..300.0,
        ) {
            let bbox = BBox::new(10.0, 20.0, 10.0 + w, 20.0 + h).unwrap();
            let patch = interpolate_box_depth(&anchor(head, standing), &bbox).unwrap();
            let (lo, hi) = (head.min(standing), head.max(standing));
            prop_assert!(patch.values().iter().all(|&d| d >= lo && d <= hi));
            for c in 0..patch.cols {
                let col: Vec<f64> = (0..patch.rows).map(|r| patch.at(r, c)).collect();
                let up = col.windows(2).all(|p| p[1] >= p[0]);
                let down = col.windows(2).all(|p| p[1] <= p[0]);
                prop_assert!(up || down);
            }
        }
    }
}
