//! Pinhole camera model and the exact transforms between world, camera and
//! pixel frames.
//!
//! The world frame is Z-up with the ground plane at `Z = 0`. Camera frames
//! follow the usual computer-vision convention: `x` right, `y` down, `z`
//! forward along the optical axis. Extrinsics map world to camera,
//! `p_cam = R * p_world + T`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the orthonormality and determinant checks on `R`.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("focal lengths must be positive (fx = {fx}, fy = {fy})")]
    InvalidIntrinsics { fx: f64, fy: f64 },
    #[error("rotation matrix is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("rotation matrix determinant is {det}, expected +1")]
    NotProperRotation { det: f64 },
    #[error("image size must be positive, got {width}x{height}")]
    InvalidImageSize { width: u32, height: u32 },
    #[error("camera center height {height} is not above the ground plane")]
    CameraBelowGround { height: f64 },
    #[error("non-finite value in camera parameters")]
    NonFinite,
    #[error("point is behind the camera (camera-frame z = {z})")]
    PointBehindCamera { z: f64 },
}

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint(pub Vector3<f64>);

/// A point in a camera frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint(pub Vector3<f64>);

/// A pixel location `(u, v)`; `u` grows rightwards, `v` downwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    /// A point on the ground plane.
    pub fn ground(x: f64, y: f64) -> Self {
        Self(Vector3::new(x, y, 0.0))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    /// Euclidean distance in the ground plane, ignoring height.
    pub fn ground_distance(&self, other: &WorldPoint) -> f64 {
        (self.0.x - other.0.x).hypot(self.0.y - other.0.y)
    }
}

impl CameraPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    /// Camera-frame depth.
    pub fn depth(&self) -> f64 {
        self.0.z
    }
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Axis-aligned rectangle on the ground plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundRect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl GroundRect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Half-open containment test, `[min, max)` on both axes.
    pub fn contains(&self, p: &WorldPoint) -> bool {
        p.x() >= self.x_min && p.x() < self.x_max && p.y() >= self.y_min && p.y() < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if fx <= 0.0 || fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics { fx, fy });
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

/// World-to-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Extrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let deviation = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if deviation > ROTATION_TOLERANCE {
            return Err(GeometryError::NotOrthonormal { deviation });
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::NotProperRotation { det });
        }
        Ok(Self { rotation, translation })
    }

    /// Builds a pose from a camera position and a point to look at, with the
    /// camera `x` axis kept horizontal (no roll).
    pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>) -> Result<Self, GeometryError> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&Vector3::z());
        if right.norm() < 1e-9 {
            // looking straight up or down: any horizontal right axis will do
            return Self::look_at_with_right(eye, forward, Vector3::x());
        }
        Self::look_at_with_right(eye, forward, right.normalize())
    }

    fn look_at_with_right(
        eye: Vector3<f64>,
        forward: Vector3<f64>,
        right: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        Self::new(rotation, -(rotation * eye))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub id: String,
    pub intrinsics: Intrinsics,
    pub extrinsics: Extrinsics,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(
        id: impl Into<String>,
        intrinsics: Intrinsics,
        extrinsics: Extrinsics,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidImageSize { width, height });
        }
        let cam = Self {
            id: id.into(),
            intrinsics,
            extrinsics,
            width,
            height,
        };
        let center_height = cam.center().z();
        if center_height <= 0.0 {
            return Err(GeometryError::CameraBelowGround {
                height: center_height,
            });
        }
        Ok(cam)
    }

    /// Camera center in world coordinates, `O = -R^T T`.
    pub fn center(&self) -> WorldPoint {
        WorldPoint(-(self.extrinsics.rotation.transpose() * self.extrinsics.translation))
    }

    pub fn world_to_camera(&self, p: &WorldPoint) -> CameraPoint {
        CameraPoint(self.extrinsics.rotation * p.0 + self.extrinsics.translation)
    }

    pub fn camera_to_world(&self, p: &CameraPoint) -> WorldPoint {
        WorldPoint(self.extrinsics.rotation.transpose() * (p.0 - self.extrinsics.translation))
    }

    /// Pinhole projection of a camera-frame point.
    pub fn project_camera(&self, p: &CameraPoint) -> Result<PixelPoint, GeometryError> {
        let z = p.0.z;
        if z <= 0.0 {
            return Err(GeometryError::PointBehindCamera { z });
        }
        let k = &self.intrinsics;
        Ok(PixelPoint {
            u: k.fx * p.0.x / z + k.cx,
            v: k.fy * p.0.y / z + k.cy,
        })
    }

    pub fn project(&self, p: &WorldPoint) -> Result<PixelPoint, GeometryError> {
        self.project_camera(&self.world_to_camera(p))
    }

    /// Camera-frame point at depth `depth` along the ray through `px`.
    pub fn back_project(&self, px: &PixelPoint, depth: f64) -> CameraPoint {
        let k = &self.intrinsics;
        CameraPoint::new(
            (px.u - k.cx) * depth / k.fx,
            (px.v - k.cy) * depth / k.fy,
            depth,
        )
    }

    /// Whether a pixel lies inside the image rectangle `[0, width] x [0, height]`.
    pub fn contains(&self, px: &PixelPoint) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u <= self.width as f64 && px.v <= self.height as f64
    }
}
