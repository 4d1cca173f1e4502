//! JSON file formats: calibration, scenes (truth plus detections) and
//! predictions.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::GridSpec;
use crate::cardboard::{BBox, ColorPatch, Detection, Rgb};
use crate::geometry::{CameraModel, Extrinsics, Intrinsics, PixelPoint, WorldPoint};
use crate::simulator::{NoiseModel, Pedestrian, Scene};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid content in {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn invalid(path: &Path, message: impl Into<String>) -> Self {
        IoError::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_with<F>(path: &Path, f: F) -> Result<(), IoError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).map_err(|e| IoError::io(path, e))
}

/// One camera: intrinsics, row-major `R` and `T` of `p_cam = R p_world + T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "R")]
    pub r: [f64; 9],
    #[serde(rename = "T")]
    pub t: [f64; 3],
}

impl CalibrationEntry {
    pub fn from_camera(cam: &CameraModel) -> Self {
        let r = cam.extrinsics.rotation();
        let t = cam.extrinsics.translation();
        let k = &cam.intrinsics;
        Self {
            id: cam.id.clone(),
            width: cam.width,
            height: cam.height,
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            r: std::array::from_fn(|i| r[(i / 3, i % 3)]),
            t: [t.x, t.y, t.z],
        }
    }

    pub fn to_camera(&self) -> Result<CameraModel, String> {
        let k = Intrinsics::new(self.fx, self.fy, self.cx, self.cy).map_err(|e| e.to_string())?;
        let ext = Extrinsics::new(Matrix3::from_row_slice(&self.r), Vector3::from(self.t)).map_err(|e| e.to_string())?;
        CameraModel::new(self.id.clone(), k, ext, self.width, self.height).map_err(|e| e.to_string())
    }
}

fn cameras_from_entries(path: &Path, entries: &[CalibrationEntry]) -> Result<Vec<CameraModel>, IoError> {
    let mut cams = Vec::with_capacity(entries.len());
    for e in entries {
        let cam = e
            .to_camera()
            .map_err(|m| IoError::invalid(path, format!("camera '{}': {m}", e.id)))?;
        if cams.iter().any(|c: &CameraModel| c.id == cam.id) {
            return Err(IoError::invalid(path, format!("duplicate camera id '{}'", cam.id)));
        }
        cams.push(cam);
    }
    Ok(cams)
}

pub fn read_calibration(path: &Path) -> Result<Vec<CameraModel>, IoError> {
    let entries: Vec<CalibrationEntry> = read_json(path)?;
    cameras_from_entries(path, &entries)
}

pub fn write_calibration(path: &Path, cams: &[CameraModel]) -> Result<(), IoError> {
    let entries: Vec<CalibrationEntry> = cams.iter().map(CalibrationEntry::from_camera).collect();
    write_json(path, &entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub standing: [f64; 2],
    #[serde(default = "one")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Rgb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pedestrian_id: Option<u32>,
}

fn one() -> f64 {
    1.0
}

impl DetectionRecord {
    pub fn from_detection(det: &Detection) -> Self {
        let b = &det.bbox;
        Self {
            bbox: [b.u_min, b.v_min, b.u_max, b.v_max],
            standing: [det.standing_px.u, det.standing_px.v],
            confidence: det.confidence,
            color: det.color_patch.as_ref().and_then(ColorPatch::uniform_color),
            pedestrian_id: det.pedestrian_id,
        }
    }

    pub fn to_detection(&self, camera_id: &str) -> Result<Detection, String> {
        let [u0, v0, u1, v1] = self.bbox;
        let bbox = BBox::new(u0, v0, u1, v1).map_err(|e| e.to_string())?;
        let [u, v] = self.standing;
        if !(u.is_finite() && v.is_finite() && self.confidence.is_finite()) {
            return Err("non-finite standing point or confidence".into());
        }
        let mut det = Detection::new(camera_id, bbox, PixelPoint::new(u, v)).with_confidence(self.confidence);
        if let Some(c) = self.color {
            det = det.with_color(c);
        }
        det.pedestrian_id = self.pedestrian_id;
        Ok(det)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub color: Rgb,
}

/// Settings a scene was generated with, including the cameras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEcho {
    pub grid: GridSpec,
    pub cameras: Vec<CalibrationEntry>,
    pub n_pedestrians: usize,
    pub height_range: (f64, f64),
    pub body_width: f64,
    pub stance_width: f64,
    pub min_separation: f64,
    pub seed: u64,
    pub noise: NoiseModel,
}

/// Scene file. Only `detections` is required, so files from any detector
/// can be fed to the pipeline together with a calibration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SceneEcho>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianRecord>,
    pub detections: BTreeMap<String, Vec<DetectionRecord>>,
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> Self {
        let cfg = &scene.config;
        let config = SceneEcho {
            grid: cfg.grid,
            cameras: cfg.cameras.iter().map(CalibrationEntry::from_camera).collect(),
            n_pedestrians: cfg.n_pedestrians,
            height_range: cfg.height_range,
            body_width: cfg.body_width,
            stance_width: cfg.stance_width,
            min_separation: cfg.min_separation,
            seed: cfg.seed,
            noise: scene.noise,
        };
        let pedestrians = scene.pedestrians.iter().map(pedestrian_record).collect();
        let detections = cfg
            .cameras
            .iter()
            .zip(&scene.detections)
            .map(|(cam, dets)| (cam.id.clone(), dets.iter().map(DetectionRecord::from_detection).collect()))
            .collect();
        Self {
            config: Some(config),
            pedestrians,
            detections,
        }
    }
}

fn pedestrian_record(p: &Pedestrian) -> PedestrianRecord {
    PedestrianRecord {
        id: p.id,
        x: p.position.x(),
        y: p.position.y(),
        height: p.height,
        color: p.color,
    }
}

/// A scene file resolved against its cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub cameras: Vec<CameraModel>,
    /// Grid the scene was generated on, when known.
    pub grid: Option<GridSpec>,
    /// Detections per camera, in camera order.
    pub detections: Vec<Vec<Detection>>,
    pub ground_truth: Vec<WorldPoint>,
}

impl FrameInput {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            cameras: scene.config.cameras.clone(),
            grid: Some(scene.config.grid),
            detections: scene.detections.clone(),
            ground_truth: scene.positions(),
        }
    }
}

/// Reads a scene file. Cameras come from `calibration` when given,
/// otherwise from the scene's own config echo.
pub fn read_scene(path: &Path, calibration: Option<&[CameraModel]>) -> Result<FrameInput, IoError> {
    let file: SceneFile = read_json(path)?;
    let cameras = match (calibration, &file.config) {
        (Some(c), _) => c.to_vec(),
        (None, Some(echo)) => cameras_from_entries(path, &echo.cameras)?,
        (None, None) => return Err(IoError::invalid(path, "no cameras: scene has no config and no calibration was given")),
    };
    let mut detections = vec![Vec::new(); cameras.len()];
    for (camera_id, records) in &file.detections {
        let view = cameras
            .iter()
            .position(|c| &c.id == camera_id)
            .ok_or_else(|| IoError::invalid(path, format!("detections for unknown camera '{camera_id}'")))?;
        for (i, r) in records.iter().enumerate() {
            let det = r
                .to_detection(camera_id)
                .map_err(|m| IoError::invalid(path, format!("detection {i} of camera '{camera_id}': {m}")))?;
            detections[view].push(det);
        }
    }
    let ground_truth = file
        .pedestrians
        .iter()
        .map(|p| {
            if p.x.is_finite() && p.y.is_finite() {
                Ok(WorldPoint::ground(p.x, p.y))
            } else {
                Err(IoError::invalid(path, format!("pedestrian {} has a non-finite position", p.id)))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(FrameInput {
        cameras,
        grid: file.config.as_ref().map(|c| c.grid),
        detections,
        ground_truth,
    })
}

pub fn write_scene(path: &Path, scene: &Scene) -> Result<(), IoError> {
    write_json(path, &SceneFile::from_scene(scene))
}

/// Ground-plane location as written to files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundXY {
    pub x: f64,
    pub y: f64,
}

impl From<&WorldPoint> for GroundXY {
    fn from(p: &WorldPoint) -> Self {
        Self { x: p.x(), y: p.y() }
    }
}

/// Predictions of one frame with the drop accounting of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsFile {
    #[serde(default)]
    pub frame: u64,
    pub points: Vec<GroundXY>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<crate::pipeline::RunSummary>,
}

/// Point list from either a predictions file or a scene file (its
/// pedestrians), so ground truth and predictions share one loader.
pub fn read_points(path: &Path) -> Result<(u64, Vec<WorldPoint>), IoError> {
    let value: serde_json::Value = read_json(path)?;
    let parse = |source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    };
    let points: Vec<GroundXY> = if value.get("points").is_some() {
        let p: PredictionsFile = serde_json::from_value(value).map_err(parse)?;
        return finite_points(path, p.frame, &p.points);
    } else if value.get("pedestrians").is_some() {
        let s: SceneFile = serde_json::from_value(value).map_err(parse)?;
        s.pedestrians.iter().map(|p| GroundXY { x: p.x, y: p.y }).collect()
    } else {
        return Err(IoError::invalid(path, "expected a predictions file (\"points\") or a scene file (\"pedestrians\")"));
    };
    finite_points(path, 0, &points)
}

fn finite_points(path: &Path, frame: u64, points: &[GroundXY]) -> Result<(u64, Vec<WorldPoint>), IoError> {
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(IoError::invalid(path, "non-finite point"));
    }
    Ok((frame, points.iter().map(|p| WorldPoint::ground(p.x, p.y)).collect()))
}
