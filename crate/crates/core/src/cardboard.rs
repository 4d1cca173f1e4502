//! Cardboard point clouds: every sampled pixel of a detection box lifted to
//! 3D at its interpolated depth, giving one upright single-plane cloud per
//! pedestrian and view.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{CameraModel, GroundRect, PixelPoint, WorldPoint};
use crate::raytrace::{DepthPatch, PedestrianAnchor};

pub type Rgb = [f32; 3];

/// Color used for points without appearance data.
pub const NEUTRAL_GRAY: Rgb = [0.5, 0.5, 0.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("depth patch is {got_cols}x{got_rows}, box raster is {want_cols}x{want_rows}")]
    DimensionMismatch {
        want_cols: usize,
        want_rows: usize,
        got_cols: usize,
        got_rows: usize,
    },
    #[error("invalid box [{0}, {1}, {2}, {3}]")]
    InvalidBox(f64, f64, f64, f64),
}

/// Pixel bounding box, `u_min < u_max` and `v_min < v_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BBox {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self, CloudError> {
        let finite = [u_min, v_min, u_max, v_max].iter().all(|v| v.is_finite());
        if !finite || u_min >= u_max || v_min >= v_max {
            return Err(CloudError::InvalidBox(u_min, v_min, u_max, v_max));
        }
        Ok(Self {
            u_min,
            v_min,
            u_max,
            v_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn bottom_center(&self) -> PixelPoint {
        PixelPoint::new(0.5 * (self.u_min + self.u_max), self.v_max)
    }

    pub fn intersection(&self, other: &BBox) -> f64 {
        let w = self.u_max.min(other.u_max) - self.u_min.max(other.u_min);
        let h = self.v_max.min(other.v_max) - self.v_min.max(other.v_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other);
        if inter == 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }

    /// Raster used for depth patches and clouds: one column per pixel of
    /// width (at least one) and one row per pixel of height, spaced evenly so
    /// that the first and last rows sit exactly on the box edges.
    pub fn raster_dims(&self) -> (usize, usize) {
        let cols = (self.width().round() as usize).max(1);
        let rows = self.height().round() as usize;
        (cols, rows)
    }

    /// Pixel coordinate of raster cell `(row, col)`.
    pub fn raster_pixel(&self, row: usize, col: usize) -> PixelPoint {
        let (cols, rows) = self.raster_dims();
        let u = if cols == 1 {
            0.5 * (self.u_min + self.u_max)
        } else {
            self.u_min + col as f64 * self.width() / (cols - 1) as f64
        };
        let v = if rows <= 1 {
            self.v_max
        } else if row == rows - 1 {
            self.v_max
        } else {
            self.v_min + row as f64 * self.height() / (rows - 1) as f64
        };
        PixelPoint::new(u, v)
    }

    pub fn contains(&self, px: &PixelPoint, slack: f64) -> bool {
        px.u >= self.u_min - slack
            && px.u <= self.u_max + slack
            && px.v >= self.v_min - slack
            && px.v <= self.v_max + slack
    }
}

/// RGB samples in `[0, 1]` covering a box, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorPatch {
    pub cols: usize,
    pub rows: usize,
    pub data: Vec<Rgb>,
}

impl ColorPatch {
    pub fn flat(color: Rgb) -> Self {
        Self {
            cols: 1,
            rows: 1,
            data: vec![color],
        }
    }

    /// The single color of a patch whose samples are all equal.
    pub fn uniform_color(&self) -> Option<Rgb> {
        let first = *self.data.first()?;
        self.data.iter().all(|c| *c == first).then_some(first)
    }

    /// Nearest sample for raster cell `(row, col)` of a `cols x rows` raster.
    fn sample(&self, row: usize, col: usize, cols: usize, rows: usize) -> Rgb {
        let r = (row * self.rows / rows.max(1)).min(self.rows - 1);
        let c = (col * self.cols / cols.max(1)).min(self.cols - 1);
        self.data[r * self.cols + c]
    }
}

/// One pedestrian detection in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub camera_id: String,
    pub bbox: BBox,
    pub standing_px: PixelPoint,
    pub color_patch: Option<ColorPatch>,
    pub confidence: f64,
    /// Ground-truth identity, when known (simulated scenes).
    pub pedestrian_id: Option<u32>,
}

impl Detection {
    pub fn new(camera_id: impl Into<String>, bbox: BBox, standing_px: PixelPoint) -> Self {
        Self {
            camera_id: camera_id.into(),
            bbox,
            standing_px,
            color_patch: None,
            confidence: 1.0,
            pedestrian_id: None,
        }
    }

    pub fn with_color(mut self, color: Rgb) -> Self {
        self.color_patch = Some(ColorPatch::flat(color));
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub position: WorldPoint,
    pub color: Rgb,
}

/// Single-plane point cloud of one pedestrian seen from one view.
#[derive(Debug, Clone, PartialEq)]
pub struct CardboardCloud {
    pub pedestrian_id: Option<u32>,
    /// Index of the source camera within the rig; `None` for clouds that
    /// no camera contributed (the ground plane).
    pub view: Option<usize>,
    pub points: Vec<CloudPoint>,
    /// `None` for clouds that do not come from a detection (ground plane).
    pub anchor: Option<PedestrianAnchor>,
}

impl CardboardCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pixel stride used when sampling a box raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PixelStride {
    /// 1 for boxes up to 200 px tall, 2 above.
    #[default]
    Auto,
    Fixed(usize),
}

impl PixelStride {
    pub fn for_box(&self, bbox: &BBox) -> usize {
        match *self {
            PixelStride::Auto if bbox.height() <= 200.0 => 1,
            PixelStride::Auto => 2,
            PixelStride::Fixed(n) => n.max(1),
        }
    }
}

pub fn build_cardboard(
    cam: &CameraModel,
    view: usize,
    det: &Detection,
    anchor: &PedestrianAnchor,
    patch: &DepthPatch,
    stride: usize,
) -> Result<CardboardCloud, CloudError> {
    let (cols, rows) = det.bbox.raster_dims();
    if patch.cols != cols || patch.rows != rows {
        return Err(CloudError::DimensionMismatch {
            want_cols: cols,
            want_rows: rows,
            got_cols: patch.cols,
            got_rows: patch.rows,
        });
    }
    let stride = stride.max(1);
    let mut points = Vec::with_capacity(cols.div_ceil(stride) * rows.div_ceil(stride));
    for row in (0..rows).step_by(stride) {
        for col in (0..cols).step_by(stride) {
            let px = det.bbox.raster_pixel(row, col);
            let position = cam.camera_to_world(&cam.back_project(&px, patch.at(row, col)));
            let color = det
                .color_patch
                .as_ref()
                .map_or(NEUTRAL_GRAY, |c| c.sample(row, col, cols, rows));
            points.push(CloudPoint { position, color });
        }
    }
    Ok(CardboardCloud {
        pedestrian_id: None,
        view: Some(view),
        points,
        anchor: Some(*anchor),
    })
}

/// Keeps `round(rate * N)` points chosen uniformly without replacement,
/// in their original order. Rates outside `[0, 1]` are clamped.
pub fn sample_cloud(cloud: &CardboardCloud, rate: f64, seed: u64) -> CardboardCloud {
    let rate = if rate.is_nan() { 0.0 } else { rate.clamp(0.0, 1.0) };
    let n = cloud.points.len();
    let keep = ((rate * n as f64).round() as usize).min(n);
    let points = if keep == n {
        cloud.points.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, keep).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| cloud.points[i]).collect()
    };
    CardboardCloud {
        points,
        ..cloud.clone()
    }
}

/// Regular gray grid of ground points covering `bounds`, corners included.
pub fn build_ground_plane_cloud(bounds: &GroundRect, spacing: f64) -> CardboardCloud {
    assert!(spacing > 0.0, "ground plane spacing must be positive");
    let nx = (bounds.width() / spacing + 1e-9).floor() as usize + 1;
    let ny = (bounds.height() / spacing + 1e-9).floor() as usize + 1;
    let mut points = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            points.push(CloudPoint {
                position: WorldPoint::ground(
                    bounds.x_min + i as f64 * spacing,
                    bounds.y_min + j as f64 * spacing,
                ),
                color: NEUTRAL_GRAY,
            });
        }
    }
    CardboardCloud {
        pedestrian_id: None,
        view: None,
        points,
        anchor: None,
    }
}

/// Writes clouds as CSV with header `x,y,z,r,g,b`.
pub fn write_cloud_csv<W: Write>(mut out: W, clouds: &[CardboardCloud]) -> io::Result<()> {
    writeln!(out, "x,y,z,r,g,b")?;
    for p in clouds.iter().flat_map(|c| &c.points) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.position.x(),
            p.position.y(),
            p.position.z(),
            p.color[0],
            p.color[1],
            p.color[2]
        )?;
    }
    Ok(())
}
