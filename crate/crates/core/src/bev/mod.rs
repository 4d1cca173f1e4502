//! Bird's-eye-view aggregation: the ground grid, pillar statistics,
//! occupancy heatmaps, Gaussian ground-truth encoding, focal loss and peak
//! extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GroundRect, WorldPoint};

mod export;
mod heatmap;
mod loss;
mod peaks;
mod pillars;

pub use export::{read_heatmap, write_heatmap, write_pgm, HEATMAP_MAGIC};
pub use heatmap::{encode_gaussian_gt, gaussian_blur, refinement_map, score_occupancy, Heatmap, ScoreWeights};
pub use loss::{focal_loss, focal_positive_term, FocalParams, NEGATIVE_PENALTY_EXPONENT, PROB_CLAMP};
pub use peaks::{extract_peaks, refine_peaks};
pub use pillars::{bin_clouds, PillarGrid, PillarStats, MAX_VIEWS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BevError {
    #[error("heatmaps are defined on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid focal loss parameters: alpha = {alpha}, gamma = {gamma}")]
    InvalidFocalParams { alpha: f64, gamma: f64 },
}

/// Evenly spaced ground grid. Columns run along world `X`, rows along `Y`;
/// cell `(0, 0)` has its lower corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size_x: f64,
    pub cell_size_y: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GridSpec {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size_x: f64,
        cell_size_y: f64,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self, BevError> {
        let spec = Self {
            origin_x,
            origin_y,
            cell_size_x,
            cell_size_y,
            n_rows,
            n_cols,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BevError> {
        if !(self.cell_size_x > 0.0 && self.cell_size_y > 0.0) {
            return Err(BevError::InvalidGrid(format!(
                "cell sizes must be positive, got {} x {}",
                self.cell_size_x, self.cell_size_y
            )));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(BevError::InvalidGrid("grid has no cells".into()));
        }
        if !(self.origin_x.is_finite() && self.origin_y.is_finite()) {
            return Err(BevError::InvalidGrid("non-finite origin".into()));
        }
        Ok(())
    }

    /// 36 m x 12 m area on a 1440 x 480 grid, 2.5 cm cells.
    pub fn wildtrack() -> Self {
        Self {
            origin_x: 0.0,
            origin_y: 0.0,
            cell_size_x: 36.0 / 1440.0,
            cell_size_y: 12.0 / 480.0,
            n_rows: 480,
            n_cols: 1440,
        }
    }

    /// 23 m x 16 m area on a 1000 x 640 grid (2.3 cm by 2.5 cm cells).
    pub fn multiviewx() -> Self {
        Self {
            origin_x: 0.0,
            origin_y: 0.0,
            cell_size_x: 23.0 / 1000.0,
            cell_size_y: 16.0 / 640.0,
            n_rows: 640,
            n_cols: 1000,
        }
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> GroundRect {
        GroundRect::new(
            self.origin_x,
            self.origin_y,
            self.origin_x + self.n_cols as f64 * self.cell_size_x,
            self.origin_y + self.n_rows as f64 * self.cell_size_y,
        )
    }

    /// `(row, col)` of the cell containing `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.origin_x) / self.cell_size_x).floor();
        let row = ((y - self.origin_y) / self.cell_size_y).floor();
        if col >= 0.0 && row >= 0.0 && (col as usize) < self.n_cols && (row as usize) < self.n_rows {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }

    pub fn index_of(&self, x: f64, y: f64) -> Option<usize> {
        self.cell_of(x, y).map(|(r, c)| r * self.n_cols + c)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> WorldPoint {
        WorldPoint::ground(
            self.origin_x + (col as f64 + 0.5) * self.cell_size_x,
            self.origin_y + (row as f64 + 0.5) * self.cell_size_y,
        )
    }

    /// Diagonal-free size of one cell, used to express tolerances in cells.
    pub fn max_cell_size(&self) -> f64 {
        self.cell_size_x.max(self.cell_size_y)
    }
}
