//! Run configuration: one JSON file with serde defaults, overridden field by
//! field from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::{GridSpec, ScoreWeights};
use crate::cardboard::PixelStride;
use crate::eval::EvalConfig;
use crate::raytrace::{AnchorOptions, HeightBounds, StandingPointMode};
use crate::simulator::{rig_grid, rig_preset, NoiseModel, SceneConfig, RIG_PRESETS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Named grid preset or an explicit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSetting {
    Preset(String),
    Custom(GridSpec),
}

impl GridSetting {
    pub fn resolve(&self) -> Result<GridSpec, ConfigError> {
        let spec = match self {
            GridSetting::Preset(name) => match name.as_str() {
                "wildtrack" => GridSpec::wildtrack(),
                "multiviewx" => GridSpec::multiviewx(),
                other => return Err(ConfigError::Invalid(format!("unknown grid preset '{other}'"))),
            },
            GridSetting::Custom(spec) => *spec,
        };
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}

/// How per-view evidence is fused on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    /// Pillar statistics, occupancy heatmap and peak extraction.
    #[default]
    Pillar,
    /// Greedy clustering of standing points.
    Cluster,
}

impl std::str::FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pillar" => Ok(Aggregator::Pillar),
            "cluster" => Ok(Aggregator::Cluster),
            other => Err(format!("unknown aggregator '{other}' (expected pillar or cluster)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Ground grid; `None` takes the grid belonging to the scene or rig.
    pub grid: Option<GridSetting>,
    /// Rig preset used by `simulate` and by sweeps.
    pub rig: String,
    /// Calibration file overriding the cameras of a scene.
    pub calibration: Option<PathBuf>,
    pub seed: u64,

    pub n_pedestrians: usize,
    pub height_range: (f64, f64),
    pub body_width: f64,
    pub stance_width: f64,
    pub min_separation: f64,
    pub noise: NoiseModel,

    pub standing_point_mode: StandingPointMode,
    pub height_bounds: HeightBounds,
    /// Replaces every recovered height before cloud construction.
    pub fixed_height: Option<f64>,
    /// Box raster stride; `None` picks 1 or 2 from the box height.
    pub stride: Option<usize>,
    pub sample_rate: f64,
    pub ground_plane: bool,
    /// Spacing of the ground-plane point grid, meters.
    pub ground_plane_spacing: f64,

    pub aggregator: Aggregator,
    pub weights: ScoreWeights,
    pub threshold: f64,
    pub min_peak_dist: f64,
    pub cluster_radius: f64,
    pub cluster_min_views: usize,

    pub eval: EvalConfig,
    /// Seeds per setting in sweeps.
    pub seeds: usize,
    /// Also write the sampled clouds as CSV.
    pub write_clouds: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: None,
            rig: "wildtrack_like".into(),
            calibration: None,
            seed: 0,
            n_pedestrians: 20,
            height_range: (1.6, 1.9),
            body_width: 0.4,
            stance_width: 0.6,
            min_separation: 0.6,
            noise: NoiseModel::default(),
            standing_point_mode: StandingPointMode::Keypoint,
            height_bounds: HeightBounds::default(),
            fixed_height: None,
            stride: None,
            sample_rate: 0.5,
            ground_plane: false,
            ground_plane_spacing: 0.1,
            aggregator: Aggregator::Pillar,
            weights: ScoreWeights::default(),
            threshold: 0.8,
            min_peak_dist: 0.5,
            cluster_radius: 0.5,
            cluster_min_views: 2,
            eval: EvalConfig::default(),
            seeds: 20,
            write_clouds: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if let Some(g) = &self.grid {
            g.resolve()?;
        }
        if !RIG_PRESETS.contains(&self.rig.as_str()) {
            return invalid(format!("unknown rig preset '{}'", self.rig));
        }
        if !(0.0..=1.0).contains(&self.sample_rate) {
            return invalid(format!("sample_rate {} outside [0, 1]", self.sample_rate));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return invalid(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if !(self.min_peak_dist >= 0.0) {
            return invalid("min_peak_dist must be non-negative".into());
        }
        if !(self.ground_plane_spacing > 0.0) {
            return invalid("ground_plane_spacing must be positive".into());
        }
        if !(self.cluster_radius > 0.0) || self.cluster_min_views == 0 {
            return invalid("cluster_radius must be positive and cluster_min_views at least 1".into());
        }
        if !(self.eval.match_radius > 0.0) {
            return invalid("eval.match_radius must be positive".into());
        }
        if self.stride == Some(0) {
            return invalid("stride must be at least 1".into());
        }
        if let Some(h) = self.fixed_height {
            if !(h > 0.0 && h < 3.0) {
                return invalid(format!("fixed_height {h} outside (0, 3)"));
            }
        }
        let b = self.height_bounds;
        if !(b.min >= 0.0 && b.min <= b.max) {
            return invalid("height_bounds must satisfy 0 <= min <= max".into());
        }
        let w = self.weights;
        if [w.views, w.anchor, w.density, w.density_ref, w.blur_sigma, w.refine_sigma]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return invalid("score weights must be non-negative".into());
        }
        self.noise.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.scene_config(self.rig_grid()?).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Grid from the config, or the one belonging to the rig preset.
    pub fn rig_grid(&self) -> Result<GridSpec, ConfigError> {
        match &self.grid {
            Some(g) => g.resolve(),
            None => rig_grid(&self.rig).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    /// Scene settings for the rig preset, without cameras resolved.
    fn scene_config(&self, grid: GridSpec) -> SceneConfig {
        SceneConfig {
            grid,
            n_pedestrians: self.n_pedestrians,
            height_range: self.height_range,
            body_width: self.body_width,
            stance_width: self.stance_width,
            min_separation: self.min_separation,
            cameras: Vec::new(),
            seed: self.seed,
        }
    }

    /// Full simulator configuration on the rig preset.
    pub fn simulation(&self) -> Result<SceneConfig, ConfigError> {
        let mut cfg = self.scene_config(self.rig_grid()?);
        cfg.cameras = rig_preset(&self.rig).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn anchor_options(&self) -> AnchorOptions {
        AnchorOptions {
            mode: self.standing_point_mode,
            height_bounds: self.height_bounds,
        }
    }

    pub fn pixel_stride(&self) -> PixelStride {
        self.stride.map_or(PixelStride::Auto, PixelStride::Fixed)
    }
}
