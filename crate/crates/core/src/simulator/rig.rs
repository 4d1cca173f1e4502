//! Fixed camera rigs shipped with the simulator.

use nalgebra::Vector3;

use super::SimError;
use crate::bev::GridSpec;
use crate::geometry::{CameraModel, Extrinsics, Intrinsics, WorldPoint};

pub const IMAGE_WIDTH: u32 = 1920;
pub const IMAGE_HEIGHT: u32 = 1080;
const FOCAL: f64 = 1000.0;

/// Seven cameras 3-6 m high around the 36 m x 12 m area, looking inward and down.
const WILDTRACK_POSES: [([f64; 3], [f64; 3]); 7] = [
    ([-8.0, -6.0, 6.0], [13.0, 6.0, 0.0]),
    ([18.0, -13.0, 5.0], [18.0, 6.0, 0.0]),
    ([44.0, -6.0, 6.0], [23.0, 6.0, 0.0]),
    ([44.0, 18.0, 4.0], [23.0, 6.0, 0.0]),
    ([18.0, 25.0, 5.5], [18.0, 6.0, 0.0]),
    ([-8.0, 18.0, 4.0], [13.0, 6.0, 0.0]),
    ([-12.0, 6.0, 3.0], [18.0, 6.0, 0.0]),
];

/// Six cameras 1.8 m high around the 23 m x 16 m area, nearly level.
const MULTIVIEWX_POSES: [([f64; 3], [f64; 3]); 6] = [
    ([-4.0, -4.0, 1.8], [14.0, 10.0, 0.0]),
    ([11.5, -6.0, 1.8], [11.5, 12.0, 0.0]),
    ([27.0, -4.0, 1.8], [9.0, 10.0, 0.0]),
    ([27.0, 20.0, 1.8], [9.0, 6.0, 0.0]),
    ([11.5, 22.0, 1.8], [11.5, 4.0, 0.0]),
    ([-4.0, 20.0, 1.8], [14.0, 6.0, 0.0]),
];

fn build(prefix: &str, poses: &[([f64; 3], [f64; 3])]) -> Vec<CameraModel> {
    let k = Intrinsics::new(FOCAL, FOCAL, IMAGE_WIDTH as f64 / 2.0, IMAGE_HEIGHT as f64 / 2.0)
        .expect("preset intrinsics are valid");
    poses
        .iter()
        .enumerate()
        .map(|(i, (eye, target))| {
            let ext = Extrinsics::look_at(Vector3::from(*eye), Vector3::from(*target))
                .expect("preset poses are proper rotations");
            CameraModel::new(format!("{prefix}{i}"), k, ext, IMAGE_WIDTH, IMAGE_HEIGHT)
                .expect("preset cameras are above the ground")
        })
        .collect()
}

pub const RIG_PRESETS: [&str; 2] = ["wildtrack_like", "multiviewx_like"];

pub fn rig_preset(name: &str) -> Result<Vec<CameraModel>, SimError> {
    match name {
        "wildtrack_like" => Ok(build("C", &WILDTRACK_POSES)),
        "multiviewx_like" => Ok(build("M", &MULTIVIEWX_POSES)),
        other => Err(SimError::UnknownPreset(other.to_string())),
    }
}

/// Grid preset that belongs with a rig preset.
pub fn rig_grid(name: &str) -> Result<GridSpec, SimError> {
    match name {
        "wildtrack_like" => Ok(GridSpec::wildtrack()),
        "multiviewx_like" => Ok(GridSpec::multiviewx()),
        other => Err(SimError::UnknownPreset(other.to_string())),
    }
}

/// Fraction of ground samples (one per `step` meters, at sample centers)
/// that project inside the camera image.
pub fn ground_coverage(cam: &CameraModel, grid: &GridSpec, step: f64) -> f64 {
    let extent = grid.extent();
    let nx = (extent.width() / step).floor().max(1.0) as usize;
    let ny = (extent.height() / step).floor().max(1.0) as usize;
    let mut seen = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = WorldPoint::ground(
                extent.x_min + (i as f64 + 0.5) * step,
                extent.y_min + (j as f64 + 0.5) * step,
            );
            if cam.project(&p).is_ok_and(|px| cam.contains(&px)) {
                seen += 1;
            }
        }
    }
    seen as f64 / (nx * ny) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wildtrack_like_rig() {
        let rig = rig_preset("wildtrack_like").unwrap();
        assert_eq!(rig.len(), 7);
        for cam in &rig {
            let h = cam.center().z();
            assert!((3.0 - 1e-9..=6.0 + 1e-9).contains(&h), "{} at {h}", cam.id);
        }
    }

    #[test]
    fn multiviewx_like_rig() {
        let rig = rig_preset("multiviewx_like").unwrap();
        assert_eq!(rig.len(), 6);
        for cam in &rig {
            assert!((cam.center().z() - 1.8).abs() < 1e-12);
        }
    }

    #[test]
    fn presets_cover_their_grid() {
        for name in RIG_PRESETS {
            let grid = rig_grid(name).unwrap();
            for cam in rig_preset(name).unwrap() {
                let c = ground_coverage(&cam, &grid, 0.25);
                assert!(c >= 0.6, "{name}/{} covers {c:.3}", cam.id);
            }
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(rig_preset("nope"), Err(SimError::UnknownPreset(_))));
    }
}
