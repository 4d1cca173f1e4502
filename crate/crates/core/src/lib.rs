//! Multiview pedestrian localization from 2D detections.
//!
//! Each detection is lifted to an upright "cardboard" point cloud by ray
//! tracing its standing point and head onto the ground plane, the clouds of
//! all views are binned into ground pillars, and pedestrians are read off an
//! occupancy heatmap. A synthetic multiview simulator provides exact ground
//! truth and [`eval`] scores predictions with MODA, MODP, precision and recall.

pub mod bev;
pub mod cardboard;
pub mod cli;
pub mod cluster;
pub mod config;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod raytrace;
pub mod simulator;

/// Mixes a master seed with a stream tag (splitmix64 finalizer), so every
/// consumer of randomness gets its own stream regardless of scheduling.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
