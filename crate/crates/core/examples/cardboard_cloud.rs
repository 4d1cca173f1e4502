//! Lift one simulated detection into a cardboard point cloud, subsample it
//! and write it as CSV.
//!
//! `cargo run --example cardboard_cloud -- [out.csv]`

use std::fs::File;
use std::io::BufWriter;

use mvcardboard::cardboard::{build_cardboard, sample_cloud, write_cloud_csv, PixelStride};
use mvcardboard::raytrace::{anchor_from_detection, interpolate_box_depth, AnchorOptions};
use mvcardboard::simulator::{simulate, NoiseModel, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "cardboard.csv".into());
    let mut cfg = SceneConfig::preset("wildtrack_like")?;
    cfg.n_pedestrians = 3;
    cfg.seed = 2;
    let scene = simulate(&cfg, &NoiseModel::none())?;

    let (view, cam) = (0, &cfg.cameras[0]);
    let det = &scene.detections[view][0];
    let anchor = anchor_from_detection(cam, det, &AnchorOptions::default())?;
    let patch = interpolate_box_depth(&anchor, &det.bbox)?;
    let stride = PixelStride::Auto.for_box(&det.bbox);
    let cloud = build_cardboard(cam, view, det, &anchor, &patch, stride)?;

    let zs = cloud.points.iter().map(|p| p.position.z());
    let (lo, hi) = zs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| (a.min(z), b.max(z)));
    println!(
        "box {:.0}x{:.0} px at stride {stride}: {} points, z {lo:.2}..{hi:.2} m",
        det.bbox.width(),
        det.bbox.height(),
        cloud.len()
    );

    let sampled = sample_cloud(&cloud, 0.3, 7);
    println!("sampled at 0.3: {} points", sampled.len());
    write_cloud_csv(BufWriter::new(File::create(&out)?), &[sampled])?;
    println!("wrote {out}");
    Ok(())
}
