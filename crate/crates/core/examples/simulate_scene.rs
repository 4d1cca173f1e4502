//! Generate a synthetic frame on a camera rig preset and save it as JSON.
//!
//! `cargo run --example simulate_scene -- [rig] [out.json]`

use mvcardboard::io::write_scene;
use mvcardboard::simulator::{ground_coverage, simulate, visible_view_counts, NoiseModel, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let rig = args.next().unwrap_or_else(|| "wildtrack_like".into());
    let out = args.next().unwrap_or_else(|| "scene.json".into());

    let mut cfg = SceneConfig::preset(&rig)?;
    cfg.n_pedestrians = 25;
    cfg.seed = 1;
    for cam in &cfg.cameras {
        println!(
            "{}: center z {:.1} m, sees {:.0}% of the area",
            cam.id,
            cam.center().z(),
            100.0 * ground_coverage(cam, &cfg.grid, 0.5)
        );
    }

    let clean = simulate(&cfg, &NoiseModel::none())?;
    let noisy = simulate(&cfg, &NoiseModel::default())?;
    let views = visible_view_counts(&clean.pedestrians, &cfg);
    println!(
        "{} pedestrians, each seen by {}..{} views",
        clean.pedestrians.len(),
        views.iter().min().unwrap_or(&0),
        views.iter().max().unwrap_or(&0)
    );
    println!("detections: {} clean, {} with noise and occlusion", clean.detection_count(), noisy.detection_count());

    write_scene(std::path::Path::new(&out), &noisy)?;
    println!("wrote {out}");
    Ok(())
}
