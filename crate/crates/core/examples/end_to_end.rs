//! Full frame: simulate, lift every detection, fuse on the BEV grid, and
//! evaluate.
//!
//! `cargo run --release --example end_to_end -- [--zero-noise]`

use mvcardboard::config::PipelineConfig;
use mvcardboard::io::FrameInput;
use mvcardboard::pipeline::{evaluate, run_pipeline, TUNED_THRESHOLD};
use mvcardboard::simulator::{simulate, NoiseModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let zero_noise = std::env::args().any(|a| a == "--zero-noise");
    let cfg = PipelineConfig {
        seed: 3,
        threshold: TUNED_THRESHOLD,
        noise: if zero_noise { NoiseModel::none() } else { NoiseModel::default() },
        ..PipelineConfig::default()
    };
    cfg.validate()?;
    let sim = cfg.simulation()?;
    let scene = simulate(&sim, &cfg.noise)?;
    let input = FrameInput::from_scene(&scene);

    let start = std::time::Instant::now();
    let out = run_pipeline(&input, &sim.grid, &cfg)?;
    let s = &out.summary;
    println!(
        "{} detections, {} anchored, {} dropped, {} points in {} pillars ({:.2} s)",
        s.detections,
        s.anchored,
        s.dropped_total(),
        s.total_points(),
        s.occupied_pillars,
        start.elapsed().as_secs_f64()
    );

    let r = evaluate(&out.predictions, &input.ground_truth, &cfg);
    println!("MODA {:.3} MODP {:.3} P {:.3} R {:.3}", r.moda, r.modp, r.precision, r.recall);
    for p in out.predictions.iter().take(5) {
        let nearest = input.ground_truth.iter().map(|g| p.ground_distance(g)).fold(f64::INFINITY, f64::min);
        println!("  ({:.2}, {:.2}), {:.3} m from the nearest pedestrian", p.x(), p.y(), nearest);
    }
    Ok(())
}
