//! Compare the pillar heatmap with standing-point clustering on one noisy,
//! crowded frame.
//!
//! `cargo run --release --example cluster_vs_pillar -- [seed]`

use mvcardboard::config::{Aggregator, PipelineConfig};
use mvcardboard::io::FrameInput;
use mvcardboard::pipeline::{evaluate, run_pipeline, TUNED_THRESHOLD};
use mvcardboard::simulator::simulate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let base = PipelineConfig {
        seed,
        n_pedestrians: 40,
        threshold: TUNED_THRESHOLD,
        ..PipelineConfig::default()
    };
    let sim = base.simulation()?;
    let scene = simulate(&sim, &base.noise)?;
    let input = FrameInput::from_scene(&scene);
    println!("{} pedestrians, {} detections", scene.pedestrians.len(), scene.detection_count());

    for aggregator in [Aggregator::Pillar, Aggregator::Cluster] {
        let cfg = PipelineConfig { aggregator, ..base.clone() };
        let out = run_pipeline(&input, &sim.grid, &cfg)?;
        let r = evaluate(&out.predictions, &input.ground_truth, &cfg);
        println!(
            "{aggregator:?}: {} predictions, MODA {:.3} MODP {:.3} (TP {} FP {} FN {})",
            out.predictions.len(),
            r.moda,
            r.modp,
            r.tp,
            r.fp,
            r.fn_
        );
    }
    Ok(())
}
