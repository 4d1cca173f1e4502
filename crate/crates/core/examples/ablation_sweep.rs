//! Run a named study over seeds and print per-setting means.
//!
//! `cargo run --release --example ablation_sweep -- [study] [seeds]`
//!
//! Studies: standing_point, sample_rate, ground_plane, density,
//! fixed_height, aggregator.

use mvcardboard::config::PipelineConfig;
use mvcardboard::pipeline::{run_sweep, summarize, write_sweep_csv, Study, TUNED_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let study: Study = args.next().as_deref().unwrap_or("standing_point").parse()?;
    let seeds: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);

    let base = PipelineConfig {
        threshold: TUNED_THRESHOLD,
        seeds,
        ..PipelineConfig::default()
    };
    let rows = run_sweep(study, &base)?;
    println!("{:<16} {:>5} {:>7} {:>7} {:>9}", "setting", "runs", "MODA", "MODP", "points");
    for m in summarize(&rows) {
        println!("{:<16} {:>5} {:>7.3} {:>7.3} {:>9.0}", m.setting, m.runs, m.moda, m.modp, m.points);
    }
    write_sweep_csv(std::io::stderr(), &rows)?;
    Ok(())
}
