//! Match predictions to ground truth and compute MODA, MODP, precision and
//! recall, with optimal and greedy assignment.
//!
//! `cargo run --example metrics`

use mvcardboard::eval::{evaluate_frames, match_points, EvalConfig};
use mvcardboard::geometry::{GroundRect, WorldPoint};

fn main() {
    // the first prediction is slightly nearer the second pedestrian, which
    // greedy matching takes and so strands the second prediction
    let gt = vec![
        WorldPoint::ground(0.0, 0.0),
        WorldPoint::ground(0.6, 0.0),
        WorldPoint::ground(5.0, 5.0),
        WorldPoint::ground(9.0, 9.0),
    ];
    let pred = vec![
        WorldPoint::ground(0.32, 0.0),
        WorldPoint::ground(0.95, 0.0),
        WorldPoint::ground(5.1, 5.0),
        WorldPoint::ground(7.0, 2.0),
    ];

    let optimal = EvalConfig::default();
    let greedy = EvalConfig { use_hungarian: false, ..EvalConfig::default() };
    for (name, cfg) in [("hungarian", &optimal), ("greedy", &greedy)] {
        let m = match_points(&pred, &gt, cfg);
        println!("{name}: {} matches, total distance {:.2} m", m.pairs.len(), m.total_distance());
    }

    let report = evaluate_frames(&[(pred.clone(), gt.clone())], &optimal);
    println!(
        "MODA {:.3} MODP {:.3} P {:.3} R {:.3}",
        report.moda, report.modp, report.precision, report.recall
    );

    // masking the far corner removes the unreachable ground truth
    let masked = EvalConfig { mask: vec![GroundRect::new(8.0, 8.0, 10.0, 10.0)], ..optimal };
    let report = evaluate_frames(&[(pred, gt)], &masked);
    println!("masked: MODA {:.3} (GT {})", report.moda, report.gt);
    let _ = report.write_csv(std::io::stdout());
}
