use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mvcardboard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvcardboard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&mvcardboard(&["--help"])), 0);
    assert_eq!(code(&mvcardboard(&["--version"])), 0);
    assert_eq!(code(&mvcardboard(&["ablate", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&mvcardboard(&[])), 1);
    assert_eq!(code(&mvcardboard(&["frobnicate"])), 1);
    assert_eq!(code(&mvcardboard(&["ablate", "--study", "nonsense"])), 1);
    assert_eq!(code(&mvcardboard(&["simulate", "--aggregator", "voxel"])), 1);

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let r = mvcardboard(&["simulate", "--sample-rate", "1.5", "--out", s(&out)]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("sample_rate"));
    // more pedestrians than the area can hold at the minimum separation
    let r = mvcardboard(&["simulate", "--pedestrians", "100000", "--out", s(&out)]);
    assert_eq!(code(&r), 1);
}

#[test]
fn malformed_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&mvcardboard(&["pipeline", "--scene", s(&missing), "--out", s(&out)])), 2);

    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(code(&mvcardboard(&["pipeline", "--scene", s(&garbage), "--out", s(&out)])), 2);
    assert_eq!(code(&mvcardboard(&["eval", "--pred", s(&garbage), "--gt", s(&garbage), "--out", s(&out)])), 2);
    assert_eq!(code(&mvcardboard(&["simulate", "--config", s(&garbage), "--out", s(&out)])), 2);

    // detections for a camera the scene does not define
    let unknown = tmp.path().join("unknown.json");
    std::fs::write(
        &unknown,
        r#"{"detections": {"C9": [{"box": [0, 0, 10, 30], "standing": [5, 30]}]}}"#,
    )
    .unwrap();
    assert_eq!(code(&mvcardboard(&["pipeline", "--scene", s(&unknown), "--out", s(&out)])), 2);
}

#[test]
fn perfect_predictions_score_one() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert_eq!(code(&mvcardboard(&["simulate", "--seed", "4", "--out", s(&sim)])), 0);
    let scene = sim.join("scene.json");
    let out = tmp.path().join("eval");
    assert_eq!(code(&mvcardboard(&["eval", "--pred", s(&scene), "--gt", s(&scene), "--out", s(&out)])), 0);
    let r = report(&out);
    for key in ["moda", "modp", "precision", "recall"] {
        assert_eq!(r[key].as_f64(), Some(1.0), "{key}");
    }
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("frame,TP,FP,FN,MODA,MODP,P,R\n"));
}

#[test]
fn zero_noise_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let run = tmp.path().join("run");
    let r = mvcardboard(&["simulate", "--seed", "9", "--zero-noise", "--out", s(&sim)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let scene = sim.join("scene.json");

    let r = mvcardboard(&[
        "pipeline", "--scene", s(&scene), "--threshold", "0.28", "--write-clouds", "--out", s(&run),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["predictions.json", "heatmap.bin", "heatmap.pgm", "clouds.csv"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let pgm = std::fs::read(run.join("heatmap.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));

    let pred = run.join("predictions.json");
    let r = mvcardboard(&["eval", "--pred", s(&pred), "--gt", s(&scene), "--out", s(&run)]);
    assert_eq!(code(&r), 0);
    assert_eq!(report(&run)["moda"].as_f64(), Some(1.0));
}

#[test]
fn cluster_aggregator_writes_no_heatmap() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let run = tmp.path().join("run");
    assert_eq!(code(&mvcardboard(&["simulate", "--zero-noise", "--out", s(&sim)])), 0);
    let scene = sim.join("scene.json");
    let r = mvcardboard(&["pipeline", "--scene", s(&scene), "--aggregator", "cluster", "--out", s(&run)]);
    assert_eq!(code(&r), 0);
    assert!(run.join("predictions.json").is_file());
    assert!(!run.join("heatmap.bin").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_pedestrians": 5, "seed": 1}"#).unwrap();
    let out = tmp.path().join("o");
    let r = mvcardboard(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&r), 0);
    let scene: Value = serde_json::from_str(&std::fs::read_to_string(out.join("scene.json")).unwrap()).unwrap();
    assert_eq!(scene["pedestrians"].as_array().unwrap().len(), 5);

    let r = mvcardboard(&["simulate", "--config", s(&cfg), "--pedestrians", "7", "--out", s(&out)]);
    assert_eq!(code(&r), 0);
    let scene: Value = serde_json::from_str(&std::fs::read_to_string(out.join("scene.json")).unwrap()).unwrap();
    assert_eq!(scene["pedestrians"].as_array().unwrap().len(), 7);

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(code(&mvcardboard(&["simulate", "--config", s(&bad), "--out", s(&out)])), 2);
}

#[test]
fn ablate_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("abl");
    let r = mvcardboard(&["ablate", "--study", "fixed_height", "--seeds", "2", "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("fixed_height.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "study,setting,seed,n_pedestrians,TP,FP,FN,MODA,MODP,P,R,points");
    assert_eq!(lines.len(), 1 + 2 * 2);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("recovered") && stdout.contains("fixed-1.8"));
}

#[test]
fn bare_detections_with_calibration_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cams = mvcardboard::simulator::rig_preset("wildtrack_like").unwrap();
    let calib = tmp.path().join("calib.json");
    mvcardboard::io::write_calibration(&calib, &cams).unwrap();

    let sim = tmp.path().join("sim");
    assert_eq!(code(&mvcardboard(&["simulate", "--zero-noise", "--seed", "2", "--out", s(&sim)])), 0);
    // keep only the detections, as an external detector would write them
    let scene: Value = serde_json::from_str(&std::fs::read_to_string(sim.join("scene.json")).unwrap()).unwrap();
    let bare = tmp.path().join("dets.json");
    std::fs::write(&bare, serde_json::json!({ "detections": scene["detections"] }).to_string()).unwrap();

    let run = tmp.path().join("run");
    let r = mvcardboard(&[
        "pipeline", "--scene", s(&bare), "--calibration", s(&calib), "--threshold", "0.28", "--out", s(&run),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let pred = run.join("predictions.json");
    let gt = sim.join("scene.json");
    assert_eq!(code(&mvcardboard(&["eval", "--pred", s(&pred), "--gt", s(&gt), "--out", s(&run)])), 0);
    assert_eq!(report(&run)["moda"].as_f64(), Some(1.0));

    // without cameras the file cannot be interpreted
    assert_eq!(code(&mvcardboard(&["pipeline", "--scene", s(&bare), "--out", s(&run)])), 2);
}
