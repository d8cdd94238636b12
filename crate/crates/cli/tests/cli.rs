use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use viko_core::imaging::io::write_raw_frame;
use viko_sim::{DatasetProtocol, Scenario, Shape};

fn viko() -> Command {
    Command::new(env!("CARGO_BIN_EXE_viko"))
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "viko failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    fs::write(path, serde_json::to_string(value).unwrap()).unwrap();
}

#[test]
fn simulate_then_run_rest_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(viko().args(["simulate", "--builtin", "rest", "--frames", "12", "--out"]).arg(&sim).output().unwrap());
    assert_eq!(fs::read_dir(sim.join("frames")).unwrap().count(), 12);

    let out = dir.path().join("out.jsonl");
    ok(viko().args(["run", "--input"]).arg(&sim).arg("--out").arg(&out).output().unwrap());
    let lines = lines(&out);
    assert_eq!(lines.len(), 12);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["v"], 1);
        assert_eq!(l["frame"], i);
        assert_eq!(l["area_pct"], 0.0);
        assert_eq!(l["slip"]["flag"], false);
        assert!(l["timing_us"].is_null());
        for key in ["sx", "sy", "mag", "saturated"] {
            assert!(l["shear"].get(key).is_some(), "missing shear.{key}");
        }
        assert!(l["slip"]["outliers"].is_array());
        assert!(l["contours"].is_array());
    }
}

#[test]
fn scenario_file_directory_and_raw_stdin_agree() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::benchmark(16, 5);
    let file = dir.path().join("scenario.json");
    write_json(&file, &scenario);

    let from_file = dir.path().join("file.jsonl");
    ok(viko().args(["run", "--input"]).arg(&file).arg("--out").arg(&from_file).output().unwrap());

    let sim = dir.path().join("sim");
    ok(viko().args(["simulate", "--scenario"]).arg(&file).arg("--out").arg(&sim).output().unwrap());
    let from_dir = dir.path().join("dir.jsonl");
    ok(viko().args(["run", "--input"]).arg(sim.join("frames")).arg("--out").arg(&from_dir).output().unwrap());

    let mut child = viko()
        .args(["run", "--input", "-", "--out", "-", "--width", "480", "--height", "480"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let frames = scenario.render_range(0..scenario.len()).unwrap();
    let writer = std::thread::spawn(move || {
        for f in &frames {
            write_raw_frame(&mut stdin, f).unwrap();
        }
        stdin.flush().unwrap();
    });
    let raw = ok(child.wait_with_output().unwrap());
    writer.join().unwrap();

    let a = fs::read(&from_file).unwrap();
    assert_eq!(a, fs::read(&from_dir).unwrap());
    assert_eq!(a, raw.stdout);
    assert_eq!(lines(&from_file).len(), 16);
    assert!(lines(&from_file).iter().any(|l| l["area_pct"].as_f64().unwrap() > 10.0));
}

#[test]
fn timing_annotation_and_stride_from_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    write_json(&file, &Scenario::benchmark(12, 2));
    let cfg = dir.path().join("viko.toml");
    fs::write(&cfg, "[output]\nstride = 2\n\n[reference.source]\nkind = \"first_n\"\ncount = 3\n").unwrap();
    let out = dir.path().join("out.jsonl");
    let ann = dir.path().join("ann");
    let res = ok(viko()
        .args(["run", "--timing", "--fps-report", "--input"])
        .arg(&file)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--annotate")
        .arg(&ann)
        .output()
        .unwrap());
    let lines = lines(&out);
    let frames: Vec<u64> = lines.iter().map(|l| l["frame"].as_u64().unwrap()).collect();
    assert_eq!(frames, vec![0, 2, 4, 6, 8, 10]);
    for l in &lines {
        let t = &l["timing_us"];
        let sum: u64 = ["segmentation", "blobs", "matching", "shear", "slip"].iter().map(|k| t[k].as_u64().unwrap()).sum();
        assert_eq!(sum, t["total"].as_u64().unwrap());
    }
    assert_eq!(fs::read_dir(&ann).unwrap().count(), 6);
    assert!(ann.join("00010.png").is_file());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("FPS") && stderr.contains("segmentation"), "{stderr}");
}

#[test]
fn reference_file_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(viko().args(["simulate", "--builtin", "benchmark", "--frames", "10", "--out"]).arg(&sim).output().unwrap());
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"reference": {"source": {"kind": "file", "path": "sim/frames/00000.png"}}}"#).unwrap();
    let out = dir.path().join("out.jsonl");
    ok(viko().args(["run", "--input"]).arg(&sim).arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap());
    assert_eq!(lines(&out).len(), 10);
}

#[test]
fn unreadable_input_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let res = viko().args(["run", "--input"]).arg(dir.path().join("missing")).args(["--out", "-"]).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("error"));

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let res = viko().args(["run", "--input"]).arg(&empty).args(["--out", "-"]).output().unwrap();
    assert!(!res.status.success());
}

#[test]
fn raw_input_shorter_than_reference_is_fatal() {
    let mut child = viko()
        .args(["run", "--input", "-", "--out", "-", "--width", "8", "--height", "8"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&[180u8; 8 * 8 * 3 * 2]).unwrap();
    let res = child.wait_with_output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("reference"));
}

#[test]
fn calibrate_with_and_without_header() {
    let dir = tempfile::tempdir().unwrap();
    let f = |x: f64| 2.0 * x - 0.1 * x * x - 0.05 * x * x * x;
    let rows: String = (1..=12).map(|i| i as f64 * 0.2).map(|x| format!("{x},{}\n", f(x))).collect();
    for (name, text) in [("plain.csv", rows.clone()), ("header.csv", format!("x,force\n{rows}"))] {
        let csv = dir.path().join(name);
        fs::write(&csv, text).unwrap();
        let out = dir.path().join(format!("{name}.json"));
        ok(viko().args(["calibrate", "--samples"]).arg(&csv).arg("--out").arg(&out).output().unwrap());
        let cal: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        let c: Vec<f64> = cal["coeffs"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        for (got, want) in c.iter().zip([2.0, -0.1, -0.05]) {
            assert!((got - want).abs() < 1e-9, "{c:?}");
        }
    }

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n1,2\n1,2\n1,2\n").unwrap();
    let res = viko().args(["calibrate", "--samples"]).arg(&bad).arg("--out").arg(dir.path().join("bad.json")).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("rank"));
}

#[test]
fn dataset_from_protocol_file() {
    let dir = tempfile::tempdir().unwrap();
    let protocol = DatasetProtocol {
        shapes: vec![Shape::Circle { radius_mm: 5.0 }, Shape::Rectangle { width_mm: 8.0, height_mm: 6.0 }],
        frames_per_shape: 5,
        ..DatasetProtocol::default()
    };
    let file = dir.path().join("protocol.json");
    write_json(&file, &protocol);
    let out = dir.path().join("ds");
    ok(viko().args(["dataset", "--protocol"]).arg(&file).arg("--out").arg(&out).output().unwrap());
    assert_eq!(fs::read_dir(out.join("frames")).unwrap().count(), 10);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["count"], 10);
    assert_eq!(manifest["seed"], 2024);
}

#[test]
fn demo_passes_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let res = ok(viko().args(["demo", "--out"]).arg(dir.path()).output().unwrap());
    assert!(String::from_utf8_lossy(&res.stdout).starts_with("PASS"));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,state,area_pct,shear_mag,slip,grip_force\n"));
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn demo_failure_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("policy.json");
    fs::write(&policy, r#"{"area_accept_threshold": 60.0}"#).unwrap();
    let res = viko().args(["demo", "--policy"]).arg(&policy).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stdout).contains("GRASP_FAILED"));
}

fn external_config(dir: &Path, exchange: Value, timeout_ms: u64) -> std::path::PathBuf {
    let cfg = serde_json::json!({
        "segmenter": {
            "kind": "external",
            "exchange": exchange,
            "timeout_ms": timeout_ms,
            "fallback_to_heuristic": true,
        }
    });
    let path = dir.join("external.json");
    write_json(&path, &cfg);
    path
}

/// The stub answers eight requests with a full mask and exits; every later
/// frame must still be reported, segmented by the heuristic fallback.
#[test]
fn external_segmenter_death_degrades_without_dropping_frames() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    write_json(&scenario, &Scenario::benchmark(30, 11));
    let stub = env!("CARGO_BIN_EXE_viko");
    let exchange = serde_json::json!({"mode": "stream", "command": [stub, "segment-stub", "--full", "--max-requests", "8"]});
    let cfg = external_config(dir.path(), exchange, 5000);
    let out = dir.path().join("out.jsonl");
    ok(viko().args(["run", "--input"]).arg(&scenario).arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap());

    let lines = lines(&out);
    assert_eq!(lines.len(), 30);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["frame"], i);
        let degraded = l["flags"]["segmenter_degraded"].as_bool().unwrap();
        let area = l["area_pct"].as_f64().unwrap();
        if i < 8 {
            assert!(!degraded, "frame {i}");
            assert_eq!(area, 100.0, "frame {i}");
        } else {
            assert!(degraded, "frame {i}");
            assert!(l["flags"]["error"].is_null(), "frame {i}");
            assert!(area < 50.0, "frame {i}: {area}");
        }
    }
}

#[test]
fn external_directory_exchange() {
    let dir = tempfile::tempdir().unwrap();
    let exchange_dir = dir.path().join("xchg");
    fs::create_dir(&exchange_dir).unwrap();
    let mut stub = viko().args(["segment-stub", "--dir"]).arg(&exchange_dir).spawn().unwrap();

    let scenario = dir.path().join("scenario.json");
    write_json(&scenario, &Scenario::benchmark(8, 1));
    let cfg = external_config(dir.path(), serde_json::json!({"mode": "directory", "dir": exchange_dir}), 5000);
    let out = dir.path().join("out.jsonl");
    let res = viko().args(["run", "--input"]).arg(&scenario).arg("--config").arg(&cfg).arg("--out").arg(&out).output();
    stub.kill().unwrap();
    stub.wait().unwrap();
    ok(res.unwrap());

    for l in lines(&out) {
        assert_eq!(l["flags"]["segmenter_degraded"], false);
        assert_eq!(l["area_pct"], 0.0);
    }
}

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse() {
    let defaults = viko_core::PipelineConfig::load(&configs().join("pipeline.toml")).unwrap();
    assert_eq!(defaults, viko_core::PipelineConfig::default());
    let external = viko_core::PipelineConfig::load(&configs().join("external-stream.toml")).unwrap();
    assert!(matches!(external.segmenter, viko_core::segmentation::SegmenterConfig::External(_)));
    let scenario = Scenario::load(&configs().join("press-scenario.json")).unwrap();
    assert_eq!(scenario.len(), 46);
}

#[test]
fn press_scenario_reports_slip_while_patch_is_active() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    ok(viko().args(["run", "--input"]).arg(configs().join("press-scenario.json")).arg("--out").arg(&out).output().unwrap());
    let lines = lines(&out);
    for (i, l) in lines.iter().enumerate() {
        let slip = l["slip"]["flag"].as_bool().unwrap();
        assert_eq!(slip, (29..41).contains(&i), "frame {i}");
        if l["area_pct"] == 0.0 {
            assert!(!slip);
        }
    }
}
