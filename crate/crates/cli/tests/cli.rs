use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_whitney");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// 100 points on a unit circle tilted out of the coordinate planes.
fn circle_csv(path: &Path) {
    let (c, s) = (0.6_f64, 0.8_f64);
    let mut text = String::from("x,y,z\n");
    for i in 0..100 {
        let t = i as f64 * std::f64::consts::TAU / 100.0;
        let (x, y) = (t.cos(), t.sin());
        // Rotate the xy-plane about the x axis.
        writeln!(text, "{},{},{}", x, c * y, s * y).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

fn value_after(text: &str, prefix: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_else(|| panic!("no `{prefix}` in {text}"))
        .trim()
        .parse()
        .unwrap()
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fit_circle() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    let model = dir.path().join("model.json");
    let trace = dir.path().join("trace.csv");
    circle_csv(&input);
    let text = ok(&[
        "fit", "--input", p(&input), "--header", "--dim", "2", "--trace", p(&trace), "--output",
        p(&model),
    ]);
    assert!(value_after(&text, "final distortion:") <= 0.05, "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["version"], "whitney-model/1");
    assert_eq!((json["m"].as_u64(), json["k"].as_u64()), (Some(3), Some(2)));
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("iteration,step,value,accepted,argmax_index\n"));
}

#[test]
fn fit_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    let mut text = String::new();
    for i in 0..30 {
        let x = i as f64 / 7.0;
        writeln!(text, "{},{},{},{}", x.sin(), (2.0 * x).cos(), x * 0.1, (x * x).sin()).unwrap();
    }
    std::fs::write(&input, text).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        ok(&[
            "fit", "--input", p(&input), "--dim", "2", "--seed", "9", "--max-iters", "50",
            "--stretch", "--output", p(out),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(json["stretch"].as_array().unwrap().len(), 4);
}

#[test]
fn transform_applies_the_frame() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    // Columns (0.6, 0.8, 0) and (0, 0, 1), row-major.
    let json = serde_json::json!({
        "version": "whitney-model/1",
        "m": 3,
        "k": 2,
        "frame": [0.6, 0.0, 0.8, 0.0, 0.0, 1.0],
        "config": {
            "prune_count": null,
            "search": {
                "initial_step": 0.5, "contraction": 0.5, "expansion": 2.0,
                "step_tolerance": 1e-6, "max_iterations": 500,
                "poll_directions": null, "seed": 0
            }
        }
    });
    std::fs::write(&model, json.to_string()).unwrap();
    let input = dir.path().join("pts.csv");
    std::fs::write(&input, "1,2,3\n-0.5,0.25,7\n0,0,0\n").unwrap();
    let output = dir.path().join("out.csv");
    ok(&["transform", "--model", p(&model), "--input", p(&input), "--output", p(&output)]);
    let rows = read_rows(&output);
    let want = [[0.6 + 1.6, 3.0], [-0.3 + 0.2, 7.0], [0.0, 0.0]];
    assert_eq!(rows.len(), 3);
    for (row, w) in rows.iter().zip(want) {
        assert_eq!(row.len(), 2);
        for (a, b) in row.iter().zip(w) {
            assert!((a - b).abs() <= 1e-12, "{row:?} vs {w:?}");
        }
    }
}

#[test]
fn transform_matches_fitted_frame() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    let model = dir.path().join("model.json");
    let output = dir.path().join("out.csv");
    circle_csv(&input);
    ok(&["fit", "--input", p(&input), "--header", "--dim", "2", "--output", p(&model)]);
    ok(&[
        "transform", "--model", p(&model), "--input", p(&input), "--header", "--output",
        p(&output),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let frame: Vec<f64> = json["frame"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let text = std::fs::read_to_string(&input).unwrap();
    let points: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    let rows = read_rows(&output);
    assert_eq!(rows.len(), points.len());
    for (x, y) in points.iter().zip(&rows) {
        for c in 0..2 {
            let want: f64 = (0..3).map(|i| frame[i * 2 + c] * x[i]).sum();
            assert!((y[c] - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn secants_export() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    let output = dir.path().join("sec.csv");
    std::fs::write(&input, "0,0\n3,4\n0,0\n").unwrap();
    let text = ok(&["secants", "--input", p(&input), "--output", p(&output)]);
    assert!(text.contains("secants: 1"), "{text}");
    assert_eq!(read_rows(&output), vec![vec![0.6, 0.8]]);
}

fn idx_images(images: &[Vec<u8>], rows: u32, cols: u32) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [0x803, images.len() as u32, rows, cols] {
        out.extend_from_slice(&u32::to_be_bytes(v));
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [0x801, labels.len() as u32] {
        out.extend_from_slice(&u32::to_be_bytes(v));
    }
    out.extend_from_slice(labels);
    out
}

/// 4×4 images: class 0 lit on the left half, class 1 on the right half,
/// with a deterministic speckle.
fn digit_fixture(dir: &Path, n: usize, salt: u32) -> (std::path::PathBuf, std::path::PathBuf) {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut state = 12345u32.wrapping_add(salt);
    for i in 0..n {
        let label = (i % 2) as u8;
        let img: Vec<u8> = (0..16)
            .map(|px| {
                state = state.wrapping_mul(1_103_515_245).wrapping_add(12345);
                let speckle = (state >> 16) % 60;
                let lit = (px % 4 < 2) == (label == 0);
                (if lit { 180 } else { 10 } + speckle) as u8
            })
            .collect();
        images.push(img);
        labels.push(label);
    }
    let ip = dir.join(format!("images-{salt}"));
    let lp = dir.join(format!("labels-{salt}"));
    std::fs::write(&ip, idx_images(&images, 4, 4)).unwrap();
    std::fs::write(&lp, idx_labels(&labels)).unwrap();
    (ip, lp)
}

#[test]
fn classify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (train_i, train_l) = digit_fixture(dir.path(), 40, 0);
    let (test_i, test_l) = digit_fixture(dir.path(), 20, 1);
    let models = dir.path().join("models");
    let text = ok(&[
        "classify-fit", "--train-images", p(&train_i), "--train-labels", p(&train_l), "--dim",
        "3", "--prune", "5", "--max-iters", "20", "--out-dir", p(&models),
    ]);
    assert!(text.contains("class 0:") && text.contains("class 1:"), "{text}");
    for name in ["class-0.json", "class-0-train.idx", "class-1.json", "class-1-train.idx"] {
        assert!(models.join(name).exists(), "missing {name}");
    }
    let report = dir.path().join("report.json");
    let text = ok(&[
        "classify-eval", "--models-dir", p(&models), "--test-images", p(&test_i),
        "--test-labels", p(&test_l), "--neighbors", "3", "--raw-baseline", "--report",
        p(&report),
    ]);
    assert!(text.contains("test error: 0.00% (0 of 20)"), "{text}");
    assert!(text.contains("raw-space error: 0.00%"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["error_rate"], 0.0);
    assert_eq!(json["confusion"], serde_json::json!([[10, 0], [0, 10]]));
    assert!(json["per_class_errors"].is_object());
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["fit", "--input", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv");
    let out = dir.path().join("m.json");
    let res = run(&["fit", "--input", p(&missing), "--dim", "1", "--output", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,oops\n").unwrap();
    let res = run(&["fit", "--input", p(&bad), "--dim", "1", "--output", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("oops"));

    let good = dir.path().join("good.csv");
    std::fs::write(&good, "0,0,0\n1,0,0\n0,1,0\n").unwrap();
    let res = run(&[
        "fit", "--input", p(&good), "--dim", "1", "--step-tol", "0", "--output", p(&out),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}
