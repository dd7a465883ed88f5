//! End-to-end command-line pipeline: synth -> train -> detect -> eval ->
//! plot -> bench against the real binary, plus exit-code and determinism
//! contracts.

use credkit::detectors::read_detections_csv;
use credkit::synth::read_truth;
use credkit::waveio::{read_catalog, read_waveform};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_credkit"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn credkit");
    assert!(
        out.status.success(),
        "credkit {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Every file under `dir` (recursively), as path-sorted (relative, bytes)
/// pairs.
fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).expect("read_dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                out.push((rel.to_string_lossy().into_owned(), read_bytes(&path)));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn full_pipeline_produces_consistent_artifacts() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out = tmp.path().join("run");
    let out_s = out.to_str().expect("utf8 tempdir");

    // synth: a short scene plus a small labeled training set
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "synth",
        "--events",
        "2",
        "--fakes",
        "2",
        "--duration-s",
        "300",
        "--snr-list",
        "12",
        "--train-windows",
        "12",
    ]);
    let clean = read_waveform(out.join("scene_clean.csv")).expect("clean scene parses");
    assert_eq!(clean.len(), 30_000, "300 s at 100 Hz");
    let noisy = read_waveform(out.join("scene_snr_12db.csv")).expect("noisy scene parses");
    assert_eq!(noisy.len(), clean.len());
    let truth = read_truth(out.join("truth.csv")).expect("truth parses");
    assert_eq!(truth.len(), 4, "2 events + 2 fakes");
    let catalog = read_catalog(out.join("catalog.csv")).expect("catalog parses");
    assert_eq!(catalog.len(), 2, "one entry per earthquake insert");
    for ev in &catalog {
        assert!(ev.s_time > ev.p_time, "S after P in {}", ev.event_id);
    }
    let data_dir = out.join("data");
    let windows: Vec<_> = std::fs::read_dir(&data_dir)
        .expect("data dir written")
        .map(|e| e.expect("entry").file_name().into_string().expect("utf8"))
        .filter(|n| n != "catalog.csv")
        .collect();
    assert_eq!(windows.len(), 12, "requested training windows");

    // train: one epoch is enough to exercise the whole loop
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "train",
        "--data-dir",
        data_dir.to_str().expect("utf8"),
        "--epochs",
        "1",
        "--batch",
        "4",
        "--patience",
        "1",
    ]);
    let model_path = out.join("model.cred");
    for artifact in [
        "model.cred",
        "train_report.csv",
        "pr_curve.csv",
        "confusion.csv",
    ] {
        assert!(out.join(artifact).exists(), "train writes {artifact}");
    }
    let report = std::fs::read_to_string(out.join("train_report.csv")).expect("report");
    assert!(report.starts_with("epoch,"), "report header: {report}");
    assert_eq!(report.lines().count(), 2, "header plus one epoch");

    // detect on the noisy scene
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "detect",
        "--model",
        model_path.to_str().expect("utf8"),
        "--waveform",
        out.join("scene_snr_12db.csv").to_str().expect("utf8"),
    ]);
    let dets = read_detections_csv(out.join("detections.csv")).expect("detections parse");
    for d in &dets {
        assert!(d.end_s > d.start_s, "detection interval is forward in time");
        assert!(d.start_s >= 0.0 && d.end_s <= 300.0 + 1e-9);
    }

    // eval the detections against the synthesized catalog
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "eval",
        "--detections",
        out.join("detections.csv").to_str().expect("utf8"),
        "--catalog",
        out.join("catalog.csv").to_str().expect("utf8"),
    ]);
    let match_report = std::fs::read_to_string(out.join("match_report.csv")).expect("report");
    let mut lines = match_report.lines();
    assert_eq!(
        lines.next(),
        Some("matched,new,missed,precision,recall,fscore")
    );
    let row: Vec<&str> = lines.next().expect("one data row").split(',').collect();
    let (matched, new, missed): (usize, usize, usize) = (
        row[0].parse().expect("matched"),
        row[1].parse().expect("new"),
        row[2].parse().expect("missed"),
    );
    assert_eq!(matched + missed, catalog.len(), "every event accounted for");
    assert_eq!(matched + new, dets.len(), "every detection accounted for");
    assert!(out.join("magnitude_hist.csv").exists());

    // plot one of the CSV reports
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "plot",
        "--csv",
        out.join("pr_curve.csv").to_str().expect("utf8"),
    ]);
    let svg = std::fs::read_to_string(out.join("pr_curve.svg")).expect("svg");
    assert!(svg.starts_with("<svg"), "plot writes an SVG document");
    assert!(svg.ends_with("</svg>\n"), "SVG is closed");

    // bench with the trained model on a tiny grid
    run_ok(&[
        "--out-dir",
        out_s,
        "--seed",
        "7",
        "bench",
        "--model",
        model_path.to_str().expect("utf8"),
        "--snr-list",
        "0:8:8",
        "--seeds",
        "1",
    ]);
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).expect("sweep");
    let mut lines = sweep.lines();
    assert_eq!(
        lines.next(),
        Some("snr_db,method,detection_rate,fp_rate,precision")
    );
    assert_eq!(lines.count(), 6, "three methods at each of two levels");
}

#[test]
fn usage_errors_exit_one_with_synopsis() {
    let out = bin()
        .arg("--definitely-not-a-flag")
        .output()
        .expect("spawn");
    assert_eq!(exit_code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage"), "synopsis on stderr: {stderr}");

    let out = bin().arg("frobnicate").output().expect("spawn");
    assert_eq!(exit_code(&out), 1, "unknown subcommand is a usage error");

    let out = bin()
        .args(["synth", "--snr-list", "5:1:2"])
        .output()
        .expect("spawn");
    assert_eq!(exit_code(&out), 1, "inverted SNR range is a usage error");
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let out_s = tmp.path().to_str().expect("utf8");
    let out = bin()
        .args([
            "--out-dir",
            out_s,
            "detect",
            "--model",
            "/nonexistent/model.cred",
            "--waveform",
            "/nonexistent/wave.csv",
        ])
        .output()
        .expect("spawn");
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.starts_with("error:"),
        "diagnostic on stderr: {stderr}"
    );
}

#[test]
fn help_exits_zero_everywhere() {
    for args in [
        vec!["--help"],
        vec!["synth", "--help"],
        vec!["train", "--help"],
        vec!["detect", "--help"],
        vec!["bench", "--help"],
        vec!["eval", "--help"],
        vec!["plot", "--help"],
    ] {
        let out = bin().args(&args).output().expect("spawn");
        assert_eq!(exit_code(&out), 0, "help for {args:?}");
        assert!(!out.stdout.is_empty(), "help text for {args:?} on stdout");
    }
}

#[test]
fn repeated_runs_are_byte_identical_regardless_of_worker_cap() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let args = |dir: &str| {
        [
            "--out-dir".to_string(),
            dir.to_string(),
            "--seed".to_string(),
            "9".to_string(),
            "synth".to_string(),
            "--events".to_string(),
            "2".to_string(),
            "--fakes".to_string(),
            "1".to_string(),
            "--duration-s".to_string(),
            "200".to_string(),
            "--snr-list".to_string(),
            "6,12".to_string(),
            "--train-windows".to_string(),
            "6".to_string(),
        ]
    };
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let out = bin()
        .args(args(dir_a.to_str().expect("utf8")))
        .output()
        .expect("spawn");
    assert!(out.status.success());
    let out = bin()
        .args(args(dir_b.to_str().expect("utf8")))
        .env("CREDKIT_THREADS", "1")
        .output()
        .expect("spawn");
    assert!(out.status.success());

    let snap_a = dir_snapshot(&dir_a);
    let snap_b = dir_snapshot(&dir_b);
    assert_eq!(
        snap_a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        snap_b.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "same file set"
    );
    for ((name, bytes_a), (_, bytes_b)) in snap_a.iter().zip(&snap_b) {
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
}
