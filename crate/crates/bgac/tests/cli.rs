//! End-to-end checks of the `bgac` binary: the full synth → train →
//! spot → eval chain, the depth-based subcommands, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bgac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgac"))
        .args(args)
        .output()
        .expect("spawn bgac")
}

fn ok(args: &[&str]) -> String {
    let out = bgac(args);
    assert!(
        out.status.success(),
        "bgac {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_pipeline_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();

    // Skeleton-only session long enough to train from (12 examples per
    // gesture; every 10th held out).
    let stdout = ok(&[
        "synth",
        "--out",
        &d("a"),
        "--seed",
        "7",
        "--duration-s",
        "600",
        "--prompts",
        "12",
        "--gestures",
        "original",
        "--no-depth",
    ]);
    assert!(stdout.contains("48 annotations"), "{stdout}");
    assert!(Path::new(&d("a/session.bgac")).exists());
    assert!(Path::new(&d("a/annotations.json")).exists());
    assert!(Path::new(&d("a/synth.manifest.json")).exists());

    let stdout = ok(&[
        "train",
        "--session",
        &d("a/session.bgac"),
        "--annotations",
        &d("a/annotations.json"),
        "--out",
        &d("net.gsn"),
        "--seed",
        "3",
    ]);
    assert!(stdout.contains("trained 4 variants"), "{stdout}");
    assert!(stdout.contains("held-out"), "{stdout}");

    ok(&[
        "spot",
        "--network",
        &d("net.gsn"),
        "--session",
        &d("a/session.bgac"),
        "--out",
        &d("det.json"),
        "--hand",
        "right",
    ]);

    let report = ok(&[
        "eval",
        "--detections",
        &d("det.json"),
        "--annotations",
        &d("a/annotations.json"),
        "--session",
        &d("a/session.bgac"),
        "--json",
    ]);
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    let tp_rate = report["tp_rate"].as_f64().unwrap();
    assert!(
        tp_rate >= 0.5,
        "expected most injected gestures spotted, tp_rate {tp_rate}"
    );
    assert!(report["fp_interval_s"].as_f64().is_some());

    // Comparing a network against itself exercises the compare path and
    // must report identical counts on both sides.
    let cmp = ok(&[
        "compare",
        "--network-a",
        &d("net.gsn"),
        "--network-b",
        &d("net.gsn"),
        "--session",
        &d("a/session.bgac"),
        "--json",
    ]);
    let cmp: serde_json::Value = serde_json::from_str(&cmp).unwrap();
    assert_eq!(cmp["total_a"], cmp["total_b"]);
}

#[test]
fn depth_subcommands_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();

    ok(&[
        "synth",
        "--out",
        &d("s"),
        "--seed",
        "9",
        "--duration-s",
        "30",
        "--prompts",
        "1",
        "--gestures",
        "original",
        "--intensity",
        "quiet",
    ]);

    let intervals = ok(&[
        "stillframes",
        "--session",
        &d("s/session.bgac"),
        "--min-duration-s",
        "1",
        "--json",
    ]);
    assert!(serde_json::from_str::<serde_json::Value>(&intervals).unwrap().is_array());

    ok(&[
        "zones",
        "--session",
        &d("s/session.bgac"),
        "--annotations",
        &d("s/annotations.json"),
        "--gesture",
        "Swipe",
        "--out",
        &d("zone.pgm"),
    ]);
    let pgm = std::fs::read(d("zone.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"), "not a binary PGM");

    let inspect = ok(&["inspect", "--session", &d("s/session.bgac"), "--json"]);
    let inspect: serde_json::Value = serde_json::from_str(&inspect).unwrap();
    assert_eq!(inspect["format_version"], 1);
    // 30 s at a fixed 30 fps, inclusive of both endpoints.
    assert_eq!(inspect["stats"]["depth_frames"].as_u64().unwrap(), 901);
}

#[test]
fn exit_codes_distinguish_usage_from_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_string_lossy().into_owned();

    // Missing input file: usage/input error.
    let out = bgac(&["inspect", "--session", &d("nope.bgac")]);
    assert_eq!(out.status.code(), Some(2));

    // A file that is not a RIFF container: corruption.
    std::fs::write(d("bad.bgac"), b"this is not a container").unwrap();
    let out = bgac(&["inspect", "--session", &d("bad.bgac")]);
    assert_eq!(out.status.code(), Some(3));

    // A file that is not a network file: corruption.
    std::fs::write(d("bad.gsn"), b"junk").unwrap();
    let out = bgac(&[
        "spot",
        "--network",
        &d("bad.gsn"),
        "--session",
        &d("bad.bgac"),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Bad flag values: usage error.
    let out = bgac(&["synth", "--out", &d("x"), "--duration-s", "-5"]);
    assert_eq!(out.status.code(), Some(2));
}
