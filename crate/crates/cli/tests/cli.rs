use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ebt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebt")).args(args).output().expect("binary runs")
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let out = dir.path().join("run");
    ok(&ebt(&["synth", s(&spec("fixture-30.json")), "-o", s(&seq)]));
    assert!(seq.join("0001.ppm").exists() && seq.join("groundtruth.txt").exists());

    ok(&ebt(&["track", s(&seq), "-o", s(&out)]));
    for f in ["trajectory.csv", "timing.csv", "curves.csv", "curves.svg", "summary.json", "manifest.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 31);

    let ev = dir.path().join("eval");
    let o = ebt(&["eval", "--traj", s(&out.join("trajectory.csv")), "--gt", s(&seq.join("groundtruth.txt")), "-o", s(&ev)]);
    ok(&o);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(ev.join("summary.json")).unwrap()).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let auc = report["mean_auc"].as_f64().unwrap();
    assert!((auc - summary["auc"].as_f64().unwrap()).abs() < 1e-12);
    assert!(auc > 0.3, "auc {auc}");
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.txt");
    fs::write(&gt, "10,10,20,20\n12,11,20,20\n15,13,22,21\n").unwrap();
    let o = ebt(&["eval", "--traj", s(&gt), "--gt", s(&gt)]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mean\tauc 1.0000\tps20 1.0000"), "{text}");
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.txt");
    fs::write(&traj, "1,1,5,5\n").unwrap();
    let o = ebt(&["eval", "--traj", s(&traj), "--gt", s(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(3));

    let gt = dir.path().join("gt.txt");
    fs::write(&gt, "1,1,5,5\n2,2,5,5\n").unwrap();
    let o = ebt(&["eval", "--traj", s(&traj), "--gt", s(&gt)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gt.txt"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("f.pgm");
    fs::write(&frame, [b"P5\n4 4\n255\n".as_slice(), &[0u8; 16]].concat()).unwrap();
    let out = dir.path().join("o");
    for args in [
        vec!["--test-set", "X"],
        vec!["--set", "no_such_key=1"],
        vec!["--tracker", "kcf"],
    ] {
        let mut a = vec!["propose", s(&frame), "--prev", "0,0,2,2", "-o", s(&out)];
        a.extend(args);
        assert_eq!(ebt(&a).status.code(), Some(2), "{a:?}");
    }
    assert_eq!(ebt(&["propose", s(&frame), "--prev", "0,0,-2,2", "-o", s(&out)]).status.code(), Some(2));
}

#[test]
fn blank_frame_gives_empty_proposals() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("blank.pgm");
    fs::write(&frame, [b"P5\n64 48\n255\n".as_slice(), &[128u8; 64 * 48]].concat()).unwrap();
    let out = dir.path().join("o");
    ok(&ebt(&["propose", s(&frame), "--prev", "20,15,16,12", "-o", s(&out)]));
    let csv = fs::read_to_string(out.join("proposals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("rank,x,y,w,h,objectness,rerank"));
}

#[test]
fn stock_teleport_spec_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&ebt(&["synth", "teleport-x150", "-o", s(&a)]));
    ok(&ebt(&["synth", s(&spec("teleport-x150.json")), "-o", s(&b)]));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 62);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn oversized_object_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(spec("fixture-30.json")).unwrap()).unwrap();
    v["object"] = serde_json::json!([400, 20]);
    let p = dir.path().join("big.json");
    fs::write(&p, v.to_string()).unwrap();
    let o = ebt(&["synth", s(&p), "-o", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}
