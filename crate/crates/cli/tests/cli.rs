use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use vigil::fatigue::{perclos_oracle, write_landmarks, FatigueConfig, LandmarkFrame};
use vigil::synth::face_points;
use vigil_cli::manifest::{Manifest, ManifestEntry};
use vigil_cli::record::DetectionRecord;

fn vigil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vigil")).args(args).output().expect("run vigil")
}

fn ok(args: &[&str]) -> String {
    let out = vigil(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    vigil(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, seed: &str, classes: &str, per_class: &str, size: &str) {
    ok(&["gen-synth", "--seed", seed, "--out", s(dir), "--classes", classes, "--per-class", per_class, "--size", size]);
}

fn records(text: &str) -> Vec<DetectionRecord> {
    text.lines().map(|l| serde_json::from_str(l).expect("valid JSON line")).collect()
}

#[test]
fn gen_synth_is_deterministic_with_default_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    gen(&a, "9", "5", "10", "16");
    gen(&b, "9", "5", "10", "16");
    let m = Manifest::read(&a.join("manifest.csv")).unwrap();
    assert_eq!(m.len(), 50);
    assert_eq!(
        m.class_labels(),
        ["safe_driving", "texting_left_hand", "talking_on_the_phone_left_hand", "texting_right_hand", "talking_on_the_phone_right_hand"]
    );
    for e in &m.entries {
        assert_eq!(std::fs::read(a.join(&e.path)).unwrap(), std::fs::read(b.join(&e.path)).unwrap());
    }
    assert_eq!(std::fs::read(a.join("manifest.csv")).unwrap(), std::fs::read(b.join("manifest.csv")).unwrap());
}

#[test]
fn seed_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&["gen-synth", "--out", s(tmp.path())]), 1);
    assert_eq!(code(&["bench", "--iterations", "1"]), 1);
    let cfg = tmp.path().join("seed.cfg");
    std::fs::write(&cfg, "seed = 3\n").unwrap();
    ok(&["gen-synth", "--config", s(&cfg), "--out", s(&tmp.path().join("d")), "--per-class", "1", "--size", "8"]);
}

#[test]
fn train_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "5", "2", "12", "16");
    let manifest = data.join("manifest.csv");
    let train = |out: &Path| {
        ok(&["train", "--seed", "5", "--manifest", s(&manifest), "--out", s(out), "--epochs", "30", "--lr", "0.5", "--batch-size", "8", "--quiet"])
    };
    let (w1, w2) = (tmp.path().join("w1.vgl"), tmp.path().join("w2.vgl"));
    train(&w1);
    train(&w2);
    assert_eq!(std::fs::read(&w1).unwrap(), std::fs::read(&w2).unwrap());
    let log = std::fs::read_to_string(w1.with_extension("csv")).unwrap();
    assert!(log.starts_with("epoch,lr,train_loss,train_acc,val_loss,val_acc,wall_ms\n"));
    assert_eq!(log.lines().count(), 31);

    let csv = ok(&["eval", "--manifest", s(&manifest), "--weights", s(&w1), "--all"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,precision,recall,f1,support");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[3], "__accuracy__,1.0000,,,");

    // the default split is the held-out fifth, recovered from the stored seed
    let val = ok(&["eval", "--manifest", s(&manifest), "--weights", s(&w1)]);
    let support: u64 = val.lines().skip(1).take(2).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(support, 5);
    assert_eq!(val, ok(&["eval", "--seed", "5", "--manifest", s(&manifest), "--weights", s(&w1)]));
}

#[test]
fn eval_rejects_unknown_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "1", "2", "3", "8");
    let w = tmp.path().join("w.vgl");
    ok(&["train", "--seed", "1", "--manifest", s(&data.join("manifest.csv")), "--out", s(&w), "--epochs", "1", "--quiet"]);
    let text = std::fs::read_to_string(data.join("manifest.csv")).unwrap().replacen("class_0", "mystery", 1);
    std::fs::write(data.join("other.csv"), text).unwrap();
    let out = vigil(&["eval", "--manifest", s(&data.join("other.csv")), "--weights", s(&w), "--all"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["train"]), 1);
    assert_eq!(code(&["no-such-verb"]), 1);
    assert_eq!(code(&["eval", "--manifest", "missing.csv", "--weights", "missing.vgl"]), 2);
    let junk = tmp.path().join("junk.vgl");
    std::fs::write(&junk, b"not a weight file").unwrap();
    assert_eq!(code(&["bench", "--weights", s(&junk)]), 2);

    let data = tmp.path().join("data");
    gen(&data, "2", "2", "4", "8");
    let out = vigil(&[
        "train", "--seed", "2", "--manifest", s(&data.join("manifest.csv")), "--out", s(&tmp.path().join("w.vgl")),
        "--epochs", "3", "--lr", "1e38", "--schedule", "constant", "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "schedule = sometimes\n").unwrap();
    assert_eq!(code(&["train", "--seed", "2", "--config", s(&bad), "--manifest", s(&data.join("manifest.csv")), "--out", s(&tmp.path().join("x.vgl"))]), 1);
}

fn closed_eye_file(path: &Path, frames: usize) -> Vec<LandmarkFrame> {
    let trace: Vec<LandmarkFrame> = (0..frames)
        .map(|i| LandmarkFrame::new(i as u64, i as i64 * 33, face_points(0.05, 0.2, 300.0, 200.0, 50.0, 0.0)).unwrap())
        .collect();
    std::fs::write(path, write_landmarks(&trace)).unwrap();
    trace
}

#[test]
fn detect_landmarks_only() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("closed.txt");
    let trace = closed_eye_file(&path, 2000);
    let recs = records(&ok(&["detect", "--landmarks", s(&path)]));
    assert_eq!(recs.len(), 2000);
    let samples: Vec<(i64, bool)> = trace.iter().map(|f| (f.timestamp_ms, true)).collect();
    let oracle = perclos_oracle(&samples, FatigueConfig::default().window_ms).unwrap();
    for (r, want) in recs.iter().zip(&oracle) {
        assert!(r.label.is_none() && r.probs.is_none());
        assert_eq!(r.eye_closed, Some(true));
        assert_eq!(r.perclos_pct, Some(*want));
    }
    assert_eq!(recs.last().unwrap().drowsy, Some(true));
    assert_eq!(recs[0].drowsy, Some(false));

    let line = ok(&["detect", "--landmarks", s(&path)]).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, ["drowsy", "eye_closed", "frame", "mouth_open", "perclos_pct", "ts_ms", "yawns"]);

    let cfg = tmp.path().join("fatigue.cfg");
    std::fs::write(&cfg, "perclos_threshold_pct = 30\nwindow_ms = 1000\n").unwrap();
    let recs = records(&ok(&["detect", "--config", s(&cfg), "--landmarks", s(&path)]));
    assert_eq!(recs[20].drowsy, Some(true));
}

#[test]
fn detect_with_frames_and_alignment() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "3", "5", "1", "16");
    let w = tmp.path().join("w.vgl");
    ok(&["train", "--seed", "3", "--manifest", s(&data.join("manifest.csv")), "--out", s(&w), "--epochs", "1", "--quiet"]);
    let frames = data.join("images");

    let recs = records(&ok(&["detect", "--frames", s(&frames), "--weights", s(&w)]));
    assert_eq!(recs.len(), 5);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!((r.frame, r.ts_ms), (i as u64, i as i64 * 33));
        let probs = r.probs.as_ref().unwrap();
        assert_eq!(probs.len(), 5);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-5);
        assert!(r.eye_closed.is_none() && r.perclos_pct.is_none());
    }

    let lm = tmp.path().join("lm.txt");
    closed_eye_file(&lm, 5);
    let both = records(&ok(&["detect", "--frames", s(&frames), "--weights", s(&w), "--landmarks", s(&lm)]));
    assert!(both.iter().all(|r| r.label.is_some() && r.drowsy.is_some()));

    closed_eye_file(&lm, 4);
    let out = vigil(&["detect", "--frames", s(&frames), "--weights", s(&w), "--landmarks", s(&lm)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("5 images") && err.contains("4 landmark frames"), "{err}");

    assert_eq!(code(&["detect"]), 1);
    assert_eq!(code(&["detect", "--frames", s(&frames)]), 1);
    let empty = tmp.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&["detect", "--landmarks", s(&empty)]), 1);
}

#[test]
fn augment_expands_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen(&data, "4", "5", "10", "16");
    let policy = tmp.path().join("policy.cfg");
    std::fs::write(&policy, "rot_deg = -15,15\nbrightness = -30,30\ncrop_frac = 0,0.2\n").unwrap();
    let run = |out: &Path, policy: &Path| {
        ok(&["augment", "--seed", "8", "--manifest", s(&data.join("manifest.csv")), "--out", s(out), "--multiplier", "2", "--policy", s(policy)]);
        Manifest::read(&out.join("manifest.csv")).unwrap()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ma = run(&a, &policy);
    assert_eq!(ma.len(), 150);
    assert_eq!(ma.entries, run(&b, &policy).entries);
    for e in &ma.entries {
        assert_eq!(std::fs::read(a.join(&e.path)).unwrap(), std::fs::read(b.join(&e.path)).unwrap());
    }
    let src = Manifest::read(&data.join("manifest.csv")).unwrap();
    assert_eq!(ma.entries[1].label, src.entries[0].label);

    let empty = tmp.path().join("empty.cfg");
    std::fs::write(&empty, "").unwrap();
    let c = tmp.path().join("c");
    let mc = run(&c, &empty);
    for e in &mc.entries {
        let original = e.path.replace("_aug0", "").replace("_aug1", "");
        assert_eq!(std::fs::read(c.join(&e.path)).unwrap(), std::fs::read(data.join(original)).unwrap());
    }
    assert_eq!(code(&["augment", "--manifest", s(&data.join("manifest.csv")), "--out", s(&c)]), 1);
}

#[test]
fn bench_prints_reference() {
    let out = ok(&["bench", "--seed", "1", "--iterations", "3", "--warmup", "1", "--size", "16"]);
    assert!(out.contains("reference 80 ms"), "{out}");
    assert!(out.contains("1 thread(s)"));
    assert_eq!(code(&["bench", "--seed", "1", "--iterations", "0"]), 1);
    assert_eq!(code(&["bench", "--seed", "1", "--threads", "0"]), 1);
}

proptest! {
    #[test]
    fn manifest_round_trips(rows in prop::collection::btree_map("[a-z0-9/ ,\"._-]{1,12}", "[a-zA-Z_ ,]{1,8}", 0..20)) {
        let entries: Vec<ManifestEntry> = rows.into_iter().map(|(path, label)| ManifestEntry { path, label }).collect();
        let m = Manifest::new("root", entries).unwrap();
        let text = m.to_csv().unwrap();
        prop_assert_eq!(Manifest::from_reader(text.as_bytes(), "root").unwrap(), m);
    }
}
