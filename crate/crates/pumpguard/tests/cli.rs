use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pumpguard::formats;
use pumpguard::Scenario;

fn pumpguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pumpguard"))
        .args(args)
        .output()
        .expect("spawn pumpguard")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Five minutes of normal operation.
fn short_normal(dir: &Path, seed: u64) -> PathBuf {
    let mut sc = Scenario::normal(seed);
    sc.duration_s = 300.0;
    let p = dir.join(format!("normal_{seed}.json"));
    sc.save(&p).unwrap();
    p
}

/// Five minutes with one valve window and one pump override.
fn short_attack(dir: &Path, seed: u64) -> PathBuf {
    let mut sc = Scenario::normal(seed);
    sc.duration_s = 300.0;
    sc.attacks.spoof_telemetry = true;
    sc.place_attacks(&[60.0], &[150.0]).unwrap();
    let p = dir.join(format!("attack_{seed}.json"));
    sc.save(&p).unwrap();
    p
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&pumpguard(&["--help"])), 0);
    assert_eq!(code(&pumpguard(&["frobnicate"])), 1);
    assert_eq!(code(&pumpguard(&[])), 1);
    let o = pumpguard(&["simulate", "--out", "/tmp"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--scenario"));
}

#[test]
fn simulate_default_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = pumpguard(&["simulate", "--scenario", s(&fixture("normal.json")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("pump cycles"));
    let trace = formats::read_trace(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.len(), 12_000);
    let starts = trace
        .windows(2)
        .filter(|w| !w[0].true_state.pump_on && w[1].true_state.pump_on)
        .count();
    assert!(starts >= 20, "{starts} pump starts");
}

#[test]
fn zero_duration_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"duration_s": 0}"#).unwrap();
    let o = pumpguard(&["simulate", "--scenario", s(&p), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("duration_s"), "{}", stderr(&o));
}

#[test]
fn synth_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let sc = short_normal(dir.path(), 5);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = pumpguard(&["synth", "--scenario", s(&sc), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let wav_a = std::fs::read(a.join("audio.wav")).unwrap();
    assert_eq!(wav_a, std::fs::read(b.join("audio.wav")).unwrap());
    let data_len = u32::from_le_bytes(wav_a[40..44].try_into().unwrap());
    assert_eq!(data_len, 300 * 48_000 * 2);
    let labels = formats::read_labels(&a.join("labels.csv")).unwrap();
    assert!(labels.len() > 10);

    let o = pumpguard(&["synth", "--scenario", s(&sc), "--seed", "6", "--out", s(&b)]);
    assert_eq!(code(&o), 0);
    assert_ne!(wav_a, std::fs::read(b.join("audio.wav")).unwrap());
}

#[test]
fn synth_rejects_a_foreign_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = pumpguard(&["simulate", "--scenario", s(&fixture("normal.json")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let short = short_normal(dir.path(), 1);
    let o = pumpguard(&[
        "synth",
        "--scenario",
        s(&short),
        "--trace",
        s(&dir.path().join("trace.csv")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("ticks"), "{}", stderr(&o));
}

#[test]
fn train_detect_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let train_sc = short_normal(d, 1);
    let o = pumpguard(&["synth", "--scenario", s(&train_sc), "--out", s(&d.join("train"))]);
    assert_eq!(code(&o), 0);
    let o = pumpguard(&["train", "--wav", s(&d.join("train/audio.wav")), "--out", s(d)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let db = d.join("profiles.json");
    let loaded = formats::load_db(&db).unwrap();
    assert!(loaded.active.frames >= 50 && loaded.inactive.frames >= 50);

    // Held-out normal audio: clean exit and an empty alert list.
    let held = short_normal(d, 2);
    let o = pumpguard(&["detect", "--db", s(&db), "--scenario", s(&held), "--out", s(&d.join("held"))]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(formats::read_alerts(&d.join("held/alerts.csv")).unwrap().is_empty());

    // Attack audio from a WAV file: alerts and exit code 2.
    let atk = short_attack(d, 3);
    let o = pumpguard(&["synth", "--scenario", s(&atk), "--out", s(&d.join("atk"))]);
    assert_eq!(code(&o), 0);
    let o = pumpguard(&[
        "detect",
        "--db",
        s(&db),
        "--wav",
        s(&d.join("atk/audio.wav")),
        "--scenario",
        s(&atk),
        "--out",
        s(&d.join("atk")),
    ]);
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    let alerts = formats::read_alerts(&d.join("atk/alerts.csv")).unwrap();
    assert_eq!(alerts.len(), 2);
    let report = std::fs::read_to_string(d.join("atk/report.txt")).unwrap();
    assert!(report.contains("true positives 2, false positives 0, false negatives 0"), "{report}");
    assert_eq!(report, stdout(&o).lines().filter(|l| !l.starts_with("wrote ")).map(|l| format!("{l}\n")).collect::<String>());

    let o = pumpguard(&["detect", "--db", s(&d.join("nope.json")), "--scenario", s(&held)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.json"));
}

#[test]
fn training_on_attack_scenario_warns() {
    let dir = tempfile::tempdir().unwrap();
    let atk = short_attack(dir.path(), 4);
    let o = pumpguard(&["train", "--scenario", s(&atk), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert!(dir.path().join("profiles.json").exists());
}

#[test]
fn stereo_wav_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("stereo.wav");
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: 48_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&p, spec).unwrap();
    for _ in 0..200 {
        w.write_sample(0i16).unwrap();
    }
    w.finalize().unwrap();
    let o = pumpguard(&["train", "--wav", s(&p), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unsupported WAV"), "{}", stderr(&o));
}

#[test]
fn spectra_per_state() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let normal = short_normal(d, 7);
    let o = pumpguard(&["synth", "--scenario", s(&normal), "--out", s(&d.join("n"))]);
    assert_eq!(code(&o), 0);
    let o = pumpguard(&[
        "spectra",
        "--wav",
        s(&d.join("n/audio.wav")),
        "--labels",
        s(&d.join("n/labels.csv")),
        "--frame",
        "3",
        "--out",
        s(&d.join("n/spectra")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(d.join("n/spectra"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["frame_3.csv", "spectrum_pump_active_normal.csv", "spectrum_pump_inactive_normal.csv"]
    );

    let atk = short_attack(d, 8);
    let o = pumpguard(&["spectra", "--scenario", s(&atk), "--out", s(&d.join("a"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(d.join("a")).unwrap().count(), 4);
    let read = |name: &str| formats::read_spectrum(&d.join("a").join(name)).unwrap();
    let dry = read("spectrum_pump_active_dry.csv");
    let active = read("spectrum_pump_active_normal.csv");
    let above: Vec<f64> = dry
        .iter()
        .zip(&active)
        .filter(|((f, _), _)| *f > 4000.0)
        .map(|((_, a), (_, b))| a - b)
        .collect();
    let mean = above.iter().sum::<f64>() / above.len() as f64;
    assert!(mean > 0.0, "{mean}");
}
