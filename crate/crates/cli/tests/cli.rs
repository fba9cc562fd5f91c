use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use voidscan::{Radargram, Trace};
use voidscan_cli::{export, rgr};

const SMALL_SCENE: &str = r#"{
  "grid": {"width_m": 0.6, "height_m": 0.6, "spacing_m": 0.005, "pml_cells": 10},
  "layers": [
    {"name": "asphalt", "eps_r": 6.0, "sigma": 0.005, "thickness_m": 0.1},
    {"name": "base", "eps_r": 7.5, "sigma": 0.01, "thickness_m": 0.2}
  ],
  "survey": {"tx_x0_m": 0.25, "gap_m": 0.04, "elevation_m": 0.1, "step_m": 0.02, "n_shots": 3, "time_window_ns": 6.0},
  "source": {"fc_hz": 800000000.0}
}"#;

fn voidscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voidscan")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        let w = Work { dir: TempDir::new().unwrap() };
        fs::write(w.path("small.json"), SMALL_SCENE).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn simulate(&self, out: &str, extra: &[&str]) -> Output {
        let scene = self.path("small.json");
        let out = self.path(out);
        let mut args = vec!["simulate", s(&scene), "-o", s(&out)];
        args.extend_from_slice(extra);
        voidscan(&args)
    }
}

fn manifest(p: &Path) -> serde_json::Value {
    let mut name = p.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    serde_json::from_slice(&fs::read(p.with_file_name(name)).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&voidscan(&["--help"])), 0);
    assert_eq!(code(&voidscan(&["--version"])), 0);
    assert_eq!(code(&voidscan(&["export", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&voidscan(&["--bogus"])), 1);
    assert_eq!(code(&voidscan(&[])), 1);
    assert_eq!(code(&voidscan(&["simulate"])), 1);
    assert_eq!(code(&voidscan(&["calibrate", "x.rgr1", "--window-ns", "1", "-o", "y.json"])), 1);
}

#[test]
fn missing_and_malformed_inputs_exit_one() {
    let w = Work::new();
    let o = voidscan(&["simulate", "/definitely/not/here.json", "-o", s(&w.path("a.rgr1"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("here.json"));

    fs::write(w.path("bad.json"), r#"{"grid": 3}"#).unwrap();
    let o = voidscan(&["simulate", s(&w.path("bad.json")), "-o", s(&w.path("a.rgr1"))]);
    assert_eq!(code(&o), 1);
    assert!(!w.path("a.rgr1").exists());

    fs::write(w.path("junk.rgr1"), b"not a radargram").unwrap();
    let o = voidscan(&["export", "csv", s(&w.path("junk.rgr1")), "-o", s(&w.path("a.csv"))]);
    assert_eq!(code(&o), 1);

    assert_eq!(code(&w.simulate("a.rgr1", &["--snr", "-3"])), 1);
}

#[test]
fn simulate_writes_radargram_and_manifest() {
    let w = Work::new();
    let o = w.simulate("a.rgr1", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rgr::read(&w.path("a.rgr1")).unwrap();
    assert_eq!(r.n_traces(), 3);
    assert!(r.traces.iter().all(|t| t.samples.iter().all(|v| v.is_finite())));
    assert!((r.dx - 0.02).abs() < 1e-12);

    let m = manifest(&w.path("a.rgr1"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["seed"].is_null());
}

#[test]
fn simulation_is_reproducible_and_seeded() {
    let w = Work::new();
    for (name, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let o = w.simulate(&format!("{name}.rgr1"), &["--snr", "10", "--seed", seed]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |n: &str| fs::read(w.path(n)).unwrap();
    assert_eq!(read("a.rgr1"), read("b.rgr1"));
    assert_ne!(read("a.rgr1"), read("c.rgr1"));
    let (ma, mb, mc) = (manifest(&w.path("a.rgr1")), manifest(&w.path("b.rgr1")), manifest(&w.path("c.rgr1")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_ne!(ma["config_hash"], mc["config_hash"]);
    assert_eq!(ma["seed"], 5);
}

#[test]
fn plate_and_free_shots_are_single_traces() {
    let w = Work::new();
    assert_eq!(code(&w.simulate("plate.rgr1", &["--kind", "plate"])), 0);
    assert_eq!(code(&w.simulate("free.rgr1", &["--kind", "free"])), 0);
    let plate = rgr::read(&w.path("plate.rgr1")).unwrap();
    let free = rgr::read(&w.path("free.rgr1")).unwrap();
    assert_eq!(plate.n_traces(), 1);
    assert_eq!(free.n_traces(), 1);
    let peak = |t: &Trace| t.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak(&plate.traces[0]) > 0.0);
    assert!(peak(&free.traces[0]) > 0.0);
}

#[test]
fn process_applies_pipeline_and_records_provenance() {
    let w = Work::new();
    assert_eq!(code(&w.simulate("a.rgr1", &["--remove-direct-wave"])), 0);
    fs::write(w.path("p.json"), r#"[{"op": "remove_dc"}, {"op": "bandpass", "params": {"fc": 8e8}}]"#).unwrap();
    let o = voidscan(&["process", s(&w.path("a.rgr1")), "--pipeline", s(&w.path("p.json")), "-o", s(&w.path("b.rgr1"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = rgr::read(&w.path("a.rgr1")).unwrap();
    let b = rgr::read(&w.path("b.rgr1")).unwrap();
    assert_eq!(a.n_traces(), b.n_traces());
    assert_eq!(a.n_samples(), b.n_samples());
    assert_eq!(manifest(&w.path("b.rgr1"))["details"]["provenance"].as_array().unwrap().len(), 2);

    fs::write(w.path("bad.json"), r#"[{"op": "no_such_step"}]"#).unwrap();
    let o = voidscan(&["process", s(&w.path("a.rgr1")), "--pipeline", s(&w.path("bad.json")), "-o", s(&w.path("c.rgr1"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn export_image_and_csv() {
    let w = Work::new();
    assert_eq!(code(&w.simulate("a.rgr1", &[])), 0);
    let r = rgr::read(&w.path("a.rgr1")).unwrap();

    let o = voidscan(&["export", "image", s(&w.path("a.rgr1")), "-o", s(&w.path("a.pgm")), "--clip", "99"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let img = fs::read(w.path("a.pgm")).unwrap();
    let header = format!("P5\n{} {}\n255\n", r.n_traces(), r.n_samples());
    assert!(img.starts_with(header.as_bytes()));
    assert_eq!(img.len(), header.len() + r.n_traces() * r.n_samples());

    let o = voidscan(&["export", "csv", s(&w.path("a.rgr1")), "-o", s(&w.path("a.csv"))]);
    assert_eq!(code(&o), 0);
    let back: Radargram = export::import_csv(&fs::read_to_string(w.path("a.csv")).unwrap()).unwrap();
    assert_eq!(back.n_traces(), r.n_traces());
    for (a, b) in back.traces.iter().zip(&r.traces) {
        assert_eq!(a.samples, b.samples);
        assert!((a.x - b.x).abs() < 1e-12);
    }

    let o = voidscan(&["export", "image", s(&w.path("a.rgr1")), "-o", s(&w.path("b.pgm")), "--clip", "10"]);
    assert_eq!(code(&o), 1);
}

fn plate_shots(n: usize) -> Radargram {
    let dt = 1e-11;
    let traces = (0..n)
        .map(|i| {
            let a = 1.0 + 0.001 * (i % 3) as f64;
            let samples = (0..400)
                .map(|k| {
                    let t = k as f64 * dt - 1e-9;
                    let echo = a * (-(t / 2e-10).powi(2)).exp();
                    echo + 1e-4 * ((k * 7 + i * 13) % 11) as f64 / 11.0
                })
                .collect();
            Trace::new(samples, dt, 0.0, 0.0).unwrap()
        })
        .collect();
    Radargram::new(traces, 1.0, 0.0).unwrap()
}

#[test]
fn calibrate_writes_scorecard() {
    let w = Work::new();
    rgr::write(&w.path("plates.rgr1"), &plate_shots(30)).unwrap();
    let ts: Vec<f64> = (0..30).map(|i| i as f64 * 240.0).collect();
    fs::write(w.path("side.json"), serde_json::json!({ "timestamps": ts }).to_string()).unwrap();
    let o = voidscan(&[
        "calibrate",
        s(&w.path("plates.rgr1")),
        "--window-ns",
        "0.5,1.5",
        "--sidecar",
        s(&w.path("side.json")),
        "-o",
        s(&w.path("score.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let score: serde_json::Value = serde_json::from_slice(&fs::read(w.path("score.json")).unwrap()).unwrap();
    assert!(score["pass"].is_boolean());
    assert!(score["scorecard"].is_object());
    assert_eq!(manifest(&w.path("score.json"))["command"], "calibrate");

    fs::write(w.path("side2.json"), r#"{"timestamp": [1.0]}"#).unwrap();
    let o = voidscan(&[
        "calibrate",
        s(&w.path("plates.rgr1")),
        "--window-ns",
        "0.5,1.5",
        "--sidecar",
        s(&w.path("side2.json")),
        "-o",
        s(&w.path("score2.json")),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn detect_requires_its_inputs() {
    let w = Work::new();
    assert_eq!(code(&w.simulate("a.rgr1", &["--remove-direct-wave"])), 0);
    fs::write(w.path("d.json"), r#"{"fc_hz": 8e8, "echo_windows": [[1e-9, 2e-9]]}"#).unwrap();
    let o = voidscan(&[
        "detect",
        s(&w.path("a.rgr1")),
        "--config",
        s(&w.path("d.json")),
        "--plate",
        s(&w.path("missing.rgr1")),
        "-o",
        s(&w.path("r.json")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!w.path("r.json").exists());
}

#[test]
fn library_build_writes_templates() {
    let w = Work::new();
    let out = w.path("lib");
    let o = voidscan(&["library", "build", s(&w.path("small.json")), "--heights", "0.02,0.04", "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let lib: serde_json::Value = serde_json::from_slice(&fs::read(out.join("library.json")).unwrap()).unwrap();
    assert!(lib.is_object());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "library build");
}

#[test]
fn thread_count_does_not_change_results() {
    let w = Work::new();
    let scene = w.path("small.json");
    let (a, b) = (w.path("a.rgr1"), w.path("b.rgr1"));
    assert_eq!(code(&voidscan(&["--threads", "1", "simulate", s(&scene), "-o", s(&a)])), 0);
    assert_eq!(code(&voidscan(&["simulate", s(&scene), "-o", s(&b), "--threads", "2"])), 0);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(code(&voidscan(&["--threads", "0", "simulate", s(&scene), "-o", s(&w.path("c.rgr1"))])), 1);
}
