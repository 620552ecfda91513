use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radcube::dataset::Manifest;
use radcube::io::formats::ParamsFile;
use radcube::metrics::MetricReport;
use radcube::scene::ReflectionPoint;
use tempfile::TempDir;

const GRID: &str = "64x16x64";

fn radcube(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radcube"))
        .args(args)
        .output()
        .expect("spawn radcube")
}

fn ok(args: &[&str]) -> Output {
    let out = radcube(args);
    assert!(
        out.status.success(),
        "radcube {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    radcube(args).status.code().expect("exit code")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        // intensity 1 at 4 m with the default radar-equation scale; the two
        // actors are more than 24 range bins apart so both are isolated
        ws.write(
            "scene.json",
            r#"{"sensor_pose": {"x": 0, "y": 0, "heading": 0},
                "actors": [
                  {"x": 4.0, "y": 0.3, "vx": 0.2, "vy": 0.0, "rcs": 0.0256, "actor_id": 1},
                  {"x": 9.5, "y": -0.8, "vx": -0.3, "vy": 0.1, "rcs": 0.5, "actor_id": 2}
                ]}"#,
        );
        ws.write(
            "params.json",
            r#"{"sigma": 2.6, "g": 0.6, "n_window": 8, "p_window": 0.1, "s_doppler": 2.0}"#,
        );
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap()
    }

    fn synth(&self, out: &str, points: &str, extra: &[&str]) {
        let (scene, params) = (self.p("scene.json"), self.p("params.json"));
        let (out, points) = (self.p(out), self.p(points));
        let mut args = vec!["synth", "--grid", GRID, "--scene", &scene, "--params", &params];
        args.extend(["--out", &out, "--points-out", &points]);
        args.extend(extra);
        ok(&args);
    }
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn synth_then_fit_recovers_params() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &["--noise-count", "0"]);
    ok(&[
        "fit",
        &ws.p("c.radc"),
        "--points",
        &ws.p("pts.json"),
        "--out",
        &ws.p("fit.json"),
        "--report",
        &ws.p("report.json"),
    ]);
    let fit: ParamsFile = json(&ws.path("fit.json"));
    assert_eq!(fit.n_window, Some(8));
    assert!((fit.p_window.unwrap() - 0.1).abs() < 1e-9);
    assert!((fit.sigma - 2.6).abs() <= 0.05, "sigma {}", fit.sigma);
    assert!((fit.g - 0.6).abs() <= 0.02, "g {}", fit.g);
    assert!((fit.s_doppler.unwrap() - 2.0).abs() <= 0.1);
    let report: serde_json::Value = json(&ws.path("report.json"));
    assert_eq!(report["peaks_used"], 2);
}

#[test]
fn synth_with_sparse_noise_still_fits() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &["--noise-count", "31", "--seed", "4"]);
    let out = ok(&["fit", &ws.p("c.radc"), "--points", &ws.p("pts.json")]);
    let fit: ParamsFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(fit.n_window, Some(8));
    assert!((fit.sigma - 2.6).abs() <= 0.05, "sigma {}", fit.sigma);
}

#[test]
fn metrics_of_a_cube_with_itself() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &[]);
    let out = ok(&[
        "metrics",
        &ws.p("c.radc"),
        &ws.p("c.radc"),
        "--scene-points",
        &ws.p("pts.json"),
    ]);
    let report: MetricReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.ppe, 0.0);
    assert_eq!(report.ppse, 0.0);
    assert_eq!(report.ppe_scene, Some(0.0));
    assert_eq!(report.scene_cells, 2);
}

#[test]
fn gen_dataset_writes_cubes_and_manifest() {
    let ws = Workspace::new();
    let out = ws.p("ds");
    ok(&["gen-dataset", "--grid", GRID, "--spec", "default", "--scenes", "10", "--out", &out]);
    let manifest = Manifest::load(ws.path("ds")).unwrap();
    assert_eq!(manifest.entries.len(), 10);
    let cubes = fs::read_dir(ws.path("ds"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "radc"))
        .count();
    assert_eq!(cubes, 10);
    for e in &manifest.entries {
        assert!([2.4, 2.5, 2.6, 2.7, 2.8].contains(&e.params.sigma()));
        assert!([0.5, 0.6, 0.7].contains(&e.params.g()));
        assert!((6..=10).contains(&e.params.n_window()));
        assert!([0.1, 0.2, 0.3].contains(&e.params.p_window()));
        assert!(ws.path("ds").join(&e.file).is_file());
    }
    let raw: serde_json::Value = json(&ws.path("ds/manifest.json"));
    for key in ["version", "grid", "dtype", "spec", "entries"] {
        assert!(raw.get(key).is_some(), "manifest lacks {key}");
    }
    for key in ["file", "params", "scene", "noise", "radar_k", "scene_points"] {
        assert!(raw["entries"][0].get(key).is_some(), "entry lacks {key}");
    }
}

#[test]
fn extract_finds_the_actors() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &["--noise-count", "0"]);
    let out = ok(&["extract", &ws.p("c.radc"), "--min-peak", "0.05"]);
    let mut det: Vec<ReflectionPoint> = serde_json::from_slice(&out.stdout).unwrap();
    let truth: Vec<ReflectionPoint> = json(&ws.path("pts.json"));
    // azimuth sidelobes are detections too; the actors are the two strongest
    det.sort_by(|a, b| b.intensity.total_cmp(&a.intensity));
    assert!(det.len() >= truth.len());
    for t in &truth {
        assert!(det[..truth.len()].iter().any(|d| (d.r_bin - t.r_bin).abs() <= 1.0
            && (d.d_bin - t.d_bin).abs() <= 1.0
            && (d.a_bin - t.a_bin).abs() <= 1.0));
    }
}

#[test]
fn edit_with_empty_script_matches_synth() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &["--seed", "3"]);
    ws.write("empty.json", "[]");
    ok(&[
        "edit",
        "--grid",
        GRID,
        "--seed",
        "3",
        "--scene",
        &ws.p("scene.json"),
        "--params",
        &ws.p("params.json"),
        "--script",
        &ws.p("empty.json"),
        "--out",
        &ws.p("e.radc"),
    ]);
    assert_eq!(ws.read("c.radc"), ws.read("e.radc"));
}

#[test]
fn edit_removes_and_retunes() {
    let ws = Workspace::new();
    ws.write(
        "script.json",
        r#"[{"op": "remove", "actor_id": 2},
            {"op": "translate", "dx": 0.5, "dy": 0.0, "dheading": 0.0},
            {"op": "attrs", "sigma": 2.4}]"#,
    );
    ok(&[
        "edit",
        "--grid",
        GRID,
        "--scene",
        &ws.p("scene.json"),
        "--params",
        &ws.p("params.json"),
        "--script",
        &ws.p("script.json"),
        "--out",
        &ws.p("e.radc"),
        "--points-out",
        &ws.p("e.json"),
    ]);
    let points: Vec<ReflectionPoint> = json(&ws.path("e.json"));
    assert!(points.iter().all(|p| p.actor_id != Some(2)));
    let actor1 = points.iter().find(|p| p.actor_id == Some(1)).unwrap();
    let expect = (3.5f64.powi(2) + 0.09).sqrt() / (50.0 / 256.0);
    assert!((actor1.r_bin - expect).abs() < 1e-9);

    ws.write("bad.json", r#"[{"op": "remove", "actor_id": 77}]"#);
    let args = [
        "edit",
        "--grid",
        GRID,
        "--scene",
        &ws.p("scene.json"),
        "--params",
        &ws.p("params.json"),
        "--script",
        &ws.p("bad.json"),
        "--out",
        &ws.p("x.radc"),
    ];
    let out = radcube(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown actor id 77"));
}

#[test]
fn render_writes_two_pngs() {
    let ws = Workspace::new();
    ws.synth("c.radc", "pts.json", &[]);
    ok(&["render", &ws.p("c.radc"), "--out", &ws.p("view")]);
    for name in ["view_ra.png", "view_rd.png"] {
        assert_eq!(&ws.read(name)[..8], b"\x89PNG\r\n\x1a\n");
    }
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["synth", "--bogus"]), 1);
    assert_eq!(code(&["fit", "--grid", "3x3", "c.radc"]), 1);

    ws.write("bad.radc", "XXXXnot a cube");
    let out = radcube(&["render", &ws.p("bad.radc"), "--out", &ws.p("v")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad magic"));
    assert_eq!(code(&["render", &ws.p("missing.radc"), "--out", &ws.p("v")]), 2);

    ws.write("bad.cfg", "sede = 3\n");
    assert_eq!(code(&["--config", &ws.p("bad.cfg"), "render", "x", "--out", "y"]), 1);
    assert_eq!(code(&["--config", &ws.p("missing.cfg"), "render", "x", "--out", "y"]), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let ws = Workspace::new();
    ws.write("run.cfg", "# small grid\ngrid = 64x16x64\nseed = 3\nnoise_count = 10\n");
    let cfg = ws.p("run.cfg");
    let (scene, params) = (ws.p("scene.json"), ws.p("params.json"));
    let (a, b) = (ws.p("a.radc"), ws.p("b.radc"));
    ok(&["--config", &cfg, "synth", "--scene", &scene, "--params", &params, "--out", &a]);
    ok(&[
        "synth", "--grid", GRID, "--seed", "3", "--noise-count", "10", "--scene", &scene,
        "--params", &params, "--out", &b,
    ]);
    assert_eq!(ws.read("a.radc"), ws.read("b.radc"));
    assert_eq!(ws.read("a.radc").len(), 19 + 64 * 16 * 64 * 4);
}

#[test]
fn lobe_params_are_accepted() {
    let ws = Workspace::new();
    let lobes = radcube::psf::derive_lobe_params(8, 0.1, 64).unwrap();
    ws.write(
        "lobes.json",
        &format!(
            r#"{{"sigma": 2.6, "g": 0.6, "rs": {}, "lambda": {}}}"#,
            lobes.rs, lobes.lambda
        ),
    );
    let (scene, lobes_path) = (ws.p("scene.json"), ws.p("lobes.json"));
    let (a, b) = (ws.p("a.radc"), ws.p("b.radc"));
    ok(&["synth", "--grid", GRID, "--scene", &scene, "--params", &lobes_path, "--out", &a]);
    ok(&["synth", "--grid", GRID, "--scene", &scene, "--params", &ws.p("params.json"), "--out", &b]);
    assert_eq!(ws.read("a.radc"), ws.read("b.radc"));
}
