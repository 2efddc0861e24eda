use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn planetex(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_planetex"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn planetex")
}

fn ok(args: &[&str]) -> String {
    let out = planetex(args, &[]);
    assert!(
        out.status.success(),
        "planetex {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TINY_SPEC: &str = r#"{
  "texture": {
    "resolution": 128, "spacing": 32, "width": 4,
    "background": [0.92, 0.9, 0.86], "line_color": [0.1, 0.12, 0.2],
    "blob_count": 0, "blob_color": [0.6, 0.3, 0.2]
  },
  "plane_width": 2.0, "plane_height": 2.0,
  "ring": { "count": 2, "radius": 0.3, "elevation": 4.0, "jitter": 0.0, "image_size": 128 },
  "noise": { "rotation_deg_std": 0.0, "translation_std": 0.0 },
  "seed": 9
}"#;

fn write_scene(dir: &Path) -> (String, String, String) {
    let spec = dir.join("scene.json");
    fs::write(&spec, TINY_SPEC).unwrap();
    let scene = dir.join("scene");
    ok(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        scene.to_str().unwrap(),
    ]);
    (
        scene.join("mesh.obj").to_string_lossy().into_owned(),
        scene.join("cameras_true.txt").to_string_lossy().into_owned(),
        scene.join("truth.png").to_string_lossy().into_owned(),
    )
}

fn write_config(dir: &Path) -> String {
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, "{\n  \"seed\": 0\n}\n").unwrap();
    cfg.to_string_lossy().into_owned()
}

#[test]
fn run_produces_manifest_and_textures() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, cameras, _truth) = write_scene(dir.path());
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    ok(&[
        "run",
        "--mesh",
        &mesh,
        "--cameras",
        &cameras,
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let planes = parsed["planes"].as_array().unwrap();
    assert!(!planes.is_empty());
    for plane in planes {
        let tex = plane["texture"].as_str().unwrap();
        assert!(out.join(tex).exists(), "missing {tex}");
    }
    assert!(out.join("model.obj").exists());
    assert!(out.join("model.mtl").exists());
}

/// The staged commands, chained by hand, must reproduce `run` byte for byte.
#[test]
fn stage_composition_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, cameras, _truth) = write_scene(dir.path());
    let cfg = write_config(dir.path());

    let run_out = dir.path().join("out_run");
    ok(&[
        "run",
        "--mesh",
        &mesh,
        "--cameras",
        &cameras,
        "--config",
        &cfg,
        "--out",
        run_out.to_str().unwrap(),
    ]);

    let planes = dir.path().join("planes.json");
    ok(&["segment", "--mesh", &mesh, "--out", planes.to_str().unwrap()]);
    let listed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&planes).unwrap()).unwrap();
    assert_eq!(listed.as_array().unwrap().len(), 1, "tiny scene is one plane");

    let sel = dir.path().join("sel.json");
    ok(&[
        "select",
        "--mesh",
        &mesh,
        "--cameras",
        &cameras,
        "--plane",
        "0",
        "--config",
        &cfg,
        "--out",
        sel.to_str().unwrap(),
    ]);

    let tex = dir.path().join("tex.png");
    let lols = dir.path().join("lols");
    ok(&[
        "stitch",
        "--plane",
        "0",
        "--selection",
        sel.to_str().unwrap(),
        "--out",
        tex.to_str().unwrap(),
        "--dump-lols",
        lols.to_str().unwrap(),
    ]);
    assert!(dir.path().join("tex.mask.png").exists());
    assert!(lols.join("lols_view_000.json").exists());

    // Plane id 0 leaves the per-plane seed equal to the config seed.
    ok(&[
        "inpaint",
        "--texture",
        tex.to_str().unwrap(),
        "--mask",
        dir.path().join("tex.mask.png").to_str().unwrap(),
        "--lol2",
        dir.path().join("tex.lol2.json").to_str().unwrap(),
        "--backend",
        "builtin",
        "--seed",
        "0",
    ]);

    let staged = fs::read(&tex).unwrap();
    let whole = fs::read(run_out.join("plane_000.png")).unwrap();
    assert_eq!(staged, whole, "staged pipeline diverged from run");
}

#[test]
fn eval_prints_unit_ssim_for_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    let (_mesh, _cameras, truth) = write_scene(dir.path());
    let stdout = ok(&["eval", "--rendered", &truth, "--reference", &truth]);
    assert_eq!(stdout.trim(), "1.000000");
}

#[test]
fn missing_input_file_exits_one() {
    let out = planetex(
        &["segment", "--mesh", "/nonexistent/mesh.obj", "--out", "/tmp/x.json"],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn bad_flag_exits_one_and_help_exits_zero() {
    let bad = planetex(&["segment", "--no-such-flag"], &[]);
    assert_eq!(bad.status.code(), Some(1));
    let help = planetex(&["--help"], &[]);
    assert_eq!(help.status.code(), Some(0));
}

/// A texture with a real hole, inpainted against a dead service URL. The env
/// variable must override the --backend flag, and the failure is a pipeline
/// error, not an input error.
#[test]
fn unreachable_inpaint_service_exits_two() {
    use planetex::geom::{Loop, PolygonBoundary};
    use planetex::raster::{Mask, Raster};
    use planetex::P2;

    let dir = tempfile::tempdir().unwrap();
    let tex = dir.path().join("tex.png");
    let mask = dir.path().join("mask.png");
    let lol2 = dir.path().join("lol2.json");

    Raster::constant(32, 32, [0.5, 0.5, 0.5]).write_png(&tex).unwrap();
    Mask::from_fn(32, 32, |x, y| x >= 8 || y >= 8).write_png(&mask).unwrap();
    let outer = Loop::new(vec![
        P2::new(0.0, 0.0),
        P2::new(32.0, 0.0),
        P2::new(32.0, 32.0),
        P2::new(0.0, 32.0),
    ])
    .unwrap();
    let boundary = PolygonBoundary::new(outer, vec![]).unwrap();
    fs::write(
        &lol2,
        serde_json::json!({ "boundary": boundary, "clusters": [] }).to_string(),
    )
    .unwrap();

    let res = planetex(
        &[
            "inpaint",
            "--texture",
            tex.to_str().unwrap(),
            "--mask",
            mask.to_str().unwrap(),
            "--lol2",
            lol2.to_str().unwrap(),
            "--backend",
            "builtin",
            "--seed",
            "0",
        ],
        &[("PLANETEX_INPAINT_URL", "http://127.0.0.1:9")],
    );
    assert_eq!(res.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&res.stderr));
}
