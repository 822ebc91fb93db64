use std::path::Path;
use std::process::{Command, Output};

fn lodgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lodgs")).args(args).output().unwrap()
}

fn generate_into(dir: &Path) {
    let out = lodgs(&[
        "generate",
        "--kind",
        "checker_plane",
        "--n",
        "4",
        "--views",
        "3",
        "--scales",
        "1,2",
        "--resolution",
        "24",
        "--ss-factor",
        "4",
        "--seed",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_exits_zero() {
    let out = lodgs(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("generate"));
}

#[test]
fn unknown_flag_exits_one() {
    let out = lodgs(&["render", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_subcommand_exits_one() {
    let out = lodgs(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eval.csv");
    let out = lodgs(&[
        "eval",
        "--scene",
        "/nonexistent/scene.lodgs",
        "--data",
        "/nonexistent/manifest.json",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn generate_then_eval_is_identical_on_every_view() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let csv = dir.path().join("eval.csv");
    let out = lodgs(&[
        "eval",
        "--scene",
        dir.path().join("scene.lodgs").to_str().unwrap(),
        "--data",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--split",
        "all",
        "--supersample",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[3], "identical", "row: {row}");
        assert_eq!(cells[4], "1.000000", "row: {row}");
    }
}

#[test]
fn train_zero_iterations_rewrites_the_scene_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let scene = dir.path().join("scene.lodgs");
    let trained = dir.path().join("trained.lodgs");
    let out = lodgs(&[
        "train",
        "--data",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--init",
        scene.to_str().unwrap(),
        "--out",
        trained.to_str().unwrap(),
        "--iters",
        "0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&scene).unwrap(), std::fs::read(&trained).unwrap());
}

#[test]
fn corrupt_scene_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let scene = dir.path().join("scene.lodgs");
    let mut bytes = std::fs::read(&scene).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&scene, &bytes).unwrap();
    let out = lodgs(&[
        "render",
        "--scene",
        scene.to_str().unwrap(),
        "--data",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--out",
        dir.path().join("r.ppm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn render_writes_pfm_and_ppm() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let pfm = dir.path().join("view.pfm");
    let ppm = dir.path().join("view.ppm");
    for path in [&pfm, &ppm] {
        let out = lodgs(&[
            "render",
            "--scene",
            dir.path().join("scene.lodgs").to_str().unwrap(),
            "--data",
            dir.path().join("manifest.json").to_str().unwrap(),
            "--camera-index",
            "0",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let image = lodgs_core::load_pfm(&pfm).unwrap();
    assert_eq!((image.width, image.height), (24, 24));
    let raw = std::fs::read(&ppm).unwrap();
    assert!(raw.starts_with(b"P6\n"));
}

#[test]
fn gradcheck_passes_on_a_generated_scene() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let out = lodgs(&[
        "gradcheck",
        "--scene",
        dir.path().join("scene.lodgs").to_str().unwrap(),
        "--data",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--samples",
        "150",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}
