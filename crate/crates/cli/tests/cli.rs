use std::path::Path;
use std::process::{Command, Output};

use fsi_core::assets::bundled_scene;
use fsi_core::io::{load_luma, quantize};

fn fsi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn fsi")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = fsi(dir, args);
    assert!(
        out.status.success(),
        "fsi {args:?} failed\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn full_mask_round_trip_within_one_gray_level() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "--size",
            "64",
            "--out-dir",
            "o",
            "simulate",
            "--strategy",
            "full",
        ],
    );
    ok(
        d,
        &[
            "--size",
            "64",
            "--out-dir",
            "o",
            "reconstruct",
            "--input",
            "o/spectrum.csv",
            "--method",
            "ift",
            "--out",
            "o/r.png",
        ],
    );
    let recon = load_luma(&d.join("o/r.png")).unwrap();
    let scene = bundled_scene(64).unwrap();
    let worst = recon
        .data()
        .iter()
        .zip(scene.pixels())
        .map(|(&r, &s)| (quantize(r) as i32 - quantize(s) as i32).abs())
        .max()
        .unwrap();
    assert!(worst <= 1, "max gray-level error {worst}");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for run in ["a", "b"] {
        ok(
            d,
            &[
                "--size",
                "32",
                "--seed",
                "9",
                "--out-dir",
                run,
                "--quiet",
                "pipeline",
                "--eta",
                "0.2",
                "--noise-sigma",
                "0.5",
                "--iters",
                "40",
            ],
        );
    }
    for name in [
        "mask.png",
        "mask.csv",
        "spectrum.csv",
        "recon.png",
        "recon.pgm",
        "metrics.csv",
    ] {
        let a = std::fs::read(d.join("a").join(name)).unwrap();
        let b = std::fs::read(d.join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
        if name.ends_with(".csv") {
            assert!(!a.contains(&b'\r'), "{name} has CR line endings");
        }
    }
}

#[test]
fn seed_changes_gaussian_mask() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["--size", "32", "--seed", "1", "mask", "gen", "--out", "m1"],
    );
    ok(
        d,
        &["--size", "32", "--seed", "2", "mask", "gen", "--out", "m2"],
    );
    assert_ne!(
        std::fs::read(d.join("m1.csv")).unwrap(),
        std::fs::read(d.join("m2.csv")).unwrap()
    );
}

#[test]
fn out_of_range_eta_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fsi(
        tmp.path(),
        &[
            "--size",
            "32",
            "mask",
            "gen",
            "--strategy",
            "gaussian",
            "--eta",
            "0.6",
        ],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("out of range") && err.contains("0.6"),
        "stderr: {err}"
    );
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn missing_scene_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fsi(tmp.path(), &["simulate", "--scene", "nope.png"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.png"));
}

#[test]
fn compare_grid_and_montage() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = ok(
        d,
        &[
            "--size",
            "32",
            "--out-dir",
            "cmp",
            "compare",
            "--strategies",
            "gaussian,circular,radial",
            "--methods",
            "ift,cs",
            "--eta",
            "0.3",
            "--iters",
            "40",
        ],
    );
    let rows = csv_rows(&d.join("cmp/compare.csv"));
    assert_eq!(rows.len(), 1 + 6);
    let cells: Vec<(String, String)> = rows[1..]
        .iter()
        .map(|r| (r[1].clone(), r[0].clone()))
        .collect();
    let expected: Vec<(String, String)> = ["gaussian", "circular", "radial"]
        .iter()
        .flat_map(|s| ["ift", "cs"].map(|m| (s.to_string(), m.to_string())))
        .collect();
    assert_eq!(cells, expected);
    for r in &rows[1..] {
        let ssim: f64 = r[6].parse().unwrap();
        assert!(ssim > -1.0 && ssim <= 1.0);
        let marked: usize = r[4].parse().unwrap();
        assert_eq!(r[5].parse::<usize>().unwrap(), 3 * marked);
    }
    let montage = image::open(d.join("cmp/montage.png")).unwrap();
    assert_eq!(montage.width(), 6 * 32);
    assert!(montage.height() > 32);
    assert!(String::from_utf8_lossy(&out.stderr).contains("measurements"));
}

#[test]
fn usaf_target_reports_resolution() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "--size",
            "128",
            "--out-dir",
            "u",
            "--quiet",
            "pipeline",
            "--target",
            "usaf",
            "--strategy",
            "full",
            "--method",
            "ift",
        ],
    );
    let rows = csv_rows(&d.join("u/metrics.csv"));
    assert_eq!(rows.len(), 2);
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    assert_eq!(rows[1][col("finest_resolvable_group")], "1");
    assert_eq!(rows[1][col("finest_resolvable_element")], "6");
    assert!(rows[0].iter().any(|h| h == "g0e1_v_contrast"));
    assert!(d.join("u/chart.csv").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("run.cfg"),
        "# settings\nsize = 32\nseed = 4\nstrategy = circular\neta = 0.25\nout_dir = fromfile\n",
    )
    .unwrap();
    ok(d, &["--config", "run.cfg", "mask", "gen"]);
    let from_file = std::fs::read_to_string(d.join("fromfile/mask.csv")).unwrap();
    assert!(
        from_file.contains("n=32")
            && from_file.contains("strategy=circular")
            && from_file.contains("eta=0.25")
    );

    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "--out-dir",
            "flags",
            "mask",
            "gen",
            "--eta",
            "0.1",
        ],
    );
    let overridden = std::fs::read_to_string(d.join("flags/mask.csv")).unwrap();
    assert!(overridden.contains("strategy=circular") && overridden.contains("eta=0.1"));

    std::fs::write(d.join("bad.cfg"), "colour = blue\n").unwrap();
    let out = fsi(d, &["--config", "bad.cfg", "mask", "gen"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn importance_build_matches_bundled_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &["--size", "16", "importance", "build", "--out", "ord.csv"],
    );
    ok(
        d,
        &[
            "--size",
            "16",
            "mask",
            "gen",
            "--ordering",
            "ord.csv",
            "--out",
            "a",
        ],
    );
    ok(d, &["--size", "16", "mask", "gen", "--out", "b"]);
    assert_eq!(
        std::fs::read(d.join("a.csv")).unwrap(),
        std::fs::read(d.join("b.csv")).unwrap()
    );
}

#[test]
fn pattern_export_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "--size",
            "16",
            "pattern",
            "export",
            "--strategy",
            "circular",
            "--eta",
            "0.2",
            "--binary",
            "--out",
            "pat",
        ],
    );
    let rows = csv_rows(&d.join("pat/manifest.csv"));
    assert_eq!(rows[0], ["index", "k", "u", "v", "step"]);
    let n_patterns = rows.len() - 1;
    assert_eq!(n_patterns % 3, 0);
    for i in 0..n_patterns {
        let pgm = image::open(d.join(format!("pat/p{i:06}.pgm"))).unwrap();
        assert_eq!((pgm.width(), pgm.height()), (16, 16));
        assert!(d.join(format!("pat/p{i:06}.fsib")).exists());
    }
}
