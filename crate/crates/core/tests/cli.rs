//! Subcommand behavior through the real binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const SMALL: &str = r#"
output_dir = "run"
grid = 32
[target]
kind = "two_spots"
separation = 5.0
spot_radius = 1.5
signal_radius = 3.0
[optimizer]
max_iters = 2000
[synthesis]
n_pairs = 12
window = 32
[analysis]
patch = [16, 16]
max_shift = [8, 8]
[temporal]
samples = 2000
"#;

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

fn twinbeam(cwd: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_twinbeam")).current_dir(cwd).args(args).output().unwrap();
    out.status.code().expect("exited normally")
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_is_reproducible_and_matches_the_stages() {
    let (tmp, _) = setup();
    let d = tmp.path();
    assert_eq!(twinbeam(d, &["pipeline", "-c", "c.toml"]), 0);
    fs::rename(d.join("run"), d.join("first")).unwrap();
    assert_eq!(twinbeam(d, &["pipeline", "-c", "c.toml"]), 0);
    fs::rename(d.join("run"), d.join("second")).unwrap();
    for stage in ["optimize", "predict", "synthesize", "decode"] {
        assert_eq!(twinbeam(d, &[stage, "-c", "c.toml"]), 0, "{stage}");
    }
    let first = files(&d.join("first"));
    assert_eq!(first, files(&d.join("second")));
    assert_eq!(first, files(&d.join("run")));

    let names: Vec<String> = first.iter().map(|(p, _)| p.display().to_string()).collect();
    for want in [
        "config.toml",
        "run.json",
        "hologram.pgm",
        "hologram.json",
        "cost_history.csv",
        "prediction.csv",
        "prediction.pgm",
        "frames/manifest.json",
        "temporal_signal.csv",
        "decode/cross.csv",
        "decode/auto_probe.pgm",
        "decode/auto_conjugate.csv",
        "decode/fidelity.txt",
        "decode/squeezing.txt",
    ] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
    assert_eq!(names.iter().filter(|n| n.ends_with(".tbfp")).count(), 12);

    // The snapshot alone reproduces the run.
    fs::copy(d.join("first/config.toml"), d.join("snap.toml")).unwrap();
    assert_eq!(twinbeam(d, &["pipeline", "-c", "snap.toml", "-o", "again"]), 0);
    let again: Vec<_> = files(&d.join("again")).into_iter().filter(|(p, _)| p != Path::new("config.toml")).collect();
    let first_no_cfg: Vec<_> = first.into_iter().filter(|(p, _)| p != Path::new("config.toml")).collect();
    assert_eq!(again, first_no_cfg);
}

#[test]
fn cost_history_is_monotone() {
    let (tmp, _) = setup();
    assert_eq!(twinbeam(tmp.path(), &["optimize", "-c", "c.toml"]), 0);
    let csv = fs::read_to_string(tmp.path().join("run/cost_history.csv")).unwrap();
    let costs: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(costs.len() > 2);
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn configuration_errors_exit_2() {
    let (tmp, _) = setup();
    let d = tmp.path();
    assert_eq!(twinbeam(d, &["optimize", "-c", "c.toml", "--set", "optics.wavelenght=1e-6"]), 2);
    assert_eq!(twinbeam(d, &["optimize", "-c", "c.toml", "--set", "target.kind=image", "--set", "target.path=missing.pgm"]), 2);
    assert_eq!(twinbeam(d, &["optimize", "-c", "nope.toml"]), 2);
    assert_eq!(twinbeam(d, &["frobnicate"]), 2);
    assert!(!d.join("run").exists(), "nothing is written before validation");
    // A hologram designed for another grid is a geometry mismatch.
    assert_eq!(twinbeam(d, &["optimize", "-c", "c.toml"]), 0);
    assert_eq!(twinbeam(d, &["predict", "-c", "c.toml", "--set", "grid=48"]), 2);
    // Disk-space guard.
    assert_eq!(twinbeam(d, &["synthesize", "-c", "c.toml", "--set", "synthesis.max_frame_bytes=1000"]), 2);
}

#[test]
fn non_convergence_exits_3_with_outputs() {
    let (tmp, _) = setup();
    assert_eq!(twinbeam(tmp.path(), &["optimize", "-c", "c.toml", "--set", "optimizer.max_iters=2"]), 3);
    assert!(tmp.path().join("run/hologram.pgm").is_file());
    let side = fs::read_to_string(tmp.path().join("run/hologram.json")).unwrap();
    assert!(side.contains("max_iterations"));
}

#[test]
fn io_and_corruption_exit_4() {
    let (tmp, _) = setup();
    let d = tmp.path();
    assert_eq!(twinbeam(d, &["decode", "-c", "c.toml", "--manifest", "none.json"]), 4);
    assert_eq!(twinbeam(d, &["predict", "-c", "c.toml"]), 4);
    assert_eq!(twinbeam(d, &["optimize", "-c", "c.toml"]), 0);
    assert_eq!(twinbeam(d, &["synthesize", "-c", "c.toml", "--set", "synthesis.n_pairs=3"]), 0);
    let frame = d.join("run/frames/pair_000001.tbfp");
    let bytes = fs::read(&frame).unwrap();
    fs::write(&frame, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(twinbeam(d, &["decode", "-c", "c.toml"]), 4);
    fs::write(d.join("run/frames/manifest.json"), "{ not json").unwrap();
    assert_eq!(twinbeam(d, &["decode", "-c", "c.toml"]), 4);
}

#[test]
fn image_targets_load_from_graymaps() {
    let (tmp, _) = setup();
    let d = tmp.path();
    // Plain graymap: one bright 3×3 block above the center.
    let mut pgm = String::from("P2\n# block\n16 16\n9\n");
    for i in 0..16 {
        let row: Vec<&str> = (0..16).map(|j| if (4..7).contains(&i) && (7..10).contains(&j) { "9" } else { "0" }).collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    fs::write(d.join("t.pgm"), pgm).unwrap();
    let args = ["optimize", "-c", "c.toml", "--set", "target.kind=image", "--set", "target.path=t.pgm", "--set", "target.signal_half=8"];
    assert_eq!(twinbeam(d, &args), 0);
    fs::write(d.join("bad.pgm"), "P7\n1 1\n1\n").unwrap();
    let bad = ["optimize", "-c", "c.toml", "--set", "target.kind=image", "--set", "target.path=bad.pgm"];
    assert_eq!(twinbeam(d, &bad), 4);
}

#[test]
fn pipeline_without_frame_files_decodes_the_same_maps() {
    let (tmp, _) = setup();
    let d = tmp.path();
    assert_eq!(twinbeam(d, &["pipeline", "-c", "c.toml"]), 0);
    assert_eq!(twinbeam(d, &["pipeline", "-c", "c.toml", "-o", "mem", "--set", "synthesis.write_frames=false"]), 0);
    assert!(!d.join("mem/frames").exists());
    for f in ["decode/cross.csv", "decode/auto_probe.csv", "decode/fidelity.txt", "decode/squeezing.txt", "prediction.csv"] {
        assert_eq!(fs::read(d.join("run").join(f)).unwrap(), fs::read(d.join("mem").join(f)).unwrap(), "{f}");
    }
}
