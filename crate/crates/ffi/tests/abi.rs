//! The C surface exercised from Rust, plus a C program against the header.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use twinbeam_ffi::*;

const SMALL: &str = "grid = 32\n[target]\nkind = \"two_spots\"\nseparation = 5.0\nspot_radius = 1.5\nsignal_radius = 3.0\n\
[synthesis]\nn_pairs = 8\nwindow = 32\nwrite_frames = false\n[analysis]\npatch = [16, 16]\nmax_shift = [8, 8]\n[temporal]\nsamples = 500\n";

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { tb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn config(text: &str) -> *mut TbConfig {
    let t = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { tb_config_new(t.as_ptr(), &mut cfg) }, TbStatus::Ok);
    cfg
}

fn set(cfg: *mut TbConfig, k: &str, v: &str) -> TbStatus {
    let (k, v) = (CString::new(k).unwrap(), CString::new(v).unwrap());
    unsafe { tb_config_set(cfg, k.as_ptr(), v.as_ptr()) }
}

#[test]
fn config_errors_carry_codes_and_messages() {
    let bad = CString::new("[optics]\nwavelenght = 1.0\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { tb_config_new(bad.as_ptr(), &mut cfg) }, TbStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("wavelenght"));
    assert_eq!(unsafe { tb_config_new(ptr::null(), &mut cfg) }, TbStatus::InvalidArgument);

    let cfg = config("");
    assert_eq!(set(cfg, "synthesis.oversample", "2"), TbStatus::Config);
    assert_eq!(set(cfg, "synthesis.n_pairs", "17"), TbStatus::Ok);
    let mut need = 0;
    assert_eq!(unsafe { tb_config_to_toml(cfg, ptr::null_mut(), 0, &mut need) }, TbStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; need];
    assert_eq!(unsafe { tb_config_to_toml(cfg, buf.as_mut_ptr(), buf.len(), &mut need) }, TbStatus::Ok);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert!(text.contains("n_pairs = 17"));
    // The rejected override left no trace.
    assert!(text.contains("oversample = 3"));
    unsafe { tb_config_free(cfg) };
    unsafe { tb_config_free(ptr::null_mut()) };
}

#[test]
fn optimize_predict_and_decode() {
    let cfg = config(SMALL);
    let mut holo = ptr::null_mut();
    assert_eq!(unsafe { tb_optimize(cfg, &mut holo) }, TbStatus::Ok);
    assert_eq!(unsafe { tb_hologram_size(holo) }, 32);
    assert!(unsafe { tb_hologram_converged(holo) });
    assert!(unsafe { tb_hologram_overlap(holo) } > 0.5);
    let mut levels = vec![0u8; 32 * 32];
    let mut need = 0;
    assert_eq!(unsafe { tb_hologram_levels(holo, levels.as_mut_ptr(), 10, &mut need) }, TbStatus::BufferTooSmall);
    assert_eq!(need, 1024);
    assert_eq!(unsafe { tb_hologram_levels(holo, levels.as_mut_ptr(), levels.len(), &mut need) }, TbStatus::Ok);
    assert!(levels.iter().any(|&l| l != levels[0]));

    let mut pred = ptr::null_mut();
    assert_eq!(unsafe { tb_predict(cfg, holo, &mut pred) }, TbStatus::Ok);
    let (mut r, mut c) = (0, 0);
    assert_eq!(unsafe { tb_map_dims(pred, &mut r, &mut c) }, TbStatus::Ok);
    assert_eq!((r, c), (17, 17));
    let mut values = vec![0.0; r * c];
    assert_eq!(unsafe { tb_map_values(pred, values.as_mut_ptr(), values.len(), ptr::null_mut()) }, TbStatus::Ok);
    assert!(values.iter().all(|v| v.is_finite()) && values.iter().any(|&v| v != 0.0));

    let mut cross = ptr::null_mut();
    let mut fid = f64::NAN;
    assert_eq!(unsafe { tb_synthesize_decode(cfg, holo, &mut cross, &mut fid) }, TbStatus::Ok);
    assert!(fid.is_finite() && fid > 0.3, "{fid}");
    unsafe {
        tb_map_free(cross);
        tb_map_free(pred);
        tb_hologram_free(holo);
        tb_config_free(cfg);
    }
}

#[test]
fn non_convergence_still_yields_a_hologram() {
    let cfg = config(SMALL);
    assert_eq!(set(cfg, "optimizer.max_iters", "2"), TbStatus::Ok);
    let mut holo = ptr::null_mut();
    assert_eq!(unsafe { tb_optimize(cfg, &mut holo) }, TbStatus::NonConvergence);
    assert!(!holo.is_null() && !unsafe { tb_hologram_converged(holo) });
    unsafe {
        tb_hologram_free(holo);
        tb_config_free(cfg);
    }
}

#[test]
fn null_handles_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { tb_optimize(ptr::null(), &mut out) }, TbStatus::InvalidArgument);
    assert_eq!(unsafe { tb_map_dims(ptr::null(), &mut 0, &mut 0) }, TbStatus::InvalidArgument);
    assert_eq!(unsafe { tb_run_pipeline(ptr::null()) }, TbStatus::InvalidArgument);
    assert!(last_error().contains("null"));
    let v = unsafe { CStr::from_ptr(tb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn pipeline_writes_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SMALL);
    assert_eq!(set(cfg, "output_dir", dir.path().join("run").to_str().unwrap()), TbStatus::Ok);
    assert_eq!(unsafe { tb_run_pipeline(cfg) }, TbStatus::Ok);
    assert!(dir.path().join("run/decode/fidelity.txt").is_file());
    unsafe { tb_config_free(cfg) };
}

fn cc(compiler: &str, args: &[&std::ffi::OsStr]) {
    let out = Command::new(compiler).args(args).output().expect("C toolchain available");
    assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn header_compiles_as_cpp() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("h.cpp");
    std::fs::write(&src, "#include \"twinbeam.h\"\nint main() { return tb_version() ? 0 : 1; }\n").unwrap();
    cc("c++", &["-fsyntax-only".as_ref(), "-Wall".as_ref(), "-Werror".as_ref(), "-I".as_ref(), include.as_os_str(), src.as_os_str()]);
}

#[test]
fn c_client_links_and_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in <target>/<profile>/deps; the static library one level up.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libtwinbeam_ffi.a");
    assert!(lib.is_file(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let include = root.join("include");
    let src = root.join("tests/smoke.c");
    let args: Vec<&std::ffi::OsStr> = vec![
        "-std=c99".as_ref(),
        "-Wall".as_ref(),
        "-Werror".as_ref(),
        "-I".as_ref(),
        include.as_os_str(),
        src.as_os_str(),
        lib.as_os_str(),
        "-lpthread".as_ref(),
        "-ldl".as_ref(),
        "-lm".as_ref(),
        "-o".as_ref(),
        bin.as_os_str(),
    ];
    cc("cc", &args);
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("17x17 map"), "{stdout}");
}
