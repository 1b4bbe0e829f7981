//! C ABI over the twinbeam toolkit.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `tb_*_new`-style call and released with its `tb_*_free`. Calls return a
//! [`TbStatus`]; after a failure, [`tb_last_error_message`] describes it.
//! Panics never unwind into the caller: they surface as `TB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twinbeam::cgh::QuantizedHologram;
use twinbeam::cli::pipeline;
use twinbeam::cli::PipelineConfig;
use twinbeam::optics::CorrelationMap;
use twinbeam::Error;

/// Result of every fallible call. Values 2 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    Config = 2,
    /// Optimization stopped without converging; outputs are still valid.
    NonConvergence = 3,
    Io = 4,
    /// A numerical precondition failed.
    Numeric = 5,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TbStatus {
    match e {
        Error::Io(_) | Error::Format(_) => TbStatus::Io,
        Error::Config(_) => TbStatus::Config,
        Error::Degenerate(_) => TbStatus::NonConvergence,
        _ => TbStatus::Numeric,
    }
}

fn fail(e: Error) -> TbStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// Runs `f`, containing panics and recording error text.
fn guard(f: impl FnOnce() -> TbStatus) -> TbStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg =
                p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TbStatus::Panic
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, TbStatus> {
    if s.is_null() {
        set_error(format!("{name} is null"));
        return Err(TbStatus::InvalidArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{name} is not UTF-8"));
        TbStatus::InvalidArgument
    })
}

macro_rules! non_null {
    ($p:expr, $name:literal) => {
        if $p.is_null() {
            set_error(concat!($name, " is null"));
            return TbStatus::InvalidArgument;
        }
    };
}

/// Copies `src` into a caller buffer, reporting the needed length.
///
/// # Safety
/// `buf` must be valid for `cap` writes of `T` when non-null.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, needed: *mut usize) -> TbStatus {
    if !needed.is_null() {
        *needed = src.len();
    }
    if buf.is_null() || cap < src.len() {
        set_error(format!("buffer holds {cap} elements, {} needed", src.len()));
        return TbStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    TbStatus::Ok
}

/// Run configuration: TOML text plus `key=value` overrides.
pub struct TbConfig {
    text: String,
    overrides: Vec<String>,
    parsed: PipelineConfig,
}

/// Designed 8-bit hologram.
pub struct TbHologram {
    holo: QuantizedHologram,
    overlap: f64,
    converged: bool,
}

/// Real map over camera-pixel displacements, row-major.
pub struct TbMap {
    map: CorrelationMap,
}

/// Version string of the library, static storage.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to fit) and returns the full message length without the terminator.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Parses a configuration; `toml` may be empty for all defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_config_new(toml: *const c_char, out: *mut *mut TbConfig) -> TbStatus {
    guard(|| {
        non_null!(out, "out");
        let text = match str_arg(toml, "toml") {
            Ok(t) => t.to_string(),
            Err(s) => return s,
        };
        match PipelineConfig::from_toml(&text, &[]) {
            Ok(parsed) => {
                *out = Box::into_raw(Box::new(TbConfig { text, overrides: Vec::new(), parsed }));
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Overrides one dotted key, e.g. `("synthesis.n_pairs", "200")`. The value
/// is read as TOML, falling back to a bare string. On failure the config is
/// left unchanged.
///
/// # Safety
/// `cfg` must come from [`tb_config_new`]; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tb_config_set(cfg: *mut TbConfig, key: *const c_char, value: *const c_char) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        let (k, v) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let c = &mut *cfg;
        let mut overrides = c.overrides.clone();
        overrides.push(format!("{k}={v}"));
        match PipelineConfig::from_toml(&c.text, &overrides) {
            Ok(p) => {
                c.parsed = p;
                c.overrides = overrides;
                TbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Resolved configuration as TOML into a caller buffer (NUL-terminated).
/// `needed` receives the byte count including the terminator.
///
/// # Safety
/// `cfg` must be valid; `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_config_to_toml(cfg: *const TbConfig, buf: *mut c_char, cap: usize, needed: *mut usize) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        match (*cfg).parsed.to_toml() {
            Ok(s) => {
                let mut bytes: Vec<c_char> = s.bytes().map(|b| b as c_char).collect();
                bytes.push(0);
                copy_out(&bytes, buf, cap, needed)
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `cfg` must be null or come from [`tb_config_new`], and not be used after.
#[no_mangle]
pub unsafe extern "C" fn tb_config_free(cfg: *mut TbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Designs the hologram for the configured target. Returns
/// `TB_STATUS_NON_CONVERGENCE` with a usable hologram when the search hit its
/// iteration budget or a failed line search.
///
/// # Safety
/// `cfg` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_optimize(cfg: *const TbConfig, out: *mut *mut TbHologram) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        non_null!(out, "out");
        let cfg = &(*cfg).parsed;
        let run = pipeline::load_target(cfg).and_then(|t| pipeline::optimize(cfg, &t));
        match run {
            Ok(o) => {
                let converged = o.converged();
                *out = Box::into_raw(Box::new(TbHologram { holo: o.hologram, overlap: o.sidecar.final_overlap, converged }));
                if converged {
                    TbStatus::Ok
                } else {
                    set_error("hologram optimization did not converge");
                    TbStatus::NonConvergence
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// Grid edge of the hologram.
///
/// # Safety
/// `holo` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_hologram_size(holo: *const TbHologram) -> usize {
    if holo.is_null() {
        0
    } else {
        (*holo).holo.levels.nrows()
    }
}

/// Signal overlap reached by the optimizer.
///
/// # Safety
/// `holo` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_hologram_overlap(holo: *const TbHologram) -> f64 {
    if holo.is_null() {
        f64::NAN
    } else {
        (*holo).overlap
    }
}

/// Whether the optimizer converged.
///
/// # Safety
/// `holo` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_hologram_converged(holo: *const TbHologram) -> bool {
    !holo.is_null() && (*holo).converged
}

/// Copies the `n × n` 8-bit levels, row-major.
///
/// # Safety
/// `holo` must be valid; `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_hologram_levels(holo: *const TbHologram, buf: *mut u8, cap: usize, needed: *mut usize) -> TbStatus {
    guard(|| {
        non_null!(holo, "holo");
        let levels: Vec<u8> = (*holo).holo.levels.iter().copied().collect();
        copy_out(&levels, buf, cap, needed)
    })
}

/// # Safety
/// `holo` must be null or come from [`tb_optimize`], and not be used after.
#[no_mangle]
pub unsafe extern "C" fn tb_hologram_free(holo: *mut TbHologram) {
    if !holo.is_null() {
        drop(Box::from_raw(holo));
    }
}

fn new_map(out: *mut *mut TbMap, r: twinbeam::Result<CorrelationMap>) -> TbStatus {
    match r {
        Ok(map) => {
            // SAFETY: callers check `out` before computing.
            unsafe { *out = Box::into_raw(Box::new(TbMap { map })) };
            TbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Analytic cross-correlation of a hologram at camera pitch.
///
/// # Safety
/// `cfg` and `holo` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_predict(cfg: *const TbConfig, holo: *const TbHologram, out: *mut *mut TbMap) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        non_null!(holo, "holo");
        non_null!(out, "out");
        new_map(out, pipeline::predict(&(*cfg).parsed, &(*holo).holo))
    })
}

/// Synthesizes the configured number of frame pairs in memory and returns
/// the normalized cross-correlation map. `fidelity` (optional) receives its
/// agreement with the configured target.
///
/// # Safety
/// `cfg` and `holo` must be valid, `out` a valid pointer, `fidelity` null or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn tb_synthesize_decode(cfg: *const TbConfig, holo: *const TbHologram, out: *mut *mut TbMap, fidelity: *mut f64) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        non_null!(holo, "holo");
        non_null!(out, "out");
        let cfg = &(*cfg).parsed;
        let run = pipeline::load_target(cfg).and_then(|t| pipeline::decode_in_memory(cfg, &(*holo).holo, Some(&t)));
        match run {
            Ok(d) => {
                if !fidelity.is_null() {
                    *fidelity = d.fidelity.as_ref().map_or(f64::NAN, |f| f[0].coefficient);
                }
                new_map(out, Ok(d.cross))
            }
            Err(e) => fail(e),
        }
    })
}

/// Map edges; both odd.
///
/// # Safety
/// `map` must be valid; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tb_map_dims(map: *const TbMap, rows: *mut usize, cols: *mut usize) -> TbStatus {
    guard(|| {
        non_null!(map, "map");
        non_null!(rows, "rows");
        non_null!(cols, "cols");
        let (r, c) = (*map).map.values().dim();
        *rows = r;
        *cols = c;
        TbStatus::Ok
    })
}

/// Copies the map values, row-major, center sample at zero displacement.
///
/// # Safety
/// `map` must be valid; `buf` null or valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_map_values(map: *const TbMap, buf: *mut f64, cap: usize, needed: *mut usize) -> TbStatus {
    guard(|| {
        non_null!(map, "map");
        let v: Vec<f64> = (*map).map.values().iter().copied().collect();
        copy_out(&v, buf, cap, needed)
    })
}

/// # Safety
/// `map` must be null or come from this library, and not be used after.
#[no_mangle]
pub unsafe extern "C" fn tb_map_free(map: *mut TbMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Full pipeline into the configured output directory, as `twinbeam
/// pipeline` does.
///
/// # Safety
/// `cfg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_run_pipeline(cfg: *const TbConfig) -> TbStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        match twinbeam::cli::stage_pipeline(&(*cfg).parsed) {
            Ok(s) if s.converged => TbStatus::Ok,
            Ok(_) => {
                set_error("hologram optimization did not converge; outputs were written");
                TbStatus::NonConvergence
            }
            Err(e) => fail(e),
        }
    })
}
