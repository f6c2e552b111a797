//! C interface to `bergman-lab`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns `BL_OK` (0) or an error
//! code; the message of the most recent error on the calling thread is
//! available from [`bl_last_error`]. Points cross the boundary as `2 * dim`
//! doubles, real and imaginary parts interleaved.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use bergman_lab::harness::{basis_grid, kernel_engine, parse_symbol, run, Command, ExperimentConfig};
use bergman_lab::kernel::{IndexSet, KernelEngine};
use bergman_lab::operators::hankel_matrix;
use bergman_lab::{Complex64, Error};

pub const BL_OK: i32 = 0;
/// Null pointer, invalid UTF-8 or an output buffer that is too small.
pub const BL_ERR_ARGUMENT: i32 = 1;
/// A Rust panic was caught at the boundary.
pub const BL_ERR_INTERNAL: i32 = 99;

/// Experiment configuration.
pub struct BlConfig {
    inner: ExperimentConfig,
}

/// Kernel engine built from a configuration.
pub struct BlEngine {
    inner: KernelEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

enum Failure {
    Lab(Error),
    Argument(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lab(e)
    }
}

fn arg(msg: &str) -> Failure {
    Failure::Argument(msg.into())
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BL_OK,
        Ok(Err(Failure::Lab(e))) => {
            set_error(e.to_string());
            e.code()
        }
        Ok(Err(Failure::Argument(m))) => {
            set_error(m);
            BL_ERR_ARGUMENT
        }
        Err(_) => {
            set_error("internal panic".into());
            BL_ERR_INTERNAL
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(arg(&format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| arg(&format!("{what} is not UTF-8")))
}

unsafe fn point(p: *const f64, dim: usize) -> Result<Vec<Complex64>, Failure> {
    if p.is_null() {
        return Err(arg("point is null"));
    }
    let v = std::slice::from_raw_parts(p, 2 * dim);
    Ok(v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

unsafe fn engine_ref<'a>(e: *const BlEngine) -> Result<&'a KernelEngine, Failure> {
    e.as_ref().map(|e| &e.inner).ok_or_else(|| arg("engine is null"))
}

unsafe fn config_ref<'a>(c: *const BlConfig) -> Result<&'a ExperimentConfig, Failure> {
    c.as_ref().map(|c| &c.inner).ok_or_else(|| arg("config is null"))
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `cap - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bl_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a flat TOML configuration; a null `toml` gives the defaults.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_config_new(toml: *const c_char, out: *mut *mut BlConfig) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(arg("out is null"));
        }
        let inner = if toml.is_null() {
            ExperimentConfig::default()
        } else {
            ExperimentConfig::from_toml(text(toml, "toml")?)?
        };
        *out = Box::into_raw(Box::new(BlConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`bl_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_config_free(cfg: *mut BlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Writes the 64 hex digit configuration hash and a NUL into `buf`, which
/// must hold at least 65 bytes.
///
/// # Safety
/// `cfg` must be a live handle and `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bl_config_hash(cfg: *const BlConfig, buf: *mut c_char, cap: usize) -> i32 {
    guard(|| {
        let hash = config_ref(cfg)?.hash();
        if buf.is_null() || cap <= hash.len() {
            return Err(arg("hash buffer needs 65 bytes"));
        }
        std::ptr::copy_nonoverlapping(hash.as_ptr(), buf.cast::<u8>(), hash.len());
        *buf.add(hash.len()) = 0;
        Ok(())
    })
}

/// Runs one harness command (`"kernel"`, `"hankel"`, `"omega-scan"`, ...)
/// and writes its files into `out_dir`.
///
/// # Safety
/// `cfg` must be a live handle; `command` and `out_dir` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn bl_run(cfg: *const BlConfig, command: *const c_char, out_dir: *const c_char) -> i32 {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let cmd = Command::parse(text(command, "command")?)?;
        run(cfg, cmd, Path::new(text(out_dir, "out_dir")?))?;
        Ok(())
    })
}

/// Builds the kernel engine selected by the configuration.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_engine_new(cfg: *const BlConfig, out: *mut *mut BlEngine) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(arg("out is null"));
        }
        let inner = kernel_engine(config_ref(cfg)?)?;
        *out = Box::into_raw(Box::new(BlEngine { inner }));
        Ok(())
    })
}

/// # Safety
/// `engine` must be null or a handle from [`bl_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bl_engine_free(engine: *mut BlEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Complex dimension of the engine's domain, 0 for a null handle.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bl_engine_dim(engine: *const BlEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.inner.dim())
}

/// Evaluates `B(z, w)` into `out[0] + i out[1]`.
///
/// # Safety
/// `z` and `w` must hold `2 * dim` doubles and `out` two.
#[no_mangle]
pub unsafe extern "C" fn bl_kernel(engine: *const BlEngine, z: *const f64, w: *const f64, out: *mut f64) -> i32 {
    guard(|| {
        let e = engine_ref(engine)?;
        if out.is_null() {
            return Err(arg("out is null"));
        }
        let b = e.kernel(&point(z, e.dim())?, &point(w, e.dim())?)?;
        *out = b.re;
        *out.add(1) = b.im;
        Ok(())
    })
}

/// Bergman metric at `z`: `g` receives the `dim x dim` complex matrix in
/// row-major order (interleaved, `2 * dim * dim` doubles), `det` its
/// determinant. Either output may be null.
///
/// # Safety
/// `z` must hold `2 * dim` doubles; non-null outputs must be large enough.
#[no_mangle]
pub unsafe extern "C" fn bl_metric(engine: *const BlEngine, z: *const f64, g: *mut f64, det: *mut f64) -> i32 {
    guard(|| {
        let e = engine_ref(engine)?;
        let m = e.metric_exact(&point(z, e.dim())?)?;
        if !g.is_null() {
            let d = m.dim;
            for j in 0..d {
                for k in 0..d {
                    let v = m.entry(j, k);
                    *g.add(2 * (j * d + k)) = v.re;
                    *g.add(2 * (j * d + k) + 1) = v.im;
                }
            }
        }
        if !det.is_null() {
            *det = m.det;
        }
        Ok(())
    })
}

/// Singular values of the Hankel operator with the configured symbol,
/// truncated at `degree`, in decreasing order. At most `cap` values are
/// written; `len` receives the total count.
///
/// # Safety
/// `cfg` must be a live handle, `out` must hold `cap` doubles (or be null
/// when `cap` is 0) and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_hankel_singular_values(
    cfg: *const BlConfig,
    degree: usize,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> i32 {
    guard(|| {
        let cfg = config_ref(cfg)?;
        if len.is_null() || (out.is_null() && cap > 0) {
            return Err(arg("output is null"));
        }
        let dom = cfg.domain_spec()?;
        let symbol = parse_symbol(&cfg.symbol, dom.dim)?;
        let grid = basis_grid(&dom, cfg)?;
        let (h, _) = hankel_matrix(&dom, &grid, &symbol, degree, cfg.guard, IndexSet::default_for(&dom))?;
        let n = h.singular_values.len();
        for (k, s) in h.singular_values.iter().take(cap).enumerate() {
            *out.add(k) = *s;
        }
        *len = n;
        Ok(())
    })
}
