use std::ffi::{c_char, CString};
use std::ptr;

use bergman_lab_ffi::*;

fn config(toml: Option<&str>) -> *mut BlConfig {
    let text = toml.map(|t| CString::new(t).unwrap());
    let mut cfg = ptr::null_mut();
    let code = unsafe { bl_config_new(text.as_ref().map_or(ptr::null(), |t| t.as_ptr()), &mut cfg) };
    assert_eq!(code, BL_OK, "{}", last_error());
    cfg
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { bl_last_error(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn disc_kernel_and_metric() {
    let cfg = config(None);
    let mut engine = ptr::null_mut();
    assert_eq!(unsafe { bl_engine_new(cfg, &mut engine) }, BL_OK);
    assert_eq!(unsafe { bl_engine_dim(engine) }, 1);

    let (z, w) = ([0.3, -0.2], [-0.5, 0.1]);
    let mut b = [0.0; 2];
    assert_eq!(unsafe { bl_kernel(engine, z.as_ptr(), w.as_ptr(), b.as_mut_ptr()) }, BL_OK);
    // 1 / (pi (1 - z conj(w))^2)
    let (re, im) = (1.0 - (z[0] * w[0] + z[1] * w[1]), -(z[1] * w[0] - z[0] * w[1]));
    let (sq_re, sq_im) = (re * re - im * im, 2.0 * re * im);
    let m = std::f64::consts::PI * (sq_re * sq_re + sq_im * sq_im);
    assert!((b[0] - sq_re / m).abs() < 1e-12 && (b[1] + sq_im / m).abs() < 1e-12);

    let mut g = [0.0; 2];
    let mut det = 0.0;
    assert_eq!(unsafe { bl_metric(engine, z.as_ptr(), g.as_mut_ptr(), &mut det) }, BL_OK);
    let want = 2.0 / (1.0 - 0.13f64).powi(2);
    assert!((det - want).abs() < 1e-10 * want && (g[0] - want).abs() < 1e-10 * want && g[1] == 0.0);

    unsafe {
        bl_engine_free(engine);
        bl_config_free(cfg);
    }
}

#[test]
fn hankel_spectrum_of_conj_z() {
    let cfg = config(Some("symbol = \"conj(z1)\"\n"));
    let mut vals = [0.0; 8];
    let mut len = 0;
    assert_eq!(unsafe { bl_hankel_singular_values(cfg, 20, vals.as_mut_ptr(), vals.len(), &mut len) }, BL_OK);
    assert_eq!(len, 21);
    for (j, s) in vals.iter().enumerate() {
        let want = 1.0 / (((j + 1) * (j + 2)) as f64).sqrt();
        assert!((s - want).abs() < 1e-6, "sigma_{j} = {s}");
    }
    unsafe { bl_config_free(cfg) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("radius = -1.0").unwrap();
    assert_eq!(unsafe { bl_config_new(bad.as_ptr(), &mut cfg) }, 15);
    assert!(cfg.is_null());
    assert!(last_error().contains("radius"));

    assert_eq!(unsafe { bl_config_new(ptr::null(), ptr::null_mut()) }, BL_ERR_ARGUMENT);

    let cfg = config(None);
    let mut engine = ptr::null_mut();
    assert_eq!(unsafe { bl_engine_new(cfg, &mut engine) }, BL_OK);
    let (outside, origin) = ([1.5, 0.0], [0.0, 0.0]);
    let mut b = [0.0; 2];
    assert_eq!(unsafe { bl_kernel(engine, outside.as_ptr(), origin.as_ptr(), b.as_mut_ptr()) }, 3);
    assert_eq!(unsafe { bl_kernel(ptr::null(), origin.as_ptr(), origin.as_ptr(), b.as_mut_ptr()) }, BL_ERR_ARGUMENT);

    let cmd = CString::new("frobnicate").unwrap();
    let dir = CString::new("unused").unwrap();
    assert_eq!(unsafe { bl_run(cfg, cmd.as_ptr(), dir.as_ptr()) }, 16);

    let mut hash = [0 as c_char; 65];
    assert_eq!(unsafe { bl_config_hash(cfg, hash.as_mut_ptr(), 10) }, BL_ERR_ARGUMENT);
    assert_eq!(unsafe { bl_config_hash(cfg, hash.as_mut_ptr(), hash.len()) }, BL_OK);
    assert_eq!(hash.iter().position(|&c| c == 0), Some(64));
    unsafe {
        bl_engine_free(engine);
        bl_config_free(cfg);
        bl_engine_free(ptr::null_mut());
    }
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(Some("resolution = 0.05\n"));
    let cmd = CString::new("metric").unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { bl_run(cfg, cmd.as_ptr(), dir.as_ptr()) }, BL_OK, "{}", last_error());
    assert!(tmp.path().join("metric.csv").exists() && tmp.path().join("metric.json").exists());
    unsafe { bl_config_free(cfg) };
}
