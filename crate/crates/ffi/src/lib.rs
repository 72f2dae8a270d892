//! C ABI over `gmvae-core`.
//!
//! Every fallible call returns a [`GmvaeStatus`]; on failure the message is
//! kept per thread and read with [`gmvae_last_error_message`]. Models are
//! opaque handles created by [`gmvae_model_load`] and released with
//! [`gmvae_model_free`]. Arrays are row-major `double` buffers owned by the
//! caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gmvae_core::hyperbolic::{fisher_rao_distance, Curvature, GaussianPoint};
use gmvae_core::pgm::{kl_divergence_factor, PgmFactor};
use gmvae_core::vae::{LatentSample, ModelKind, Vae};
use gmvae_core::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmvaeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Mismatch = 5,
    NonFinite = 6,
    Unsupported = 7,
    Panic = 8,
}

/// A loaded model. Only ever handled through a pointer.
pub struct GmvaeModel {
    model: Vae,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("NULs removed"));
}

fn status_of(e: &Error) -> GmvaeStatus {
    match e {
        Error::Io { .. } => GmvaeStatus::Io,
        Error::Format(_) | Error::Truncated { .. } | Error::Json(_) => GmvaeStatus::Format,
        Error::CheckpointMismatch(_) | Error::Config(_) => GmvaeStatus::Mismatch,
        Error::NonFinite { .. } | Error::TrainingAborted { .. } => GmvaeStatus::NonFinite,
        _ => GmvaeStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the message of any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (GmvaeStatus, String)>) -> GmvaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GmvaeStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            GmvaeStatus::Panic
        }
    }
}

fn core(e: Error) -> (GmvaeStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GmvaeStatus, String) {
    (GmvaeStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> (GmvaeStatus, String) {
    (GmvaeStatus::InvalidArgument, msg.into())
}

unsafe fn model_ref<'a>(m: *const GmvaeModel) -> Result<&'a Vae, (GmvaeStatus, String)> {
    m.as_ref().map(|h| &h.model).ok_or_else(|| null("model"))
}

unsafe fn input<'a>(
    p: *const f64,
    n: usize,
    what: &str,
) -> Result<&'a [f64], (GmvaeStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(
    p: *mut f64,
    n: usize,
    what: &str,
) -> Result<&'a mut [f64], (GmvaeStatus, String)> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gmvae_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gmvae_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a checkpoint. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gmvae_model_load(
    path: *const c_char,
    out: *mut *mut GmvaeModel,
) -> GmvaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let model = gmvae_core::data::load_model(p).map_err(core)?;
        *out = Box::into_raw(Box::new(GmvaeModel { model }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `model` must come from [`gmvae_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gmvae_model_free(model: *mut GmvaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Architecture of a model. `is_gm` is 1 for the Gaussian-manifold model
/// and 0 for the Euclidean baseline. Any output pointer may be NULL.
///
/// # Safety
/// `model` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmvae_model_info(
    model: *const GmvaeModel,
    n_factors: *mut usize,
    input_dim: *mut usize,
    curvature: *mut f64,
    is_gm: *mut i32,
) -> GmvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        if let Some(p) = n_factors.as_mut() {
            *p = m.config.n_factors;
        }
        if let Some(p) = input_dim.as_mut() {
            *p = m.config.input_dim;
        }
        if let Some(p) = curvature.as_mut() {
            *p = m.config.curvature;
        }
        if let Some(p) = is_gm.as_mut() {
            *p = (m.config.kind == ModelKind::Gm) as i32;
        }
        Ok(())
    })
}

/// Encodes `rows` inputs of `input_dim` pixels into per-factor posterior
/// parameters, each output holding `rows · n_factors` values.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn gmvae_model_encode(
    model: *const GmvaeModel,
    x: *const f64,
    rows: usize,
    alpha: *mut f64,
    ln_beta: *mut f64,
    ln_gamma2: *mut f64,
) -> GmvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        if m.config.kind != ModelKind::Gm {
            return Err((GmvaeStatus::Unsupported, "encode needs a gm model".into()));
        }
        if rows == 0 {
            return Err(invalid("rows must be at least 1"));
        }
        let d = m.config.input_dim;
        let n = rows * m.config.n_factors;
        let xs = input(x, rows * d, "x")?;
        let t = gmvae_core::autodiff::Tensor::matrix(rows, d, xs.to_vec()).map_err(core)?;
        let enc = m.encode(&t).map_err(core)?;
        output(alpha, n, "alpha")?.copy_from_slice(&enc.alpha);
        output(ln_beta, n, "ln_beta")?.copy_from_slice(&enc.ln_beta);
        output(ln_gamma2, n, "ln_gamma2")?.copy_from_slice(&enc.ln_gamma2);
        Ok(())
    })
}

/// Decodes latent points `(mu, sigma)`, each `rows · n_factors` values, to
/// pixel probabilities, `rows · input_dim` values.
///
/// # Safety
/// Buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn gmvae_model_decode(
    model: *const GmvaeModel,
    mu: *const f64,
    sigma: *const f64,
    rows: usize,
    probs: *mut f64,
) -> GmvaeStatus {
    guard(|| {
        let m = model_ref(model)?;
        if m.config.kind != ModelKind::Gm {
            return Err((GmvaeStatus::Unsupported, "decode needs a gm model".into()));
        }
        if rows == 0 {
            return Err(invalid("rows must be at least 1"));
        }
        let f = m.config.n_factors;
        let z = LatentSample::new(
            rows,
            f,
            input(mu, rows * f, "mu")?.to_vec(),
            input(sigma, rows * f, "sigma")?.to_vec(),
        )
        .map_err(core)?;
        let logits = m.decode(&z).map_err(core)?;
        let out = output(probs, rows * m.config.input_dim, "probs")?;
        for (o, &l) in out.iter_mut().zip(logits.data()) {
            *o = 1.0 / (1.0 + (-l).exp());
        }
        Ok(())
    })
}

fn curvature(c: f64) -> Result<Curvature, (GmvaeStatus, String)> {
    Curvature::new(c).map_err(core)
}

fn point(mu: f64, sigma: f64) -> Result<GaussianPoint, (GmvaeStatus, String)> {
    GaussianPoint::new(mu, sigma).map_err(core)
}

/// Fisher–Rao distance between `(mu1, sigma1)` and `(mu2, sigma2)` on the
/// Gaussian manifold of curvature `-c`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmvae_fisher_rao_distance(
    mu1: f64,
    sigma1: f64,
    mu2: f64,
    sigma2: f64,
    c: f64,
    out: *mut f64,
) -> GmvaeStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = fisher_rao_distance(point(mu1, sigma1)?, point(mu2, sigma2)?, curvature(c)?);
        Ok(())
    })
}

/// Closed-form KL divergence between two single-factor PGM normals given
/// as `(alpha, ln beta, ln gamma²)`.
///
/// # Safety
/// `p` and `q` must point to 3 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gmvae_pgm_kl(
    p: *const f64,
    q: *const f64,
    c: f64,
    out: *mut f64,
) -> GmvaeStatus {
    guard(|| {
        let factor = |v: &[f64]| PgmFactor {
            alpha: v[0],
            ln_beta: v[1],
            ln_gamma2: v[2],
        };
        let (p, q) = (factor(input(p, 3, "p")?), factor(input(q, 3, "q")?));
        if [
            p.alpha,
            p.ln_beta,
            p.ln_gamma2,
            q.alpha,
            q.ln_beta,
            q.ln_gamma2,
        ]
        .iter()
        .any(|v| !v.is_finite())
        {
            return Err(invalid("parameters must be finite"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = kl_divergence_factor(&p, &q, curvature(c)?);
        Ok(())
    })
}
