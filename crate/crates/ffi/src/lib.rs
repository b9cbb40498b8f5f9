//! C interface to the gblab library.
//!
//! Every fallible call returns a [`GbStatus`]; on failure the message is
//! available from [`gb_last_error_message`] on the same thread. Objects
//! created by `*_new` or [`gb_diagonalize`] are opaque and must be released
//! with the matching `*_free`.

use gblab::complex::{boundary_double, fundamental_cycle, hazzidakis_rhs, solid_angles, DoubleChain};
use gblab::flatform::{diagonalize_with_seed, Diagonalization, FlatBilinearTensor};
use gblab::pfaffian::{pfaffian, SkewMatrix};
use gblab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Singular = 3,
    Computation = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Flat symmetric bilinear tensor `h[λ][i][j]`.
pub struct GbFlatTensor(FlatBilinearTensor);

/// Result of a rank-one diagonalization.
pub struct GbDiagonalization(Diagonalization);

/// Fundamental cycle of the double complex.
pub struct GbDoubleChain(DoubleChain);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GbStatus {
    match e {
        Error::Kernel { .. } | Error::Frame(_) => GbStatus::Singular,
        Error::Commutation(_) | Error::Truncation { .. } => GbStatus::Computation,
        _ => GbStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GbStatus, String)>) -> GbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GbStatus::Ok
        }
        Ok(Err((s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            GbStatus::Panic
        }
    }
}

fn lib(e: Error) -> (GbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GbStatus, String) {
    (GbStatus::NullPointer, format!("{what} is null"))
}

/// Borrows `len` values from `p`, rejecting null for nonzero lengths.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (GbStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (GbStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((GbStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Pfaffian of the `dim × dim` skew matrix stored row-major in `entries`.
///
/// # Safety
/// `entries` must point to `dim * dim` doubles and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn gb_pfaffian(entries: *const f64, dim: usize, out: *mut f64) -> GbStatus {
    guard(|| {
        let a = slice(entries, dim * dim, "entries")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = SkewMatrix::new(dim, a.to_vec()).map_err(lib)?;
        *out = pfaffian(&m).map_err(lib)?;
        Ok(())
    })
}

/// Builds a tensor from `n³` values ordered `h[λ][i][j]`.
///
/// # Safety
/// `h` must point to `n * n * n` doubles and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_flat_tensor_new(h: *const f64, n: usize, out: *mut *mut GbFlatTensor) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let v = slice(h, n * n * n, "h")?;
        let nested: Vec<Vec<Vec<f64>>> =
            v.chunks(n * n).map(|s| s.chunks(n).map(<[f64]>::to_vec).collect()).collect();
        let t = FlatBilinearTensor::new(&nested).map_err(lib)?;
        *out = Box::into_raw(Box::new(GbFlatTensor(t)));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or come from [`gb_flat_tensor_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gb_flat_tensor_free(t: *mut GbFlatTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Rank-one diagonalization of a flat tensor.
///
/// # Safety
/// `t` must be a live tensor handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalize(t: *const GbFlatTensor, seed: u64, out: *mut *mut GbDiagonalization) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = t.as_ref().ok_or_else(|| null("tensor"))?;
        let d = diagonalize_with_seed(&t.0, seed).map_err(lib)?;
        *out = Box::into_raw(Box::new(GbDiagonalization(d)));
        Ok(())
    })
}

/// Dimension `n` of a diagonalization; 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_dim(d: *const GbDiagonalization) -> usize {
    d.as_ref().map_or(0, |d| d.0.basis.len())
}

unsafe fn copy_rows(d: *const GbDiagonalization, pick: fn(&Diagonalization) -> &Vec<Vec<f64>>, out: *mut f64, len: usize) -> GbStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("diagonalization"))?;
        let flat: Vec<f64> = pick(&d.0).iter().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

/// Unit rank-one directions, row `k` holding `v_k`; `n²` values.
///
/// # Safety
/// `d` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_basis(d: *const GbDiagonalization, out: *mut f64, len: usize) -> GbStatus {
    copy_rows(d, |d| &d.basis, out, len)
}

/// One-forms `φ_k` as rows; `n²` values.
///
/// # Safety
/// `d` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_phi(d: *const GbDiagonalization, out: *mut f64, len: usize) -> GbStatus {
    copy_rows(d, |d| &d.phi, out, len)
}

/// Coefficients `a[λ][k]` row-major; `n²` values.
///
/// # Safety
/// `d` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_a(d: *const GbDiagonalization, out: *mut f64, len: usize) -> GbStatus {
    copy_rows(d, |d| &d.a, out, len)
}

/// Reconstruction residual `max |h - Σ a φ φᵀ|`; NaN for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_residual(d: *const GbDiagonalization) -> f64 {
    d.as_ref().map_or(f64::NAN, |d| d.0.diagnostics.reconstruction)
}

/// # Safety
/// `d` must be null or come from [`gb_diagonalize`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gb_diagonalization_free(d: *mut GbDiagonalization) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Monte Carlo solid-angle fractions of the `2n` dual cells of an `n × n`
/// row-major coframe, ordered `+1, -1, +2, -2, ...`.
///
/// # Safety
/// `coframe` must hold `n * n` doubles and `out` must hold `len >= 2n` doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_solid_angles(
    coframe: *const f64,
    n: usize,
    samples: usize,
    seed: u64,
    out: *mut f64,
    len: usize,
) -> GbStatus {
    guard(|| {
        let c = slice(coframe, n * n, "coframe")?;
        let rows: Vec<Vec<f64>> = c.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        if samples == 0 {
            return Err((GbStatus::InvalidArgument, "samples must be positive".into()));
        }
        let r = solid_angles(&rows, samples, seed).map_err(lib)?;
        copy_out(&r.fractions, out, len)
    })
}

/// `1 - Σ fractions`, correctly rounded.
///
/// # Safety
/// `fractions` must hold `len` doubles and `out` one double.
#[no_mangle]
pub unsafe extern "C" fn gb_hazzidakis(fractions: *const f64, len: usize, out: *mut f64) -> GbStatus {
    guard(|| {
        let f = slice(fractions, len, "fractions")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = hazzidakis_rhs(f).map_err(lib)?;
        Ok(())
    })
}

/// Builds the fundamental cycle in dimension `n >= 2`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_fundamental_cycle_new(n: usize, out: *mut *mut GbDoubleChain) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let z = fundamental_cycle(n).map_err(lib)?;
        *out = Box::into_raw(Box::new(GbDoubleChain(z)));
        Ok(())
    })
}

/// Number of nonzero terms; 0 for a null handle.
///
/// # Safety
/// `z` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gb_fundamental_cycle_len(z: *const GbDoubleChain) -> usize {
    z.as_ref().map_or(0, |z| z.0.len())
}

/// Writes 1 to `closed` when the total boundary vanishes, else 0.
///
/// # Safety
/// `z` must be a live handle and `closed` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_fundamental_cycle_is_closed(z: *const GbDoubleChain, closed: *mut i32) -> GbStatus {
    guard(|| {
        let z = z.as_ref().ok_or_else(|| null("cycle"))?;
        if closed.is_null() {
            return Err(null("closed"));
        }
        *closed = i32::from(boundary_double(&z.0).is_empty());
        Ok(())
    })
}

/// JSON terms `[{simplex: {I, g}, cube: {I, g}, coeff}]`, NUL-terminated.
/// `needed` receives the size including the terminator; pass a null `buf`
/// to query it.
///
/// # Safety
/// `z` must be a live handle, `buf` null or `cap` bytes, `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_fundamental_cycle_json(
    z: *const GbDoubleChain,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> GbStatus {
    guard(|| {
        let z = z.as_ref().ok_or_else(|| null("cycle"))?;
        if needed.is_null() {
            return Err(null("needed"));
        }
        let json = serde_json::to_string(&z.0.to_records()).map_err(|e| (GbStatus::Computation, e.to_string()))?;
        *needed = json.len() + 1;
        if buf.is_null() {
            return Ok(());
        }
        if cap < json.len() + 1 {
            return Err((GbStatus::BufferTooSmall, format!("buffer holds {cap} bytes, need {}", json.len() + 1)));
        }
        ptr::copy_nonoverlapping(json.as_ptr().cast::<c_char>(), buf, json.len());
        *buf.add(json.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `z` must be null or come from [`gb_fundamental_cycle_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gb_fundamental_cycle_free(z: *mut GbDoubleChain) {
    if !z.is_null() {
        drop(Box::from_raw(z));
    }
}
