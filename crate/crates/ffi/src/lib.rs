//! C ABI over `gstk-core`.
//!
//! Objects cross the boundary as opaque handles created by `gstk_*_new`,
//! `gstk_*_read_*` or operation outputs, and released with the matching
//! `gstk_*_free`. Every fallible call returns a [`GstkStatus`]; on failure a
//! description is available from [`gstk_last_error_message`] on the same
//! thread. Panics never unwind into C: they surface as `GSTK_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gstk::analysis::oif_rank;
use gstk::convolve::{convolve_with, BoundaryMode, ConvolveOptions};
use gstk::kernels::{self, format_kernel, parse_kernel, BuiltinKernel};
use gstk::raster::{bsq, pgm, stretch, StretchMode};
use gstk::{Band, Dtype, Error, ErrorKind, Kernel, MultibandImage, ResponseField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Domain = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstkBuiltinKernel {
    /// One-quadrant template, anchor at its bottom-right cell.
    Quadrant = 0,
    /// Symmetric 5x5 smoothing template.
    Smooth5 = 1,
    /// 3x3 eight-neighbour Laplacian.
    Laplacian3 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstkBoundary {
    Replicate = 0,
    Reflect = 1,
    Zero = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstkDtype {
    U8 = 0,
    U16 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GstkStretch {
    AbsLinear = 0,
    SignedLinear = 1,
}

/// Opaque integer template.
pub struct GstkKernel(Kernel);
/// Opaque single band.
pub struct GstkBand(Band);
/// Opaque multiband image.
pub struct GstkImage(MultibandImage);
/// Opaque signed convolution response.
pub struct GstkResponse(ResponseField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> GstkStatus {
    match e.kind() {
        ErrorKind::Io => GstkStatus::Io,
        ErrorKind::Usage => GstkStatus::InvalidArgument,
        ErrorKind::Domain => GstkStatus::Domain,
    }
}

struct Failure(GstkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GstkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GstkStatus::InvalidArgument, msg.into())
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> GstkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GstkStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GstkStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn bytes<'a>(p: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(invalid(format!("buffer holds {len} values, {} needed", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next `gstk_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gstk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gstk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Frees a byte buffer returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gstk_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

// kernels

#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_builtin(which: GstkBuiltinKernel, out: *mut *mut GstkKernel) -> GstkStatus {
    guard(|| {
        let b = match which {
            GstkBuiltinKernel::Quadrant => BuiltinKernel::Quadrant,
            GstkBuiltinKernel::Smooth5 => BuiltinKernel::Smooth5,
            GstkBuiltinKernel::Laplacian3 => BuiltinKernel::Laplacian3,
        };
        store(out, GstkKernel(b.kernel()))
    })
}

/// Builds a kernel from `rows * cols` row-major coefficients.
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_new(
    rows: usize,
    cols: usize,
    anchor_row: usize,
    anchor_col: usize,
    coeffs: *const i32,
    out: *mut *mut GstkKernel,
) -> GstkStatus {
    guard(|| {
        let n = rows.checked_mul(cols).ok_or_else(|| invalid("kernel size overflows"))?;
        if n > 0 && coeffs.is_null() {
            return Err(null("coeffs"));
        }
        let v = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(coeffs, n).to_vec() };
        store(out, GstkKernel(Kernel::new(rows, cols, (anchor_row, anchor_col), v)?))
    })
}

/// Parses kernel text (NUL-terminated UTF-8).
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_parse(text: *const c_char, out: *mut *mut GstkKernel) -> GstkStatus {
    guard(|| store(out, GstkKernel(parse_kernel(c_str(text, "text")?)?)))
}

/// Canonical kernel text; release with `gstk_string_free`.
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_format(k: *const GstkKernel, out: *mut *mut c_char) -> GstkStatus {
    guard(|| {
        let k = deref(k, "kernel")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = CString::new(format_kernel(&k.0)).expect("kernel text has no NUL").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_shape(
    k: *const GstkKernel,
    rows: *mut usize,
    cols: *mut usize,
    anchor_row: *mut usize,
    anchor_col: *mut usize,
) -> GstkStatus {
    guard(|| {
        let k = &deref(k, "kernel")?.0;
        if rows.is_null() || cols.is_null() || anchor_row.is_null() || anchor_col.is_null() {
            return Err(null("output pointer"));
        }
        *rows = k.rows();
        *cols = k.cols();
        *anchor_row = k.anchor().0;
        *anchor_col = k.anchor().1;
        Ok(())
    })
}

/// Copies the row-major coefficients into `buf` (capacity `len`).
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_coeffs(k: *const GstkKernel, buf: *mut i32, len: usize) -> GstkStatus {
    guard(|| copy_out(deref(k, "kernel")?.0.coeffs(), buf, len))
}

/// `Σ k(i,j)·i^p·j^q` over anchor-relative `(dcol, drow)`.
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_moment(k: *const GstkKernel, p: u32, q: u32, out: *mut i64) -> GstkStatus {
    guard(|| {
        let k = deref(k, "kernel")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = k.0.moment(p, q);
        Ok(())
    })
}

/// Reflects a one-quadrant template into a full symmetric template.
#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_symmetrize(k: *const GstkKernel, out: *mut *mut GstkKernel) -> GstkStatus {
    guard(|| store(out, GstkKernel(kernels::symmetrize(&deref(k, "kernel")?.0)?)))
}

#[no_mangle]
pub unsafe extern "C" fn gstk_kernel_free(k: *mut GstkKernel) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

// bands

fn dtype(d: GstkDtype) -> Dtype {
    match d {
        GstkDtype::U8 => Dtype::U8,
        GstkDtype::U16 => Dtype::U16,
    }
}

/// Builds a band from `width * height` row-major samples.
#[no_mangle]
pub unsafe extern "C" fn gstk_band_new(
    width: usize,
    height: usize,
    dt: GstkDtype,
    samples: *const u16,
    out: *mut *mut GstkBand,
) -> GstkStatus {
    guard(|| {
        let n = width.checked_mul(height).ok_or_else(|| invalid("band size overflows"))?;
        if n > 0 && samples.is_null() {
            return Err(null("samples"));
        }
        let v = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(samples, n).to_vec() };
        store(out, GstkBand(Band::new(width, height, dtype(dt), v)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_band_read_pgm(data: *const u8, len: usize, out: *mut *mut GstkBand) -> GstkStatus {
    guard(|| store(out, GstkBand(pgm::read_pgm(bytes(data, len, "data")?)?)))
}

/// Encodes a band as binary PGM; release with `gstk_bytes_free(*out, *out_len)`.
#[no_mangle]
pub unsafe extern "C" fn gstk_band_write_pgm(b: *const GstkBand, out: *mut *mut u8, out_len: *mut usize) -> GstkStatus {
    guard(|| {
        let b = deref(b, "band")?;
        if out.is_null() || out_len.is_null() {
            return Err(null("output pointer"));
        }
        let encoded = pgm::write_pgm(&b.0).into_boxed_slice();
        *out_len = encoded.len();
        *out = Box::into_raw(encoded).cast::<u8>();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_band_shape(
    b: *const GstkBand,
    width: *mut usize,
    height: *mut usize,
    dt: *mut GstkDtype,
) -> GstkStatus {
    guard(|| {
        let b = &deref(b, "band")?.0;
        if width.is_null() || height.is_null() || dt.is_null() {
            return Err(null("output pointer"));
        }
        *width = b.width();
        *height = b.height();
        *dt = match b.dtype() {
            Dtype::U8 => GstkDtype::U8,
            Dtype::U16 => GstkDtype::U16,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_band_samples(b: *const GstkBand, buf: *mut u16, len: usize) -> GstkStatus {
    guard(|| copy_out(deref(b, "band")?.0.samples(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn gstk_band_free(b: *mut GstkBand) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

// images

/// Loads a GSTK1 image from `<stem>.hdr` / `<stem>.bsq`.
#[no_mangle]
pub unsafe extern "C" fn gstk_image_load(path: *const c_char, out: *mut *mut GstkImage) -> GstkStatus {
    guard(|| store(out, GstkImage(bsq::load_image(Path::new(c_str(path, "path")?))?)))
}

#[no_mangle]
pub unsafe extern "C" fn gstk_image_band_count(img: *const GstkImage, out: *mut usize) -> GstkStatus {
    guard(|| {
        let img = deref(img, "image")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = img.0.band_count();
        Ok(())
    })
}

/// Copies band `index` (0-based) into a new band handle.
#[no_mangle]
pub unsafe extern "C" fn gstk_image_band(img: *const GstkImage, index: usize, out: *mut *mut GstkBand) -> GstkStatus {
    guard(|| {
        let img = &deref(img, "image")?.0;
        let band = img.bands().get(index).ok_or_else(|| invalid(format!("band index {index} out of range")))?;
        store(out, GstkBand(band.clone()))
    })
}

/// Best Optimum Index Factor triple as 1-based band numbers. An infinite
/// score (all three correlations zero) is reported as `INFINITY`.
#[no_mangle]
pub unsafe extern "C" fn gstk_image_oif_top(img: *const GstkImage, bands: *mut usize, score: *mut f64) -> GstkStatus {
    guard(|| {
        let img = &deref(img, "image")?.0;
        if bands.is_null() || score.is_null() {
            return Err(null("output pointer"));
        }
        let top = oif_rank(img)?[0];
        ptr::copy_nonoverlapping(top.band_numbers().as_ptr(), bands, 3);
        *score = top.score;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_image_free(img: *mut GstkImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

// convolution

/// Correlates `kernel` over `band`. `workers == 0` uses one thread per core.
#[no_mangle]
pub unsafe extern "C" fn gstk_convolve(
    band: *const GstkBand,
    kernel: *const GstkKernel,
    boundary: GstkBoundary,
    workers: usize,
    out: *mut *mut GstkResponse,
) -> GstkStatus {
    guard(|| {
        let band = &deref(band, "band")?.0;
        let kernel = &deref(kernel, "kernel")?.0;
        let mode = match boundary {
            GstkBoundary::Replicate => BoundaryMode::Replicate,
            GstkBoundary::Reflect => BoundaryMode::Reflect,
            GstkBoundary::Zero => BoundaryMode::Zero,
        };
        let opts = if workers == 0 { ConvolveOptions::default() } else { ConvolveOptions::with_workers(workers) };
        store(out, GstkResponse(convolve_with(band, kernel, mode, &opts)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_response_shape(
    r: *const GstkResponse,
    width: *mut usize,
    height: *mut usize,
) -> GstkStatus {
    guard(|| {
        let r = &deref(r, "response")?.0;
        if width.is_null() || height.is_null() {
            return Err(null("output pointer"));
        }
        *width = r.width();
        *height = r.height();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_response_samples(r: *const GstkResponse, buf: *mut i32, len: usize) -> GstkStatus {
    guard(|| copy_out(deref(r, "response")?.0.samples(), buf, len))
}

/// Maps a response to an 8-bit display band with percentile clipping.
#[no_mangle]
pub unsafe extern "C" fn gstk_response_stretch(
    r: *const GstkResponse,
    mode: GstkStretch,
    lo_pct: f64,
    hi_pct: f64,
    out: *mut *mut GstkBand,
) -> GstkStatus {
    guard(|| {
        let r = &deref(r, "response")?.0;
        let mode = match mode {
            GstkStretch::AbsLinear => StretchMode::AbsLinear,
            GstkStretch::SignedLinear => StretchMode::SignedLinear,
        };
        store(out, GstkBand(stretch(r, mode, lo_pct, hi_pct)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gstk_response_free(r: *mut GstkResponse) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
