//! C ABI over the sketch-anomaly engine.
//!
//! All objects are opaque handles created by `ska_*_new`/`ska_*_load` and
//! released by the matching `ska_*_free`. Every fallible call returns a
//! [`SkaStatus`]; on failure [`ska_last_error`] describes the cause for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sketch_anomaly::io::{load_matrix, Format};
use sketch_anomaly::linalg::spectral_stats;
use sketch_anomaly::pipeline::{run_pipeline, MatrixSource, PipelineConfig, SketchMode};
use sketch_anomaly::scores::{batch_scores, online_scores_with};
use sketch_anomaly::sketch::{FdState, Snapshot};
use sketch_anomaly::{DenseMatrix, Error, ScoreKind, ScoreRecord};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Numeric = 4,
    Io = 5,
    Parse = 6,
    /// The requested score is not defined for this record (e.g. an online sentinel).
    Undefined = 7,
    Panic = 8,
}

/// Scoring modes for [`ska_score`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkaMode {
    Exact = 0,
    ExactOnline = 1,
    Fd = 2,
    Rproj = 3,
    Colsample = 4,
    Rowsample = 5,
    OnlineFd = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkaScoreKind {
    Full = 0,
    RankK = 1,
    ProjectionDistance = 2,
    Tail = 3,
    Ridge = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkaScoreOptions {
    pub mode: SkaMode,
    pub k: usize,
    /// Sketch size; ignored by the exact modes.
    pub ell: usize,
    pub seed: u64,
    /// Ridge parameter; negative disables the ridge score.
    pub lambda: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkaSpectralStats {
    pub separation_delta: f64,
    pub condition_kappa_k: f64,
    pub stable_rank: f64,
    pub frobenius_sq: f64,
    pub tail_mass: f64,
}

pub struct SkaMatrix(DenseMatrix);

pub struct SkaScores(Vec<ScoreRecord>);

pub struct SkaFd(FdState);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> SkaStatus {
    match err {
        Error::InvalidArgument(_) => SkaStatus::InvalidArgument,
        Error::Shape(_) | Error::WidthMismatch { .. } | Error::Empty(_) => SkaStatus::Shape,
        Error::Io(_) => SkaStatus::Io,
        Error::Parse { .. } | Error::NonFinite { .. } | Error::Snapshot(_) | Error::Json(_) => SkaStatus::Parse,
        _ => SkaStatus::Numeric,
    }
}

/// Runs `f`, recording any error or panic for `ska_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (SkaStatus, String)>) -> SkaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkaStatus::Ok,
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
            SkaStatus::Panic
        }
    }
}

fn lift<T>(r: sketch_anomaly::Result<T>) -> Result<T, (SkaStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SkaStatus, String) {
    (SkaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SkaStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn ska_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ska_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies a row-major `rows * cols` buffer into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ska_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SkaMatrix,
) -> SkaStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or((SkaStatus::InvalidArgument, "rows * cols overflows".to_string()))?;
        let buf = std::slice::from_raw_parts(data, len).to_vec();
        let m = lift(DenseMatrix::new(rows, cols, buf))?;
        *out = Box::into_raw(Box::new(SkaMatrix(m)));
        Ok(())
    })
}

/// Loads a numeric CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ska_matrix_load_csv(path: *const c_char, has_header: bool, out: *mut *mut SkaMatrix) -> SkaStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SkaStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let m = lift(load_matrix(path, Format::Csv, has_header))?;
        *out = Box::into_raw(Box::new(SkaMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ska_matrix_rows(m: *const SkaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn ska_matrix_cols(m: *const SkaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be null or a handle from `ska_matrix_*`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ska_matrix_free(m: *mut SkaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn score_matrix(a: &DenseMatrix, opts: &SkaScoreOptions) -> sketch_anomaly::Result<Vec<ScoreRecord>> {
    let lambda = (opts.lambda >= 0.0).then_some(opts.lambda);
    let sketch = match opts.mode {
        SkaMode::Exact => return batch_scores(a, opts.k, lambda),
        SkaMode::ExactOnline => return online_scores_with((0..a.rows()).map(|i| a.row(i)), opts.k, lambda),
        SkaMode::Fd => SketchMode::Fd,
        SkaMode::Rproj => SketchMode::Rproj,
        SkaMode::Colsample => SketchMode::Colsample,
        SkaMode::Rowsample => SketchMode::Rowsample,
        SkaMode::OnlineFd => SketchMode::OnlineFd,
    };
    let mut cfg = PipelineConfig::new(sketch, opts.k, opts.ell, opts.seed);
    cfg.lambda = lambda;
    run_pipeline(&mut MatrixSource::new(a), &cfg)
}

/// Scores every row of `m`.
///
/// # Safety
/// `m` must be a live matrix handle, `opts` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ska_score(
    m: *const SkaMatrix,
    opts: *const SkaScoreOptions,
    out: *mut *mut SkaScores,
) -> SkaStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        let opts = handle(opts, "options")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let recs = lift(score_matrix(&m.0, opts))?;
        *out = Box::into_raw(Box::new(SkaScores(recs)));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live scores handle.
#[no_mangle]
pub unsafe extern "C" fn ska_scores_len(s: *const SkaScores) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Reads one score. Returns `Undefined` when the record has no value of that kind.
///
/// # Safety
/// `s` must be a live scores handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ska_scores_get(
    s: *const SkaScores,
    row: usize,
    kind: SkaScoreKind,
    out: *mut f64,
) -> SkaStatus {
    guard(|| {
        let s = handle(s, "scores")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rec = s
            .0
            .get(row)
            .ok_or_else(|| (SkaStatus::InvalidArgument, format!("row {row} out of range ({} rows)", s.0.len())))?;
        let kind = match kind {
            SkaScoreKind::Full => ScoreKind::Full,
            SkaScoreKind::RankK => ScoreKind::Levk,
            SkaScoreKind::ProjectionDistance => ScoreKind::Projk,
            SkaScoreKind::Tail => ScoreKind::Tail,
            SkaScoreKind::Ridge => ScoreKind::Ridge,
        };
        match rec.get(kind) {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => Err((SkaStatus::Undefined, format!("{} is not defined for row {row}", kind.name()))),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from `ska_score`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ska_scores_free(s: *mut SkaScores) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Creates an empty frequent-directions sketch with `ell` rows over width `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_new(ell: usize, d: usize, out: *mut *mut SkaFd) -> SkaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fd = lift(FdState::new(ell, d))?;
        *out = Box::into_raw(Box::new(SkaFd(fd)));
        Ok(())
    })
}

/// Feeds one row of length `len`.
///
/// # Safety
/// `fd` must be a live handle and `row` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_update(fd: *mut SkaFd, row: *const f64, len: usize) -> SkaStatus {
    guard(|| {
        let fd = fd.as_mut().ok_or_else(|| null("sketch"))?;
        if row.is_null() {
            return Err(null("row"));
        }
        lift(fd.0.update(std::slice::from_raw_parts(row, len)))?;
        Ok(())
    })
}

/// Number of rows currently held by the sketch (between 0 and `2 * ell - 1`).
///
/// # Safety
/// `fd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_rows(fd: *const SkaFd) -> usize {
    fd.as_ref().map_or(0, |f| f.0.sketch().rows())
}

/// Copies the `ska_fd_rows(fd) x d` sketch, row-major, into `buf` of
/// `capacity` doubles.
///
/// # Safety
/// `fd` must be a live handle and `buf` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_sketch(fd: *const SkaFd, buf: *mut f64, capacity: usize) -> SkaStatus {
    guard(|| {
        let fd = handle(fd, "sketch")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let data = fd.0.sketch().as_slice();
        if capacity < data.len() {
            return Err((SkaStatus::Shape, format!("buffer holds {capacity} values, sketch has {}", data.len())));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Writes the sketch as a binary snapshot.
///
/// # Safety
/// `fd` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_save(fd: *const SkaFd, path: *const c_char) -> SkaStatus {
    guard(|| {
        let fd = handle(fd, "sketch")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SkaStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        lift(Snapshot::from_fd(&fd.0).save(path))
    })
}

/// # Safety
/// `fd` must be null or a handle from `ska_fd_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ska_fd_free(fd: *mut SkaFd) {
    if !fd.is_null() {
        drop(Box::from_raw(fd));
    }
}

/// Spectral summary of `m` for rank parameter `k`.
///
/// # Safety
/// `m` must be a live matrix handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ska_spectral_stats(m: *const SkaMatrix, k: usize, out: *mut SkaSpectralStats) -> SkaStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = lift(spectral_stats(&m.0, k, k))?;
        *out = SkaSpectralStats {
            separation_delta: s.separation_delta,
            condition_kappa_k: s.condition_kappa_k,
            stable_rank: s.stable_rank,
            frobenius_sq: s.frobenius_sq(),
            tail_mass: s.tail_mass(k),
        };
        Ok(())
    })
}
