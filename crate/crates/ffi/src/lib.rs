//! C ABI over the minihive engine. Sessions and results are opaque
//! handles; every call returns an `MhStatus`, and the message of the last
//! failure is kept on the session.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use minihive::session::{Session, StatementOutput};
use minihive::{Datum, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Schema = 4,
    Resolution = 5,
    Type = 6,
    Execution = 7,
    Io = 8,
    NotFound = 9,
    InvalidOption = 10,
    Unsupported = 11,
    OutOfRange = 12,
    Panic = 13,
}

impl From<&Error> for MhStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) | Error::Syntax { .. } | Error::Format(_) => MhStatus::Parse,
            Error::UnsupportedStatement { .. } | Error::Unsupported(_) => MhStatus::Unsupported,
            Error::Schema(_) | Error::AlreadyExists(_) => MhStatus::Schema,
            Error::Resolution(_) => MhStatus::Resolution,
            Error::Type(_) => MhStatus::Type,
            Error::Execution { .. } | Error::Write(_) | Error::ChecksumMismatch(_) => MhStatus::Execution,
            Error::Io { .. } => MhStatus::Io,
            Error::NotFound(_) => MhStatus::NotFound,
            Error::InvalidOption { .. } => MhStatus::InvalidOption,
            Error::Range(_) => MhStatus::OutOfRange,
        }
    }
}

/// A warehouse session.
pub struct MhSession {
    session: Session,
    last_error: CString,
}

/// The result set of one statement, rendered to text.
pub struct MhResult {
    columns: Vec<CString>,
    /// `None` for SQL NULL.
    cells: Vec<Vec<Option<CString>>>,
    simulated_ms: f64,
}

fn c_string(s: String) -> CString {
    CString::new(s.replace('\0', "\u{fffd}")).unwrap_or_default()
}

impl MhResult {
    fn from_output(out: StatementOutput) -> Self {
        let simulated_ms = out.simulated_ms();
        Self {
            columns: out.columns.into_iter().map(|(n, _)| c_string(n)).collect(),
            cells: out
                .rows
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|d| match d {
                            Datum::Null => None,
                            d => Some(c_string(d.to_text())),
                        })
                        .collect()
                })
                .collect(),
            simulated_ms,
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, MhStatus> {
    if p.is_null() {
        return Err(MhStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| MhStatus::InvalidUtf8)
}

fn guarded(f: impl FnOnce() -> MhStatus) -> MhStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(MhStatus::Panic)
}

impl MhSession {
    fn fail(&mut self, e: &Error) -> MhStatus {
        self.last_error = c_string(e.to_string());
        MhStatus::from(e)
    }
}

/// Opens a session over an in-memory warehouse. Free with
/// `mh_session_free`.
#[no_mangle]
pub extern "C" fn mh_session_new() -> *mut MhSession {
    Box::into_raw(Box::new(MhSession { session: Session::in_memory(), last_error: CString::default() }))
}

/// Opens (or initializes) a warehouse directory and stores the session
/// handle in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_session_open(path: *const c_char, out: *mut *mut MhSession) -> MhStatus {
    guarded(|| {
        if out.is_null() {
            return MhStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let path = match text(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match Session::open(Path::new(path)) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(MhSession { session, last_error: CString::default() }));
                MhStatus::Ok
            }
            Err(e) => MhStatus::from(&e),
        }
    })
}

/// # Safety
/// `session` must come from `mh_session_new` or `mh_session_open` and not
/// be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mh_session_free(session: *mut MhSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Sets an option as `SET key=value` would.
///
/// # Safety
/// `session` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mh_session_set(session: *mut MhSession, key: *const c_char, value: *const c_char) -> MhStatus {
    guarded(|| {
        let Some(s) = session.as_mut() else { return MhStatus::NullArgument };
        let (key, value) = match (text(key), text(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        match s.session.options.set(key, value) {
            Ok(()) => MhStatus::Ok,
            Err(e) => s.fail(&e),
        }
    })
}

/// Runs every statement in `sql`. When `out` is not NULL it receives the
/// last statement's result (free with `mh_result_free`), or NULL on error.
///
/// # Safety
/// `session` must be a live handle, `sql` NUL-terminated, `out` NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mh_execute(session: *mut MhSession, sql: *const c_char, out: *mut *mut MhResult) -> MhStatus {
    guarded(|| {
        if !out.is_null() {
            *out = ptr::null_mut();
        }
        let Some(s) = session.as_mut() else { return MhStatus::NullArgument };
        let sql = match text(sql) {
            Ok(t) => t,
            Err(e) => return e,
        };
        match s.session.sql(sql) {
            Ok(output) => {
                if !out.is_null() {
                    *out = Box::into_raw(Box::new(MhResult::from_output(output)));
                }
                MhStatus::Ok
            }
            Err(e) => s.fail(&e),
        }
    })
}

/// Message of the session's most recent failure; empty if none. Valid
/// until the next call on the session.
///
/// # Safety
/// `session` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_last_error(session: *const MhSession) -> *const c_char {
    match session.as_ref() {
        Some(s) => s.last_error.as_ptr(),
        None => ptr::null(),
    }
}

/// # Safety
/// `result` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_result_column_count(result: *const MhResult) -> usize {
    result.as_ref().map_or(0, |r| r.columns.len())
}

/// # Safety
/// `result` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_result_row_count(result: *const MhResult) -> usize {
    result.as_ref().map_or(0, |r| r.cells.len())
}

/// Column name, or NULL when out of range.
///
/// # Safety
/// `result` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_result_column_name(result: *const MhResult, column: usize) -> *const c_char {
    result.as_ref().and_then(|r| r.columns.get(column)).map_or(ptr::null(), |c| c.as_ptr())
}

/// Cell text, or NULL for SQL NULL and for out-of-range positions. The
/// pointer lives as long as the result.
///
/// # Safety
/// `result` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_result_value(result: *const MhResult, row: usize, column: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.cells.get(row))
        .and_then(|r| r.get(column))
        .and_then(|c| c.as_ref())
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Simulated execution time of the statement; 0 for statements that do
/// not run a query.
///
/// # Safety
/// `result` must be a live result handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mh_result_simulated_ms(result: *const MhResult) -> f64 {
    result.as_ref().map_or(0.0, |r| r.simulated_ms)
}

/// # Safety
/// `result` must come from `mh_execute` and not be used afterwards. NULL
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn mh_result_free(result: *mut MhResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
