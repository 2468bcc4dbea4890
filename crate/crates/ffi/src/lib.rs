//! C ABI over the `pwqre` library.
//!
//! Instances and reports are opaque handles created and freed by this
//! library. Every fallible call returns a [`PwqreStatus`]; on failure the
//! message is kept per thread and read with [`pwqre_last_error`]. Strings are
//! returned by copying into caller buffers, with the required size (including
//! the terminating NUL) always written back.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pwqre::cli_reports::{
    basis_summary, builtin_instance, parse_instance, run_full_report, InstanceSpec, ReportBundle,
};
use pwqre::evolution_planner::jacobi_anger_degree;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwqreStatus {
    /// Success.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input was rejected.
    Validation = 3,
    /// A numerical failure occurred.
    Numeric = 4,
    /// An index was out of range.
    OutOfRange = 5,
    /// The output buffer is too small; the required size was written.
    BufferTooSmall = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// Opaque handle to a derived instance.
pub struct PwqreInstance(InstanceSpec);

/// Opaque handle to a computed report.
pub struct PwqreReport(ReportBundle);

/// Basis sizes of an instance.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PwqreBasis {
    /// Electron basis size.
    pub g_size: u64,
    /// Ion basis size.
    pub gbar_size: u64,
    /// Total system qubits.
    pub system_qubits: u64,
    /// Electron qubits per axis.
    pub n: [u32; 3],
    /// Ion qubits per axis.
    pub nbar: [u32; 3],
}

/// One evolution plan of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PwqrePlan {
    /// Evolution time in atomic units.
    pub t: f64,
    /// Scaled time `lambda t`.
    pub tau: f64,
    /// Jacobi-Anger degree.
    pub degree: u64,
    /// Block-encoding calls.
    pub iterate_calls: u64,
    /// Total Toffoli count (as a double; exact below 2^53).
    pub toffoli_total: f64,
    /// Toffoli count per femtosecond.
    pub per_fs: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(err: pwqre::Error) -> PwqreStatus {
    let status = if err.is_numeric() { PwqreStatus::Numeric } else { PwqreStatus::Validation };
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> PwqreStatus) -> PwqreStatus {
    set_error(String::new());
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic".to_string());
        PwqreStatus::Panic
    })
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PwqreStatus> {
    if s.is_null() {
        set_error("null string argument".to_string());
        return Err(PwqreStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8".to_string());
        PwqreStatus::InvalidUtf8
    })
}

unsafe fn copy_out(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> PwqreStatus {
    let n = text.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return PwqreStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    PwqreStatus::Ok
}

fn null_check(ok: bool) -> Result<(), PwqreStatus> {
    if ok {
        Ok(())
    } else {
        set_error("null pointer argument".to_string());
        Err(PwqreStatus::NullPointer)
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Copy the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn pwqre_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> PwqreStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    copy_out(&msg, buf, len, needed)
}

/// Load a bundled instance by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_instance_builtin(name: *const c_char, out: *mut *mut PwqreInstance) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!out.is_null()));
        let name = tri!(read_str(name));
        match builtin_instance(name) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(PwqreInstance(i)));
                PwqreStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parse an instance from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_instance_parse(text: *const c_char, out: *mut *mut PwqreInstance) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!out.is_null()));
        let text = tri!(read_str(text));
        match parse_instance(text) {
            Ok(i) => {
                *out = Box::into_raw(Box::new(PwqreInstance(i)));
                PwqreStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release an instance. Null is accepted.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pwqre_instance_free(inst: *mut PwqreInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Particle counts `(eta_val, eta_ion, eta)`.
///
/// # Safety
/// `inst` must be a live handle; `out` must point to 3 writable values.
#[no_mangle]
pub unsafe extern "C" fn pwqre_instance_eta(inst: *const PwqreInstance, out: *mut u64) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!inst.is_null() && !out.is_null()));
        let i = &(*inst).0;
        for (k, v) in [i.eta_val, i.eta_ion, i.eta].into_iter().enumerate() {
            *out.add(k) = v;
        }
        PwqreStatus::Ok
    })
}

/// Basis sizes and widths.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_instance_basis(inst: *const PwqreInstance, out: *mut PwqreBasis) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!inst.is_null() && !out.is_null()));
        let b = basis_summary(&(*inst).0);
        *out = PwqreBasis {
            g_size: b.g_size,
            gbar_size: b.gbar_size,
            system_qubits: b.system_qubits,
            n: b.n,
            nbar: b.nbar,
        };
        PwqreStatus::Ok
    })
}

/// Run the full report for `n_times` evolution times (atomic units).
///
/// # Safety
/// `inst` must be a live handle; `times` must point to `n_times` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_run(
    inst: *const PwqreInstance,
    times: *const f64,
    n_times: usize,
    delta: f64,
    out: *mut *mut PwqreReport,
) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!inst.is_null() && !out.is_null() && (n_times == 0 || !times.is_null())));
        let t = if n_times == 0 { &[][..] } else { std::slice::from_raw_parts(times, n_times) };
        match run_full_report(&(*inst).0, t, delta) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(PwqreReport(r)));
                PwqreStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a report. Null is accepted.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_free(report: *mut PwqreReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Exact total rescaling factor.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_lambda(report: *const PwqreReport, out: *mut f64) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!report.is_null() && !out.is_null()));
        *out = (*report).0.rescaling.exact.total();
        PwqreStatus::Ok
    })
}

/// Toffolis of one block-encoding call.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_toffolis_per_call(report: *const PwqreReport, out: *mut u64) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!report.is_null() && !out.is_null()));
        *out = (*report).0.cost.grand_total;
        PwqreStatus::Ok
    })
}

/// Number of plans in a report.
///
/// # Safety
/// `report` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_plan_count(report: *const PwqreReport) -> usize {
    if report.is_null() {
        0
    } else {
        (*report).0.plans.len()
    }
}

/// Plan `index` of a report.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_plan(
    report: *const PwqreReport,
    index: usize,
    out: *mut PwqrePlan,
) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!report.is_null() && !out.is_null()));
        let report = &*report;
        let Some(p) = report.0.plans.get(index) else {
            set_error(format!("plan index {index} out of range"));
            return PwqreStatus::OutOfRange;
        };
        *out = PwqrePlan {
            t: p.t,
            tau: p.tau,
            degree: p.degree,
            iterate_calls: p.iterate_calls,
            toffoli_total: p.toffoli_total as f64,
            per_fs: p.per_fs,
        };
        PwqreStatus::Ok
    })
}

/// The report as a JSON document.
///
/// # Safety
/// `report` must be a live handle; `buf` must point to `len` writable bytes or be null; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn pwqre_report_json(
    report: *const PwqreReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!report.is_null()));
        match serde_json::to_string(&(*report).0) {
            Ok(s) => copy_out(&s, buf, len, needed),
            Err(e) => {
                set_error(e.to_string());
                PwqreStatus::Numeric
            }
        }
    })
}

/// Jacobi-Anger truncation degree for scaled time `tau` and error `delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pwqre_jacobi_anger_degree(tau: f64, delta: f64, out: *mut u64) -> PwqreStatus {
    guard(|| {
        tri!(null_check(!out.is_null()));
        match jacobi_anger_degree(tau, delta) {
            Ok(r) => {
                *out = r;
                PwqreStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}
