//! C interface to `tqdsim`.
//!
//! Objects are opaque handles created by `*_new`/`tqd_run_trajectory` and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TqdStatus`]; on failure `tqd_last_error_message` describes the error on
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tqdsim::config;
use tqdsim::diffusive::{run_diffusive_trajectory, TrajectoryRecord, WienerStream};
use tqdsim::harness::{ExperimentConfig, Mode};
use tqdsim::jump::{analytic_rho_cc, run_jump_trajectory, JumpTrajectory};
use tqdsim::model::effective_coupling;
use tqdsim::observables::{pearson, tqd_current, zero_freq_cross};
use tqdsim::steady::steady_state;
use tqdsim::Error;

/// Status codes. 1-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqdStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Numerical = 3,
    InsufficientData = 4,
    NullPointer = 10,
    InvalidUtf8 = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Columns of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TqdColumn {
    Time = 0,
    RhoLl = 1,
    RhoCc = 2,
    RhoRr = 3,
    /// Detector record (diffusive only).
    Record = 4,
    Current = 5,
    /// Cumulative detections (jump only).
    Detected = 6,
}

/// Experiment configuration (parameters, detector, run settings).
pub struct TqdConfig(ExperimentConfig);

/// Result of one diffusive or jump trajectory.
pub enum TqdTrajectory {
    Diffusive(TrajectoryRecord),
    Jump(JumpTrajectory),
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> TqdStatus {
    match e.exit_code() {
        1 => TqdStatus::Io,
        2 => TqdStatus::Config,
        4 => TqdStatus::InsufficientData,
        _ => TqdStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), TqdStatus>) -> TqdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TqdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            TqdStatus::Panic
        }
    }
}

fn fail(e: Error) -> TqdStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> TqdStatus {
    set_error(format!("null pointer: {what}"));
    TqdStatus::NullPointer
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, TqdStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        TqdStatus::InvalidUtf8
    })
}

unsafe fn config_ref<'a>(cfg: *const TqdConfig) -> Result<&'a ExperimentConfig, TqdStatus> {
    cfg.as_ref().map(|c| &c.0).ok_or_else(|| null("config"))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), TqdStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn tqd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tqd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with the defaults of `mode` ("steady", "diffusive",
/// "jump", ...; null means "steady"). Returns null on error.
///
/// # Safety
/// `mode` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tqd_config_new(mode: *const c_char) -> *mut TqdConfig {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let m = if mode.is_null() {
            Mode::Steady
        } else {
            let s = text(mode, "mode")?;
            Mode::parse(s).ok_or_else(|| {
                set_error(format!("unknown mode `{s}`"));
                TqdStatus::Config
            })?
        };
        out = Box::into_raw(Box::new(TqdConfig(config::defaults_for(m))));
        Ok(())
    });
    if status == TqdStatus::Ok {
        out
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `cfg` must be null or a handle from `tqd_config_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn tqd_config_free(cfg: *mut TqdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets one configuration key, using the same keys and value syntax as the
/// command line (e.g. `"gamma"`, `"10"`).
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tqd_config_set(
    cfg: *mut TqdConfig,
    key: *const c_char,
    value: *const c_char,
) -> TqdStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        let key = text(key, "key")?;
        let value = text(value, "value")?;
        config::apply(&mut cfg.0, key, value).map_err(fail)
    })
}

/// Full validation, including the time-step guard.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tqd_config_validate(cfg: *const TqdConfig) -> TqdStatus {
    guard(|| config_ref(cfg)?.validate().map_err(fail))
}

/// Steady state: writes `[rho_00, rho_LL, rho_CC, rho_RR]` to `populations`
/// (4 doubles) and the TQD current to `current`.
///
/// # Safety
/// `cfg` must be a live handle; `populations` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn tqd_steady_state(
    cfg: *const TqdConfig,
    populations: *mut f64,
    current: *mut f64,
) -> TqdStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        if populations.is_null() {
            return Err(null("populations"));
        }
        let ss = steady_state(&cfg.params).map_err(fail)?;
        let i_t = tqd_current(&ss, &cfg.params).map_err(fail)?;
        let pops = [ss.rho_00(), ss.rho_ll(), ss.rho_cc(), ss.rho_rr()];
        ptr::copy_nonoverlapping(pops.as_ptr(), populations, 4);
        write_out(current, i_t, "current")
    })
}

/// Runs one trajectory of the configured mode (`diffusive` or `jump`) on
/// substream `stream_id` of the configured seed.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tqd_run_trajectory(
    cfg: *const TqdConfig,
    stream_id: u64,
    out: *mut *mut TqdTrajectory,
) -> TqdStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        if out.is_null() {
            return Err(null("out"));
        }
        cfg.validate().map_err(fail)?;
        let mut stream = WienerStream::new(cfg.seed, stream_id, cfg.params.dt);
        let rho0 = cfg.initial_state();
        let tr = match cfg.mode {
            Mode::Diffusive => TqdTrajectory::Diffusive(
                run_diffusive_trajectory(&rho0, &cfg.params, cfg.t_final, &mut stream, cfg.decimate)
                    .map_err(fail)?,
            ),
            Mode::Jump => TqdTrajectory::Jump(
                run_jump_trajectory(&rho0, &cfg.params, cfg.t_final, &mut stream, cfg.decimate)
                    .map_err(fail)?,
            ),
            other => {
                set_error(format!("trajectories need mode diffusive or jump, got {}", other.name()));
                return Err(TqdStatus::Config);
            }
        };
        out.write(Box::into_raw(Box::new(tr)));
        Ok(())
    })
}

/// # Safety
/// `tr` must be null or a handle from `tqd_run_trajectory`, freed once.
#[no_mangle]
pub unsafe extern "C" fn tqd_trajectory_free(tr: *mut TqdTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of stored rows.
///
/// # Safety
/// `tr` must be a live handle; `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tqd_trajectory_len(tr: *const TqdTrajectory, len: *mut usize) -> TqdStatus {
    guard(|| {
        let tr = tr.as_ref().ok_or_else(|| null("trajectory"))?;
        let n = match tr {
            TqdTrajectory::Diffusive(r) => r.len(),
            TqdTrajectory::Jump(j) => j.len(),
        };
        write_out(len, n, "len")
    })
}

/// Copies one column into `buf`, which must hold at least `len` doubles
/// (`len` >= the trajectory length).
///
/// # Safety
/// `tr` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tqd_trajectory_column(
    tr: *const TqdTrajectory,
    column: TqdColumn,
    buf: *mut f64,
    len: usize,
) -> TqdStatus {
    guard(|| {
        let tr = tr.as_ref().ok_or_else(|| null("trajectory"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let unavailable = || {
            set_error(format!("column {column:?} is not recorded for this trajectory type"));
            TqdStatus::Config
        };
        let counts: Vec<f64>;
        let data: &[f64] = match (tr, column) {
            (TqdTrajectory::Diffusive(r), c) => match c {
                TqdColumn::Time => &r.times,
                TqdColumn::RhoLl => &r.rho_ll,
                TqdColumn::RhoCc => &r.rho_cc,
                TqdColumn::RhoRr => &r.rho_rr,
                TqdColumn::Record => &r.record_z,
                TqdColumn::Current => &r.i_t,
                TqdColumn::Detected => return Err(unavailable()),
            },
            (TqdTrajectory::Jump(j), c) => match c {
                TqdColumn::Time => &j.times,
                TqdColumn::RhoLl => &j.rho_ll,
                TqdColumn::RhoCc => &j.rho_cc,
                TqdColumn::RhoRr => &j.rho_rr,
                TqdColumn::Current => &j.i_t,
                TqdColumn::Detected => {
                    counts = j.n_detected.iter().map(|&n| n as f64).collect();
                    &counts
                }
                TqdColumn::Record => return Err(unavailable()),
            },
        };
        if len < data.len() {
            set_error(format!("buffer holds {len} values, need {}", data.len()));
            return Err(TqdStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Zero-frequency cross spectrum of two stationary series sampled every
/// `dt`, with its batch-means standard error.
///
/// # Safety
/// `x` and `y` must each hold `n` doubles; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tqd_zero_freq_cross(
    x: *const f64,
    y: *const f64,
    n: usize,
    dt: f64,
    t_burn: f64,
    t_cut: f64,
    value: *mut f64,
    stderr: *mut f64,
) -> TqdStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(null("series"));
        }
        let xs = std::slice::from_raw_parts(x, n);
        let ys = std::slice::from_raw_parts(y, n);
        let (s, e) = zero_freq_cross(xs, ys, dt, t_burn, t_cut).map_err(fail)?;
        write_out(value, s, "value")?;
        write_out(stderr, e, "stderr")
    })
}

/// `s_tq / sqrt(s_tt s_qq)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tqd_pearson(s_tq: f64, s_tt: f64, s_qq: f64, out: *mut f64) -> TqdStatus {
    guard(|| {
        let r = pearson(s_tq, s_tt, s_qq).map_err(fail)?;
        write_out(out, r, "out")
    })
}

/// Approximate `rho_CC` a time `t` after a detection.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tqd_analytic_rho_cc(cfg: *const TqdConfig, t: f64, out: *mut f64) -> TqdStatus {
    guard(|| {
        let v = analytic_rho_cc(t, &config_ref(cfg)?.params).map_err(fail)?;
        write_out(out, v, "out")
    })
}

/// `Omega^2 / Delta`.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tqd_effective_coupling(cfg: *const TqdConfig, out: *mut f64) -> TqdStatus {
    guard(|| {
        let v = effective_coupling(&config_ref(cfg)?.params).map_err(fail)?;
        write_out(out, v, "out")
    })
}
