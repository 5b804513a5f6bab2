//! C ABI for the femtoq simulator.
//!
//! Handles are opaque pointers created and destroyed by this library;
//! every fallible call returns an [`FqStatus`] and stores a descriptive
//! message retrievable with [`fq_last_error_message`]. The generated
//! header lands in `include/femtoq.h` at build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use femtoq::agent::{RewardKind, RewardSpec};
use femtoq::sim::{run_episode, Paradigm, RunTrace, SimConfig};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    RuntimeError = 4,
    IoError = 5,
}

/// Learning paradigm selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqParadigm {
    Independent = 0,
    Cooperative = 1,
}

/// Reward function selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqRewardKind {
    Rf1 = 0,
    Rf2 = 1,
    Rf3 = 2,
}

/// Opaque episode configuration handle.
pub struct FqConfig(SimConfig);

/// Opaque finished-episode handle.
pub struct FqTrace(RunTrace);

/// Post-run metrics of one episode.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FqSummary {
    pub aggregate_femto_capacity: f64,
    pub jain_index: f64,
    pub terminal_deviation: f64,
    pub converged: bool,
    pub convergence_iteration: u64,
    pub shared_entries: u64,
    pub iterations: u64,
    pub n_femto: u32,
    pub n_sub: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let text = CString::new(message).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn fail(status: FqStatus, message: impl Into<Vec<u8>>) -> FqStatus {
    set_error(message);
    status
}

/// Returns the last error message of the calling thread as a newly
/// allocated string (free with [`fq_string_free`]), or null if there was
/// none.
#[no_mangle]
pub extern "C" fn fq_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(text) => text.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string allocated by this library.
///
/// # Safety
/// `text` must be a pointer previously returned by a `femtoq_ffi` call
/// and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fq_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn fq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Creates a configuration with the default experiment values.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_config_new(out: *mut *mut FqConfig) -> FqStatus {
    if out.is_null() {
        return fail(FqStatus::NullArgument, "out pointer is null");
    }
    let config = Box::new(FqConfig(SimConfig::default()));
    *out = Box::into_raw(config);
    FqStatus::Ok
}

/// Parses a configuration from TOML text (same schema as the CLI config
/// file); unknown keys are rejected.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_config_from_toml(
    text: *const c_char,
    out: *mut *mut FqConfig,
) -> FqStatus {
    if text.is_null() || out.is_null() {
        return fail(FqStatus::NullArgument, "text or out pointer is null");
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        return fail(FqStatus::InvalidUtf8, "config text is not valid UTF-8");
    };
    match SimConfig::from_toml_str(text) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(FqConfig(config)));
            FqStatus::Ok
        }
        Err(e) => fail(FqStatus::InvalidArgument, e.to_string()),
    }
}

/// Serializes a configuration back to TOML (free with [`fq_string_free`]).
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_config_to_toml(
    config: *const FqConfig,
    out: *mut *mut c_char,
) -> FqStatus {
    if config.is_null() || out.is_null() {
        return fail(FqStatus::NullArgument, "config or out pointer is null");
    }
    match (*config).0.to_toml() {
        Ok(text) => match CString::new(text) {
            Ok(text) => {
                *out = text.into_raw();
                FqStatus::Ok
            }
            Err(_) => fail(FqStatus::RuntimeError, "config text contains NUL"),
        },
        Err(e) => fail(FqStatus::RuntimeError, e.to_string()),
    }
}

macro_rules! config_setter {
    ($(#[$doc:meta])* $name:ident, $ty:ty, |$cfg:ident, $value:ident| $body:expr) => {
        $(#[$doc])*
        ///
        /// # Safety
        /// `config` must be a live handle from this library.
        #[no_mangle]
        pub unsafe extern "C" fn $name(config: *mut FqConfig, value: $ty) -> FqStatus {
            if config.is_null() {
                return fail(FqStatus::NullArgument, "config pointer is null");
            }
            let $cfg = &mut (*config).0;
            let $value = value;
            $body;
            match $cfg.validate() {
                Ok(()) => FqStatus::Ok,
                Err(e) => fail(FqStatus::InvalidArgument, e.to_string()),
            }
        }
    };
}

config_setter!(
    /// Sets the RNG seed.
    fq_config_set_seed, u64, |cfg, value| cfg.rng_seed = value
);
config_setter!(
    /// Sets the femtocell count.
    fq_config_set_n_femto, u32, |cfg, value| cfg.n_femto = value as usize
);
config_setter!(
    /// Sets the number of Q-iterations.
    fq_config_set_q_iterations, u64, |cfg, value| cfg.q_iterations = value as usize
);

/// Selects independent or cooperative learning.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fq_config_set_paradigm(
    config: *mut FqConfig,
    paradigm: FqParadigm,
) -> FqStatus {
    if config.is_null() {
        return fail(FqStatus::NullArgument, "config pointer is null");
    }
    (*config).0.paradigm = match paradigm {
        FqParadigm::Independent => Paradigm::Il,
        FqParadigm::Cooperative => Paradigm::Cl,
    };
    FqStatus::Ok
}

/// Selects the reward function. `k` is only meaningful for `Rf2`;
/// `target_capacity` is the macro QoS target in bits/sec/Hz.
///
/// # Safety
/// `config` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fq_config_set_reward(
    config: *mut FqConfig,
    kind: FqRewardKind,
    target_capacity: f64,
    k: f64,
) -> FqStatus {
    if config.is_null() {
        return fail(FqStatus::NullArgument, "config pointer is null");
    }
    let reward = RewardSpec {
        kind: match kind {
            FqRewardKind::Rf1 => RewardKind::Rf1,
            FqRewardKind::Rf2 => RewardKind::Rf2,
            FqRewardKind::Rf3 => RewardKind::Rf3,
        },
        target_capacity,
        k: if kind == FqRewardKind::Rf2 {
            Some(k)
        } else {
            None
        },
    };
    match reward.validate() {
        Ok(()) => {
            (*config).0.reward = reward;
            FqStatus::Ok
        }
        Err(e) => fail(FqStatus::InvalidArgument, e.to_string()),
    }
}

/// Destroys a configuration handle.
///
/// # Safety
/// `config` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fq_config_free(config: *mut FqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one full episode; on success `out` receives a trace handle.
///
/// # Safety
/// `config` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_run_episode(
    config: *const FqConfig,
    out: *mut *mut FqTrace,
) -> FqStatus {
    if config.is_null() || out.is_null() {
        return fail(FqStatus::NullArgument, "config or out pointer is null");
    }
    let cfg = &(*config).0;
    let result = catch_unwind(AssertUnwindSafe(|| run_episode(cfg)));
    match result {
        Ok(Ok(trace)) => {
            *out = Box::into_raw(Box::new(FqTrace(trace)));
            FqStatus::Ok
        }
        Ok(Err(e)) => fail(FqStatus::RuntimeError, e.to_string()),
        Err(_) => fail(FqStatus::RuntimeError, "episode panicked"),
    }
}

/// Copies the trace's summary metrics into `out`.
///
/// # Safety
/// `trace` must be a live handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fq_trace_summary(trace: *const FqTrace, out: *mut FqSummary) -> FqStatus {
    if trace.is_null() || out.is_null() {
        return fail(FqStatus::NullArgument, "trace or out pointer is null");
    }
    let run = &(*trace).0;
    *out = FqSummary {
        aggregate_femto_capacity: run.summary.aggregate_femto_capacity,
        jain_index: run.summary.jain_index,
        terminal_deviation: run.summary.convergence.terminal_deviation,
        converged: run.summary.convergence.converged,
        convergence_iteration: run.summary.convergence.iteration as u64,
        shared_entries: run.summary.shared_entries,
        iterations: run.records.len() as u64,
        n_femto: run.config.n_femto as u32,
        n_sub: run.config.n_sub as u32,
    };
    FqStatus::Ok
}

/// Returns the trace summary as a newly allocated JSON string (free with
/// [`fq_string_free`]).
///
/// # Safety
/// `trace` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fq_trace_summary_json(
    trace: *const FqTrace,
    out: *mut *mut c_char,
) -> FqStatus {
    if trace.is_null() || out.is_null() {
        return fail(FqStatus::NullArgument, "trace or out pointer is null");
    }
    match serde_json::to_string(&(*trace).0.summary) {
        Ok(json) => {
            *out = CString::new(json).expect("JSON has no NUL").into_raw();
            FqStatus::Ok
        }
        Err(e) => fail(FqStatus::RuntimeError, e.to_string()),
    }
}

/// Writes the per-step trace CSV to `path`.
///
/// # Safety
/// `trace` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fq_trace_write_csv(
    trace: *const FqTrace,
    path: *const c_char,
) -> FqStatus {
    if trace.is_null() || path.is_null() {
        return fail(FqStatus::NullArgument, "trace or path pointer is null");
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(FqStatus::InvalidUtf8, "path is not valid UTF-8");
    };
    let csv = match femtoq::sim::trace_csv_string(&(*trace).0) {
        Ok(csv) => csv,
        Err(e) => return fail(FqStatus::RuntimeError, e.to_string()),
    };
    match std::fs::write(path, csv) {
        Ok(()) => FqStatus::Ok,
        Err(e) => fail(FqStatus::IoError, e.to_string()),
    }
}

/// Destroys a trace handle.
///
/// # Safety
/// `trace` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fq_trace_free(trace: *mut FqTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
