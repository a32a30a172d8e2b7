//! C ABI for the modulo-sum relay channel toolbox: opaque spec handles,
//! status codes, and flat result structs, so other languages can bind
//! against the generated `include/modsum.h`.
//!
//! Conventions: every function returns a [`ModsumStatus`]; results come out
//! through pointers supplied by the caller; a handle created by one of the
//! `modsum_spec_*` constructors must be released with [`modsum_spec_free`].
//! On any non-OK status, [`modsum_last_error_message`] returns a
//! thread-local NUL-terminated description valid until the next call on the
//! same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use modsum::{
    bsc_relay, bsc_relay_with_rate, canonical_spec_json, capacity_closed_form_binary_uniform,
    capacity_numeric, cutset_bound_binary_uniform, direct_link_capacity,
    mgl_conditional_entropy_bound, parse_spec, relay_link_capacity, simulate,
    verify_converse_bound, CapacityMethod, Channel, DecoderKind, Error, OptimizerOptions,
    QuantizerDesign, RelayChannelSpec, SimConfig,
};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModsumStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    DomainError = 5,
    DimensionError = 6,
    GuardExceeded = 7,
    PreconditionFailed = 8,
    NonConverged = 9,
    BufferTooSmall = 10,
    InternalError = 11,
}

/// How a capacity value was obtained.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModsumMethod {
    Alternating = 0,
    Grid = 1,
    ClosedForm = 2,
}

/// Decoder selector for the simulator.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModsumDecoder {
    MaxLikelihood = 0,
    Typicality = 1,
}

/// Opaque handle to a validated relay channel spec.
pub struct ModsumSpec(RelayChannelSpec);

/// Capacity value plus the optimizing quantizer's operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ModsumCapacityResult {
    pub capacity: f64,
    pub r0: f64,
    pub quantizer_rate: f64,
    pub quantizer_distortion: f64,
    pub constraint_slack: f64,
    pub restarts: u64,
    pub method: ModsumMethod,
    pub converged: bool,
}

/// Outcome of the exhaustive converse verification.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ModsumConverseResult {
    pub min_conditional_entropy: f64,
    pub bound: f64,
    pub encoder_count: u64,
    pub pass: bool,
}

/// Simulation parameters. `typ_tol < 0` selects the default
/// 0.05 + 1/sqrt(n).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ModsumSimParams {
    pub n: u32,
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub decoder: ModsumDecoder,
    pub typ_tol: f64,
    pub u_rate_margin: f64,
    /// Nonzero replaces the optimized quantizer with a constant U.
    pub use_constant_u: bool,
    pub enforce_pipe_rate: bool,
}

/// Monte Carlo block-error estimates.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ModsumSimResult {
    pub block_error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub quantize_failures: u64,
    pub decode_errors: u64,
    pub atypical_source: u64,
    pub trials: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(err: &Error) -> ModsumStatus {
    match err {
        Error::Validation(_) => ModsumStatus::ValidationError,
        Error::Domain(_) => ModsumStatus::DomainError,
        Error::Dimension(_) => ModsumStatus::DimensionError,
        Error::Parse(_) => ModsumStatus::ParseError,
        Error::NonConverged { .. } => ModsumStatus::NonConverged,
        Error::Guard(_) => ModsumStatus::GuardExceeded,
        Error::Precondition(_) => ModsumStatus::PreconditionFailed,
    }
}

fn fail(err: Error) -> ModsumStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn guarded(f: impl FnOnce() -> ModsumStatus) -> ModsumStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            ModsumStatus::InternalError
        }
    }
}

/// # Safety
/// `ptr` must be non-null and valid for writes.
unsafe fn write_out<T>(ptr: *mut T, value: T) -> ModsumStatus {
    if ptr.is_null() {
        set_error("output pointer is null");
        return ModsumStatus::NullPointer;
    }
    unsafe { ptr.write(value) };
    ModsumStatus::Ok
}

unsafe fn spec_ref<'a>(spec: *const ModsumSpec) -> Result<&'a RelayChannelSpec, ModsumStatus> {
    if spec.is_null() {
        set_error("spec handle is null");
        return Err(ModsumStatus::NullPointer);
    }
    Ok(unsafe { &(*spec).0 })
}

fn export_spec(spec: RelayChannelSpec, out: *mut *mut ModsumSpec) -> ModsumStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return ModsumStatus::NullPointer;
    }
    let handle = Box::into_raw(Box::new(ModsumSpec(spec)));
    unsafe { out.write(handle) };
    ModsumStatus::Ok
}

/// Last error message for this thread; empty string when no error has
/// occurred. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn modsum_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn modsum_status_name(status: ModsumStatus) -> *const c_char {
    let name: &'static CStr = match status {
        ModsumStatus::Ok => c"ok",
        ModsumStatus::NullPointer => c"null pointer",
        ModsumStatus::InvalidUtf8 => c"invalid utf-8",
        ModsumStatus::ParseError => c"parse error",
        ModsumStatus::ValidationError => c"validation error",
        ModsumStatus::DomainError => c"domain error",
        ModsumStatus::DimensionError => c"dimension mismatch",
        ModsumStatus::GuardExceeded => c"guard exceeded",
        ModsumStatus::PreconditionFailed => c"precondition failed",
        ModsumStatus::NonConverged => c"did not converge",
        ModsumStatus::BufferTooSmall => c"buffer too small",
        ModsumStatus::InternalError => c"internal error",
    };
    name.as_ptr()
}

/// Build the binary instance: Z ~ Ber(p), Y1 = Z xor Ber(delta), and a
/// BSC(epsilon) relay link.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn modsum_spec_bsc(
    p: f64,
    delta: f64,
    epsilon: f64,
    out: *mut *mut ModsumSpec,
) -> ModsumStatus {
    guarded(|| match bsc_relay(p, delta, epsilon) {
        Ok(spec) => export_spec(spec, out),
        Err(e) => fail(e),
    })
}

/// Build the binary instance with an explicit relay link rate.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn modsum_spec_bsc_rate(
    p: f64,
    delta: f64,
    r0: f64,
    out: *mut *mut ModsumSpec,
) -> ModsumStatus {
    guarded(|| match bsc_relay_with_rate(p, delta, r0) {
        Ok(spec) => export_spec(spec, out),
        Err(e) => fail(e),
    })
}

/// Parse a JSON channel spec document.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_spec_parse_json(
    text: *const c_char,
    out: *mut *mut ModsumSpec,
) -> ModsumStatus {
    guarded(|| {
        if text.is_null() {
            set_error("input text is null");
            return ModsumStatus::NullPointer;
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("input text is not valid UTF-8");
                return ModsumStatus::InvalidUtf8;
            }
        };
        match parse_spec(text) {
            Ok(spec) => export_spec(spec, out),
            Err(e) => fail(e),
        }
    })
}

/// Render the canonical JSON form into a caller buffer. On success,
/// `*written` holds the length excluding the trailing NUL; when the buffer
/// is too small (or null), `*written` holds the required capacity including
/// the NUL and the call returns `BufferTooSmall`.
///
/// # Safety
/// `buf` must be valid for `cap` bytes when non-null; `written` valid for
/// writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_spec_canonical_json(
    spec: *const ModsumSpec,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        if written.is_null() {
            set_error("written pointer is null");
            return ModsumStatus::NullPointer;
        }
        let text = canonical_spec_json(spec);
        let needed = text.len() + 1;
        if buf.is_null() || cap < needed {
            unsafe { written.write(needed) };
            set_error("canonical form needs a larger buffer");
            return ModsumStatus::BufferTooSmall;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast(), text.len());
            buf.add(text.len()).write(0);
            written.write(text.len());
        }
        ModsumStatus::Ok
    })
}

/// Release a spec handle. Null is a no-op.
///
/// # Safety
/// `spec` must be a handle returned by a `modsum_spec_*` constructor, not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn modsum_spec_free(spec: *mut ModsumSpec) {
    if !spec.is_null() {
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// Capacity of the relay link alone (the stored rate, or the link DMC
/// capacity to within `tol`).
///
/// # Safety
/// Valid `spec` handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_relay_link_capacity(
    spec: *const ModsumSpec,
    tol: f64,
    out: *mut f64,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match relay_link_capacity(spec, tol) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// No-relay baseline log2(m) - H(Z).
///
/// # Safety
/// Valid `spec` handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_direct_link_capacity(
    spec: *const ModsumSpec,
    out: *mut f64,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        unsafe { write_out(out, direct_link_capacity(spec)) }
    })
}

/// Relay channel capacity by the quantizer optimizer (deterministic for a
/// fixed seed).
///
/// # Safety
/// Valid `spec` handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_capacity(
    spec: *const ModsumSpec,
    seed: u64,
    out: *mut ModsumCapacityResult,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let opts = OptimizerOptions {
            seed,
            ..OptimizerOptions::default()
        };
        match capacity_numeric(spec, &opts) {
            Ok(rep) => unsafe {
                write_out(
                    out,
                    ModsumCapacityResult {
                        capacity: rep.capacity,
                        r0: rep.r0_used,
                        quantizer_rate: rep.quantizer.rate(),
                        quantizer_distortion: rep.quantizer.distortion(),
                        constraint_slack: rep.constraint_slack,
                        restarts: rep.restarts_used as u64,
                        method: match rep.method {
                            CapacityMethod::Alternating => ModsumMethod::Alternating,
                            CapacityMethod::Grid => ModsumMethod::Grid,
                            CapacityMethod::ClosedForm => ModsumMethod::ClosedForm,
                        },
                        converged: rep.converged,
                    },
                )
            },
            Err(e) => fail(e),
        }
    })
}

/// Closed-form capacity of the binary uniform-noise instance.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_capacity_closed_form(
    r0: f64,
    delta: f64,
    out: *mut f64,
) -> ModsumStatus {
    guarded(|| match capacity_closed_form_binary_uniform(r0, delta) {
        Ok(v) => unsafe { write_out(out, v) },
        Err(e) => fail(e),
    })
}

/// Cut-set bound min(r0, 1 - h(delta)) of the binary uniform-noise
/// instance.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_cutset_bound(r0: f64, delta: f64, out: *mut f64) -> ModsumStatus {
    guarded(|| match cutset_bound_binary_uniform(r0, delta) {
        Ok(v) => unsafe { write_out(out, v) },
        Err(e) => fail(e),
    })
}

/// Conditional entropy-power lower bound h(h^-1(alpha) * delta).
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_mgl_bound(alpha: f64, delta: f64, out: *mut f64) -> ModsumStatus {
    guarded(|| match mgl_conditional_entropy_bound(alpha, delta) {
        Ok(v) => unsafe { write_out(out, v) },
        Err(e) => fail(e),
    })
}

/// Exhaustively verify the converse inequality at blocklength `n`.
///
/// # Safety
/// Valid `spec` handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn modsum_verify_converse(
    spec: *const ModsumSpec,
    n: u32,
    out: *mut ModsumConverseResult,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match verify_converse_bound(spec, n as usize, false) {
            Ok(rep) => unsafe {
                write_out(
                    out,
                    ModsumConverseResult {
                        min_conditional_entropy: rep.min_conditional_entropy,
                        bound: rep.bound,
                        encoder_count: rep.encoder_count,
                        pass: rep.pass,
                    },
                )
            },
            Err(e) => fail(e),
        }
    })
}

/// Monte Carlo simulation of the quantize-and-forward scheme. The quantizer
/// is the optimizer's output unless `params.use_constant_u` is set.
///
/// # Safety
/// Valid `spec` handle; `params` and `out` valid for reads/writes.
#[no_mangle]
pub unsafe extern "C" fn modsum_simulate(
    spec: *const ModsumSpec,
    params: *const ModsumSimParams,
    out: *mut ModsumSimResult,
) -> ModsumStatus {
    guarded(|| {
        let spec = match unsafe { spec_ref(spec) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        if params.is_null() {
            set_error("params pointer is null");
            return ModsumStatus::NullPointer;
        }
        let params = unsafe { *params };
        let quantizer = if params.use_constant_u {
            let rows = vec![vec![1.0]; spec.y1_size()];
            match Channel::new(rows).and_then(|q| QuantizerDesign::new(q, spec)) {
                Ok(q) => q,
                Err(e) => return fail(e),
            }
        } else {
            let opts = OptimizerOptions {
                seed: params.seed,
                ..OptimizerOptions::default()
            };
            match capacity_numeric(spec, &opts) {
                Ok(rep) => rep.quantizer,
                Err(e) => return fail(e),
            }
        };
        let mut config = SimConfig::new(params.n as usize, params.rate, quantizer);
        config.trials = params.trials;
        config.seed = params.seed;
        config.decoder = match params.decoder {
            ModsumDecoder::MaxLikelihood => DecoderKind::MaxLikelihood,
            ModsumDecoder::Typicality => DecoderKind::Typicality,
        };
        if params.typ_tol >= 0.0 {
            config.typ_tol = params.typ_tol;
        }
        if params.u_rate_margin >= 0.0 {
            config.u_rate_margin = params.u_rate_margin;
        }
        config.enforce_pipe_rate = params.enforce_pipe_rate;
        match simulate(spec, &config) {
            Ok(rep) => unsafe {
                write_out(
                    out,
                    ModsumSimResult {
                        block_error_rate: rep.block_error_rate,
                        ci_low: rep.wilson_ci95.0,
                        ci_high: rep.wilson_ci95.1,
                        quantize_failures: rep.quantize_failures,
                        decode_errors: rep.decode_errors,
                        atypical_source: rep.atypical_source,
                        trials: rep.trials_run,
                    },
                )
            },
            Err(e) => fail(e),
        }
    })
}
