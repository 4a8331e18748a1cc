//! C ABI over `ect-core`.
//!
//! Every fallible function returns an [`EctStatus`]. On failure a message is
//! kept per thread and can be read with [`ect_last_error`]. Models are
//! opaque handles created by `ect_model_load` or `ect_model_from_json` and
//! released with `ect_model_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ect_core::analysis::{depth_bounds, tightness_example};
use ect_core::reductions::{load_model, model_from_json, predict_label, ReductionModel};
use ect_core::tournaments::{
    min_dethroning_cost, run_tournament, AdversaryModel, Ratio, SearchOptions, Semantics, TournamentConfig, Truth,
};
use ect_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EctStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Format = 3,
    Io = 4,
    SearchLimit = 5,
    Internal = 6,
    Panic = 7,
}

/// Opaque trained model.
pub struct EctModel {
    inner: ReductionModel,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EctDepthBounds {
    pub k: usize,
    pub m: usize,
    pub ceil_m2: usize,
    pub floor_m2: usize,
    pub first_phase: [f64; 4],
    pub importance: [f64; 4],
    pub case4_applicable: bool,
    pub chernoff_d: f64,
    pub bracketed_final_rounds: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EctTightness {
    pub k: usize,
    pub reg_t: f64,
    pub s_t: f64,
    pub i_t: f64,
    pub ratio: f64,
}

/// Summary of one simulated tournament. `ratio` is `INFINITY` when the
/// adversary paid nothing.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EctSimulation {
    pub winner: usize,
    pub best: usize,
    pub contradictions: usize,
    pub weighted_errors: u64,
    pub first_phase_rounds: usize,
    pub total_rounds: usize,
    pub importance_depth: usize,
    pub ratio: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EctStatus {
    match err {
        Error::SearchLimit { .. } => EctStatus::SearchLimit,
        Error::Io(_) => EctStatus::Io,
        Error::Format(_) | Error::Json(_) | Error::Csv(_) | Error::Dataset(_) => EctStatus::Format,
        Error::InvalidArgument(_) | Error::InvalidDistribution(_) | Error::NonFinite(_) => EctStatus::InvalidArgument,
        _ => EctStatus::Internal,
    }
}

/// Runs `body`, recording any error or panic for `ect_last_error`.
fn guard<F: FnOnce() -> Result<(), (EctStatus, String)>>(body: F) -> EctStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EctStatus::Ok,
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
            set_error(format!("panic: {msg}"));
            EctStatus::Panic
        }
    }
}

fn core<T>(r: ect_core::Result<T>) -> Result<T, (EctStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (EctStatus, String) {
    (EctStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EctStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EctStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn semantics(pool: c_int) -> Semantics {
    if pool != 0 {
        Semantics::Pool
    } else {
        Semantics::Complete
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ect_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next `ect_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ect_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn boxed(model: ReductionModel, out: *mut *mut EctModel) {
    unsafe { *out = Box::into_raw(Box::new(EctModel { inner: model })) };
}

/// Loads a model file written by `ect train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ect_model_load(path: *const c_char, out: *mut *mut EctModel) -> EctStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = str_arg(path, "path")?;
        boxed(core(load_model(Path::new(p)))?, out);
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ect_model_from_json(json: *const c_char, out: *mut *mut EctModel) -> EctStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        boxed(core(model_from_json(text))?, out);
        Ok(())
    })
}

/// Number of labels of a model.
///
/// # Safety
/// `model` must come from `ect_model_load` or `ect_model_from_json`.
#[no_mangle]
pub unsafe extern "C" fn ect_model_k(model: *const EctModel, out: *mut usize) -> EctStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.inner.k;
        Ok(())
    })
}

/// Predicts the label index for one feature vector of length `len`.
///
/// # Safety
/// `features` must point to `len` doubles; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ect_model_decode(
    model: *const EctModel,
    features: *const f64,
    len: usize,
    label: *mut usize,
) -> EctStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let label = label.as_mut().ok_or_else(|| null("label"))?;
        if features.is_null() && len > 0 {
            return Err(null("features"));
        }
        let x: &[f64] = if len == 0 { &[] } else { std::slice::from_raw_parts(features, len) };
        if let Some(names) = &m.inner.feature_names {
            if names.len() != len {
                return Err((
                    EctStatus::InvalidArgument,
                    format!("model expects {} features, got {len}", names.len()),
                ));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err((EctStatus::InvalidArgument, "features must be finite".into()));
        }
        *label = predict_label(&m.inner, x);
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ect_model_free(model: *mut EctModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Closed-form depth figures for `k` labels and `m` tournaments.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ect_depth_bounds(k: usize, m: usize, out: *mut EctDepthBounds) -> EctStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let b = core(depth_bounds(k, m))?;
        *out = EctDepthBounds {
            k: b.k,
            m: b.m,
            ceil_m2: b.ceil_m2,
            floor_m2: b.floor_m2,
            first_phase: b.first_phase,
            importance: b.importance,
            case4_applicable: b.case4_applicable,
            chernoff_d: b.chernoff_d,
            bracketed_final_rounds: b.bracketed_final_rounds,
        };
        Ok(())
    })
}

/// Parity-cost construction for `k` a power of two, at least 4.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ect_tightness(k: usize, out: *mut EctTightness) -> EctStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t = core(tightness_example(k))?;
        *out = EctTightness {
            k: t.k,
            reg_t: t.reg_t,
            s_t: t.s_t,
            i_t: t.i_t,
            ratio: t.ratio,
        };
        Ok(())
    })
}

/// Exhaustive minimum weighted error that dethrones the best label.
/// `pool` selects pool semantics; `cap` of 0 means the default cap.
/// Returns `SearchLimit` when the instance is too large.
///
/// # Safety
/// `cost` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ect_min_dethroning_cost(
    k: usize,
    m: usize,
    pool: c_int,
    cap: u64,
    cost: *mut u32,
) -> EctStatus {
    guard(|| {
        let cost = cost.as_mut().ok_or_else(|| null("cost"))?;
        let mut opts = SearchOptions::default();
        if cap > 0 {
            opts.cap = cap;
        }
        let r = core(min_dethroning_cost(&TournamentConfig::new(k, m, semantics(pool)), &opts))?;
        *cost = r.cost;
        Ok(())
    })
}

/// Plays one tournament with label 0 best. `adversary_json` is an
/// adversary model such as `{"kind":"budget_full_lie","budget":2}`, or NULL
/// for an honest comparator.
///
/// # Safety
/// `adversary_json` must be NULL or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ect_simulate(
    k: usize,
    m: usize,
    pool: c_int,
    adversary_json: *const c_char,
    out: *mut EctSimulation,
) -> EctStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let adv: AdversaryModel = if adversary_json.is_null() {
            AdversaryModel::None
        } else {
            serde_json::from_str(str_arg(adversary_json, "adversary_json")?)
                .map_err(|e| (EctStatus::InvalidArgument, format!("adversary: {e}")))?
        };
        if k < 2 {
            return Err((EctStatus::InvalidArgument, format!("need k >= 2, got {k}")));
        }
        core(adv.validate(k))?;
        let run = core(run_tournament(&TournamentConfig::new(k, m, semantics(pool)), &Truth::ranked(k), &adv))?;
        *out = EctSimulation {
            winner: run.winner,
            best: run.best,
            contradictions: run.contradictions,
            weighted_errors: run.weighted_errors,
            first_phase_rounds: run.first_phase_rounds,
            total_rounds: run.total_rounds,
            importance_depth: run.depth,
            ratio: match run.ratio.ratio {
                Ratio::Finite(v) => v,
                Ratio::Unbounded => f64::INFINITY,
            },
        };
        Ok(())
    })
}
