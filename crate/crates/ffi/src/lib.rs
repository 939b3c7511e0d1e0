//! C ABI over the rumour engines.
//!
//! Objects cross the boundary as opaque handles created by `*_new` functions
//! and released by the matching `*_free`. Every fallible call returns a
//! [`RumourStatus`]; the message of the most recent failure on the calling
//! thread is available from [`rumour_last_error`]. Panics are caught at the
//! boundary and reported as [`RumourStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rumour::config::parse_config;
use rumour::engine::{self, BasicState, Sides};
use rumour::experiment::run_experiment;
use rumour::field::StaticField;
use rumour::keyed::{derive_seed, KeyedStream, Purpose};
use rumour::law::{overshoot_cdf_exact, percolation_criterion, OvershootQuery, Verdict};
use rumour::oracles::{exact_tau_distribution, EnumerationSpec};
use rumour::react::{self, ReactivationState, Window};
use rumour::sites::{SiteEnvironment, Sites};
use rumour::{Error, RadiusLaw};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RumourStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidLaw = 3,
    InvalidUtf8 = 4,
    BudgetExceeded = 5,
    NoRenewalsFound = 6,
    MomentTooLow = 7,
    Inconclusive = 8,
    Config = 9,
    InvariantViolation = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RumourVerdict {
    NoPercolation = 0,
    PercolatesWithPositiveProb = 1,
    Inconclusive = 2,
}

/// Snapshot of a process after some number of steps.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RumourFront {
    pub n: u64,
    pub l: i64,
    pub r: i64,
    pub active_count: u64,
    pub extinct: bool,
}

/// A radius law.
pub struct RumourLaw {
    inner: RadiusLaw,
}

/// A basic-model run with its own random field and site environment.
pub struct RumourSim {
    field: StaticField,
    sites: Sites,
    state: BasicState,
}

/// A reactivation-model run.
pub struct RumourReactSim {
    law: RadiusLaw,
    p2: f64,
    stream: KeyedStream,
    window: Window,
    state: ReactivationState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> RumourStatus {
    match e {
        Error::InvalidLaw(_) => RumourStatus::InvalidLaw,
        Error::InvalidArgument(_) => RumourStatus::InvalidArgument,
        Error::Inconclusive(_) => RumourStatus::Inconclusive,
        Error::MomentTooLow { .. } => RumourStatus::MomentTooLow,
        Error::NoRenewalsFound => RumourStatus::NoRenewalsFound,
        Error::BudgetExceeded { .. } => RumourStatus::BudgetExceeded,
        Error::Config(_) => RumourStatus::Config,
        Error::InvariantViolation(_) => RumourStatus::InvariantViolation,
        Error::Io(_) | Error::Json(_) => RumourStatus::Io,
    }
}

/// Runs `f`, recording failures and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), RumourStatus>) -> RumourStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RumourStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            RumourStatus::Panic
        }
    }
}

fn fail(e: Error) -> RumourStatus {
    set_last_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RumourStatus {
    set_last_error(format!("{what} is null"));
    RumourStatus::NullPointer
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, RumourStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, RumourStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, RumourStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        RumourStatus::InvalidUtf8
    })
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), RumourStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), RumourStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rumour_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rumour_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn rumour_status_name(status: RumourStatus) -> *const c_char {
    let s: &'static str = match status {
        RumourStatus::Ok => "ok\0",
        RumourStatus::NullPointer => "null pointer\0",
        RumourStatus::InvalidArgument => "invalid argument\0",
        RumourStatus::InvalidLaw => "invalid law\0",
        RumourStatus::InvalidUtf8 => "invalid UTF-8\0",
        RumourStatus::BudgetExceeded => "enumeration budget exceeded\0",
        RumourStatus::NoRenewalsFound => "no renewals found\0",
        RumourStatus::MomentTooLow => "moment too low\0",
        RumourStatus::Inconclusive => "inconclusive\0",
        RumourStatus::Config => "invalid configuration\0",
        RumourStatus::InvariantViolation => "invariant violation\0",
        RumourStatus::Io => "i/o error\0",
        RumourStatus::Panic => "panic\0",
    };
    s.as_ptr().cast()
}

fn law_result(law: rumour::Result<RadiusLaw>, out: *mut *mut RumourLaw) -> RumourStatus {
    guard(|| {
        let inner = law.map_err(fail)?;
        unsafe { emit(out, RumourLaw { inner }) }
    })
}

/// `I = c` almost surely.
#[no_mangle]
pub extern "C" fn rumour_law_constant(c: u64, out: *mut *mut RumourLaw) -> RumourStatus {
    let law = RadiusLaw::constant(c);
    law_result(law.validate().map(|_| law.clone()), out)
}

/// Geometric on `{0, 1, ...}` with `P(I = k) = (1 - q) q^k`.
#[no_mangle]
pub extern "C" fn rumour_law_geometric(q: f64, out: *mut *mut RumourLaw) -> RumourStatus {
    law_result(RadiusLaw::geometric(q), out)
}

/// Geometric on `{1, 2, ...}`.
#[no_mangle]
pub extern "C" fn rumour_law_geometric_min1(q: f64, out: *mut *mut RumourLaw) -> RumourStatus {
    law_result(RadiusLaw::geometric_min1(q), out)
}

/// `P(I > i) = c (i + 1)^(-alpha)`.
#[no_mangle]
pub extern "C" fn rumour_law_polynomial_tail(alpha: f64, c: f64, out: *mut *mut RumourLaw) -> RumourStatus {
    law_result(RadiusLaw::polynomial_tail(alpha, c), out)
}

/// Finite law from `len` probabilities for radii `0..len`.
///
/// # Safety
/// `pmf` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_finite(pmf: *const f64, len: usize, out: *mut *mut RumourLaw) -> RumourStatus {
    if pmf.is_null() {
        return null("pmf");
    }
    let values = std::slice::from_raw_parts(pmf, len).to_vec();
    law_result(RadiusLaw::finite(values), out)
}

/// Law from its JSON form, e.g. `{"kind":"geometric","q":0.5}`.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_from_json(json: *const c_char, out: *mut *mut RumourLaw) -> RumourStatus {
    let s = match text(json, "json") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let parsed = serde_json::from_str::<RadiusLaw>(s)
        .map_err(Error::from)
        .and_then(|law| law.validate().map(|_| law));
    law_result(parsed, out)
}

/// # Safety
/// `law` must come from a `rumour_law_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_free(law: *mut RumourLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// `P(I <= i)`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_cdf(law: *const RumourLaw, i: i64, out: *mut f64) -> RumourStatus {
    guard(|| write(out, borrow(law, "law")?.inner.cdf(i)))
}

/// `a_n = prod_{i=0}^{n} P(I <= i)`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_a_n(law: *const RumourLaw, n: u64, out: *mut f64) -> RumourStatus {
    guard(|| write(out, borrow(law, "law")?.inner.a_n(n)))
}

/// Percolation verdict from the `a_n` series.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_criterion(
    law: *const RumourLaw,
    nmax: i64,
    tol: f64,
    out: *mut RumourVerdict,
) -> RumourStatus {
    guard(|| {
        let outcome = percolation_criterion(&borrow(law, "law")?.inner, nmax, tol).map_err(fail)?;
        let verdict = match outcome.verdict {
            Verdict::NoPercolation => RumourVerdict::NoPercolation,
            Verdict::PercolatesWithPositiveProb => RumourVerdict::PercolatesWithPositiveProb,
            Verdict::Inconclusive => RumourVerdict::Inconclusive,
        };
        write(out, verdict)
    })
}

/// `P(O <= m)` for the overshoot `O`, with a certified error bound. `eps`
/// bounds the truncation error for unbounded laws.
///
/// # Safety
/// `law` must be a live handle; `value` and `error_bound` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_law_overshoot_cdf(
    law: *const RumourLaw,
    m: u64,
    eps: f64,
    value: *mut f64,
    error_bound: *mut f64,
) -> RumourStatus {
    guard(|| {
        let law = &borrow(law, "law")?.inner;
        let query = OvershootQuery::with_tolerance(law.clone(), eps).map_err(fail)?;
        let p = overshoot_cdf_exact(&query, m).map_err(fail)?;
        write(value, p.value)?;
        write(error_bound, p.error_bound)
    })
}

/// Exact `P(τ = k)` by enumeration up to `horizon` steps.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_oracle_tau_prob(
    law: *const RumourLaw,
    horizon: u64,
    k: u64,
    out: *mut f64,
) -> RumourStatus {
    guard(|| {
        let law = &borrow(law, "law")?.inner;
        let spec = EnumerationSpec::new(law.clone(), horizon).map_err(fail)?;
        let table = exact_tau_distribution(&spec).map_err(fail)?;
        write(out, table.tau_prob(k))
    })
}

fn basic_front(s: &BasicState) -> RumourFront {
    RumourFront {
        n: s.n,
        l: s.l,
        r: s.r,
        active_count: s.active_count(),
        extinct: s.is_extinct(),
    }
}

/// New basic-model run from `{0}`. `p_occ` below 1 makes each vertex other
/// than the origin occupied with that probability.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_sim_new(
    law: *const RumourLaw,
    seed: u64,
    p_occ: f64,
    out: *mut *mut RumourSim,
) -> RumourStatus {
    guard(|| {
        let law = &borrow(law, "law")?.inner;
        let env = if p_occ == 1.0 {
            SiteEnvironment::AllOccupied
        } else {
            SiteEnvironment::BernoulliSites { p_occ }
        };
        let problems = env.problems();
        if !problems.is_empty() {
            return Err(fail(Error::InvalidArgument(problems.join("; "))));
        }
        let sim = RumourSim {
            field: StaticField::new(law.clone(), derive_seed(seed, 0, Purpose::Field)),
            sites: Sites::new(env, derive_seed(seed, 0, Purpose::Sites)),
            state: BasicState::init(),
        };
        emit(out, sim)
    })
}

/// # Safety
/// `sim` must come from [`rumour_sim_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rumour_sim_free(sim: *mut RumourSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Current state.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_sim_state(sim: *const RumourSim, out: *mut RumourFront) -> RumourStatus {
    guard(|| write(out, basic_front(&borrow(sim, "sim")?.state)))
}

/// Advances up to `steps` steps, stopping early at extinction, and writes the
/// resulting state.
///
/// # Safety
/// `sim` must be a live handle; `out` may be null.
#[no_mangle]
pub unsafe extern "C" fn rumour_sim_advance(sim: *mut RumourSim, steps: u64, out: *mut RumourFront) -> RumourStatus {
    guard(|| {
        let sim = borrow_mut(sim, "sim")?;
        for _ in 0..steps {
            if sim.state.is_extinct() {
                break;
            }
            sim.state = engine::step(&sim.state, Sides::Both, &mut sim.field, &mut sim.sites);
        }
        if !out.is_null() {
            *out = basic_front(&sim.state);
        }
        Ok(())
    })
}

/// New reactivation run from `{0}`. `window` 0 tracks every informed vertex;
/// a positive value only consults clocks within that distance of a front.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rumour_react_new(
    law: *const RumourLaw,
    p2: f64,
    seed: u64,
    window: u64,
    out: *mut *mut RumourReactSim,
) -> RumourStatus {
    guard(|| {
        let law = &borrow(law, "law")?.inner;
        if !(0.0..=1.0).contains(&p2) {
            return Err(fail(Error::InvalidArgument(format!("p2 = {p2} is not a probability"))));
        }
        let sim = RumourReactSim {
            law: law.clone(),
            p2,
            stream: KeyedStream::new(derive_seed(seed, 0, Purpose::Reactivation)),
            window: if window == 0 { Window::Exact } else { Window::Within(window) },
            state: ReactivationState::init(),
        };
        emit(out, sim)
    })
}

/// # Safety
/// `sim` must come from [`rumour_react_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rumour_react_free(sim: *mut RumourReactSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances exactly `steps` steps and writes the resulting state.
///
/// # Safety
/// `sim` must be a live handle; `out` may be null.
#[no_mangle]
pub unsafe extern "C" fn rumour_react_advance(
    sim: *mut RumourReactSim,
    steps: u64,
    out: *mut RumourFront,
) -> RumourStatus {
    guard(|| {
        let sim = borrow_mut(sim, "sim")?;
        for _ in 0..steps {
            sim.state = react::step_react(&sim.state, &sim.law, sim.p2, &sim.stream, sim.window);
        }
        if !out.is_null() {
            *out = RumourFront {
                n: sim.state.n,
                l: sim.state.l,
                r: sim.state.r,
                active_count: sim.state.active.len() as u64,
                extinct: false,
            };
        }
        Ok(())
    })
}

/// Parses a TOML experiment config and writes its artifacts to `out_dir`
/// using `workers` threads.
///
/// # Safety
/// `config` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn rumour_run_config(
    config: *const c_char,
    out_dir: *const c_char,
    workers: usize,
) -> RumourStatus {
    guard(|| {
        let config = parse_config(text(config, "config")?).map_err(fail)?;
        let dir = text(out_dir, "out_dir")?;
        run_experiment(&config, Path::new(dir), workers.max(1)).map_err(fail)?;
        Ok(())
    })
}
