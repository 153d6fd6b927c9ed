//! C ABI over `nscascade`.
//!
//! Every function returns an [`NscStatus`]. Results are written through out
//! pointers. On failure, [`nsc_last_error`] describes the most recent error on
//! the calling thread. Objects are passed around as opaque handles and must
//! be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nscascade::bounds::{
    ducb_upper_bound, gamma_for_horizon, regret_lower_bound, swucb_upper_bound, tau_for_horizon,
    BoundInputs, GapProfile,
};
use nscascade::environment::{build_synthetic_schedule, load_schedule_csv};
use nscascade::harness::run_experiment;
use nscascade::model::{expected_reward, per_step_regret};
use nscascade::{
    AttractionSchedule, AttractionVector, ClickOutcome, Error, ExperimentConfig, ItemId,
    PerturbationSpec, PolicySpec, RankedList, RankingPolicy, StartPhase,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    BoundPrecondition = 5,
    Config = 6,
    Panic = 7,
}

/// A ranking policy together with its list length.
pub struct NscPolicy {
    inner: Box<dyn RankingPolicy>,
    num_items: usize,
    k: usize,
}

/// A piecewise-constant attraction schedule.
pub struct NscSchedule {
    inner: AttractionSchedule,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nsc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

struct Failure(NscStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } => NscStatus::Parse,
            Error::Io { .. } => NscStatus::Io,
            Error::BoundPrecondition(_) => NscStatus::BoundPrecondition,
            Error::Config(_) => NscStatus::Config,
            _ => NscStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(NscStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            NscStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            NscStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(NscStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn list_arg(items: *const u32, len: usize, num_items: usize) -> Result<RankedList, Failure> {
    let ids = slice_arg(items, len, "items")?;
    Ok(RankedList::from_ids(ids, num_items)?)
}

unsafe fn alpha_arg(alpha: *const f64, len: usize) -> Result<AttractionVector, Failure> {
    Ok(AttractionVector::new(
        slice_arg(alpha, len, "alpha")?.to_vec(),
    )?)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    non_null(out, "out")?;
    out.write(value);
    Ok(())
}

/// Creates a policy from a JSON spec such as `{"name": "cascade_swucb", "tau": 500}`.
/// Unset parameters take their horizon-based defaults. `seed` drives any
/// internal randomness.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_policy_new(
    spec_json: *const c_char,
    num_items: usize,
    k: usize,
    horizon: u64,
    seed: u64,
    out: *mut *mut NscPolicy,
) -> NscStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec: PolicySpec = serde_json::from_str(str_arg(spec_json, "spec_json")?)
            .map_err(|e| Failure(NscStatus::Config, format!("policy spec: {e}")))?;
        let inner = spec.build(num_items, k, horizon, seed)?;
        out.write(Box::into_raw(Box::new(NscPolicy {
            inner,
            num_items,
            k,
        })));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from [`nsc_policy_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsc_policy_free(policy: *mut NscPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Writes the list for step `t` as `k` one-based item ids.
///
/// # Safety
/// `policy` must be live and `items_out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn nsc_policy_select(
    policy: *mut NscPolicy,
    t: u64,
    items_out: *mut u32,
    capacity: usize,
) -> NscStatus {
    guard(|| {
        non_null(policy, "policy")?;
        non_null(items_out, "items_out")?;
        let p = &mut *policy;
        if capacity < p.k {
            return Err(invalid(format!("capacity {capacity} is below K = {}", p.k)));
        }
        let list = p.inner.select(t);
        for (i, a) in list.items().iter().enumerate() {
            items_out.add(i).write(a.get());
        }
        Ok(())
    })
}

/// Feeds back the click on the list shown at step `t`. `click_position` is
/// 1-based; `k + 1` means no click.
///
/// # Safety
/// `policy` must be live and `items` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn nsc_policy_update(
    policy: *mut NscPolicy,
    t: u64,
    items: *const u32,
    len: usize,
    click_position: usize,
) -> NscStatus {
    guard(|| {
        non_null(policy, "policy")?;
        let p = &mut *policy;
        let list = list_arg(items, len, p.num_items)?;
        let click = ClickOutcome::new(click_position, len)?;
        p.inner.update(t, &list, click)?;
        Ok(())
    })
}

/// Loads a schedule dump written by `nscascade synth`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_load(
    path: *const c_char,
    out: *mut *mut NscSchedule,
) -> NscStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = load_schedule_csv(Path::new(str_arg(path, "path")?))?;
        out.write(Box::into_raw(Box::new(NscSchedule { inner })));
        Ok(())
    })
}

/// Builds a synthetic perturbation schedule around `base` (length `num_items`).
/// `start_with_default` selects the phase of the first epoch.
///
/// # Safety
/// `base` must hold `num_items` values and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_synthetic(
    base: *const f64,
    num_items: usize,
    k: usize,
    m1: u64,
    m2: u64,
    num_boosted: usize,
    boost_value: f64,
    num_cycles: u64,
    start_with_default: bool,
    fixed_subset: bool,
    seed: u64,
    out: *mut *mut NscSchedule,
) -> NscStatus {
    guard(|| {
        non_null(out, "out")?;
        let base = alpha_arg(base, num_items)?;
        let spec = PerturbationSpec {
            m1,
            m2,
            num_boosted,
            boost_value,
            num_cycles,
            start_phase: if start_with_default {
                StartPhase::Default
            } else {
                StartPhase::Perturbed
            },
            fixed_subset,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = build_synthetic_schedule(&base, k, &spec, &mut rng)?;
        out.write(Box::into_raw(Box::new(NscSchedule { inner })));
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_free(schedule: *mut NscSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// # Safety
/// `schedule` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_horizon(
    schedule: *const NscSchedule,
    out: *mut u64,
) -> NscStatus {
    guard(|| {
        non_null(schedule, "schedule")?;
        write_out(out, (*schedule).inner.horizon())
    })
}

/// # Safety
/// `schedule` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_num_items(
    schedule: *const NscSchedule,
    out: *mut usize,
) -> NscStatus {
    guard(|| {
        non_null(schedule, "schedule")?;
        write_out(out, (*schedule).inner.num_items())
    })
}

/// # Safety
/// `schedule` must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_segment_count(
    schedule: *const NscSchedule,
    out: *mut usize,
) -> NscStatus {
    guard(|| {
        non_null(schedule, "schedule")?;
        write_out(out, (*schedule).inner.segments().len())
    })
}

/// Copies the attraction vector in force at step `t` into `alpha_out`.
///
/// # Safety
/// `schedule` must be live and `alpha_out` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn nsc_schedule_alpha_at(
    schedule: *const NscSchedule,
    t: u64,
    alpha_out: *mut f64,
    capacity: usize,
) -> NscStatus {
    guard(|| {
        non_null(schedule, "schedule")?;
        non_null(alpha_out, "alpha_out")?;
        let alpha = (*schedule).inner.alpha_at(t)?;
        if capacity < alpha.len() {
            return Err(invalid(format!(
                "capacity {capacity} is below L = {}",
                alpha.len()
            )));
        }
        ptr::copy_nonoverlapping(alpha.as_slice().as_ptr(), alpha_out, alpha.len());
        Ok(())
    })
}

/// Probability that the list (1-based ids) receives a click under `alpha`.
///
/// # Safety
/// `alpha` must hold `num_items` values, `items` must hold `k`, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsc_expected_reward(
    alpha: *const f64,
    num_items: usize,
    items: *const u32,
    k: usize,
    out: *mut f64,
) -> NscStatus {
    guard(|| {
        let alpha = alpha_arg(alpha, num_items)?;
        let list = list_arg(items, k, num_items)?;
        write_out(out, expected_reward(&list, &alpha)?)
    })
}

/// Expected reward gap between the best list of the same length and this one.
///
/// # Safety
/// As for [`nsc_expected_reward`].
#[no_mangle]
pub unsafe extern "C" fn nsc_per_step_regret(
    alpha: *const f64,
    num_items: usize,
    items: *const u32,
    k: usize,
    out: *mut f64,
) -> NscStatus {
    guard(|| {
        let alpha = alpha_arg(alpha, num_items)?;
        let list = list_arg(items, k, num_items)?;
        write_out(out, per_step_regret(&list, &alpha)?)
    })
}

/// Discount factor for horizon `n`; a negative `breakpoints` means unknown.
#[no_mangle]
pub extern "C" fn nsc_gamma_for_horizon(horizon: u64, breakpoints: i64) -> f64 {
    gamma_for_horizon(horizon, u64::try_from(breakpoints).ok())
}

/// Window length for horizon `n`; a negative `breakpoints` means unknown.
#[no_mangle]
pub extern "C" fn nsc_tau_for_horizon(horizon: u64, breakpoints: i64) -> u64 {
    tau_for_horizon(horizon, u64::try_from(breakpoints).ok())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_regret_lower_bound(
    num_items: usize,
    k: usize,
    delta: f64,
    p: f64,
    horizon: u64,
    out: *mut f64,
) -> NscStatus {
    guard(|| write_out(out, regret_lower_bound(num_items, k, delta, p, horizon)?))
}

/// DUCB upper bound with the same gap `gap` for every item.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_ducb_upper_bound(
    num_items: usize,
    horizon: u64,
    breakpoints: u64,
    gamma: f64,
    epsilon: f64,
    gap: f64,
    out: *mut f64,
) -> NscStatus {
    guard(|| {
        let inputs = BoundInputs {
            num_items,
            horizon,
            breakpoints,
            gamma,
            tau: 1,
            epsilon,
        };
        let v = ducb_upper_bound(&inputs, &GapProfile::uniform(num_items, gap))?;
        write_out(out, v)
    })
}

/// SWUCB upper bound with the same gap `gap` for every item.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsc_swucb_upper_bound(
    num_items: usize,
    horizon: u64,
    breakpoints: u64,
    tau: u64,
    epsilon: f64,
    gap: f64,
    out: *mut f64,
) -> NscStatus {
    guard(|| {
        let inputs = BoundInputs {
            num_items,
            horizon,
            breakpoints,
            gamma: 0.75,
            tau,
            epsilon,
        };
        let v = swucb_upper_bound(&inputs, &GapProfile::uniform(num_items, gap))?;
        write_out(out, v)
    })
}

/// Runs the experiment in the JSON config at `config_path` and writes the
/// regret CSV to `out_path`. `workers = 0` uses all cores.
///
/// # Safety
/// Both paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nsc_run_config(
    config_path: *const c_char,
    out_path: *const c_char,
    workers: usize,
) -> NscStatus {
    guard(|| {
        let config = ExperimentConfig::load(Path::new(str_arg(config_path, "config_path")?))?;
        let out_path = Path::new(str_arg(out_path, "out_path")?);
        let result = run_experiment(&config, workers)?;
        let mut buf = Vec::new();
        nscascade::cli::write_regret_csv(&config, &result, &mut buf)?;
        std::fs::write(out_path, buf).map_err(|e| {
            Failure(
                NscStatus::Io,
                format!("cannot write {}: {e}", out_path.display()),
            )
        })
    })
}

/// Whether the 1-based `id` names one of `num_items` items.
#[no_mangle]
pub extern "C" fn nsc_item_id_is_valid(id: u32, num_items: usize) -> bool {
    ItemId::new(id).is_ok_and(|a| a.index() < num_items)
}
