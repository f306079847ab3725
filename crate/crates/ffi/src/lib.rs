//! C interface to the `aggregative` solver library.
//!
//! Games and results are opaque handles owned by the caller and released with
//! the matching `*_free` function. Every fallible call returns an
//! [`AggStatus`]; on failure [`agg_last_error`] describes what went wrong on
//! the calling thread. Matrices are dense and row-major.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use aggregative::algorithms::{two_level_wardrop, asymmetric_projection, extragradient, EquilibriumResult, SolverConfig, StepSize};
use aggregative::analysis::epsilon_nash;
use aggregative::applications::ev::{build_ev_game, EvParams};
use aggregative::game::{AggregativeGame, ConstraintSet, CostModel, Coupling};
use aggregative::operators::Flavor;
use aggregative::Error;
use nalgebra::DMatrix;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Infeasible = 4,
    NotStronglyMonotone = 5,
    SolverFailure = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggAlgorithm {
    /// Two-level scheme (Wardrop).
    TwoLevel = 0,
    /// Asymmetric projection algorithm on the Nash operator.
    ApaNash = 1,
    /// Asymmetric projection algorithm on the Wardrop operator.
    ApaWardrop = 2,
    ExtragradientNash = 3,
    ExtragradientWardrop = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggSolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed step size; zero or negative selects it from the operator constants.
    pub tau: f64,
    pub seed: u64,
}

/// Opaque game handle.
pub struct AggGame(AggregativeGame);

/// Opaque solver result handle.
pub struct AggResult(EquilibriumResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AggStatus {
    match e {
        Error::Dimension(_) | Error::Index { .. } => AggStatus::DimensionMismatch,
        Error::Invalid(_) | Error::Unbounded(_) | Error::NonConvex(_) | Error::Config(_) => AggStatus::InvalidArgument,
        Error::Infeasible(_) => AggStatus::Infeasible,
        Error::NotStronglyMonotone(_) => AggStatus::NotStronglyMonotone,
        _ => AggStatus::SolverFailure,
    }
}

fn fail(status: AggStatus, msg: impl Into<String>) -> AggStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, turning library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), AggStatus>) -> AggStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AggStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(AggStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: aggregative::Result<T>) -> Result<T, AggStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], AggStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(AggStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), AggStatus> {
    if len != src.len() {
        return Err(fail(
            AggStatus::DimensionMismatch,
            format!("output buffer has length {len}, expected {}", src.len()),
        ));
    }
    if len > 0 {
        if out.is_null() {
            return Err(fail(AggStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    }
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn agg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn agg_solver_options_default() -> AggSolverOptions {
    let d = SolverConfig::default();
    AggSolverOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        tau: 0.0,
        seed: d.seed,
    }
}

/// Quadratic game J_i = 1/2 x'Qx + (C sigma + offset_i)'x on boxes
/// lo_i <= x_i <= hi_i. `q` and `c` are n x n; `offsets`, `lo`, `hi` are
/// m x n. `cap` (length n, may be NULL for no coupling) bounds the average
/// strategy componentwise.
///
/// # Safety
/// Every non-null pointer must reference the stated number of readable values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agg_game_quadratic(
    m: usize,
    n: usize,
    q: *const f64,
    c: *const f64,
    offsets: *const f64,
    lo: *const f64,
    hi: *const f64,
    cap: *const f64,
    out: *mut *mut AggGame,
) -> AggStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AggStatus::NullPointer, "out is null"));
        }
        if m == 0 || n == 0 {
            return Err(fail(AggStatus::InvalidArgument, "need m >= 1 and n >= 1"));
        }
        let q = input(q, n * n, "q")?;
        let c = input(c, n * n, "c")?;
        let offsets = input(offsets, m * n, "offsets")?;
        let lo = input(lo, m * n, "lo")?;
        let hi = input(hi, m * n, "hi")?;
        let coupling = if cap.is_null() {
            Coupling::none(m, n)
        } else {
            Coupling::PerComponentCap {
                cap: input(cap, n, "cap")?.to_vec(),
                m,
            }
        };
        let sets = (0..m)
            .map(|i| ConstraintSet::boxed(lo[i * n..(i + 1) * n].to_vec(), hi[i * n..(i + 1) * n].to_vec()))
            .collect::<aggregative::Result<Vec<_>>>();
        let cost = CostModel::Quadratic {
            q: DMatrix::from_row_slice(n, n, q),
            c: DMatrix::from_row_slice(n, n, c),
            offsets: offsets.chunks(n).map(|r| r.to_vec()).collect(),
        };
        let game = lib(sets.and_then(|s| AggregativeGame::new(m, n, cost, s, coupling)))?;
        store(out, AggGame(game));
        Ok(())
    })
}

/// EV charging game with `m` randomly drawn vehicles over 24 hourly slots and
/// the bundled demand profile; `cap` bounds the average charging rate per slot.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn agg_game_ev(m: usize, seed: u64, cap: f64, out: *mut *mut AggGame) -> AggStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AggStatus::NullPointer, "out is null"));
        }
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(fail(AggStatus::InvalidArgument, format!("cap must be positive, got {cap}")));
        }
        let params = lib(EvParams::standard(m, seed))?.with_cap(cap);
        let game = lib(build_ev_game(&params))?;
        store(out, AggGame(game));
        Ok(())
    })
}

/// # Safety
/// `game` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agg_game_free(game: *mut AggGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of agents, or 0 for NULL.
///
/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn agg_game_agents(game: *const AggGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.m())
}

/// Strategy dimension per agent, or 0 for NULL.
///
/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn agg_game_components(game: *const AggGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.n())
}

/// Number of coupling constraints, or 0 for NULL.
///
/// # Safety
/// `game` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn agg_game_constraints(game: *const AggGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.coupling().rows())
}

/// Solves `game`. `options` may be NULL for the defaults. Running out of
/// iterations is not an error: check [`agg_result_converged`].
///
/// # Safety
/// `game` must be a live handle, `options` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn agg_solve(
    game: *const AggGame,
    algorithm: AggAlgorithm,
    options: *const AggSolverOptions,
    out: *mut *mut AggResult,
) -> AggStatus {
    guard(|| {
        let (Some(game), false) = (game.as_ref(), out.is_null()) else {
            return Err(fail(AggStatus::NullPointer, "game or out is null"));
        };
        let o = options.as_ref().copied().unwrap_or_else(|| agg_solver_options_default());
        if !o.tau.is_finite() {
            return Err(fail(AggStatus::InvalidArgument, "tau must be finite"));
        }
        let cfg = SolverConfig {
            tol: o.tol,
            max_iter: o.max_iter,
            tau: if o.tau > 0.0 { StepSize::Fixed(o.tau) } else { StepSize::Auto },
            seed: o.seed,
            record_trace: false,
            ..SolverConfig::default()
        };
        let g = &game.0;
        let r = lib(match algorithm {
            AggAlgorithm::TwoLevel => two_level_wardrop(g, &cfg),
            AggAlgorithm::ApaNash => asymmetric_projection(g, Flavor::Nash, &cfg),
            AggAlgorithm::ApaWardrop => asymmetric_projection(g, Flavor::Wardrop, &cfg),
            AggAlgorithm::ExtragradientNash => extragradient(g, Flavor::Nash, &cfg),
            AggAlgorithm::ExtragradientWardrop => extragradient(g, Flavor::Wardrop, &cfg),
        })?;
        store(out, AggResult(r));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn agg_result_free(result: *mut AggResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// 1 when the stopping rule was met, 0 otherwise (and for NULL).
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn agg_result_converged(result: *const AggResult) -> c_int {
    result.as_ref().map_or(0, |r| c_int::from(r.0.converged))
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn agg_result_iterations(result: *const AggResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.iterations)
}

/// Copies the m x n strategy profile (agent-major) into `out`; `len` must be m n.
///
/// # Safety
/// `result` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn agg_result_strategies(result: *const AggResult, out: *mut f64, len: usize) -> AggStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| fail(AggStatus::NullPointer, "result is null"))?;
        copy_out(r.0.x.entries(), out, len)
    })
}

/// Copies the average strategy (length n) into `out`.
///
/// # Safety
/// `result` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn agg_result_aggregate(result: *const AggResult, out: *mut f64, len: usize) -> AggStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| fail(AggStatus::NullPointer, "result is null"))?;
        copy_out(&r.0.aggregate(), out, len)
    })
}

/// Copies the coupling multipliers into `out`; `len` must equal
/// [`agg_game_constraints`].
///
/// # Safety
/// `result` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn agg_result_multipliers(result: *const AggResult, out: *mut f64, len: usize) -> AggStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| fail(AggStatus::NullPointer, "result is null"))?;
        copy_out(&r.0.lambda, out, len)
    })
}

/// Largest gain any agent gets from a unilateral feasible deviation.
///
/// # Safety
/// `game` and `result` must be live handles and `epsilon` writable.
#[no_mangle]
pub unsafe extern "C" fn agg_epsilon_nash(
    game: *const AggGame,
    result: *const AggResult,
    epsilon: *mut f64,
) -> AggStatus {
    guard(|| {
        let (Some(g), Some(r), false) = (game.as_ref(), result.as_ref(), epsilon.is_null()) else {
            return Err(fail(AggStatus::NullPointer, "null argument"));
        };
        *epsilon = lib(epsilon_nash(&g.0, &r.0.x))?.epsilon;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn pair(cap: *const f64) -> *mut AggGame {
        let (q, c) = ([1.0], [1.0]);
        let offsets = [-2.0, -2.0];
        let (lo, hi) = ([0.0, 0.0], [2.0, 2.0]);
        let mut g = ptr::null_mut();
        let s = unsafe { agg_game_quadratic(2, 1, q.as_ptr(), c.as_ptr(), offsets.as_ptr(), lo.as_ptr(), hi.as_ptr(), cap, &mut g) };
        assert_eq!(s, AggStatus::Ok);
        g
    }

    #[test]
    fn binding_cap_pair() {
        let cap = [0.5];
        let g = pair(cap.as_ptr());
        let opts = AggSolverOptions { tol: 1e-9, ..agg_solver_options_default() };
        unsafe {
            assert_eq!((agg_game_agents(g), agg_game_components(g), agg_game_constraints(g)), (2, 1, 1));
            let mut r = ptr::null_mut();
            assert_eq!(agg_solve(g, AggAlgorithm::ApaNash, &opts, &mut r), AggStatus::Ok);
            assert_eq!(agg_result_converged(r), 1);
            assert!(agg_result_iterations(r) > 0);
            let mut x = [0.0; 2];
            assert_eq!(agg_result_strategies(r, x.as_mut_ptr(), 2), AggStatus::Ok);
            assert!(x.iter().all(|v| (v - 0.5).abs() < 1e-6));
            let mut l = [0.0];
            assert_eq!(agg_result_multipliers(r, l.as_mut_ptr(), 1), AggStatus::Ok);
            assert!((l[0] - 1.5).abs() < 1e-5);
            let mut s = [0.0];
            assert_eq!(agg_result_aggregate(r, s.as_mut_ptr(), 1), AggStatus::Ok);
            assert!((s[0] - 0.5).abs() < 1e-6);
            let mut eps = -1.0;
            assert_eq!(agg_epsilon_nash(g, r, &mut eps), AggStatus::Ok);
            assert!(eps.abs() < 1e-6);
            // wrong buffer length
            assert_eq!(agg_result_strategies(r, x.as_mut_ptr(), 1), AggStatus::DimensionMismatch);
            assert!(!agg_last_error().is_null());
            agg_result_free(r);
            agg_game_free(g);
        }
    }

    #[test]
    fn errors_set_a_message() {
        unsafe {
            let mut g = ptr::null_mut();
            let s = agg_game_quadratic(0, 1, ptr::null(), ptr::null(), ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut g);
            assert_eq!(s, AggStatus::InvalidArgument);
            assert!(g.is_null());
            let msg = CStr::from_ptr(agg_last_error()).to_str().unwrap();
            assert!(msg.contains("m >= 1"), "{msg}");

            let q = [1.0];
            let s = agg_game_quadratic(1, 1, q.as_ptr(), ptr::null(), q.as_ptr(), q.as_ptr(), q.as_ptr(), ptr::null(), &mut g);
            assert_eq!(s, AggStatus::NullPointer);

            // lo > hi
            let (lo, hi) = ([1.0], [0.0]);
            let s = agg_game_quadratic(1, 1, q.as_ptr(), q.as_ptr(), q.as_ptr(), lo.as_ptr(), hi.as_ptr(), ptr::null(), &mut g);
            assert_ne!(s, AggStatus::Ok);

            assert_eq!(agg_game_ev(10, 0, -1.0, &mut g), AggStatus::InvalidArgument);
            assert_eq!(agg_game_ev(2, 0, 0.01, &mut g), AggStatus::Infeasible);
            let mut r = ptr::null_mut();
            assert_eq!(agg_solve(ptr::null(), AggAlgorithm::ApaNash, ptr::null(), &mut r), AggStatus::NullPointer);
            assert_eq!(agg_game_agents(ptr::null()), 0);
            agg_game_free(ptr::null_mut());
            agg_result_free(ptr::null_mut());
        }
    }

    #[test]
    fn ev_wardrop_needs_extragradient() {
        unsafe {
            let mut g = ptr::null_mut();
            assert_eq!(agg_game_ev(6, 1, 0.55, &mut g), AggStatus::Ok);
            assert_eq!(agg_game_components(g), 24);
            let mut r = ptr::null_mut();
            assert_eq!(agg_solve(g, AggAlgorithm::ApaWardrop, ptr::null(), &mut r), AggStatus::NotStronglyMonotone);
            assert!(r.is_null());
            assert_eq!(agg_solve(g, AggAlgorithm::ExtragradientWardrop, ptr::null(), &mut r), AggStatus::Ok);
            assert_eq!(agg_result_converged(r), 1);
            let mut sigma = [0.0; 24];
            assert_eq!(agg_result_aggregate(r, sigma.as_mut_ptr(), 24), AggStatus::Ok);
            assert!(sigma.iter().all(|s| *s <= 0.55 + 1e-4));
            agg_result_free(r);
            agg_game_free(g);
        }
    }

    #[test]
    fn last_error_is_cleared_by_a_successful_call() {
        unsafe {
            let mut g = ptr::null_mut();
            assert_ne!(agg_game_ev(10, 0, -1.0, &mut g), AggStatus::Ok);
            assert!(!agg_last_error().is_null());
            assert_eq!(agg_game_ev(10, 0, 0.55, &mut g), AggStatus::Ok);
            assert!(agg_last_error().is_null());
            agg_game_free(g);
        }
    }
}
