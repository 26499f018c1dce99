//! C ABI over `gbadmm`.
//!
//! Every fallible call returns a [`GbStatus`]; on failure the message is
//! available from [`gb_last_error_message`] on the same thread. Models and
//! solve results are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gbadmm::cli::presets;
use gbadmm::counterexample::{ce_spectral_radius, CeProblem};
use gbadmm::model::{self, BurgersSet, DislocationState, GbParams};
use gbadmm::quasiconvexity::{certify, find_epsilon0, reduce, CertifierParams};
use gbadmm::solvers::{admm_solve, alm_solve, AugLagParams, MultiplierState, SolveResult};
use gbadmm::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    NotConverged = 5,
    Diverged = 6,
    NoCertifiableEpsilon = 7,
    Internal = 8,
}

/// Opaque boundary model.
pub struct GbModel {
    inner: model::GbModel,
}

/// Opaque solve result.
pub struct GbSolveResult {
    inner: SolveResult,
}

/// Augmented-Lagrangian settings shared by ADMM and ALM.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GbAugLagParams {
    pub rho0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

/// Summary of a quasi-convexity grid certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GbCertSummary {
    pub pass: bool,
    pub min_s1: f64,
    pub max_det_b2: f64,
    pub points: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GbStatus {
    match e {
        Error::DimensionMismatch { .. } => GbStatus::DimensionMismatch,
        Error::SingularMatrix { .. } | Error::RankDeficiencyUnexpected(_) => GbStatus::Singular,
        Error::ConvergenceFailure { .. } => GbStatus::NotConverged,
        Error::Diverged { .. } | Error::NonFinite { .. } => GbStatus::Diverged,
        Error::NoCertifiableEpsilon { .. } => GbStatus::NoCertifiableEpsilon,
        Error::InvalidParameter { .. }
        | Error::InconsistentConstraints { .. }
        | Error::ConfigParse { .. }
        | Error::ConfigInvalid { .. } => GbStatus::InvalidArgument,
        Error::Io { .. } => GbStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), GbStatus>) -> GbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GbStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            GbStatus::Internal
        }
    }
}

fn fail(e: Error) -> GbStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> GbStatus {
    set_error(format!("null pointer: {what}"));
    GbStatus::NullPointer
}

fn invalid(msg: &str) -> GbStatus {
    set_error(msg.to_string());
    GbStatus::InvalidArgument
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], GbStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

fn boxed_model(bs: BurgersSet, p: GbParams, out: *mut *mut GbModel) -> Result<(), GbStatus> {
    let inner = model::GbModel::new(bs, p).map_err(fail)?;
    // SAFETY: callers check `out` before building the model.
    unsafe { *out = Box::into_raw(Box::new(GbModel { inner })) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a model from `n` Burgers vectors stored row-wise in `burgers`
/// (`3n` doubles). Angles are in radians.
///
/// # Safety
/// `burgers` must point to `3n` doubles, `axis` and `normal` to three doubles
/// each, and `out` must be a valid pointer to write the handle into.
#[no_mangle]
pub unsafe extern "C" fn gb_model_new(
    burgers: *const f64,
    n: usize,
    theta: f64,
    axis: *const f64,
    normal: *const f64,
    nu: f64,
    core_radius: f64,
    epsilon: f64,
    out: *mut *mut GbModel,
) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if burgers.is_null() {
            return Err(null("burgers"));
        }
        let a = read3(axis, "axis")?;
        let nrm = read3(normal, "normal")?;
        let vs = (0..n).map(|j| [*burgers.add(3 * j), *burgers.add(3 * j + 1), *burgers.add(3 * j + 2)]).collect();
        let bs = BurgersSet::new(vs).map_err(fail)?;
        let p = GbParams::new(theta, a, nrm, nu, core_radius, epsilon).map_err(fail)?;
        boxed_model(bs, p, out)
    })
}

/// The six-family {111} twist boundary in aluminium with `ε = θ²/400`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle into.
#[no_mangle]
pub unsafe extern "C" fn gb_model_fcc111(theta_deg: f64, out: *mut *mut GbModel) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (bs, p) = presets::preset_fcc111(theta_deg.to_radians()).map_err(fail)?;
        boxed_model(bs, p, out)
    })
}

/// The three in-plane {111} families with `ε = θ²/400`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle into.
#[no_mangle]
pub unsafe extern "C" fn gb_model_fcc111_inplane(theta_deg: f64, out: *mut *mut GbModel) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (bs, p) = presets::preset_fcc111_inplane(theta_deg.to_radians()).map_err(fail)?;
        boxed_model(bs, p, out)
    })
}

/// # Safety
/// `m` must be NULL or a handle from a `gb_model_*` constructor that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn gb_model_free(m: *mut GbModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of Burgers-vector families, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gb_model_num_blocks(m: *const GbModel) -> usize {
    m.as_ref().map_or(0, |m| m.inner.num_blocks())
}

unsafe fn state_from(m: &GbModel, u: *const f64, len: usize) -> Result<DislocationState, GbStatus> {
    if u.is_null() {
        return Err(null("u"));
    }
    if len != 2 * m.inner.num_blocks() {
        set_error(format!("expected {} values, got {len}", 2 * m.inner.num_blocks()));
        return Err(GbStatus::DimensionMismatch);
    }
    DislocationState::from_vec(std::slice::from_raw_parts(u, len).to_vec()).map_err(fail)
}

/// Total energy `Σ f_j(u_j)`; `u` holds `2J` doubles.
///
/// # Safety
/// `m` must be a live model handle, `u` must point to `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_model_energy(m: *const GbModel, u: *const f64, len: usize, out: *mut f64) -> GbStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = state_from(m, u, len)?;
        *out = model::total_energy(&s, &m.inner.burgers, &m.inner.params).map_err(fail)?;
        Ok(())
    })
}

/// Constraint residual `Σ A_j u_j - c` written to `out[0..6]`.
///
/// # Safety
/// `m` must be a live model handle, `u` must point to `len` doubles and
/// `out` must point to six writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_model_residual(m: *const GbModel, u: *const f64, len: usize, out: *mut f64) -> GbStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = state_from(m, u, len)?;
        let r = model::residual(&s, &m.inner.constraints).map_err(fail)?;
        std::slice::from_raw_parts_mut(out, 6).copy_from_slice(&r);
        Ok(())
    })
}

/// ADMM defaults: `ρ⁽⁰⁾ = 100`, `β = 1.001`, `α = 5e-4`, tolerances 1e-8 and 1e-6.
#[no_mangle]
pub extern "C" fn gb_auglag_params_default() -> GbAugLagParams {
    let d = AugLagParams::default();
    GbAugLagParams {
        rho0: d.rho0,
        beta: d.beta,
        alpha: d.alpha,
        tol_inner: d.tol_inner,
        tol_outer: d.tol_outer,
        max_outer: d.max_outer,
        max_inner: d.max_inner,
    }
}

fn to_params(p: &GbAugLagParams) -> AugLagParams {
    AugLagParams {
        rho0: p.rho0,
        beta: p.beta,
        alpha: p.alpha,
        tol_inner: p.tol_inner,
        tol_outer: p.tol_outer,
        max_outer: p.max_outer,
        max_inner: p.max_inner,
        ..AugLagParams::default()
    }
}

unsafe fn solve_with(
    m: *const GbModel,
    params: *const GbAugLagParams,
    out: *mut *mut GbSolveResult,
    admm: bool,
) -> GbStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = to_params(p);
        let u0 = DislocationState::zeros(m.inner.num_blocks());
        let w0 = MultiplierState::zeros();
        let res = if admm {
            admm_solve(&m.inner, &p, u0, w0)
        } else {
            alm_solve(&m.inner, &p, u0, w0)
        }
        .map_err(fail)?;
        *out = Box::into_raw(Box::new(GbSolveResult { inner: res }));
        Ok(())
    })
}

/// Multi-block ADMM from `u = 0`, `w = 0`. A run that stops without
/// converging still returns a result; check [`gb_result_converged`].
///
/// # Safety
/// `m` and `params` must be valid, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_admm_solve(
    m: *const GbModel,
    params: *const GbAugLagParams,
    out: *mut *mut GbSolveResult,
) -> GbStatus {
    solve_with(m, params, out, true)
}

/// Augmented Lagrangian method from `u = 0`, `w = 0`.
///
/// # Safety
/// `m` and `params` must be valid, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_alm_solve(
    m: *const GbModel,
    params: *const GbAugLagParams,
    out: *mut *mut GbSolveResult,
) -> GbStatus {
    solve_with(m, params, out, false)
}

/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gb_result_free(r: *mut GbSolveResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Copies the final state (`2J` doubles) into `out`.
///
/// # Safety
/// `r` must be a live result handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn gb_result_state(r: *const GbSolveResult, out: *mut f64, len: usize) -> GbStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = r.inner.state.as_slice();
        if len != s.len() {
            set_error(format!("expected {} values, got {len}", s.len()));
            return Err(GbStatus::DimensionMismatch);
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(s);
        Ok(())
    })
}

/// Outer iterations, or 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gb_result_iterations(r: *const GbSolveResult) -> usize {
    r.as_ref().map_or(0, |r| r.inner.iterations())
}

/// Final constraint residual norm, NaN for NULL.
///
/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gb_result_residual_norm(r: *const GbSolveResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.residual_norm())
}

/// # Safety
/// `r` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn gb_result_converged(r: *const GbSolveResult) -> bool {
    r.as_ref().is_some_and(|r| r.inner.converged())
}

/// Spectral radius of the three-block counterexample iteration matrix for
/// `A = [[1,1,1],[1,1,2],[1,2,2]]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gb_counterexample_spectral_radius(beta: f64, out: *mut f64) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ce = CeProblem::classic(beta).map_err(fail)?;
        *out = ce_spectral_radius(&ce).map_err(fail)?;
        Ok(())
    })
}

fn cert_params(p: f64, n_r: usize, n_phi: usize) -> CertifierParams {
    CertifierParams {
        p,
        n_r,
        n_phi,
        ..CertifierParams::default()
    }
}

/// Quasi-convexity certificate of a three-family model on the disk of
/// radius π/12.
///
/// # Safety
/// `m` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_certify(
    m: *const GbModel,
    p: f64,
    n_r: usize,
    n_phi: usize,
    out: *mut GbCertSummary,
) -> GbStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if m.inner.num_blocks() != 3 {
            return Err(invalid("certification needs a three-family model"));
        }
        let ro = reduce(&m.inner.burgers, &m.inner.params).map_err(fail)?;
        let rep = certify(&ro, &cert_params(p, n_r, n_phi)).map_err(fail)?;
        *out = GbCertSummary {
            pass: rep.pass,
            min_s1: rep.min_s1,
            max_det_b2: rep.max_det_b2,
            points: rep.points,
        };
        Ok(())
    })
}

/// Smallest certified `ε/θ²` of a three-family model; the model's own `ε`
/// is ignored.
///
/// # Safety
/// `m` must be a live model handle and `ratio` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_epsilon0(
    m: *const GbModel,
    p: f64,
    n_r: usize,
    n_phi: usize,
    ratio: *mut f64,
) -> GbStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        if ratio.is_null() {
            return Err(null("ratio"));
        }
        if m.inner.num_blocks() != 3 {
            return Err(invalid("the epsilon search needs a three-family model"));
        }
        let e = find_epsilon0(&m.inner.burgers, &m.inner.params, &cert_params(p, n_r, n_phi)).map_err(fail)?;
        *ratio = e.ratio;
        Ok(())
    })
}
