//! C ABI over `sphere_casimir`.
//!
//! A [`ScContext`] holds the sphere and substrate materials. Every call
//! returns an [`ScStatus`]; on failure the message is available from
//! [`sc_last_error`] on the same thread until the next failing call.
//! Results are written through out-pointers, which are left untouched on
//! failure.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sphere_casimir::coupling::{Geometry, Truncation};
use sphere_casimir::energetics::{self, ForceMethod};
use sphere_casimir::materials::{DrudeMaterial, SubstrateMaterial};
use sphere_casimir::Error;

/// Return code of every `sc_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid argument: non-physical material, gap, truncation or tolerance.
    Domain = 2,
    /// Numerical failure: non-finite matrix, QL non-convergence or a pole.
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScForceMethod {
    HellmannFeynman = 0,
    FiniteDifference = 1,
}

impl From<ScForceMethod> for ForceMethod {
    fn from(m: ScForceMethod) -> Self {
        match m {
            ScForceMethod::HellmannFeynman => ForceMethod::HellmannFeynman,
            ScForceMethod::FiniteDifference => ForceMethod::FiniteDifference,
        }
    }
}

/// Opaque material pair.
pub struct ScContext {
    sphere: DrudeMaterial,
    substrate: SubstrateMaterial,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScEnergy {
    pub z_over_r: f64,
    /// In units of hbar*omega_p.
    pub energy: f64,
    pub energy_ev: f64,
    pub l_used: usize,
    pub m_used: usize,
    pub overdamped_count: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScForce {
    pub z_nm: f64,
    pub z_over_r: f64,
    /// In units of hbar*omega_p / R; negative is attractive.
    pub force: f64,
    pub force_ev_per_nm: f64,
    pub force_newton: f64,
    pub l_used: usize,
    pub m_used: usize,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ScStatus {
    if e.is_numerical() {
        ScStatus::Numerical
    } else {
        ScStatus::Domain
    }
}

/// Run `f`, mapping errors and panics to a status and recording the message.
fn guard<F>(f: F) -> ScStatus
where
    F: FnOnce() -> Result<(), ScFailure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScStatus::Ok,
        Ok(Err(ScFailure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            ScStatus::NullPointer
        }
        Ok(Err(ScFailure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            ScStatus::Internal
        }
    }
}

enum ScFailure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for ScFailure {
    fn from(e: Error) -> Self {
        ScFailure::Lib(e)
    }
}

unsafe fn context<'a>(ctx: *const ScContext) -> Result<&'a ScContext, ScFailure> {
    ctx.as_ref().ok_or(ScFailure::Null("ctx"))
}

fn energy_out(r: energetics::EnergyResult) -> ScEnergy {
    ScEnergy {
        z_over_r: r.z_over_r,
        energy: r.energy,
        energy_ev: r.energy_ev,
        l_used: r.l_used,
        m_used: r.m_used,
        overdamped_count: r.overdamped_count,
        converged: r.converged,
    }
}

fn force_out(r: energetics::ForceResult) -> ScForce {
    ScForce {
        z_nm: r.z_nm,
        z_over_r: r.z_over_r,
        force: r.force,
        force_ev_per_nm: r.force_ev_per_nm,
        force_newton: r.force_newton,
        l_used: r.l_used,
        m_used: r.m_used,
        converged: r.converged,
    }
}

/// Create a context for a Drude sphere on a dielectric substrate.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sc_context_new(omega_p_ev: f64, gamma_ratio: f64, epsilon: f64, out: *mut *mut ScContext) -> ScStatus {
    guard(|| {
        if out.is_null() {
            return Err(ScFailure::Null("out"));
        }
        let ctx = ScContext { sphere: DrudeMaterial::new(omega_p_ev, gamma_ratio)?, substrate: SubstrateMaterial::new(epsilon)? };
        *out = Box::into_raw(Box::new(ctx));
        Ok(())
    })
}

/// Aluminium sphere (15.80 eV, gamma = 0.04 omega_p) on sapphire (epsilon = 3.13).
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sc_context_default(out: *mut *mut ScContext) -> ScStatus {
    guard(|| {
        if out.is_null() {
            return Err(ScFailure::Null("out"));
        }
        let ctx = ScContext { sphere: DrudeMaterial::aluminum(), substrate: SubstrateMaterial::sapphire() };
        *out = Box::into_raw(Box::new(ctx));
        Ok(())
    })
}

/// Release a context. Null is ignored.
///
/// # Safety
/// `ctx` must be null or a pointer from `sc_context_new`/`sc_context_default`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sc_context_free(ctx: *mut ScContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Substrate contrast factor f_c = (1 - epsilon) / (1 + epsilon) of the context.
///
/// # Safety
/// `ctx` must be null or a live context; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sc_context_contrast(ctx: *const ScContext, out: *mut f64) -> ScStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out.as_mut().ok_or(ScFailure::Null("out"))?;
        *out = ctx.substrate.contrast();
        Ok(())
    })
}

/// Interaction energy at gap ratio `z_over_r`, all m blocks up to `l_max`.
///
/// # Safety
/// `ctx` must be null or a live context; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sc_energy(ctx: *const ScContext, z_over_r: f64, l_max: usize, out: *mut ScEnergy) -> ScStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out.as_mut().ok_or(ScFailure::Null("out"))?;
        let g = Geometry::from_ratio(z_over_r)?;
        *out = energy_out(energetics::interaction_energy(&g, &ctx.sphere, &ctx.substrate, &Truncation::fixed(l_max))?);
        Ok(())
    })
}

/// Energy with `L` doubled until the relative change is at most `tol`
/// (or `l_cap` is reached, reported as `converged = false`).
///
/// # Safety
/// `ctx` must be null or a live context; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sc_energy_converged(
    ctx: *const ScContext,
    z_over_r: f64,
    tol: f64,
    l_cap: usize,
    out: *mut ScEnergy,
) -> ScStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out.as_mut().ok_or(ScFailure::Null("out"))?;
        let g = Geometry::from_ratio(z_over_r)?;
        *out = energy_out(energetics::converge_in_l(&g, &ctx.sphere, &ctx.substrate, tol, l_cap)?);
        Ok(())
    })
}

/// Force for a sphere of radius `radius_nm` at gap `gap_nm`, all m blocks
/// up to `l_max`.
///
/// # Safety
/// `ctx` must be null or a live context; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sc_force(
    ctx: *const ScContext,
    radius_nm: f64,
    gap_nm: f64,
    l_max: usize,
    method: ScForceMethod,
    out: *mut ScForce,
) -> ScStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out.as_mut().ok_or(ScFailure::Null("out"))?;
        let g = Geometry::new(radius_nm, gap_nm)?;
        let r = energetics::force(&g, &ctx.sphere, &ctx.substrate, &Truncation::fixed(l_max), method.into())?;
        *out = force_out(r);
        Ok(())
    })
}

/// Force at the truncation that converges the energy to `tol`.
///
/// # Safety
/// `ctx` must be null or a live context; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sc_force_converged(
    ctx: *const ScContext,
    radius_nm: f64,
    gap_nm: f64,
    tol: f64,
    l_cap: usize,
    method: ScForceMethod,
    out: *mut ScForce,
) -> ScStatus {
    guard(|| {
        let ctx = context(ctx)?;
        let out = out.as_mut().ok_or(ScFailure::Null("out"))?;
        let g = Geometry::new(radius_nm, gap_nm)?;
        *out = force_out(energetics::converged_force(&g, &ctx.sphere, &ctx.substrate, tol, l_cap, method.into())?);
        Ok(())
    })
}

/// Message of the last failing call on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
