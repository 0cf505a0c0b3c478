//! C ABI over the ccinv library.
//!
//! Matrices are opaque handles created by the read and generate
//! functions and released with [`ccx_matrix_free`]. Every fallible
//! function returns a [`CcxStatus`]; on failure a human-readable
//! message is available from [`ccx_last_error_message`] until the next
//! call on the same thread. Pointers must be non-null unless stated
//! otherwise; passing a freed handle is undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use ccinv::cc::{self, BurnInConfig, StoppingRule, TraceQuery};
use ccinv::error::Error;
use ccinv::generators::{
    build_dirac_matrix, build_mixed_model_matrix, simulate_pedigree, LatticeSpec, MixedModelSpec,
};
use ccinv::mm::{self, AnyMatrix};
use ccinv::noise::{NoiseFamily, NoiseSpec};
use ccinv::se::{self, SeConfig};
use ccinv::solvers;
use ccinv::Scalar;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcxStatus {
    Ok = 0,
    InvalidInput = 1,
    Diverged = 2,
    NoConvergence = 3,
    Io = 4,
    NullPointer = 5,
}

/// Noise family selector for the stochastic estimators.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcxNoise {
    Z2 = 0,
    Gaussian = 1,
}

/// Opaque matrix handle.
pub struct CcxMatrix {
    inner: AnyMatrix,
}

/// One stochastic (or exact) trace estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CcxEstimate {
    pub value_re: f64,
    pub value_im: f64,
    pub mc_std_error: f64,
    pub sample_variance: f64,
    pub effective_length: f64,
    pub burn_in_cycles: u64,
    pub samples: u64,
    /// 1 when the stopping rule fired, 0 when the cycle cap did.
    pub converged: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(e: &Error) -> CcxStatus {
    let msg = CString::new(e.to_string()).unwrap_or_default();
    LAST_ERROR.with(|c| *c.borrow_mut() = msg);
    match e {
        Error::Diverged { .. } | Error::BurnInExceeded { .. } => CcxStatus::Diverged,
        Error::NoConvergence { .. } | Error::Breakdown { .. } | Error::NonFiniteSample { .. } => {
            CcxStatus::NoConvergence
        }
        Error::Io(_) | Error::MatrixMarket(_) | Error::Report(_) => CcxStatus::Io,
        _ => CcxStatus::InvalidInput,
    }
}

fn set_error_msg(msg: &str, status: CcxStatus) -> CcxStatus {
    let msg = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|c| *c.borrow_mut() = msg);
    status
}

/// The message of the most recent failure on this thread. Valid until
/// the next ccx call on the thread; never null.
#[no_mangle]
pub extern "C" fn ccx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|c| c.borrow().as_ptr())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, CcxStatus> {
    if p.is_null() {
        return Err(set_error_msg("null path", CcxStatus::NullPointer));
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(set_error_msg("path is not valid UTF-8", CcxStatus::InvalidInput)),
    }
}

/// Read a Matrix Market file. Returns null on failure; see
/// [`ccx_last_error_message`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_read(path: *const c_char) -> *mut CcxMatrix {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(_) => return ptr::null_mut(),
    };
    match mm::read_matrix_market(path) {
        Ok(inner) => Box::into_raw(Box::new(CcxMatrix { inner })),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// Write the matrix in Matrix Market format.
///
/// # Safety
/// `m` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_write(m: *const CcxMatrix, path: *const c_char) -> CcxStatus {
    let Some(m) = m.as_ref() else {
        return set_error_msg("null matrix", CcxStatus::NullPointer);
    };
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match mm::write_any(&m.inner, path) {
        Ok(()) => CcxStatus::Ok,
        Err(e) => set_error(&e),
    }
}

/// Free lattice fermion operator on a periodic 4-torus; complex valued.
/// Returns null on invalid extents.
#[no_mangle]
pub extern "C" fn ccx_matrix_generate_dirac(
    n0: u64,
    n1: u64,
    n2: u64,
    n3: u64,
    hopping: f64,
) -> *mut CcxMatrix {
    let spec = LatticeSpec {
        extents: [n0 as usize, n1 as usize, n2 as usize, n3 as usize],
        hopping,
    };
    match build_dirac_matrix(&spec) {
        Ok(m) => Box::into_raw(Box::new(CcxMatrix {
            inner: AnyMatrix::Complex(m),
        })),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// Mixed-model coefficient matrix over a simulated pedigree; real
/// valued, order herds + animals. Returns null on invalid parameters.
#[no_mangle]
pub extern "C" fn ccx_matrix_generate_wu_schaeffer(
    animals: u64,
    herds: u64,
    generations: u64,
    unknown_fraction: f64,
    lambda: f64,
    variance_ratio: f64,
    seed: u64,
) -> *mut CcxMatrix {
    let build = || -> ccinv::Result<AnyMatrix> {
        let ped = simulate_pedigree(
            animals as usize,
            herds as usize,
            generations as usize,
            unknown_fraction,
            seed,
        )?;
        let m = build_mixed_model_matrix(
            &ped,
            &MixedModelSpec {
                variance_ratio,
                lambda,
            },
        )?;
        Ok(AnyMatrix::Real(m))
    };
    match build() {
        Ok(inner) => Box::into_raw(Box::new(CcxMatrix { inner })),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_order(m: *const CcxMatrix) -> u64 {
    m.as_ref().map_or(0, |m| m.inner.order() as u64)
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_nnz(m: *const CcxMatrix) -> u64 {
    m.as_ref().map_or(0, |m| m.inner.nnz() as u64)
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_is_complex(m: *const CcxMatrix) -> i32 {
    m.as_ref().map_or(0, |m| i32::from(m.inner.is_complex()))
}

/// Release a handle. Null is a no-op.
///
/// # Safety
/// `m` must come from a ccx constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ccx_matrix_free(m: *mut CcxMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn noise_spec(noise: CcxNoise, seed: u64, dim: usize) -> NoiseSpec {
    let family = match noise {
        CcxNoise::Z2 => NoiseFamily::Z2,
        CcxNoise::Gaussian => NoiseFamily::Gaussian,
    };
    NoiseSpec::new(family, seed, dim)
}

fn convert<T: Scalar>(est: &cc::CcEstimate<T>) -> CcxEstimate {
    CcxEstimate {
        value_re: est.value.re(),
        value_im: est.value.im(),
        mc_std_error: est.mc_std_error,
        sample_variance: est.sample_variance,
        effective_length: est.effective_length,
        burn_in_cycles: est.burn_in as u64,
        samples: est.samples.len() as u64,
        converged: i32::from(est.converged),
    }
}

/// Coupled-chain estimate of `tr C^-1`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccx_cc_trace(
    m: *const CcxMatrix,
    noise: CcxNoise,
    seed: u64,
    rel_tolerance: f64,
    burn_in_tolerance: f64,
    max_cycles: u64,
    out: *mut CcxEstimate,
) -> CcxStatus {
    let Some(m) = m.as_ref() else {
        return set_error_msg("null matrix", CcxStatus::NullPointer);
    };
    let Some(out) = out.as_mut() else {
        return set_error_msg("null output pointer", CcxStatus::NullPointer);
    };
    let burn = BurnInConfig {
        tolerance: burn_in_tolerance,
        ..BurnInConfig::default()
    };
    let stop = StoppingRule {
        rel_tolerance,
        check_every: 100,
        max_cycles: max_cycles as usize,
    };
    let ns = noise_spec(noise, seed, m.inner.order());
    let result = match &m.inner {
        AnyMatrix::Real(c) => {
            cc::estimate_trace(c, &TraceQuery::Identity, &ns, &burn, &stop).map(|e| convert(&e))
        }
        AnyMatrix::Complex(c) => {
            cc::estimate_trace(c, &TraceQuery::Identity, &ns, &burn, &stop).map(|e| convert(&e))
        }
    };
    match result {
        Ok(e) => {
            *out = e;
            CcxStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Independent-sampler estimate of `tr C^-1` with a BiCG inner solve.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccx_se_trace(
    m: *const CcxMatrix,
    noise: CcxNoise,
    seed: u64,
    rel_tolerance: f64,
    inner_tolerance: f64,
    max_systems: u64,
    out: *mut CcxEstimate,
) -> CcxStatus {
    let Some(m) = m.as_ref() else {
        return set_error_msg("null matrix", CcxStatus::NullPointer);
    };
    let Some(out) = out.as_mut() else {
        return set_error_msg("null output pointer", CcxStatus::NullPointer);
    };
    let cfg = SeConfig {
        inner_tol: inner_tolerance,
        ..SeConfig::default()
    };
    let stop = StoppingRule {
        rel_tolerance,
        check_every: 100,
        max_cycles: max_systems as usize,
    };
    let ns = noise_spec(noise, seed, m.inner.order());
    let result = match &m.inner {
        AnyMatrix::Real(c) => se::se_estimate_trace(c, &TraceQuery::Identity, &ns, &cfg, &stop)
            .map(|(e, _)| convert(&e)),
        AnyMatrix::Complex(c) => se::se_estimate_trace(c, &TraceQuery::Identity, &ns, &cfg, &stop)
            .map(|(e, _)| convert(&e)),
    };
    match result {
        Ok(e) => {
            *out = e;
            CcxStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Exact `tr C^-1` by dense factorization; refuses orders above 4096.
///
/// # Safety
/// `m` must be a live handle; `out_re` and `out_im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ccx_oracle_trace(
    m: *const CcxMatrix,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CcxStatus {
    let Some(m) = m.as_ref() else {
        return set_error_msg("null matrix", CcxStatus::NullPointer);
    };
    if out_re.is_null() || out_im.is_null() {
        return set_error_msg("null output pointer", CcxStatus::NullPointer);
    }
    let result = match &m.inner {
        AnyMatrix::Real(c) => solvers::dense_lu_inverse(c, usize::MAX)
            .map(|inv| (TraceQuery::Identity.dense_trace(&inv), 0.0)),
        AnyMatrix::Complex(c) => solvers::dense_lu_inverse(c, usize::MAX).map(|inv| {
            let t = TraceQuery::Identity.dense_trace(&inv);
            (t.re, t.im)
        }),
    };
    match result {
        Ok((re, im)) => {
            *out_re = re;
            *out_im = im;
            CcxStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Power-iteration estimates of the sweep operator spectral radii.
/// Values below 1 predict convergence of the coupled chains.
///
/// # Safety
/// `m` must be a live handle; `out_sp_t` and `out_sp_s` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ccx_precheck(
    m: *const CcxMatrix,
    out_sp_t: *mut f64,
    out_sp_s: *mut f64,
) -> CcxStatus {
    let Some(m) = m.as_ref() else {
        return set_error_msg("null matrix", CcxStatus::NullPointer);
    };
    if out_sp_t.is_null() || out_sp_s.is_null() {
        return set_error_msg("null output pointer", CcxStatus::NullPointer);
    }
    const TOL: f64 = 1e-4;
    const MAX_IT: usize = 5_000;
    let result = match &m.inner {
        AnyMatrix::Real(c) => solvers::spectral_radius_t(c, TOL, MAX_IT)
            .and_then(|t| solvers::spectral_radius_s(c, TOL, MAX_IT).map(|s| (t, s))),
        AnyMatrix::Complex(c) => solvers::spectral_radius_t(c, TOL, MAX_IT)
            .and_then(|t| solvers::spectral_radius_s(c, TOL, MAX_IT).map(|s| (t, s))),
    };
    match result {
        Ok((t, s)) => {
            *out_sp_t = t.value;
            *out_sp_s = s.value;
            CcxStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}
