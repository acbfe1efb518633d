//! C interface to `tm-core`.
//!
//! Every fallible function returns a [`TmStatus`]; on failure the message is
//! available from [`tm_last_error_message`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tm_core::constructions::{extract_a, green_solve_on, upper_bound_value, AFitOptions};
use tm_core::discretization::{assemble, FemOperators, ShiftedSolver};
use tm_core::experiment::{
    build_surface, load_surface, maximize_one, problems, run_experiment, ExperimentConfig, Surface, SurfaceSpec,
};
use tm_core::geometry::io::off_string;
use tm_core::maximizer::{MaximizerState, Seed, SolveOptions};
use tm_core::spectrum::{complement_projector, invariant_spectrum, InvariantSpectrum};
use tm_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    /// Invalid input; matches exit code 2 of the `tm` binary.
    ConfigError = 2,
    /// Solver or factorization failure; matches exit code 3.
    NumericalError = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A mesh with its group action and assembled operators.
pub struct TmSurface {
    surface: Surface,
    ops: FemOperators,
}

/// Invariant eigenpairs of one surface.
pub struct TmSpectrum {
    spectrum: InvariantSpectrum,
    n_vertices: usize,
}

/// A subcritical maximizer with its multipliers.
pub struct TmState {
    state: MaximizerState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TmStatus {
    if e.is_config_error() {
        TmStatus::ConfigError
    } else {
        TmStatus::NumericalError
    }
}

enum Failure {
    Core(Error),
    Status(TmStatus, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TmStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            TmStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(TmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(TmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

fn new_surface(surface: Surface) -> Result<TmSurface, Failure> {
    let ops = assemble(&surface.mesh)?;
    Ok(TmSurface { surface, ops })
}

/// Last error message on this thread, or an empty string. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Subdivided unit sphere; `group` is `trivial`, `antipodal`, `cyclic(m)` or
/// `dihedral(m)`.
///
/// # Safety
/// `group` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_sphere(level: u32, group: *const c_char, out: *mut *mut TmSurface) -> TmStatus {
    guard(|| {
        let group = string(group, "group")?.parse()?;
        let s = new_surface(build_surface(&SurfaceSpec::Sphere { level, group })?)?;
        put(out, s)
    })
}

/// Flat torus on an `nx × ny` grid; `translations` holds `count` pairs
/// `(sx, sy)` of grid shifts generating the group and may be null when
/// `count` is zero.
///
/// # Safety
/// `translations` must point to `2·count` readable values.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_torus(
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    translations: *const usize,
    count: usize,
    out: *mut *mut TmSurface,
) -> TmStatus {
    guard(|| {
        let pairs = if count == 0 {
            Vec::new()
        } else {
            if translations.is_null() {
                return Err(null("translations"));
            }
            std::slice::from_raw_parts(translations, 2 * count)
                .chunks(2)
                .map(|c| (c[0], c[1]))
                .collect()
        };
        let spec = SurfaceSpec::Torus {
            nx,
            ny,
            width,
            height,
            translations: pairs,
        };
        put(out, new_surface(build_surface(&spec)?)?)
    })
}

/// Reads an OFF mesh; `group` is a group name or a JSON permutation file.
///
/// # Safety
/// Both strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_load(
    path: *const c_char,
    group: *const c_char,
    out: *mut *mut TmSurface,
) -> TmStatus {
    guard(|| {
        let path = string(path, "path")?;
        let group = string(group, "group")?;
        put(out, new_surface(load_surface(Path::new(path), group)?)?)
    })
}

/// # Safety
/// `surface` must come from a `tm_surface_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_free(surface: *mut TmSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// # Safety
/// `surface` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_vertex_count(surface: *const TmSurface, out: *mut usize) -> TmStatus {
    guard(|| put_value(out, get(surface, "surface")?.surface.mesh.n_vertices()))
}

/// `ℓ`, the smallest orbit size.
///
/// # Safety
/// `surface` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_ell(surface: *const TmSurface, out: *mut usize) -> TmStatus {
    guard(|| put_value(out, get(surface, "surface")?.surface.action.min_orbit()))
}

/// # Safety
/// `surface` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_area(surface: *const TmSurface, out: *mut f64) -> TmStatus {
    guard(|| put_value(out, get(surface, "surface")?.surface.mesh.total_area()))
}

/// # Safety
/// `surface` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tm_surface_write_off(surface: *const TmSurface, path: *const c_char) -> TmStatus {
    guard(|| {
        let s = get(surface, "surface")?;
        let path = string(path, "path")?;
        std::fs::write(path, off_string(&s.surface.mesh)).map_err(Error::from)?;
        Ok(())
    })
}

/// The `count` smallest invariant eigenpairs.
///
/// # Safety
/// `surface` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_spectrum_compute(
    surface: *const TmSurface,
    count: usize,
    out: *mut *mut TmSpectrum,
) -> TmStatus {
    guard(|| {
        let s = get(surface, "surface")?;
        let spectrum = invariant_spectrum(&s.ops, &s.surface.action, count)?;
        put(
            out,
            TmSpectrum {
                spectrum,
                n_vertices: s.surface.mesh.n_vertices(),
            },
        )
    })
}

/// # Safety
/// `spectrum` must come from `tm_spectrum_compute` or be null.
#[no_mangle]
pub unsafe extern "C" fn tm_spectrum_free(spectrum: *mut TmSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of eigenvalues counted with multiplicity.
///
/// # Safety
/// `spectrum` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_spectrum_len(spectrum: *const TmSpectrum, out: *mut usize) -> TmStatus {
    guard(|| put_value(out, get(spectrum, "spectrum")?.spectrum.eigenvalues.len()))
}

/// The `index`-th eigenvalue (0-based, with multiplicity).
///
/// # Safety
/// `spectrum` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_spectrum_eigenvalue(spectrum: *const TmSpectrum, index: usize, out: *mut f64) -> TmStatus {
    guard(|| {
        let s = get(spectrum, "spectrum")?;
        let v =
            *s.spectrum.eigenvalues.get(index).ok_or_else(|| {
                Failure::Status(TmStatus::OutOfRange, format!("eigenvalue index {index} out of range"))
            })?;
        put_value(out, v)
    })
}

/// `λ_j^G`, the `level`-th distinct eigenvalue (1-based), and its multiplicity.
///
/// # Safety
/// `spectrum` must be a live handle; `multiplicity` may be null.
#[no_mangle]
pub unsafe extern "C" fn tm_spectrum_lambda(
    spectrum: *const TmSpectrum,
    level: usize,
    out: *mut f64,
    multiplicity: *mut usize,
) -> TmStatus {
    guard(|| {
        let s = get(spectrum, "spectrum")?;
        let v = s
            .spectrum
            .lambda(level)
            .ok_or_else(|| Failure::Status(TmStatus::OutOfRange, format!("level {level} not resolved")))?;
        if !multiplicity.is_null() {
            *multiplicity = s.spectrum.multiplicities[level - 1];
        }
        put_value(out, v)
    })
}

fn check_pair(surface: &TmSurface, spectrum: &TmSpectrum) -> Result<(), Failure> {
    if surface.surface.mesh.n_vertices() != spectrum.n_vertices {
        return Err(Failure::Status(
            TmStatus::ConfigError,
            "spectrum was computed on a different surface".into(),
        ));
    }
    Ok(())
}

/// Regular constant `A` of the Green function with source at the
/// lowest-index minimal orbit, and `log(Vol + πℓe^{1+4πℓA})`.
///
/// # Safety
/// Handles must be live; `log_upper_bound` may be null.
#[no_mangle]
pub unsafe extern "C" fn tm_green_constant(
    surface: *const TmSurface,
    spectrum: *const TmSpectrum,
    level: usize,
    alpha: f64,
    a: *mut f64,
    log_upper_bound: *mut f64,
) -> TmStatus {
    guard(|| {
        let s = get(surface, "surface")?;
        let sp = get(spectrum, "spectrum")?;
        check_pair(s, sp)?;
        let space = complement_projector(&sp.spectrum, level)?;
        if alpha.is_nan() || alpha >= space.lambda {
            return Err(Error::AlphaNotAdmissible {
                alpha,
                lambda: space.lambda,
            }
            .into());
        }
        let solver = ShiftedSolver::new(&s.ops, alpha)?;
        let orbit = s.surface.action.orbit(s.surface.default_center());
        let dec = green_solve_on(&s.ops, &space, &solver, &orbit)?;
        let fit = extract_a(&dec, &s.surface.mesh, &AFitOptions::default())?;
        if !log_upper_bound.is_null() {
            *log_upper_bound = upper_bound_value(fit.a, s.ops.total_area, dec.ell()).log_value;
        }
        put_value(a, fit.a)
    })
}

/// Multi-start subcritical maximizer at `β = 4πℓ − epsilon` on `E_{level−1}^⊥`.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn tm_maximize(
    surface: *const TmSurface,
    spectrum: *const TmSpectrum,
    level: usize,
    alpha: f64,
    epsilon: f64,
    random_seed: u64,
    out: *mut *mut TmState,
) -> TmStatus {
    guard(|| {
        let s = get(surface, "surface")?;
        let sp = get(spectrum, "spectrum")?;
        check_pair(s, sp)?;
        let probs = problems(&s.surface, &s.ops, &sp.spectrum, level, alpha, &[epsilon])?;
        let (_, state) = maximize_one(&probs[0], &Seed::default_set(random_seed), &SolveOptions::default())?;
        put(out, TmState { state })
    })
}

/// # Safety
/// `state` must come from `tm_maximize` or be null.
#[no_mangle]
pub unsafe extern "C" fn tm_state_free(state: *mut TmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Scalar results of a maximizer run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TmStateSummary {
    pub log_value: f64,
    pub c_eps: f64,
    pub x_eps: usize,
    pub lambda_eps: f64,
    pub mu_eps: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tm_state_summary(state: *const TmState, out: *mut TmStateSummary) -> TmStatus {
    guard(|| {
        let st = &get(state, "state")?.state;
        put_value(
            out,
            TmStateSummary {
                log_value: st.value.log_value,
                c_eps: st.c_eps,
                x_eps: st.x_eps,
                lambda_eps: st.lambda_eps,
                mu_eps: st.mu_eps,
                el_residual: st.el_residual,
                iterations: st.iterations,
                converged: st.converged,
            },
        )
    })
}

/// Copies the vertex values into `buffer`, which must hold at least the
/// vertex count.
///
/// # Safety
/// `buffer` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tm_state_values(state: *const TmState, buffer: *mut f64, len: usize) -> TmStatus {
    guard(|| {
        let u = &get(state, "state")?.state.u;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        if len < u.len() {
            return Err(Failure::Status(
                TmStatus::OutOfRange,
                format!("buffer holds {len} values but the state has {}", u.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, u.len()).copy_from_slice(u);
        Ok(())
    })
}

/// Runs the experiment described by the JSON config file at `path`.
///
/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tm_run_experiment(path: *const c_char) -> TmStatus {
    guard(|| {
        let cfg = ExperimentConfig::load(Path::new(string(path, "path")?))?;
        run_experiment(&cfg)?;
        Ok(())
    })
}
