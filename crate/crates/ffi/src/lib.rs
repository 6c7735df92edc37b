//! C interface over `floquet-core`.
//!
//! Models and spectra are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a
//! [`FloquetStatus`]; on failure the message is available from
//! [`floquet_last_error_message`] on the same thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use floquet::model::ModelFile;
use floquet::oracle::{self, PropagationConfig};
use floquet::{builtin_model, solve, FloquetError, FourierHamiltonian, ModelSpec, SolveOptions, Spectrum, Truncation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloquetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Unknown model, bad parameter or malformed JSON.
    Config = 3,
    /// The Hamiltonian or a cutoff failed validation.
    Validation = 4,
    Convergence = 5,
    OutOfRange = 6,
    Internal = 7,
}

/// Labels of one eigentriplet; the mode is read with [`floquet_spectrum_mode`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FloquetTriplet {
    pub quasi_energy: f64,
    pub avg_energy: f64,
    pub residual: f64,
    pub centroid: f64,
}

/// Opaque validated Hamiltonian.
pub struct FloquetModel(FourierHamiltonian);

/// Opaque resolved spectrum.
pub struct FloquetSpectrum(Spectrum);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &FloquetError) -> FloquetStatus {
    use FloquetError::*;
    match e {
        UnknownModel(_) | ParameterDomain { .. } | InvalidArgument(_) | Json(_) | Io(_) | Csv(_) => {
            FloquetStatus::Config
        }
        InvalidModel(_) | TruncationTooSmall { .. } | DimensionMismatch(_) | TruncationMismatch { .. } => {
            FloquetStatus::Validation
        }
        TooFewFamilies { .. }
        | TruncationNotConverged { .. }
        | EigenSolver { .. }
        | UnitarityDrift { .. }
        | NonPeriodic { .. }
        | Unnormalized(_) => FloquetStatus::Convergence,
    }
}

struct Failure(FloquetStatus, String);

impl From<FloquetError> for Failure {
    fn from(e: FloquetError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FloquetStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure or panic and returns its status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FloquetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FloquetStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FloquetStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FloquetStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn model_ref<'a>(model: *const FloquetModel) -> Result<&'a FourierHamiltonian, Failure> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn spectrum_ref<'a>(spectrum: *const FloquetSpectrum) -> Result<&'a Spectrum, Failure> {
    spectrum.as_ref().map(|s| &s.0).ok_or_else(|| null("spectrum"))
}

/// Parses a model JSON document (explicit harmonics or a built-in).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn floquet_model_from_json(json: *const c_char, out: *mut *mut FloquetModel) -> FloquetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let file: ModelFile = serde_json::from_str(text).map_err(FloquetError::from)?;
        *out = Box::into_raw(Box::new(FloquetModel(file.resolve()?)));
        Ok(())
    })
}

/// Built-in model by name with `count` parameter overrides.
///
/// # Safety
/// `name` must be NUL-terminated; `keys` and `values` must each hold
/// `count` entries (they may be null when `count` is zero).
#[no_mangle]
pub unsafe extern "C" fn floquet_model_builtin(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    count: usize,
    out: *mut *mut FloquetModel,
) -> FloquetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut spec = ModelSpec::new(str_arg(name, "name")?);
        if count > 0 {
            if keys.is_null() || values.is_null() {
                return Err(null("keys or values"));
            }
            for i in 0..count {
                spec = spec.with(str_arg(*keys.add(i), "key")?, *values.add(i));
            }
        }
        *out = Box::into_raw(Box::new(FloquetModel(builtin_model(&spec)?)));
        Ok(())
    })
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn floquet_model_dim(model: *const FloquetModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// Drive frequency, or NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn floquet_model_omega(model: *const FloquetModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.0.omega())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn floquet_model_free(model: *mut FloquetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Extended-space solve. `harmonics < 0` selects the cutoff automatically;
/// `tol_deg ≤ 0` uses the default degeneracy tolerance.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn floquet_solve(
    model: *const FloquetModel,
    harmonics: i64,
    tol_deg: f64,
    out: *mut *mut FloquetSpectrum,
) -> FloquetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let h = model_ref(model)?;
        let opts = SolveOptions {
            truncation: if harmonics < 0 { Truncation::Auto } else { Truncation::Fixed(harmonics as usize) },
            tol_deg: (tol_deg > 0.0).then_some(tol_deg),
        };
        *out = Box::into_raw(Box::new(FloquetSpectrum(solve(h, &opts)?)));
        Ok(())
    })
}

/// Propagation-based solve with modes on `harmonics` Fourier components
/// either side; `steps_per_period = 0` uses the default.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn floquet_oracle_solve(
    model: *const FloquetModel,
    harmonics: usize,
    steps_per_period: usize,
    out: *mut *mut FloquetSpectrum,
) -> FloquetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let h = model_ref(model)?;
        let mut config = PropagationConfig::default();
        if steps_per_period > 0 {
            config.steps_per_period = steps_per_period;
        }
        *out = Box::into_raw(Box::new(FloquetSpectrum(oracle::solve(h, harmonics, &config)?)));
        Ok(())
    })
}

/// Number of triplets, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_len(spectrum: *const FloquetSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Harmonic cutoff `M` of the stored modes, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_truncation(spectrum: *const FloquetSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.metadata.truncation)
}

/// Length `dim·(2M+1)` of every mode vector, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_mode_len(spectrum: *const FloquetSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.metadata.dim * (2 * s.0.metadata.truncation + 1))
}

/// # Safety
/// `spectrum` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_triplet(
    spectrum: *const FloquetSpectrum,
    index: usize,
    out: *mut FloquetTriplet,
) -> FloquetStatus {
    guard(|| {
        let s = spectrum_ref(spectrum)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = s.triplets.get(index).ok_or_else(|| {
            Failure(FloquetStatus::OutOfRange, format!("index {index} of {} states", s.len()))
        })?;
        *out = FloquetTriplet {
            quasi_energy: t.quasi_energy,
            avg_energy: t.avg_energy,
            residual: t.residual,
            centroid: t.centroid,
        };
        Ok(())
    })
}

/// Copies mode `index` into `re` and `im`, harmonic blocks from `-M` to `M`
/// each holding `dim` entries. `len` must equal [`floquet_spectrum_mode_len`].
///
/// # Safety
/// `re` and `im` must each be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_mode(
    spectrum: *const FloquetSpectrum,
    index: usize,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FloquetStatus {
    guard(|| {
        let s = spectrum_ref(spectrum)?;
        if re.is_null() || im.is_null() {
            return Err(null("re or im"));
        }
        let t = s.triplets.get(index).ok_or_else(|| {
            Failure(FloquetStatus::OutOfRange, format!("index {index} of {} states", s.len()))
        })?;
        let c = t.mode.coeffs();
        if len != c.len() {
            return Err(Failure(FloquetStatus::OutOfRange, format!("buffer holds {len}, mode has {}", c.len())));
        }
        for (i, z) in c.iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(())
    })
}

/// Full spectrum as JSON; release the string with [`floquet_string_free`].
///
/// # Safety
/// `spectrum` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_to_json(spectrum: *const FloquetSpectrum, out: *mut *mut c_char) -> FloquetStatus {
    guard(|| {
        let s = spectrum_ref(spectrum)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(s).map_err(FloquetError::from)?;
        *out = CString::new(text).map_err(|e| Failure(FloquetStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn floquet_spectrum_free(spectrum: *mut FloquetSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn floquet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn floquet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
