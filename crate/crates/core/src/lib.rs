//! Floquet eigentriplets for time-periodic Hamiltonians.
//!
//! A state of a periodically driven system is labelled here by three
//! quantities: its T-periodic mode, its quasi-energy in `[0, ω)` and its
//! one-period average energy. The average energy splits quasi-energy
//! degeneracies, orders the spectrum from below and supports a Ritz-type
//! variational search for the lowest state.
//!
//! Modules:
//! - [`model`]: Fourier-series Hamiltonians and the built-in benchmark models.
//! - [`sambe`]: extended-space diagonalization, replica selection,
//!   degeneracy grouping and average-energy resolution.
//! - [`oracle`]: an independent one-period propagation route.
//! - [`variational`]: penalized minimization of the average-energy functional.
//! - [`analysis`]: ordering/truncation and perturbation tracking.
//! - [`io`] and [`cli`]: persistence and the `floquet` command line.
//!
//! Conventions: ħ = 1, `H(t) = Σ_m H_m e^{imωt}` and a Floquet mode is stored
//! as `Φ(t) = Σ_m φ^(m) e^{+imωt}`, so the extended-space block `(m, m')` is
//! `H_{m-m'} + mω·δ_{mm'}` and shifting a mode's harmonic indices by `+k`
//! raises its quasi-energy by `kω`.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod sambe;
pub mod variational;

pub use error::{FloquetError, Result};
pub use model::{builtin_model, validate, FourierHamiltonian, ModelSpec, ValidationReport};
pub use sambe::{
    solve, EigenTriplet, FloquetMode, SolveOptions, Spectrum, SpectrumMetadata, Truncation,
};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
