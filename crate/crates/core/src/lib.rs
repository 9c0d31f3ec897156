//! Simulation of frequency-dispersed transmission spectroscopy with
//! frequency-entangled photon pairs for small excitonic systems.
//!
//! A monochromatic laser pumps parametric down-conversion; the generated
//! signal beam excites the molecule and the idler beam, delayed by Δt, probes
//! it. The change in the transmitted idler photon number, dispersed in
//! frequency, carries the third-order response of the system. In the
//! short-entanglement-time limit the signal temporally resolves state-to-state
//! dynamics despite the monochromatic pump, and it reproduces anti-diagonal
//! cuts of absorptive two-dimensional spectra; at finite entanglement time
//! the waiting-time resolution blurs in a way captured by a closed-form
//! kernel.
//!
//! Module map:
//! * [`model`] — level structure, field configuration, evolution parameters,
//!   validation.
//! * [`propagator`] — evolution matrix elements, Fourier–Laplace transforms,
//!   waiting-time kernel.
//! * [`field`] — entangled-field statistics: window functions, two-photon
//!   wavefunction, auto-correlation, four-body correlators.
//! * [`signal`] — transmission-signal assembly: short-Tₑ closed forms,
//!   finite-Tₑ rephasing closed forms, brute-force quadrature oracle.
//! * [`twod`] — absorptive 2D spectra, anti-diagonal cuts, correspondence
//!   check.
//! * [`cli`] — command-line interface with reproducible table/manifest
//!   output.

pub mod cli;
pub mod config;
pub mod field;
pub mod linalg;
pub mod manifest;
pub mod model;
pub mod propagator;
pub mod quad;
pub mod signal;
pub mod twod;

pub use field::{Branch, CorrelatorKind, DnForm, DnMode, Pathway, Phase};
pub use model::{
    validate_system, CoherenceTransfer, EvolutionModel, ExcitonSystem, FieldConfig,
    IntraCoherence, ModelError, ValidatedBundle, ValidationErrors,
};
pub use propagator::{CoherenceIndex, Level, Propagator, PropagatorError};
pub use signal::{
    brute_force_signal, difference_spectrum, f_kernel, signal_finite_te_rephasing,
    signal_short_te, ComponentKind, FKernelArgs, OracleSettings, SignalError, SignalMode,
    Spectrum1D,
};
pub use twod::{
    absorptive_2d, absorptive_2d_point, antidiagonal_cut, correspondence_check,
    CorrespondenceReport, Spectrum2D, TwodError,
};
