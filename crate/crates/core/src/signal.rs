//! Assembly of the frequency-dispersed transmission signal S(ω; Δt).
//!
//! Three evaluation routes are provided:
//!
//! * [`signal_short_te`] — closed forms in the delta-correlated limit of the
//!   entangled pair: GSB/SE/ESA population terms, intra-manifold coherence
//!   additions, and the delay-independent auto-correlation term S_c.
//! * [`signal_finite_te_rephasing`] — closed forms for the rephasing SE/ESA
//!   pathways at finite entanglement time, built on the [`f_kernel`] waiting
//!   kernel which replaces the bare waiting-time propagator.
//! * [`brute_force_signal`] — direct quadrature of the pathway integrals over
//!   the three response intervals using the finite-Tₑ four-body correlators;
//!   the independent check on both closed-form routes.
//!
//! Normalization convention: each component counts a rephasing/non-rephasing
//! pathway pair with unit weight, i.e. components equal half of the raw
//! (rephasing + non-rephasing) assembly. With a monochromatic pump the signal
//! is stationary in the detection time, so spectra are reported per unit
//! time.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{self, CorrelatorKind, Pathway, Phase};
use crate::model::{FieldConfig, ValidatedBundle};
use crate::propagator::{CoherenceIndex, Propagator, PropagatorError};
use crate::quad::{self, QuadError};

/// Weight of one pathway pair in the component normalization: the raw
/// assembly sums rephasing and non-rephasing classes separately, the reported
/// components count each pair once.
pub(crate) const PAIR_NORM: f64 = 0.5;

/// Which evaluation route produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalMode {
    ShortTe,
    FiniteTeRephasing,
    Oracle,
    TwodCut,
}

impl SignalMode {
    pub fn label(self) -> &'static str {
        match self {
            SignalMode::ShortTe => "short-te",
            SignalMode::FiniteTeRephasing => "finite-te",
            SignalMode::Oracle => "oracle",
            SignalMode::TwodCut => "twod-cut",
        }
    }
}

/// Per-pathway breakdown slots of a [`Spectrum1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Gsb = 0,
    Se = 1,
    Esa = 2,
    SeCoh = 3,
    EsaCoh = 4,
    Sc = 5,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::Gsb,
        ComponentKind::Se,
        ComponentKind::Esa,
        ComponentKind::SeCoh,
        ComponentKind::EsaCoh,
        ComponentKind::Sc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ComponentKind::Gsb => "GSB",
            ComponentKind::Se => "SE",
            ComponentKind::Esa => "ESA",
            ComponentKind::SeCoh => "SEcoh",
            ComponentKind::EsaCoh => "ESAcoh",
            ComponentKind::Sc => "Sc",
        }
    }
}

/// Provenance metadata carried by every spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMeta {
    pub delay: f64,
    pub pump_frequency: f64,
    pub entanglement_time: f64,
    pub mode: SignalMode,
    /// False when the waiting-time kernel diverges and S_c was omitted.
    pub sc_available: bool,
}

/// A frequency-gridded signal with its per-pathway breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    omega: Vec<f64>,
    values: Vec<f64>,
    components: [Vec<f64>; 6],
    meta: SpectrumMeta,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("unsupported evolution model: {0}")]
    UnsupportedModel(String),
    #[error("pathway {0:?} has no finite-Tₑ closed form here")]
    UnsupportedPathway(Pathway),
    #[error("quadrature horizon too short: tail bound {tail:.2e} exceeds tolerance {tol:.2e}")]
    TruncationTooShort { tail: f64, tol: f64 },
    #[error("frequency grid must be non-empty and strictly increasing")]
    BadGrid,
}

impl Spectrum1D {
    /// Build a spectrum from per-component values; the total is their sum.
    pub fn from_components(
        omega: Vec<f64>,
        components: [Vec<f64>; 6],
        meta: SpectrumMeta,
    ) -> Result<Self, SignalError> {
        if omega.is_empty() || omega.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SignalError::BadGrid);
        }
        for comp in &components {
            if comp.len() != omega.len() {
                return Err(SignalError::BadGrid);
            }
        }
        let values = (0..omega.len())
            .map(|i| components.iter().map(|c| c[i]).sum())
            .collect();
        Ok(Spectrum1D {
            omega,
            values,
            components,
            meta,
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Total signal (the sum of every component at each grid point).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, kind: ComponentKind) -> &[f64] {
        &self.components[kind as usize]
    }

    pub fn meta(&self) -> &SpectrumMeta {
        &self.meta
    }

    /// Pointwise difference `self − other` on an identical grid.
    pub fn difference(&self, other: &Spectrum1D) -> Result<Spectrum1D, SignalError> {
        if self.omega != other.omega {
            return Err(SignalError::BadGrid);
        }
        let components = std::array::from_fn(|k| {
            self.components[k]
                .iter()
                .zip(&other.components[k])
                .map(|(a, b)| a - b)
                .collect()
        });
        Spectrum1D::from_components(self.omega.clone(), components, self.meta)
    }

    /// Pointwise component sum `self + other` on an identical grid; metadata
    /// is taken from `self`.
    pub fn sum_with(&self, other: &Spectrum1D) -> Result<Spectrum1D, SignalError> {
        if self.omega != other.omega {
            return Err(SignalError::BadGrid);
        }
        let components = std::array::from_fn(|k| {
            self.components[k]
                .iter()
                .zip(&other.components[k])
                .map(|(a, b)| a + b)
                .collect()
        });
        Spectrum1D::from_components(self.omega.clone(), components, self.meta)
    }

    /// Multiply every component by a scalar.
    fn scale(&mut self, factor: f64) {
        for comp in &mut self.components {
            for v in comp.iter_mut() {
                *v *= factor;
            }
        }
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

/// Restrict the assembly to one phase class, or keep both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSelection {
    Both,
    Only(Phase),
}

/// Arguments of the finite-Tₑ waiting kernel F(ω, Δt).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FKernelArgs {
    pub omega: f64,
    pub delay: f64,
    /// Complex rate z of the waiting-time evolution G(t) = e^{−z t}: a real
    /// decay λ for populations, λ + iω_{αβ} for a coherence.
    pub rate: Complex64,
    pub field: FieldConfig,
}

/// φ₁(x) = (e^x − 1)/x with the removable singularity handled by series.
fn phi1(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        Complex64::new(1.0, 0.0) + x / 2.0 + x * x / 6.0 + x * x * x / 24.0
    } else {
        (x.exp() - 1.0) / x
    }
}

/// Finite-Tₑ replacement for the waiting-time propagator in rephasing
/// pathways:
///
/// F(ω, Δt) = ∫₀^∞ ds G(s) e^{−iΩ_i Δt} [D₁(s−Δt) e^{iΩ_i s} + D₁(s+Δt) e^{iΩ_s s}]
///
/// with G(s) = e^{−z s}. For Δt ≥ Tₑ/2 only the first window contributes and
/// F = sinc((Ω_i + iz)Tₑ/2) e^{−zΔt}; for Δt < Tₑ/2 both windows are clipped
/// at s = 0 and the two branches join continuously at Δt = Tₑ/2. As Tₑ → 0,
/// F → G(Δt) for every ω.
pub fn f_kernel(args: &FKernelArgs) -> Complex64 {
    let te = args.field.entanglement_time;
    let z = args.rate;
    let dt = args.delay;
    if te == 0.0 {
        return (-z * dt).exp();
    }
    let cap_i = args.field.idler_detuning(args.omega);
    let cap_s = args.field.signal_detuning(args.omega);
    let i = Complex64::new(0.0, 1.0);
    let w = Complex64::new(cap_i, 0.0) + i * z;
    if dt >= 0.5 * te {
        field::sinc_complex(w * (0.5 * te)) * (-z * dt).exp()
    } else {
        let v = Complex64::new(cap_s, 0.0) + i * z;
        let plus = 0.5 * te + dt;
        let minus = 0.5 * te - dt;
        let sum = plus * phi1(i * w * plus) + minus * phi1(i * v * minus);
        (-i * cap_i * dt).exp() * sum / te
    }
}

/// One emission configuration of the waiting interval:
/// |from_ket⟩⟨from_bra| → |to_ket⟩⟨to_bra|.
#[derive(Debug, Clone, Copy)]
struct WaitingConfig {
    from_ket: usize,
    from_bra: usize,
    to_ket: usize,
    to_bra: usize,
    coherence: bool,
}

struct Engine<'a> {
    bundle: &'a ValidatedBundle,
    prop: Propagator<'a>,
}

impl<'a> Engine<'a> {
    fn new(bundle: &'a ValidatedBundle) -> Self {
        Engine {
            bundle,
            prop: Propagator::new(bundle),
        }
    }

    fn mu_ge(&self, a: usize) -> f64 {
        self.bundle.system().dipoles_ge[a]
    }

    fn mu_ef(&self, d: usize, a: usize) -> f64 {
        self.bundle.system().dipoles_ef[d][a]
    }

    fn ge(&self, a: usize, omega: f64) -> Complex64 {
        self.prop
            .laplace(CoherenceIndex::ge(a), omega)
            .expect("validated dephasing is positive")
    }

    fn ef(&self, d: usize, a: usize, omega: f64) -> Complex64 {
        self.prop
            .laplace(CoherenceIndex::ef(d, a), omega)
            .expect("validated dephasing is positive")
    }

    /// First-interval lineshape factor: G_{α0}[x] from the non-rephasing
    /// class plus G*_{β0}[x] from the rephasing class, per selection.
    fn pair(&self, from_ket: usize, from_bra: usize, x: f64, sel: PhaseSelection) -> Complex64 {
        let nr = self.ge(from_ket, x);
        let r = self.ge(from_bra, x).conj();
        match sel {
            PhaseSelection::Both => nr + r,
            PhaseSelection::Only(Phase::Rephasing) => r,
            PhaseSelection::Only(Phase::NonRephasing) => nr,
        }
    }

    fn dipole_product(&self, cfg: &WaitingConfig) -> f64 {
        self.mu_ge(cfg.to_bra)
            * self.mu_ge(cfg.to_ket)
            * self.mu_ge(cfg.from_bra)
            * self.mu_ge(cfg.from_ket)
    }

    fn dipole_product_esa(&self, cfg: &WaitingConfig, d: usize) -> f64 {
        self.mu_ef(d, cfg.to_bra)
            * self.mu_ef(d, cfg.to_ket)
            * self.mu_ge(cfg.from_bra)
            * self.mu_ge(cfg.from_ket)
    }
}

/// Frequency-dispersed transmission signal in the short-entanglement-time
/// (delta-correlated) limit, with per-pathway components.
///
/// The S_c component requires a finite waiting-time kernel; when every
/// excited population is stationary it is omitted and flagged through
/// `meta.sc_available`.
pub fn signal_short_te(
    omega_grid: &[f64],
    delay: f64,
    bundle: &ValidatedBundle,
) -> Result<Spectrum1D, SignalError> {
    signal_short_te_phases(omega_grid, delay, bundle, PhaseSelection::Both)
}

/// Phase-resolved variant of [`signal_short_te`]. With a single phase class
/// selected only the SE/ESA-type components are populated (each at half the
/// pair weight); GSB and S_c are reported for the full selection only.
pub fn signal_short_te_phases(
    omega_grid: &[f64],
    delay: f64,
    bundle: &ValidatedBundle,
    selection: PhaseSelection,
) -> Result<Spectrum1D, SignalError> {
    let engine = Engine::new(bundle);
    let entries = engine.prop.transfer_entries(delay)?;
    let configs: Vec<(WaitingConfig, Complex64)> = entries
        .iter()
        .map(|e| {
            (
                WaitingConfig {
                    from_ket: e.from_ket,
                    from_bra: e.from_bra,
                    to_ket: e.to_ket,
                    to_bra: e.to_bra,
                    coherence: e.coherence,
                },
                e.amplitude,
            )
        })
        .collect();
    let full = selection == PhaseSelection::Both;
    let kernel = if full {
        engine.prop.waiting_kernel().ok()
    } else {
        None
    };
    let omega_p = bundle.field().pump_frequency;
    let ns = bundle.system().n_singles();
    let nd = bundle.system().n_doubles();
    let ground = engine.prop.ground_survival(delay)?;

    let rows: Vec<[f64; 6]> = omega_grid
        .par_iter()
        .map(|&omega| {
            let x = omega_p - omega;
            let mut row = [0.0f64; 6];
            if full {
                // Ground-state bleaching: the waiting interval sits in |0⟩⟨0|.
                for beta in 0..ns {
                    let g3 = engine.ge(beta, omega);
                    for alpha in 0..ns {
                        let dip = engine.mu_ge(beta).powi(2) * engine.mu_ge(alpha).powi(2);
                        let pair = engine.pair(alpha, alpha, x, selection);
                        row[ComponentKind::Gsb as usize] -=
                            PAIR_NORM * dip * (g3 * pair).re * ground;
                    }
                }
            }
            for (cfg, amp) in &configs {
                let pair = engine.pair(cfg.from_ket, cfg.from_bra, x, selection);
                // Stimulated emission from the final ket state.
                let g3 = engine.ge(cfg.to_ket, omega);
                let se = PAIR_NORM * engine.dipole_product(cfg) * (g3 * pair * amp).re;
                let se_slot = if cfg.coherence {
                    ComponentKind::SeCoh
                } else {
                    ComponentKind::Se
                };
                row[se_slot as usize] -= se;
                // Excited-state absorption through every double state.
                let esa_slot = if cfg.coherence {
                    ComponentKind::EsaCoh
                } else {
                    ComponentKind::Esa
                };
                for d in 0..nd {
                    let g3 = engine.ef(d, cfg.to_bra, omega);
                    let esa =
                        PAIR_NORM * engine.dipole_product_esa(cfg, d) * (g3 * pair * amp).re;
                    row[esa_slot as usize] += esa;
                }
            }
            if let Some(kernel) = &kernel {
                // Delay-independent auto-correlation term.
                for beta in 0..ns {
                    let g3 = engine.ge(beta, omega).re;
                    for alpha in 0..ns {
                        let dip = engine.mu_ge(beta).powi(2) * engine.mu_ge(alpha).powi(2);
                        let inner = engine.ge(alpha, omega).re + kernel[[beta, alpha]];
                        row[ComponentKind::Sc as usize] -= dip * g3 * inner;
                    }
                }
            }
            row
        })
        .collect();

    let meta = SpectrumMeta {
        delay,
        pump_frequency: omega_p,
        entanglement_time: 0.0,
        mode: SignalMode::ShortTe,
        sc_available: kernel.is_some(),
    };
    let mut spectrum = collect_rows(omega_grid, rows, meta)?;
    spectrum.scale(bundle.field().conversion_scale);
    Ok(spectrum)
}

/// Difference spectrum ΔS(ω; Δt) = S(ω; Δt) − S(ω; 0) in the short-Tₑ limit.
///
/// The GSB and S_c components are delay-independent and cancel identically.
pub fn difference_spectrum(
    omega_grid: &[f64],
    delay: f64,
    bundle: &ValidatedBundle,
) -> Result<Spectrum1D, SignalError> {
    let at_delay = signal_short_te(omega_grid, delay, bundle)?;
    let at_zero = signal_short_te(omega_grid, 0.0, bundle)?;
    let mut diff = at_delay.difference(&at_zero)?;
    diff.meta.delay = delay;
    Ok(diff)
}

/// Rephasing SE or ESA signal at finite entanglement time.
///
/// Valid for evolution models whose waiting-interval dynamics decompose into
/// exponential modes: rate-equation populations plus independently decaying
/// registered coherences. Coherence transfer couples the modes and is
/// rejected.
pub fn signal_finite_te_rephasing(
    omega_grid: &[f64],
    delay: f64,
    bundle: &ValidatedBundle,
    pathway: Pathway,
) -> Result<Spectrum1D, SignalError> {
    if pathway == Pathway::Gsb {
        return Err(SignalError::UnsupportedPathway(pathway));
    }
    if bundle.model().has_coherence_transfer() {
        return Err(SignalError::UnsupportedModel(
            "finite-Tₑ closed forms assume diagonal coherence evolution; \
             coherence transfer requires the oracle route"
                .into(),
        ));
    }
    let engine = Engine::new(bundle);
    let field = *bundle.field();
    let pop_modes = engine.prop.population_modes()?;
    let ns = bundle.system().n_singles();
    let nd = bundle.system().n_doubles();
    let omega_p = field.pump_frequency;
    // Diagonal coherence configurations evolve as single exponentials.
    let coh_configs: Vec<(WaitingConfig, Complex64)> = engine
        .prop
        .coherence_labels()
        .iter()
        .map(|&(k, b)| {
            let rate = engine
                .prop
                .coherence_rate(CoherenceIndex::new(
                    crate::propagator::Level::Single(k),
                    crate::propagator::Level::Single(b),
                ))
                .expect("registered coherence");
            (
                WaitingConfig {
                    from_ket: k,
                    from_bra: b,
                    to_ket: k,
                    to_bra: b,
                    coherence: true,
                },
                rate,
            )
        })
        .collect();

    let rows: Vec<[f64; 6]> = omega_grid
        .par_iter()
        .map(|&omega| {
            let x = omega_p - omega;
            let filter = field::sinc_filter(field.idler_detuning(omega), field.entanglement_time);
            let mode_kernels: Vec<Complex64> = pop_modes
                .iter()
                .map(|(z, _)| {
                    f_kernel(&FKernelArgs {
                        omega,
                        delay,
                        rate: *z,
                        field,
                    })
                })
                .collect();
            let mut row = [0.0f64; 6];
            // Population configurations α → β.
            for beta in 0..ns {
                for alpha in 0..ns {
                    let f_wait: Complex64 = pop_modes
                        .iter()
                        .zip(&mode_kernels)
                        .map(|((_, residue), fk)| residue[[beta, alpha]] * fk)
                        .sum();
                    let t1 = engine.ge(alpha, x).conj();
                    match pathway {
                        Pathway::Se => {
                            let dip =
                                engine.mu_ge(beta).powi(2) * engine.mu_ge(alpha).powi(2);
                            let g3 = engine.ge(beta, omega);
                            row[ComponentKind::Se as usize] -=
                                PAIR_NORM * filter * dip * (g3 * t1 * f_wait).re;
                        }
                        Pathway::Esa => {
                            for d in 0..nd {
                                let dip = engine.mu_ef(d, beta).powi(2)
                                    * engine.mu_ge(alpha).powi(2);
                                let g3 = engine.ef(d, beta, omega);
                                row[ComponentKind::Esa as usize] +=
                                    PAIR_NORM * filter * dip * (g3 * t1 * f_wait).re;
                            }
                        }
                        Pathway::Gsb => unreachable!(),
                    }
                }
            }
            // Registered coherence configurations (diagonal evolution).
            for (cfg, rate) in &coh_configs {
                let f_wait = f_kernel(&FKernelArgs {
                    omega,
                    delay,
                    rate: *rate,
                    field,
                });
                let t1 = engine.ge(cfg.from_bra, x).conj();
                match pathway {
                    Pathway::Se => {
                        let dip = engine.dipole_product(cfg);
                        let g3 = engine.ge(cfg.to_ket, omega);
                        row[ComponentKind::SeCoh as usize] -=
                            PAIR_NORM * filter * dip * (g3 * t1 * f_wait).re;
                    }
                    Pathway::Esa => {
                        for d in 0..nd {
                            let dip = engine.dipole_product_esa(cfg, d);
                            let g3 = engine.ef(d, cfg.to_bra, omega);
                            row[ComponentKind::EsaCoh as usize] +=
                                PAIR_NORM * filter * dip * (g3 * t1 * f_wait).re;
                        }
                    }
                    Pathway::Gsb => unreachable!(),
                }
            }
            row
        })
        .collect();

    let meta = SpectrumMeta {
        delay,
        pump_frequency: omega_p,
        entanglement_time: field.entanglement_time,
        mode: SignalMode::FiniteTeRephasing,
        sc_available: false,
    };
    let mut spectrum = collect_rows(omega_grid, rows, meta)?;
    spectrum.scale(field.conversion_scale);
    Ok(spectrum)
}

fn collect_rows(
    omega_grid: &[f64],
    rows: Vec<[f64; 6]>,
    meta: SpectrumMeta,
) -> Result<Spectrum1D, SignalError> {
    let components = std::array::from_fn(|k| rows.iter().map(|row| row[k]).collect());
    Spectrum1D::from_components(omega_grid.to_vec(), components, meta)
}

/// Quadrature controls for [`brute_force_signal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Per-axis relative tolerance.
    pub rel_tol: f64,
    /// Integration horizon in units of the slowest decay time of each factor.
    pub horizon_factor: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            rel_tol: 1e-6,
            horizon_factor: 30.0,
        }
    }
}

/// A single Liouville pathway prepared for quadrature: exponential rates for
/// the coherence intervals and an exponential-mode expansion of the waiting
/// interval.
struct QuadPath {
    /// +1 for ESA-type (odd number of bra interactions), −1 otherwise,
    /// applied as Im[prefactor · i ...].
    sign: f64,
    dipoles: f64,
    /// t₃ coherence rate: G₃(s) = e^{−z₃ s}.
    z3: Complex64,
    /// t₁ coherence rates per phase class.
    z1_rephasing: Complex64,
    z1_nonrephasing: Complex64,
    /// Waiting-interval modes: G₂(s) = Σ w_j e^{−z_j s}.
    wait_modes: Vec<(Complex64, Complex64)>,
    bucket: ComponentKind,
}

fn wait_value(modes: &[(Complex64, Complex64)], s: f64) -> Complex64 {
    modes.iter().map(|(z, w)| w * (-z * s).exp()).sum()
}

/// Direct numerical integration of the pathway integrals against the
/// finite-Tₑ four-body correlators, for the requested correlator classes.
///
/// The detection-frequency interval factorizes from the nested integral and
/// every window is split at its support edges, so each panel is smooth. The
/// auto-correlation (extra) terms of the GSB/SE correlators are
/// delay-independent and reported in the `Sc` component; when the waiting
/// integral they contain diverges they are skipped and flagged via
/// `meta.sc_available`.
pub fn brute_force_signal(
    omega_grid: &[f64],
    delay: f64,
    bundle: &ValidatedBundle,
    kinds: &[CorrelatorKind],
    settings: &OracleSettings,
) -> Result<Spectrum1D, SignalError> {
    let te = bundle.field().entanglement_time;
    if te <= 0.0 {
        return Err(SignalError::UnsupportedModel(
            "the oracle samples finite-Tₑ correlators; set a positive entanglement time".into(),
        ));
    }
    let tail = (-settings.horizon_factor).exp();
    if tail > settings.rel_tol {
        return Err(SignalError::TruncationTooShort {
            tail,
            tol: settings.rel_tol,
        });
    }
    let engine = Engine::new(bundle);
    let field = bundle.field().with_delay(delay);
    let ns = bundle.system().n_singles();
    let nd = bundle.system().n_doubles();

    let pop_modes = engine.prop.population_modes()?;
    let coh_rate = |k: usize, b: usize| {
        engine
            .prop
            .coherence_rate(CoherenceIndex::new(
                crate::propagator::Level::Single(k),
                crate::propagator::Level::Single(b),
            ))
            .expect("registered coherence")
    };
    let one = Complex64::new(1.0, 0.0);

    // Waiting-interval configurations: ground block, population block, and
    // the registered (diagonal or transfer-coupled) coherence block.
    let mut wait_configs: Vec<(WaitingConfig, Vec<(Complex64, Complex64)>)> = Vec::new();
    for beta in 0..ns {
        for alpha in 0..ns {
            let modes: Vec<(Complex64, Complex64)> = pop_modes
                .iter()
                .map(|(z, r)| (*z, r[[beta, alpha]]))
                .filter(|(_, w)| w.norm() > 1e-14)
                .collect();
            wait_configs.push((
                WaitingConfig {
                    from_ket: alpha,
                    from_bra: alpha,
                    to_ket: beta,
                    to_bra: beta,
                    coherence: false,
                },
                modes,
            ));
        }
    }
    let labels = engine.prop.coherence_labels().to_vec();
    if !labels.is_empty() {
        if bundle.model().has_coherence_transfer() {
            let modes = engine.prop.coherence_modes()?;
            for (ti, &(tk, tb)) in labels.iter().enumerate() {
                for (fi, &(fk, fb)) in labels.iter().enumerate() {
                    let entry_modes: Vec<(Complex64, Complex64)> = modes
                        .iter()
                        .map(|(z, r)| (*z, r[[ti, fi]]))
                        .filter(|(_, w)| w.norm() > 1e-14)
                        .collect();
                    if entry_modes.is_empty() {
                        continue;
                    }
                    wait_configs.push((
                        WaitingConfig {
                            from_ket: fk,
                            from_bra: fb,
                            to_ket: tk,
                            to_bra: tb,
                            coherence: true,
                        },
                        entry_modes,
                    ));
                }
            }
        } else {
            for &(k, b) in &labels {
                wait_configs.push((
                    WaitingConfig {
                        from_ket: k,
                        from_bra: b,
                        to_ket: k,
                        to_bra: b,
                        coherence: true,
                    },
                    vec![(coh_rate(k, b), one)],
                ));
            }
        }
    }

    // Expand the requested pathway families into quadrature-ready paths.
    let mut paths: Vec<(QuadPath, Pathway)> = Vec::new();
    for beta in 0..ns {
        for alpha in 0..ns {
            paths.push((
                QuadPath {
                    sign: -1.0,
                    dipoles: engine.mu_ge(beta).powi(2) * engine.mu_ge(alpha).powi(2),
                    z3: engine.prop.coherence_rate(CoherenceIndex::ge(beta)).unwrap(),
                    z1_rephasing: engine
                        .prop
                        .coherence_rate(CoherenceIndex::ge(alpha))
                        .unwrap()
                        .conj(),
                    z1_nonrephasing: engine
                        .prop
                        .coherence_rate(CoherenceIndex::ge(alpha))
                        .unwrap(),
                    wait_modes: vec![(Complex64::new(0.0, 0.0), one)],
                    bucket: ComponentKind::Gsb,
                },
                Pathway::Gsb,
            ));
        }
    }
    for (cfg, modes) in &wait_configs {
        let z1_r = engine
            .prop
            .coherence_rate(CoherenceIndex::ge(cfg.from_bra))
            .unwrap()
            .conj();
        let z1_nr = engine
            .prop
            .coherence_rate(CoherenceIndex::ge(cfg.from_ket))
            .unwrap();
        paths.push((
            QuadPath {
                sign: -1.0,
                dipoles: engine.dipole_product(cfg),
                z3: engine
                    .prop
                    .coherence_rate(CoherenceIndex::ge(cfg.to_ket))
                    .unwrap(),
                z1_rephasing: z1_r,
                z1_nonrephasing: z1_nr,
                wait_modes: modes.clone(),
                bucket: if cfg.coherence {
                    ComponentKind::SeCoh
                } else {
                    ComponentKind::Se
                },
            },
            Pathway::Se,
        ));
        for d in 0..nd {
            paths.push((
                QuadPath {
                    sign: 1.0,
                    dipoles: engine.dipole_product_esa(cfg, d),
                    z3: engine
                        .prop
                        .coherence_rate(CoherenceIndex::ef(d, cfg.to_bra))
                        .unwrap(),
                    z1_rephasing: z1_r,
                    z1_nonrephasing: z1_nr,
                    wait_modes: modes.clone(),
                    bucket: if cfg.coherence {
                        ComponentKind::EsaCoh
                    } else {
                        ComponentKind::Esa
                    },
                },
                Pathway::Esa,
            ));
        }
    }

    let omega_p = field.pump_frequency;
    let omega_s = field.signal_center;
    let omega_i = field.idler_center;
    let rel = settings.rel_tol;
    let sc_divergent = std::sync::atomic::AtomicBool::new(false);

    let rows: Vec<[f64; 6]> = omega_grid
        .par_iter()
        .map(|&omega| {
            let cap_i = omega - omega_i;
            let cap_s = omega - omega_s;
            let filter = field::sinc_filter(cap_i, te);
            let delay_phase = Complex64::new(0.0, -cap_i * delay).exp();
            let mut row = [0.0f64; 6];
            for (path, family) in &paths {
                for kind in kinds {
                    if kind.pathway != *family {
                        continue;
                    }
                    let z1 = match kind.phase {
                        Phase::Rephasing => path.z1_rephasing,
                        Phase::NonRephasing => path.z1_nonrephasing,
                    };
                    let h1 = settings.horizon_factor / z1.re;
                    let h3 = settings.horizon_factor / path.z3.re;
                    let i3 = quad::integrate(
                        |s3| (Complex64::new(0.0, omega) * s3 - path.z3 * s3).exp(),
                        0.0,
                        h3,
                        rel,
                    )
                    .expect("t3 quadrature");

                    let mut cross = Complex64::new(0.0, 0.0);
                    match kind.phase {
                        Phase::Rephasing => {
                            // windows in s2 alone; the s1 factor splits off
                            let p1 = Complex64::new(0.0, -(omega_p - omega));
                            let i1 =
                                quad::integrate(|s1| ((p1 - z1) * s1).exp(), 0.0, h1, rel)
                                    .expect("t1 quadrature");
                            let (lo_a, hi_a) =
                                ((delay - 0.5 * te).max(0.0), delay + 0.5 * te);
                            if hi_a > lo_a {
                                let i2 = quad::integrate(
                                    |s2| {
                                        wait_value(&path.wait_modes, s2)
                                            * (Complex64::new(0.0, cap_i) * s2).exp()
                                    },
                                    lo_a,
                                    hi_a,
                                    rel,
                                )
                                .expect("t2 quadrature");
                                cross += i2 / te * i1;
                            }
                            let hi_b = 0.5 * te - delay;
                            if hi_b > 0.0 {
                                let i2 = quad::integrate(
                                    |s2| {
                                        wait_value(&path.wait_modes, s2)
                                            * (Complex64::new(0.0, cap_s) * s2).exp()
                                    },
                                    0.0,
                                    hi_b,
                                    rel,
                                )
                                .expect("t2 quadrature");
                                cross += i2 / te * i1;
                            }
                        }
                        Phase::NonRephasing => {
                            // window couples s1 and s2: iterate with the
                            // inner bounds set by the rectangle support
                            let run = |window_center: f64,
                                       s1_phase: f64|
                             -> Complex64 {
                                // D₁(s2 + s1 − window_center) support.
                                let outer_hi = (window_center + 0.5 * te).min(h1);
                                if outer_hi <= 0.0 {
                                    return Complex64::new(0.0, 0.0);
                                }
                                let splits = [
                                    0.0,
                                    (window_center - 0.5 * te).clamp(0.0, outer_hi),
                                    outer_hi,
                                ];
                                let mut total = Complex64::new(0.0, 0.0);
                                for seg in splits.windows(2) {
                                    if seg[1] <= seg[0] {
                                        continue;
                                    }
                                    let piece = quad::integrate(
                                        |s1| {
                                            let lo =
                                                (window_center - s1 - 0.5 * te).max(0.0);
                                            let hi = window_center - s1 + 0.5 * te;
                                            if hi <= lo {
                                                return Complex64::new(0.0, 0.0);
                                            }
                                            let inner = quad::integrate(
                                                |s2| {
                                                    wait_value(&path.wait_modes, s2)
                                                        * (Complex64::new(0.0, cap_i) * s2)
                                                            .exp()
                                                },
                                                lo,
                                                hi,
                                                rel,
                                            )
                                            .expect("t2 quadrature");
                                            inner
                                                * ((Complex64::new(0.0, s1_phase) - z1) * s1)
                                                    .exp()
                                        },
                                        seg[0],
                                        seg[1],
                                        rel,
                                    )
                                    .expect("t1 quadrature");
                                    total += piece;
                                }
                                total / te
                            };
                            // D₁(s2+s1−Δt) with idler-detuned s2 phase
                            cross += run(delay, omega_s);
                            // D₁(s2+s1+Δt): only reachable when Δt < Tₑ/2
                            if 0.5 * te - delay > 0.0 {
                                let outer_hi = 0.5 * te - delay;
                                let piece = quad::integrate(
                                    |s1| {
                                        let hi = outer_hi - s1;
                                        if hi <= 0.0 {
                                            return Complex64::new(0.0, 0.0);
                                        }
                                        let inner = quad::integrate(
                                            |s2| {
                                                wait_value(&path.wait_modes, s2)
                                                    * (Complex64::new(0.0, cap_s) * s2).exp()
                                            },
                                            0.0,
                                            hi,
                                            rel,
                                        )
                                        .expect("t2 quadrature");
                                        inner
                                            * ((Complex64::new(0.0, omega_i) - z1) * s1).exp()
                                    },
                                    0.0,
                                    outer_hi,
                                    rel,
                                )
                                .expect("t1 quadrature");
                                cross += piece / te;
                            }
                        }
                    }
                    let cross_value = filter * delay_phase * cross * i3;
                    let pref = Complex64::new(0.0, path.sign);
                    row[path.bucket as usize] +=
                        PAIR_NORM * path.dipoles * (pref * cross_value).im;

                    // Auto-correlation (extra) terms: delay-independent,
                    // bucketed into Sc. ESA classes carry none.
                    let extra = extra_term(ExtraTermArgs {
                        kind: *kind,
                        path,
                        omega,
                        signal_center: omega_s,
                        cap_i,
                        cap_s,
                        te,
                        h1,
                        settings,
                        sc_divergent: &sc_divergent,
                    });
                    row[ComponentKind::Sc as usize] +=
                        PAIR_NORM * path.dipoles * (pref * (extra * i3)).im;
                }
            }
            row
        })
        .collect();

    let meta = SpectrumMeta {
        delay,
        pump_frequency: omega_p,
        entanglement_time: te,
        mode: SignalMode::Oracle,
        sc_available: !sc_divergent.load(std::sync::atomic::Ordering::Relaxed),
    };
    let mut spectrum = collect_rows(omega_grid, rows, meta)?;
    spectrum.scale(field.conversion_scale);
    Ok(spectrum)
}

struct ExtraTermArgs<'a> {
    kind: CorrelatorKind,
    path: &'a QuadPath,
    omega: f64,
    signal_center: f64,
    cap_i: f64,
    cap_s: f64,
    te: f64,
    h1: f64,
    settings: &'a OracleSettings,
    sc_divergent: &'a std::sync::atomic::AtomicBool,
}

/// The auto-correlation term of one correlator class, without the t₃ factor
/// (the caller multiplies by the detection-interval integral). Zero where the
/// class carries none.
fn extra_term(args: ExtraTermArgs<'_>) -> Complex64 {
    let ExtraTermArgs {
        kind,
        path,
        omega,
        signal_center,
        cap_i,
        cap_s,
        te,
        h1,
        settings,
        sc_divergent,
    } = args;
    let rel = settings.rel_tol;
    let zero = Complex64::new(0.0, 0.0);
    let z1 = match kind.phase {
        Phase::Rephasing => path.z1_rephasing,
        Phase::NonRephasing => path.z1_nonrephasing,
    };
    let tri = |x: f64| {
        if x.abs() <= te {
            (1.0 - x.abs() / te) / te
        } else {
            0.0
        }
    };
    match (kind.pathway, kind.phase) {
        (Pathway::Gsb, Phase::Rephasing) => {
            // D₂(s2+s1) window: bounded support in both intervals.
            let outer_hi = te.min(h1);
            quad::integrate(
                |s1| {
                    let hi = te - s1;
                    if hi <= 0.0 {
                        return zero;
                    }
                    let inner = quad::integrate(
                        |s2| {
                            wait_value(&path.wait_modes, s2)
                                * tri(s2 + s1)
                                * (Complex64::new(0.0, cap_s) * s2).exp()
                        },
                        0.0,
                        hi,
                        rel,
                    )
                    .expect("t2 quadrature");
                    inner * ((Complex64::new(0.0, -signal_center) - z1) * s1).exp()
                },
                0.0,
                outer_hi,
                rel,
            )
            .expect("t1 quadrature")
        }
        (Pathway::Se, phase) => {
            // D₂(s1) with an unwindowed waiting integral: finite only when
            // every waiting mode decays.
            if path
                .wait_modes
                .iter()
                .any(|(z, w)| z.re < 1e-12 && w.norm() > 1e-12)
            {
                sc_divergent.store(true, std::sync::atomic::Ordering::Relaxed);
                return zero;
            }
            let min_decay = path
                .wait_modes
                .iter()
                .map(|(z, _)| z.re)
                .fold(f64::INFINITY, f64::min);
            let h2 = settings.horizon_factor / min_decay;
            let i2 = quad::integrate(|s2| wait_value(&path.wait_modes, s2), 0.0, h2, rel)
                .expect("t2 quadrature");
            let s1_sign = match phase {
                Phase::Rephasing => -1.0,
                Phase::NonRephasing => 1.0,
            };
            let i1 = quad::integrate(
                |s1| {
                    tri(s1) * ((Complex64::new(0.0, s1_sign * signal_center) - z1) * s1).exp()
                },
                0.0,
                te.min(h1),
                rel,
            )
            .expect("t1 quadrature");
            i1 * i2
        }
        (Pathway::Gsb, Phase::NonRephasing) => {
            // Singular δ(s2) term: the waiting integral collapses with half
            // weight at the domain boundary and the spectral filter enters
            // squared; the s1 factor carries the bare detection phase.
            let filter = field::sinc_filter(cap_i, te);
            let g2_at_zero = wait_value(&path.wait_modes, 0.0);
            let i1 = quad::integrate(
                |s1| ((Complex64::new(0.0, omega) - z1) * s1).exp(),
                0.0,
                h1,
                rel,
            )
            .expect("t1 quadrature");
            filter * filter * 0.5 * g2_at_zero * i1
        }
        _ => zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::{dimer, dimer_with_coherence, two_level};
    use crate::model::{
        validate_system, EvolutionModel, ExcitonSystem, FieldConfig, ValidatedBundle,
    };
    use approx::assert_abs_diff_eq;

    fn lorentzian(gamma: f64, center: f64, omega: f64) -> f64 {
        gamma / (gamma * gamma + (center - omega).powi(2))
    }

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| lo + step * i as f64).collect()
    }

    /// Ladder system 0 → e → f, for exercising the ESA pathways with a
    /// single-state waiting interval.
    fn ladder(gamma_ge: f64, gamma_ef: f64, recovery: f64) -> ValidatedBundle {
        let system = ExcitonSystem {
            single_energies: vec![10.0],
            double_energies: vec![19.4],
            dipoles_ge: vec![1.0],
            dipoles_ef: vec![vec![1.3]],
            labels: None,
        };
        let field = FieldConfig {
            pump_frequency: 20.0,
            signal_center: 10.0,
            idler_center: 10.0,
            entanglement_time: 0.0,
            delay: 0.0,
            conversion_scale: 1.0,
        };
        let model = EvolutionModel::populations_only(
            vec![vec![0.0]],
            vec![recovery],
            vec![gamma_ge],
            vec![vec![gamma_ef]],
        );
        validate_system(system, field, model).unwrap()
    }

    #[test]
    fn spectrum_total_is_component_sum_and_grid_checked() {
        let bundle = dimer(0.02, [0.0, 0.0]);
        let grid = linspace(8.0, 12.0, 33);
        let s = signal_short_te(&grid, 3.0, &bundle).unwrap();
        for i in 0..grid.len() {
            let sum: f64 = ComponentKind::ALL
                .iter()
                .map(|&k| s.component(k)[i])
                .sum();
            assert_abs_diff_eq!(s.values()[i], sum, epsilon = 1e-12);
        }
        assert!(matches!(
            Spectrum1D::from_components(
                vec![1.0, 1.0],
                std::array::from_fn(|_| vec![0.0, 0.0]),
                *s.meta()
            ),
            Err(SignalError::BadGrid)
        ));
    }

    #[test]
    fn f_kernel_reduces_to_bare_propagator_as_te_vanishes() {
        let field = *two_level(1.0, 0.1).field();
        for &(omega, lam, dt) in &[(10.3, 0.08, 2.0f64), (9.1, 0.3, 0.7)] {
            let exact = (-lam * dt).exp();
            let at_zero = f_kernel(&FKernelArgs {
                omega,
                delay: dt,
                rate: Complex64::new(lam, 0.0),
                field: field.with_entanglement_time(0.0),
            });
            assert_abs_diff_eq!(at_zero.re, exact, epsilon = 1e-14);
            let tiny = f_kernel(&FKernelArgs {
                omega,
                delay: dt,
                rate: Complex64::new(lam, 0.0),
                field: field.with_entanglement_time(1e-5),
            });
            assert!((tiny - Complex64::new(exact, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn f_kernel_zero_decay_is_the_spectral_filter() {
        let field = two_level(1.0, 0.0).field().with_entanglement_time(1.5);
        for &omega in &[9.0, 10.0, 11.7] {
            let f = f_kernel(&FKernelArgs {
                omega,
                delay: 4.0, // > Tₑ/2
                rate: Complex64::new(0.0, 0.0),
                field,
            });
            let expect = crate::field::sinc_filter(omega - field.idler_center, 1.5);
            assert_abs_diff_eq!(f.re, expect, epsilon = 1e-14);
            assert_abs_diff_eq!(f.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn f_kernel_branches_join_at_half_te() {
        // Deterministic LCG draws over (ω, λ, ω_ab, Tₑ).
        let mut state: u64 = 0x2545F4914F6CDD1D;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let base = *two_level(1.0, 0.0).field();
        for _ in 0..1000 {
            let omega = 8.0 + 4.0 * next();
            let lam = 0.001 + 0.5 * next();
            let freq = -1.0 + 2.0 * next();
            let te = 0.05 + 3.0 * next();
            let field = base.with_entanglement_time(te);
            let rate = Complex64::new(lam, freq);
            let eps = 1e-12 * te;
            let below = f_kernel(&FKernelArgs {
                omega,
                delay: 0.5 * te - eps,
                rate,
                field,
            });
            let above = f_kernel(&FKernelArgs {
                omega,
                delay: 0.5 * te + eps,
                rate,
                field,
            });
            assert!(
                (below - above).norm() < 1e-10,
                "discontinuity at ω={omega}, λ={lam}, ω_ab={freq}, Tₑ={te}: {below} vs {above}"
            );
        }
    }

    #[test]
    fn stationary_two_level_has_zero_difference_spectrum() {
        let bundle = two_level(1.0, 0.0);
        let grid = linspace(8.0, 12.0, 65);
        for &dt in &[0.0, 0.5, 3.0, 20.0] {
            let ds = difference_spectrum(&grid, dt, &bundle).unwrap();
            assert!(ds.values().iter().all(|&v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn recovering_two_level_difference_matches_hand_evaluation() {
        let (gamma, recovery) = (1.0, 0.05);
        let bundle = two_level(gamma, recovery);
        let grid = linspace(8.0, 12.0, 65);
        let dt = 7.0;
        let ds = difference_spectrum(&grid, dt, &bundle).unwrap();
        let bleach = 1.0 - (-recovery * dt).exp();
        for (i, &omega) in grid.iter().enumerate() {
            let expect =
                lorentzian(gamma, 10.0, omega) * lorentzian(gamma, 10.0, 20.0 - omega) * bleach;
            assert_abs_diff_eq!(ds.values()[i], expect, epsilon = 1e-12);
            // all signal loss comes from the SE component
            assert_abs_diff_eq!(ds.component(ComponentKind::Se)[i], expect, epsilon = 1e-12);
            assert_abs_diff_eq!(ds.component(ComponentKind::Gsb)[i], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(ds.component(ComponentKind::Sc)[i], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn difference_peak_sits_at_resonance_only_for_matched_pump() {
        let (gamma, recovery) = (0.4, 0.05);
        let grid = linspace(8.0, 12.0, 801);
        let argmax = |bundle: &ValidatedBundle| -> f64 {
            let ds = difference_spectrum(&grid, 10.0, bundle).unwrap();
            let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
            for (i, &v) in ds.values().iter().enumerate() {
                if v > best {
                    best = v;
                    at = grid[i];
                }
            }
            at
        };
        let matched = two_level(gamma, recovery);
        assert_abs_diff_eq!(argmax(&matched), 10.0, epsilon = 0.006);
        // detuned pump: the Lorentzian product peaks away from ω₁₀
        let (system, mut field, model) = two_level(gamma, recovery).into_parts();
        field.pump_frequency = 20.0 + 3.0 * gamma;
        field.signal_center = field.pump_frequency / 2.0;
        field.idler_center = field.pump_frequency / 2.0;
        let detuned = validate_system(system, field, model).unwrap();
        assert!((argmax(&detuned) - 10.0).abs() > 0.3 * gamma);
    }

    #[test]
    fn zero_delay_difference_vanishes_identically() {
        let bundle = dimer(0.02, [0.0, 0.0]);
        let grid = linspace(8.0, 12.0, 33);
        let ds = difference_spectrum(&grid, 0.0, &bundle).unwrap();
        assert!(ds.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimer_difference_grows_with_downhill_transfer() {
        let k = 0.02;
        let bundle = dimer(k, [0.0, 0.0]);
        let omega_lower = [9.7];
        // ΔS_SE(ω₂₀; Δt) = (1 − e^{−kΔt}) (I_{10,10} − I_{20,10}) at ω = ω₂₀
        let gamma = 0.15;
        let i_change = 1.0f64.powi(4) * lorentzian(gamma, 10.3, 9.7) * lorentzian(gamma, 10.3, 10.3)
            - (1.2f64 * 1.2 * 1.0 * 1.0)
                * lorentzian(gamma, 9.7, 9.7)
                * lorentzian(gamma, 10.3, 10.3);
        for &dt in &[5.0, 25.0, 80.0] {
            let ds = difference_spectrum(&omega_lower, dt, &bundle).unwrap();
            let growth = 1.0 - (-k * dt).exp();
            assert_abs_diff_eq!(
                ds.component(ComponentKind::Se)[0],
                i_change * growth,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn population_dynamics_have_printed_sign_structure() {
        let bundle = dimer(0.02, [0.0, 0.0]);
        let grid = linspace(7.0, 13.0, 301);
        let s = signal_short_te(&grid, 10.0, &bundle).unwrap();
        for i in 0..grid.len() {
            assert!(s.component(ComponentKind::Gsb)[i] <= 0.0);
            assert!(s.component(ComponentKind::Se)[i] <= 0.0);
            assert!(s.component(ComponentKind::Esa)[i] >= 0.0);
        }
        assert!(!s.meta().sc_available, "dimer fixture has no net decay");
    }

    #[test]
    fn dipole_scaling_is_quartic() {
        let bundle = dimer(0.02, [0.0, 0.0]);
        let c = 1.7;
        let (system, field, model) = bundle.clone().into_parts();
        let scaled =
            validate_system(system.scale_dipoles(c), field, model).unwrap();
        let grid = linspace(8.0, 12.0, 17);
        let base = signal_short_te(&grid, 12.0, &bundle).unwrap();
        let big = signal_short_te(&grid, 12.0, &scaled).unwrap();
        for i in 0..grid.len() {
            assert_abs_diff_eq!(
                big.values()[i],
                base.values()[i] * c.powi(4),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn finite_te_signal_vanishes_at_the_filter_zero() {
        let te = 0.8;
        let (system, field, model) = two_level(1.0, 0.05).into_parts();
        let bundle =
            validate_system(system, field.with_entanglement_time(te), model).unwrap();
        let zero_omega = bundle.field().idler_center + 2.0 * std::f64::consts::PI / te;
        let grid = [zero_omega];
        for pathway in [Pathway::Se, Pathway::Esa] {
            let s = signal_finite_te_rephasing(&grid, 5.0, &bundle, pathway).unwrap();
            assert_abs_diff_eq!(s.values()[0], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn finite_te_rejects_gsb_and_coherence_transfer() {
        let bundle = two_level(1.0, 0.05);
        let grid = [10.0];
        assert!(matches!(
            signal_finite_te_rephasing(&grid, 1.0, &bundle, Pathway::Gsb),
            Err(SignalError::UnsupportedPathway(_))
        ));
        let coupled = dimer_with_coherence(0.02, Some(0.004));
        assert!(matches!(
            signal_finite_te_rephasing(&grid, 1.0, &coupled, Pathway::Se),
            Err(SignalError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn finite_te_converges_to_short_te_rephasing_share() {
        let (system, field, model) = dimer_with_coherence(0.02, None).into_parts();
        let grid = linspace(8.5, 11.5, 41);
        let dt = 25.0;
        let share = signal_short_te_phases(
            &grid,
            dt,
            &dimer_with_coherence(0.02, None),
            PhaseSelection::Only(Phase::Rephasing),
        )
        .unwrap();
        let te = 1e-4 / 0.02;
        let bundle =
            validate_system(system, field.with_entanglement_time(te), model).unwrap();
        for (pathway, slots) in [
            (Pathway::Se, [ComponentKind::Se, ComponentKind::SeCoh]),
            (Pathway::Esa, [ComponentKind::Esa, ComponentKind::EsaCoh]),
        ] {
            let finite = signal_finite_te_rephasing(&grid, dt, &bundle, pathway).unwrap();
            for slot in slots {
                let scale = share
                    .component(slot)
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(scale > 0.0);
                for i in 0..grid.len() {
                    let dev = (finite.component(slot)[i] - share.component(slot)[i]).abs();
                    assert!(
                        dev <= 1e-3 * scale,
                        "{slot:?} deviates by {dev:.3e} (scale {scale:.3e})"
                    );
                }
            }
        }
    }

    #[test]
    fn finite_te_population_signal_decays_with_the_slowest_rate() {
        let recovery = 0.05;
        let (system, field, model) = two_level(1.0, recovery).into_parts();
        let bundle =
            validate_system(system, field.with_entanglement_time(1.0), model).unwrap();
        let grid = [10.2];
        let values: Vec<f64> = [20.0, 40.0, 60.0, 80.0]
            .iter()
            .map(|&dt| {
                signal_finite_te_rephasing(&grid, dt, &bundle, Pathway::Se).unwrap().values()[0]
            })
            .collect();
        for pair in values.windows(2) {
            let slope = (pair[1].abs() / pair[0].abs()).ln() / 20.0;
            assert_abs_diff_eq!(slope, -recovery, epsilon = 1e-9);
        }
    }

    fn max_component_deviation(
        a: &Spectrum1D,
        b: &Spectrum1D,
        kind: ComponentKind,
    ) -> (f64, f64) {
        let scale = a
            .component(kind)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = a
            .component(kind)
            .iter()
            .zip(b.component(kind))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        (dev, scale)
    }

    #[test]
    fn oracle_matches_short_te_closed_forms_on_a_recovering_two_level() {
        let bundle = two_level(1.0, 2e-4);
        let te = 1e-3;
        let bundle = bundle.with_entanglement_time(te).unwrap();
        let grid = linspace(8.5, 11.5, 7);
        let dt = 12.0;
        let closed = signal_short_te(&grid, dt, &bundle).unwrap();
        let oracle = brute_force_signal(
            &grid,
            dt,
            &bundle,
            &CorrelatorKind::ALL,
            &OracleSettings::default(),
        )
        .unwrap();
        for kind in [ComponentKind::Gsb, ComponentKind::Se] {
            let (dev, scale) = max_component_deviation(&closed, &oracle, kind);
            assert!(
                dev <= 1e-3 * scale,
                "{kind:?}: dev {dev:.3e} vs scale {scale:.3e}"
            );
        }
        // no doubles: ESA vanishes on both routes
        assert!(oracle
            .component(ComponentKind::Esa)
            .iter()
            .all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn oracle_matches_short_te_esa_on_the_ladder() {
        let bundle = ladder(1.0, 1.2, 2e-4).with_entanglement_time(1e-3).unwrap();
        let grid = linspace(8.6, 10.8, 7);
        let dt = 12.0;
        let closed = signal_short_te(&grid, dt, &bundle).unwrap();
        let oracle = brute_force_signal(
            &grid,
            dt,
            &bundle,
            &CorrelatorKind::ALL,
            &OracleSettings::default(),
        )
        .unwrap();
        for kind in [ComponentKind::Gsb, ComponentKind::Se, ComponentKind::Esa] {
            let (dev, scale) = max_component_deviation(&closed, &oracle, kind);
            assert!(
                dev <= 1e-3 * scale,
                "{kind:?}: dev {dev:.3e} vs scale {scale:.3e}"
            );
        }
    }

    #[test]
    fn oracle_matches_finite_te_rephasing_in_both_delay_branches() {
        let te = 2.0;
        let bundle = ladder(1.0, 1.2, 0.02).with_entanglement_time(te).unwrap();
        let grid = linspace(9.0, 11.0, 5);
        for &dt in &[12.0, 0.6] {
            for (pathway, kinds, slot) in [
                (
                    Pathway::Se,
                    [CorrelatorKind::new(Pathway::Se, Phase::Rephasing)],
                    ComponentKind::Se,
                ),
                (
                    Pathway::Esa,
                    [CorrelatorKind::new(Pathway::Esa, Phase::Rephasing)],
                    ComponentKind::Esa,
                ),
            ] {
                let closed =
                    signal_finite_te_rephasing(&grid, dt, &bundle, pathway).unwrap();
                let oracle = brute_force_signal(
                    &grid,
                    dt,
                    &bundle,
                    &kinds,
                    &OracleSettings::default(),
                )
                .unwrap();
                let (dev, scale) = max_component_deviation(&closed, &oracle, slot);
                assert!(
                    dev <= 1e-4 * scale,
                    "Δt={dt}, {slot:?}: dev {dev:.3e} vs scale {scale:.3e}"
                );
            }
        }
    }

    #[test]
    fn oracle_matches_rephasing_coherence_pathways_exactly() {
        // The rephasing closed form involves no waiting-time factorization,
        // so even coherence configurations agree to quadrature accuracy.
        let (system, field, model) = dimer_with_coherence(0.02, None).into_parts();
        let te = 5e-3;
        let bundle =
            validate_system(system, field.with_entanglement_time(te), model).unwrap();
        let grid = linspace(9.4, 10.6, 5);
        let dt = 25.0;
        let closed = signal_finite_te_rephasing(&grid, dt, &bundle, Pathway::Se).unwrap();
        let oracle = brute_force_signal(
            &grid,
            dt,
            &bundle,
            &[CorrelatorKind::new(Pathway::Se, Phase::Rephasing)],
            &OracleSettings::default(),
        )
        .unwrap();
        for slot in [ComponentKind::Se, ComponentKind::SeCoh] {
            let (dev, scale) = max_component_deviation(&closed, &oracle, slot);
            assert!(
                dev <= 1e-4 * scale,
                "{slot:?}: dev {dev:.3e} vs scale {scale:.3e}"
            );
        }
    }

    #[test]
    fn waiting_time_factorization_error_shrinks_with_scale_separation() {
        // The short-Tₑ closed forms factorize the non-rephasing waiting
        // evolution; the oracle does not. The discrepancy must shrink as the
        // optical dephasing outpaces the kinetics.
        let grid = [10.1];
        let dt = 12.0;
        let te = 1e-3;
        let deviation = |recovery: f64| -> f64 {
            let bundle = two_level(1.0, recovery).with_entanglement_time(te).unwrap();
            let oracle = brute_force_signal(
                &grid,
                dt,
                &bundle,
                &[CorrelatorKind::new(Pathway::Se, Phase::NonRephasing)],
                &OracleSettings::default(),
            )
            .unwrap();
            let share = signal_short_te_phases(
                &grid,
                dt,
                &bundle,
                PhaseSelection::Only(Phase::NonRephasing),
            )
            .unwrap();
            (oracle.component(ComponentKind::Se)[0] - share.component(ComponentKind::Se)[0])
                .abs()
                / share.component(ComponentKind::Se)[0].abs()
        };
        let coarse = deviation(0.05);
        let fine = deviation(0.005);
        assert!(
            fine < 0.25 * coarse,
            "expected ~linear shrinkage, got {coarse:.3e} → {fine:.3e}"
        );
    }

    #[test]
    fn oracle_requires_finite_entanglement_time() {
        let bundle = two_level(1.0, 0.1);
        assert!(matches!(
            brute_force_signal(
                &[10.0],
                1.0,
                &bundle,
                &CorrelatorKind::ALL,
                &OracleSettings::default()
            ),
            Err(SignalError::UnsupportedModel(_))
        ));
        let finite = bundle.with_entanglement_time(0.5).unwrap();
        assert!(matches!(
            brute_force_signal(
                &[10.0],
                1.0,
                &finite,
                &CorrelatorKind::ALL,
                &OracleSettings {
                    rel_tol: 1e-6,
                    horizon_factor: 5.0,
                }
            ),
            Err(SignalError::TruncationTooShort { .. })
        ));
    }
}
