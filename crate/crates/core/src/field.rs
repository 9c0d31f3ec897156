//! Statistics of the entangled photon pair: the rectangular/triangular window
//! functions Dₙ, the sinc spectral filter, the two-photon wavefunction, the
//! beam auto-correlation, and the six four-body field correlators entering
//! the third-order transmission signal.
//!
//! The pair is generated by parametric down-conversion with a monochromatic
//! pump, so the two-photon amplitude is energy-constrained to
//! ω₁ + ω₂ = ω_p and spectrally filtered by sinc((ω₂ − ω̄_i)Tₑ/2). The signal
//! beam pumps the molecule and the idler probes it after a path delay Δt.
//!
//! All four-body correlators omit the common prefactor ζ²/(2π)²; the
//! conversion scale is applied once at spectrum assembly.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::model::FieldConfig;

/// Third-order pathway family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pathway {
    /// Ground-state bleaching.
    Gsb,
    /// Stimulated emission.
    Se,
    /// Excited-state absorption.
    Esa,
}

/// Phase class of a pathway, set by the relative sign of the first- and
/// third-interval coherence phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Rephasing,
    NonRephasing,
}

/// One of the six pathway/field-correlator classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CorrelatorKind {
    pub pathway: Pathway,
    pub phase: Phase,
}

impl CorrelatorKind {
    pub const fn new(pathway: Pathway, phase: Phase) -> Self {
        CorrelatorKind { pathway, phase }
    }

    /// All six correlator classes.
    pub const ALL: [CorrelatorKind; 6] = [
        CorrelatorKind::new(Pathway::Gsb, Phase::Rephasing),
        CorrelatorKind::new(Pathway::Gsb, Phase::NonRephasing),
        CorrelatorKind::new(Pathway::Se, Phase::Rephasing),
        CorrelatorKind::new(Pathway::Se, Phase::NonRephasing),
        CorrelatorKind::new(Pathway::Esa, Phase::Rephasing),
        CorrelatorKind::new(Pathway::Esa, Phase::NonRephasing),
    ];
}

/// Which beam an auto-correlation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FieldError {
    #[error("the delta-function limit is symbolic and cannot be sampled pointwise")]
    DeltaNotSamplable,
}

/// Window-function mode: the symbolic Tₑ → 0 limit, or a finite width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DnMode {
    /// Dₙ collapses to δ(t); consumers fold integrals analytically.
    DeltaLimit,
    /// Finite entanglement time; Dₙ is a rectangle (n = 1) or triangle (n = 2).
    Finite,
}

/// A Dₙ window: the inverse Fourier transform of sincⁿ(ωTₑ/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnForm {
    pub mode: DnMode,
    /// Order n ∈ {1, 2}.
    pub order: u8,
    /// Entanglement time (used in `Finite` mode; must be positive there).
    pub te: f64,
}

impl DnForm {
    pub fn finite(order: u8, te: f64) -> Self {
        assert!(order == 1 || order == 2, "Dₙ is defined for n ∈ {{1, 2}}");
        assert!(te > 0.0, "finite Dₙ requires Tₑ > 0");
        DnForm {
            mode: DnMode::Finite,
            order,
            te,
        }
    }

    pub fn delta_limit(order: u8) -> Self {
        DnForm {
            mode: DnMode::DeltaLimit,
            order,
            te: 0.0,
        }
    }
}

/// Evaluate Dₙ(t). `DeltaLimit` mode is symbolic and not samplable.
pub fn dn(form: &DnForm, t: f64) -> Result<f64, FieldError> {
    match form.mode {
        DnMode::DeltaLimit => Err(FieldError::DeltaNotSamplable),
        DnMode::Finite => Ok(match form.order {
            1 => rect(t, form.te),
            2 => triangle(t, form.te),
            _ => unreachable!("order checked at construction"),
        }),
    }
}

/// Rectangular window: 1/Tₑ on |t| ≤ Tₑ/2.
fn rect(t: f64, te: f64) -> f64 {
    if t.abs() <= 0.5 * te {
        1.0 / te
    } else {
        0.0
    }
}

/// Triangular window: (1/Tₑ)(1 − |t|/Tₑ) on |t| ≤ Tₑ.
fn triangle(t: f64, te: f64) -> f64 {
    let x = t.abs() / te;
    if x <= 1.0 {
        (1.0 - x) / te
    } else {
        0.0
    }
}

/// sinc(x) = sin(x)/x with the removable singularity handled by series.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Spectral filter D̃(ω) = sinc(ωTₑ/2) of the phase-matched beam.
pub fn sinc_filter(omega: f64, te: f64) -> f64 {
    sinc(0.5 * omega * te)
}

/// Complex-argument sinc, used by the finite-Tₑ response kernel where the
/// argument picks up the decay rate.
pub fn sinc_complex(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Two-photon wavefunction ⟨vac| E⁺_s(t) E⁺_i(s) |ψ⟩
/// = (ζ/2π) D₁(t−s) e^{−i ω̄_s t − i ω̄_i s}.
///
/// Finite-Tₑ mode only: the delta-correlated limit is handled analytically by
/// consumers, never sampled.
pub fn two_photon_wavefunction(t: f64, s: f64, field: &FieldConfig) -> Complex64 {
    let te = field.entanglement_time;
    assert!(te > 0.0, "two-photon wavefunction requires finite Tₑ");
    let envelope = field.conversion_scale / TAU * rect(t - s, te);
    let phase = -(field.signal_center * t + field.idler_center * s);
    envelope * Complex64::new(0.0, phase).exp()
}

/// Beam auto-correlation ⟨ψ| E⁻_σ(t) E⁺_σ(s) |ψ⟩
/// = (ζ²/2π) D₂(t−s) e^{i ω̄_σ (t−s)}.
pub fn autocorrelation(t: f64, s: f64, branch: Branch, field: &FieldConfig) -> Complex64 {
    let te = field.entanglement_time;
    assert!(te > 0.0, "auto-correlation requires finite Tₑ");
    let center = match branch {
        Branch::Signal => field.signal_center,
        Branch::Idler => field.idler_center,
    };
    let envelope = field.conversion_scale.powi(2) / TAU * triangle(t - s, te);
    envelope * Complex64::new(0.0, center * (t - s)).exp()
}

fn phase(arg: f64) -> Complex64 {
    Complex64::new(0.0, arg).exp()
}

/// Four-body field correlator C_x^(y)(ω, t; s₃, s₂, s₁) for finite Tₑ,
/// evaluated term by term (regular part).
///
/// Every kind carries two cross terms built on D₁ windows; the GSB and SE
/// kinds carry one extra auto-correlation term. The non-rephasing GSB extra
/// term is singular (a bare δ(s₂)); its coefficient is exposed separately by
/// [`four_body_singular_weight`] and is *not* included here.
///
/// The common prefactor ζ²/(2π)² is omitted throughout.
pub fn four_body(
    kind: CorrelatorKind,
    omega: f64,
    t: f64,
    s3: f64,
    s2: f64,
    s1: f64,
    field: &FieldConfig,
) -> Complex64 {
    let te = field.entanglement_time;
    assert!(te > 0.0, "four-body correlators require finite Tₑ");
    let dt = field.delay;
    let omega_i = field.idler_center;
    let omega_s = field.signal_center;
    let omega_p = field.pump_frequency;
    let cap_i = omega - omega_i; // Ω_i
    let cap_s = omega - omega_s; // Ω_s
    let filter = sinc_filter(cap_i, te);

    let cross = match kind.phase {
        Phase::Rephasing => {
            // D₁(s₂ ∓ Δt) windows with s₁ phase −(ω_p − ω)s₁
            let common = phase(omega * s3 - (omega_p - omega) * s1 - cap_i * dt - omega * t);
            filter
                * (rect(s2 - dt, te) * phase(cap_i * s2)
                    + rect(s2 + dt, te) * phase(cap_s * s2))
                * common
        }
        Phase::NonRephasing => {
            // D₁(s₂ + s₁ ∓ Δt) windows with beam-center s₁ phases
            let common = phase(omega * s3 - cap_i * dt - omega * t);
            filter
                * (rect(s2 + s1 - dt, te) * phase(cap_i * s2 + omega_s * s1)
                    + rect(s2 + s1 + dt, te) * phase(cap_s * s2 + omega_i * s1))
                * common
        }
    };

    let extra = match (kind.pathway, kind.phase) {
        (Pathway::Gsb, Phase::Rephasing) => {
            triangle(s2 + s1, te) * phase(omega * s3 + cap_s * s2 - omega_s * s1 - omega * t)
        }
        (Pathway::Se, Phase::Rephasing) => {
            triangle(s1, te) * phase(omega * s3 - omega_s * s1 - omega * t)
        }
        (Pathway::Se, Phase::NonRephasing) => {
            triangle(s1, te) * phase(omega * s3 + omega_s * s1 - omega * t)
        }
        // The GSB non-rephasing extra term is singular; see
        // `four_body_singular_weight`.
        _ => Complex64::new(0.0, 0.0),
    };

    cross + extra
}

/// Coefficient of the singular δ(s₂) term of the non-rephasing GSB
/// correlator: D̃(Ω_i)² e^{i(ωs₃ + ωs₁ − ωt)}. Zero for every other kind.
pub fn four_body_singular_weight(
    kind: CorrelatorKind,
    omega: f64,
    t: f64,
    s3: f64,
    s1: f64,
    field: &FieldConfig,
) -> Complex64 {
    if kind != CorrelatorKind::new(Pathway::Gsb, Phase::NonRephasing) {
        return Complex64::new(0.0, 0.0);
    }
    let te = field.entanglement_time;
    assert!(te > 0.0, "four-body correlators require finite Tₑ");
    let filter = sinc_filter(omega - field.idler_center, te);
    filter * filter * phase(omega * s3 + omega * s1 - omega * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldConfig;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn field(te: f64, dt: f64) -> FieldConfig {
        FieldConfig {
            pump_frequency: 20.0,
            signal_center: 10.4,
            idler_center: 9.6,
            entanglement_time: te,
            delay: dt,
            conversion_scale: 1.0,
        }
    }

    #[test]
    fn d1_rect_values() {
        let form = DnForm::finite(1, 2.0);
        assert_abs_diff_eq!(dn(&form, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dn(&form, 0.9).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(dn(&form, 1.1).unwrap(), 0.0);
    }

    #[test]
    fn d2_triangle_values() {
        let form = DnForm::finite(2, 2.0);
        assert_abs_diff_eq!(dn(&form, 1.0).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(dn(&form, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(dn(&form, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn delta_limit_is_not_samplable() {
        let form = DnForm::delta_limit(1);
        assert_eq!(dn(&form, 0.0), Err(FieldError::DeltaNotSamplable));
    }

    #[test]
    fn dn_has_unit_area() {
        for order in [1u8, 2u8] {
            for te in [0.3, 2.0, 11.0] {
                let form = DnForm::finite(order, te);
                let area = crate::quad::integrate_real(
                    |t| dn(&form, t).unwrap(),
                    -1.5 * te,
                    1.5 * te,
                    1e-12,
                )
                .unwrap();
                assert_abs_diff_eq!(area, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sinc_filter_special_values() {
        let te = 2.0;
        assert_abs_diff_eq!(sinc_filter(0.0, te), 1.0, epsilon = 1e-15);
        // first zero at ωTₑ/2 = π
        assert_abs_diff_eq!(sinc_filter(2.0 * PI / te, te), 0.0, epsilon = 1e-15);
        // ωTₑ/2 = π/2 → 2/π
        assert_abs_diff_eq!(sinc_filter(PI / te, te), 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn sinc_series_matches_direct_at_crossover() {
        for &x in &[9.9e-5, 1.1e-4] {
            assert_abs_diff_eq!(sinc(x), x.sin() / x, epsilon = 1e-15);
        }
        let z = Complex64::new(9e-5, 5e-5);
        assert!((sinc_complex(z) - z.sin() / z).norm() < 1e-14);
    }

    #[test]
    fn wavefunction_support_and_center() {
        let te = 1.4;
        let f = field(te, 0.0);
        // outside the rectangular support
        assert_eq!(
            two_photon_wavefunction(te, 0.0, &f),
            Complex64::new(0.0, 0.0)
        );
        // at coincident times the envelope is ζ/(2πTₑ)
        let v = two_photon_wavefunction(0.0, 0.0, &f);
        assert_abs_diff_eq!(v.re, 1.0 / (TAU * te), epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn autocorrelation_apex_support_and_symmetry() {
        let te = 0.8;
        let f = field(te, 0.0);
        let apex = autocorrelation(3.0, 3.0, Branch::Idler, &f);
        assert_abs_diff_eq!(apex.re, 1.0 / (TAU * te), epsilon = 1e-15);
        assert_eq!(
            autocorrelation(te + 1.0, 0.0, Branch::Signal, &f),
            Complex64::new(0.0, 0.0)
        );
        let v = autocorrelation(0.31, 0.11, Branch::Signal, &f);
        let w = autocorrelation(0.11, 0.31, Branch::Signal, &f);
        assert!((v - w.conj()).norm() < 1e-15);
    }

    #[test]
    fn rephasing_cross_terms_vanish_when_windows_are_empty() {
        let te = 0.5;
        let dt = 3.0;
        let f = field(te, dt);
        // s2 outside both [Δt ± Tₑ/2] and [−Δt ± Tₑ/2]
        for kind in CorrelatorKind::ALL {
            if kind.phase != Phase::Rephasing {
                continue;
            }
            let v = four_body(kind, 10.0, 0.0, 0.2, 1.0, 5.0, &f);
            if kind.pathway == Pathway::Esa {
                assert_eq!(v, Complex64::new(0.0, 0.0));
            } else {
                // only the auto-correlation extra term can survive, and here
                // its window is empty too (s1 and s2+s1 both exceed Tₑ)
                assert_eq!(v, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn rephasing_d1_terms_agree_across_pathways() {
        // On arguments where every auto-correlation window is closed the
        // GSB/SE/ESA rephasing correlators are identical expressions.
        let te = 0.5;
        let f = field(te, 1.0);
        let (omega, t, s3, s2) = (10.2, 0.0, 0.4, 1.1);
        let s1 = 2.0; // > Tₑ and s2 + s1 > Tₑ
        let esa = four_body(CorrelatorKind::new(Pathway::Esa, Phase::Rephasing), omega, t, s3, s2, s1, &f);
        let gsb = four_body(CorrelatorKind::new(Pathway::Gsb, Phase::Rephasing), omega, t, s3, s2, s1, &f);
        let se = four_body(CorrelatorKind::new(Pathway::Se, Phase::Rephasing), omega, t, s3, s2, s1, &f);
        assert!((esa - gsb).norm() < 1e-15);
        assert!((esa - se).norm() < 1e-15);
        assert!(esa.norm() > 0.0);
    }

    #[test]
    fn tiny_te_rephasing_reduces_to_delta_collapsed_phase() {
        // Integrating the ESA rephasing correlator over s₂ with tiny Tₑ
        // reproduces the collapsed phase e^{i(ωs₃ − (ω_p−ω)s₁)} at s₂ = Δt.
        let te = 1e-4;
        let dt = 0.7;
        let f = field(te, dt);
        let (omega, s3, s1) = (10.1, 0.33, 0.52);
        let kind = CorrelatorKind::new(Pathway::Esa, Phase::Rephasing);
        let integral = crate::quad::integrate(
            |s2| four_body(kind, omega, 0.0, s3, s2, s1, &f),
            dt - te,
            dt + te,
            1e-10,
        )
        .unwrap();
        let expect = phase(omega * s3 - (f.pump_frequency - omega) * s1);
        assert!(
            (integral - expect).norm() < 1e-4,
            "{integral} vs {expect}"
        );
    }

    proptest! {
        #[test]
        fn sinc_filter_is_even(omega in -40.0..40.0f64) {
            let te = 1.7;
            prop_assert!((sinc_filter(omega, te) - sinc_filter(-omega, te)).abs() < 1e-15);
        }

        #[test]
        fn dn_is_even(t in -3.0..3.0f64, order in 1u8..3u8) {
            let form = DnForm::finite(order, 1.9);
            let plus = dn(&form, t).unwrap();
            let minus = dn(&form, -t).unwrap();
            prop_assert!((plus - minus).abs() < 1e-15);
        }

        #[test]
        fn wavefunction_modulus_is_shift_invariant(
            t in -2.0..2.0f64, s in -2.0..2.0f64, tau in -5.0..5.0f64
        ) {
            let f = field(1.3, 0.0);
            let base = two_photon_wavefunction(t, s, &f).norm();
            let shifted = two_photon_wavefunction(t + tau, s + tau, &f).norm();
            prop_assert!((base - shifted).abs() < 1e-15);
        }
    }
}
