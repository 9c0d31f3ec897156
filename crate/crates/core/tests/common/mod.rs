//! Shared helpers for the integration suites: config loading, table parsing,
//! and the field-correlator substitution oracle.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use twinspec::model::{FieldConfig, ValidatedBundle};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load_bundle(name: &str) -> ValidatedBundle {
    twinspec::config::load_config(&config_path(name))
        .expect("shipped config parses")
        .0
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Deterministic xorshift-multiply generator for reproducible random draws.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Substitution oracle for the four-body field correlators.
///
/// Rebuilds each correlator from the primitive field quantities — the
/// two-photon wavefunction, the beam auto-correlation, and the elementary
/// detection commutator — with the detection pairing computed by numerical
/// Fourier transform rather than the closed sinc algebra. Returns the regular
/// part and the coefficient of the singular δ(s₂) term, both with the common
/// prefactor removed.
pub mod oracle {
    use super::*;
    use std::f64::consts::TAU;
    use twinspec::field::{
        autocorrelation, two_photon_wavefunction, Branch, CorrelatorKind, Pathway, Phase,
    };
    use twinspec::quad;

    /// ⟨ψ| Ē⁻(x) a_i†(ω) |vac⟩: conjugate of the Fourier transform of the
    /// two-photon wavefunction over its idler argument. The signal branch of
    /// Ē⁻ rides the delayed path, hence the shift by Δt.
    fn detection_pairing(x: f64, omega: f64, field: &FieldConfig) -> Complex64 {
        let te = field.entanglement_time;
        let signal_time = x + field.delay;
        let value = quad::integrate(
            |s| {
                two_photon_wavefunction(signal_time, s, field)
                    * Complex64::new(0.0, omega * s).exp()
            },
            signal_time - 0.5 * te,
            signal_time + 0.5 * te,
            1e-13,
        )
        .expect("detection pairing quadrature");
        value.conj()
    }

    /// ⟨ψ| a_i†(ω) Ē⁺(c) |ψ⟩: Fourier transform of the idler
    /// auto-correlation, split at its triangular kink.
    fn detection_autocorrelation(c: f64, omega: f64, field: &FieldConfig) -> Complex64 {
        let te = field.entanglement_time;
        let kernel = |x: f64| {
            autocorrelation(x, c, Branch::Idler, field) * Complex64::new(0.0, -omega * x).exp()
        };
        let left = quad::integrate(kernel, c - te, c, 1e-13).expect("quadrature");
        let right = quad::integrate(kernel, c, c + te, 1e-13).expect("quadrature");
        left + right
    }

    /// ⟨vac| Ē⁺(x) Ē⁺(y) |ψ⟩: both branch assignments of the pair.
    fn pair_annihilation(x: f64, y: f64, field: &FieldConfig) -> Complex64 {
        two_photon_wavefunction(x + field.delay, y, field)
            + two_photon_wavefunction(y + field.delay, x, field)
    }

    /// Signal-branch auto-correlation pairing ⟨Ē⁻(x) Ē⁺(y)⟩ restricted to the
    /// delayed signal path.
    fn signal_pair(x: f64, y: f64, field: &FieldConfig) -> Complex64 {
        autocorrelation(x + field.delay, y + field.delay, Branch::Signal, field)
    }

    /// Elementary commutator pairing ⟨Ē⁺(x) a_i†(ω)⟩ = e^{−iωx} / 2π.
    fn commutator_pairing(x: f64, omega: f64) -> Complex64 {
        Complex64::new(0.0, -omega * x).exp() / TAU
    }

    /// Regular part and singular δ(s₂) coefficient of C_x^(y), with the
    /// common ζ²/(2π)² prefactor removed.
    pub fn substitution(
        kind: CorrelatorKind,
        omega: f64,
        t: f64,
        s3: f64,
        s2: f64,
        s1: f64,
        field: &FieldConfig,
    ) -> (Complex64, Complex64) {
        let a = t - s3 - s2 - s1;
        let u = t - s3 - s2;
        let b = t - s3;
        let chi = |x: f64| detection_pairing(x, omega, field);
        let norm = TAU * TAU / field.conversion_scale.powi(2);
        let zero = Complex64::new(0.0, 0.0);
        let (regular, singular) = match (kind.pathway, kind.phase) {
            (Pathway::Gsb, Phase::Rephasing) => (
                chi(a) * pair_annihilation(u, b, field)
                    + commutator_pairing(u, omega) * signal_pair(a, b, field),
                zero,
            ),
            (Pathway::Gsb, Phase::NonRephasing) => (
                chi(u) * pair_annihilation(b, a, field),
                detection_autocorrelation(t - s3 - s1, omega, field) / TAU,
            ),
            (Pathway::Se, Phase::Rephasing) => (
                chi(a) * pair_annihilation(b, u, field)
                    + commutator_pairing(b, omega) * signal_pair(a, u, field),
                zero,
            ),
            (Pathway::Se, Phase::NonRephasing) => (
                chi(u) * pair_annihilation(b, a, field)
                    + commutator_pairing(b, omega) * signal_pair(u, a, field),
                zero,
            ),
            (Pathway::Esa, Phase::Rephasing) => (chi(a) * pair_annihilation(b, u, field), zero),
            (Pathway::Esa, Phase::NonRephasing) => {
                (chi(u) * pair_annihilation(b, a, field), zero)
            }
        };
        (regular * norm, singular * norm)
    }
}

/// Minimal parser for the CLI's tab-separated spectrum tables.
pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_table(text: &str) -> Table {
    let mut header = Vec::new();
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix("# ") {
            if let Some((key, value)) = comment.split_once(':') {
                if key == "columns" {
                    columns = value
                        .trim()
                        .split('\t')
                        .map(|s| s.to_string())
                        .collect();
                } else {
                    header.push((key.to_string(), value.trim().to_string()));
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            line.split('\t')
                .map(|token| token.parse::<f64>().expect("numeric cell"))
                .collect(),
        );
    }
    Table {
        header,
        columns,
        rows,
    }
}

impl Table {
    pub fn column(&self, name: &str) -> Vec<f64> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("missing column {name}"));
        self.rows.iter().map(|r| r[idx]).collect()
    }
}
