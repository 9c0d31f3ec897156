//! Impulsive-limit absorptive two-dimensional spectra, anti-diagonal cuts,
//! and the correspondence check against the entangled-photon transmission
//! signal.
//!
//! The absorptive spectrum is the sum of the rephasing and non-rephasing
//! contributions; its GSB and SE parts are positive and ESA negative, i.e.
//! every component carries the opposite sign of its transmission-signal
//! counterpart. Along the anti-diagonal ω₁ + ω₃ = ω_p the transmission signal
//! satisfies S(ω₃; Δt) = −S₂D(ω₃, Δt, ω_p − ω₃) up to the delay-independent
//! S_c term, which the difference form removes.

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::ValidatedBundle;
use crate::propagator::{CoherenceIndex, Propagator, PropagatorError};
use crate::signal::{
    difference_spectrum, ComponentKind, SignalError, SignalMode, Spectrum1D, SpectrumMeta,
};

/// Component slots of a 2D spectrum. Coherence pathways are folded into the
/// SE and ESA families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component2D {
    Gsb = 0,
    Se = 1,
    Esa = 2,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TwodError {
    #[error("the anti-diagonal ω₁ + ω₃ = {0} does not intersect the grid")]
    LineOutsideGrid(f64),
    #[error("frequency axes must be non-empty and strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn check_axis(axis: &[f64]) -> Result<(), TwodError> {
    if axis.is_empty() || axis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TwodError::BadGrid);
    }
    Ok(())
}

/// Absorptive 2D spectrum on an (ω₃, ω₁) grid at waiting time t₂.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    omega3: Vec<f64>,
    omega1: Vec<f64>,
    t2: f64,
    /// Total signal, indexed `[i3, i1]`.
    values: Array2<f64>,
    components: [Array2<f64>; 3],
}

impl Spectrum2D {
    pub fn omega3(&self) -> &[f64] {
        &self.omega3
    }

    pub fn omega1(&self) -> &[f64] {
        &self.omega1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn component(&self, kind: Component2D) -> &Array2<f64> {
        &self.components[kind as usize]
    }
}

/// Pointwise GSB/SE/ESA contributions of the absorptive 2D spectrum at
/// (ω₃, t₂, ω₁).
pub fn absorptive_2d_point(
    omega3: f64,
    t2: f64,
    omega1: f64,
    bundle: &ValidatedBundle,
) -> Result<[f64; 3], TwodError> {
    let prop = Propagator::new(bundle);
    let entries = prop.transfer_entries(t2)?;
    point_with(&prop, &entries, omega3, omega1, bundle)
}

/// Shared pointwise evaluator; `entries` must come from the same waiting time.
fn point_with(
    prop: &Propagator<'_>,
    entries: &[crate::propagator::TransferEntry],
    omega3: f64,
    omega1: f64,
    bundle: &ValidatedBundle,
) -> Result<[f64; 3], TwodError> {
    let system = bundle.system();
    let ns = system.n_singles();
    let nd = system.n_doubles();
    let mu = &system.dipoles_ge;
    let ge = |a: usize, w: f64| prop.laplace(CoherenceIndex::ge(a), w).expect("validated");
    let ef = |d: usize, a: usize, w: f64| {
        prop.laplace(CoherenceIndex::ef(d, a), w).expect("validated")
    };
    let pair_weight = 0.5; // one rephasing/non-rephasing pair per pathway
    let mut out = [0.0f64; 3];

    let ground = prop.ground_survival(0.0)?; // identically one for any t₂
    for beta in 0..ns {
        let g3 = ge(beta, omega3);
        for alpha in 0..ns {
            let pair = ge(alpha, omega1) + ge(alpha, omega1).conj();
            let dip = mu[beta].powi(2) * mu[alpha].powi(2);
            out[Component2D::Gsb as usize] += pair_weight * dip * (g3 * pair).re * ground;
        }
    }
    for entry in entries {
        let pair = ge(entry.from_ket, omega1) + ge(entry.from_bra, omega1).conj();
        let dip_se = mu[entry.to_bra] * mu[entry.to_ket] * mu[entry.from_bra] * mu[entry.from_ket];
        let g3 = ge(entry.to_ket, omega3);
        out[Component2D::Se as usize] +=
            pair_weight * dip_se * (g3 * pair * entry.amplitude).re;
        for d in 0..nd {
            let dip_esa = system.dipoles_ef[d][entry.to_bra]
                * system.dipoles_ef[d][entry.to_ket]
                * mu[entry.from_bra]
                * mu[entry.from_ket];
            let g3 = ef(d, entry.to_bra, omega3);
            out[Component2D::Esa as usize] -=
                pair_weight * dip_esa * (g3 * pair * entry.amplitude).re;
        }
    }
    let scale = bundle.field().conversion_scale;
    for v in &mut out {
        *v *= scale;
    }
    Ok(out)
}

/// Absorptive 2D spectrum (GSB + SE + ESA) on the given grids.
pub fn absorptive_2d(
    omega3_grid: &[f64],
    t2: f64,
    omega1_grid: &[f64],
    bundle: &ValidatedBundle,
) -> Result<Spectrum2D, TwodError> {
    check_axis(omega3_grid)?;
    check_axis(omega1_grid)?;
    let prop = Propagator::new(bundle);
    let entries = prop.transfer_entries(t2)?;
    let n3 = omega3_grid.len();
    let n1 = omega1_grid.len();
    let rows: Vec<Vec<[f64; 3]>> = omega3_grid
        .par_iter()
        .map(|&w3| {
            omega1_grid
                .iter()
                .map(|&w1| point_with(&prop, &entries, w3, w1, bundle).expect("validated"))
                .collect()
        })
        .collect();
    let mut components =
        [(); 3].map(|_| Array2::<f64>::zeros((n3, n1)));
    let mut values = Array2::<f64>::zeros((n3, n1));
    for (i3, row) in rows.iter().enumerate() {
        for (i1, point) in row.iter().enumerate() {
            for (k, comp) in components.iter_mut().enumerate() {
                comp[[i3, i1]] = point[k];
            }
            values[[i3, i1]] = point.iter().sum();
        }
    }
    Ok(Spectrum2D {
        omega3: omega3_grid.to_vec(),
        omega1: omega1_grid.to_vec(),
        t2,
        values,
        components,
    })
}

/// Sample a gridded 2D spectrum along the anti-diagonal ω₁ + ω₃ = ω_p,
/// interpolating linearly in ω₁. Grid points whose partner frequency falls
/// outside the ω₁ axis are dropped; an empty intersection is an error.
pub fn antidiagonal_cut(
    spectrum: &Spectrum2D,
    pump_frequency: f64,
) -> Result<Spectrum1D, TwodError> {
    let omega1 = &spectrum.omega1;
    let (w1_min, w1_max) = (omega1[0], omega1[omega1.len() - 1]);
    let mut omega = Vec::new();
    let mut comps: [Vec<f64>; 6] = Default::default();
    for (i3, &w3) in spectrum.omega3.iter().enumerate() {
        let target = pump_frequency - w3;
        if target < w1_min || target > w1_max {
            continue;
        }
        // locate the bracketing ω₁ interval
        let hi = omega1.partition_point(|&w| w < target).min(omega1.len() - 1);
        let lo = hi.saturating_sub(1);
        let (w_lo, w_hi) = (omega1[lo], omega1[hi]);
        let frac = if hi == lo || w_hi == w_lo {
            0.0
        } else {
            (target - w_lo) / (w_hi - w_lo)
        };
        omega.push(w3);
        for (slot, kind) in [
            (ComponentKind::Gsb, Component2D::Gsb),
            (ComponentKind::Se, Component2D::Se),
            (ComponentKind::Esa, Component2D::Esa),
        ] {
            let comp = spectrum.component(kind);
            let interp = comp[[i3, lo]] * (1.0 - frac) + comp[[i3, hi]] * frac;
            comps[slot as usize].push(interp);
        }
        for slot in [ComponentKind::SeCoh, ComponentKind::EsaCoh, ComponentKind::Sc] {
            comps[slot as usize].push(0.0);
        }
    }
    if omega.is_empty() {
        return Err(TwodError::LineOutsideGrid(pump_frequency));
    }
    let meta = SpectrumMeta {
        delay: spectrum.t2,
        pump_frequency,
        entanglement_time: 0.0,
        mode: SignalMode::TwodCut,
        sc_available: false,
    };
    Ok(Spectrum1D::from_components(omega, comps, meta)?)
}

/// Deviation of the correspondence identity at one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDeviation {
    pub delay: f64,
    pub max_abs_deviation: f64,
    /// Detection frequency where the maximum deviation occurs.
    pub omega_at_max: f64,
}

/// Result of [`correspondence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceReport {
    pub per_delay: Vec<DelayDeviation>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Verify ΔS(ω; Δt) = −[S₂D(ω, Δt, ω_p−ω) − S₂D(ω, 0, ω_p−ω)] pointwise.
///
/// The difference form removes the delay-independent S_c exception, so the
/// identity is exact for the short-Tₑ signal. The 2D side is evaluated
/// analytically on the anti-diagonal (no grid interpolation). Passing
/// `pump_override_2d` evaluates the 2D side on a different anti-diagonal —
/// a diagnostic that should produce large deviations.
pub fn correspondence_check(
    bundle: &ValidatedBundle,
    delays: &[f64],
    omega_grid: &[f64],
    tolerance: f64,
    pump_override_2d: Option<f64>,
) -> Result<CorrespondenceReport, TwodError> {
    let pump_1d = bundle.field().pump_frequency;
    let pump_2d = pump_override_2d.unwrap_or(pump_1d);
    let prop = Propagator::new(bundle);
    let entries_zero = prop.transfer_entries(0.0)?;
    let mut per_delay = Vec::with_capacity(delays.len());
    for &delay in delays {
        let ds = difference_spectrum(omega_grid, delay, bundle)?;
        let entries_dt = prop.transfer_entries(delay)?;
        let mut max_dev = 0.0f64;
        let mut omega_at_max = omega_grid[0];
        for (i, &omega) in omega_grid.iter().enumerate() {
            let w1 = pump_2d - omega;
            let at_dt = point_with(&prop, &entries_dt, omega, w1, bundle)?;
            let at_zero = point_with(&prop, &entries_zero, omega, w1, bundle)?;
            let rhs: f64 = -(at_dt.iter().sum::<f64>() - at_zero.iter().sum::<f64>());
            let dev = (ds.values()[i] - rhs).abs();
            if dev > max_dev {
                max_dev = dev;
                omega_at_max = omega;
            }
        }
        per_delay.push(DelayDeviation {
            delay,
            max_abs_deviation: max_dev,
            omega_at_max,
        });
    }
    let passed = per_delay.iter().all(|d| d.max_abs_deviation < tolerance);
    Ok(CorrespondenceReport {
        per_delay,
        tolerance,
        passed,
    })
}
