//! Time-evolution matrix elements G_{γδ←αβ}(t), their Fourier–Laplace
//! transforms G_{αβ}[ω], and the waiting-time kernel K_{βα}.
//!
//! Populations evolve under the closed rate generator (transfer plus ground
//! recovery) by an eigendecomposition-free matrix exponential. Coherences
//! between manifolds evolve as damped phasors `e^{-(iω_ab + γ_ab) t}`; the
//! registered intra-manifold coherences evolve together under a small
//! Liouvillian block when transfer rates are supplied, and independently
//! otherwise.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;
use crate::model::ValidatedBundle;

/// One electronic state, tagged by manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Ground,
    /// Single-excitation state e_α (0-based index).
    Single(usize),
    /// Double-excitation state f_γ̄ (0-based index).
    Double(usize),
}

/// The coherence |ket⟩⟨bra| between two levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoherenceIndex {
    pub ket: Level,
    pub bra: Level,
}

impl CoherenceIndex {
    pub fn new(ket: Level, bra: Level) -> Self {
        CoherenceIndex { ket, bra }
    }

    /// Optical coherence |e_α⟩⟨0|.
    pub fn ge(alpha: usize) -> Self {
        CoherenceIndex::new(Level::Single(alpha), Level::Ground)
    }

    /// Optical coherence |f_γ̄⟩⟨e_β|.
    pub fn ef(gamma: usize, beta: usize) -> Self {
        CoherenceIndex::new(Level::Double(gamma), Level::Single(beta))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error("negative time t = {0}")]
    NegativeTime(f64),
    #[error("unknown coherence {0:?}")]
    UnknownCoherence(CoherenceIndex),
    #[error("zero dephasing rate for coherence {0:?}; Laplace transform undefined")]
    ZeroDephasing(CoherenceIndex),
    #[error("waiting-time kernel diverges: the single manifold has no net decay to ground")]
    DivergentKernel,
    #[error("rate generator has (near-)degenerate eigenvalues; exponential-mode expansion unavailable")]
    DegenerateGenerator,
}

/// One matrix element of the t₂ evolution: |from_ket⟩⟨from_bra| → |to_ket⟩⟨to_bra|
/// with amplitude G_{γδ←αβ}(Δt), plus whether it belongs to the coherence block.
#[derive(Debug, Clone, Copy)]
pub struct TransferEntry {
    pub from_ket: usize,
    pub from_bra: usize,
    pub to_ket: usize,
    pub to_bra: usize,
    pub amplitude: Complex64,
    pub coherence: bool,
}

/// Evaluator for every evolution matrix element of a validated bundle.
pub struct Propagator<'a> {
    bundle: &'a ValidatedBundle,
    /// Closed population generator M = K − diag(Γ) over the single manifold.
    generator: Array2<f64>,
    /// Registered intra-manifold coherences, conjugate-closed: (ket, bra).
    coherence_labels: Vec<(usize, usize)>,
    /// Liouvillian block over `coherence_labels` (diagonal −(iω+λ) plus
    /// transfer rates).
    coherence_liouvillian: Array2<Complex64>,
}

impl<'a> Propagator<'a> {
    pub fn new(bundle: &'a ValidatedBundle) -> Self {
        let model = bundle.model();
        let n = bundle.system().n_singles();
        let mut generator = Array2::<f64>::zeros((n, n));
        for b in 0..n {
            for a in 0..n {
                if a != b {
                    generator[[b, a]] = model.transfer_rates[b][a];
                }
            }
        }
        // Close each column: outflow balances transfer plus ground recovery.
        for a in 0..n {
            let outflow: f64 = (0..n).filter(|&b| b != a).map(|b| generator[[b, a]]).sum();
            generator[[a, a]] = -outflow - model.ground_recovery[a];
        }

        let mut labels: Vec<(usize, usize)> = Vec::new();
        for coh in &model.intra_coherences {
            for pair in [(coh.ket, coh.bra), (coh.bra, coh.ket)] {
                if !labels.contains(&pair) {
                    labels.push(pair);
                }
            }
        }
        let m = labels.len();
        let mut liou = Array2::<Complex64>::zeros((m, m));
        for coh in &model.intra_coherences {
            for (pair, freq) in [
                ((coh.ket, coh.bra), coh.frequency),
                ((coh.bra, coh.ket), -coh.frequency),
            ] {
                let idx = labels.iter().position(|&p| p == pair).unwrap();
                liou[[idx, idx]] = Complex64::new(-coh.decay, -freq);
            }
        }
        for tr in &model.coherence_transfer {
            for (from, to) in [
                (tr.from, tr.to),
                ((tr.from.1, tr.from.0), (tr.to.1, tr.to.0)),
            ] {
                let fi = labels.iter().position(|&p| p == from).unwrap();
                let ti = labels.iter().position(|&p| p == to).unwrap();
                liou[[ti, fi]] += Complex64::new(tr.rate, 0.0);
            }
        }

        Propagator {
            bundle,
            generator,
            coherence_labels: labels,
            coherence_liouvillian: liou,
        }
    }

    pub fn bundle(&self) -> &ValidatedBundle {
        self.bundle
    }

    /// The closed population generator M (transfer plus recovery).
    pub fn generator(&self) -> &Array2<f64> {
        &self.generator
    }

    /// Population-transfer matrix G_{ββ←αα}(t) = [exp(M t)]_{βα}.
    pub fn population(&self, t: f64) -> Result<Array2<f64>, PropagatorError> {
        if t < 0.0 {
            return Err(PropagatorError::NegativeTime(t));
        }
        Ok(linalg::expm_real(&self.generator.mapv(|x| x * t)))
    }

    /// Ground-state survival G_{00←00}(t).
    ///
    /// The ground population can only grow during the waiting time (recovery
    /// feeds it, nothing drains it), so starting from the pure ground state
    /// this element is exactly one.
    pub fn ground_survival(&self, t: f64) -> Result<f64, PropagatorError> {
        if t < 0.0 {
            return Err(PropagatorError::NegativeTime(t));
        }
        Ok(1.0)
    }

    /// Oscillation frequency ω_ab and decay γ_ab of a coherence, combined as
    /// the complex rate z = γ_ab + iω_ab so that G(t) = e^{−z t}.
    pub fn coherence_rate(&self, idx: CoherenceIndex) -> Result<Complex64, PropagatorError> {
        let system = self.bundle.system();
        let model = self.bundle.model();
        let unknown = || PropagatorError::UnknownCoherence(idx);
        let (freq, decay) = match (idx.ket, idx.bra) {
            (Level::Single(a), Level::Ground) => {
                let e = *system.single_energies.get(a).ok_or_else(unknown)?;
                (e, model.dephasing_ge[a])
            }
            (Level::Ground, Level::Single(a)) => {
                let e = *system.single_energies.get(a).ok_or_else(unknown)?;
                (-e, model.dephasing_ge[a])
            }
            (Level::Double(g), Level::Single(b)) => {
                let ef = *system.double_energies.get(g).ok_or_else(unknown)?;
                let eb = *system.single_energies.get(b).ok_or_else(unknown)?;
                (ef - eb, model.dephasing_ef[g][b])
            }
            (Level::Single(b), Level::Double(g)) => {
                let ef = *system.double_energies.get(g).ok_or_else(unknown)?;
                let eb = *system.single_energies.get(b).ok_or_else(unknown)?;
                (eb - ef, model.dephasing_ef[g][b])
            }
            (Level::Single(a), Level::Single(b)) if a != b => {
                let coh = model
                    .intra_coherences
                    .iter()
                    .find_map(|c| {
                        if (c.ket, c.bra) == (a, b) {
                            Some((c.frequency, c.decay))
                        } else if (c.bra, c.ket) == (a, b) {
                            Some((-c.frequency, c.decay))
                        } else {
                            None
                        }
                    })
                    .ok_or_else(unknown)?;
                coh
            }
            _ => return Err(unknown()),
        };
        Ok(Complex64::new(decay, freq))
    }

    /// Coherence evolution G_ab(t) = e^{−(iω_ab + γ_ab) t}.
    pub fn coherence(&self, idx: CoherenceIndex, t: f64) -> Result<Complex64, PropagatorError> {
        if t < 0.0 {
            return Err(PropagatorError::NegativeTime(t));
        }
        let z = self.coherence_rate(idx)?;
        Ok((-z * t).exp())
    }

    /// Fourier–Laplace transform G_ab[ω] = ∫₀^∞ dt e^{iωt} G_ab(t)
    /// = 1 / (γ_ab + i(ω_ab − ω)).
    pub fn laplace(&self, idx: CoherenceIndex, omega: f64) -> Result<Complex64, PropagatorError> {
        let z = self.coherence_rate(idx)?;
        if z.re <= 0.0 {
            return Err(PropagatorError::ZeroDephasing(idx));
        }
        Ok(Complex64::new(1.0, 0.0) / Complex64::new(z.re, z.im - omega))
    }

    /// Lorentzian real part G′_ab[ω]: peak 1/γ at ω = ω_ab, HWHM γ.
    pub fn lorentzian(&self, idx: CoherenceIndex, omega: f64) -> Result<f64, PropagatorError> {
        Ok(self.laplace(idx, omega)?.re)
    }

    /// Waiting-time kernel K_{βα} = ∫₀^∞ ds G_{ββ←αα}(s) = [−M⁻¹]_{βα}.
    ///
    /// Finite only when every single-manifold population eventually decays to
    /// ground; otherwise the integral diverges.
    pub fn waiting_kernel(&self) -> Result<Array2<f64>, PropagatorError> {
        let n = self.generator.nrows();
        if n == 0 {
            return Ok(Array2::zeros((0, 0)));
        }
        let gc = self.generator.mapv(|x| Complex64::new(-x, 0.0));
        let inv = linalg::inverse(&gc).ok_or(PropagatorError::DivergentKernel)?;
        let k = inv.mapv(|z| z.re);
        if k.iter().any(|&x| x < -1e-9 || !x.is_finite()) {
            return Err(PropagatorError::DivergentKernel);
        }
        Ok(k)
    }

    /// Registered intra-manifold coherence labels (conjugate-closed).
    pub fn coherence_labels(&self) -> &[(usize, usize)] {
        &self.coherence_labels
    }

    /// Evolution of the registered coherence block, exp(L t), indexed like
    /// [`Self::coherence_labels`]. `None` when no coherences are registered.
    pub fn coherence_block(&self, t: f64) -> Result<Option<Array2<Complex64>>, PropagatorError> {
        if t < 0.0 {
            return Err(PropagatorError::NegativeTime(t));
        }
        if self.coherence_labels.is_empty() {
            return Ok(None);
        }
        Ok(Some(linalg::expm(
            &self.coherence_liouvillian.mapv(|z| z * t),
        )))
    }

    /// Every nonzero t₂ matrix element G_{γδ←αβ}(t): the population block plus
    /// the registered coherence block. Ground evolution (00←00) is handled
    /// separately since it is identically one.
    pub fn transfer_entries(&self, t: f64) -> Result<Vec<TransferEntry>, PropagatorError> {
        let n = self.bundle.system().n_singles();
        let pops = self.population(t)?;
        let mut entries = Vec::new();
        for b in 0..n {
            for a in 0..n {
                entries.push(TransferEntry {
                    from_ket: a,
                    from_bra: a,
                    to_ket: b,
                    to_bra: b,
                    amplitude: Complex64::new(pops[[b, a]], 0.0),
                    coherence: false,
                });
            }
        }
        if let Some(block) = self.coherence_block(t)? {
            for (fi, &(fk, fb)) in self.coherence_labels.iter().enumerate() {
                for (ti, &(tk, tb)) in self.coherence_labels.iter().enumerate() {
                    entries.push(TransferEntry {
                        from_ket: fk,
                        from_bra: fb,
                        to_ket: tk,
                        to_bra: tb,
                        amplitude: block[[ti, fi]],
                        coherence: true,
                    });
                }
            }
        }
        Ok(entries)
    }

    /// Exponential-mode expansion of the population block:
    /// G_{ββ←αα}(t) = Σ_j R_j[β,α] e^{−z_j t} with Re z_j ≥ 0.
    pub fn population_modes(
        &self,
    ) -> Result<Vec<(Complex64, Array2<Complex64>)>, PropagatorError> {
        let gc = self.generator.mapv(|x| Complex64::new(x, 0.0));
        let modes =
            linalg::exponential_modes(&gc).ok_or(PropagatorError::DegenerateGenerator)?;
        Ok(modes.into_iter().map(|(lam, proj)| (-lam, proj)).collect())
    }

    /// Exponential modes of the registered coherence block, as
    /// (decay rate z_j, residue matrix) pairs over the coherence labels.
    pub fn coherence_modes(
        &self,
    ) -> Result<Vec<(Complex64, Array2<Complex64>)>, PropagatorError> {
        if self.coherence_labels.is_empty() {
            return Ok(vec![]);
        }
        let modes = linalg::exponential_modes(&self.coherence_liouvillian)
            .ok_or(PropagatorError::DegenerateGenerator)?;
        Ok(modes.into_iter().map(|(lam, proj)| (-lam, proj)).collect())
    }
}
