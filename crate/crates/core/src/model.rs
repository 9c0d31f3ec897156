//! Molecular level structure, field configuration, and evolution-model
//! parameters shared by every engine in the crate.
//!
//! Energies are angular frequencies with ħ = 1; the time unit is whatever the
//! user chose when writing the rates. The electronic states form three
//! manifolds: the ground state, single excitations `e_α`, and double
//! excitations `f_γ̄`. Transition dipoles are real amplitudes.

use thiserror::Error;

/// Relative tolerance on the pump energy-conservation constraint
/// `ω̄_s + ω̄_i = ω_p`.
pub const PUMP_MATCH_RTOL: f64 = 1e-12;

/// Level energies and transition dipoles for the three manifolds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonSystem {
    /// Energies ω_{α0} of the single-excitation states (all > 0).
    pub single_energies: Vec<f64>,
    /// Energies ω_{γ̄0} of the double-excitation states.
    pub double_energies: Vec<f64>,
    /// Dipole amplitudes μ_{α0}, one per single state.
    pub dipoles_ge: Vec<f64>,
    /// Dipole amplitudes μ_{γ̄α}, one row per double state.
    pub dipoles_ef: Vec<Vec<f64>>,
    /// Optional human-readable state names (singles then doubles).
    pub labels: Option<Vec<String>>,
}

impl ExcitonSystem {
    pub fn n_singles(&self) -> usize {
        self.single_energies.len()
    }

    pub fn n_doubles(&self) -> usize {
        self.double_energies.len()
    }

    /// Uniformly rescale every transition dipole by `c`.
    ///
    /// Every signal value produced from the scaled system is `c⁴` times the
    /// original, since each retained pathway carries four dipole factors.
    pub fn scale_dipoles(&self, c: f64) -> Self {
        let mut out = self.clone();
        for mu in &mut out.dipoles_ge {
            *mu *= c;
        }
        for row in &mut out.dipoles_ef {
            for mu in row {
                *mu *= c;
            }
        }
        out
    }
}

/// Entangled-field parameters: PDC pump, beam centers, entanglement time, and
/// the a-posteriori idler delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    /// PDC pump angular frequency ω_p.
    pub pump_frequency: f64,
    /// Signal-beam central frequency ω̄_s.
    pub signal_center: f64,
    /// Idler-beam central frequency ω̄_i.
    pub idler_center: f64,
    /// Entanglement time Tₑ ≥ 0; zero selects the delta-correlated limit.
    pub entanglement_time: f64,
    /// Idler path delay Δt ≥ 0.
    pub delay: f64,
    /// Overall signal scale ζ (default 1).
    pub conversion_scale: f64,
}

impl FieldConfig {
    /// Same field with a different idler delay.
    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    /// Same field with a different entanglement time.
    pub fn with_entanglement_time(mut self, te: f64) -> Self {
        self.entanglement_time = te;
        self
    }

    /// Detuning Ω_i = ω − ω̄_i from the idler center.
    pub fn idler_detuning(&self, omega: f64) -> f64 {
        omega - self.idler_center
    }

    /// Detuning Ω_s = ω − ω̄_s from the signal center.
    pub fn signal_detuning(&self, omega: f64) -> f64 {
        omega - self.signal_center
    }
}

/// A registered single-manifold coherence |e_bra⟩⟨e_ket| with its oscillation
/// frequency ω_{bra,ket} and decay rate λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntraCoherence {
    /// Ket-side single-state index (0-based).
    pub ket: usize,
    /// Bra-side single-state index (0-based).
    pub bra: usize,
    /// Oscillation frequency ω_{ket,bra} (positive when ket is higher).
    pub frequency: f64,
    /// Decay rate λ > 0.
    pub decay: f64,
}

/// Bath-induced transfer |from⟩⟨from'| → |to⟩⟨to'| between registered
/// single-manifold coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceTransfer {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub rate: f64,
}

/// Rate-equation and dephasing parameters defining every time-evolution
/// matrix element G_{γδ←αβ}(t).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionModel {
    /// Off-diagonal population transfer rates; `transfer_rates[b][a]` is the
    /// rate of α=a → β=b transfer. Diagonal entries must be zero — the
    /// generator diagonal is derived by closing each column.
    pub transfer_rates: Vec<Vec<f64>>,
    /// Per-state recovery rate Γ_α from e_α back to the ground state.
    pub ground_recovery: Vec<f64>,
    /// Dephasing rates γ_{α0} of the ground↔single coherences (all > 0).
    pub dephasing_ge: Vec<f64>,
    /// Dephasing rates γ_{γ̄β} of the single↔double coherences, one row per
    /// double state (all > 0).
    pub dephasing_ef: Vec<Vec<f64>>,
    /// Registered single-manifold coherences; each entry implicitly registers
    /// its conjugate |bra⟩⟨ket| as well.
    pub intra_coherences: Vec<IntraCoherence>,
    /// Optional coherence-to-coherence transfer rates; conjugate-closed
    /// automatically.
    pub coherence_transfer: Vec<CoherenceTransfer>,
}

impl EvolutionModel {
    /// Rate-equation model with no intra-manifold coherences.
    pub fn populations_only(
        transfer_rates: Vec<Vec<f64>>,
        ground_recovery: Vec<f64>,
        dephasing_ge: Vec<f64>,
        dephasing_ef: Vec<Vec<f64>>,
    ) -> Self {
        EvolutionModel {
            transfer_rates,
            ground_recovery,
            dephasing_ge,
            dephasing_ef,
            intra_coherences: vec![],
            coherence_transfer: vec![],
        }
    }

    pub fn has_coherences(&self) -> bool {
        !self.intra_coherences.is_empty()
    }

    pub fn has_coherence_transfer(&self) -> bool {
        !self.coherence_transfer.is_empty()
    }
}

/// A single validation failure. Validation collects every failure instead of
/// stopping at the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid energy ordering: {0}")]
    InvalidEnergyOrdering(String),
    #[error("dipole shape mismatch: {0}")]
    DipoleShapeMismatch(String),
    #[error("pump energy mismatch: ω̄_s + ω̄_i = {sum} but ω_p = {pump}")]
    PumpEnergyMismatch { sum: f64, pump: f64 },
    #[error("negative rate: {0}")]
    NegativeRate(String),
    #[error("rate matrix shape mismatch: {0}")]
    RateShapeMismatch(String),
    #[error("non-positive dephasing rate: {0}")]
    NonPositiveDephasing(String),
    #[error("every ground↔single dipole is zero; no signal exists")]
    NoBrightTransition,
    #[error("negative delay: Δt = {0}")]
    NegativeDelay(f64),
    #[error("negative entanglement time: Tₑ = {0}")]
    NegativeEntanglementTime(f64),
    #[error("coherence index out of range: {0}")]
    CoherenceIndexOutOfRange(String),
}

/// Every violation found while validating a parameter set.
#[derive(Debug, Clone, Error)]
#[error("validation failed with {} violation(s):{}", .violations.len(),
    .violations.iter().map(|v| format!("\n  - {v}")).collect::<String>())]
pub struct ValidationErrors {
    pub violations: Vec<ModelError>,
}

/// A parameter set that has passed [`validate_system`]. Immutable afterwards;
/// safe to share read-only across parallel workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedBundle {
    system: ExcitonSystem,
    field: FieldConfig,
    model: EvolutionModel,
}

impl ValidatedBundle {
    pub fn system(&self) -> &ExcitonSystem {
        &self.system
    }

    pub fn field(&self) -> &FieldConfig {
        &self.field
    }

    pub fn model(&self) -> &EvolutionModel {
        &self.model
    }

    /// Rebuild the bundle with a different idler delay (revalidated).
    pub fn with_delay(&self, delay: f64) -> Result<Self, ValidationErrors> {
        validate_system(
            self.system.clone(),
            self.field.with_delay(delay),
            self.model.clone(),
        )
    }

    /// Rebuild the bundle with a different entanglement time (revalidated).
    pub fn with_entanglement_time(&self, te: f64) -> Result<Self, ValidationErrors> {
        validate_system(
            self.system.clone(),
            self.field.with_entanglement_time(te),
            self.model.clone(),
        )
    }

    /// Decompose the bundle into its parts.
    pub fn into_parts(self) -> (ExcitonSystem, FieldConfig, EvolutionModel) {
        (self.system, self.field, self.model)
    }
}

fn check_system(system: &ExcitonSystem, errs: &mut Vec<ModelError>) {
    let ns = system.n_singles();
    let nd = system.n_doubles();
    for (i, &e) in system.single_energies.iter().enumerate() {
        if e <= 0.0 {
            errs.push(ModelError::InvalidEnergyOrdering(format!(
                "single energy ω_{{{},0}} = {e} must be positive",
                i + 1
            )));
        }
    }
    let max_single = system
        .single_energies
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    for (i, &e) in system.double_energies.iter().enumerate() {
        if ns > 0 && e <= max_single {
            errs.push(ModelError::InvalidEnergyOrdering(format!(
                "double energy ω_{{{},0}} = {e} must exceed max single energy {max_single}",
                i + 1
            )));
        }
    }
    if system.dipoles_ge.len() != ns {
        errs.push(ModelError::DipoleShapeMismatch(format!(
            "dipoles_ge has {} entries for {ns} single states",
            system.dipoles_ge.len()
        )));
    }
    if system.dipoles_ef.len() != nd {
        errs.push(ModelError::DipoleShapeMismatch(format!(
            "dipoles_ef has {} rows for {nd} double states",
            system.dipoles_ef.len()
        )));
    } else {
        for (d, row) in system.dipoles_ef.iter().enumerate() {
            if row.len() != ns {
                errs.push(ModelError::DipoleShapeMismatch(format!(
                    "dipoles_ef row {} has {} entries for {ns} single states",
                    d + 1,
                    row.len()
                )));
            }
        }
    }
    if !system.dipoles_ge.iter().any(|&mu| mu != 0.0) {
        errs.push(ModelError::NoBrightTransition);
    }
}

fn check_field(field: &FieldConfig, errs: &mut Vec<ModelError>) {
    let sum = field.signal_center + field.idler_center;
    let scale = field.pump_frequency.abs().max(sum.abs()).max(1.0);
    if (sum - field.pump_frequency).abs() > PUMP_MATCH_RTOL * scale {
        errs.push(ModelError::PumpEnergyMismatch {
            sum,
            pump: field.pump_frequency,
        });
    }
    if field.delay < 0.0 {
        errs.push(ModelError::NegativeDelay(field.delay));
    }
    if field.entanglement_time < 0.0 {
        errs.push(ModelError::NegativeEntanglementTime(field.entanglement_time));
    }
}

fn check_model(system: &ExcitonSystem, model: &EvolutionModel, errs: &mut Vec<ModelError>) {
    let ns = system.n_singles();
    let nd = system.n_doubles();
    if model.transfer_rates.len() != ns
        || model.transfer_rates.iter().any(|row| row.len() != ns)
    {
        errs.push(ModelError::RateShapeMismatch(format!(
            "transfer rate matrix must be {ns}×{ns}"
        )));
    } else {
        for b in 0..ns {
            for a in 0..ns {
                let k = model.transfer_rates[b][a];
                if b == a && k != 0.0 {
                    errs.push(ModelError::RateShapeMismatch(format!(
                        "diagonal transfer entry [{0}][{0}] must be zero (it is derived)",
                        a + 1
                    )));
                } else if k < 0.0 {
                    errs.push(ModelError::NegativeRate(format!(
                        "transfer rate {} → {} is {k}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
    }
    if model.ground_recovery.len() != ns {
        errs.push(ModelError::RateShapeMismatch(format!(
            "ground_recovery has {} entries for {ns} single states",
            model.ground_recovery.len()
        )));
    } else {
        for (a, &g) in model.ground_recovery.iter().enumerate() {
            if g < 0.0 {
                errs.push(ModelError::NegativeRate(format!(
                    "ground recovery rate Γ_{} is {g}",
                    a + 1
                )));
            }
        }
    }
    if model.dephasing_ge.len() != ns {
        errs.push(ModelError::RateShapeMismatch(format!(
            "dephasing_ge has {} entries for {ns} single states",
            model.dephasing_ge.len()
        )));
    } else {
        for (a, &g) in model.dephasing_ge.iter().enumerate() {
            if g <= 0.0 {
                errs.push(ModelError::NonPositiveDephasing(format!(
                    "γ_{{{},0}} = {g}",
                    a + 1
                )));
            }
        }
    }
    if model.dephasing_ef.len() != nd
        || model.dephasing_ef.iter().any(|row| row.len() != ns)
    {
        if nd > 0 || !model.dephasing_ef.is_empty() {
            errs.push(ModelError::RateShapeMismatch(format!(
                "dephasing_ef must be {nd}×{ns}"
            )));
        }
    } else {
        for (d, row) in model.dephasing_ef.iter().enumerate() {
            for (a, &g) in row.iter().enumerate() {
                if g <= 0.0 {
                    errs.push(ModelError::NonPositiveDephasing(format!(
                        "γ_{{f{},e{}}} = {g}",
                        d + 1,
                        a + 1
                    )));
                }
            }
        }
    }
    for coh in &model.intra_coherences {
        if coh.ket >= ns || coh.bra >= ns || coh.ket == coh.bra {
            errs.push(ModelError::CoherenceIndexOutOfRange(format!(
                "intra coherence |e{}⟩⟨e{}|",
                coh.ket + 1,
                coh.bra + 1
            )));
        }
        if coh.decay <= 0.0 {
            errs.push(ModelError::NonPositiveDephasing(format!(
                "intra coherence |e{}⟩⟨e{}| decay λ = {}",
                coh.ket + 1,
                coh.bra + 1,
                coh.decay
            )));
        }
    }
    let registered: Vec<(usize, usize)> = model
        .intra_coherences
        .iter()
        .flat_map(|c| [(c.ket, c.bra), (c.bra, c.ket)])
        .collect();
    for tr in &model.coherence_transfer {
        if tr.rate < 0.0 {
            errs.push(ModelError::NegativeRate(format!(
                "coherence transfer rate {:?} → {:?} is {}",
                tr.from, tr.to, tr.rate
            )));
        }
        if !registered.contains(&tr.from) || !registered.contains(&tr.to) {
            errs.push(ModelError::CoherenceIndexOutOfRange(format!(
                "coherence transfer {:?} → {:?} references an unregistered coherence",
                tr.from, tr.to
            )));
        }
    }
}

/// Validate a raw parameter set, reporting every violation.
///
/// Validation is idempotent: revalidating the parts of a returned bundle
/// yields an identical bundle.
pub fn validate_system(
    system: ExcitonSystem,
    field: FieldConfig,
    model: EvolutionModel,
) -> Result<ValidatedBundle, ValidationErrors> {
    let mut violations = Vec::new();
    check_system(&system, &mut violations);
    check_field(&field, &mut violations);
    check_model(&system, &model, &mut violations);
    if violations.is_empty() {
        Ok(ValidatedBundle {
            system,
            field,
            model,
        })
    } else {
        Err(ValidationErrors { violations })
    }
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;

    /// Two-level molecule: one bright single state, slow ground recovery.
    pub fn two_level(gamma: f64, recovery: f64) -> ValidatedBundle {
        let system = ExcitonSystem {
            single_energies: vec![10.0],
            double_energies: vec![],
            dipoles_ge: vec![1.0],
            dipoles_ef: vec![],
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
            vec![gamma],
            vec![],
        );
        validate_system(system, field, model).unwrap()
    }

    /// Dimer with downhill transfer 1 → 2 and one double state.
    pub fn dimer(k: f64, recovery: [f64; 2]) -> ValidatedBundle {
        let system = ExcitonSystem {
            single_energies: vec![10.3, 9.7],
            double_energies: vec![20.6],
            dipoles_ge: vec![1.0, 1.2],
            dipoles_ef: vec![vec![0.9, 1.1]],
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
            vec![vec![0.0, 0.0], vec![k, 0.0]],
            recovery.to_vec(),
            vec![0.15, 0.15],
            vec![vec![0.2, 0.2]],
        );
        validate_system(system, field, model).unwrap()
    }

    /// Dimer with a registered |e1⟩⟨e2| coherence and optional transfer.
    pub fn dimer_with_coherence(k: f64, transfer: Option<f64>) -> ValidatedBundle {
        let (system, field, mut model) = dimer(k, [0.0, 0.0]).into_parts();
        model.intra_coherences = vec![IntraCoherence {
            ket: 0,
            bra: 1,
            frequency: 0.6,
            decay: 0.03,
        }];
        if let Some(rate) = transfer {
            model.coherence_transfer = vec![CoherenceTransfer {
                from: (0, 1),
                to: (1, 0),
                rate,
            }];
        }
        validate_system(system, field, model).unwrap()
    }

    /// Invalid-by-construction bundle (zero dephasing) for exercising guards
    /// that validation normally makes unreachable.
    pub fn unchecked_zero_dephasing_two_level() -> ValidatedBundle {
        let (system, field, mut model) = two_level(1.0, 0.0).into_parts();
        model.dephasing_ge[0] = 0.0;
        ValidatedBundle {
            system,
            field,
            model,
        }
    }
}
