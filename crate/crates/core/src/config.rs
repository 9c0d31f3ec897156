//! Structured-text (TOML) configuration schema and its mapping onto the
//! validated domain types.
//!
//! State indices in configuration files are 1-based (`states = [1, 2]` is the
//! coherence |e₁⟩⟨e₂|); they are converted to 0-based indices internally.
//! Every key error is reported with its section path, e.g.
//! `system.dipoles_ef`.

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    validate_system, CoherenceTransfer, EvolutionModel, ExcitonSystem, FieldConfig,
    IntraCoherence, ValidatedBundle, ValidationErrors,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error in [{section}]: {message}")]
    Section { section: String, message: String },
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    single_energies: Vec<f64>,
    double_energies: Vec<f64>,
    dipoles_ge: Vec<f64>,
    dipoles_ef: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSection {
    pump_frequency: f64,
    signal_center: f64,
    idler_center: f64,
    entanglement_time: f64,
    #[serde(default)]
    delay: f64,
    #[serde(default = "default_scale")]
    conversion_scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DephasingSection {
    ge: Vec<f64>,
    #[serde(default)]
    ef: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoherenceSection {
    /// 1-based [ket, bra] single-state indices.
    states: [usize; 2],
    frequency: f64,
    decay: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferSection {
    /// 1-based [ket, bra] of the source coherence.
    from: [usize; 2],
    /// 1-based [ket, bra] of the destination coherence.
    to: [usize; 2],
    rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    rates: Vec<Vec<f64>>,
    ground_recovery: Vec<f64>,
    dephasing: DephasingSection,
    #[serde(default)]
    intra_coherences: Vec<CoherenceSection>,
    #[serde(default)]
    coherence_transfer: Vec<TransferSection>,
}

fn section<'de, T: Deserialize<'de>>(
    table: &toml::Table,
    name: &str,
) -> Result<T, ConfigError> {
    let value = table
        .get(name)
        .cloned()
        .ok_or_else(|| ConfigError::Section {
            section: name.to_string(),
            message: format!("missing section [{name}]"),
        })?;
    value.try_into().map_err(|e: toml::de::Error| ConfigError::Section {
        section: name.to_string(),
        message: e.message().to_string(),
    })
}

fn to_zero_based(section_name: &str, pair: [usize; 2]) -> Result<(usize, usize), ConfigError> {
    if pair[0] == 0 || pair[1] == 0 {
        return Err(ConfigError::Section {
            section: section_name.to_string(),
            message: format!("state indices are 1-based; got {pair:?}"),
        });
    }
    Ok((pair[0] - 1, pair[1] - 1))
}

/// Parse a TOML document into a validated bundle.
pub fn parse_config(text: &str) -> Result<ValidatedBundle, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    let system_raw: SystemSection = section(&table, "system")?;
    let field_raw: FieldSection = section(&table, "field")?;
    let model_raw: ModelSection = section(&table, "model")?;

    let system = ExcitonSystem {
        single_energies: system_raw.single_energies,
        double_energies: system_raw.double_energies,
        dipoles_ge: system_raw.dipoles_ge,
        dipoles_ef: system_raw.dipoles_ef,
        labels: system_raw.labels,
    };
    let field = FieldConfig {
        pump_frequency: field_raw.pump_frequency,
        signal_center: field_raw.signal_center,
        idler_center: field_raw.idler_center,
        entanglement_time: field_raw.entanglement_time,
        delay: field_raw.delay,
        conversion_scale: field_raw.conversion_scale,
    };
    let mut intra = Vec::with_capacity(model_raw.intra_coherences.len());
    for coh in &model_raw.intra_coherences {
        let (ket, bra) = to_zero_based("model.intra_coherences", coh.states)?;
        intra.push(IntraCoherence {
            ket,
            bra,
            frequency: coh.frequency,
            decay: coh.decay,
        });
    }
    let mut transfer = Vec::with_capacity(model_raw.coherence_transfer.len());
    for tr in &model_raw.coherence_transfer {
        transfer.push(CoherenceTransfer {
            from: to_zero_based("model.coherence_transfer", tr.from)?,
            to: to_zero_based("model.coherence_transfer", tr.to)?,
            rate: tr.rate,
        });
    }
    let model = EvolutionModel {
        transfer_rates: model_raw.rates,
        ground_recovery: model_raw.ground_recovery,
        dephasing_ge: model_raw.dephasing.ge,
        dephasing_ef: model_raw.dephasing.ef,
        intra_coherences: intra,
        coherence_transfer: transfer,
    };
    Ok(validate_system(system, field, model)?)
}

/// Read and parse a config file, returning the bundle and the raw bytes (for
/// hashing into the run manifest).
pub fn load_config(path: &std::path::Path) -> Result<(ValidatedBundle, String), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bundle = parse_config(&text)?;
    Ok((bundle, text))
}
