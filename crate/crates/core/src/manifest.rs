//! Run manifests: every output file records the configuration hash, command,
//! and grid that produced it. Timestamps live here, never inside data tables,
//! so repeated runs produce byte-identical tables.

use serde::Serialize;

/// FNV-1a 64-bit hash, used to fingerprint configuration text.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hex fingerprint of a configuration document.
pub fn config_hash(text: &str) -> String {
    format!("fnv1a64:{:016x}", fnv1a64(text.as_bytes()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Sidecar metadata describing one CLI invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: String,
    pub config_hash: String,
    pub grid: GridSpec,
    pub outputs: Vec<String>,
    pub wall_time_ms: u64,
    pub created_unix_ms: u64,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }
}
