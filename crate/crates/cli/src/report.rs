use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Record of one CLI invocation, written for successful and failed runs alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// "ok" or "error".
    pub status: String,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    /// SHA-256 of the config file bytes, or of the built-in default config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub format: String,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// Headline results of the command.
    pub summary: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub dqd_cli: String,
    pub dqd_core: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            dqd_cli: env!("CARGO_PKG_VERSION").into(),
            dqd_core: dqd_core::VERSION.into(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
