//! Run configuration: JSON file values overlaid by command-line flags, plus
//! the provenance header written into every output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use qubit_parity::Error as CoreError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files; exit code 2.
    Usage(String),
    /// A computation or numerical check failed; exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_)
            | CoreError::InvalidPhases(_)
            | CoreError::InvalidCutoff(_)
            | CoreError::Aliasing { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_max: Option<usize>,
    pub out: PathBuf,
}

fn overlay(base: &mut Map<String, Value>, top: Value) {
    if let Value::Object(m) = top {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
}

pub fn load_file(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if !v.is_object() {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    }
    Ok(v)
}

/// File values, then global flags, then command flags; the result must
/// deserialize into `C` with no unknown keys.
pub fn resolve<C: DeserializeOwned, F: Serialize>(globals: &Globals, flags: &F) -> CliResult<C> {
    let mut merged = Map::new();
    if let Some(p) = &globals.config {
        overlay(&mut merged, load_file(p)?);
    }
    let mut g = Map::new();
    if let Some(s) = globals.seed {
        g.insert("seed".into(), s.into());
    }
    if let Some(n) = globals.n_max {
        g.insert("n_max".into(), n.into());
    }
    overlay(&mut merged, Value::Object(g));
    overlay(&mut merged, serde_json::to_value(flags).expect("flags serialize"));
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

/// Provenance attached to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub config: Value,
}

impl Header {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        let value = serde_json::to_value(config).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Header {
            tool: "qparity",
            version: VERSION,
            command,
            seed: value.get("seed").and_then(Value::as_u64),
            config_sha256: format!("{digest:x}"),
            config: value,
        }
    }

    pub fn comment_block(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!(
            "# {} {}\n# command: {}\n# seed: {seed}\n# config_sha256: {}\n# config: {}\n",
            self.tool, self.version, self.command, self.config_sha256, self.config
        )
    }
}
