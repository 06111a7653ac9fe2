//! Service settings. Sources are layered: environment, then a TOML file,
//! then command-line flags, each overriding the one before.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::sandbox::SandboxConfig;
use crate::toolchain::Registry;

pub const DEFAULT_PAYLOAD_CAP: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub workers: usize,
    pub payload_cap: usize,
    /// Events between snapshots; 0 disables them.
    pub snapshot_every: u64,
    pub fsync: bool,
    /// Attempts per submission before it ends as an internal error.
    pub max_attempts: u32,
    /// Slack added to the computed claim lease.
    pub lease_grace_ms: u64,
    pub sandbox: SandboxConfig,
    pub registry: Registry,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            workers: 2,
            payload_cap: DEFAULT_PAYLOAD_CAP,
            snapshot_every: 200,
            fsync: true,
            max_attempts: 4,
            lease_grace_ms: 60_000,
            sandbox: SandboxConfig::default(),
            registry: Registry::default(),
        }
    }
}

/// One layer of settings. Unset fields fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub port: Option<u16>,
    pub data_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub max_parallel_runs: Option<usize>,
    pub payload_cap: Option<usize>,
    pub snapshot_every: Option<u64>,
    pub admin_token: Option<String>,
    pub ui_dir: Option<PathBuf>,
    pub toolchains: Option<PathBuf>,
    pub scratch_dir: Option<PathBuf>,
    #[serde(default)]
    pub load: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{name}: cannot parse `{value}`")]
    Env { name: String, value: String },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Toolchains(#[from] crate::toolchain::RegistryError),
}

fn parse_env<T: std::str::FromStr>(
    lookup: &impl Fn(&str) -> Option<String>,
    name: &str,
) -> Result<Option<T>, ConfigError> {
    match lookup(name) {
        None => Ok(None),
        Some(value) => value
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::Env {
                name: name.into(),
                value,
            }),
    }
}

impl Settings {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|name| std::env::var(name).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        Ok(Settings {
            port: parse_env(&lookup, "JUDGE_PORT")?,
            data_dir: lookup("JUDGE_DATA_DIR").map(PathBuf::from),
            workers: parse_env(&lookup, "JUDGE_WORKERS")?,
            max_parallel_runs: parse_env(&lookup, "JUDGE_MAX_PARALLEL_RUNS")?,
            payload_cap: None,
            snapshot_every: None,
            admin_token: lookup("JUDGE_ADMIN_TOKEN"),
            ui_dir: lookup("JUDGE_UI_DIR").map(PathBuf::from),
            toolchains: lookup("JUDGE_TOOLCHAINS").map(PathBuf::from),
            scratch_dir: lookup("JUDGE_SCRATCH_DIR").map(PathBuf::from),
            load: Vec::new(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.into(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::File {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(self, top: Settings) -> Settings {
        Settings {
            port: top.port.or(self.port),
            data_dir: top.data_dir.or(self.data_dir),
            workers: top.workers.or(self.workers),
            max_parallel_runs: top.max_parallel_runs.or(self.max_parallel_runs),
            payload_cap: top.payload_cap.or(self.payload_cap),
            snapshot_every: top.snapshot_every.or(self.snapshot_every),
            admin_token: top.admin_token.or(self.admin_token),
            ui_dir: top.ui_dir.or(self.ui_dir),
            toolchains: top.toolchains.or(self.toolchains),
            scratch_dir: top.scratch_dir.or(self.scratch_dir),
            load: if top.load.is_empty() { self.load } else { top.load },
        }
    }

    pub fn service_config(&self) -> Result<ServiceConfig, ConfigError> {
        let mut config = ServiceConfig::new(
            self.data_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("judge-data")),
        );
        if let Some(n) = self.workers {
            config.workers = n.max(1);
        }
        if let Some(n) = self.max_parallel_runs {
            config.sandbox.max_parallel_runs = n.max(1);
        }
        if let Some(n) = self.payload_cap {
            config.payload_cap = n;
        }
        if let Some(n) = self.snapshot_every {
            config.snapshot_every = n;
        }
        if let Some(dir) = &self.scratch_dir {
            config.sandbox.scratch_root = dir.clone();
        }
        if let Some(path) = &self.toolchains {
            config.registry = Registry::load(path)?;
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_env_and_flags_override_file() {
        let env = Settings::from_lookup(|name| match name {
            "JUDGE_PORT" => Some("8000".into()),
            "JUDGE_WORKERS" => Some("3".into()),
            "JUDGE_DATA_DIR" => Some("/env".into()),
            _ => None,
        })
        .unwrap();
        let file: Settings = toml::from_str("port = 9000\ndata_dir = \"/file\"").unwrap();
        let flags = Settings {
            data_dir: Some("/flag".into()),
            ..Settings::default()
        };
        let merged = env.overlay(file).overlay(flags);
        assert_eq!(merged.port, Some(9000));
        assert_eq!(merged.workers, Some(3));
        assert_eq!(merged.data_dir, Some(PathBuf::from("/flag")));
    }

    #[test]
    fn bad_values_are_reported() {
        let err = Settings::from_lookup(|name| (name == "JUDGE_WORKERS").then(|| "many".into()))
            .unwrap_err();
        assert!(err.to_string().contains("JUDGE_WORKERS"));
        assert!(toml::from_str::<Settings>("colour = 1").is_err());
    }
}
