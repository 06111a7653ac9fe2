//! Registry of languages a submission may be written in.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const SRC_DIR: &str = "{src_dir}";
pub const OUT_PATH: &str = "{out_path}";
pub use crate::artifact::BIN_PATH;

const DEFAULT_REGISTRY: &str = include_str!("../toolchains.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toolchain {
    pub language_id: String,
    pub compile_command_template: Vec<String>,
    pub run_command_template: Vec<String>,
    pub is_interpreted: bool,
    /// Name given to a single-file submission.
    pub source_file: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("reading toolchain registry: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing toolchain registry: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("toolchain {language_id}: {rule}")]
    Invalid { language_id: String, rule: String },
}

fn occurrences(template: &[String], placeholder: &str) -> usize {
    template.iter().map(|arg| arg.matches(placeholder).count()).sum()
}

impl Toolchain {
    /// Checks that each template holds its placeholders exactly once. An
    /// interpreted toolchain only syntax-checks, so `{out_path}` is optional
    /// there.
    pub fn validate(&self) -> Result<(), RegistryError> {
        let invalid = |rule: String| RegistryError::Invalid {
            language_id: self.language_id.clone(),
            rule,
        };
        if self.language_id.is_empty() || self.language_id == "binary" {
            return Err(invalid("reserved or empty language id".into()));
        }
        if self.compile_command_template.is_empty() || self.run_command_template.is_empty() {
            return Err(invalid("empty command template".into()));
        }
        if occurrences(&self.compile_command_template, SRC_DIR) != 1 {
            return Err(invalid(format!("compile template must contain {SRC_DIR} once")));
        }
        let out = occurrences(&self.compile_command_template, OUT_PATH);
        if out > 1 || (out == 0 && !self.is_interpreted) {
            return Err(invalid(format!("compile template must contain {OUT_PATH} once")));
        }
        if occurrences(&self.run_command_template, BIN_PATH) != 1 {
            return Err(invalid(format!("run template must contain {BIN_PATH} once")));
        }
        if self.source_file.is_empty() || self.source_file.contains('/') {
            return Err(invalid("source_file must be a plain file name".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Registry {
    toolchains: BTreeMap<String, Toolchain>,
}

impl Registry {
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let list: Vec<Toolchain> = serde_json::from_str(text)?;
        let mut toolchains = BTreeMap::new();
        for t in list {
            t.validate()?;
            if toolchains.contains_key(&t.language_id) {
                return Err(RegistryError::Invalid {
                    language_id: t.language_id,
                    rule: "duplicate language id".into(),
                });
            }
            toolchains.insert(t.language_id.clone(), t);
        }
        Ok(Registry { toolchains })
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, language_id: &str) -> Option<&Toolchain> {
        self.toolchains.get(language_id)
    }

    pub fn language_ids(&self) -> impl Iterator<Item = &str> {
        self.toolchains.keys().map(String::as_str)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::from_json(DEFAULT_REGISTRY).expect("bundled toolchain registry is valid")
    }
}
