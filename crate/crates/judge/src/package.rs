//! Problem packages on disk.
//!
//! ```text
//! manifest.json        problem metadata, policy, limits, checker, points
//! statement.md
//! tests/01.in          input of instance 1
//! tests/01.out         reference output (required by token_exact)
//! tests/01.params.json optional partial override of the default limits
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use judge_core::{
    validate_problem, Alphabet, CheckerSpec, Direction, EvalParams, KeyValue, Problem, ProblemKind,
    ResourceLimits, Score, ScoringPolicy, TestInstance, Visibility,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Path relative to the package root.
    pub file: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.file, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PackageError {
    #[error("package directory {0} not found")]
    NotFound(PathBuf),
    #[error("malformed package:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Malformed(Vec<Diagnostic>),
}

impl PackageError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            PackageError::Malformed(d) => d,
            PackageError::NotFound(_) => &[],
        }
    }
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLimits {
    compile_time: Option<u64>,
    binary_size: Option<u64>,
    time_limit: Option<u64>,
    memory_limit: Option<u64>,
    output_limit: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ManifestChecker {
    TokenExact {
        #[serde(default)]
        byte_exact: bool,
    },
    Objective {
        name: String,
    },
    External {
        language_id: String,
        /// Path of the checker source relative to the package root.
        source: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    id: String,
    kind: ProblemKind,
    #[serde(default = "no_direction")]
    direction: Direction,
    policy: ScoringPolicy,
    #[serde(default)]
    limits: ManifestLimits,
    checker: Option<ManifestChecker>,
    #[serde(default)]
    alphabet: Alphabet,
    #[serde(default)]
    visibility: Visibility,
    /// `V_i` per instance; defaults to zero.
    #[serde(default)]
    points: Vec<Score>,
    #[serde(default)]
    reference_scores: Vec<Score>,
}

fn no_direction() -> Direction {
    Direction::None
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Passthrough {
    Key(String),
    Pair(KeyValue),
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsOverride {
    time_limit: Option<u64>,
    memory_limit: Option<u64>,
    output_limit: Option<u64>,
    rng_seed: Option<u64>,
    #[serde(default)]
    extra: BTreeMap<String, String>,
    /// Names of declared parameters (or explicit pairs) handed to the
    /// solution.
    #[serde(default)]
    passthrough: Vec<Passthrough>,
}

impl ParamsOverride {
    fn apply(self, base: &EvalParams) -> EvalParams {
        let mut p = base.clone();
        p.time_limit = self.time_limit.unwrap_or(p.time_limit);
        p.memory_limit = self.memory_limit.unwrap_or(p.memory_limit);
        p.output_limit = self.output_limit.unwrap_or(p.output_limit);
        p.rng_seed = self.rng_seed.or(p.rng_seed);
        p.extra.extend(self.extra);
        p.passthrough = self
            .passthrough
            .into_iter()
            .map(|entry| match entry {
                Passthrough::Pair(kv) => kv,
                Passthrough::Key(key) => KeyValue {
                    value: p.declared(&key).unwrap_or_default(),
                    key,
                },
            })
            .collect();
        p
    }
}

struct Collector {
    diagnostics: Vec<Diagnostic>,
}

impl Collector {
    fn push(&mut self, file: impl Into<String>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            file: file.into(),
            message: message.into(),
        });
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(root: &Path, rel: &str, out: &mut Collector) -> Option<T> {
    let bytes = match fs::read(root.join(rel)) {
        Ok(b) => b,
        Err(e) => {
            out.push(rel, format!("cannot read: {e}"));
            return None;
        }
    };
    match serde_json::from_slice(&bytes) {
        Ok(v) => Some(v),
        Err(e) => {
            out.push(rel, format!("invalid: {e}"));
            None
        }
    }
}

/// Test files found under `tests/`, keyed by instance number.
#[derive(Default)]
struct TestFiles {
    inputs: BTreeMap<u32, String>,
    outputs: BTreeMap<u32, String>,
    params: BTreeMap<u32, String>,
}

fn scan_tests(root: &Path, out: &mut Collector) -> TestFiles {
    let mut files = TestFiles::default();
    let entries = match fs::read_dir(root.join("tests")) {
        Ok(e) => e,
        Err(_) => {
            out.push("tests", "directory missing");
            return files;
        }
    };
    let mut names: Vec<String> = entries.flatten().map(|e| e.file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    let mut width = BTreeSet::new();
    for name in names {
        let rel = format!("tests/{name}");
        let Some((stem, ext)) = name.split_once('.') else {
            out.push(rel, "unexpected file");
            continue;
        };
        let Ok(n) = stem.parse::<u32>() else {
            out.push(rel, "test files must be named NN.in, NN.out or NN.params.json");
            continue;
        };
        if !stem.bytes().all(|b| b.is_ascii_digit()) || stem.len() < 2 {
            out.push(rel, "test number must be zero-padded to at least two digits");
            continue;
        }
        let map = match ext {
            "in" => {
                width.insert(stem.len());
                &mut files.inputs
            }
            "out" => &mut files.outputs,
            "params.json" => &mut files.params,
            _ => {
                out.push(rel, "unexpected file");
                continue;
            }
        };
        if map.insert(n, rel.clone()).is_some() {
            out.push(rel, "duplicate test number");
        }
    }
    if width.len() > 1 {
        out.push("tests", "inconsistent zero padding of test numbers");
    }
    files
}

/// Loads and validates the package at `path`.
pub fn load_package(path: &Path) -> Result<Problem, PackageError> {
    if !path.is_dir() {
        return Err(PackageError::NotFound(path.to_path_buf()));
    }
    let mut out = Collector {
        diagnostics: Vec::new(),
    };
    let manifest: Option<Manifest> = read_json(path, "manifest.json", &mut out);
    let statement = match fs::read_to_string(path.join("statement.md")) {
        Ok(s) => s,
        Err(e) => {
            out.push("statement.md", format!("cannot read: {e}"));
            String::new()
        }
    };
    let tests = scan_tests(path, &mut out);
    let Some(manifest) = manifest else {
        return Err(PackageError::Malformed(out.diagnostics));
    };

    let defaults = ResourceLimits::default();
    let ml = &manifest.limits;
    let limits = ResourceLimits {
        compile_time: ml.compile_time.unwrap_or(defaults.compile_time),
        binary_size: ml.binary_size.unwrap_or(defaults.binary_size),
        time_limit: ml.time_limit.unwrap_or(defaults.time_limit),
        memory_limit: ml.memory_limit.unwrap_or(defaults.memory_limit),
        output_limit: ml.output_limit.unwrap_or(defaults.output_limit),
    };
    let checker = match manifest.checker.clone().unwrap_or(ManifestChecker::TokenExact { byte_exact: false }) {
        ManifestChecker::TokenExact { byte_exact } => CheckerSpec::TokenExact { byte_exact },
        ManifestChecker::Objective { name } => {
            if crate::engine::objective_checker(&name).is_none() {
                out.push("manifest.json", format!("unknown objective checker `{name}`"));
            }
            CheckerSpec::Objective { name }
        }
        ManifestChecker::External { language_id, source } => {
            let file_name = Path::new(&source)
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let bytes = fs::read(path.join(&source)).unwrap_or_else(|e| {
                out.push(source.clone(), format!("cannot read checker source: {e}"));
                Vec::new()
            });
            CheckerSpec::External {
                language_id,
                file_name,
                source: bytes.into(),
            }
        }
    };
    let needs_reference = matches!(checker, CheckerSpec::TokenExact { .. });

    let count = tests.inputs.keys().next_back().copied().unwrap_or(0);
    for n in 1..=count {
        if !tests.inputs.contains_key(&n) {
            out.push(format!("tests/{n:02}.in"), "missing (test numbers must be contiguous from 01)");
        }
    }
    for (n, rel) in tests.outputs.iter().chain(tests.params.iter()) {
        if !tests.inputs.contains_key(n) {
            out.push(rel.clone(), "no matching .in file");
        }
    }
    if !manifest.points.is_empty() && manifest.points.len() != tests.inputs.len() {
        out.push(
            "manifest.json",
            format!("{} points given for {} instances", manifest.points.len(), tests.inputs.len()),
        );
    }
    if !manifest.reference_scores.is_empty() && manifest.reference_scores.len() != tests.inputs.len() {
        out.push(
            "manifest.json",
            format!(
                "{} reference scores given for {} instances",
                manifest.reference_scores.len(),
                tests.inputs.len()
            ),
        );
    }

    let base = limits.default_params();
    let mut instances = Vec::new();
    let mut files_of = BTreeMap::new();
    for (index, (&n, in_rel)) in tests.inputs.iter().enumerate() {
        let stem = in_rel.trim_start_matches("tests/").trim_end_matches(".in").to_string();
        files_of.insert(n, stem.clone());
        let input = fs::read(path.join(in_rel)).unwrap_or_else(|e| {
            out.push(in_rel.clone(), format!("cannot read: {e}"));
            Vec::new()
        });
        let reference_output = match tests.outputs.get(&n) {
            Some(rel) => match fs::read(path.join(rel)) {
                Ok(b) => Some(b.into()),
                Err(e) => {
                    out.push(rel.clone(), format!("cannot read: {e}"));
                    None
                }
            },
            None => {
                if needs_reference {
                    out.push(format!("tests/{stem}.out"), "missing (required by the token_exact checker)");
                }
                None
            }
        };
        let params = match tests.params.get(&n) {
            Some(rel) => read_json::<ParamsOverride>(path, rel, &mut out)
                .map(|o| o.apply(&base))
                .unwrap_or_else(|| base.clone()),
            None => base.clone(),
        };
        instances.push(TestInstance {
            id: n,
            input: input.into(),
            reference_output,
            params,
            max_points: manifest.points.get(index).cloned().unwrap_or_default(),
            reference_score: manifest.reference_scores.get(index).cloned(),
        });
    }

    let problem = Problem {
        id: manifest.id,
        kind: manifest.kind,
        direction: manifest.direction,
        instances,
        policy: manifest.policy,
        limits,
        statement,
        checker,
        alphabet: manifest.alphabet,
        visibility: manifest.visibility,
    };
    for v in validate_problem(&problem) {
        let file = violation_file(&v.field, &files_of);
        // Already reported with a precise file name above.
        let duplicate = v.field.ends_with(".reference_output") && v.rule.contains("requires a reference output");
        if !duplicate {
            out.push(file, v.to_string());
        }
    }
    if out.diagnostics.is_empty() {
        Ok(problem)
    } else {
        Err(PackageError::Malformed(out.diagnostics))
    }
}

/// Maps a validation field such as `instances[2].input` to the file that
/// holds it.
fn violation_file(field: &str, files_of: &BTreeMap<u32, String>) -> String {
    let parsed = field
        .strip_prefix("instances[")
        .and_then(|rest| rest.split_once("]."))
        .and_then(|(n, rest)| Some((n.parse::<u32>().ok()?, rest)));
    match parsed {
        Some((n, rest)) => {
            let stem = files_of.get(&n).cloned().unwrap_or_else(|| format!("{n:02}"));
            if rest.starts_with("input") {
                format!("tests/{stem}.in")
            } else if rest.starts_with("reference_output") {
                format!("tests/{stem}.out")
            } else if rest.starts_with("params") {
                format!("tests/{stem}.params.json")
            } else {
                "manifest.json".into()
            }
        }
        None => "manifest.json".into(),
    }
}
