//! Domain types shared by every part of the judge.
//!
//! A [`Problem`] owns an ordered list of [`TestInstance`]s. Evaluating a
//! solution on one instance yields an [`InstanceOutcome`]; the outcomes of a
//! whole submission fold into an [`AggregateResult`]. All values are
//! immutable once built and encode to canonical JSON with lower_snake_case
//! field names; byte payloads are base64.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::score::Score;

/// Byte sequence encoded as base64 in JSON.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bytes(pub Vec<u8>);

impl Bytes {
    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bytes({} bytes)", self.0.len())
    }
}

impl From<Vec<u8>> for Bytes {
    fn from(v: Vec<u8>) -> Self {
        Bytes(v)
    }
}

impl From<&[u8]> for Bytes {
    fn from(v: &[u8]) -> Self {
        Bytes(v.to_vec())
    }
}

impl From<&str> for Bytes {
    fn from(v: &str) -> Self {
        Bytes(v.as_bytes().to_vec())
    }
}

impl Serialize for Bytes {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&BASE64.encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        BASE64
            .decode(text.as_bytes())
            .map(Bytes)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Decision,
    Search,
    Optimization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
    None,
}

/// Characters allowed in reference data. The default is digits, spaces and
/// newlines; `csv` adds commas (and makes the tokenizer split on them), and
/// `extra` lists any further permitted characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Alphabet {
    pub csv: bool,
    pub extra: String,
}

impl Alphabet {
    pub fn allows(&self, byte: u8) -> bool {
        byte.is_ascii_digit()
            || byte == b' '
            || byte == b'\n'
            || (self.csv && byte == b',')
            || (byte.is_ascii() && self.extra.as_bytes().contains(&byte))
    }

    /// Position of the first byte outside the alphabet.
    pub fn first_violation(&self, data: &[u8]) -> Option<usize> {
        data.iter().position(|&b| !self.allows(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyValue {
    pub key: String,
    pub value: String,
}

/// Per-instance evaluation parameters `p_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalParams {
    /// CPU time limit in milliseconds.
    pub time_limit: u64,
    pub memory_limit: u64,
    pub output_limit: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    /// Additional declared parameters beyond the built-in ones.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
    /// The subset of declared parameters forwarded to the solution.
    #[serde(default)]
    pub passthrough: Vec<KeyValue>,
}

impl EvalParams {
    /// Value of a declared parameter by name.
    pub fn declared(&self, key: &str) -> Option<String> {
        match key {
            "time_limit" => Some(self.time_limit.to_string()),
            "memory_limit" => Some(self.memory_limit.to_string()),
            "output_limit" => Some(self.output_limit.to_string()),
            "rng_seed" => self.rng_seed.map(|s| s.to_string()),
            other => self.extra.get(other).cloned(),
        }
    }

    /// Environment variables handed to the solution: every passthrough entry
    /// plus the RNG seed when one is set.
    pub fn solution_env(&self) -> Vec<(String, String)> {
        let mut env = BTreeMap::new();
        if let Some(seed) = self.rng_seed {
            env.insert("JUDGE_SEED".to_string(), seed.to_string());
        }
        for kv in &self.passthrough {
            env.insert(env_name(&kv.key), kv.value.clone());
        }
        env.into_iter().collect()
    }
}

fn env_name(key: &str) -> String {
    let suffix = match key {
        "time_limit" => "TIME_LIMIT_MS".to_string(),
        "memory_limit" => "MEMORY_LIMIT_BYTES".to_string(),
        "output_limit" => "OUTPUT_LIMIT_BYTES".to_string(),
        "rng_seed" => "SEED".to_string(),
        other => other
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_uppercase()
                } else {
                    '_'
                }
            })
            .collect(),
    };
    format!("JUDGE_{suffix}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceLimits {
    /// Compile wall-time budget in milliseconds.
    pub compile_time: u64,
    pub binary_size: u64,
    pub time_limit: u64,
    pub memory_limit: u64,
    pub output_limit: u64,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            compile_time: 60_000,
            binary_size: 256 << 20,
            time_limit: 1_000,
            memory_limit: 256 << 20,
            output_limit: 16 << 20,
        }
    }
}

impl ResourceLimits {
    pub fn default_params(&self) -> EvalParams {
        EvalParams {
            time_limit: self.time_limit,
            memory_limit: self.memory_limit,
            output_limit: self.output_limit,
            rng_seed: None,
            extra: BTreeMap::new(),
            passthrough: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestInstance {
    /// 1-based position in the problem's instance list.
    pub id: u32,
    pub input: Bytes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_output: Option<Bytes>,
    pub params: EvalParams,
    /// Points `V_i` awarded on acceptance under IOI-style policies.
    pub max_points: Score,
    /// Author-supplied objective value used to seed the best-known table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_score: Option<Score>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    BinaryIcpc,
    IoiSum,
    IoiTimePenalty,
    OptimizationNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoringPolicy {
    pub kind: PolicyKind,
    /// Report RE for the whole submission whenever any instance hit RE.
    #[serde(default)]
    pub re_priority: bool,
}

impl ScoringPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        ScoringPolicy {
            kind,
            re_priority: false,
        }
    }
}

/// How a successful run's output is judged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckerSpec {
    /// Whitespace-token comparison against the reference output, or exact
    /// bytes when `byte_exact` is set.
    TokenExact {
        #[serde(default)]
        byte_exact: bool,
    },
    /// A built-in objective checker registered under `name`.
    Objective { name: String },
    /// A checker program shipped with the problem.
    External {
        language_id: String,
        file_name: String,
        source: Bytes,
    },
}

impl Default for CheckerSpec {
    fn default() -> Self {
        CheckerSpec::TokenExact { byte_exact: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Visibility {
    pub instance_statuses: bool,
    /// `None` means "visible for optimization problems only".
    pub instance_scores: Option<bool>,
    pub wa_detail: bool,
}

impl Default for Visibility {
    fn default() -> Self {
        Visibility {
            instance_statuses: true,
            instance_scores: None,
            wa_detail: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub kind: ProblemKind,
    pub direction: Direction,
    pub instances: Vec<TestInstance>,
    pub policy: ScoringPolicy,
    pub limits: ResourceLimits,
    #[serde(default)]
    pub statement: String,
    #[serde(default)]
    pub checker: CheckerSpec,
    #[serde(default)]
    pub alphabet: Alphabet,
    #[serde(default)]
    pub visibility: Visibility,
}

impl Problem {
    pub fn instance(&self, id: u32) -> Option<&TestInstance> {
        self.instances.iter().find(|t| t.id == id)
    }

    pub fn shows_instance_scores(&self) -> bool {
        self.visibility
            .instance_scores
            .unwrap_or(self.kind == ProblemKind::Optimization)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceFile {
    pub name: String,
    pub content: Bytes,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Source {
        language_id: String,
        files: Vec<SourceFile>,
    },
    StaticBinary(Bytes),
}

impl Payload {
    pub fn size(&self) -> usize {
        match self {
            Payload::Source { files, .. } => files.iter().map(|f| f.content.len()).sum(),
            Payload::StaticBinary(bytes) => bytes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Payload::Source { files, .. } => files.iter().all(|f| f.content.is_empty()),
            Payload::StaticBinary(bytes) => bytes.is_empty(),
        }
    }

    pub fn language_id(&self) -> Option<&str> {
        match self {
            Payload::Source { language_id, .. } => Some(language_id),
            Payload::StaticBinary(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub problem_id: String,
    pub user_id: String,
    pub payload: Payload,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExecutionStatus {
    #[serde(rename = "ACC")]
    Accepted,
    #[serde(rename = "TLE")]
    TimeLimitExceeded,
    #[serde(rename = "MLE")]
    MemoryLimitExceeded,
    #[serde(rename = "WA")]
    WrongAnswer,
    #[serde(rename = "RE")]
    RuntimeError,
    #[serde(rename = "OLE")]
    OutputLimitExceeded,
    #[serde(rename = "QUEUED")]
    Queued,
    #[serde(rename = "RUNNING")]
    Running,
    #[serde(rename = "CE")]
    CompileError,
}

impl ExecutionStatus {
    pub const INSTANCE_STATUSES: [ExecutionStatus; 6] = [
        ExecutionStatus::Accepted,
        ExecutionStatus::TimeLimitExceeded,
        ExecutionStatus::MemoryLimitExceeded,
        ExecutionStatus::WrongAnswer,
        ExecutionStatus::RuntimeError,
        ExecutionStatus::OutputLimitExceeded,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ExecutionStatus::Accepted => "ACC",
            ExecutionStatus::TimeLimitExceeded => "TLE",
            ExecutionStatus::MemoryLimitExceeded => "MLE",
            ExecutionStatus::WrongAnswer => "WA",
            ExecutionStatus::RuntimeError => "RE",
            ExecutionStatus::OutputLimitExceeded => "OLE",
            ExecutionStatus::Queued => "QUEUED",
            ExecutionStatus::Running => "RUNNING",
            ExecutionStatus::CompileError => "CE",
        }
    }

    /// Whether this status can be the result of evaluating one instance.
    pub fn is_instance_status(self) -> bool {
        Self::INSTANCE_STATUSES.contains(&self)
    }

    pub fn is_accepted(self) -> bool {
        self == ExecutionStatus::Accepted
    }
}

impl fmt::Display for ExecutionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    Code(i32),
    Signaled(i32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecStats {
    /// User plus system CPU time of the whole process tree, milliseconds.
    pub cpu_time: u64,
    pub wall_time: u64,
    pub peak_memory: u64,
    pub output_bytes: u64,
    pub exit: ExitKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub instance_id: u32,
    pub status: ExecutionStatus,
    pub score: Score,
    pub stats: Option<ExecStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregateResult {
    pub submission_id: String,
    pub status: ExecutionStatus,
    pub score: Score,
    pub per_instance: Vec<InstanceOutcome>,
}

/// One broken invariant found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every invariant of a problem definition. Returns an empty list
/// exactly when the problem is well formed.
pub fn validate_problem(problem: &Problem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: String, rule: String| out.push(Violation { field, rule });

    if problem.id.trim().is_empty() {
        push("id".into(), "problem id must not be empty".into());
    }
    if problem.instances.is_empty() {
        push("instances".into(), "at least one test instance required".into());
    }
    match (problem.kind, problem.direction) {
        (ProblemKind::Optimization, Direction::None) => {
            push("direction".into(), "direction required for optimization".into())
        }
        (kind, dir) if kind != ProblemKind::Optimization && dir != Direction::None => push(
            "direction".into(),
            format!(
                "direction must be none for a {} problem",
                serde_plain(&kind)
            ),
        ),
        _ => {}
    }
    if problem.policy.kind == PolicyKind::OptimizationNormalized
        && problem.kind != ProblemKind::Optimization
    {
        push(
            "policy".into(),
            "optimization_normalized requires an optimization problem".into(),
        );
    }

    let limits = &problem.limits;
    for (name, value) in [
        ("compile_time", limits.compile_time),
        ("binary_size", limits.binary_size),
        ("time_limit", limits.time_limit),
        ("memory_limit", limits.memory_limit),
        ("output_limit", limits.output_limit),
    ] {
        if value == 0 {
            push(format!("limits.{name}"), "must be strictly positive".into());
        }
    }

    match &problem.checker {
        CheckerSpec::TokenExact { .. } => {
            for t in &problem.instances {
                if t.reference_output.is_none() {
                    push(
                        format!("instances[{}].reference_output", t.id),
                        "token_exact checker requires a reference output".into(),
                    );
                }
            }
            if problem.policy.kind == PolicyKind::OptimizationNormalized {
                push(
                    "checker".into(),
                    "optimization_normalized needs an objective or external checker".into(),
                );
            }
        }
        CheckerSpec::Objective { name } => {
            if problem.kind != ProblemKind::Optimization {
                push(
                    "checker".into(),
                    "objective checker requires an optimization problem".into(),
                );
            }
            if name.is_empty() {
                push("checker.name".into(), "objective checker name missing".into());
            }
        }
        CheckerSpec::External { source, .. } => {
            if source.is_empty() {
                push("checker.source".into(), "external checker source empty".into());
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for t in &problem.instances {
        let field = |name: &str| format!("instances[{}].{name}", t.id);
        if t.id == 0 {
            push(field("id"), "instance ids are 1-based".into());
        }
        if !seen.insert(t.id) && reported.insert(t.id) {
            push(field("id"), format!("duplicate instance id {}", t.id));
        }
        if let Some(pos) = problem.alphabet.first_violation(t.input.as_slice()) {
            push(
                field("input"),
                format!("byte {pos} outside the declared alphabet"),
            );
        }
        if let Some(reference) = &t.reference_output {
            if let Some(pos) = problem.alphabet.first_violation(reference.as_slice()) {
                push(
                    field("reference_output"),
                    format!("byte {pos} outside the declared alphabet"),
                );
            }
        }
        if t.max_points.is_negative() {
            push(field("max_points"), "must be non-negative".into());
        }
        if t.max_points.is_zero()
            && matches!(
                problem.policy.kind,
                PolicyKind::IoiSum | PolicyKind::IoiTimePenalty
            )
        {
            push(
                field("max_points"),
                "zero points permitted only under binary scoring".into(),
            );
        }
        if let Some(reference) = &t.reference_score {
            if problem.policy.kind == PolicyKind::OptimizationNormalized
                && !reference.is_positive()
            {
                push(
                    field("reference_score"),
                    "normalized scoring requires a positive reference score".into(),
                );
            }
        }
        let p = &t.params;
        for (name, value) in [
            ("time_limit", p.time_limit),
            ("memory_limit", p.memory_limit),
            ("output_limit", p.output_limit),
        ] {
            if value == 0 {
                push(field(&format!("params.{name}")), "must be strictly positive".into());
            }
        }
        for kv in &p.passthrough {
            match p.declared(&kv.key) {
                None => push(
                    field("params.passthrough"),
                    format!("`{}` is not a declared parameter", kv.key),
                ),
                Some(value) if value != kv.value => push(
                    field("params.passthrough"),
                    format!("`{}` must carry the declared value {value}", kv.key),
                ),
                Some(_) => {}
            }
        }
    }
    out
}

fn serde_plain<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(id: u32, input: &str, output: &str) -> TestInstance {
        TestInstance {
            id,
            input: input.into(),
            reference_output: Some(output.into()),
            params: ResourceLimits::default().default_params(),
            max_points: Score::zero(),
            reference_score: None,
        }
    }

    fn binary_problem() -> Problem {
        Problem {
            id: "echo".into(),
            kind: ProblemKind::Decision,
            direction: Direction::None,
            instances: vec![instance(1, "1 2\n", "1 2\n"), instance(2, "3\n", "3\n")],
            policy: ScoringPolicy::new(PolicyKind::BinaryIcpc),
            limits: ResourceLimits::default(),
            statement: String::new(),
            checker: CheckerSpec::default(),
            alphabet: Alphabet::default(),
            visibility: Visibility::default(),
        }
    }

    #[test]
    fn well_formed_binary_problem() {
        assert!(validate_problem(&binary_problem()).is_empty());
    }

    #[test]
    fn optimization_requires_direction() {
        let mut p = binary_problem();
        p.kind = ProblemKind::Optimization;
        p.checker = CheckerSpec::Objective {
            name: "facility".into(),
        };
        let rules: Vec<_> = validate_problem(&p).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec!["direction required for optimization".to_string()]);
    }

    #[test]
    fn duplicate_ids_reported_once() {
        let mut p = binary_problem();
        p.instances.push(instance(2, "4\n", "4\n"));
        let v = validate_problem(&p);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("duplicate instance id 2"), "{v:?}");
    }

    #[test]
    fn direction_forbidden_for_decision() {
        let mut p = binary_problem();
        p.direction = Direction::Maximize;
        let v = validate_problem(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "direction");
    }

    #[test]
    fn alphabet_checked_on_reference_data() {
        let mut p = binary_problem();
        p.instances[0].input = "1 x\n".into();
        let v = validate_problem(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "instances[1].input");

        p.alphabet.extra = "x".into();
        assert!(validate_problem(&p).is_empty());
    }

    #[test]
    fn passthrough_must_name_declared_params() {
        let mut p = binary_problem();
        p.instances[0].params.rng_seed = Some(7);
        p.instances[0].params.passthrough = vec![KeyValue {
            key: "rng_seed".into(),
            value: "7".into(),
        }];
        assert!(validate_problem(&p).is_empty());
        p.instances[0].params.passthrough.push(KeyValue {
            key: "secret".into(),
            value: "1".into(),
        });
        assert_eq!(validate_problem(&p).len(), 1);
    }

    #[test]
    fn solution_env_names() {
        let mut params = ResourceLimits::default().default_params();
        params.rng_seed = Some(99);
        params.passthrough = vec![KeyValue {
            key: "time_limit".into(),
            value: params.time_limit.to_string(),
        }];
        let env = params.solution_env();
        assert_eq!(
            env,
            vec![
                ("JUDGE_SEED".to_string(), "99".to_string()),
                ("JUDGE_TIME_LIMIT_MS".to_string(), "1000".to_string()),
            ]
        );
    }

    #[test]
    fn status_codes_serialize_as_abbreviations() {
        let json = serde_json::to_string(&ExecutionStatus::OutputLimitExceeded).unwrap();
        assert_eq!(json, "\"OLE\"");
        assert!(!ExecutionStatus::CompileError.is_instance_status());
    }

    #[test]
    fn problem_round_trip() {
        let p = binary_problem();
        let json = serde_json::to_string(&p).unwrap();
        let back: Problem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
