//! Per-instance evaluation: run, classify, check, score.

use std::sync::Arc;

use judge_core::checks::{first_token_mismatch, instance_score, parse_checker_line, CheckerVerdict, ScoreInputs};
use judge_core::facility::{self, FacilityVerdict};
use judge_core::{CheckerSpec, ExecStats, ExecutionStatus, ExitKind, InstanceOutcome, Problem, Score, TestInstance};

use crate::artifact::Artifact;
use crate::compile::{Compiler, StageError};
use crate::sandbox::{classify, PreCheck, RunLimits, RunRequest, Sandbox, SandboxFault, StagedContent, StagedFile, WORKDIR};

/// The judge itself failed; the submission is not charged.
#[derive(Debug, thiserror::Error)]
pub enum InfrastructureError {
    #[error(transparent)]
    Sandbox(#[from] SandboxFault),
    #[error("checker failed: {0}")]
    Checker(String),
    #[error("checker could not be built: {0}")]
    CheckerBuild(String),
}

/// Result of a built-in objective check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveVerdict {
    Feasible { objective: Score },
    Infeasible { detail: String },
}

/// Parser, feasibility test and objective function of an optimization
/// problem.
pub trait ObjectiveChecker: Send + Sync {
    /// `Err` means the instance itself could not be read, which is the
    /// judge's fault rather than the contestant's.
    fn check(&self, input: &[u8], output: &[u8]) -> Result<ObjectiveVerdict, String>;
}

struct FacilityChecker;

impl ObjectiveChecker for FacilityChecker {
    fn check(&self, input: &[u8], output: &[u8]) -> Result<ObjectiveVerdict, String> {
        match facility::check_output(input, output).map_err(|e| e.to_string())? {
            FacilityVerdict::Feasible { objective } => Ok(ObjectiveVerdict::Feasible {
                objective: Score::from(objective),
            }),
            FacilityVerdict::Infeasible { detail } => Ok(ObjectiveVerdict::Infeasible { detail }),
            FacilityVerdict::ParseFailure { detail } => Ok(ObjectiveVerdict::Infeasible {
                detail: format!("unreadable output: {detail}"),
            }),
        }
    }
}

/// Built-in objective checkers by name.
pub fn objective_checker(name: &str) -> Option<Arc<dyn ObjectiveChecker>> {
    match name {
        "facility" => Some(Arc::new(FacilityChecker)),
        _ => None,
    }
}

pub fn objective_names() -> &'static [&'static str] {
    &["facility"]
}

/// A checker ready to judge outputs of one problem.
#[derive(Clone)]
pub enum Checker {
    TokenExact { byte_exact: bool, csv: bool },
    Objective(Arc<dyn ObjectiveChecker>),
    External(Artifact),
}

impl std::fmt::Debug for Checker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Checker::TokenExact { byte_exact, csv } => f
                .debug_struct("TokenExact")
                .field("byte_exact", byte_exact)
                .field("csv", csv)
                .finish(),
            Checker::Objective(_) => f.write_str("Objective"),
            Checker::External(a) => f.debug_tuple("External").field(a).finish(),
        }
    }
}

impl Checker {
    /// Builds the checker named by the problem. External checkers are
    /// compiled here, once per problem.
    pub fn prepare(problem: &Problem, compiler: &Compiler<'_>) -> Result<Checker, InfrastructureError> {
        match &problem.checker {
            CheckerSpec::TokenExact { byte_exact } => Ok(Checker::TokenExact {
                byte_exact: *byte_exact,
                csv: problem.alphabet.csv,
            }),
            CheckerSpec::Objective { name } => objective_checker(name)
                .map(Checker::Objective)
                .ok_or_else(|| InfrastructureError::CheckerBuild(format!("no objective checker named {name}"))),
            CheckerSpec::External {
                language_id,
                file_name,
                source,
            } => {
                let submission = judge_core::Submission {
                    id: format!("{}-checker", problem.id),
                    problem_id: problem.id.clone(),
                    user_id: String::new(),
                    payload: judge_core::Payload::Source {
                        language_id: language_id.clone(),
                        files: vec![judge_core::SourceFile {
                            name: file_name.clone(),
                            content: source.clone(),
                        }],
                    },
                    submitted_at: 0,
                };
                match compiler.compile(&submission, &problem.limits) {
                    Ok(artifact) => Ok(Checker::External(artifact)),
                    Err(StageError::Rejected(e)) => Err(InfrastructureError::CheckerBuild(e.log())),
                    Err(StageError::Fault(e)) => Err(e.into()),
                }
            }
        }
    }
}

struct Judgement {
    status: ExecutionStatus,
    objective: Option<Score>,
    detail: Option<String>,
}

impl Judgement {
    fn accepted(objective: Option<Score>, detail: Option<String>) -> Self {
        Judgement {
            status: ExecutionStatus::Accepted,
            objective,
            detail,
        }
    }

    fn wrong(detail: String) -> Self {
        Judgement {
            status: ExecutionStatus::WrongAnswer,
            objective: None,
            detail: Some(detail),
        }
    }
}

pub struct Engine<'a> {
    pub sandbox: &'a Sandbox,
    pub checker: &'a Checker,
}

impl Engine<'_> {
    /// Runs the solution on one instance and produces its outcome. Any
    /// non-accepted status scores zero.
    pub fn evaluate_instance(
        &self,
        artifact: &Artifact,
        instance: &TestInstance,
        problem: &Problem,
    ) -> Result<InstanceOutcome, InfrastructureError> {
        let raw = self.sandbox.execute(artifact, instance.input.as_slice(), &instance.params)?;
        let stats = raw.stats.clone();
        let judgement = match classify(&raw).status() {
            Some(status) => Judgement {
                status,
                objective: None,
                detail: (classify(&raw) == PreCheck::Re).then(|| exit_detail(&stats)),
            },
            None => self.check(instance, &raw.stdout)?,
        };
        let score = instance_score(
            problem.policy.kind,
            judgement.status,
            &ScoreInputs {
                max_points: &instance.max_points,
                time_limit: instance.params.time_limit,
                cpu_time: stats.cpu_time,
                objective: judgement.objective.as_ref(),
            },
        );
        Ok(InstanceOutcome {
            instance_id: instance.id,
            status: judgement.status,
            score,
            stats: Some(stats),
            detail: judgement.detail,
        })
    }

    /// Evaluates every instance in order.
    pub fn evaluate_all(&self, artifact: &Artifact, problem: &Problem) -> Result<Vec<InstanceOutcome>, InfrastructureError> {
        problem
            .instances
            .iter()
            .map(|t| self.evaluate_instance(artifact, t, problem))
            .collect()
    }

    fn check(&self, instance: &TestInstance, output: &[u8]) -> Result<Judgement, InfrastructureError> {
        match self.checker {
            Checker::TokenExact { byte_exact, csv } => {
                let reference = instance
                    .reference_output
                    .as_ref()
                    .ok_or_else(|| InfrastructureError::Checker(format!("instance {} has no reference output", instance.id)))?;
                if *byte_exact {
                    return Ok(if output == reference.as_slice() {
                        Judgement::accepted(None, None)
                    } else {
                        Judgement::wrong("output differs from the reference".into())
                    });
                }
                Ok(match first_token_mismatch(output, reference.as_slice(), *csv) {
                    None => Judgement::accepted(None, None),
                    Some(i) => Judgement::wrong(format!("token {} differs", i + 1)),
                })
            }
            Checker::Objective(checker) => {
                match checker
                    .check(instance.input.as_slice(), output)
                    .map_err(InfrastructureError::Checker)?
                {
                    ObjectiveVerdict::Feasible { objective } => Ok(Judgement::accepted(Some(objective), None)),
                    ObjectiveVerdict::Infeasible { detail } => Ok(Judgement::wrong(detail)),
                }
            }
            Checker::External(artifact) => self.external(artifact, instance, output),
        }
    }

    fn external(&self, checker: &Artifact, instance: &TestInstance, output: &[u8]) -> Result<Judgement, InfrastructureError> {
        let mut files = vec![
            StagedFile {
                path: ".".into(),
                content: StagedContent::Tree(checker.dir().to_path_buf()),
                executable: false,
            },
            StagedFile {
                path: "judge_input.txt".into(),
                content: StagedContent::Bytes(instance.input.0.clone()),
                executable: false,
            },
            StagedFile {
                path: "judge_output.txt".into(),
                content: StagedContent::Bytes(output.to_vec()),
                executable: false,
            },
        ];
        files.push(StagedFile {
            path: "judge_reference.txt".into(),
            content: StagedContent::Bytes(
                instance
                    .reference_output
                    .as_ref()
                    .map(|r| r.0.clone())
                    .unwrap_or_default(),
            ),
            executable: false,
        });
        let mut argv = checker.command_in(std::path::Path::new(WORKDIR));
        for name in ["judge_input.txt", "judge_output.txt", "judge_reference.txt"] {
            argv.push(format!("{WORKDIR}/{name}"));
        }
        let run = self.sandbox.run(RunRequest {
            argv,
            files,
            stdin: Vec::new(),
            env: Vec::new(),
            limits: RunLimits::for_params(&instance.params),
            collect: Vec::new(),
        })?;
        let raw = run.raw;
        if classify(&raw) != PreCheck::RanOk {
            return Err(InfrastructureError::Checker(format!(
                "checker run ended with {:?}, {}: {}",
                raw.limit_hits,
                exit_detail(&raw.stats),
                String::from_utf8_lossy(&raw.stderr).trim()
            )));
        }
        match parse_checker_line(&raw.stdout).map_err(|e| InfrastructureError::Checker(e.to_string()))? {
            CheckerVerdict::Ok { score, detail } => Ok(Judgement::accepted(score, detail)),
            CheckerVerdict::WrongAnswer { reason } => Ok(Judgement::wrong(reason)),
        }
    }
}

fn exit_detail(stats: &ExecStats) -> String {
    match stats.exit {
        ExitKind::Code(c) => format!("exit code {c}"),
        ExitKind::Signaled(s) => format!("killed by signal {s}"),
    }
}
