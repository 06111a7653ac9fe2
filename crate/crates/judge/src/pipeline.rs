//! The full evaluation pipeline shared by the command line and the service:
//! compile, evaluate every instance in order, then score.

use judge_core::scoring::{aggregate, BestTable, ScoringError};
use judge_core::{AggregateResult, ExecutionStatus, InstanceOutcome, Problem, Score, Submission};

use crate::compile::{Compiler, StageError, DEFAULT_COMPILE_MEMORY};
use crate::engine::{Checker, Engine, InfrastructureError};
use crate::sandbox::{Sandbox, SandboxConfig, SandboxFault};
use crate::toolchain::Registry;

/// Outcome of judging a submission, before scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Evaluated(Vec<InstanceOutcome>),
    CompileError { log: String },
}

/// A loaded problem with its checker built.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub problem: Problem,
    pub checker: Checker,
}

#[derive(Debug)]
pub struct Judge {
    pub sandbox: Sandbox,
    pub registry: Registry,
    pub compile_memory: u64,
}

impl Judge {
    pub fn new(config: SandboxConfig, registry: Registry) -> Result<Self, SandboxFault> {
        Ok(Judge {
            sandbox: Sandbox::new(config)?,
            registry,
            compile_memory: DEFAULT_COMPILE_MEMORY,
        })
    }

    fn compiler(&self) -> Compiler<'_> {
        Compiler {
            sandbox: &self.sandbox,
            registry: &self.registry,
            memory_limit: self.compile_memory,
        }
    }

    pub fn prepare(&self, problem: Problem) -> Result<PreparedProblem, InfrastructureError> {
        let checker = Checker::prepare(&problem, &self.compiler())?;
        Ok(PreparedProblem { problem, checker })
    }

    /// Compiles and runs `submission` on every instance, in instance order.
    pub fn judge(&self, prepared: &PreparedProblem, submission: &Submission) -> Result<Verdict, InfrastructureError> {
        let problem = &prepared.problem;
        let artifact = match self.compiler().prepare(submission, &problem.limits) {
            Ok(a) => a,
            Err(StageError::Rejected(e)) => return Ok(Verdict::CompileError { log: e.log() }),
            Err(StageError::Fault(e)) => return Err(e.into()),
        };
        let engine = Engine {
            sandbox: &self.sandbox,
            checker: &prepared.checker,
        };
        engine.evaluate_all(&artifact, problem).map(Verdict::Evaluated)
    }
}

/// Aggregate result of a submission that did not compile.
pub fn compile_error_result(submission_id: &str) -> AggregateResult {
    AggregateResult {
        submission_id: submission_id.to_string(),
        status: ExecutionStatus::CompileError,
        score: Score::zero(),
        per_instance: Vec::new(),
    }
}

/// Records the verdict's accepted outcomes in `best`, then aggregates.
/// Compile errors never touch the table.
pub fn score_verdict(
    problem: &Problem,
    submission_id: &str,
    verdict: &Verdict,
    best: &mut BestTable,
) -> Result<AggregateResult, ScoringError> {
    match verdict {
        Verdict::CompileError { .. } => Ok(compile_error_result(submission_id)),
        Verdict::Evaluated(outcomes) => {
            for o in outcomes {
                best.update_best(o, submission_id);
            }
            aggregate(problem, submission_id, outcomes.clone(), best)
        }
    }
}
