//! Service state as a pure function of the journal. Every change goes
//! through [`State::apply`], so replaying the journal rebuilds it exactly.

use std::collections::{BTreeMap, BTreeSet};

use judge_core::scoring::{aggregate, build_leaderboard, BestTable, LeaderboardEntry, Standing};
use judge_core::{
    AggregateResult, ExecStats, ExecutionStatus, InstanceOutcome, Problem, Score, Submission,
};
use serde::{Deserialize, Serialize};

use super::journal::{Event, Finished, Record};
use crate::pipeline::compile_error_result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Lifecycle {
    Queued,
    Running { attempt: u32, worker: usize },
    Done { result: Finished },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub submission: Submission,
    pub lifecycle: Lifecycle,
    /// Attempts started so far.
    pub attempts: u32,
    pub received_at: u64,
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
    /// Aggregate under the current best table; recomputed when it changes.
    #[serde(skip)]
    pub result: Option<AggregateResult>,
    #[serde(skip)]
    pub scoring_error: Option<String>,
}

impl SubmissionRecord {
    pub fn id(&self) -> &str {
        &self.submission.id
    }

    pub fn is_done(&self) -> bool {
        matches!(self.lifecycle, Lifecycle::Done { .. })
    }

    pub fn running_attempt(&self) -> Option<u32> {
        match self.lifecycle {
            Lifecycle::Running { attempt, .. } => Some(attempt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemState {
    pub problem: Problem,
    pub best: BestTable,
    /// Submission ids in arrival order.
    pub submissions: Vec<String>,
    #[serde(skip)]
    pub leaderboard: Vec<LeaderboardEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("problem `{0}` is already registered")]
    DuplicateProblem(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("submission `{0}` already exists")]
    DuplicateSubmission(String),
    #[error("unknown submission `{0}`")]
    UnknownSubmission(String),
    #[error("record {seq} is out of order")]
    OutOfOrder { seq: u64 },
}

/// Whether an event changed anything. Events from an attempt that has since
/// been superseded are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Changed,
    Stale,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    pub last_seq: u64,
    pub problems: BTreeMap<String, ProblemState>,
    pub records: BTreeMap<String, SubmissionRecord>,
    /// Submission ids in arrival order.
    pub order: Vec<String>,
    #[serde(skip)]
    dirty: BTreeSet<String>,
}

pub fn submission_id(n: usize) -> String {
    format!("s{n:06}")
}

impl State {
    /// State after applying `records` to an empty state.
    pub fn from_records(records: &[Record]) -> Result<State, StateError> {
        let mut state = State::default();
        for r in records {
            state.apply_record(r)?;
        }
        state.refresh();
        Ok(state)
    }

    /// Marks everything stale; call after deserializing a snapshot.
    pub fn mark_all_dirty(&mut self) {
        self.dirty = self.problems.keys().cloned().collect();
    }

    pub fn next_submission_id(&self) -> String {
        submission_id(self.order.len() + 1)
    }

    pub fn record(&self, id: &str) -> Option<&SubmissionRecord> {
        self.records.get(id)
    }

    pub fn problem(&self, id: &str) -> Option<&ProblemState> {
        self.problems.get(id)
    }

    pub fn apply_record(&mut self, record: &Record) -> Result<Applied, StateError> {
        if record.seq <= self.last_seq {
            return Err(StateError::OutOfOrder { seq: record.seq });
        }
        let applied = self.apply(&record.event, record.at)?;
        self.last_seq = record.seq;
        Ok(applied)
    }

    /// Applies one event. Derived scores go stale until [`State::refresh`].
    pub fn apply(&mut self, event: &Event, at: u64) -> Result<Applied, StateError> {
        match event {
            Event::ProblemRegistered { problem } => {
                if self.problems.contains_key(&problem.id) {
                    return Err(StateError::DuplicateProblem(problem.id.clone()));
                }
                self.problems.insert(
                    problem.id.clone(),
                    ProblemState {
                        best: BestTable::for_problem(problem),
                        problem: problem.clone(),
                        submissions: Vec::new(),
                        leaderboard: Vec::new(),
                    },
                );
                self.dirty.insert(problem.id.clone());
            }
            Event::SubmissionReceived { submission } => {
                let problem = self
                    .problems
                    .get_mut(&submission.problem_id)
                    .ok_or_else(|| StateError::UnknownProblem(submission.problem_id.clone()))?;
                if self.records.contains_key(&submission.id) {
                    return Err(StateError::DuplicateSubmission(submission.id.clone()));
                }
                problem.submissions.push(submission.id.clone());
                self.order.push(submission.id.clone());
                self.records.insert(
                    submission.id.clone(),
                    SubmissionRecord {
                        submission: submission.clone(),
                        lifecycle: Lifecycle::Queued,
                        attempts: 0,
                        received_at: at,
                        started_at: None,
                        finished_at: None,
                        result: None,
                        scoring_error: None,
                    },
                );
            }
            Event::SubmissionStarted {
                submission_id,
                attempt,
                worker,
            } => {
                let record = self.record_mut(submission_id)?;
                if record.lifecycle != Lifecycle::Queued || *attempt != record.attempts + 1 {
                    return Ok(Applied::Stale);
                }
                record.attempts = *attempt;
                record.lifecycle = Lifecycle::Running {
                    attempt: *attempt,
                    worker: *worker,
                };
                record.started_at = Some(at);
            }
            Event::SubmissionRequeued {
                submission_id,
                attempt,
                ..
            } => {
                let record = self.record_mut(submission_id)?;
                if record.running_attempt() != Some(*attempt) {
                    return Ok(Applied::Stale);
                }
                record.lifecycle = Lifecycle::Queued;
            }
            Event::SubmissionFinished {
                submission_id,
                attempt,
                result,
            } => {
                let record = self.record_mut(submission_id)?;
                if record.running_attempt() != Some(*attempt) {
                    return Ok(Applied::Stale);
                }
                record.lifecycle = Lifecycle::Done {
                    result: result.clone(),
                };
                record.finished_at = Some(at);
                let problem_id = record.submission.problem_id.clone();
                self.dirty.insert(problem_id);
            }
            Event::BestUpdated {
                problem_id,
                instance_id,
                score,
                submission_id,
            } => {
                let problem = self
                    .problems
                    .get_mut(problem_id)
                    .ok_or_else(|| StateError::UnknownProblem(problem_id.clone()))?;
                problem
                    .best
                    .set(*instance_id, score.clone(), Some(submission_id.clone()));
                self.dirty.insert(problem_id.clone());
            }
        }
        Ok(Applied::Changed)
    }

    fn record_mut(&mut self, id: &str) -> Result<&mut SubmissionRecord, StateError> {
        self.records
            .get_mut(id)
            .ok_or_else(|| StateError::UnknownSubmission(id.to_string()))
    }

    /// Recomputes aggregates and leaderboards of problems touched since the
    /// last refresh.
    pub fn refresh(&mut self) {
        let dirty = std::mem::take(&mut self.dirty);
        for problem_id in dirty {
            let Some(ps) = self.problems.get_mut(&problem_id) else {
                continue;
            };
            for id in &ps.submissions {
                let record = self.records.get_mut(id).expect("indexed submission exists");
                let (result, error) = match &record.lifecycle {
                    Lifecycle::Done {
                        result: Finished::Evaluated { per_instance },
                    } => match aggregate(&ps.problem, id, per_instance.clone(), &ps.best) {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e.to_string())),
                    },
                    Lifecycle::Done {
                        result: Finished::CompileError { .. },
                    } => (Some(compile_error_result(id)), None),
                    _ => (None, None),
                };
                record.result = result;
                record.scoring_error = error;
            }
            let standings: Vec<Standing<'_>> = ps
                .submissions
                .iter()
                .filter_map(|id| {
                    let record = &self.records[id];
                    record.result.as_ref().map(|r| Standing {
                        user_id: &record.submission.user_id,
                        submission_id: id,
                        submitted_at: record.submission.submitted_at,
                        score: &r.score,
                    })
                })
                .collect();
            ps.leaderboard = build_leaderboard(&standings);
        }
    }

    /// Oldest queued submission whose user has nothing running.
    pub fn next_claimable(&self) -> Option<&SubmissionRecord> {
        let busy: BTreeSet<&str> = self
            .records
            .values()
            .filter(|r| r.running_attempt().is_some())
            .map(|r| r.submission.user_id.as_str())
            .collect();
        self.order
            .iter()
            .map(|id| &self.records[id])
            .find(|r| r.lifecycle == Lifecycle::Queued && !busy.contains(r.submission.user_id.as_str()))
    }

    pub fn running(&self) -> impl Iterator<Item = &SubmissionRecord> {
        self.records.values().filter(|r| r.running_attempt().is_some())
    }

    pub fn queued_count(&self) -> usize {
        self.records
            .values()
            .filter(|r| r.lifecycle == Lifecycle::Queued)
            .count()
    }

    /// Everything a client can observe, without timestamps or attempt
    /// bookkeeping. Two states that judged the same submissions the same
    /// way encode to the same bytes.
    pub fn canonical_json(&self) -> String {
        let problems: Vec<_> = self
            .problems
            .values()
            .map(|ps| {
                serde_json::json!({
                    "id": ps.problem.id,
                    "best": ps.best,
                    "leaderboard": ps.leaderboard,
                })
            })
            .collect();
        let submissions: Vec<_> = self
            .order
            .iter()
            .map(|id| {
                let r = &self.records[id];
                serde_json::json!({
                    "id": id,
                    "problem_id": r.submission.problem_id,
                    "user_id": r.submission.user_id,
                    "lifecycle": match &r.lifecycle {
                        Lifecycle::Queued => serde_json::json!("queued"),
                        Lifecycle::Running { .. } => serde_json::json!("running"),
                        Lifecycle::Done { result } => serde_json::to_value(result).unwrap(),
                    },
                    "result": r.result,
                    "scoring_error": r.scoring_error,
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "problems": problems,
            "submissions": submissions,
        }))
        .expect("state encodes")
    }
}

/// Per-instance outcome as shown to the submitter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub instance_id: u32,
    pub status: ExecutionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<Score>,
    pub stats: Option<ExecStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionView {
    pub submission_id: String,
    pub problem_id: String,
    pub user_id: String,
    pub language_id: String,
    pub submitted_at: u64,
    pub state: String,
    pub status: Option<ExecutionStatus>,
    pub score: Option<Score>,
    pub per_instance: Option<Vec<OutcomeView>>,
    pub compile_log: Option<String>,
    pub error: Option<String>,
    pub attempts: u32,
    pub received_at: u64,
    pub started_at: Option<u64>,
    pub finished_at: Option<u64>,
}

fn outcome_view(problem: &Problem, o: &InstanceOutcome) -> OutcomeView {
    let show_detail = o.status != ExecutionStatus::WrongAnswer || problem.visibility.wa_detail;
    OutcomeView {
        instance_id: o.instance_id,
        status: o.status,
        score: problem.shows_instance_scores().then(|| o.score.clone()),
        stats: o.stats.clone(),
        detail: if show_detail { o.detail.clone() } else { None },
    }
}

impl SubmissionView {
    pub fn new(record: &SubmissionRecord, problem: &Problem) -> Self {
        let s = &record.submission;
        let mut view = SubmissionView {
            submission_id: s.id.clone(),
            problem_id: s.problem_id.clone(),
            user_id: s.user_id.clone(),
            language_id: s.payload.language_id().unwrap_or("binary").to_string(),
            submitted_at: s.submitted_at,
            state: String::new(),
            status: None,
            score: None,
            per_instance: None,
            compile_log: None,
            error: None,
            attempts: record.attempts,
            received_at: record.received_at,
            started_at: record.started_at,
            finished_at: record.finished_at,
        };
        match &record.lifecycle {
            Lifecycle::Queued => {
                view.state = "queued".into();
                view.status = Some(ExecutionStatus::Queued);
            }
            Lifecycle::Running { .. } => {
                view.state = "running".into();
                view.status = Some(ExecutionStatus::Running);
            }
            Lifecycle::Done { result } => {
                view.state = "done".into();
                match result {
                    Finished::Evaluated { per_instance } => {
                        view.status = Some(match &record.result {
                            Some(r) => r.status,
                            None => judge_core::scoring::aggregate_status(
                                &per_instance.iter().map(|o| o.status).collect::<Vec<_>>(),
                                problem.policy.re_priority,
                            ),
                        });
                        view.score = record.result.as_ref().map(|r| r.score.clone());
                        view.error = record.scoring_error.clone();
                        if problem.visibility.instance_statuses {
                            view.per_instance = Some(
                                per_instance.iter().map(|o| outcome_view(problem, o)).collect(),
                            );
                        }
                    }
                    Finished::CompileError { log } => {
                        view.status = Some(ExecutionStatus::CompileError);
                        view.score = Some(Score::zero());
                        view.compile_log = Some(log.clone());
                    }
                    Finished::InternalError { message } => {
                        view.error = Some(message.clone());
                    }
                }
            }
        }
        view
    }
}

/// Problem as listed to clients: no test data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemView {
    pub id: String,
    pub kind: judge_core::ProblemKind,
    pub direction: judge_core::Direction,
    pub policy: judge_core::ScoringPolicy,
    pub limits: judge_core::ResourceLimits,
    pub statement: String,
    pub instance_count: usize,
    pub max_points: Vec<Score>,
}

impl ProblemView {
    pub fn new(problem: &Problem) -> Self {
        ProblemView {
            id: problem.id.clone(),
            kind: problem.kind,
            direction: problem.direction,
            policy: problem.policy,
            limits: problem.limits.clone(),
            statement: problem.statement.clone(),
            instance_count: problem.instances.len(),
            max_points: problem.instances.iter().map(|t| t.max_points.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use judge_core::{Direction, PolicyKind, Payload, ScoringPolicy};

    fn problem() -> Problem {
        let mut p: Problem = serde_json::from_value(serde_json::json!({
            "id": "p",
            "kind": "optimization",
            "direction": "minimize",
            "instances": [],
            "policy": {"kind": "optimization_normalized"},
            "limits": {"compile_time": 1000, "binary_size": 1000000, "time_limit": 1000,
                       "memory_limit": 1000000, "output_limit": 1000}
        }))
        .unwrap();
        for id in 1..=2 {
            p.instances.push(serde_json::from_value(serde_json::json!({
                "id": id, "input": "", "params": p.limits.default_params(), "max_points": "0"
            })).unwrap());
        }
        p.policy = ScoringPolicy::new(PolicyKind::OptimizationNormalized);
        p.direction = Direction::Minimize;
        p
    }

    fn submission(n: usize, user: &str) -> Submission {
        Submission {
            id: submission_id(n),
            problem_id: "p".into(),
            user_id: user.into(),
            payload: Payload::StaticBinary(Default::default()),
            submitted_at: n as u64,
        }
    }

    fn acc(instance_id: u32, v: i64) -> InstanceOutcome {
        InstanceOutcome {
            instance_id,
            status: ExecutionStatus::Accepted,
            score: Score::from_int(v),
            stats: None,
            detail: None,
        }
    }

    fn finish(state: &mut State, id: &str, outcomes: Vec<InstanceOutcome>) {
        let events = [
            Event::SubmissionStarted {
                submission_id: id.into(),
                attempt: 1,
                worker: 0,
            },
            Event::SubmissionFinished {
                submission_id: id.into(),
                attempt: 1,
                result: Finished::Evaluated {
                    per_instance: outcomes.clone(),
                },
            },
        ];
        for e in &events {
            state.apply(e, 0).unwrap();
        }
        let mut best = state.problems["p"].best.clone();
        for o in &outcomes {
            if best.update_best(o, id) {
                state
                    .apply(
                        &Event::BestUpdated {
                            problem_id: "p".into(),
                            instance_id: o.instance_id,
                            score: o.score.clone(),
                            submission_id: id.into(),
                        },
                        0,
                    )
                    .unwrap();
            }
        }
        state.refresh();
    }

    #[test]
    fn better_submission_renormalizes_earlier_ones() {
        let mut state = State::default();
        state
            .apply(&Event::ProblemRegistered { problem: problem() }, 0)
            .unwrap();
        for (n, user) in [(1, "a"), (2, "b")] {
            state
                .apply(&Event::SubmissionReceived { submission: submission(n, user) }, 0)
                .unwrap();
        }
        finish(&mut state, "s000001", vec![acc(1, 10), acc(2, 10)]);
        assert_eq!(state.records["s000001"].result.as_ref().unwrap().score, 100);
        finish(&mut state, "s000002", vec![acc(1, 5), acc(2, 20)]);
        // a: 50 * (5/10 + 10/10) = 75; b: 50 * (5/5 + 10/20) = 75, earlier wins.
        assert_eq!(state.records["s000001"].result.as_ref().unwrap().score, 75);
        assert_eq!(state.records["s000002"].result.as_ref().unwrap().score, 75);
        let board = &state.problems["p"].leaderboard;
        assert_eq!(board[0].user_id, "a");
        assert_eq!(board[1].rank, 2);
    }

    #[test]
    fn stale_attempts_are_ignored() {
        let mut state = State::default();
        state
            .apply(&Event::ProblemRegistered { problem: problem() }, 0)
            .unwrap();
        state
            .apply(&Event::SubmissionReceived { submission: submission(1, "a") }, 0)
            .unwrap();
        let start = |attempt| Event::SubmissionStarted {
            submission_id: "s000001".into(),
            attempt,
            worker: 0,
        };
        assert_eq!(state.apply(&start(2), 0).unwrap(), Applied::Stale);
        assert_eq!(state.apply(&start(1), 0).unwrap(), Applied::Changed);
        let requeue = Event::SubmissionRequeued {
            submission_id: "s000001".into(),
            attempt: 1,
            reason: "lease expired".into(),
        };
        assert_eq!(state.apply(&requeue, 0).unwrap(), Applied::Changed);
        assert_eq!(state.apply(&start(2), 0).unwrap(), Applied::Changed);
        let late = Event::SubmissionFinished {
            submission_id: "s000001".into(),
            attempt: 1,
            result: Finished::InternalError {
                message: "x".into(),
            },
        };
        assert_eq!(state.apply(&late, 0).unwrap(), Applied::Stale);
        assert_eq!(state.records["s000001"].attempts, 2);
    }

    #[test]
    fn one_running_submission_per_user() {
        let mut state = State::default();
        state
            .apply(&Event::ProblemRegistered { problem: problem() }, 0)
            .unwrap();
        for (n, user) in [(1, "a"), (2, "a"), (3, "b")] {
            state
                .apply(&Event::SubmissionReceived { submission: submission(n, user) }, 0)
                .unwrap();
        }
        assert_eq!(state.next_claimable().unwrap().id(), "s000001");
        state
            .apply(
                &Event::SubmissionStarted {
                    submission_id: "s000001".into(),
                    attempt: 1,
                    worker: 0,
                },
                0,
            )
            .unwrap();
        assert_eq!(state.next_claimable().unwrap().id(), "s000003");
    }

    #[test]
    fn unknown_problem_is_rejected() {
        let mut state = State::default();
        let err = state
            .apply(&Event::SubmissionReceived { submission: submission(1, "a") }, 0)
            .unwrap_err();
        assert_eq!(err, StateError::UnknownProblem("p".into()));
    }
}
