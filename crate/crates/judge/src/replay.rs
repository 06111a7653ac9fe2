//! Contest time series rebuilt from a journal: how close the best solution
//! so far was to the final winner, and how many submissions were correct
//! or failed on each day.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use judge_core::scoring::aggregate_status;
use judge_core::{Direction, ExecutionStatus, Score};
use serde::Serialize;

use crate::service::journal::{read_records, Event, Finished, JournalError, Record};
use crate::service::state::{Applied, State};

pub const DAY_MS: u64 = 86_400_000;
pub const CSV_HEADER: &str = "day,best_ratio,correct,incorrect,users_total,users_new";

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("the log holds several problems ({0}); choose one")]
    AmbiguousProblem(String),
    #[error("the log holds no problem")]
    NoProblem,
}

impl From<JournalError> for ReplayError {
    fn from(e: JournalError) -> Self {
        ReplayError::MalformedLog(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DayRow {
    pub day: u64,
    /// Best so far against the final best, oriented to be at least 1.
    /// `None` until the first fully accepted submission.
    pub best_ratio: Option<Score>,
    pub correct: u64,
    pub incorrect: u64,
    pub active_users: u64,
    pub users_total: u64,
    pub users_new: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Series {
    pub problem_id: String,
    pub direction: Direction,
    pub rows: Vec<DayRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Correct,
    Incorrect,
    Neither,
}

/// Correct means accepted; incorrect means a wrong answer or an execution
/// error. Compile and judge failures count as neither.
pub fn classify(status: ExecutionStatus) -> Class {
    match status {
        ExecutionStatus::Accepted => Class::Correct,
        ExecutionStatus::TimeLimitExceeded
        | ExecutionStatus::MemoryLimitExceeded
        | ExecutionStatus::RuntimeError
        | ExecutionStatus::WrongAnswer
        | ExecutionStatus::OutputLimitExceeded => Class::Incorrect,
        _ => Class::Neither,
    }
}

struct Judged {
    day: u64,
    class: Class,
    objective: Option<Score>,
}

pub fn replay_file(path: &Path, problem_id: Option<&str>) -> Result<Series, ReplayError> {
    replay(&read_records(path)?, problem_id)
}

/// Builds the daily series of one problem. With `problem_id` unset the log
/// must hold exactly one problem.
pub fn replay(records: &[Record], problem_id: Option<&str>) -> Result<Series, ReplayError> {
    let mut state = State::default();
    let mut finished = Vec::new();
    for record in records {
        let applied = state
            .apply_record(record)
            .map_err(|e| ReplayError::MalformedLog(format!("record {}: {e}", record.seq)))?;
        if let (Applied::Changed, Event::SubmissionFinished { submission_id, result, .. }) =
            (applied, &record.event)
        {
            finished.push((submission_id.clone(), result.clone()));
        }
    }
    let problem_id = match problem_id {
        Some(id) => id.to_string(),
        None => {
            let ids: Vec<&String> = state.problems.keys().collect();
            match ids.as_slice() {
                [] => return Err(ReplayError::NoProblem),
                [only] => only.to_string(),
                many => {
                    let names: Vec<&str> = many.iter().map(|s| s.as_str()).collect();
                    return Err(ReplayError::AmbiguousProblem(names.join(", ")));
                }
            }
        }
    };
    let ps = state
        .problem(&problem_id)
        .ok_or_else(|| ReplayError::UnknownProblem(problem_id.clone()))?;
    let problem = &ps.problem;

    let submissions: Vec<_> = ps.submissions.iter().map(|id| &state.records[id].submission).collect();
    let Some(start) = submissions.iter().map(|s| s.submitted_at).min() else {
        return Ok(Series {
            problem_id,
            direction: problem.direction,
            rows: Vec::new(),
        });
    };
    let day_of = |t: u64| (t - start) / DAY_MS;
    let last_day = submissions.iter().map(|s| day_of(s.submitted_at)).max().unwrap_or(0);

    let mut judged = Vec::new();
    for (id, result) in &finished {
        let submission = &state.records[id].submission;
        if submission.problem_id != problem_id {
            continue;
        }
        let (class, objective) = match result {
            Finished::Evaluated { per_instance } => {
                let statuses: Vec<_> = per_instance.iter().map(|o| o.status).collect();
                let status = if statuses.is_empty() {
                    ExecutionStatus::CompileError
                } else {
                    aggregate_status(&statuses, problem.policy.re_priority)
                };
                let complete = per_instance.len() == problem.instances.len();
                let objective = (status == ExecutionStatus::Accepted && complete)
                    .then(|| per_instance.iter().map(|o| &o.score).sum::<Score>());
                (classify(status), objective)
            }
            Finished::CompileError { .. } | Finished::InternalError { .. } => (Class::Neither, None),
        };
        judged.push(Judged {
            day: day_of(submission.submitted_at),
            class,
            objective,
        });
    }

    let better = |a: &Score, b: &Score| match problem.direction {
        Direction::Minimize => a < b,
        Direction::Maximize => a > b,
        Direction::None => false,
    };
    let pick = |acc: Option<Score>, v: &Score| match acc {
        Some(b) if !better(v, &b) => Some(b),
        _ => Some(v.clone()),
    };
    let final_best = judged
        .iter()
        .filter_map(|j| j.objective.as_ref())
        .fold(None, pick);

    let mut first_day: BTreeMap<&str, u64> = BTreeMap::new();
    let mut active: BTreeMap<u64, BTreeSet<&str>> = BTreeMap::new();
    for s in &submissions {
        let d = day_of(s.submitted_at);
        let e = first_day.entry(&s.user_id).or_insert(d);
        *e = (*e).min(d);
        active.entry(d).or_default().insert(&s.user_id);
    }

    let mut rows = Vec::new();
    let mut best_so_far: Option<Score> = None;
    let mut users_total = 0;
    for day in 0..=last_day {
        let today: Vec<&Judged> = judged.iter().filter(|j| j.day == day).collect();
        for j in &today {
            if let Some(v) = &j.objective {
                best_so_far = pick(best_so_far.take(), v);
            }
        }
        let users_new = first_day.values().filter(|&&d| d == day).count() as u64;
        users_total += users_new;
        let best_ratio = match (&best_so_far, &final_best, problem.direction) {
            (Some(b), Some(f), Direction::Minimize) => ratio(b, f),
            (Some(b), Some(f), Direction::Maximize) => ratio(f, b),
            _ => None,
        };
        rows.push(DayRow {
            day,
            best_ratio,
            correct: today.iter().filter(|j| j.class == Class::Correct).count() as u64,
            incorrect: today.iter().filter(|j| j.class == Class::Incorrect).count() as u64,
            active_users: active.get(&day).map_or(0, |u| u.len() as u64),
            users_total,
            users_new,
        });
    }
    Ok(Series {
        problem_id,
        direction: problem.direction,
        rows,
    })
}

fn ratio(num: &Score, den: &Score) -> Option<Score> {
    if num == den {
        return Some(Score::from_int(1));
    }
    num.checked_div(den)
}

pub fn to_csv(series: &Series) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &series.rows {
        let ratio = r.best_ratio.as_ref().map(Score::to_decimal).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.day, ratio, r.correct, r.incorrect, r.users_total, r.users_new
        );
    }
    out
}
