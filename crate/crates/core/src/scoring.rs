//! Aggregation of per-instance outcomes into a submission result, the
//! best-known score table and leaderboard construction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    AggregateResult, Direction, ExecutionStatus, InstanceOutcome, PolicyKind, Problem,
    ScoringPolicy,
};
use crate::score::Score;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("instance {instance_id}: zero in a normalization denominator")]
    DegenerateBest { instance_id: u32 },
    #[error("instance {instance_id}: no best-known score recorded")]
    MissingBest { instance_id: u32 },
    #[error("normalized scoring needs a maximize or minimize direction")]
    NoDirection,
}

/// Aggregated status: ACC when every instance is accepted, otherwise the
/// first non-accepted status in instance order. With `re_priority`, any RE
/// wins over other failures.
pub fn aggregate_status(statuses: &[ExecutionStatus], re_priority: bool) -> ExecutionStatus {
    if re_priority && statuses.contains(&ExecutionStatus::RuntimeError) {
        return ExecutionStatus::RuntimeError;
    }
    statuses
        .iter()
        .copied()
        .find(|s| !s.is_accepted())
        .unwrap_or(ExecutionStatus::Accepted)
}

/// Sum of `v_i` over accepted instances.
pub fn aggregate_score_sum(outcomes: &[InstanceOutcome]) -> Score {
    outcomes
        .iter()
        .filter(|o| o.status.is_accepted())
        .map(|o| &o.score)
        .sum()
}

/// Normalized optimization score in `[0, 100]`:
/// `100/|T| · Σ ratio_i` over accepted instances, where the ratio is
/// `v_i / b_i` when maximizing and `b_i / v_i` when minimizing.
///
/// `instance_count` is `|T|`; outcomes for instances that were not run count
/// as zero.
pub fn aggregate_score_normalized(
    outcomes: &[InstanceOutcome],
    instance_count: usize,
    best: &BestTable,
) -> Result<Score, ScoringError> {
    if instance_count == 0 {
        return Ok(Score::zero());
    }
    let mut total = Score::zero();
    for outcome in outcomes.iter().filter(|o| o.status.is_accepted()) {
        let id = outcome.instance_id;
        let b = best
            .get(id)
            .ok_or(ScoringError::MissingBest { instance_id: id })?;
        let ratio = match best.direction() {
            Direction::Maximize => outcome.score.checked_div(b),
            Direction::Minimize => b.checked_div(&outcome.score),
            Direction::None => return Err(ScoringError::NoDirection),
        }
        .ok_or(ScoringError::DegenerateBest { instance_id: id })?;
        if ratio.is_zero() && best.direction() == Direction::Minimize {
            return Err(ScoringError::DegenerateBest { instance_id: id });
        }
        total = total + ratio;
    }
    Ok(total * Score::ratio(100, instance_count as i64))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BestEntry {
    pub score: Score,
    /// `None` for a reference score shipped with the problem.
    pub submission_id: Option<String>,
}

/// Best-known objective value per instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BestTable {
    direction: Direction,
    entries: BTreeMap<u32, BestEntry>,
}

impl BestTable {
    pub fn new(direction: Direction) -> Self {
        BestTable {
            direction,
            entries: BTreeMap::new(),
        }
    }

    /// Table seeded with the problem's reference scores.
    pub fn for_problem(problem: &Problem) -> Self {
        let mut table = BestTable::new(problem.direction);
        for t in &problem.instances {
            if let Some(reference) = &t.reference_score {
                table.entries.insert(
                    t.id,
                    BestEntry {
                        score: reference.clone(),
                        submission_id: None,
                    },
                );
            }
        }
        table
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn get(&self, instance_id: u32) -> Option<&Score> {
        self.entries.get(&instance_id).map(|e| &e.score)
    }

    pub fn entry(&self, instance_id: u32) -> Option<&BestEntry> {
        self.entries.get(&instance_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &BestEntry)> {
        self.entries.iter().map(|(id, e)| (*id, e))
    }

    /// Would `candidate` strictly improve on the current best?
    pub fn improves(&self, instance_id: u32, candidate: &Score) -> bool {
        match (self.direction, self.get(instance_id)) {
            (Direction::None, _) => false,
            (_, None) => true,
            (Direction::Maximize, Some(b)) => candidate > b,
            (Direction::Minimize, Some(b)) => candidate < b,
        }
    }

    /// Records an accepted outcome. Returns true when it strictly improved
    /// the best; ties keep the incumbent.
    pub fn update_best(&mut self, outcome: &InstanceOutcome, submission_id: &str) -> bool {
        if !outcome.status.is_accepted() || !self.improves(outcome.instance_id, &outcome.score) {
            return false;
        }
        self.set(outcome.instance_id, outcome.score.clone(), Some(submission_id.to_string()));
        true
    }

    /// Unconditional overwrite, used when replaying recorded updates.
    pub fn set(&mut self, instance_id: u32, score: Score, submission_id: Option<String>) {
        self.entries.insert(
            instance_id,
            BestEntry {
                score,
                submission_id,
            },
        );
    }
}

/// Aggregates one submission's outcomes under the problem's policy.
pub fn aggregate(
    problem: &Problem,
    submission_id: &str,
    outcomes: Vec<InstanceOutcome>,
    best: &BestTable,
) -> Result<AggregateResult, ScoringError> {
    let statuses: Vec<_> = outcomes.iter().map(|o| o.status).collect();
    let status = if statuses.is_empty() {
        ExecutionStatus::CompileError
    } else {
        aggregate_status(&statuses, problem.policy.re_priority)
    };
    let score = aggregate_score(&problem.policy, problem.instances.len(), &outcomes, best)?;
    Ok(AggregateResult {
        submission_id: submission_id.to_string(),
        status,
        score,
        per_instance: outcomes,
    })
}

pub fn aggregate_score(
    policy: &ScoringPolicy,
    instance_count: usize,
    outcomes: &[InstanceOutcome],
    best: &BestTable,
) -> Result<Score, ScoringError> {
    match policy.kind {
        PolicyKind::BinaryIcpc | PolicyKind::IoiSum | PolicyKind::IoiTimePenalty => {
            Ok(aggregate_score_sum(outcomes))
        }
        PolicyKind::OptimizationNormalized => {
            aggregate_score_normalized(outcomes, instance_count, best)
        }
    }
}

/// A judged submission as seen by the leaderboard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Standing<'a> {
    pub user_id: &'a str,
    pub submission_id: &'a str,
    pub submitted_at: u64,
    pub score: &'a Score,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: u32,
    pub user_id: String,
    pub score: Score,
    pub submission_id: String,
    pub submitted_at: u64,
}

fn ranks_before(a: &Standing<'_>, b: &Standing<'_>) -> std::cmp::Ordering {
    b.score
        .cmp(a.score)
        .then(a.submitted_at.cmp(&b.submitted_at))
        .then(a.submission_id.cmp(b.submission_id))
}

/// One row per user holding their best score, ordered by score descending,
/// then earlier submission time, then submission id. Ranks are 1-based.
pub fn build_leaderboard(standings: &[Standing<'_>]) -> Vec<LeaderboardEntry> {
    let mut best_per_user: BTreeMap<&str, &Standing<'_>> = BTreeMap::new();
    for s in standings {
        match best_per_user.get(s.user_id) {
            Some(current) if ranks_before(current, s).is_le() => {}
            _ => {
                best_per_user.insert(s.user_id, s);
            }
        }
    }
    let mut rows: Vec<&Standing<'_>> = best_per_user.into_values().collect();
    rows.sort_by(|a, b| ranks_before(a, b));
    rows.into_iter()
        .enumerate()
        .map(|(i, s)| LeaderboardEntry {
            rank: i as u32 + 1,
            user_id: s.user_id.to_string(),
            score: s.score.clone(),
            submission_id: s.submission_id.to_string(),
            submitted_at: s.submitted_at,
        })
        .collect()
}
