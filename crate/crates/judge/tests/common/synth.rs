//! Synthetic contest journals for a minimize problem, with the expected
//! daily series computed directly from the generated submissions.

use judge::replay::DAY_MS;
use judge::service::journal::{Event, Finished, Record};
use judge_core::scoring::BestTable;
use judge_core::{ExecutionStatus, InstanceOutcome, Problem, Score, Submission};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const START: u64 = 1_700_000_000_000;
pub const INSTANCES: u32 = 3;

#[derive(Debug, Clone)]
pub struct Planned {
    pub id: String,
    pub user: String,
    pub at: u64,
    /// `None` for a compile error.
    pub status: Option<ExecutionStatus>,
    pub objectives: Vec<u64>,
}

pub fn problem() -> Problem {
    let mut p: Problem = serde_json::from_value(serde_json::json!({
        "id": "synthetic",
        "kind": "optimization",
        "direction": "minimize",
        "instances": [],
        "policy": {"kind": "optimization_normalized"},
        "limits": {"compile_time": 10000, "binary_size": 1000000, "time_limit": 1000,
                   "memory_limit": 100000000, "output_limit": 100000}
    }))
    .unwrap();
    for id in 1..=INSTANCES {
        p.instances.push(
            serde_json::from_value(serde_json::json!({
                "id": id, "input": "", "params": p.limits.default_params(), "max_points": "0"
            }))
            .unwrap(),
        );
    }
    p
}

fn outcome(id: u32, status: ExecutionStatus, v: u64) -> InstanceOutcome {
    InstanceOutcome {
        instance_id: id,
        status,
        score: if status.is_accepted() { Score::from_int(v as i64) } else { Score::zero() },
        stats: None,
        detail: None,
    }
}

/// Random plan of `count` submissions from a dozen users over two weeks.
/// Accepted objectives drift downwards so the best keeps improving.
pub fn plan(seed: u64, count: usize) -> Vec<Planned> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times: Vec<u64> = (0..count).map(|_| rng.gen_range(0..14 * DAY_MS)).collect();
    times.sort();
    times[0] = 0;
    let failures = [
        ExecutionStatus::WrongAnswer,
        ExecutionStatus::TimeLimitExceeded,
        ExecutionStatus::MemoryLimitExceeded,
        ExecutionStatus::RuntimeError,
    ];
    times
        .into_iter()
        .enumerate()
        .map(|(i, offset)| {
            let progress = i as f64 / count as f64;
            let status = match rng.gen_range(0..10) {
                0..=5 => Some(ExecutionStatus::Accepted),
                6 => None,
                _ => Some(failures[rng.gen_range(0..failures.len())]),
            };
            let objectives = (0..INSTANCES)
                .map(|_| {
                    let spread = 1.0 + 5.0 * (1.0 - progress) * rng.gen::<f64>();
                    (100.0 * spread) as u64 + rng.gen_range(0..20)
                })
                .collect();
            Planned {
                id: format!("s{:06}", i + 1),
                user: format!("user{}", rng.gen_range(0..12)),
                at: START + offset,
                status,
                objectives,
            }
        })
        .collect()
}

/// Journal for `plan`. Some submissions are retried, and the superseded
/// attempt still reports a result that must be ignored.
pub fn journal(plan: &[Planned]) -> Vec<Record> {
    let problem = problem();
    let mut best = BestTable::for_problem(&problem);
    let mut events: Vec<(u64, Event)> = vec![(START, Event::ProblemRegistered { problem: problem.clone() })];
    for (i, p) in plan.iter().enumerate() {
        events.push((
            p.at,
            Event::SubmissionReceived {
                submission: Submission {
                    id: p.id.clone(),
                    problem_id: problem.id.clone(),
                    user_id: p.user.clone(),
                    payload: judge_core::Payload::StaticBinary(vec![0x7f].into()),
                    submitted_at: p.at,
                },
            },
        ));
        let retried = i % 7 == 3;
        let start = |attempt| Event::SubmissionStarted {
            submission_id: p.id.clone(),
            attempt,
            worker: 0,
        };
        events.push((p.at, start(1)));
        let mut attempt = 1;
        if retried {
            events.push((
                p.at,
                Event::SubmissionRequeued {
                    submission_id: p.id.clone(),
                    attempt: 1,
                    reason: "claim expired".into(),
                },
            ));
            events.push((p.at, start(2)));
            attempt = 2;
        }
        let result = match p.status {
            None => Finished::CompileError { log: "error".into() },
            Some(status) => {
                let fail_at = if status.is_accepted() { INSTANCES } else { (i as u32) % INSTANCES };
                Finished::Evaluated {
                    per_instance: (0..INSTANCES)
                        .map(|k| {
                            let s = if k < fail_at { ExecutionStatus::Accepted } else { status };
                            outcome(k + 1, s, p.objectives[k as usize])
                        })
                        .collect(),
                }
            }
        };
        if retried {
            // The superseded attempt finishes late, claiming a perfect run.
            events.push((
                p.at,
                Event::SubmissionFinished {
                    submission_id: p.id.clone(),
                    attempt: 1,
                    result: Finished::Evaluated {
                        per_instance: (1..=INSTANCES).map(|k| outcome(k, ExecutionStatus::Accepted, 1)).collect(),
                    },
                },
            ));
        }
        events.push((
            p.at,
            Event::SubmissionFinished {
                submission_id: p.id.clone(),
                attempt,
                result: result.clone(),
            },
        ));
        if let Finished::Evaluated { per_instance } = &result {
            for o in per_instance {
                if best.update_best(o, &p.id) {
                    events.push((
                        p.at,
                        Event::BestUpdated {
                            problem_id: problem.id.clone(),
                            instance_id: o.instance_id,
                            score: o.score.clone(),
                            submission_id: p.id.clone(),
                        },
                    ));
                }
            }
        }
    }
    events
        .into_iter()
        .enumerate()
        .map(|(i, (at, event))| Record {
            seq: i as u64 + 1,
            at,
            event,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedRow {
    pub day: u64,
    pub best_ratio: Option<Score>,
    pub correct: u64,
    pub incorrect: u64,
}

/// Daily series computed straight from the plan.
pub fn expected(plan: &[Planned]) -> Vec<ExpectedRow> {
    let day = |p: &Planned| (p.at - START) / DAY_MS;
    let last = plan.iter().map(day).max().unwrap_or(0);
    let total = |p: &Planned| p.objectives.iter().sum::<u64>();
    let accepted = |p: &&Planned| p.status == Some(ExecutionStatus::Accepted);
    let winner = plan.iter().filter(accepted).map(total).min();
    (0..=last)
        .map(|d| {
            let today: Vec<&Planned> = plan.iter().filter(|p| day(p) == d).collect();
            let so_far = plan.iter().filter(|p| day(p) <= d).filter(accepted).map(total).min();
            ExpectedRow {
                day: d,
                best_ratio: so_far.zip(winner).map(|(b, w)| Score::ratio(b as i64, w as i64)),
                correct: today.iter().filter(|p| accepted(p)).count() as u64,
                incorrect: today
                    .iter()
                    .filter(|p| {
                        matches!(
                            p.status,
                            Some(
                                ExecutionStatus::WrongAnswer
                                    | ExecutionStatus::TimeLimitExceeded
                                    | ExecutionStatus::MemoryLimitExceeded
                                    | ExecutionStatus::RuntimeError
                            )
                        )
                    })
                    .count() as u64,
            }
        })
        .collect()
}
