mod common;

use common::synth;
use judge::replay::{replay, to_csv, ReplayError, CSV_HEADER, DAY_MS};
use judge::service::journal::{Event, Finished, Record};
use judge_core::{ExecutionStatus, InstanceOutcome, Score, Submission};

#[test]
fn synthetic_contest_matches_direct_computation() {
    for seed in 0..20 {
        let plan = synth::plan(seed, 50);
        let series = replay(&synth::journal(&plan), None).unwrap();
        let expected = synth::expected(&plan);
        assert_eq!(series.rows.len(), expected.len(), "seed {seed}");
        for (row, want) in series.rows.iter().zip(&expected) {
            assert_eq!(row.day, want.day);
            assert_eq!(row.best_ratio, want.best_ratio, "seed {seed} day {}", row.day);
            assert_eq!((row.correct, row.incorrect), (want.correct, want.incorrect), "seed {seed} day {}", row.day);
        }
        let ratios: Vec<&Score> = series.rows.iter().filter_map(|r| r.best_ratio.as_ref()).collect();
        assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: not nonincreasing");
        assert_eq!(*ratios.last().unwrap(), &Score::from_int(1));
        assert!(*ratios[0] > Score::from_int(1), "seed {seed}: the contest should start above the final best");
    }
}

#[test]
fn users_are_counted_on_their_first_day() {
    let plan = synth::plan(7, 50);
    let series = replay(&synth::journal(&plan), None).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for row in &series.rows {
        let before = seen.len() as u64;
        for p in plan.iter().filter(|p| (p.at - synth::START) / DAY_MS == row.day) {
            seen.insert(p.user.clone());
        }
        assert_eq!(row.users_new, seen.len() as u64 - before);
        assert_eq!(row.users_total, seen.len() as u64);
    }
}

fn log(entries: &[(&str, u64, Option<ExecutionStatus>, i64)]) -> Vec<Record> {
    let problem = synth::problem();
    let mut events = vec![Event::ProblemRegistered { problem: problem.clone() }];
    for (i, (user, at, status, objective)) in entries.iter().enumerate() {
        let id = format!("s{}", i + 1);
        events.push(Event::SubmissionReceived {
            submission: Submission {
                id: id.clone(),
                problem_id: problem.id.clone(),
                user_id: user.to_string(),
                payload: judge_core::Payload::StaticBinary(vec![1].into()),
                submitted_at: *at,
            },
        });
        events.push(Event::SubmissionStarted {
            submission_id: id.clone(),
            attempt: 1,
            worker: 0,
        });
        let result = match status {
            None => Finished::CompileError { log: String::new() },
            Some(s) => Finished::Evaluated {
                per_instance: (1..=synth::INSTANCES)
                    .map(|k| InstanceOutcome {
                        instance_id: k,
                        status: *s,
                        score: if k == 1 && s.is_accepted() { Score::from_int(*objective) } else { Score::zero() },
                        stats: None,
                        detail: None,
                    })
                    .collect(),
            },
        };
        events.push(Event::SubmissionFinished {
            submission_id: id,
            attempt: 1,
            result,
        });
    }
    events
        .into_iter()
        .enumerate()
        .map(|(i, event)| Record {
            seq: i as u64 + 1,
            at: 0,
            event,
        })
        .collect()
}

const ACC: Option<ExecutionStatus> = Some(ExecutionStatus::Accepted);

#[test]
fn single_winner_gives_constant_ratio() {
    let series = replay(&log(&[("a", 0, ACC, 40)]), None).unwrap();
    assert_eq!(series.rows.len(), 1);
    assert_eq!(series.rows[0].best_ratio, Some(Score::from_int(1)));
}

#[test]
fn three_improving_submissions() {
    // Objectives 60, 30, 20 on days 0, 1, 2: ratios 3, 1.5, 1.
    let day = DAY_MS;
    let series = replay(
        &log(&[("a", 0, ACC, 60), ("b", day, ACC, 30), ("a", 2 * day + 5, ACC, 20)]),
        None,
    )
    .unwrap();
    let ratios: Vec<_> = series.rows.iter().map(|r| r.best_ratio.clone().unwrap()).collect();
    assert_eq!(ratios, [Score::from_int(3), Score::ratio(3, 2), Score::from_int(1)]);
    assert_eq!(
        to_csv(&series),
        format!("{CSV_HEADER}\n0,3.000000,1,0,1,1\n1,1.500000,1,0,2,1\n2,1.000000,1,0,2,0\n")
    );
}

#[test]
fn wrong_answer_and_accepted_on_one_day() {
    let series = replay(
        &log(&[("a", 0, Some(ExecutionStatus::WrongAnswer), 0), ("a", 10, ACC, 5), ("b", 20, None, 0)]),
        None,
    )
    .unwrap();
    assert_eq!((series.rows[0].correct, series.rows[0].incorrect), (1, 1));
    assert_eq!(series.rows[0].active_users, 2);
}

#[test]
fn output_limit_counts_as_incorrect() {
    let series = replay(&log(&[("a", 0, Some(ExecutionStatus::OutputLimitExceeded), 0)]), None).unwrap();
    assert_eq!(series.rows[0].incorrect, 1);
    assert_eq!(series.rows[0].best_ratio, None);
}

#[test]
fn malformed_logs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    std::fs::write(&path, "{\"seq\":1}\nnot json\n").unwrap();
    assert!(matches!(
        judge::replay::replay_file(&path, None),
        Err(ReplayError::MalformedLog(_))
    ));
    // A submission for a problem never registered.
    let mut records = log(&[("a", 0, ACC, 1)]);
    records.remove(0);
    assert!(matches!(replay(&records, None), Err(ReplayError::MalformedLog(_))));
    assert!(matches!(replay(&[], None), Err(ReplayError::NoProblem)));
}
