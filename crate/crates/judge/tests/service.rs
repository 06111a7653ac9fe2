mod common;

use std::time::Duration;

use common::crash::http;
use common::{facility_subset, fixture, package, source_payload};
use judge::service::journal::read_records;
use judge::service::state::State;
use judge::service::{Service, ServiceConfig, ServiceError};
use judge_core::model::Bytes;
use judge_core::{ExecutionStatus, Payload, Score};

fn start(dir: &std::path::Path, workers: usize) -> Service {
    let mut config = ServiceConfig::new(dir);
    config.workers = workers;
    Service::start(config).unwrap()
}

fn wait(service: &Service) {
    assert!(service.wait_idle(Duration::from_secs(120)), "service did not drain");
}

fn replayed(service: &Service) -> String {
    State::from_records(&service.records().unwrap())
        .unwrap()
        .canonical_json()
}

#[test]
fn submission_lifecycle_and_errors() {
    let _guard = common::serial();
    let dir = tempfile::tempdir().unwrap();
    {
        let paused = start(dir.path(), 0);
        assert!(paused.problems().is_empty());
        paused.register_package(&package("echo")).unwrap();
        let id = paused
            .submit("echo", "alice", source_payload("c", &fixture("echo.c")))
            .unwrap();
        assert_eq!(id, "s000001");
        let view = paused.submission(&id).unwrap();
        assert_eq!(view.state, "queued");
        assert_eq!(view.status, Some(ExecutionStatus::Queued));

        assert!(matches!(
            paused.submit("nope", "alice", source_payload("c", &fixture("echo.c"))),
            Err(ServiceError::UnknownProblem(_))
        ));
        let huge = Payload::Source {
            language_id: "c".into(),
            files: vec![judge_core::model::SourceFile {
                name: "main.c".into(),
                content: Bytes(vec![b' '; 10 << 20]),
            }],
        };
        assert!(matches!(
            paused.submit("echo", "alice", huge),
            Err(ServiceError::PayloadTooLarge { .. })
        ));
        assert!(matches!(
            paused.submission("s999999"),
            Err(ServiceError::UnknownSubmission(_))
        ));
        paused.shutdown();
    }
    // The queued submission survives a restart and is judged by the new workers.
    let service = start(dir.path(), 1);
    wait(&service);
    let view = service.submission("s000001").unwrap();
    assert_eq!(view.state, "done");
    assert_eq!(view.status, Some(ExecutionStatus::Accepted));
    let statuses: Vec<_> = view.per_instance.unwrap().iter().map(|o| o.instance_id).collect();
    assert_eq!(statuses, [1, 2, 3]);
    assert_eq!(service.leaderboard("echo").unwrap()[0].user_id, "alice");
    assert_eq!(replayed(&service), service.state().canonical_json());
    service.shutdown();
}

#[test]
fn two_workers_drain_three_submissions() {
    let _guard = common::serial();
    let dir = tempfile::tempdir().unwrap();
    let service = start(dir.path(), 2);
    service.register_package(&package("echo")).unwrap();
    let mut ids = Vec::new();
    for (user, file) in [("a", "echo.c"), ("b", "wrong.c"), ("c", "crash.c")] {
        ids.push(service.submit("echo", user, source_payload("c", &fixture(file))).unwrap());
    }
    wait(&service);
    let statuses: Vec<_> = ids
        .iter()
        .map(|id| service.submission(id).unwrap().status.unwrap())
        .collect();
    assert_eq!(
        statuses,
        [ExecutionStatus::Accepted, ExecutionStatus::WrongAnswer, ExecutionStatus::RuntimeError]
    );
    for id in &ids {
        let order: Vec<_> = service
            .submission(id)
            .unwrap()
            .per_instance
            .unwrap()
            .iter()
            .map(|o| o.instance_id)
            .collect();
        assert_eq!(order, [1, 2, 3]);
    }
    assert_eq!(replayed(&service), service.state().canonical_json());
    service.shutdown();
}

#[test]
fn better_submission_lowers_earlier_scores() {
    let _guard = common::serial();
    let work = tempfile::tempdir().unwrap();
    let pkg = work.path().join("pkg");
    facility_subset(&pkg, &[1, 2, 3], false);
    let service = start(&work.path().join("data"), 1);
    service.register_package(&pkg).unwrap();

    let first = service
        .submit("facility", "ana", source_payload("c", &fixture("corner.c")))
        .unwrap();
    wait(&service);
    assert_eq!(service.submission(&first).unwrap().score, Some(Score::from_int(100)));

    let second = service
        .submit("facility", "ben", source_payload("c", &fixture("greedy.c")))
        .unwrap();
    wait(&service);
    let board = service.leaderboard("facility").unwrap();
    assert_eq!(board[0].user_id, "ben");
    assert_eq!(board[0].score, 100);
    assert_eq!(board[1].user_id, "ana");

    // Oracle: the normalized score from the two submissions' objectives.
    let objectives = |id: &str| -> Vec<Score> {
        service
            .submission(id)
            .unwrap()
            .per_instance
            .unwrap()
            .into_iter()
            .map(|o| o.score.unwrap())
            .collect()
    };
    let (a, b) = (objectives(&first), objectives(&second));
    let mut expected = Score::zero();
    for (va, vb) in a.iter().zip(&b) {
        expected = expected + vb.clone().min(va.clone()).checked_div(va).unwrap();
    }
    expected = expected * Score::ratio(100, 3);
    assert!(expected < 100);
    assert_eq!(board[1].score, expected);
    assert_eq!(service.submission(&first).unwrap().score, Some(expected));
    assert_eq!(replayed(&service), service.state().canonical_json());
    service.shutdown();
}

#[test]
fn infrastructure_faults_retry_then_end_as_internal_error() {
    let _guard = common::serial();
    let work = tempfile::tempdir().unwrap();
    let pkg = work.path().join("pkg");
    common::write_package(
        &pkg,
        &serde_json::json!({
            "id": "broken",
            "kind": "decision",
            "policy": {"kind": "binary_icpc"},
            "checker": {"kind": "external", "language_id": "c", "source": "checker.c"}
        }),
        &[("1\n", None)],
    );
    std::fs::copy(fixture("crash.c"), pkg.join("checker.c")).unwrap();
    let service = start(&work.path().join("data"), 1);
    service.register_package(&pkg).unwrap();
    let id = service
        .submit("broken", "zoe", source_payload("c", &fixture("echo.c")))
        .unwrap();
    wait(&service);
    let view = service.submission(&id).unwrap();
    assert_eq!(view.state, "done");
    assert_eq!(view.status, None);
    assert_eq!(view.attempts, 4);
    assert!(view.error.unwrap().contains("4 times"));
    assert!(service.leaderboard("broken").unwrap().is_empty());
    service.shutdown();
}

#[test]
fn snapshot_and_journal_tail_restore_the_same_state() {
    let _guard = common::serial();
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig::new(dir.path());
    config.workers = 1;
    config.snapshot_every = 3;
    let service = Service::start(config.clone()).unwrap();
    service.register_package(&package("echo")).unwrap();
    for user in ["a", "b"] {
        service.submit("echo", user, source_payload("c", &fixture("echo.c"))).unwrap();
    }
    wait(&service);
    let before = service.state().canonical_json();
    service.shutdown();
    assert!(dir.path().join("snapshot.json").exists());
    let restored = Service::start(config).unwrap();
    assert_eq!(restored.state().canonical_json(), before);
    let records = read_records(&restored.journal_path()).unwrap();
    assert_eq!(State::from_records(&records).unwrap().canonical_json(), before);
    restored.shutdown();
}

#[test]
fn http_api() {
    let _guard = common::serial();
    let dir = tempfile::tempdir().unwrap();
    let server = common::crash::Server::start(dir.path(), 1, None);
    let base = server.base.clone();
    assert_eq!(server.get("/api/problems"), (200, "[]".to_string()));

    let load = serde_json::json!({"path": package("echo")});
    let url = format!("{base}/api/problems");
    assert_eq!(http("POST", &url, Some(&load), false).0, 401);
    let (code, body) = http("POST", &url, Some(&load), true);
    assert_eq!(code, 201, "{body}");
    assert_eq!(http("POST", &url, Some(&load), true).0, 200);
    let missing = serde_json::json!({"path": "/nonexistent"});
    assert_eq!(http("POST", &url, Some(&missing), true).0, 404);

    let (code, body) = server.get("/api/problems/echo");
    assert_eq!(code, 200);
    let problem: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(problem["instance_count"], 3);
    assert!(problem.get("instances").is_none(), "inputs must not be served");
    assert_eq!(server.get("/api/problems/nope").0, 404);
    assert_eq!(server.get("/api/problems/nope/leaderboard").0, 404);
    assert_eq!(server.get("/api/submissions/s000042").0, 404);

    let id = server.submit("echo", "alice", &fixture("echo.c"));
    let big = serde_json::json!({
        "user_id": "alice", "language_id": "c",
        "source_b64": base64_encode(&vec![b' '; 10 << 20]),
    });
    let submit_url = format!("{base}/api/problems/echo/submissions");
    assert_eq!(http("POST", &submit_url, Some(&big), false).0, 413);
    let both = serde_json::json!({"user_id": "a", "language_id": "c", "source_b64": "", "binary_b64": ""});
    assert_eq!(http("POST", &submit_url, Some(&both), false).0, 400);

    let deadline = std::time::Instant::now() + Duration::from_secs(60);
    while server.submission_state(&id) != "done" {
        assert!(std::time::Instant::now() < deadline);
        std::thread::sleep(Duration::from_millis(20));
    }
    let (_, view) = server.get(&format!("/api/submissions/{id}"));
    let view: serde_json::Value = serde_json::from_str(&view).unwrap();
    assert_eq!(view["status"], "ACC");
    let (_, board) = server.get("/api/problems/echo/leaderboard");
    let board: serde_json::Value = serde_json::from_str(&board).unwrap();
    assert_eq!(board[0]["user_id"], "alice");
    let (code, csv) = server.get("/api/problems/echo/replay.csv");
    assert_eq!(code, 200);
    assert_eq!(csv, "day,best_ratio,correct,incorrect,users_total,users_new\n0,,1,0,1,1\n");
    assert_eq!(server.get("/ui").0, 404);
    server.kill();
}

fn base64_encode(data: &[u8]) -> String {
    use base64::Engine as _;
    base64::engine::general_purpose::STANDARD.encode(data)
}
