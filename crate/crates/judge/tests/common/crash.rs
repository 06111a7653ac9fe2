//! Kill-and-restart scenario against the `judge serve` binary, compared with
//! an uninterrupted single-worker run.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use base64::Engine as _;
use judge::service::journal::read_records;
use judge::service::state::State;
use judge::service::{Service, ServiceConfig, JOURNAL_FILE};

use super::{facility_subset, fixture, masked, source_payload};

pub const ADMIN: &str = "crash-test-token";

/// (user, fixture) in submission order.
pub const SUBMISSIONS: [(&str, &str); 4] = [
    ("ana", "corner.c"),
    ("ben", "greedy.c"),
    ("cai", "offgrid.c"),
    ("dee", "greedy.c"),
];

pub fn http(method: &str, url: &str, body: Option<&serde_json::Value>, admin: bool) -> (u16, String) {
    let mut req = ureq::request(method, url).timeout(Duration::from_secs(30));
    if admin {
        req = req.set("X-Judge-Admin", ADMIN);
    }
    let result = match body {
        Some(b) => req.set("Content-Type", "application/json").send_string(&b.to_string()),
        None => req.call(),
    };
    match result {
        Ok(r) => (r.status(), r.into_string().unwrap()),
        Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
        Err(e) => panic!("{method} {url}: {e}"),
    }
}

pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(data: &Path, workers: usize, load: Option<&Path>) -> Server {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_judge"));
        cmd.args(["serve", "--port", "0", "--workers", &workers.to_string(), "--data"])
            .arg(data)
            .env("JUDGE_ADMIN_TOKEN", ADMIN)
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        if let Some(dir) = load {
            cmd.arg("--load").arg(dir);
        }
        let mut child = cmd.spawn().expect("spawn judge serve");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let port: u16 = line
            .trim()
            .rsplit(' ')
            .next()
            .and_then(|p| p.parse().ok())
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"));
        Server {
            child,
            base: format!("http://127.0.0.1:{port}"),
        }
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        http("GET", &format!("{}{path}", self.base), None, false)
    }

    pub fn submit(&self, problem: &str, user: &str, source: &Path) -> String {
        let body = serde_json::json!({
            "user_id": user,
            "language_id": "c",
            "source_b64": base64::engine::general_purpose::STANDARD.encode(std::fs::read(source).unwrap()),
        });
        let (code, text) = http(
            "POST",
            &format!("{}/api/problems/{problem}/submissions", self.base),
            Some(&body),
            false,
        );
        assert_eq!(code, 202, "{text}");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["submission_id"].as_str().unwrap().to_string()
    }

    pub fn submission_state(&self, id: &str) -> String {
        let (_, text) = self.get(&format!("/api/submissions/{id}"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["state"].as_str().unwrap_or("").to_string()
    }

    pub fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct CrashReport {
    /// Canonical state replayed from the recovered server's journal.
    pub recovered: String,
    /// Canonical state of the uninterrupted single-worker run.
    pub oracle: String,
    /// Submission observed running when the server was killed.
    pub interrupted: String,
    /// Attempts the interrupted submission needed in the end.
    pub attempts: u64,
}

/// Canonical state with best-table credit removed. Equal objectives keep
/// whichever submission finished first, and finish order across two workers
/// is not fixed, so credit is checked separately by `check_credit`.
fn canonical_from_journal(data: &Path) -> String {
    let records = read_records(&data.join(JOURNAL_FILE)).unwrap();
    let state = State::from_records(&records).unwrap();
    check_credit(&state);
    let mut v: serde_json::Value = serde_json::from_str(&state.canonical_json()).unwrap();
    for problem in v["problems"].as_array_mut().unwrap() {
        for entry in problem["best"]["entries"].as_object_mut().unwrap().values_mut() {
            entry.as_object_mut().unwrap().remove("submission_id");
        }
    }
    masked(&serde_json::to_string_pretty(&v).unwrap())
}

/// Every best entry names an accepted submission that reached that value.
fn check_credit(state: &State) {
    for problem in state.problems.values() {
        for (instance, entry) in problem.best.entries() {
            let Some(holder) = &entry.submission_id else { continue };
            let result = state.record(holder).and_then(|r| r.result.as_ref()).expect("credited result");
            let reached = result
                .per_instance
                .iter()
                .any(|o| o.instance_id == instance && o.status.is_accepted() && o.score == entry.score);
            assert!(reached, "{holder} credited for instance {instance}");
        }
    }
}

pub fn run(work: &Path) -> CrashReport {
    let pkg = work.join("facility-large");
    facility_subset(&pkg, &[9, 10], false);
    let data = work.join("crashed");

    let server = Server::start(&data, 2, Some(&pkg));
    let ids: Vec<String> = SUBMISSIONS
        .iter()
        .map(|(user, file)| server.submit("facility", user, &fixture(file)))
        .collect();
    // Wait until a greedy run is mid-evaluation, then kill the server.
    let target = &ids[1];
    let deadline = Instant::now() + Duration::from_secs(60);
    while server.submission_state(target) != "running" {
        assert!(Instant::now() < deadline, "{target} never started");
        std::thread::sleep(Duration::from_millis(10));
    }
    std::thread::sleep(Duration::from_millis(600));
    assert_eq!(server.submission_state(target), "running");
    server.kill();

    let server = Server::start(&data, 2, None);
    let deadline = Instant::now() + Duration::from_secs(120);
    for id in &ids {
        while server.submission_state(id) != "done" {
            assert!(Instant::now() < deadline, "{id} not done after restart");
            std::thread::sleep(Duration::from_millis(50));
        }
    }
    let (_, view) = server.get(&format!("/api/submissions/{target}"));
    let attempts = serde_json::from_str::<serde_json::Value>(&view).unwrap()["attempts"]
        .as_u64()
        .unwrap();
    server.kill();
    let recovered = canonical_from_journal(&data);

    let oracle_dir = work.join("uninterrupted");
    let mut config = ServiceConfig::new(&oracle_dir);
    config.workers = 1;
    let service = Service::start(config).unwrap();
    service.register_package(&pkg).unwrap();
    for (user, file) in SUBMISSIONS {
        service
            .submit("facility", user, source_payload("c", &fixture(file)))
            .unwrap();
    }
    assert!(service.wait_idle(Duration::from_secs(120)));
    service.shutdown();
    let oracle = canonical_from_journal(&oracle_dir);

    CrashReport {
        recovered,
        oracle,
        interrupted: target.clone(),
        attempts,
    }
}
