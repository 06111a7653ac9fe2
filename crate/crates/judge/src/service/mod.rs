//! The judge service: accepts submissions, queues them, runs the pipeline on
//! worker threads and keeps every state change in an append-only journal.

pub mod config;
pub mod http;
pub mod journal;
pub mod state;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock, RwLockReadGuard};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use judge_core::scoring::{aggregate, LeaderboardEntry};
use judge_core::{Payload, Problem, Submission};
use log::{info, warn};

pub use config::ServiceConfig;
use journal::{Event, Finished, Journal, JournalError, Record};
use state::{ProblemView, State, StateError, SubmissionView};

use crate::package::{load_package, PackageError};
use crate::pipeline::{Judge, PreparedProblem, Verdict};

pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("unknown submission `{0}`")]
    UnknownSubmission(String),
    #[error("payload of {size} bytes exceeds the {cap} byte cap")]
    PayloadTooLarge { size: usize, cap: usize },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Package(#[from] PackageError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("{0}")]
    Internal(String),
}

impl From<io::Error> for ServiceError {
    fn from(e: io::Error) -> Self {
        ServiceError::Journal(e.into())
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

struct Inner {
    config: ServiceConfig,
    judge: Judge,
    state: RwLock<State>,
    journal: Mutex<Journal>,
    prepared: RwLock<BTreeMap<String, Arc<PreparedProblem>>>,
    since_snapshot: Mutex<u64>,
    wake: Condvar,
    wake_lock: Mutex<()>,
    stopping: AtomicBool,
}

/// A running service. Dropping it tells the workers to stop but does not
/// wait for them; [`Service::shutdown`] does.
pub struct Service {
    inner: Arc<Inner>,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Registration {
    Registered,
    AlreadyPresent,
}

impl Service {
    /// Rebuilds state from the data directory and starts the workers.
    pub fn start(config: ServiceConfig) -> Result<Service, ServiceError> {
        fs::create_dir_all(&config.data_dir)?;
        let judge = Judge::new(config.sandbox.clone(), config.registry.clone())
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let (journal, records) = Journal::open(&config.data_dir.join(JOURNAL_FILE))?;
        let mut state = load_snapshot(&config.data_dir.join(SNAPSHOT_FILE))?;
        let from = state.last_seq;
        for record in records.iter().filter(|r| r.seq > from) {
            state.apply_record(record).map_err(|e| JournalError::Malformed {
                line: record.seq as usize,
                message: e.to_string(),
            })?;
        }
        state.refresh();
        info!(
            "recovered {} problems and {} submissions from {}",
            state.problems.len(),
            state.records.len(),
            config.data_dir.display()
        );

        let mut prepared = BTreeMap::new();
        for ps in state.problems.values() {
            match judge.prepare(ps.problem.clone()) {
                Ok(p) => {
                    prepared.insert(ps.problem.id.clone(), Arc::new(p));
                }
                Err(e) => warn!("problem {}: checker unavailable: {e}", ps.problem.id),
            }
        }

        let inner = Arc::new(Inner {
            config,
            judge,
            state: RwLock::new(state),
            journal: Mutex::new(journal),
            prepared: RwLock::new(prepared),
            since_snapshot: Mutex::new(0),
            wake: Condvar::new(),
            wake_lock: Mutex::new(()),
            stopping: AtomicBool::new(false),
        });
        inner.recover_interrupted()?;

        let mut threads = Vec::new();
        for worker in 0..inner.config.workers {
            let inner = inner.clone();
            threads.push(
                std::thread::Builder::new()
                    .name(format!("judge-worker-{worker}"))
                    .spawn(move || inner.worker_loop(worker))?,
            );
        }
        let reaper = inner.clone();
        threads.push(
            std::thread::Builder::new()
                .name("judge-reaper".into())
                .spawn(move || reaper.reaper_loop())?,
        );
        Ok(Service {
            inner,
            threads: Mutex::new(threads),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// Loads a package from a server-side directory and registers it.
    pub fn register_package(&self, dir: &Path) -> Result<(String, Registration), ServiceError> {
        let problem = load_package(dir)?;
        let id = problem.id.clone();
        self.register_problem(problem).map(|r| (id, r))
    }

    pub fn register_problem(&self, problem: Problem) -> Result<Registration, ServiceError> {
        if let Some(existing) = self.inner.state.read().unwrap().problem(&problem.id) {
            return if existing.problem == problem {
                Ok(Registration::AlreadyPresent)
            } else {
                Err(ServiceError::Conflict(format!(
                    "problem `{}` is already registered with different contents",
                    problem.id
                )))
            };
        }
        let prepared = self
            .inner
            .judge
            .prepare(problem.clone())
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let id = problem.id.clone();
        let mut state = self.inner.state.write().unwrap();
        if state.problem(&id).is_some() {
            return Err(ServiceError::Conflict(format!("problem `{id}` is already registered")));
        }
        self.inner
            .prepared
            .write()
            .unwrap()
            .insert(id, Arc::new(prepared));
        self.inner
            .commit(&mut state, vec![Event::ProblemRegistered { problem }])?;
        Ok(Registration::Registered)
    }

    /// Queues a submission and returns its id at once.
    pub fn submit(&self, problem_id: &str, user_id: &str, payload: Payload) -> Result<String, ServiceError> {
        let size = payload.size();
        let cap = self.inner.config.payload_cap;
        if size > cap {
            return Err(ServiceError::PayloadTooLarge { size, cap });
        }
        if user_id.is_empty() || user_id.len() > 64 || user_id.chars().any(char::is_control) {
            return Err(ServiceError::BadRequest("user_id must be 1 to 64 printable characters".into()));
        }
        if payload.is_empty() {
            return Err(ServiceError::BadRequest("empty payload".into()));
        }
        if let Some(language) = payload.language_id() {
            if self.inner.judge.registry.get(language).is_none() {
                return Err(ServiceError::BadRequest(format!("unknown language `{language}`")));
            }
        }
        let mut state = self.inner.state.write().unwrap();
        if state.problem(problem_id).is_none() {
            return Err(ServiceError::UnknownProblem(problem_id.to_string()));
        }
        let id = state.next_submission_id();
        let submission = Submission {
            id: id.clone(),
            problem_id: problem_id.to_string(),
            user_id: user_id.to_string(),
            payload,
            submitted_at: now_ms(),
        };
        self.inner
            .commit(&mut state, vec![Event::SubmissionReceived { submission }])?;
        drop(state);
        self.inner.notify();
        Ok(id)
    }

    pub fn state(&self) -> RwLockReadGuard<'_, State> {
        self.inner.state.read().unwrap()
    }

    pub fn submission(&self, id: &str) -> Result<SubmissionView, ServiceError> {
        let state = self.state();
        let record = state
            .record(id)
            .ok_or_else(|| ServiceError::UnknownSubmission(id.to_string()))?;
        let problem = &state.problems[&record.submission.problem_id].problem;
        Ok(SubmissionView::new(record, problem))
    }

    pub fn problems(&self) -> Vec<ProblemView> {
        self.state()
            .problems
            .values()
            .map(|ps| ProblemView::new(&ps.problem))
            .collect()
    }

    pub fn problem(&self, id: &str) -> Result<ProblemView, ServiceError> {
        self.state()
            .problem(id)
            .map(|ps| ProblemView::new(&ps.problem))
            .ok_or_else(|| ServiceError::UnknownProblem(id.to_string()))
    }

    pub fn leaderboard(&self, problem_id: &str) -> Result<Vec<LeaderboardEntry>, ServiceError> {
        self.state()
            .problem(problem_id)
            .map(|ps| ps.leaderboard.clone())
            .ok_or_else(|| ServiceError::UnknownProblem(problem_id.to_string()))
    }

    pub fn journal_path(&self) -> PathBuf {
        self.inner.config.data_dir.join(JOURNAL_FILE)
    }

    /// Every journal record written so far.
    pub fn records(&self) -> Result<Vec<Record>, ServiceError> {
        let _guard = self.inner.journal.lock().unwrap();
        Ok(journal::read_records(&self.journal_path())?)
    }

    /// Blocks until nothing is queued or running, or the timeout passes.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            {
                let state = self.state();
                if state.queued_count() == 0 && state.running().next().is_none() {
                    return true;
                }
            }
            if std::time::Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(20));
        }
    }

    /// Writes a snapshot now.
    pub fn snapshot(&self) -> Result<(), ServiceError> {
        let state = self.inner.state.read().unwrap();
        self.inner.write_snapshot(&state)
    }

    /// Stops the workers after their current submission.
    pub fn shutdown(&self) {
        self.inner.stopping.store(true, Ordering::SeqCst);
        self.inner.notify();
        let threads = std::mem::take(&mut *self.threads.lock().unwrap());
        for t in threads {
            let _ = t.join();
        }
    }
}

fn load_snapshot(path: &Path) -> Result<State, ServiceError> {
    let data = match fs::read(path) {
        Ok(d) => d,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(State::default()),
        Err(e) => return Err(e.into()),
    };
    let mut state: State = serde_json::from_slice(&data)
        .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
    state.mark_all_dirty();
    Ok(state)
}

/// How long a claim may run before the reaper assumes its worker is stuck.
fn lease_ms(problem: &Problem, grace_ms: u64) -> u64 {
    let runs: u64 = problem
        .instances
        .iter()
        .map(|t| 2 * t.params.time_limit + 1_000)
        .sum();
    2 * (problem.limits.compile_time + runs) + grace_ms
}

impl Inner {
    fn notify(&self) {
        let _guard = self.wake_lock.lock().unwrap();
        self.wake.notify_all();
    }

    /// Appends `events` in order, applies them and refreshes derived
    /// scores. The caller holds the state write lock, which keeps journal
    /// order and application order identical.
    fn commit(&self, state: &mut State, events: Vec<Event>) -> Result<(), ServiceError> {
        let at = now_ms();
        let mut journal = self.journal.lock().unwrap();
        for event in events {
            let record = journal.append(at, event)?;
            state
                .apply_record(&record)
                .map_err(|e: StateError| ServiceError::Internal(e.to_string()))?;
        }
        if self.config.fsync {
            journal.sync()?;
        }
        drop(journal);
        state.refresh();
        let mut count = self.since_snapshot.lock().unwrap();
        *count += 1;
        if self.config.snapshot_every > 0 && *count >= self.config.snapshot_every {
            *count = 0;
            if let Err(e) = self.write_snapshot(state) {
                warn!("snapshot failed: {e}");
            }
        }
        Ok(())
    }

    fn write_snapshot(&self, state: &State) -> Result<(), ServiceError> {
        let path = self.config.data_dir.join(SNAPSHOT_FILE);
        let tmp = path.with_extension("json.tmp");
        let data = serde_json::to_vec(state).map_err(|e| ServiceError::Internal(e.to_string()))?;
        fs::write(&tmp, data)?;
        fs::File::open(&tmp)?.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Claims found running at startup belonged to a previous process.
    fn recover_interrupted(&self) -> Result<(), ServiceError> {
        let mut state = self.state.write().unwrap();
        let interrupted: Vec<(String, u32)> = state
            .running()
            .map(|r| (r.id().to_string(), r.attempts))
            .collect();
        for (id, attempt) in interrupted {
            let event = self.give_up_or_requeue(&id, attempt, "recovered after restart");
            self.commit(&mut state, vec![event])?;
        }
        Ok(())
    }

    fn give_up_or_requeue(&self, id: &str, attempt: u32, reason: &str) -> Event {
        if attempt < self.config.max_attempts {
            Event::SubmissionRequeued {
                submission_id: id.to_string(),
                attempt,
                reason: reason.to_string(),
            }
        } else {
            Event::SubmissionFinished {
                submission_id: id.to_string(),
                attempt,
                result: Finished::InternalError {
                    message: format!("judging failed {attempt} times, last: {reason}"),
                },
            }
        }
    }

    fn claim(&self, worker: usize) -> Result<Option<(Submission, u32)>, ServiceError> {
        let mut state = self.state.write().unwrap();
        let Some(record) = state.next_claimable() else {
            return Ok(None);
        };
        let submission = record.submission.clone();
        let attempt = record.attempts + 1;
        self.commit(
            &mut state,
            vec![Event::SubmissionStarted {
                submission_id: submission.id.clone(),
                attempt,
                worker,
            }],
        )?;
        Ok(Some((submission, attempt)))
    }

    fn worker_loop(&self, worker: usize) {
        while !self.stopping.load(Ordering::SeqCst) {
            match self.claim(worker) {
                Ok(Some((submission, attempt))) => {
                    let outcome = self.run(&submission);
                    if let Err(e) = self.finish(&submission, attempt, outcome) {
                        warn!("worker {worker}: recording {} failed: {e}", submission.id);
                    }
                }
                Ok(None) => {
                    let guard = self.wake_lock.lock().unwrap();
                    if !self.stopping.load(Ordering::SeqCst) {
                        let _ = self.wake.wait_timeout(guard, Duration::from_millis(200));
                    }
                }
                Err(e) => {
                    warn!("worker {worker}: claim failed: {e}");
                    std::thread::sleep(Duration::from_millis(500));
                }
            }
        }
    }

    fn run(&self, submission: &Submission) -> Result<Verdict, String> {
        let prepared = self
            .prepared
            .read()
            .unwrap()
            .get(&submission.problem_id)
            .cloned()
            .ok_or_else(|| format!("problem `{}` has no checker", submission.problem_id))?;
        match catch_unwind(AssertUnwindSafe(|| self.judge.judge(&prepared, submission))) {
            Ok(Ok(verdict)) => Ok(verdict),
            Ok(Err(e)) => Err(e.to_string()),
            Err(panic) => Err(match panic.downcast_ref::<&str>() {
                Some(s) => format!("worker panicked: {s}"),
                None => match panic.downcast_ref::<String>() {
                    Some(s) => format!("worker panicked: {s}"),
                    None => "worker panicked".to_string(),
                },
            }),
        }
    }

    fn finish(&self, submission: &Submission, attempt: u32, outcome: Result<Verdict, String>) -> Result<(), ServiceError> {
        let mut state = self.state.write().unwrap();
        let Some(record) = state.record(&submission.id) else {
            return Err(ServiceError::UnknownSubmission(submission.id.clone()));
        };
        if record.running_attempt() != Some(attempt) {
            info!("{} attempt {attempt} was superseded", submission.id);
            return Ok(());
        }
        let id = submission.id.clone();
        let events = match outcome {
            Ok(Verdict::CompileError { log }) => vec![Event::SubmissionFinished {
                submission_id: id,
                attempt,
                result: Finished::CompileError { log },
            }],
            Ok(Verdict::Evaluated(outcomes)) => {
                let ps = &state.problems[&submission.problem_id];
                let mut best = ps.best.clone();
                let improved: Vec<_> = outcomes
                    .iter()
                    .filter(|o| best.update_best(o, &id))
                    .map(|o| Event::BestUpdated {
                        problem_id: submission.problem_id.clone(),
                        instance_id: o.instance_id,
                        score: o.score.clone(),
                        submission_id: id.clone(),
                    })
                    .collect();
                match aggregate(&ps.problem, &id, outcomes.clone(), &best) {
                    Ok(_) => {
                        let mut events = vec![Event::SubmissionFinished {
                            submission_id: id,
                            attempt,
                            result: Finished::Evaluated {
                                per_instance: outcomes,
                            },
                        }];
                        events.extend(improved);
                        events
                    }
                    Err(e) => vec![Event::SubmissionFinished {
                        submission_id: id,
                        attempt,
                        result: Finished::InternalError {
                            message: format!("scoring failed: {e}"),
                        },
                    }],
                }
            }
            Err(reason) => {
                warn!("{id} attempt {attempt}: {reason}");
                vec![self.give_up_or_requeue(&id, attempt, &reason)]
            }
        };
        self.commit(&mut state, events)?;
        drop(state);
        self.notify();
        Ok(())
    }

    fn reaper_loop(&self) {
        while !self.stopping.load(Ordering::SeqCst) {
            {
                let guard = self.wake_lock.lock().unwrap();
                let _ = self.wake.wait_timeout(guard, Duration::from_millis(1_000));
            }
            let now = now_ms();
            let mut state = self.state.write().unwrap();
            let expired: Vec<(String, u32)> = state
                .running()
                .filter(|r| {
                    let problem = &state.problems[&r.submission.problem_id].problem;
                    let lease = lease_ms(problem, self.config.lease_grace_ms);
                    r.started_at.is_some_and(|t| now > t + lease)
                })
                .map(|r| (r.id().to_string(), r.attempts))
                .collect();
            for (id, attempt) in expired {
                warn!("{id} attempt {attempt}: claim expired");
                let event = self.give_up_or_requeue(&id, attempt, "claim expired");
                if let Err(e) = self.commit(&mut state, vec![event]) {
                    warn!("reaper: {e}");
                }
            }
            drop(state);
            self.notify();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.inner.stopping.store(true, Ordering::SeqCst);
        self.inner.wake.notify_all();
    }
}

