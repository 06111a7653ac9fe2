//! Resource-limited execution of untrusted programs.
//!
//! Each run gets a private scratch directory and a slot out of
//! `max_parallel_runs`. Limits are enforced with a mix of kernel controls
//! and a monitor loop:
//!
//! * CPU time (user + system of the whole process tree) and resident
//!   memory are sampled from `/proc` every `poll_interval`; the tree is
//!   killed as soon as either exceeds its limit. `RLIMIT_CPU` is a backstop.
//! * Wall clock is capped (twice the CPU limit for solutions).
//! * Standard output is read up to `output_limit + 1` bytes; the extra
//!   sentinel byte tells "exactly at the limit" from "over it".
//! * Landlock confines the filesystem to the run directory plus read-only
//!   system paths and denies TCP.
//! * When the judge runs as root, children also get their own network
//!   namespace, drop to a per-slot uid and are held to `max_tasks`
//!   processes through `RLIMIT_NPROC`.

mod landlock;
mod procfs;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Seek, Write};
use std::os::unix::fs::{OpenOptionsExt, PermissionsExt};
use std::os::fd::AsRawFd;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use judge_core::{EvalParams, ExecStats, ExecutionStatus, ExitKind};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use procfs::TreeTracker;

pub use landlock::abi_version as landlock_abi;

/// Isolation could not be set up; never attributed to the submission.
#[derive(Debug, thiserror::Error)]
#[error("sandbox fault: {0}")]
pub struct SandboxFault(pub String);

impl From<io::Error> for SandboxFault {
    fn from(e: io::Error) -> Self {
        SandboxFault(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    /// Parent of the per-run scratch directories.
    pub scratch_root: PathBuf,
    pub max_parallel_runs: usize,
    /// Processes plus threads a run may hold at once (root only).
    pub max_tasks: u64,
    /// First uid of the range handed to runs when the judge is root. A uid
    /// is leased through a lock file, so concurrent judges on one host
    /// never share one.
    pub uid_base: u32,
    pub uid_count: u32,
    pub poll_interval_ms: u64,
    pub stderr_cap: usize,
    /// Paths readable (and executable) from inside the sandbox.
    pub read_only_paths: Vec<PathBuf>,
    pub filesystem_isolation: bool,
    pub network_isolation: bool,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            scratch_root: std::env::temp_dir().join("judge-sandbox"),
            max_parallel_runs: 4,
            max_tasks: 64,
            uid_base: 61_000,
            uid_count: 1_000,
            poll_interval_ms: 5,
            stderr_cap: 64 << 10,
            read_only_paths: [
                "/usr",
                "/lib",
                "/lib64",
                "/lib32",
                "/bin",
                "/sbin",
                "/etc/ld.so.cache",
                "/etc/ld.so.conf",
                "/etc/ld.so.conf.d",
                "/etc/alternatives",
                "/etc/localtime",
                "/dev/zero",
                "/dev/urandom",
                "/dev/random",
            ]
            .iter()
            .map(PathBuf::from)
            .collect(),
            filesystem_isolation: true,
            network_isolation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Cpu,
    Memory,
    Output,
    Wall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLimits {
    pub cpu_ms: u64,
    pub wall_ms: u64,
    pub memory_bytes: u64,
    pub output_bytes: u64,
    /// Largest file the program may write.
    pub file_size: u64,
}

impl RunLimits {
    /// Limits for a solution run: the wall clock is capped at twice the CPU
    /// limit.
    pub fn for_params(params: &EvalParams) -> Self {
        RunLimits {
            cpu_ms: params.time_limit,
            wall_ms: params.time_limit.saturating_mul(2),
            memory_bytes: params.memory_limit,
            output_bytes: params.output_limit,
            file_size: params.output_limit.saturating_add(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRunResult {
    pub stats: ExecStats,
    /// At most `output_limit + 1` bytes.
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub limit_hits: BTreeSet<LimitKind>,
    /// Peak number of tasks observed in the tree.
    pub peak_tasks: u64,
}

impl RawRunResult {
    pub fn hit(&self, kind: LimitKind) -> bool {
        self.limit_hits.contains(&kind)
    }
}

/// Status of a run before its output is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreCheck {
    Tle,
    Mle,
    Ole,
    Re,
    RanOk,
}

impl PreCheck {
    pub fn status(self) -> Option<ExecutionStatus> {
        match self {
            PreCheck::Tle => Some(ExecutionStatus::TimeLimitExceeded),
            PreCheck::Mle => Some(ExecutionStatus::MemoryLimitExceeded),
            PreCheck::Ole => Some(ExecutionStatus::OutputLimitExceeded),
            PreCheck::Re => Some(ExecutionStatus::RuntimeError),
            PreCheck::RanOk => None,
        }
    }
}

/// Classifies a run with precedence TLE > MLE > OLE > RE. A clean run
/// needs no limit hit and exit code 0.
pub fn classify(raw: &RawRunResult) -> PreCheck {
    classify_parts(&raw.limit_hits, raw.stats.exit)
}

pub fn classify_parts(hits: &BTreeSet<LimitKind>, exit: ExitKind) -> PreCheck {
    if hits.contains(&LimitKind::Cpu) || hits.contains(&LimitKind::Wall) {
        PreCheck::Tle
    } else if hits.contains(&LimitKind::Memory) {
        PreCheck::Mle
    } else if hits.contains(&LimitKind::Output) {
        PreCheck::Ole
    } else if exit != ExitKind::Code(0) {
        PreCheck::Re
    } else {
        PreCheck::RanOk
    }
}

/// Content of a file placed in the run directory before start.
#[derive(Debug, Clone)]
pub enum StagedContent {
    Bytes(Vec<u8>),
    Copy(PathBuf),
    /// Recursively copy a directory's contents.
    Tree(PathBuf),
}

#[derive(Debug, Clone)]
pub struct StagedFile {
    /// Path relative to the run directory.
    pub path: String,
    pub content: StagedContent,
    pub executable: bool,
}

/// A file to copy out of the run directory after the run.
#[derive(Debug, Clone)]
pub struct Collect {
    pub path: String,
    pub dest: PathBuf,
}

/// Placeholder replaced by the run directory in [`RunRequest::argv`].
pub const WORKDIR: &str = "{workdir}";

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub argv: Vec<String>,
    pub files: Vec<StagedFile>,
    pub stdin: Vec<u8>,
    pub env: Vec<(String, String)>,
    pub limits: RunLimits,
    pub collect: Vec<Collect>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub raw: RawRunResult,
    /// Size of each collected file, `None` when it was not produced.
    pub collected: Vec<Option<u64>>,
    /// Directory the run used, already removed.
    pub workdir: PathBuf,
}

struct Slots {
    free: Mutex<Vec<usize>>,
    available: Condvar,
}

/// Exclusive use of a uid while the lock on its file is held.
struct UidLease {
    _file: fs::File,
    uid: u32,
}

struct SlotGuard<'a> {
    slots: &'a Slots,
    index: usize,
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        self.slots.free.lock().unwrap().push(self.index);
        self.slots.available.notify_one();
    }
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap();
        loop {
            if let Some(index) = free.pop() {
                return SlotGuard { slots: self, index };
            }
            free = self.available.wait(free).unwrap();
        }
    }
}

pub struct Sandbox {
    config: SandboxConfig,
    slots: Slots,
    privileged: bool,
    landlock_abi: Option<u32>,
}

impl std::fmt::Debug for Sandbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sandbox")
            .field("config", &self.config)
            .field("privileged", &self.privileged)
            .field("landlock_abi", &self.landlock_abi)
            .finish()
    }
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Result<Self, SandboxFault> {
        fs::create_dir_all(&config.scratch_root)?;
        fs::set_permissions(&config.scratch_root, fs::Permissions::from_mode(0o711))?;
        let landlock_abi = if config.filesystem_isolation {
            let abi = landlock::abi_version();
            if abi.is_none() {
                warn!("landlock unavailable; filesystem isolation disabled");
            }
            abi
        } else {
            None
        };
        let slots = (0..config.max_parallel_runs.max(1)).rev().collect();
        Ok(Sandbox {
            privileged: unsafe { libc::geteuid() } == 0,
            slots: Slots {
                free: Mutex::new(slots),
                available: Condvar::new(),
            },
            landlock_abi,
            config,
        })
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Whether uid separation and task limits are in force.
    pub fn is_privileged(&self) -> bool {
        self.privileged
    }

    pub fn landlock_abi(&self) -> Option<u32> {
        self.landlock_abi
    }

    /// Runs `artifact` on `input` under the instance parameters.
    pub fn execute(&self, artifact: &Artifact, input: &[u8], params: &EvalParams) -> Result<RawRunResult, SandboxFault> {
        let request = RunRequest {
            argv: artifact.command_in(Path::new(WORKDIR)),
            files: vec![StagedFile {
                path: ".".into(),
                content: StagedContent::Tree(artifact.dir().to_path_buf()),
                executable: false,
            }],
            stdin: input.to_vec(),
            env: params.solution_env(),
            limits: RunLimits::for_params(params),
            collect: Vec::new(),
        };
        Ok(self.run(request)?.raw)
    }

    /// Runs an arbitrary command inside a fresh run directory.
    pub fn run(&self, request: RunRequest) -> Result<RunOutput, SandboxFault> {
        let _slot = self.slots.acquire();
        let lease = if self.privileged {
            Some(self.lease_uid()?)
        } else {
            None
        };
        let uid = lease.as_ref().map_or(0, |l| l.uid);
        let workdir = tempfile::Builder::new()
            .prefix("run-")
            .tempdir_in(&self.config.scratch_root)?;
        self.run_in(&request, workdir.path(), uid)
    }

    fn lease_uid(&self) -> Result<UidLease, SandboxFault> {
        let dir = self.config.scratch_root.join("uids");
        fs::create_dir_all(&dir)?;
        for offset in 0..self.config.uid_count {
            let uid = self.config.uid_base + offset;
            let file = fs::OpenOptions::new()
                .create(true)
                .truncate(false)
                .write(true)
                .open(dir.join(uid.to_string()))?;
            if unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX | libc::LOCK_NB) } == 0 {
                return Ok(UidLease { _file: file, uid });
            }
        }
        Err(SandboxFault("no free sandbox uid".into()))
    }

    fn run_in(&self, request: &RunRequest, dir: &Path, uid: u32) -> Result<RunOutput, SandboxFault> {
        for file in &request.files {
            stage(dir, file)?;
        }
        if self.privileged {
            chown_tree(dir, uid)?;
        }

        let argv: Vec<String> = request
            .argv
            .iter()
            .map(|a| a.replace(WORKDIR, &dir.to_string_lossy()))
            .collect();
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| SandboxFault("empty command".into()))?;

        let mut stdin_file = tempfile::tempfile()?;
        stdin_file.write_all(&request.stdin)?;
        stdin_file.rewind()?;

        let ruleset = match self.landlock_abi {
            Some(abi) => {
                let mut rules = landlock::Ruleset::new(abi)?;
                for path in &self.config.read_only_paths {
                    rules.allow(path, landlock::READ_ONLY)?;
                }
                rules.allow_all(Path::new("/dev/null"))?;
                rules.allow_all(dir)?;
                Some(rules)
            }
            None => None,
        };

        let mut cmd = Command::new(program);
        cmd.args(args)
            .current_dir(dir)
            .env_clear()
            .env("PATH", "/usr/local/bin:/usr/bin:/bin")
            .env("HOME", dir)
            .env("TMPDIR", dir)
            .env("LANG", "C.UTF-8")
            .envs(request.env.iter().map(|(k, v)| (k, v)))
            .stdin(Stdio::from(stdin_file))
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0);

        let child_setup = ChildSetup {
            limits: request.limits.clone(),
            uid: self.privileged.then_some(uid),
            max_tasks: self.config.max_tasks,
            new_netns: self.privileged && self.config.network_isolation,
            ruleset_fd: ruleset.as_ref().map(|r| r.raw_fd()),
        };
        unsafe {
            cmd.pre_exec(move || child_setup.apply());
        }

        let started = Instant::now();
        let mut child = cmd.spawn().map_err(|e| SandboxFault(format!("spawn {program}: {e}")))?;
        drop(ruleset);
        let pid = child.id() as i32;

        let output_exceeded = Arc::new(AtomicBool::new(false));
        let stdout = child.stdout.take().expect("piped stdout");
        let stderr = child.stderr.take().expect("piped stderr");
        let out_cap = request.limits.output_bytes.saturating_add(1) as usize;
        let flag = output_exceeded.clone();
        let stdout_reader = thread::spawn(move || read_capped(stdout, out_cap, Some(flag)));
        let err_cap = self.config.stderr_cap;
        let stderr_reader = thread::spawn(move || read_capped(stderr, err_cap, None));

        let poll = Duration::from_millis(self.config.poll_interval_ms.max(1));
        let limits = &request.limits;
        let mut tracker = TreeTracker::new(pid);
        let mut peak_rss = 0u64;
        let mut peak_tasks = 0u64;
        let mut sampled_cpu = 0u64;
        let mut wall_hit = false;
        let (status, rusage) = loop {
            if let Some(done) = try_wait(pid)? {
                break done;
            }
            let sample = tracker.sample();
            sampled_cpu = sampled_cpu.max(sample.cpu_ms);
            peak_rss = peak_rss.max(sample.rss_bytes);
            peak_tasks = peak_tasks.max(sample.tasks);
            let over_wall = started.elapsed() > Duration::from_millis(limits.wall_ms);
            if sampled_cpu > limits.cpu_ms
                || peak_rss > limits.memory_bytes
                || output_exceeded.load(Ordering::Relaxed)
                || over_wall
            {
                wall_hit |= over_wall;
                tracker.kill_all();
                break wait_blocking(pid)?;
            }
            thread::sleep(poll);
        };
        let wall = started.elapsed();
        // Anything the main process left behind dies with it.
        let leftover = tracker.sample();
        sampled_cpu = sampled_cpu.max(leftover.cpu_ms);
        tracker.kill_all();
        if self.privileged {
            sweep_uid(uid);
        }
        drop(child);

        let stdout = stdout_reader.join().unwrap_or_default();
        let stderr = stderr_reader.join().unwrap_or_default();

        let rusage_cpu = timeval_ms(rusage.ru_utime) + timeval_ms(rusage.ru_stime);
        let cpu_time = rusage_cpu.max(sampled_cpu);
        let peak_memory = peak_rss.max(rusage.ru_maxrss.max(0) as u64 * 1024);
        let exit = if libc::WIFSIGNALED(status) {
            ExitKind::Signaled(libc::WTERMSIG(status))
        } else {
            ExitKind::Code(libc::WEXITSTATUS(status))
        };
        let output_bytes = stdout.len() as u64;

        let mut limit_hits = BTreeSet::new();
        if cpu_time > limits.cpu_ms {
            limit_hits.insert(LimitKind::Cpu);
        }
        if peak_memory > limits.memory_bytes {
            limit_hits.insert(LimitKind::Memory);
        }
        if output_bytes > limits.output_bytes {
            limit_hits.insert(LimitKind::Output);
        }
        if wall_hit {
            limit_hits.insert(LimitKind::Wall);
        }

        let mut collected = Vec::with_capacity(request.collect.len());
        for c in &request.collect {
            let src = dir.join(&c.path);
            match fs::symlink_metadata(&src) {
                Ok(meta) if meta.is_file() => {
                    fs::copy(&src, &c.dest)?;
                    collected.push(Some(meta.len()));
                }
                _ => collected.push(None),
            }
        }

        debug!(
            "run {program}: cpu={cpu_time}ms wall={}ms mem={peak_memory} out={output_bytes} exit={exit:?} hits={limit_hits:?}",
            wall.as_millis()
        );
        Ok(RunOutput {
            raw: RawRunResult {
                stats: ExecStats {
                    cpu_time,
                    wall_time: wall.as_millis() as u64,
                    peak_memory,
                    output_bytes,
                    exit,
                },
                stdout,
                stderr,
                limit_hits,
                peak_tasks,
            },
            collected,
            workdir: dir.to_path_buf(),
        })
    }
}

/// Everything the child applies to itself between fork and exec.
struct ChildSetup {
    limits: RunLimits,
    uid: Option<u32>,
    max_tasks: u64,
    new_netns: bool,
    ruleset_fd: Option<i32>,
}

impl ChildSetup {
    /// Runs in the forked child: async-signal-safe calls only.
    fn apply(&self) -> io::Result<()> {
        let cpu_backstop = self.limits.cpu_ms / 1000 + 2;
        set_rlimit(libc::RLIMIT_CPU, cpu_backstop, cpu_backstop + 1)?;
        set_rlimit(libc::RLIMIT_STACK, self.limits.memory_bytes, self.limits.memory_bytes)?;
        set_rlimit(libc::RLIMIT_FSIZE, self.limits.file_size, self.limits.file_size)?;
        set_rlimit(libc::RLIMIT_CORE, 0, 0)?;
        set_rlimit(libc::RLIMIT_NOFILE, 256, 256)?;
        if let Some(uid) = self.uid {
            set_rlimit(libc::RLIMIT_NPROC, self.max_tasks, self.max_tasks)?;
            if self.new_netns && unsafe { libc::unshare(libc::CLONE_NEWNET) } != 0 {
                return Err(io::Error::last_os_error());
            }
            unsafe {
                if libc::setgroups(0, std::ptr::null()) != 0
                    || libc::setgid(uid) != 0
                    || libc::setuid(uid) != 0
                {
                    return Err(io::Error::last_os_error());
                }
            }
        }
        // Cleared by setuid, so set afterwards.
        unsafe {
            libc::prctl(libc::PR_SET_PDEATHSIG, libc::SIGKILL, 0, 0, 0);
        }
        if let Some(fd) = self.ruleset_fd {
            landlock::restrict_self(fd)?;
        }
        Ok(())
    }
}

fn set_rlimit(resource: libc::__rlimit_resource_t, soft: u64, hard: u64) -> io::Result<()> {
    let limit = libc::rlimit {
        rlim_cur: soft,
        rlim_max: hard,
    };
    if unsafe { libc::setrlimit(resource, &limit) } != 0 {
        return Err(io::Error::last_os_error());
    }
    Ok(())
}

fn timeval_ms(tv: libc::timeval) -> u64 {
    tv.tv_sec.max(0) as u64 * 1000 + tv.tv_usec.max(0) as u64 / 1000
}

fn try_wait(pid: i32) -> io::Result<Option<(i32, libc::rusage)>> {
    let mut status = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
    match rc {
        0 => Ok(None),
        r if r == pid => Ok(Some((status, usage))),
        _ => Err(io::Error::last_os_error()),
    }
}

fn wait_blocking(pid: i32) -> io::Result<(i32, libc::rusage)> {
    loop {
        let mut status = 0;
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
        if rc == pid {
            return Ok((status, usage));
        }
        let err = io::Error::last_os_error();
        if err.kind() != io::ErrorKind::Interrupted {
            return Err(err);
        }
    }
}

/// Reads up to `cap` bytes. With `overflow`, reading stops at the cap and
/// the flag is raised; without it the rest is drained and discarded.
fn read_capped(mut source: impl Read, cap: usize, overflow: Option<Arc<AtomicBool>>) -> Vec<u8> {
    let mut data = Vec::new();
    let mut buf = [0u8; 64 << 10];
    loop {
        let n = match source.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        };
        let room = cap.saturating_sub(data.len());
        data.extend_from_slice(&buf[..n.min(room)]);
        if data.len() >= cap {
            if let Some(flag) = &overflow {
                flag.store(true, Ordering::Relaxed);
                break;
            }
        }
    }
    data
}

fn stage(dir: &Path, file: &StagedFile) -> io::Result<()> {
    let target = dir.join(&file.path);
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent)?;
    }
    match &file.content {
        StagedContent::Bytes(bytes) => {
            let mode = if file.executable { 0o755 } else { 0o644 };
            let mut f = fs::OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .mode(mode)
                .open(&target)?;
            f.write_all(bytes)?;
        }
        StagedContent::Copy(src) => {
            fs::copy(src, &target)?;
            if file.executable {
                fs::set_permissions(&target, fs::Permissions::from_mode(0o755))?;
            }
        }
        StagedContent::Tree(src) => copy_tree(src, &target)?,
    }
    Ok(())
}

fn copy_tree(src: &Path, dest: &Path) -> io::Result<()> {
    fs::create_dir_all(dest)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        let to = dest.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_tree(&entry.path(), &to)?;
        } else {
            fs::copy(entry.path(), &to)?;
        }
    }
    Ok(())
}

fn chown_tree(path: &Path, uid: u32) -> io::Result<()> {
    std::os::unix::fs::lchown(path, Some(uid), Some(uid))?;
    if fs::symlink_metadata(path)?.is_dir() {
        for entry in fs::read_dir(path)? {
            chown_tree(&entry?.path(), uid)?;
        }
    }
    Ok(())
}

/// Kills every process still owned by a slot uid, including ones that left
/// the process tree.
fn sweep_uid(uid: u32) {
    let mut cmd = Command::new("/bin/true");
    cmd.stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::null());
    unsafe {
        cmd.pre_exec(move || {
            if libc::setgid(uid) != 0 || libc::setuid(uid) != 0 {
                return Err(io::Error::last_os_error());
            }
            libc::kill(-1, libc::SIGKILL);
            Ok(())
        });
    }
    match cmd.status() {
        Ok(_) => {}
        // The sweeper kills itself along with everything else.
        Err(e) => debug!("uid sweep for {uid}: {e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hits(kinds: &[LimitKind]) -> BTreeSet<LimitKind> {
        kinds.iter().copied().collect()
    }

    #[test]
    fn classification_examples() {
        use LimitKind::*;
        assert_eq!(classify_parts(&hits(&[Cpu, Output]), ExitKind::Signaled(9)), PreCheck::Tle);
        assert_eq!(classify_parts(&hits(&[]), ExitKind::Signaled(libc::SIGSEGV)), PreCheck::Re);
        assert_eq!(classify_parts(&hits(&[]), ExitKind::Code(0)), PreCheck::RanOk);
        assert_eq!(classify_parts(&hits(&[]), ExitKind::Code(3)), PreCheck::Re);
        assert_eq!(classify_parts(&hits(&[Memory, Output]), ExitKind::Code(0)), PreCheck::Mle);
        assert_eq!(classify_parts(&hits(&[Wall]), ExitKind::Code(0)), PreCheck::Tle);
    }

    /// Every subset of limit hits against every kind of exit, compared with
    /// the precedence table written out independently.
    #[test]
    fn classification_precedence_table() {
        let all = [LimitKind::Cpu, LimitKind::Memory, LimitKind::Output, LimitKind::Wall];
        for mask in 0u32..16 {
            let set: BTreeSet<_> = all
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, k)| *k)
                .collect();
            for exit in [ExitKind::Code(0), ExitKind::Code(1), ExitKind::Signaled(11)] {
                let cpu = mask & 1 != 0;
                let mem = mask & 2 != 0;
                let out = mask & 4 != 0;
                let wall = mask & 8 != 0;
                let expected = if cpu || wall {
                    PreCheck::Tle
                } else if mem {
                    PreCheck::Mle
                } else if out {
                    PreCheck::Ole
                } else if exit == ExitKind::Code(0) {
                    PreCheck::RanOk
                } else {
                    PreCheck::Re
                };
                assert_eq!(classify_parts(&set, exit), expected, "{set:?} {exit:?}");
            }
        }
    }

    #[test]
    fn read_capped_flags_overflow() {
        let flag = Arc::new(AtomicBool::new(false));
        let data = read_capped(&[7u8; 100][..], 11, Some(flag.clone()));
        assert_eq!(data.len(), 11);
        assert!(flag.load(Ordering::Relaxed));

        let data = read_capped(&[7u8; 10][..], 11, None);
        assert_eq!(data.len(), 10);
    }

    #[test]
    fn solution_limits_cap_wall_at_twice_cpu() {
        let mut params = judge_core::ResourceLimits::default().default_params();
        params.time_limit = 1500;
        let limits = RunLimits::for_params(&params);
        assert_eq!(limits.wall_ms, 3000);
        assert_eq!(limits.file_size, params.output_limit + 1);
    }
}
