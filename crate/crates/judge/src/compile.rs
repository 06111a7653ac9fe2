//! Turning a submission into something the sandbox can run.
//!
//! Source submissions are compiled inside the sandbox under the problem's
//! compile-time and binary-size budgets. Static binaries are checked for a
//! matching architecture and a resolvable set of shared libraries.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::io::Write;
use std::os::unix::fs::OpenOptionsExt;
use std::path::{Path, PathBuf};

use goblin::elf::{header, Elf};
use judge_core::{Payload, ResourceLimits, SourceFile, Submission};

use crate::artifact::{Artifact, BIN_PATH};
use crate::sandbox::{Collect, LimitKind, RunLimits, RunRequest, Sandbox, SandboxFault, StagedContent, StagedFile, WORKDIR};
use crate::toolchain::{Registry, Toolchain, OUT_PATH, SRC_DIR};

/// Compile logs are kept up to this many bytes.
pub const LOG_CAP: usize = 64 << 10;
pub const TRUNCATION_MARKER: &str = "\n[compile log truncated]\n";

/// Reasons a submission is rejected before evaluation; all of them end in
/// a CE verdict.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("compilation failed")]
    Diagnostics { log: String },
    #[error("compilation exceeded {limit_ms} ms")]
    Timeout { limit_ms: u64, log: String },
    #[error("binary of {size} bytes exceeds the {limit} byte limit")]
    BinaryTooLarge { size: u64, limit: u64 },
    #[error("required library {0} is not available")]
    MissingDependency(String),
    #[error("incompatible binary: {0}")]
    IncompatibleArchitecture(String),
    #[error("unknown language {0}")]
    UnknownLanguage(String),
    #[error("invalid source file name {0:?}")]
    BadFileName(String),
}

impl CompileError {
    /// Text stored as the compile log of a CE verdict.
    pub fn log(&self) -> String {
        match self {
            CompileError::Diagnostics { log } => log.clone(),
            CompileError::Timeout { log, .. } if !log.is_empty() => format!("{self}\n{log}"),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Rejected(#[from] CompileError),
    #[error(transparent)]
    Fault(#[from] SandboxFault),
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Fault(e.into())
    }
}

#[derive(Debug, Clone)]
pub struct Compiler<'a> {
    pub sandbox: &'a Sandbox,
    pub registry: &'a Registry,
    /// Memory available to the compiler itself.
    pub memory_limit: u64,
}

pub const DEFAULT_COMPILE_MEMORY: u64 = 2 << 30;

impl<'a> Compiler<'a> {
    pub fn new(sandbox: &'a Sandbox, registry: &'a Registry) -> Self {
        Compiler {
            sandbox,
            registry,
            memory_limit: DEFAULT_COMPILE_MEMORY,
        }
    }

    /// Builds the artifact for any payload kind.
    pub fn prepare(&self, submission: &Submission, limits: &ResourceLimits) -> Result<Artifact, StageError> {
        match &submission.payload {
            Payload::Source { .. } => self.compile(submission, limits),
            Payload::StaticBinary(_) => verify_binary(submission, limits),
        }
    }

    pub fn compile(&self, submission: &Submission, limits: &ResourceLimits) -> Result<Artifact, StageError> {
        let Payload::Source { language_id, files } = &submission.payload else {
            return verify_binary(submission, limits);
        };
        let toolchain = self
            .registry
            .get(language_id)
            .ok_or_else(|| CompileError::UnknownLanguage(language_id.clone()))?;
        let files = source_files(toolchain, files)?;
        self.compile_files(toolchain, &files, limits)
    }

    fn compile_files(
        &self,
        toolchain: &Toolchain,
        files: &[(String, Vec<u8>)],
        limits: &ResourceLimits,
    ) -> Result<Artifact, StageError> {
        let argv = toolchain
            .compile_command_template
            .iter()
            .map(|a| {
                a.replace(SRC_DIR, &format!("{WORKDIR}/src"))
                    .replace(OUT_PATH, &format!("{WORKDIR}/main"))
            })
            .collect();
        let artifact_dir = tempfile::Builder::new().prefix("artifact-").tempdir()?;
        let binary = artifact_dir.path().join("main");
        let request = RunRequest {
            argv,
            files: files
                .iter()
                .map(|(name, content)| StagedFile {
                    path: format!("src/{name}"),
                    content: StagedContent::Bytes(content.clone()),
                    executable: false,
                })
                .collect(),
            stdin: Vec::new(),
            env: Vec::new(),
            limits: RunLimits {
                cpu_ms: limits.compile_time,
                wall_ms: limits.compile_time,
                memory_bytes: self.memory_limit,
                output_bytes: LOG_CAP as u64,
                file_size: scratch_file_limit(limits.binary_size),
            },
            collect: if toolchain.is_interpreted {
                Vec::new()
            } else {
                vec![Collect {
                    path: "main".into(),
                    dest: binary.clone(),
                }]
            },
        };
        let run = self.sandbox.run(request)?;
        let raw = &run.raw;
        // Diagnostics name files relative to the run directory.
        let log = compile_log(&raw.stderr, &raw.stdout, raw.stderr.len() >= self.sandbox.config().stderr_cap)
            .replace(&format!("{}/", run.workdir.display()), "");

        if raw.hit(LimitKind::Cpu) || raw.hit(LimitKind::Wall) {
            return Err(CompileError::Timeout {
                limit_ms: limits.compile_time,
                log,
            }
            .into());
        }
        let produced = run.collected.first().copied().flatten();
        if raw.stats.exit == judge_core::ExitKind::Signaled(libc::SIGXFSZ)
            || log.contains(FSIZE_MESSAGE)
            || produced.is_some_and(|size| size > limits.binary_size)
        {
            return Err(CompileError::BinaryTooLarge {
                size: produced.unwrap_or(limits.binary_size + 1).max(limits.binary_size + 1),
                limit: limits.binary_size,
            }
            .into());
        }
        if raw.hit(LimitKind::Memory) {
            return Err(CompileError::Diagnostics {
                log: format!("compiler exceeded memory limit\n{log}"),
            }
            .into());
        }
        if raw.stats.exit != judge_core::ExitKind::Code(0) {
            return Err(CompileError::Diagnostics { log }.into());
        }

        let entry = if toolchain.is_interpreted {
            for (name, content) in files {
                fs::write(artifact_dir.path().join(name), content)?;
            }
            files[0].0.clone()
        } else {
            if produced.is_none() {
                return Err(CompileError::Diagnostics {
                    log: format!("compiler produced no executable\n{log}"),
                }
                .into());
            }
            check_elf(&fs::read(&binary)?, artifact_dir.path())?;
            "main".to_string()
        };
        let artifact = Artifact::new(
            artifact_dir,
            entry,
            toolchain.run_command_template.clone(),
            Some(toolchain.language_id.clone()),
            log,
        )?;
        if artifact.size > limits.binary_size {
            return Err(CompileError::BinaryTooLarge {
                size: artifact.size,
                limit: limits.binary_size,
            }
            .into());
        }
        Ok(artifact)
    }
}

/// How the compiler driver reports a child killed by `SIGXFSZ`.
const FSIZE_MESSAGE: &str = "File size limit exceeded";

/// Largest file the compiler may write. Intermediate files (assembly,
/// objects) can outgrow the final binary, so they get headroom; the binary
/// itself is measured after the run.
fn scratch_file_limit(binary_size: u64) -> u64 {
    binary_size.saturating_mul(4).saturating_add(16 << 20)
}

/// Names the files of a source payload. A lone file takes the toolchain's
/// conventional name; the first file is the entry point.
fn source_files(toolchain: &Toolchain, files: &[SourceFile]) -> Result<Vec<(String, Vec<u8>)>, CompileError> {
    if files.len() == 1 {
        return Ok(vec![(toolchain.source_file.clone(), files[0].content.0.clone())]);
    }
    let mut out = Vec::with_capacity(files.len());
    for f in files {
        let ok = !f.name.is_empty()
            && f.name.split('/').all(|part| !part.is_empty() && part != "." && part != "..");
        if !ok {
            return Err(CompileError::BadFileName(f.name.clone()));
        }
        out.push((f.name.clone(), f.content.0.clone()));
    }
    if let Some(pos) = out.iter().position(|(name, _)| *name == toolchain.source_file) {
        out.swap(0, pos);
    }
    Ok(out)
}

fn compile_log(stderr: &[u8], stdout: &[u8], stderr_truncated: bool) -> String {
    let mut bytes = stderr.to_vec();
    bytes.extend_from_slice(stdout);
    let truncated = stderr_truncated || bytes.len() > LOG_CAP;
    bytes.truncate(LOG_CAP);
    let mut log = String::from_utf8_lossy(&bytes).into_owned();
    if truncated {
        log.push_str(TRUNCATION_MARKER);
    }
    log
}

/// Checks a submitted executable and wraps it as an artifact.
pub fn verify_binary(submission: &Submission, limits: &ResourceLimits) -> Result<Artifact, StageError> {
    let Payload::StaticBinary(bytes) = &submission.payload else {
        return Err(CompileError::IncompatibleArchitecture("payload is not a binary".into()).into());
    };
    let size = bytes.len() as u64;
    if size > limits.binary_size {
        return Err(CompileError::BinaryTooLarge {
            size,
            limit: limits.binary_size,
        }
        .into());
    }
    let dir = tempfile::Builder::new().prefix("artifact-").tempdir()?;
    check_elf(bytes.as_slice(), dir.path())?;
    let mut file = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .mode(0o755)
        .open(dir.path().join("main"))?;
    file.write_all(bytes.as_slice())?;
    drop(file);
    Ok(Artifact::new(dir, "main", vec![BIN_PATH.into()], None, String::new())?)
}

fn host_machine() -> u16 {
    if cfg!(target_arch = "x86_64") {
        header::EM_X86_64
    } else if cfg!(target_arch = "aarch64") {
        header::EM_AARCH64
    } else if cfg!(target_arch = "x86") {
        header::EM_386
    } else if cfg!(target_arch = "riscv64") {
        header::EM_RISCV
    } else if cfg!(target_arch = "arm") {
        header::EM_ARM
    } else {
        header::EM_NONE
    }
}

fn compatible(elf: &Elf<'_>) -> Result<(), String> {
    let machine = elf.header.e_machine;
    if machine != host_machine() {
        return Err(format!(
            "machine {} does not match host {}",
            header::machine_to_str(machine),
            header::machine_to_str(host_machine())
        ));
    }
    if elf.is_64 != cfg!(target_pointer_width = "64") {
        return Err("ELF class does not match host".into());
    }
    if elf.little_endian != cfg!(target_endian = "little") {
        return Err("byte order does not match host".into());
    }
    Ok(())
}

/// Verifies the executable header and resolves the full shared-library
/// closure. `origin` stands for `$ORIGIN` in the binary's search paths.
pub fn check_elf(data: &[u8], origin: &Path) -> Result<(), CompileError> {
    let elf = Elf::parse(data).map_err(|_| CompileError::IncompatibleArchitecture("not an ELF executable".into()))?;
    compatible(&elf).map_err(CompileError::IncompatibleArchitecture)?;
    if !matches!(elf.header.e_type, header::ET_EXEC | header::ET_DYN) {
        return Err(CompileError::IncompatibleArchitecture("not an executable".into()));
    }
    if let Some(interp) = elf.interpreter {
        if !Path::new(interp).is_file() {
            return Err(CompileError::MissingDependency(interp.to_string()));
        }
    }
    resolve_closure(&elf, origin)
}

fn search_paths(elf: &Elf<'_>, origin: &Path) -> Vec<PathBuf> {
    let origin = origin.to_string_lossy();
    elf.runpaths
        .iter()
        .chain(elf.rpaths.iter())
        .flat_map(|list| list.split(':'))
        .filter(|p| !p.is_empty())
        .map(|p| PathBuf::from(p.replace("$ORIGIN", &origin).replace("${ORIGIN}", &origin)))
        .collect()
}

fn resolve_closure(elf: &Elf<'_>, origin: &Path) -> Result<(), CompileError> {
    let system = system_library_dirs();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<(String, Vec<PathBuf>)> = elf
        .libraries
        .iter()
        .map(|name| (name.to_string(), search_paths(elf, origin)))
        .collect();
    while let Some((name, own_paths)) = queue.pop_front() {
        if !seen.insert(name.clone()) {
            continue;
        }
        let candidates: Vec<PathBuf> = if name.contains('/') {
            vec![PathBuf::from(&name)]
        } else {
            own_paths.iter().chain(system.iter()).map(|d| d.join(&name)).collect()
        };
        let mut found = false;
        for path in candidates {
            let Ok(bytes) = fs::read(&path) else { continue };
            let Ok(lib) = Elf::parse(&bytes) else { continue };
            // The loader skips libraries built for another machine.
            if compatible(&lib).is_err() {
                continue;
            }
            let dir = path.parent().unwrap_or(Path::new("/"));
            let paths = search_paths(&lib, dir);
            for needed in &lib.libraries {
                queue.push_back((needed.to_string(), paths.clone()));
            }
            found = true;
            break;
        }
        if !found {
            return Err(CompileError::MissingDependency(name));
        }
    }
    Ok(())
}

/// Directories the dynamic loader searches, from `/etc/ld.so.conf` plus the
/// built-in defaults.
fn system_library_dirs() -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    read_ld_conf(Path::new("/etc/ld.so.conf"), &mut dirs, 0);
    for d in ["/lib", "/usr/lib", "/lib64", "/usr/lib64"] {
        dirs.push(PathBuf::from(d));
    }
    let mut seen = BTreeSet::new();
    dirs.retain(|d| seen.insert(d.clone()));
    dirs
}

fn read_ld_conf(path: &Path, dirs: &mut Vec<PathBuf>, depth: u32) {
    let Ok(text) = fs::read_to_string(path) else { return };
    if depth > 8 {
        return;
    }
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if let Some(pattern) = line.strip_prefix("include") {
            let pattern = Path::new(pattern.trim());
            let (Some(parent), Some(file)) = (pattern.parent(), pattern.file_name()) else { continue };
            let Ok(entries) = fs::read_dir(parent) else { continue };
            let mut matched: Vec<PathBuf> = entries
                .flatten()
                .filter(|e| wildcard(&file.to_string_lossy(), &e.file_name().to_string_lossy()))
                .map(|e| e.path())
                .collect();
            matched.sort();
            for conf in matched {
                read_ld_conf(&conf, dirs, depth + 1);
            }
        } else if line.starts_with('/') {
            dirs.push(PathBuf::from(line));
        }
    }
}

/// Shell-style match supporting `*` only.
fn wildcard(pattern: &str, name: &str) -> bool {
    match pattern.split_once('*') {
        None => pattern == name,
        Some((head, rest)) => {
            let Some(tail) = name.strip_prefix(head) else { return false };
            (0..=tail.len()).any(|i| tail.is_char_boundary(i) && wildcard(rest, &tail[i..]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wildcard_matches_conf_names() {
        assert!(wildcard("*.conf", "libc.conf"));
        assert!(!wildcard("*.conf", "libc.conf.bak"));
        assert!(wildcard("a*b*c", "aXXbYc"));
        assert!(!wildcard("a*b", "ba"));
    }

    #[test]
    fn log_truncation_is_marked() {
        let long = vec![b'x'; LOG_CAP + 10];
        let log = compile_log(&long, b"", false);
        assert!(log.ends_with(TRUNCATION_MARKER));
        assert_eq!(log.len(), LOG_CAP + TRUNCATION_MARKER.len());
        assert_eq!(compile_log(b"warning", b"", false), "warning");
    }

    #[test]
    fn non_elf_is_rejected() {
        let err = check_elf(b"#!/bin/sh\necho hi\n", Path::new("/")).unwrap_err();
        assert!(matches!(err, CompileError::IncompatibleArchitecture(_)));
    }

    #[test]
    fn host_binaries_resolve() {
        let data = fs::read("/bin/sh").unwrap();
        check_elf(&data, Path::new("/bin")).unwrap();
    }
}
