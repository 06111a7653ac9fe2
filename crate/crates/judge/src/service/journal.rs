//! Append-only event log, one JSON record per line.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use judge_core::{InstanceOutcome, Problem, Score, Submission};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ProblemRegistered {
        problem: Problem,
    },
    SubmissionReceived {
        submission: Submission,
    },
    SubmissionStarted {
        submission_id: String,
        attempt: u32,
        worker: usize,
    },
    SubmissionRequeued {
        submission_id: String,
        attempt: u32,
        reason: String,
    },
    SubmissionFinished {
        submission_id: String,
        attempt: u32,
        result: Finished,
    },
    BestUpdated {
        problem_id: String,
        instance_id: u32,
        score: Score,
        submission_id: String,
    },
}

/// How a judged submission ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finished {
    Evaluated { per_instance: Vec<InstanceOutcome> },
    CompileError { log: String },
    /// The judge failed; nothing is charged to the submission.
    InternalError { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub at: u64,
    pub event: Event,
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal i/o: {0}")]
    Io(#[from] io::Error),
    #[error("journal line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Reads every complete record. A torn final line (the process died while
/// writing it) is ignored; any other unreadable line is an error.
pub fn read_records(path: &Path) -> Result<Vec<Record>, JournalError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut lines = Vec::new();
    let mut reader = BufReader::new(file);
    loop {
        let mut buf = Vec::new();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        lines.push(buf);
    }
    let mut records = Vec::with_capacity(lines.len());
    let count = lines.len();
    let mut last_seq = 0;
    for (i, line) in lines.into_iter().enumerate() {
        let complete = line.ends_with(b"\n");
        match serde_json::from_slice::<Record>(&line) {
            Ok(r) => {
                if r.seq <= last_seq {
                    return Err(JournalError::Malformed {
                        line: i + 1,
                        message: format!("sequence number {} does not increase", r.seq),
                    });
                }
                last_seq = r.seq;
                records.push(r);
            }
            Err(_) if i + 1 == count && !complete => break,
            Err(e) => {
                return Err(JournalError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

pub struct Journal {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl Journal {
    /// Opens the journal for appending after the last complete record; a
    /// torn tail is cut off first.
    pub fn open(path: &Path) -> Result<(Journal, Vec<Record>), JournalError> {
        let records = read_records(path)?;
        if fs::read(path).is_ok_and(|d| d.last().is_some_and(|&b| b != b'\n')) {
            let len = fs::metadata(path)?.len();
            let kept = trim_to_last_newline(path)?;
            log::warn!("dropped {} bytes of a torn journal record", len - kept);
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let next_seq = records.last().map_or(1, |r| r.seq + 1);
        Ok((
            Journal {
                path: path.to_path_buf(),
                file,
                next_seq,
            },
            records,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Appends one event as a single write and returns its record.
    pub fn append(&mut self, at: u64, event: Event) -> Result<Record, JournalError> {
        let record = Record {
            seq: self.next_seq,
            at,
            event,
        };
        let mut line = serde_json::to_vec(&record).map_err(|e| JournalError::Malformed {
            line: 0,
            message: e.to_string(),
        })?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.next_seq += 1;
        Ok(record)
    }

    pub fn sync(&self) -> io::Result<()> {
        self.file.sync_data()
    }
}

fn trim_to_last_newline(path: &Path) -> io::Result<u64> {
    let data = fs::read(path)?;
    let keep = data.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let file = OpenOptions::new().write(true).open(path)?;
    file.set_len(keep as u64)?;
    Ok(keep as u64)
}
