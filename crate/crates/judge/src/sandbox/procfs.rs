//! Process-tree accounting from `/proc`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

#[derive(Debug, Clone, Copy)]
struct Stat {
    ppid: i32,
    pgrp: i32,
    zombie: bool,
    /// utime + stime + cutime + cstime, in clock ticks.
    ticks: u64,
    threads: u64,
    rss_pages: u64,
}

fn read_stat(pid: i32) -> Option<Stat> {
    let text = fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    // The command name is parenthesised and may contain spaces.
    let rest = &text[text.rfind(')')? + 2..];
    let f: Vec<&str> = rest.split_whitespace().collect();
    // `f[0]` is field 3 (state) of proc(5).
    let num = |field: usize| f.get(field - 3).and_then(|v| v.parse::<u64>().ok());
    Some(Stat {
        ppid: f.get(1)?.parse().ok()?,
        pgrp: f.get(2)?.parse().ok()?,
        zombie: f.first() == Some(&"Z"),
        ticks: num(14)? + num(15)? + num(16)? + num(17)?,
        threads: num(20)?,
        rss_pages: num(24)?,
    })
}

/// One sweep over the tree rooted at the sandboxed child.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeSample {
    pub cpu_ms: u64,
    pub rss_bytes: u64,
    pub tasks: u64,
}

/// Tracks every process that has ever belonged to the tree, so that
/// processes which escaped the process group can still be found and killed.
pub struct TreeTracker {
    root: i32,
    known: BTreeSet<i32>,
    live: BTreeSet<i32>,
    tick_ms: f64,
    page_size: u64,
}

impl TreeTracker {
    pub fn new(root: i32) -> Self {
        let ticks = unsafe { libc::sysconf(libc::_SC_CLK_TCK) }.max(1) as f64;
        let page = unsafe { libc::sysconf(libc::_SC_PAGESIZE) }.max(1) as u64;
        let mut known = BTreeSet::new();
        known.insert(root);
        TreeTracker {
            root,
            known,
            live: BTreeSet::new(),
            tick_ms: 1000.0 / ticks,
            page_size: page,
        }
    }

    pub fn sample(&mut self) -> TreeSample {
        let mut stats = BTreeMap::new();
        if let Ok(entries) = fs::read_dir("/proc") {
            for entry in entries.flatten() {
                let Some(pid) = entry.file_name().to_str().and_then(|n| n.parse::<i32>().ok()) else {
                    continue;
                };
                if let Some(stat) = read_stat(pid) {
                    stats.insert(pid, stat);
                }
            }
        }
        let mut members: BTreeSet<i32> = stats
            .iter()
            .filter(|(pid, s)| self.known.contains(pid) || s.pgrp == self.root)
            .map(|(pid, _)| *pid)
            .collect();
        loop {
            let before = members.len();
            for (pid, s) in &stats {
                if members.contains(&s.ppid) {
                    members.insert(*pid);
                }
            }
            if members.len() == before {
                break;
            }
        }
        let mut sample = TreeSample::default();
        let mut ticks = 0;
        for pid in &members {
            let s = &stats[pid];
            ticks += s.ticks;
            if !s.zombie {
                sample.rss_bytes += s.rss_pages * self.page_size;
                sample.tasks += s.threads;
            }
        }
        sample.cpu_ms = (ticks as f64 * self.tick_ms) as u64;
        self.known.extend(members.iter().copied());
        self.live = members;
        sample
    }

    /// SIGKILL the process group and every live member of the tree.
    pub fn kill_all(&mut self) {
        self.sample();
        unsafe {
            libc::killpg(self.root, libc::SIGKILL);
            for pid in &self.live {
                libc::kill(*pid, libc::SIGKILL);
            }
        }
    }
}
