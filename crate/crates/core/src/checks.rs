//! Per-instance output checks and score rules.

use crate::model::{ExecutionStatus, PolicyKind};
use crate::score::Score;

fn is_separator(byte: u8, csv: bool) -> bool {
    byte.is_ascii_whitespace() || (csv && byte == b',')
}

/// Splits output into whitespace-separated tokens (commas also separate in
/// CSV mode).
pub fn tokens(data: &[u8], csv: bool) -> impl Iterator<Item = &[u8]> {
    data.split(move |&b| is_separator(b, csv))
        .filter(|t| !t.is_empty())
}

/// True iff both byte strings have the same token sequence.
pub fn check_tokens(output: &[u8], reference: &[u8]) -> bool {
    first_token_mismatch(output, reference, false).is_none()
}

/// Index of the first differing token, or `None` when the sequences match.
pub fn first_token_mismatch(output: &[u8], reference: &[u8], csv: bool) -> Option<usize> {
    let mut out = tokens(output, csv);
    let mut reference = tokens(reference, csv);
    let mut index = 0;
    loop {
        match (out.next(), reference.next()) {
            (None, None) => return None,
            (Some(a), Some(b)) if a == b => index += 1,
            _ => return Some(index),
        }
    }
}

/// IOI rule: full points on acceptance, nothing otherwise.
pub fn score_ioi(status: ExecutionStatus, max_points: &Score) -> Score {
    if status.is_accepted() {
        max_points.clone()
    } else {
        Score::zero()
    }
}

/// Time-penalized IOI score: full points up to half the time limit, then a
/// linear decrease reaching zero at the limit.
///
/// `V · min(1, 2 · (T − τ) / T)`, evaluated exactly. `cpu_time` is expected
/// to be within `[0, time_limit]`; values above the limit score zero.
pub fn score_time_penalty(max_points: &Score, time_limit: u64, cpu_time: u64) -> Score {
    assert!(time_limit > 0, "time limit must be positive");
    let tau = cpu_time.min(time_limit);
    let factor = Score::ratio(
        2 * (time_limit - tau) as i64,
        time_limit as i64,
    )
    .min(Score::from_int(1));
    max_points * &factor
}

/// Everything that may feed a per-instance score.
#[derive(Debug, Clone)]
pub struct ScoreInputs<'a> {
    pub max_points: &'a Score,
    pub time_limit: u64,
    pub cpu_time: u64,
    /// Objective value reported by an objective or external checker.
    pub objective: Option<&'a Score>,
}

/// Score `v_i` for one instance under `policy`. Defined for every pair of
/// status and policy; a non-accepted status always scores zero.
pub fn instance_score(policy: PolicyKind, status: ExecutionStatus, inputs: &ScoreInputs<'_>) -> Score {
    if !status.is_accepted() {
        return Score::zero();
    }
    match policy {
        PolicyKind::BinaryIcpc => Score::zero(),
        PolicyKind::IoiSum => score_ioi(status, inputs.max_points),
        PolicyKind::IoiTimePenalty => {
            score_time_penalty(inputs.max_points, inputs.time_limit, inputs.cpu_time)
        }
        PolicyKind::OptimizationNormalized => inputs.objective.cloned().unwrap_or_default(),
    }
}

/// Result line of an external checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckerVerdict {
    Ok {
        score: Option<Score>,
        detail: Option<String>,
    },
    WrongAnswer {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("checker protocol violation: {0}")]
pub struct ProtocolError(pub String);

/// Parses the first line of an external checker's output:
/// `OK [score] [detail...]` or `WA [reason...]`.
pub fn parse_checker_line(output: &[u8]) -> Result<CheckerVerdict, ProtocolError> {
    let text = std::str::from_utf8(output)
        .map_err(|_| ProtocolError("checker output is not UTF-8".into()))?;
    let line = text.lines().next().unwrap_or("").trim_end_matches('\r');
    let (head, rest) = match line.split_once(' ') {
        Some((head, rest)) => (head, rest),
        None => (line, ""),
    };
    match head {
        "OK" => {
            let rest = rest.trim_start();
            let (first, tail) = match rest.split_once(' ') {
                Some((first, tail)) => (first, tail.trim()),
                None => (rest, ""),
            };
            if first.is_empty() {
                return Ok(CheckerVerdict::Ok {
                    score: None,
                    detail: None,
                });
            }
            match first.parse::<Score>() {
                Ok(score) if !first.contains('/') => Ok(CheckerVerdict::Ok {
                    score: Some(score),
                    detail: (!tail.is_empty()).then(|| tail.to_string()),
                }),
                _ => Ok(CheckerVerdict::Ok {
                    score: None,
                    detail: Some(rest.trim().to_string()),
                }),
            }
        }
        "WA" => Ok(CheckerVerdict::WrongAnswer {
            reason: rest.trim().to_string(),
        }),
        "" => Err(ProtocolError("empty checker output".into())),
        other => Err(ProtocolError(format!("unknown verdict `{other}`"))),
    }
}
