//! Writes the bundled facility-location package.
//!
//! ```text
//! cargo run --release -p judge --example make_facility_pack -- packages/facility
//! ```
//!
//! Instances come from the seeded generator; the reference score of each is
//! the greedy placement refined by local search.

use std::fs;
use std::path::PathBuf;

use judge_core::facility::{facility_greedy, facility_local_search, facility_objective, gen_facility};
use serde_json::json;

const SHAPES: [(u32, u32, usize); 10] = [
    (20, 20, 3),
    (40, 30, 4),
    (60, 60, 5),
    (80, 50, 6),
    (100, 100, 8),
    (120, 90, 10),
    (150, 150, 12),
    (200, 120, 15),
    (180, 200, 20),
    (200, 200, 25),
];

const STATEMENT: &str = "# Factory placement

A town is a grid of W by H points. Every point (x, y) has a discontent
value c(x, y) between 0 and 255. You must build K factories; factory i has a
fixed influence radius r_i and is placed at a grid point (x_i, y_i). A point
is affected when its Euclidean distance to at least one factory is at most
that factory's radius. Each affected point counts once.

Minimize the total discontent of the affected points.

## Input

    W H K
    r_1 r_2 ... r_K
    c(0, 0) c(1, 0) ... c(W-1, 0)
    ...
    c(0, H-1) ... c(W-1, H-1)

1 <= W, H <= 1000 and 3 <= K <= 50.

## Output

K lines, line i holding `x_i y_i` with 0 <= x_i < W and 0 <= y_i < H.
Factories may share a point.

## Scoring

Each instance scores best / yours, where best is the lowest total found so
far by anyone (or the reference solution). The submission score is the mean
over all instances, times 100.

Limits: 10 s CPU time and 1 GB of memory per instance.
";

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "packages/facility".into()));
    fs::create_dir_all(out.join("tests")).unwrap();
    let mut references = Vec::new();
    for (i, &(w, h, k)) in SHAPES.iter().enumerate() {
        let instance = gen_facility(w, h, k, 1000 + i as u64).unwrap();
        let greedy = facility_greedy(&instance);
        let refined = facility_local_search(&instance, &greedy, 20);
        let value = facility_objective(&instance, &refined);
        eprintln!(
            "{:02}: {w}x{h} K={k} greedy={} refined={value}",
            i + 1,
            facility_objective(&instance, &greedy)
        );
        fs::write(out.join(format!("tests/{:02}.in", i + 1)), instance.to_input_string()).unwrap();
        references.push(value);
    }
    let manifest = json!({
        "id": "facility",
        "kind": "optimization",
        "direction": "minimize",
        "policy": {"kind": "optimization_normalized"},
        "limits": {"time_limit": 10000, "memory_limit": 1u64 << 30, "output_limit": 1u64 << 20},
        "checker": {"kind": "objective", "name": "facility"},
        "reference_scores": references,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();
    fs::write(out.join("statement.md"), STATEMENT).unwrap();
}
