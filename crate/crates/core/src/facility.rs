//! Facility placement on a discontent grid.
//!
//! K factories with fixed influence radii are placed on integer grid points.
//! Every cell within Euclidean distance `r_i` (inclusive) of factory `i` is
//! covered; the objective is the total discontent of covered cells, each
//! covered cell counted once. Smaller is better.
//!
//! Input file: `W H K`, then `r_1 … r_K`, then `H` rows of `W` integers.
//! Output file: `K` lines `x_i y_i`, one per factory in input order.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checks::tokens;

pub const MAX_SIDE: u32 = 1000;
pub const MIN_FACTORIES: usize = 3;
pub const MAX_FACTORIES: usize = 50;
pub const MAX_DISCONTENT: u32 = 255;

/// Enumeration budget of [`brute_force`].
pub const BRUTE_FORCE_MAX_CELLS: usize = 64;
pub const BRUTE_FORCE_MAX_FACTORIES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FacilityError {
    #[error("bounds: {0}")]
    Bounds(String),
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("instance exceeds the brute-force budget ({cells} cells, {factories} factories)")]
    BudgetExceeded { cells: usize, factories: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacilityInstance {
    pub width: u32,
    pub height: u32,
    pub radii: Vec<u32>,
    /// Row-major discontent values, `height * width` entries.
    pub grid: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacilityPlacement {
    pub centers: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    pub detail: Option<String>,
}

impl FacilityInstance {
    /// Builds an instance with no bounds on the factory count. Grid
    /// dimensions must be non-zero and match `grid`.
    pub fn new(width: u32, height: u32, radii: Vec<u32>, grid: Vec<u32>) -> Result<Self, FacilityError> {
        if width == 0 || height == 0 {
            return Err(FacilityError::Bounds("grid must be non-empty".into()));
        }
        if grid.len() != width as usize * height as usize {
            return Err(FacilityError::Bounds(format!(
                "expected {} grid values, got {}",
                width as usize * height as usize,
                grid.len()
            )));
        }
        Ok(FacilityInstance {
            width,
            height,
            radii,
            grid,
        })
    }

    pub fn factories(&self) -> usize {
        self.radii.len()
    }

    pub fn cell(&self, x: u32, y: u32) -> u32 {
        self.grid[y as usize * self.width as usize + x as usize]
    }

    /// Checks the contest bounds: sides up to 1000 and 3 to 50 factories.
    pub fn check_contest_bounds(&self) -> Result<(), FacilityError> {
        check_bounds(self.width, self.height, self.factories())
    }

    pub fn to_input_string(&self) -> String {
        let mut out = String::with_capacity(self.grid.len() * 4 + 64);
        let _ = writeln!(out, "{} {} {}", self.width, self.height, self.factories());
        out.push_str(&join(self.radii.iter()));
        out.push('\n');
        for row in self.grid.chunks(self.width as usize) {
            out.push_str(&join(row.iter()));
            out.push('\n');
        }
        out
    }

    pub fn parse(data: &[u8]) -> Result<Self, FacilityError> {
        let mut it = tokens(data, false);
        let mut next = |what: &str| -> Result<u32, FacilityError> {
            let tok = it
                .next()
                .ok_or_else(|| FacilityError::Parse(format!("missing {what}")))?;
            std::str::from_utf8(tok)
                .ok()
                .and_then(|t| t.parse::<u32>().ok())
                .ok_or_else(|| FacilityError::Parse(format!("bad {what}")))
        };
        let width = next("width")?;
        let height = next("height")?;
        let k = next("factory count")? as usize;
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE || k > MAX_FACTORIES {
            return Err(FacilityError::Bounds("header out of range".into()));
        }
        let radii = (0..k).map(|_| next("radius")).collect::<Result<Vec<_>, _>>()?;
        let cells = width as usize * height as usize;
        let grid = (0..cells)
            .map(|_| next("grid value"))
            .collect::<Result<Vec<_>, _>>()?;
        if it.next().is_some() {
            return Err(FacilityError::Parse("trailing data".into()));
        }
        FacilityInstance::new(width, height, radii, grid)
    }
}

impl FacilityPlacement {
    pub fn to_output_string(&self) -> String {
        let mut out = String::new();
        for (x, y) in &self.centers {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    /// Parses `x y` pairs. Only the syntax is checked here; see
    /// [`facility_feasible`] for count and bounds.
    pub fn parse(data: &[u8]) -> Result<Self, FacilityError> {
        let values = tokens(data, false)
            .map(|tok| {
                std::str::from_utf8(tok)
                    .ok()
                    .and_then(|t| t.parse::<i64>().ok())
                    .ok_or_else(|| {
                        FacilityError::Parse(format!(
                            "`{}` is not an integer",
                            String::from_utf8_lossy(tok)
                        ))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() % 2 != 0 {
            return Err(FacilityError::Parse("odd number of coordinates".into()));
        }
        Ok(FacilityPlacement {
            centers: values.chunks(2).map(|c| (c[0], c[1])).collect(),
        })
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn check_bounds(width: u32, height: u32, k: usize) -> Result<(), FacilityError> {
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(FacilityError::Bounds(format!(
            "grid {width}x{height} outside 1..={MAX_SIDE}"
        )));
    }
    if !(MIN_FACTORIES..=MAX_FACTORIES).contains(&k) {
        return Err(FacilityError::Bounds(format!(
            "{k} factories outside {MIN_FACTORIES}..={MAX_FACTORIES}"
        )));
    }
    Ok(())
}

/// Count and bounds check; the detail names the first violation.
pub fn facility_feasible(instance: &FacilityInstance, placement: &FacilityPlacement) -> Feasibility {
    let infeasible = |detail: String| Feasibility {
        feasible: false,
        detail: Some(detail),
    };
    if placement.centers.len() != instance.factories() {
        return infeasible(format!("expected {} centers", instance.factories()));
    }
    for (i, &(x, y)) in placement.centers.iter().enumerate() {
        if x < 0 || x >= instance.width as i64 {
            return infeasible(format!("center {} out of bounds: x out of range", i + 1));
        }
        if y < 0 || y >= instance.height as i64 {
            return infeasible(format!("center {} out of bounds: y out of range", i + 1));
        }
    }
    Feasibility {
        feasible: true,
        detail: None,
    }
}

/// Half-width of the disc of radius `r` at vertical offset `dy`.
fn half_width(r: u32, dy: u32) -> u32 {
    let rem = (r as u64 * r as u64) - (dy as u64 * dy as u64);
    let mut w = (rem as f64).sqrt() as u64;
    while w * w > rem {
        w -= 1;
    }
    while (w + 1) * (w + 1) <= rem {
        w += 1;
    }
    w as u32
}

/// Marks cells within `r` of `(cx, cy)`.
fn cover(instance: &FacilityInstance, covered: &mut [bool], cx: u32, cy: u32, r: u32) {
    let w = instance.width as i64;
    let h = instance.height as i64;
    for dy in 0..=r.min(instance.height) {
        let span = half_width(r, dy) as i64;
        for y in [cy as i64 - dy as i64, cy as i64 + dy as i64] {
            if y < 0 || y >= h {
                continue;
            }
            let lo = (cx as i64 - span).max(0);
            let hi = (cx as i64 + span).min(w - 1);
            let row = y as usize * w as usize;
            for x in lo..=hi {
                covered[row + x as usize] = true;
            }
            if dy == 0 {
                break;
            }
        }
    }
}

/// Total discontent of cells covered by at least one factory. The
/// placement must be feasible.
pub fn facility_objective(instance: &FacilityInstance, placement: &FacilityPlacement) -> u64 {
    let mut covered = vec![false; instance.grid.len()];
    for (&(x, y), &r) in placement.centers.iter().zip(&instance.radii) {
        cover(instance, &mut covered, x as u32, y as u32, r);
    }
    covered
        .iter()
        .zip(&instance.grid)
        .filter(|(c, _)| **c)
        .map(|(_, v)| *v as u64)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    pub optimum: u64,
    /// First optimal placement in enumeration order.
    pub argmin: FacilityPlacement,
}

/// Exact optimum by enumerating every placement (centers may repeat).
///
/// Coverage is evaluated cell by cell against every center, independently
/// of [`facility_objective`]. Limited to 64 cells and 2 factories.
pub fn brute_force(instance: &FacilityInstance) -> Result<BruteForceResult, FacilityError> {
    let cells = instance.grid.len();
    let k = instance.factories();
    if cells > BRUTE_FORCE_MAX_CELLS || k > BRUTE_FORCE_MAX_FACTORIES {
        return Err(FacilityError::BudgetExceeded {
            cells,
            factories: k,
        });
    }
    let w = instance.width as usize;
    let total = cells.pow(k as u32);
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut choice = vec![0usize; k];
    for code in 0..total {
        let mut rest = code;
        for slot in choice.iter_mut().rev() {
            *slot = rest % cells;
            rest /= cells;
        }
        let mut value = 0u64;
        for (cell, &c) in instance.grid.iter().enumerate() {
            let (x, y) = ((cell % w) as i64, (cell / w) as i64);
            let hit = choice.iter().zip(&instance.radii).any(|(&center, &r)| {
                let (cx, cy) = ((center % w) as i64, (center / w) as i64);
                (x - cx).pow(2) + (y - cy).pow(2) <= (r as i64).pow(2)
            });
            if hit {
                value += c as u64;
            }
        }
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, choice.clone()));
        }
    }
    let (optimum, choice) = best.unwrap_or((0, Vec::new()));
    Ok(BruteForceResult {
        optimum,
        argmin: FacilityPlacement {
            centers: choice
                .iter()
                .map(|&c| ((c % w) as i64, (c / w) as i64))
                .collect(),
        },
    })
}

/// Random instance with discontent uniform in `[0, 255]` and radii uniform
/// in `[0, min(W, H) / 4]`. Draws where some placement would cover only
/// zero-discontent cells are rejected and redrawn from the same stream.
pub fn gen_facility(width: u32, height: u32, k: usize, seed: u64) -> Result<FacilityInstance, FacilityError> {
    check_bounds(width, height, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_radius = width.min(height) / 4;
    let cells = width as usize * height as usize;
    loop {
        let radii: Vec<u32> = (0..k).map(|_| rng.gen_range(0..=max_radius)).collect();
        let grid: Vec<u32> = (0..cells).map(|_| rng.gen_range(0..=MAX_DISCONTENT)).collect();
        let instance = FacilityInstance::new(width, height, radii, grid)?;
        if !has_zero_placement(&instance) {
            return Ok(instance);
        }
    }
}

/// Whether some disc of the largest radius covers only zero cells. A zero
/// objective is reachable exactly then (every factory can share that
/// center).
fn has_zero_placement(instance: &FacilityInstance) -> bool {
    let r = instance.radii.iter().copied().max().unwrap_or(0);
    let prefix = RowPrefix::new(instance, |_| false);
    (0..instance.height).any(|y| (0..instance.width).any(|x| prefix.disc_sum(x, y, r) == 0))
}

/// Per-row prefix sums of the grid restricted to cells not yet covered.
struct RowPrefix {
    width: usize,
    height: usize,
    sums: Vec<u64>,
}

impl RowPrefix {
    fn new(instance: &FacilityInstance, covered: impl Fn(usize) -> bool) -> Self {
        let width = instance.width as usize;
        let height = instance.height as usize;
        let mut sums = vec![0u64; height * (width + 1)];
        for y in 0..height {
            let base = y * (width + 1);
            for x in 0..width {
                let idx = y * width + x;
                let v = if covered(idx) { 0 } else { instance.grid[idx] as u64 };
                sums[base + x + 1] = sums[base + x] + v;
            }
        }
        RowPrefix { width, height, sums }
    }

    fn row_sum(&self, y: usize, lo: usize, hi: usize) -> u64 {
        let base = y * (self.width + 1);
        self.sums[base + hi + 1] - self.sums[base + lo]
    }

    fn disc_sum(&self, cx: u32, cy: u32, r: u32) -> u64 {
        let mut total = 0;
        for dy in 0..=r.min(self.height as u32) {
            let span = half_width(r, dy) as i64;
            let lo = (cx as i64 - span).max(0) as usize;
            let hi = (cx as i64 + span).min(self.width as i64 - 1) as usize;
            for y in [cy as i64 - dy as i64, cy as i64 + dy as i64] {
                if y >= 0 && (y as usize) < self.height {
                    total += self.row_sum(y as usize, lo, hi);
                }
                if dy == 0 {
                    break;
                }
            }
        }
        total
    }
}

/// Baseline heuristic: factories in decreasing-radius order (ties by
/// index), each placed at the center adding the least newly covered
/// discontent; ties go to the first center in row-major order.
pub fn facility_greedy(instance: &FacilityInstance) -> FacilityPlacement {
    let mut order: Vec<usize> = (0..instance.factories()).collect();
    order.sort_by(|&a, &b| instance.radii[b].cmp(&instance.radii[a]).then(a.cmp(&b)));
    let mut covered = vec![false; instance.grid.len()];
    let mut centers = vec![(0i64, 0i64); instance.factories()];
    for factory in order {
        let r = instance.radii[factory];
        let prefix = RowPrefix::new(instance, |idx| covered[idx]);
        let mut best: Option<(u64, u32, u32)> = None;
        for y in 0..instance.height {
            for x in 0..instance.width {
                let marginal = prefix.disc_sum(x, y, r);
                if best.is_none_or(|(b, _, _)| marginal < b) {
                    best = Some((marginal, x, y));
                }
            }
        }
        let (_, x, y) = best.expect("grid is non-empty");
        cover(instance, &mut covered, x, y, r);
        centers[factory] = (x as i64, y as i64);
    }
    FacilityPlacement { centers }
}

/// Best-response improvement: each factory in turn moves to the center
/// adding the least discontent given the others, until a full round brings
/// no strict improvement or `max_rounds` is reached.
pub fn facility_local_search(
    instance: &FacilityInstance,
    start: &FacilityPlacement,
    max_rounds: usize,
) -> FacilityPlacement {
    let mut centers = start.centers.clone();
    let mut current = facility_objective(instance, start);
    for _ in 0..max_rounds {
        let mut improved = false;
        for i in 0..centers.len() {
            let mut covered = vec![false; instance.grid.len()];
            for (j, &(x, y)) in centers.iter().enumerate() {
                if j != i {
                    cover(instance, &mut covered, x as u32, y as u32, instance.radii[j]);
                }
            }
            let prefix = RowPrefix::new(instance, |idx| covered[idx]);
            let base: u64 = covered
                .iter()
                .zip(&instance.grid)
                .filter(|(c, _)| **c)
                .map(|(_, v)| *v as u64)
                .sum();
            let r = instance.radii[i];
            let mut best = (current, centers[i]);
            for y in 0..instance.height {
                for x in 0..instance.width {
                    let value = base + prefix.disc_sum(x, y, r);
                    if value < best.0 {
                        best = (value, (x as i64, y as i64));
                    }
                }
            }
            if best.0 < current {
                current = best.0;
                centers[i] = best.1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    FacilityPlacement { centers }
}

/// Outcome of checking a contestant's output against an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FacilityVerdict {
    Feasible { objective: u64 },
    Infeasible { detail: String },
    ParseFailure { detail: String },
}

/// Parses the instance and the output, checks feasibility and evaluates
/// the objective.
pub fn check_output(input: &[u8], output: &[u8]) -> Result<FacilityVerdict, FacilityError> {
    let instance = FacilityInstance::parse(input)?;
    let placement = match FacilityPlacement::parse(output) {
        Ok(p) => p,
        Err(e) => {
            return Ok(FacilityVerdict::ParseFailure {
                detail: e.to_string(),
            })
        }
    };
    let feasibility = facility_feasible(&instance, &placement);
    if !feasibility.feasible {
        return Ok(FacilityVerdict::Infeasible {
            detail: feasibility.detail.unwrap_or_default(),
        });
    }
    Ok(FacilityVerdict::Feasible {
        objective: facility_objective(&instance, &placement),
    })
}
