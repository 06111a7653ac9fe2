//! Browser bindings for the judge's scoring rules and the facility-location
//! kit. The page under `www/` drives these.

use judge_core::checks::score_time_penalty;
use judge_core::facility::{
    facility_feasible, facility_greedy, facility_local_search, facility_objective, gen_facility, FacilityInstance,
    FacilityPlacement,
};
use judge_core::scoring::{aggregate_score_normalized, BestTable};
use judge_core::{Direction, ExecutionStatus, InstanceOutcome, Score};
use wasm_bindgen::prelude::*;

/// Exact time-penalized score as decimal text.
#[wasm_bindgen]
pub fn time_penalty(max_points: i32, time_limit: u32, cpu_time: u32) -> Result<String, JsError> {
    if time_limit == 0 {
        return Err(JsError::new("time limit must be positive"));
    }
    let v = Score::from_int(max_points as i64);
    Ok(score_time_penalty(&v, time_limit as u64, cpu_time as u64).to_decimal())
}

/// The penalty curve sampled at `samples + 1` evenly spaced cpu times.
#[wasm_bindgen]
pub fn time_penalty_curve(max_points: i32, time_limit: u32, samples: u32) -> Vec<f64> {
    let v = Score::from_int(max_points as i64);
    let limit = time_limit.max(1) as u64;
    let samples = samples.max(1) as u64;
    (0..=samples)
        .map(|i| score_time_penalty(&v, limit, limit * i / samples).to_f64())
        .collect()
}

fn flat(placement: &FacilityPlacement) -> Vec<i32> {
    placement
        .centers
        .iter()
        .flat_map(|&(x, y)| [x as i32, y as i32])
        .collect()
}

fn placement(centers: &[i32]) -> FacilityPlacement {
    FacilityPlacement {
        centers: centers.chunks(2).map(|c| (c[0] as i64, *c.get(1).unwrap_or(&-1) as i64)).collect(),
    }
}

/// A generated facility instance the page can draw and play with.
#[wasm_bindgen]
pub struct Facility {
    instance: FacilityInstance,
}

#[wasm_bindgen]
impl Facility {
    #[wasm_bindgen(constructor)]
    pub fn new(width: u32, height: u32, factories: usize, seed: u64) -> Result<Facility, JsError> {
        let instance = gen_facility(width, height, factories, seed).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Facility { instance })
    }

    pub fn width(&self) -> u32 {
        self.instance.width
    }

    pub fn height(&self) -> u32 {
        self.instance.height
    }

    /// Row-major discontent values.
    pub fn grid(&self) -> Vec<u32> {
        self.instance.grid.clone()
    }

    pub fn radii(&self) -> Vec<u32> {
        self.instance.radii.clone()
    }

    /// Centers as `[x0, y0, x1, y1, ...]`.
    pub fn greedy(&self) -> Vec<i32> {
        flat(&facility_greedy(&self.instance))
    }

    pub fn improve(&self, centers: &[i32], rounds: usize) -> Vec<i32> {
        flat(&facility_local_search(&self.instance, &placement(centers), rounds))
    }

    /// Objective of a placement, or an error naming why it is infeasible.
    pub fn objective(&self, centers: &[i32]) -> Result<f64, JsError> {
        let p = placement(centers);
        let check = facility_feasible(&self.instance, &p);
        if !check.feasible {
            return Err(JsError::new(&check.detail.unwrap_or_default()));
        }
        Ok(facility_objective(&self.instance, &p) as f64)
    }

    /// Input file text for this instance.
    pub fn input(&self) -> String {
        self.instance.to_input_string()
    }
}

/// Normalized scores of a submission history, recomputed after the last
/// arrival. `values` is row-major, one row of `instances` objective values
/// per submission; a negative value marks a failed instance. Returns one
/// decimal string per submission.
#[wasm_bindgen]
pub fn normalized_scores(maximize: bool, instances: usize, values: &[f64]) -> Result<Vec<String>, JsError> {
    if instances == 0 || !values.len().is_multiple_of(instances) {
        return Err(JsError::new("values must hold whole rows"));
    }
    let direction = if maximize { Direction::Maximize } else { Direction::Minimize };
    let rows: Vec<Vec<InstanceOutcome>> = values
        .chunks(instances)
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let accepted = v >= 0.0;
                    InstanceOutcome {
                        instance_id: i as u32 + 1,
                        status: if accepted { ExecutionStatus::Accepted } else { ExecutionStatus::WrongAnswer },
                        score: if accepted { Score::from_int(v.round() as i64) } else { Score::zero() },
                        stats: None,
                        detail: None,
                    }
                })
                .collect()
        })
        .collect();
    let mut best = BestTable::new(direction);
    for (n, row) in rows.iter().enumerate() {
        for o in row {
            best.update_best(o, &n.to_string());
        }
    }
    rows.iter()
        .map(|row| {
            aggregate_score_normalized(row, instances, &best)
                .map(|s| format!("{:.4}", s.to_f64()))
                .map_err(|e| JsError::new(&e.to_string()))
        })
        .collect()
}
