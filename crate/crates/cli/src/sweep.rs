//! `mite sweep`: mean `T₉₀` and correction angles across ε or the search dimension.

use mite_core::measurement::POSITIVITY_BOUND;
use mite_core::models::{epsilon_for_angle, single_call_budget};
use mite_core::{first_passage_time, linear_fit, trajectory_seed, LinearFit};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{SweepConfig, SweepVariable, Switch};
use crate::experiment::build_experiment;
use crate::output::{ensure_dir, json_num, num, write_json, CsvOut};
use crate::CliError;

/// Step cap for a sweep point when the template leaves `steps` unset.
pub fn default_sweep_steps(epsilon: f64) -> usize {
    (40.0 / (epsilon * epsilon)).ceil() as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub epsilon: f64,
    pub dim: Option<usize>,
    pub angles: Vec<Option<f64>>,
    pub mean_t90: f64,
    /// Trajectories that never reached the threshold; they count as `max_steps`.
    pub censored: usize,
    pub trajectories: usize,
    pub max_steps: usize,
    pub max_residual: f64,
}

impl SweepPoint {
    pub fn flagged(&self) -> bool {
        self.censored > 0
    }
}

pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// `ln T₉₀` against `ln value`.
    pub t90_fit: Option<LinearFit>,
    /// First and second correction angle against ε.
    pub angle_fits: Vec<Option<LinearFit>>,
}

pub fn cmd_sweep(sweep: &SweepConfig) -> Result<SweepOutcome, CliError> {
    sweep.validate()?;
    let mut points = Vec::with_capacity(sweep.values.len());
    for &value in &sweep.values {
        let mut cfg = sweep.template.clone();
        match sweep.variable {
            SweepVariable::Epsilon => cfg.epsilon = value,
            SweepVariable::Dimension => {
                cfg.dim = value as usize;
                cfg.epsilon = epsilon_for_angle(single_call_budget(cfg.dim), cfg.backend.into())?;
                cfg.epsilon_bound = POSITIVITY_BOUND;
            }
        }
        let exp = build_experiment(&cfg)?;
        let max_steps = cfg.steps.unwrap_or_else(|| default_sweep_steps(cfg.epsilon));
        let correction = cfg.correction == Switch::On;
        let psi0 = &exp.preset.initial_state;
        let times = (0..cfg.trajectories)
            .into_par_iter()
            .map(|i| {
                let seed = trajectory_seed(cfg.seed, i);
                first_passage_time(&exp.set, &exp.table, psi0, max_steps, seed, sweep.threshold, correction)
            })
            .collect::<mite_core::Result<Vec<_>>>()?;
        let censored = times.iter().filter(|t| t.is_none()).count();
        let mean_t90 = times.iter().map(|t| t.unwrap_or(max_steps) as f64).sum::<f64>() / times.len() as f64;
        if censored > 0 {
            log::warn!("{value}: {censored} of {} trajectories did not reach {}", times.len(), sweep.threshold);
        }
        points.push(SweepPoint {
            value,
            epsilon: cfg.epsilon,
            dim: exp.instance.as_ref().map(|i| i.dimension()),
            angles: exp.table.entries().iter().map(|e| e.angle).collect(),
            mean_t90,
            censored,
            trajectories: cfg.trajectories,
            max_steps,
            max_residual: exp.table.max_residual(),
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_t90.ln()).collect();
    let t90_fit = linear_fit(&xs, &ys).ok();
    let n_angles = points.iter().map(|p| p.angles.len()).min().unwrap_or(0);
    let angle_fits = (0..n_angles)
        .map(|j| {
            let pairs: Option<Vec<(f64, f64)>> = points.iter().map(|p| p.angles[j].map(|a| (p.epsilon, a))).collect();
            pairs.and_then(|v| {
                let (e, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
                linear_fit(&e, &a).ok()
            })
        })
        .collect();
    let outcome = SweepOutcome { points, t90_fit, angle_fits };
    write_sweep(sweep, &outcome)?;
    Ok(outcome)
}

fn fit_json(f: &Option<LinearFit>) -> serde_json::Value {
    match f {
        Some(f) => json!({"slope": json_num(f.slope), "intercept": json_num(f.intercept), "r2": json_num(f.r2), "points": f.points}),
        None => serde_json::Value::Null,
    }
}

fn write_sweep(sweep: &SweepConfig, outcome: &SweepOutcome) -> Result<(), CliError> {
    let out = &sweep.template.out;
    ensure_dir(out)?;
    let n_angles = outcome.points.iter().map(|p| p.angles.len()).max().unwrap_or(0);
    let angle_cols: Vec<String> = (0..n_angles).map(|j| format!("theta{j}")).collect();
    let mut header = vec!["value", "epsilon", "dim"];
    header.extend(angle_cols.iter().map(String::as_str));
    header.extend(["mean_t90", "censored", "trajectories", "max_steps", "max_residual", "flagged"]);
    let mut csv = CsvOut::create(&out.join("sweep.csv"), &header)?;
    for p in &outcome.points {
        let mut row = vec![num(p.value), num(p.epsilon), p.dim.map_or_else(String::new, |d| d.to_string())];
        row.extend((0..n_angles).map(|j| p.angles.get(j).copied().flatten().map_or_else(String::new, num)));
        row.extend([
            num(p.mean_t90),
            p.censored.to_string(),
            p.trajectories.to_string(),
            p.max_steps.to_string(),
            num(p.max_residual),
            u8::from(p.flagged()).to_string(),
        ]);
        csv.row(&row)?;
    }
    csv.finish()?;

    let mut doc = serde_json::to_value(sweep).expect("sweep config serializes");
    let key = match sweep.variable {
        SweepVariable::Epsilon => "t90_vs_epsilon",
        SweepVariable::Dimension => "t90_vs_dimension",
    };
    doc["results"] = json!({
        key: fit_json(&outcome.t90_fit),
        "angle_vs_epsilon": outcome.angle_fits.iter().map(fit_json).collect::<Vec<_>>(),
        "flagged": outcome.points.iter().filter(|p| p.flagged()).map(|p| json_num(p.value)).collect::<Vec<_>>(),
    });
    write_json(&out.join("sweep.json"), &doc)
}
