//! `mite run`: one ensemble, written as `trajectories.csv`, `summary.csv` and `run.json`.

use std::path::PathBuf;
use std::time::Instant;

use mite_core::{expectation, run_ensemble, Ensemble, RunOptions};
use serde_json::json;

use crate::config::{RunConfig, Switch};
use crate::experiment::build_experiment;
use crate::output::{ensure_dir, json_num, num, write_json, CsvOut};
use crate::CliError;

pub struct RunOutcome {
    pub ensemble: Ensemble,
    /// Bloch angle per outcome bitstring, in index order.
    pub angles: Vec<Option<f64>>,
    pub max_residual: f64,
    pub out: PathBuf,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let exp = build_experiment(cfg)?;
    let steps = cfg.resolved_steps();
    let opts = RunOptions { correction: cfg.correction == Switch::On, observables: exp.preset.observables.clone() };
    let psi0 = &exp.preset.initial_state;
    let ensemble = run_ensemble(&exp.set, &exp.table, psi0, steps, cfg.trajectories, cfg.seed, &opts)?;

    ensure_dir(&cfg.out)?;
    let names: Vec<&str> = opts.observables.iter().map(|(n, _)| n.as_str()).collect();
    let initial_obs = opts
        .observables
        .iter()
        .map(|(_, op)| expectation(psi0, op))
        .collect::<mite_core::Result<Vec<_>>>()?;

    let mut header = vec!["traj_id", "step", "fidelity"];
    header.extend(&names);
    let mut traj_csv = CsvOut::create(&cfg.out.join("trajectories.csv"), &header)?;
    for (id, r) in ensemble.trajectories.iter().enumerate() {
        let mut row = vec![id.to_string(), "0".into(), num(r.initial_fidelity)];
        row.extend(initial_obs.iter().map(|&x| num(x)));
        traj_csv.row(&row)?;
        for t in 0..steps {
            let mut row = vec![id.to_string(), (t + 1).to_string(), num(r.fidelity_vs_step[t])];
            row.extend(r.observables.iter().map(|(_, trace)| num(trace[t])));
            traj_csv.row(&row)?;
        }
    }
    traj_csv.finish()?;

    let n = ensemble.trajectories.len() as f64;
    let mean0 = ensemble.trajectories.iter().map(|r| r.initial_fidelity).sum::<f64>() / n;
    let mut sum_csv = CsvOut::create(&cfg.out.join("summary.csv"), &["step", "mean_fidelity", "log_infidelity"])?;
    let means = std::iter::once(mean0).chain(ensemble.summary.mean_fidelity_vs_step.iter().copied());
    for (t, f) in means.enumerate() {
        sum_csv.row([t.to_string(), num(f), num((1.0 - f).ln())])?;
    }
    sum_csv.finish()?;

    let angles: Vec<Option<f64>> = exp.table.entries().iter().map(|e| e.angle).collect();
    let corrections: Vec<_> = exp
        .table
        .entries()
        .iter()
        .map(|e| json!({"k": e.bits.to_string(), "residual": json_num(e.residual), "angle": e.angle.map(json_num)}))
        .collect();
    let fit = ensemble.summary.fit.map(|f| {
        json!({"slope": json_num(f.slope), "intercept": json_num(f.intercept), "r2": json_num(f.r2), "points": f.points})
    });
    let steering = exp.table.steering().map(|s| {
        json!({"initial_objective": json_num(s.initial_objective), "final_objective": json_num(s.final_objective), "iterations": s.iterations})
    });
    let final_fid = ensemble.summary.mean_fidelity_vs_step.last().copied().unwrap_or(f64::NAN);
    let mut doc = cfg.to_json();
    doc["results"] = json!({
        "target": exp.preset.target.description,
        "correction_method": exp.table.method(),
        "epsilon": exp.set.epsilon(),
        "solution": exp.instance.as_ref().map(|i| i.solution_index()),
        "max_residual": json_num(exp.table.max_residual()),
        "corrections": corrections,
        "steering": steering,
        "mean_final_fidelity": json_num(final_fid),
        "fit": fit,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    write_json(&cfg.out.join("run.json"), &doc)?;

    Ok(RunOutcome { ensemble, angles, max_residual: exp.table.max_residual(), out: cfg.out.clone() })
}
