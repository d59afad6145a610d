//! Trajectories of the measure-then-correct protocol and seeded ensembles of them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{expectation, fidelity, Operator, StateVector};
use crate::stabilizer::CorrectionTable;
use crate::trotter::{MeasurementSet, OutcomeBitstring};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub correction: bool,
    /// Named Hermitian operators whose expectation is recorded after every step.
    pub observables: Vec<(String, Operator)>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { correction: true, observables: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub outcomes: Vec<OutcomeBitstring>,
    /// Fidelity to the target after steps `1..=T`, before the final `V†`.
    pub fidelity_vs_step: Vec<f64>,
    pub initial_fidelity: f64,
    pub observables: Vec<(String, Vec<f64>)>,
    /// State after `V†`.
    pub final_state: StateVector,
}

impl TrajectoryRecord {
    /// First step (1-based) whose fidelity reaches `threshold`.
    pub fn first_passage(&self, threshold: f64) -> Option<usize> {
        self.fidelity_vs_step.iter().position(|&f| f >= threshold).map(|i| i + 1)
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_vs_step.last().expect("at least one step")
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// One trajectory advanced a round at a time.
///
/// A round samples every term in order with one uniform draw each, then applies
/// `U_k` when correction is on.
pub struct TrajectoryStepper<'a> {
    set: &'a MeasurementSet,
    table: &'a CorrectionTable,
    correction: bool,
    rng: ChaCha8Rng,
    seed: u64,
    state: StateVector,
    step: usize,
}

impl<'a> TrajectoryStepper<'a> {
    pub fn new(
        set: &'a MeasurementSet,
        table: &'a CorrectionTable,
        psi0: &StateVector,
        seed: u64,
        correction: bool,
    ) -> Result<Self> {
        let dim = table.target().dim();
        if psi0.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi0.dim() });
        }
        Ok(TrajectoryStepper {
            set,
            table,
            correction,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            state: psi0.clone(),
            step: 0,
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// Rounds completed so far.
    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn fidelity(&self) -> Result<f64> {
        fidelity(&self.state, self.table.target())
    }

    pub fn advance(&mut self) -> Result<OutcomeBitstring> {
        self.step += 1;
        let (step, seed) = (self.step, self.seed);
        let non_finite = |e: Error| match e {
            Error::ZeroNorm => Error::NonFinite { step, seed },
            other => other,
        };
        let mut bits = Vec::with_capacity(self.set.num_terms());
        for m in self.set.measurements() {
            let r = m.sample(&self.state, &mut self.rng).map_err(non_finite)?;
            bits.push(r.outcome);
            self.state = r.post_state;
        }
        let k = OutcomeBitstring::new(bits)?;
        if self.correction {
            self.state = self.state.apply(self.table.correction_by_index(k.index())).map_err(non_finite)?;
        }
        if !self.state.is_finite() {
            return Err(Error::NonFinite { step, seed });
        }
        Ok(k)
    }
}

/// Runs `steps` rounds: measure every term in order, correct by `U_k`, record; then apply `V†`.
pub fn run_trajectory(
    set: &MeasurementSet,
    table: &CorrectionTable,
    psi0: &StateVector,
    steps: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<TrajectoryRecord> {
    if steps == 0 {
        return Err(Error::InvalidParameter("a trajectory needs at least one step".into()));
    }
    let mut stepper = TrajectoryStepper::new(set, table, psi0, seed, opts.correction)?;
    let mut outcomes = Vec::with_capacity(steps);
    let mut fids = Vec::with_capacity(steps);
    let mut traces: Vec<(String, Vec<f64>)> =
        opts.observables.iter().map(|(n, _)| (n.clone(), Vec::with_capacity(steps))).collect();
    for _ in 0..steps {
        outcomes.push(stepper.advance()?);
        fids.push(stepper.fidelity()?);
        for ((_, op), (_, trace)) in opts.observables.iter().zip(traces.iter_mut()) {
            trace.push(expectation(stepper.state(), op)?);
        }
    }
    let final_state = stepper.state().apply(&table.v().adjoint())?;
    Ok(TrajectoryRecord {
        seed,
        outcomes,
        fidelity_vs_step: fids,
        initial_fidelity: fidelity(psi0, table.target())?,
        observables: traces,
        final_state,
    })
}

/// First step at which the fidelity to the target reaches `threshold`, or `None`
/// if it does not within `max_steps`. Agrees with [`TrajectoryRecord::first_passage`]
/// for the same seed but stops early and keeps no history.
pub fn first_passage_time(
    set: &MeasurementSet,
    table: &CorrectionTable,
    psi0: &StateVector,
    max_steps: usize,
    seed: u64,
    threshold: f64,
    correction: bool,
) -> Result<Option<usize>> {
    let mut stepper = TrajectoryStepper::new(set, table, psi0, seed, correction)?;
    for t in 1..=max_steps {
        stepper.advance()?;
        if stepper.fidelity()? >= threshold {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Least-squares line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InsufficientPoints { found: n.min(ys.len()), needed: 2 });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints { found: 1, needed: 2 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2, points: n })
}

/// Range of mean fidelities included in the log-infidelity fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub low: f64,
    pub high: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { low: 0.2, high: 0.99 }
    }
}

pub const MIN_FIT_POINTS: usize = 10;

/// Fits `ln(1 − F̄)` against the step number over the points inside `window`.
pub fn fit_log_infidelity(mean_fidelity: &[f64], window: FitWindow) -> Result<LinearFit> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, &f) in mean_fidelity.iter().enumerate() {
        if f >= window.low && f <= window.high && f < 1.0 - 1e-12 {
            xs.push((i + 1) as f64);
            ys.push((1.0 - f).ln());
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints { found: xs.len(), needed: MIN_FIT_POINTS });
    }
    linear_fit(&xs, &ys)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub num_trajectories: usize,
    pub mean_fidelity_vs_step: Vec<f64>,
    pub fit: Option<LinearFit>,
}

impl EnsembleSummary {
    pub fn from_records(records: &[TrajectoryRecord], window: FitWindow) -> Self {
        let steps = records.first().map_or(0, |r| r.fidelity_vs_step.len());
        let n = records.len() as f64;
        let mean: Vec<f64> = (0..steps)
            .map(|t| records.iter().map(|r| r.fidelity_vs_step[t]).sum::<f64>() / n)
            .collect();
        let fit = fit_log_infidelity(&mean, window).ok();
        EnsembleSummary { num_trajectories: records.len(), mean_fidelity_vs_step: mean, fit }
    }

    pub fn log_infidelity_slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn slope_r2(&self) -> Option<f64> {
        self.fit.map(|f| f.r2)
    }
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub trajectories: Vec<TrajectoryRecord>,
    pub summary: EnsembleSummary,
}

/// Seed of trajectory `i` in an ensemble.
pub fn trajectory_seed(base_seed: u64, i: usize) -> u64 {
    base_seed ^ i as u64
}

/// `num_traj` independent trajectories in parallel; trajectory `i` uses [`trajectory_seed`].
pub fn run_ensemble(
    set: &MeasurementSet,
    table: &CorrectionTable,
    psi0: &StateVector,
    steps: usize,
    num_traj: usize,
    base_seed: u64,
    opts: &RunOptions,
) -> Result<Ensemble> {
    if num_traj == 0 {
        return Err(Error::InvalidParameter("an ensemble needs at least one trajectory".into()));
    }
    let trajectories = (0..num_traj)
        .into_par_iter()
        .map(|i| run_trajectory(set, table, psi0, steps, trajectory_seed(base_seed, i), opts))
        .collect::<Result<Vec<_>>>()?;
    let summary = EnsembleSummary::from_records(&trajectories, FitWindow::default());
    Ok(Ensemble { trajectories, summary })
}
