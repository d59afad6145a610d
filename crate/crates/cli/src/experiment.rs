//! Turns a [`RunConfig`] into a model, measurement set and correction table.

use mite_core::measurement::Backend;
use mite_core::models::{search_model, single_qubit_model, tfim_model, Preset, SearchInstance};
use mite_core::stabilizer::{build_table, CorrectionTable};
use mite_core::MeasurementSet;

use crate::config::{ModelKind, RunConfig, Solution};
use crate::CliError;

pub struct Experiment {
    pub preset: Preset,
    pub set: MeasurementSet,
    pub table: CorrectionTable,
    /// Present for the search model.
    pub instance: Option<SearchInstance>,
}

pub fn build_preset(cfg: &RunConfig) -> Result<(Preset, Option<SearchInstance>), CliError> {
    Ok(match cfg.model {
        ModelKind::SingleQubit => (single_qubit_model()?, None),
        ModelKind::Tfim => (tfim_model(cfg.qubits, cfg.lambda, cfg.omega)?, None),
        ModelKind::Search => {
            let instance = match &cfg.solution {
                Solution::Index(i) => SearchInstance::from_dimension(cfg.dim, *i)?,
                Solution::Named(_) => SearchInstance::from_seed(cfg.dim, cfg.seed)?,
            };
            (search_model(&instance)?, Some(instance))
        }
    })
}

pub fn build_experiment(cfg: &RunConfig) -> Result<Experiment, CliError> {
    cfg.validate()?;
    let (preset, instance) = build_preset(cfg)?;
    let backend: Backend = cfg.backend.into();
    let set = MeasurementSet::with_bound(&preset.model, cfg.epsilon, backend, cfg.epsilon_bound)?;
    let table = build_table(&set, &preset.target, &preset.correction, true)?;
    log::info!(
        "{} table: method {}, max residual {:.3e}",
        preset.target.description,
        table.method(),
        table.max_residual()
    );
    Ok(Experiment { preset, set, table, instance })
}
