//! Deterministic imaginary time evolution driven by weak measurements.
//!
//! Each term `H⁽ʲ⁾` of a Hamiltonian is measured weakly with Kraus operators
//! close to `e^{∓εH⁽ʲ⁾}/√2`. A sweep over all terms yields an outcome
//! bitstring `k` and applies `M_k ≈ e^{−εH_k}/2^{N/2}`, where `H_k` flips the
//! sign of the terms that gave outcome 1. A correction `U_k` with
//! `U_k M_k|T⟩ ∝ |T⟩` then makes the target `|T⟩ = V|E₀⟩` the common attractor,
//! so the trajectory converges deterministically and `V†` recovers the ground state.

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod measurement;
pub mod models;
pub mod stabilizer;
pub mod trotter;

pub use error::{Error, Result};
pub use evolution::{
    first_passage_time, fit_log_infidelity, linear_fit, run_ensemble, run_trajectory, trajectory_seed, Ensemble,
    EnsembleSummary, FitWindow, LinearFit, RunOptions, TrajectoryRecord, TrajectoryStepper,
};
pub use linalg::{
    expectation, fidelity, hermitian_sqrt, materialize, matrix_exp_hermitian, Operator, Pauli, PauliString,
    StateVector, C64,
};
pub use measurement::{
    build_kraus_pair, pointer_sample, sample, Backend, HamiltonianTerm, KrausPair, Measurement, OutcomeRecord,
    PointerCoupling,
};
pub use stabilizer::{
    build_table, correction_span_rotation, fixed_point, solve_tfim_ansatz, CorrectionMethod, CorrectionTable,
    TargetState,
};
pub use trotter::{exact_ite, sequence_operator, signed_hamiltonian, MeasurementSet, ModelHamiltonian, OutcomeBitstring};
