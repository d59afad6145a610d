//! Ready-made models: a single qubit, the transverse-field Ising chain and unstructured search.

mod search;

use crate::error::{Error, Result};
use crate::linalg::{materialize, unitary_exp, Operator, Pauli, PauliString, StateVector};
use crate::measurement::HamiltonianTerm;
use crate::stabilizer::{CorrectionMethod, Reference, SteeringOptions, TargetState};
use crate::trotter::{ModelHamiltonian, OutcomeBitstring};

pub use search::{
    commutator_rotation, diffusion_phase, epsilon_for_angle, grover_rotation, reduced_angles,
    search_correction, search_correction_composed, search_model, single_call_budget, Oracle,
    RotationPrimitive, SearchCorrector, SearchInstance,
};

/// A model with its target, default start state, correction rule and traced observables.
#[derive(Clone, Debug)]
pub struct Preset {
    pub model: ModelHamiltonian,
    pub target: TargetState,
    pub initial_state: StateVector,
    pub correction: CorrectionMethod,
    pub observables: Vec<(String, Operator)>,
}

/// `H = −Z + I` with target `|+⟩ = e^{−iYπ/4}|0⟩`.
pub fn single_qubit_model() -> Result<Preset> {
    let term = HamiltonianTerm::new(
        "-Z+I",
        1,
        vec![PauliString::single(-1.0, 0, Pauli::Z), PauliString::identity(1.0)],
    )?;
    let model = ModelHamiltonian::new(vec![term])?;
    let y = materialize(&PauliString::single(1.0, 0, Pauli::Y), 1)?;
    let v = unitary_exp(&y, std::f64::consts::FRAC_PI_4)?;
    let z = materialize(&PauliString::single(1.0, 0, Pauli::Z), 1)?;
    Ok(Preset {
        model,
        target: TargetState {
            reference: Reference::FixedPoint(OutcomeBitstring::zeros(1)),
            v,
            description: "exp(-i Y pi/4) |E0(0)>".into(),
        },
        initial_state: StateVector::product("-")?,
        correction: CorrectionMethod::SpanRotation,
        observables: vec![("z".into(), z)],
    })
}

/// Open chain with `H⁽¹⁾ = λΣ(1 − Xₙ)` and `H⁽²⁾ = ωΣ(1 − ZₙZₙ₊₁)`.
///
/// The target applies `e^{iYπ/8}` on the last qubit to the fixed point of `M₀₀`.
pub fn tfim_model(num_qubits: usize, lambda: f64, omega: f64) -> Result<Preset> {
    if num_qubits < 2 {
        return Err(Error::InvalidParameter(format!("the Ising chain needs at least 2 qubits, got {num_qubits}")));
    }
    if !(lambda >= 0.0 && omega >= 0.0) || !lambda.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!("couplings must be finite and non-negative: {lambda}, {omega}")));
    }
    let l = num_qubits;
    let mut field = Vec::new();
    let mut bonds = Vec::new();
    for n in 0..l {
        field.push(PauliString::identity(lambda));
        field.push(PauliString::single(-lambda, n, Pauli::X));
    }
    for n in 0..l - 1 {
        bonds.push(PauliString::identity(omega));
        bonds.push(PauliString::new(-omega, [(n, Pauli::Z), (n + 1, Pauli::Z)]));
    }
    let model = ModelHamiltonian::new(vec![
        HamiltonianTerm::new("field", l, field)?,
        HamiltonianTerm::new("bonds", l, bonds)?,
    ])?;
    let y_last = materialize(&PauliString::single(1.0, l - 1, Pauli::Y), l)?;
    let v = unitary_exp(&y_last, -std::f64::consts::PI / 8.0)?;
    let energy = model.terms().iter().fold(Operator::zeros(l), |acc, t| &acc + &t.unshifted());
    let initial = "0".repeat(l);
    Ok(Preset {
        model,
        target: TargetState {
            reference: Reference::FixedPoint(OutcomeBitstring::zeros(2)),
            v,
            description: format!("exp(i Y{} pi/8) |E0(00)>", l - 1),
        },
        initial_state: StateVector::product(&initial)?,
        correction: CorrectionMethod::Steered(SteeringOptions::default()),
        observables: vec![("energy".into(), energy)],
    })
}
