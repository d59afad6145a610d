//! Measurement sequences over all terms of a model and the signed Hamiltonians they select.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{ground_state, matrix_exp_hermitian, Operator, StateVector};
use crate::measurement::{Backend, HamiltonianTerm, Measurement, DEFAULT_EPSILON_BOUND};

/// Outcomes `(k₁, …, k_N)` of one sweep over the terms.
///
/// Its index reads `k₁` as the most significant bit, so `"01"` is index 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeBitstring {
    bits: Vec<u8>,
}

impl OutcomeBitstring {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(format!("outcome bits must be 0 or 1: {bits:?}")));
        }
        Ok(OutcomeBitstring { bits })
    }

    pub fn zeros(n: usize) -> Self {
        OutcomeBitstring { bits: vec![0; n] }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let bits = (0..n).map(|j| ((index >> (n - 1 - j)) & 1) as u8).collect();
        OutcomeBitstring { bits }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn flipped(&self) -> Self {
        OutcomeBitstring { bits: self.bits.iter().map(|b| 1 - b).collect() }
    }

    /// All `2^n` bitstrings in index order.
    pub fn all(n: usize) -> impl Iterator<Item = OutcomeBitstring> {
        (0..1usize << n).map(move |i| OutcomeBitstring::from_index(i, n))
    }
}

impl fmt::Display for OutcomeBitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for OutcomeBitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("bad outcome bit {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        OutcomeBitstring::new(bits)
    }
}

/// Ordered terms `H⁽¹⁾ … H⁽ᴺ⁾` on a common register.
#[derive(Clone, Debug)]
pub struct ModelHamiltonian {
    terms: Vec<Arc<HamiltonianTerm>>,
    num_qubits: usize,
}

impl ModelHamiltonian {
    pub fn new(terms: Vec<HamiltonianTerm>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyModel)?;
        let num_qubits = first.num_qubits();
        if let Some(t) = terms.iter().find(|t| t.num_qubits() != num_qubits) {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                found: 1 << t.num_qubits(),
            });
        }
        Ok(ModelHamiltonian { terms: terms.into_iter().map(Arc::new).collect(), num_qubits })
    }

    pub fn terms(&self) -> &[Arc<HamiltonianTerm>] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Sum of the shifted terms.
    pub fn matrix(&self) -> Operator {
        let mut acc = Operator::zeros(self.num_qubits);
        for t in &self.terms {
            acc = &acc + t.matrix();
        }
        acc
    }

    /// Total identity offset; subtract it from energies of [`Self::matrix`].
    pub fn total_shift(&self) -> f64 {
        self.terms.iter().map(|t| t.shift()).sum()
    }

    fn check_bits(&self, k: &OutcomeBitstring) -> Result<()> {
        if k.len() != self.num_terms() {
            return Err(Error::BitstringLength { expected: self.num_terms(), found: k.len() });
        }
        Ok(())
    }
}

/// `H_k = Σⱼ (−1)^{kⱼ} H⁽ʲ⁾` over the shifted terms.
pub fn signed_hamiltonian(model: &ModelHamiltonian, k: &OutcomeBitstring) -> Result<Operator> {
    model.check_bits(k)?;
    let mut acc = Operator::zeros(model.num_qubits);
    for (t, &b) in model.terms.iter().zip(k.bits()) {
        let sign = if b == 0 { 1.0 } else { -1.0 };
        acc = &acc + &t.matrix().scale_real(sign);
    }
    Ok(acc)
}

/// One measurement per term, all at the same ε and backend.
#[derive(Clone, Debug)]
pub struct MeasurementSet {
    model: ModelHamiltonian,
    measurements: Vec<Measurement>,
    epsilon: f64,
    backend: Backend,
    bound: f64,
}

impl MeasurementSet {
    pub fn new(model: &ModelHamiltonian, epsilon: f64, backend: Backend) -> Result<Self> {
        Self::with_bound(model, epsilon, backend, DEFAULT_EPSILON_BOUND)
    }

    pub fn with_bound(model: &ModelHamiltonian, epsilon: f64, backend: Backend, bound: f64) -> Result<Self> {
        let measurements = model
            .terms
            .iter()
            .map(|t| Measurement::build(t, epsilon, backend, bound))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasurementSet { model: model.clone(), measurements, epsilon, backend, bound })
    }

    pub fn model(&self) -> &ModelHamiltonian {
        &self.model
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Bound on `ε·spectral_max` the set was built under.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn num_terms(&self) -> usize {
        self.measurements.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.model.num_qubits
    }

    /// `M_k = M⁽ᴺ⁾_{k_N} ⋯ M⁽¹⁾_{k₁}`: term 1 acts first.
    pub fn sequence_operator(&self, k: &OutcomeBitstring) -> Result<Operator> {
        self.model.check_bits(k)?;
        let mut acc = Operator::identity(self.num_qubits());
        for (m, &b) in self.measurements.iter().zip(k.bits()) {
            acc = m.operator(b) * &acc;
        }
        Ok(acc)
    }

    /// Replaces one term's measurement; used by negative-control checks.
    pub fn with_measurement(mut self, j: usize, m: Measurement) -> Self {
        self.measurements[j] = m;
        self
    }
}

/// `M_k` built from Kraus pairs at the default ε bound.
pub fn sequence_operator(model: &ModelHamiltonian, k: &OutcomeBitstring, epsilon: f64) -> Result<Operator> {
    MeasurementSet::new(model, epsilon, Backend::Kraus)?.sequence_operator(k)
}

/// `e^{−Hτ}|ψ₀⟩`, renormalized.
pub fn exact_ite(model: &ModelHamiltonian, tau: f64, psi0: &StateVector) -> Result<StateVector> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("imaginary time {tau} must be finite and >= 0")));
    }
    let h = model.matrix();
    let gs = ground_state(&h)?;
    if gs.state.inner(psi0)?.norm() <= 1e-12 {
        log::warn!("initial state is orthogonal to the ground state; no convergence to it is possible");
    }
    psi0.apply(&matrix_exp_hermitian(&h, tau)?)
}
