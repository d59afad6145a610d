//! Dense state vectors and operators over `L` qubits.
//!
//! Qubit 0 is the leftmost tensor factor, so in a basis index of `L` bits
//! qubit `q` is the bit of weight `2^(L-1-q)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for Hermiticity, unitarity and imaginary-part checks.
pub const TOL: f64 = 1e-10;

/// Negative eigenvalues above this are clamped to zero by [`hermitian_sqrt`].
pub const SQRT_CLAMP: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn qubits_for(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Mask selecting qubit `q` inside a basis index of `num_qubits` bits.
pub fn qubit_mask(q: usize, num_qubits: usize) -> usize {
    1 << (num_qubits - 1 - q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    num_qubits: usize,
}

impl StateVector {
    /// Normalizes `amps`; fails on zero norm or a length that is not `2^L`.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        let num_qubits = qubits_for(amps.len())?;
        let norm = amps.norm();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector { amps: amps.unscale(norm), num_qubits })
    }

    pub fn from_vec(amps: Vec<C64>) -> Result<Self> {
        Self::new(DVector::from_vec(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(amps.len(), amps.iter().map(|&a| c(a, 0.0))))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > 30 {
            return Err(Error::InvalidParameter(format!("{num_qubits} qubits")));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!("basis index {index} >= {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { amps, num_qubits })
    }

    /// Equal superposition of all `2^L` basis states.
    pub fn uniform(num_qubits: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        Self::new(DVector::from_element(dim, c(1.0, 0.0)))
    }

    /// Product state from one character per qubit: `0`, `1`, `+` or `-`.
    pub fn product(pattern: &str) -> Result<Self> {
        let mut amps = DVector::from_element(1, c(1.0, 0.0));
        for ch in pattern.chars() {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let local = match ch {
                '0' => [c(1.0, 0.0), c(0.0, 0.0)],
                '1' => [c(0.0, 0.0), c(1.0, 0.0)],
                '+' => [c(s, 0.0), c(s, 0.0)],
                '-' => [c(s, 0.0), c(-s, 0.0)],
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown product-state symbol {other:?}"
                    )))
                }
            };
            amps = kron_vec(&amps, &DVector::from_row_slice(&local));
        }
        Self::new(amps)
    }

    /// Haar-random state: i.i.d. complex Gaussian amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let amps = DVector::from_fn(dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::new(amps)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn norm_defect(&self) -> f64 {
        (self.amps.norm() - 1.0).abs()
    }

    /// Same ray with the largest-magnitude amplitude made real positive.
    pub fn gauged(&self) -> StateVector {
        StateVector { amps: gauge_vector(&self.amps), num_qubits: self.num_qubits }
    }

    /// Normalized `op |self⟩`.
    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        check_dim(op.dim(), self.dim())?;
        StateVector::new(&op.m * &self.amps)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            amps: kron_vec(&self.amps, &other.amps),
            num_qubits: self.num_qubits + other.num_qubits,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

pub(crate) fn gauge_vector(v: &DVector<C64>) -> DVector<C64> {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, a) in v.iter().enumerate() {
        // ties go to the lowest index
        if a.norm() > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a.norm();
        }
    }
    if best_abs <= 0.0 {
        return v.clone();
    }
    let phase = v[best].conj() / v[best].norm();
    v.map(|a| a * phase)
}

fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Square complex matrix of dimension `2^L`.
///
/// Arithmetic operators panic on mismatched dimensions, like the underlying
/// matrices do.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
    num_qubits: usize,
}

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let num_qubits = qubits_for(m.nrows())?;
        Ok(Operator { m, num_qubits })
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Operator { m: DMatrix::identity(dim, dim), num_qubits }
    }

    pub fn zeros(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Operator { m: DMatrix::zeros(dim, dim), num_qubits }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &StateVector, b: &StateVector) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        Ok(Operator { m: &a.amps * b.amps.adjoint(), num_qubits: a.num_qubits })
    }

    pub fn projector(s: &StateVector) -> Self {
        Operator { m: &s.amps * s.amps.adjoint(), num_qubits: s.num_qubits }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint(), num_qubits: self.num_qubits }
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator { m: &self.m * s, num_qubits: self.num_qubits }
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(c(s, 0.0))
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator { m: self.m.kronecker(&other.m), num_qubits: self.num_qubits + other.num_qubits }
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        (self.m.adjoint() * &self.m - DMatrix::<C64>::identity(d, d)).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &Operator) -> f64 {
        (&self.m - &other.m).norm()
    }

    /// Spectral-norm distance `‖A − B‖₂`.
    pub fn spectral_distance(&self, other: &Operator) -> f64 {
        spectral_norm(&(&self.m - &other.m))
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Operator {
        Operator { m: (&self.m + self.m.adjoint()).scale(0.5), num_qubits: self.num_qubits }
    }

    pub fn apply_raw(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m, num_qubits: self.num_qubits }
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m, num_qubits: self.num_qubits }
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m, num_qubits: self.num_qubits }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Real coefficient times a tensor product of Paulis; absent qubits carry identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    coefficient: f64,
    factors: BTreeMap<usize, Pauli>,
}

impl PauliString {
    pub fn identity(coefficient: f64) -> Self {
        PauliString { coefficient, factors: BTreeMap::new() }
    }

    pub fn single(coefficient: f64, qubit: usize, p: Pauli) -> Self {
        Self::identity(coefficient).with(qubit, p)
    }

    /// Later factors on the same qubit replace earlier ones.
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        PauliString { coefficient, factors: factors.into_iter().collect() }
    }

    pub fn with(mut self, qubit: usize, p: Pauli) -> Self {
        self.factors.insert(qubit, p);
        self
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn factors(&self) -> &BTreeMap<usize, Pauli> {
        &self.factors
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for (q, p) in &self.factors {
            write!(f, " {p}{q}")?;
        }
        Ok(())
    }
}

/// Dense matrix of a Pauli string on `num_qubits` qubits.
pub fn materialize(p: &PauliString, num_qubits: usize) -> Result<Operator> {
    if num_qubits == 0 {
        return Err(Error::InvalidParameter("zero qubits".into()));
    }
    if let Some((&q, _)) = p.factors.iter().next_back() {
        if q >= num_qubits {
            return Err(Error::QubitOutOfRange { index: q, num_qubits });
        }
    }
    let dim = 1usize << num_qubits;
    let mut flip = 0usize;
    for (&q, &pauli) in &p.factors {
        if pauli != Pauli::Z {
            flip |= qubit_mask(q, num_qubits);
        }
    }
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amp = c(p.coefficient, 0.0);
        for (&q, &pauli) in &p.factors {
            let bit = col & qubit_mask(q, num_qubits) != 0;
            amp *= match (pauli, bit) {
                (Pauli::X, _) => c(1.0, 0.0),
                (Pauli::Y, false) => c(0.0, 1.0),
                (Pauli::Y, true) => c(0.0, -1.0),
                (Pauli::Z, false) => c(1.0, 0.0),
                (Pauli::Z, true) => c(-1.0, 0.0),
            };
        }
        m[(col ^ flip, col)] = amp;
    }
    Ok(Operator { m, num_qubits })
}

pub fn materialize_sum(strings: &[PauliString], num_qubits: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(num_qubits);
    for s in strings {
        acc.m += materialize(s, num_qubits)?.m;
    }
    Ok(acc)
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> DVector<C64> {
        self.vectors.column(i).into_owned()
    }

    pub fn reconstruct(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * d[j]
        });
        scaled * self.vectors.adjoint()
    }
}

fn require_hermitian(a: &Operator) -> Result<()> {
    let defect = a.hermiticity_defect();
    if !(defect <= TOL) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub fn eigh(a: &Operator) -> Result<Eigen> {
    require_hermitian(a)?;
    let sym = a.hermitian_part().m;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.dim(), a.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Eigen { values, vectors })
}

pub fn hermitian_function(a: &Operator, f: impl Fn(f64) -> C64) -> Result<Operator> {
    let eig = eigh(a)?;
    Ok(Operator { m: eig.reconstruct(f), num_qubits: a.num_qubits })
}

/// Hermitian square root of a positive semidefinite operator.
pub fn hermitian_sqrt(a: &Operator) -> Result<Operator> {
    let eig = eigh(a)?;
    if let Some(&min) = eig.values.first() {
        if min < -SQRT_CLAMP {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    let m = eig.reconstruct(|x| c(x.max(0.0).sqrt(), 0.0));
    Ok(Operator { m: (&m + m.adjoint()).scale(0.5), num_qubits: a.num_qubits })
}

/// `e^{−A t}` for Hermitian `A`.
pub fn matrix_exp_hermitian(a: &Operator, t: f64) -> Result<Operator> {
    let out = hermitian_function(a, |x| c((-x * t).exp(), 0.0))?;
    Ok(out.hermitian_part())
}

/// `e^{−i A t}` for Hermitian `A`.
pub fn unitary_exp(a: &Operator, t: f64) -> Result<Operator> {
    hermitian_function(a, |x| C64::from_polar(1.0, -x * t))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `⟨s|A|s⟩` for Hermitian `A`.
pub fn expectation(s: &StateVector, a: &Operator) -> Result<f64> {
    check_dim(a.dim(), s.dim())?;
    require_hermitian(a)?;
    let v = s.amps.dotc(&(&a.m * &s.amps));
    if v.im.abs() >= TOL {
        return Err(Error::ComplexExpectation(v.im));
    }
    Ok(v.re)
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Lowest eigenpair of a Hermitian operator together with the spectral gap.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub gap: f64,
}

pub fn ground_state(a: &Operator) -> Result<GroundState> {
    let eig = eigh(a)?;
    let gap = if eig.values.len() > 1 { eig.values[1] - eig.values[0] } else { f64::INFINITY };
    let state = StateVector::new(eig.vector(0))?.gauged();
    Ok(GroundState { energy: eig.values[0], state, gap })
}
