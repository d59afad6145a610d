//! Unstructured search: `H = −|S⟩⟨S|`, oracle and diffusion phases, and plane rotations
//! assembled from them.
//!
//! Everything here that acts in the plane `span{|S⟩, |⊥⟩}` reaches `S` only
//! through [`Oracle`]; the remaining pieces depend on the dimension alone.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, Operator, Pauli, PauliString, StateVector, C64};
use crate::measurement::{Backend, HamiltonianTerm};
use crate::stabilizer::{
    bloch_y_angle, correction_span_rotation, CorrectionMethod, CorrectionSolver, Reference, SolvedCorrection,
    TargetState,
};
use crate::trotter::{MeasurementSet, ModelHamiltonian, OutcomeBitstring};

use super::Preset;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchInstance {
    num_qubits: usize,
    solution: usize,
}

impl SearchInstance {
    pub fn new(num_qubits: usize, solution: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > 16 {
            return Err(Error::InvalidParameter(format!("search register of {num_qubits} qubits")));
        }
        if solution >= 1 << num_qubits {
            return Err(Error::InvalidParameter(format!(
                "solution {solution} outside dimension {}",
                1usize << num_qubits
            )));
        }
        Ok(SearchInstance { num_qubits, solution })
    }

    pub fn from_dimension(dim: usize, solution: usize) -> Result<Self> {
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        Self::new(dim.trailing_zeros() as usize, solution)
    }

    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize << num_qubits.min(16);
        Self::new(num_qubits, rng.random_range(0..dim))
    }

    /// Solution drawn from a ChaCha8 stream seeded with `seed`.
    pub fn from_seed(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(dim));
        }
        Self::random(dim.trailing_zeros() as usize, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dimension(&self) -> usize {
        1 << self.num_qubits
    }

    /// The marked index; for diagnostics and reporting only.
    pub fn solution_index(&self) -> usize {
        self.solution
    }

    pub fn oracle(&self) -> Oracle {
        let s = StateVector::basis(self.num_qubits, self.solution).expect("index validated at construction");
        let strings = (0..self.dimension())
            .map(|subset| {
                // −|S⟩⟨S| = −Π_q (I + s_q Z_q)/2 with s_q = ±1 from the bits of S
                let mut sign = 1.0;
                let mut factors = Vec::new();
                for q in 0..self.num_qubits {
                    let mask = crate::linalg::qubit_mask(q, self.num_qubits);
                    if subset & mask != 0 {
                        factors.push((q, Pauli::Z));
                        if self.solution & mask != 0 {
                            sign = -sign;
                        }
                    }
                }
                PauliString::new(-sign / self.dimension() as f64, factors)
            })
            .collect();
        Oracle { projector: Operator::projector(&s), strings }
    }

    /// `(|S⟩, |⊥⟩)` with `|⊥⟩` the uniform superposition of the unmarked states; diagnostics only.
    pub fn working_basis(&self) -> (StateVector, StateVector) {
        let s = StateVector::basis(self.num_qubits, self.solution).expect("validated");
        let amps = (0..self.dimension()).map(|i| if i == self.solution { 0.0 } else { 1.0 }).collect::<Vec<_>>();
        (s, StateVector::from_real(&amps).expect("dimension >= 2"))
    }

    /// Norm of the part of `psi` outside the working plane; diagnostics only.
    pub fn leakage(&self, psi: &StateVector) -> f64 {
        let (s, perp) = self.working_basis();
        let a = psi.amplitudes();
        let inside = s.amplitudes() * s.amplitudes().dotc(a) + perp.amplitudes() * perp.amplitudes().dotc(a);
        (a - inside).norm()
    }

    /// 2×2 matrix of `op` in the basis `(|S⟩, |⊥⟩)`; diagnostics only.
    pub fn restrict(&self, op: &Operator) -> Matrix2<C64> {
        let (s, perp) = self.working_basis();
        let basis = [s.amplitudes().clone(), perp.amplitudes().clone()];
        Matrix2::from_fn(|i, j| basis[i].dotc(&op.apply_raw(&basis[j])))
    }
}

/// Black-box access to the marked state.
#[derive(Clone, Debug)]
pub struct Oracle {
    projector: Operator,
    strings: Vec<PauliString>,
}

impl Oracle {
    /// `I − 2|S⟩⟨S|`.
    pub fn reflection(&self) -> Operator {
        self.phase(std::f64::consts::PI)
    }

    /// `e^{−iH_O α} = I + (e^{iα} − 1)|S⟩⟨S|` with `H_O = −|S⟩⟨S|`.
    pub fn phase(&self, alpha: f64) -> Operator {
        let id = Operator::identity(self.projector.num_qubits());
        &id + &self.projector.scale(C64::from_polar(1.0, alpha) - 1.0)
    }

    /// `H_O` as a sum of Z strings.
    pub fn hamiltonian_strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// `|S⟩⟨S|`, exposed for traced observables.
    pub fn projector(&self) -> &Operator {
        &self.projector
    }
}

/// `e^{−iH_G β} = I + (e^{iβ} − 1)|+⟩⟨+|` with `H_G = −|+⟩⟨+|`.
pub fn diffusion_phase(num_qubits: usize, beta: f64) -> Operator {
    let plus = StateVector::uniform(num_qubits).expect("nonempty register");
    let id = Operator::identity(num_qubits);
    &id + &Operator::projector(&plus).scale(C64::from_polar(1.0, beta) - 1.0)
}

/// `G·O = (I − 2|+⟩⟨+|)(I − 2|S⟩⟨S|)`.
pub fn grover_rotation(instance: &SearchInstance) -> Operator {
    let g = diffusion_phase(instance.num_qubits, std::f64::consts::PI);
    &g * &instance.oracle().reflection()
}

/// Group-commutator approximation of `e^{[H_O, H_G]φ}`.
///
/// With `t = √(|φ|/n)`, one step is `e^{−iH_G t} e^{−iH_O t} e^{iH_G t} e^{iH_O t}`
/// for `φ > 0`; for `φ < 0` the roles of the two generators swap, which reverses
/// the commutator.
pub fn commutator_rotation(instance: &SearchInstance, phi: f64, n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::InvalidParameter("commutator rotation needs n >= 1".into()));
    }
    if !phi.is_finite() {
        return Err(Error::InvalidParameter(format!("rotation parameter {phi}")));
    }
    let l = instance.num_qubits;
    if phi == 0.0 {
        return Ok(Operator::identity(l));
    }
    let oracle = instance.oracle();
    let t = (phi.abs() / n as f64).sqrt();
    let (g, o) = (|x: f64| diffusion_phase(l, x), |x: f64| oracle.phase(x));
    let step = if phi > 0.0 {
        &(&(&g(t) * &o(t)) * &g(-t)) * &o(-t)
    } else {
        &(&(&o(t) * &g(t)) * &o(-t)) * &g(-t)
    };
    let mut out = Operator::identity(l);
    for _ in 0..n {
        out = &out * &step;
    }
    Ok(out)
}

/// `2·arcsin(1/√D)`, the plane rotation angle granted to one oracle call.
pub fn single_call_budget(dim: usize) -> f64 {
    2.0 * (1.0 / (dim as f64).sqrt()).asin()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RotationPrimitive {
    /// Exact: diffusion phase, one oracle phase, diffusion phase.
    #[default]
    SingleCall,
    /// Approximate group commutator with the given number of steps.
    Commutator { steps: usize },
}

fn pauli2() -> [Matrix2<C64>; 3] {
    let (o, i, z) = (c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0));
    [
        Matrix2::new(o, z, z, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(z, o, o, -z),
    ]
}

fn so3(u: &Matrix2<C64>) -> Matrix3<f64> {
    let p = pauli2();
    Matrix3::from_fn(|i, j| 0.5 * (p[i] * u * p[j] * u.adjoint()).trace().re)
}

fn su2_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix2<C64> {
    let p = pauli2();
    let gen = p[0] * c(axis.x, 0.0) + p[1] * c(axis.y, 0.0) + p[2] * c(axis.z, 0.0);
    Matrix2::identity() * c((angle / 2.0).cos(), 0.0) - gen * c(0.0, (angle / 2.0).sin())
}

fn signed_angle(axis: &Vector3<f64>, from: &Vector3<f64>, to: &Vector3<f64>) -> f64 {
    let f = from - axis * axis.dot(from);
    let t = to - axis * axis.dot(to);
    axis.dot(&f.cross(&t)).atan2(f.dot(&t))
}

fn plane_y_rotation(theta: f64) -> Matrix2<C64> {
    let (s, co) = (theta / 2.0).sin_cos();
    Matrix2::new(c(co, 0.0), c(s, 0.0), c(-s, 0.0), c(co, 0.0))
}

/// Angles `(a, g, b)` with `R_n(a) R_z(g) R_n(b) ∝ e^{iθY/2}`, `n` the Bloch vector of `|+⟩` in the plane.
fn single_call_angles(dim: usize, theta: f64) -> (f64, f64, f64) {
    let a = 1.0 / (dim as f64).sqrt();
    let b = (1.0 - a * a).sqrt();
    let n = Vector3::new(2.0 * a * b, 0.0, a * a - b * b);
    let z = Vector3::z();
    let q = plane_y_rotation(theta);
    let rq = so3(&q);
    let u1 = n;
    let u2 = rq.transpose() * n;
    let cos_cone = n.dot(&z);
    let cos_theta = u1.dot(&u2);
    let alpha = cos_cone / (1.0 + cos_theta);
    let beta = (1.0 - 2.0 * cos_cone * cos_cone / (1.0 + cos_theta)).max(0.0).sqrt();
    let w = u1.cross(&u2).normalize();
    let p = (u1 + u2) * alpha + w * beta;
    let b_angle = -signed_angle(&n, &z, &p);
    let a_angle = signed_angle(&n, &z, &(rq * p));
    let m = su2_rotation(&n, -a_angle) * q * su2_rotation(&n, -b_angle);
    let g_angle = 2.0 * m[(1, 1)].arg();
    (a_angle, g_angle, b_angle)
}

/// Plane rotation `e^{iθY/2}` in the basis `(|S⟩, |⊥⟩)`, identity outside the plane.
///
/// Inside the plane the result carries a global phase.
pub fn search_correction(instance: &SearchInstance, theta: f64, primitive: RotationPrimitive) -> Result<Operator> {
    let l = instance.num_qubits;
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("rotation angle {theta}")));
    }
    if theta == 0.0 {
        return Ok(Operator::identity(l));
    }
    let dim = instance.dimension();
    match primitive {
        RotationPrimitive::SingleCall => {
            let budget = single_call_budget(dim);
            if theta.abs() > budget * (1.0 + 1e-9) {
                return Err(Error::AngleOutOfBudget { angle: theta, budget });
            }
            let (a, g, b) = single_call_angles(dim, theta);
            // R_n(φ) ∝ e^{−iH_G(−φ)} and R_z(φ) ∝ e^{−iH_O(−φ)}
            let oracle = instance.oracle();
            Ok(&(&diffusion_phase(l, -a) * &oracle.phase(-g)) * &diffusion_phase(l, -b))
        }
        RotationPrimitive::Commutator { steps } => {
            // e^{[H_O,H_G]φ} acts in the plane as e^{i s φ Y}, s = √(D−1)/D
            let s = ((dim - 1) as f64).sqrt() / dim as f64;
            commutator_rotation(instance, theta / (2.0 * s), steps)
        }
    }
}

/// Splits `theta` into equal single-call pieces that each fit the budget.
pub fn search_correction_composed(instance: &SearchInstance, theta: f64) -> Result<Operator> {
    let budget = single_call_budget(instance.dimension());
    let pieces = ((theta.abs() / budget) - 1e-12).ceil().max(1.0) as usize;
    let piece = search_correction(instance, theta / pieces as f64, RotationPrimitive::SingleCall)?;
    let mut out = Operator::identity(instance.num_qubits);
    for _ in 0..pieces {
        out = &out * &piece;
    }
    Ok(out)
}

fn reduced_model() -> Result<ModelHamiltonian> {
    ModelHamiltonian::new(vec![HamiltonianTerm::new(
        "|1><1|",
        1,
        vec![PauliString::identity(0.5), PauliString::single(-0.5, 0, Pauli::Z)],
    )?])
}

/// Bloch angles `[θ₀, θ₁]` of the plane corrections at `epsilon`.
///
/// In the basis `(|S⟩, |⊥⟩)` the shifted search term is `|1⟩⟨1|` and the target is
/// `|+⟩`, so the angles follow from a single-qubit problem that never involves `S`.
pub fn reduced_angles(epsilon: f64, backend: Backend, bound: f64) -> Result<[f64; 2]> {
    let set = MeasurementSet::with_bound(&reduced_model()?, epsilon, backend, bound)?;
    let plus = StateVector::product("+")?;
    let mut out = [0.0; 2];
    for (b, slot) in out.iter_mut().enumerate() {
        let m = set.sequence_operator(&OutcomeBitstring::from_index(b, 1))?;
        let u = correction_span_rotation(&m, &plus)?;
        *slot = bloch_y_angle(&u).ok_or_else(|| Error::InvalidParameter("plane correction is not a Y rotation".into()))?;
    }
    Ok(out)
}

/// The ε at which `|θ₀(ε)|` equals `angle`, by bisection under the positivity bound.
pub fn epsilon_for_angle(angle: f64, backend: Backend) -> Result<f64> {
    let bound = crate::measurement::POSITIVITY_BOUND;
    let theta0 = |eps: f64| reduced_angles(eps, backend, bound).map(|a| a[0].abs());
    let (mut lo, mut hi) = (1e-9, bound);
    if !(angle > theta0(lo)? && angle < theta0(hi)?) {
        return Err(Error::InvalidParameter(format!("angle {angle} not reachable below the positivity limit")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if theta0(mid)? < angle {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Plane corrections built from oracle and diffusion phases, angles from [`reduced_angles`].
#[derive(Clone, Debug)]
pub struct SearchCorrector {
    pub instance: SearchInstance,
    pub primitive: RotationPrimitive,
}

impl CorrectionSolver for SearchCorrector {
    fn name(&self) -> &str {
        match self.primitive {
            RotationPrimitive::SingleCall => "oracle",
            RotationPrimitive::Commutator { .. } => "oracle-commutator",
        }
    }

    fn solve(&self, set: &MeasurementSet, k: &OutcomeBitstring, _mk: &Operator, _target: &StateVector) -> Result<SolvedCorrection> {
        if k.len() != 1 {
            return Err(Error::BitstringLength { expected: 1, found: k.len() });
        }
        let angles = reduced_angles(set.epsilon(), set.backend(), set.bound())?;
        let theta = angles[usize::from(k.bits()[0])];
        let unitary = search_correction(&self.instance, theta, self.primitive)?;
        Ok(SolvedCorrection { unitary, angle: Some(theta) })
    }
}

/// `H = −|S⟩⟨S| + I`, target `(|S⟩ + |⊥⟩)/√2`, start `|+⟩`.
pub fn search_model(instance: &SearchInstance) -> Result<Preset> {
    let oracle = instance.oracle();
    let term = HamiltonianTerm::new("-|S><S|", instance.num_qubits, oracle.hamiltonian_strings().to_vec())?;
    let model = ModelHamiltonian::new(vec![term])?;
    let v = search_correction_composed(instance, -std::f64::consts::FRAC_PI_2)?;
    Ok(Preset {
        model,
        target: TargetState {
            reference: Reference::FixedPoint(OutcomeBitstring::zeros(1)),
            v,
            description: "plane rotation by -pi/2 applied to |E0(0)>".into(),
        },
        initial_state: StateVector::uniform(instance.num_qubits)?,
        correction: CorrectionMethod::Custom(Arc::new(SearchCorrector {
            instance: instance.clone(),
            primitive: RotationPrimitive::SingleCall,
        })),
        observables: vec![("solution".into(), oracle.projector().clone())],
    })
}
