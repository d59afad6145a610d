//! Two-outcome weak measurements approximating `e^{∓εH}/√2`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, hermitian_sqrt, materialize, materialize_sum, unitary_exp, Operator, Pauli,
    PauliString, StateVector, C64,
};

/// Largest allowed `ε·spectral_max` unless a caller opts into a looser bound.
pub const DEFAULT_EPSILON_BOUND: f64 = 0.5;

/// Loosest usable bound: `M₀` stays strictly positive.
pub const POSITIVITY_BOUND: f64 = 1.0 - 1e-9;

/// One summand of a model Hamiltonian, shifted so its smallest eigenvalue is 0.
#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    label: String,
    strings: Vec<PauliString>,
    shift: f64,
    spectral_max: f64,
    matrix: Operator,
}

impl HamiltonianTerm {
    pub fn new(label: impl Into<String>, num_qubits: usize, strings: Vec<PauliString>) -> Result<Self> {
        let raw = materialize_sum(&strings, num_qubits)?;
        let eig = eigh(&raw)?;
        let shift = -eig.values[0];
        let spectral_max = eig.values[eig.values.len() - 1] + shift;
        let matrix = &raw + &Operator::identity(num_qubits).scale_real(shift);
        Ok(HamiltonianTerm { label: label.into(), strings, shift, spectral_max, matrix })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// Identity offset added to the Pauli sum.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Largest eigenvalue of the shifted operator.
    pub fn spectral_max(&self) -> f64 {
        self.spectral_max
    }

    pub fn num_qubits(&self) -> usize {
        self.matrix.num_qubits()
    }

    /// Shifted operator (positive semidefinite, minimum eigenvalue 0).
    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    /// The Pauli sum without the shift.
    pub fn unshifted(&self) -> Operator {
        &self.matrix - &Operator::identity(self.num_qubits()).scale_real(self.shift)
    }
}

fn check_epsilon(term: &HamiltonianTerm, epsilon: f64, bound: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let product = epsilon * term.spectral_max;
    if product >= 1.0 {
        return Err(Error::PositivityViolated { eigenvalue: 1.0 - product, epsilon });
    }
    if product > bound {
        return Err(Error::EpsilonTooLarge { epsilon, product, bound });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct KrausPair {
    m0: Operator,
    m1: Operator,
    epsilon: f64,
    term: Arc<HamiltonianTerm>,
}

/// `M₀ = (I − εH)/√2`, `M₁ = √(I − M₀†M₀)`, with `ε·spectral_max ≤ 0.5`.
pub fn build_kraus_pair(term: &Arc<HamiltonianTerm>, epsilon: f64) -> Result<KrausPair> {
    build_kraus_pair_with_bound(term, epsilon, DEFAULT_EPSILON_BOUND)
}

/// As [`build_kraus_pair`] with a caller-chosen bound on `ε·spectral_max`
/// (anything below 1 keeps `M₀` positive).
pub fn build_kraus_pair_with_bound(term: &Arc<HamiltonianTerm>, epsilon: f64, bound: f64) -> Result<KrausPair> {
    check_epsilon(term, epsilon, bound)?;
    if epsilon == 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let n = term.num_qubits();
    let id = Operator::identity(n);
    let m0 = (&id - &term.matrix.scale_real(epsilon)).scale_real(std::f64::consts::FRAC_1_SQRT_2);
    let m1 = hermitian_sqrt(&(&id - &(&m0.adjoint() * &m0)).hermitian_part())?;
    Ok(KrausPair { m0, m1, epsilon, term: Arc::clone(term) })
}

impl KrausPair {
    pub fn m0(&self) -> &Operator {
        &self.m0
    }

    pub fn m1(&self) -> &Operator {
        &self.m1
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn term(&self) -> &Arc<HamiltonianTerm> {
        &self.term
    }

    pub fn operator(&self, outcome: u8) -> &Operator {
        if outcome == 0 {
            &self.m0
        } else {
            &self.m1
        }
    }

    /// `‖M₀†M₀ + M₁†M₁ − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(&self.m0, &self.m1)
    }

    /// Replaces `M₁`; used by negative-control checks.
    pub fn with_m1(mut self, m1: Operator) -> Self {
        self.m1 = m1;
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<OutcomeRecord> {
        sample_branches([&self.m0, &self.m1], psi, rng)
    }
}

pub fn completeness_defect(m0: &Operator, m1: &Operator) -> f64 {
    let sum = &(&m0.adjoint() * m0) + &(&m1.adjoint() * m1);
    sum.distance(&Operator::identity(m0.num_qubits()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    pub outcome: u8,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Born-rule draw between two branch operators, consuming one uniform number.
pub fn sample<R: Rng + ?Sized>(pair: &KrausPair, psi: &StateVector, rng: &mut R) -> Result<OutcomeRecord> {
    pair.sample(psi, rng)
}

fn sample_branches<R: Rng + ?Sized>(ops: [&Operator; 2], psi: &StateVector, rng: &mut R) -> Result<OutcomeRecord> {
    let v0 = ops[0].apply_raw(psi.amplitudes());
    let p0 = v0.norm_squared();
    let u: f64 = rng.random();
    collapse(p0, u, v0, || ops[1].apply_raw(psi.amplitudes()))
}

fn collapse(
    p0: f64,
    u: f64,
    v0: DVector<C64>,
    branch1: impl FnOnce() -> DVector<C64>,
) -> Result<OutcomeRecord> {
    if !p0.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&p0) {
        return Err(Error::BrokenPair(p0));
    }
    if u < p0 {
        return Ok(OutcomeRecord { outcome: 0, probability: p0, post_state: StateVector::new(v0)? });
    }
    let v1 = branch1();
    let p1 = v1.norm_squared();
    Ok(OutcomeRecord { outcome: 1, probability: p1, post_state: StateVector::new(v1)? })
}

/// System coupled to one pointer qubit through `e^{−i(H⊗Y)ε}`.
///
/// The pointer is prepared in `|P₊⟩ = (|P₀⟩ + |P₁⟩)/√2` and read out in the
/// `{|P₀⟩, |P₁⟩}` basis. It is the least significant qubit of the joint index.
#[derive(Clone, Debug)]
pub struct PointerCoupling {
    unitary: Operator,
    branches: [Operator; 2],
    epsilon: f64,
}

impl PointerCoupling {
    pub fn new(term: &HamiltonianTerm, epsilon: f64) -> Result<Self> {
        Self::new_with_bound(term, epsilon, DEFAULT_EPSILON_BOUND)
    }

    pub fn new_with_bound(term: &HamiltonianTerm, epsilon: f64, bound: f64) -> Result<Self> {
        check_epsilon(term, epsilon, bound)?;
        Self::with_generator(&term.matrix, epsilon)
    }

    /// Coupling through an arbitrary Hermitian generator, no shift applied.
    pub fn with_generator(h: &Operator, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let y = materialize(&PauliString::single(1.0, 0, Pauli::Y), 1)?;
        let unitary = unitary_exp(&h.kron(&y), epsilon)?;
        let d = h.dim();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let branch = |b: usize| {
            let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
                let u = unitary.matrix();
                (u[(2 * i + b, 2 * j)] + u[(2 * i + b, 2 * j + 1)]) * s
            });
            Operator::new(m)
        };
        let branches = [branch(0)?, branch(1)?];
        Ok(PointerCoupling { unitary, branches, epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Joint unitary on system ⊗ pointer.
    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    /// Effective system operator `⟨P_b| U |P₊⟩`.
    pub fn operator(&self, outcome: u8) -> &Operator {
        &self.branches[usize::from(outcome != 0)]
    }

    /// Entangles with the pointer, then projects the pointer.
    pub fn sample<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<OutcomeRecord> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pointer = StateVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])?;
        let joint = self.unitary.apply_raw(psi.tensor(&pointer).amplitudes());
        let half = psi.dim();
        let part = |b: usize| DVector::from_fn(half, |i, _| joint[2 * i + b]);
        let v0 = part(0);
        let p0 = v0.norm_squared();
        let u: f64 = rng.random();
        collapse(p0, u, v0, || part(1))
    }
}

/// Pointer-based draw for a single term, building the coupling on the fly.
pub fn pointer_sample<R: Rng + ?Sized>(
    term: &HamiltonianTerm,
    epsilon: f64,
    psi: &StateVector,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    PointerCoupling::new(term, epsilon)?.sample(psi, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Kraus,
    Pointer,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Kraus => "kraus",
            Backend::Pointer => "pointer",
        })
    }
}

/// A term's measurement under either backend.
#[derive(Clone, Debug)]
pub enum Measurement {
    Kraus(KrausPair),
    Pointer(PointerCoupling),
}

impl Measurement {
    pub fn build(term: &Arc<HamiltonianTerm>, epsilon: f64, backend: Backend, bound: f64) -> Result<Self> {
        Ok(match backend {
            Backend::Kraus => Measurement::Kraus(build_kraus_pair_with_bound(term, epsilon, bound)?),
            Backend::Pointer => {
                if epsilon == 0.0 {
                    return Err(Error::InvalidEpsilon(epsilon));
                }
                Measurement::Pointer(PointerCoupling::new_with_bound(term, epsilon, bound)?)
            }
        })
    }

    pub fn operator(&self, outcome: u8) -> &Operator {
        match self {
            Measurement::Kraus(p) => p.operator(outcome),
            Measurement::Pointer(p) => p.operator(outcome),
        }
    }

    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(self.operator(0), self.operator(1))
    }

    pub fn sample<R: Rng + ?Sized>(&self, psi: &StateVector, rng: &mut R) -> Result<OutcomeRecord> {
        match self {
            Measurement::Kraus(p) => p.sample(psi, rng),
            Measurement::Pointer(p) => p.sample(psi, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity, matrix_exp_hermitian};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Always draws `u = 0`, selecting outcome 0 whenever it has weight.
    struct ZeroRng;

    impl rand::RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0);
        }
    }

    fn single_qubit_term() -> Arc<HamiltonianTerm> {
        Arc::new(
            HamiltonianTerm::new(
                "h",
                1,
                vec![PauliString::single(-1.0, 0, Pauli::Z), PauliString::identity(1.0)],
            )
            .unwrap(),
        )
    }

    #[test]
    fn single_qubit_term_has_zero_shift() {
        let t = single_qubit_term();
        assert!(t.shift().abs() < 1e-14);
        assert!((t.spectral_max() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_qubit_m0_and_m1() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m0 = Operator::diagonal(&[s, 0.8 * s]).unwrap();
        assert!(pair.m0().distance(&m0) < 1e-15);
        let m1 = Operator::diagonal(&[0.5f64.sqrt(), 0.68f64.sqrt()]).unwrap();
        assert!(pair.m1().distance(&m1) < 1e-14);
        assert!(pair.completeness_defect() < 1e-14);
    }

    #[test]
    fn too_large_epsilon_is_rejected() {
        let t = single_qubit_term();
        assert!(matches!(
            build_kraus_pair(&t, 0.3),
            Err(Error::EpsilonTooLarge { .. })
        ));
        let err = build_kraus_pair_with_bound(&t, 0.6, 2.0).unwrap_err();
        match err {
            Error::PositivityViolated { eigenvalue, .. } => assert!((eigenvalue + 0.2).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_kraus_pair_with_bound(&t, 0.4, 0.9).is_ok());
        assert!(matches!(build_kraus_pair(&t, 0.0), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(build_kraus_pair(&t, f64::NAN), Err(Error::InvalidEpsilon(_))));
    }

    #[test]
    fn sample_probabilities_on_basis_states() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r0 = pair.sample(&StateVector::product("0").unwrap(), &mut rng).unwrap();
        if r0.outcome == 0 {
            assert!((r0.probability - 0.5).abs() < 1e-15);
        } else {
            assert!((r0.probability - 0.5).abs() < 1e-15);
        }
        let one = StateVector::product("1").unwrap();
        let p0 = pair.m0().apply_raw(one.amplitudes()).norm_squared();
        assert!((p0 - 0.32).abs() < 1e-15);
    }

    #[test]
    fn outcome_zero_post_state_on_plus() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.1).unwrap();
        let plus = StateVector::product("+").unwrap();
        // u = 0 always selects outcome 0 when p0 > 0
        let mut rng = ZeroRng;
        let r = pair.sample(&plus, &mut rng).unwrap();
        assert_eq!(r.outcome, 0);
        let a = r.post_state.amplitudes();
        assert!((a[0].re - 0.7809).abs() < 1e-4);
        assert!((a[1].re - 0.6247).abs() < 1e-4);
        assert!((a[0].re - 1.0 / 1.64f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sample_consumes_one_draw() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.1).unwrap();
        let plus = StateVector::product("+").unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        pair.sample(&plus, &mut a).unwrap();
        let _: f64 = b.random();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn broken_pair_is_detected() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.1).unwrap();
        let broken = KrausPair { m0: pair.m0().scale_real(2.0), ..pair };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = broken.sample(&StateVector::product("0").unwrap(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::BrokenPair(_)));
    }

    #[test]
    fn pointer_branch_matches_cosine_amplitudes() {
        let eps = 0.1;
        let minus_z = materialize(&PauliString::single(-1.0, 0, Pauli::Z), 1).unwrap();
        let coupling = PointerCoupling::with_generator(&minus_z, eps).unwrap();
        let (alpha, beta) = (0.6, 0.8);
        let psi = StateVector::from_real(&[alpha, beta]).unwrap();
        let mut rng = ZeroRng;
        let r = coupling.sample(&psi, &mut rng).unwrap();
        assert_eq!(r.outcome, 0);
        let q = std::f64::consts::FRAC_PI_4;
        let want = StateVector::from_real(&[alpha * (q - eps).cos(), beta * (q + eps).cos()]).unwrap();
        assert!((fidelity(&r.post_state, &want).unwrap() - 1.0).abs() < 1e-14);
        let p0 = (alpha * (q - eps).cos()).powi(2) + (beta * (q + eps).cos()).powi(2);
        assert!((r.probability - p0).abs() < 1e-14);
    }

    #[test]
    fn pointer_without_coupling_is_trivial() {
        let coupling = PointerCoupling::new(&single_qubit_term(), 0.0).unwrap();
        let psi = StateVector::from_real(&[0.3, -0.7]).unwrap();
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = coupling.sample(&psi, &mut rng).unwrap();
            assert!((r.probability - 0.5).abs() < 1e-15);
            assert!((fidelity(&r.post_state, &psi).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pointer_and_kraus_backends_agree() {
        let term = single_qubit_term();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for eps in [0.1, 0.05] {
            let pair = build_kraus_pair(&term, eps).unwrap();
            let pointer = PointerCoupling::new(&term, eps).unwrap();
            for _ in 0..50 {
                let psi = StateVector::random(1, &mut rng).unwrap();
                for b in 0..2u8 {
                    let vk = pair.operator(b).apply_raw(psi.amplitudes());
                    let vp = pointer.operator(b).apply_raw(psi.amplitudes());
                    let dp = (vk.norm_squared() - vp.norm_squared()).abs();
                    assert!(dp <= 5.0 * eps * eps, "eps {eps} outcome {b}: dp {dp}");
                    let f = fidelity(&StateVector::new(vk).unwrap(), &StateVector::new(vp).unwrap()).unwrap();
                    assert!(f >= 1.0 - 10.0 * eps * eps);
                }
            }
        }
    }

    #[test]
    fn pointer_sample_matches_branch_operators() {
        let term = single_qubit_term();
        let coupling = PointerCoupling::new(&term, 0.1).unwrap();
        let psi = StateVector::from_real(&[0.3, 0.9]).unwrap();
        for seed in 0..16 {
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            let r = coupling.sample(&psi, &mut a).unwrap();
            let s = Measurement::Pointer(coupling.clone());
            let v = s.operator(r.outcome).apply_raw(psi.amplitudes());
            assert!((v.norm_squared() - r.probability).abs() < 1e-14);
            let r2 = pointer_sample(&term, 0.1, &psi, &mut b).unwrap();
            assert_eq!(r, r2);
        }
        assert!(Measurement::Pointer(coupling).completeness_defect() < 1e-12);
    }

    #[test]
    fn exponential_approximation_is_second_order() {
        let term = single_qubit_term();
        let h = term.matrix();
        let errs = |eps: f64| {
            let pair = build_kraus_pair(&term, eps).unwrap();
            let r2 = std::f64::consts::SQRT_2;
            let e0 = pair.m0().scale_real(r2).spectral_distance(&matrix_exp_hermitian(h, eps).unwrap());
            let e1 = pair.m1().scale_real(r2).spectral_distance(&matrix_exp_hermitian(h, -eps).unwrap());
            (e0, e1)
        };
        for eps in [0.04, 0.02, 0.01] {
            let (a0, a1) = errs(eps);
            let (b0, b1) = errs(eps / 2.0);
            assert!(a0 <= 4.0 * eps * eps);
            for ratio in [a0 / b0, a1 / b1] {
                assert!((3.4..=4.6).contains(&ratio), "eps {eps}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn probabilities_stay_near_one_half() {
        let pair = build_kraus_pair(&single_qubit_term(), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let psi = StateVector::random(1, &mut rng).unwrap();
            let p0 = pair.m0().apply_raw(psi.amplitudes()).norm_squared();
            assert!((p0 - 0.5).abs() <= 0.02);
        }
    }

    fn arb_term() -> impl Strategy<Value = (usize, Vec<(f64, Vec<(usize, usize)>)>)> {
        (1usize..=3).prop_flat_map(|n| {
            let string = (-2.0f64..2.0, prop::collection::vec((0..n, 0usize..3), 0..=n));
            (Just(n), prop::collection::vec(string, 1..5))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_terms_give_complete_pairs((n, raw) in arb_term(), frac in 0.01f64..0.5) {
            let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
            let strings = raw.iter()
                .map(|(coef, fs)| PauliString::new(*coef, fs.iter().map(|&(q, p)| (q, paulis[p]))))
                .collect();
            let term = Arc::new(HamiltonianTerm::new("r", n, strings).unwrap());
            let ev = eigh(term.matrix()).unwrap();
            prop_assert!(ev.values[0] >= -1e-10);
            prop_assert!((ev.values[ev.values.len() - 1] - term.spectral_max()).abs() <= 1e-10);
            prop_assume!(term.spectral_max() > 1e-9);
            let eps = frac / term.spectral_max();
            let pair = build_kraus_pair(&term, eps).unwrap();
            prop_assert!(pair.completeness_defect() <= 1e-10);
            prop_assert!(pair.m0().is_hermitian(1e-12));
            prop_assert!(eigh(pair.m0()).unwrap().values[0] >= 0.0);
        }
    }
}
