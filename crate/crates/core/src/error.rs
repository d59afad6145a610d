use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length {0} is not a positive power of two")]
    NotPowerOfTwo(usize),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("expectation value has imaginary part {0:.3e}")]
    ComplexExpectation(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("negative eigenvalue {0:.6e} under square root; epsilon too large for the term's spectral range")]
    NegativeEigenvalue(f64),

    #[error("invalid epsilon {0}")]
    InvalidEpsilon(f64),

    #[error("positivity violated: M0 has eigenvalue {eigenvalue:.6e} at epsilon {epsilon}")]
    PositivityViolated { eigenvalue: f64, epsilon: f64 },

    #[error("epsilon {epsilon} too large: epsilon * spectral_max = {product:.4} exceeds {bound}")]
    EpsilonTooLarge { epsilon: f64, product: f64, bound: f64 },

    #[error("outcome probability {0} outside [0, 1]; broken measurement pair")]
    BrokenPair(f64),

    #[error("degenerate fixed point: |lambda1|/|lambda2| = {ratio:.9} (gap {gap:.3e})")]
    DegenerateFixedPoint { ratio: f64, gap: f64 },

    #[error("fixed point iteration did not converge (defect {0:.3e})")]
    FixedPointDefect(f64),

    #[error("target annihilated by sequence operator")]
    AnnihilatedTarget,

    #[error("bitstring has {found} bits but the model has {expected} terms")]
    BitstringLength { expected: usize, found: usize },

    #[error("model needs at least one term")]
    EmptyModel,

    #[error("correction residual {residual:.3e} for outcome {bits} exceeds {threshold:.1e}")]
    ResidualTooLarge { bits: String, residual: f64, threshold: f64 },

    #[error("rotation angle {angle:.6} exceeds the single-call budget {budget:.6}")]
    AngleOutOfBudget { angle: f64, budget: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite amplitude at step {step} (seed {seed})")]
    NonFinite { step: usize, seed: u64 },

    #[error("insufficient points for fit: {found} in window, need {needed}")]
    InsufficientPoints { found: usize, needed: usize },
}
