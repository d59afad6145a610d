use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{materialize, unitary_exp, Operator, Pauli, PauliString, StateVector};

use super::{stabilization_residual, ANSATZ_RESIDUAL};

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzOptions {
    /// Random restarts tried after the all-zero start.
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        AnsatzOptions { restarts: 8, max_iterations: 400, seed: 7 }
    }
}

/// Site-dependent angles; `chi[n]` couples `Zₙ Yₙ₊₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzParams {
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
}

impl AnsatzParams {
    pub fn zeros(num_qubits: usize) -> Self {
        AnsatzParams {
            theta: vec![0.0; num_qubits],
            chi: vec![0.0; num_qubits.saturating_sub(1)],
            xi: vec![0.0; num_qubits],
        }
    }

    fn from_flat(x: &[f64], num_qubits: usize) -> Self {
        let l = num_qubits;
        AnsatzParams {
            theta: x[..l].to_vec(),
            chi: x[l..2 * l - 1].to_vec(),
            xi: x[2 * l - 1..].to_vec(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.chi).chain(&self.xi).cloned().collect()
    }
}

#[derive(Clone, Debug)]
pub struct AnsatzSolution {
    pub unitary: Operator,
    pub params: AnsatzParams,
    pub residual: f64,
}

struct Generators {
    y: Vec<Operator>,
    zy: Vec<Operator>,
}

impl Generators {
    fn new(l: usize) -> Result<Self> {
        let y = (0..l)
            .map(|n| materialize(&PauliString::single(1.0, n, Pauli::Y), l))
            .collect::<Result<_>>()?;
        let zy = (0..l - 1)
            .map(|n| materialize(&PauliString::new(1.0, [(n, Pauli::Z), (n + 1, Pauli::Y)]), l))
            .collect::<Result<_>>()?;
        Ok(Generators { y, zy })
    }

    fn exp(ops: &[Operator], coeffs: &[f64], l: usize) -> Result<Operator> {
        let mut g = Operator::zeros(l);
        for (op, &a) in ops.iter().zip(coeffs) {
            g = &g + &op.scale_real(a);
        }
        // e^{iG}
        unitary_exp(&g, -1.0)
    }

    fn unitary(&self, p: &AnsatzParams, l: usize) -> Result<Operator> {
        let a = Self::exp(&self.y, &p.theta, l)?;
        let b = Self::exp(&self.zy, &p.chi, l)?;
        let c = Self::exp(&self.y, &p.xi, l)?;
        Ok(&(&a * &b) * &c)
    }
}

/// `e^{iΣθₙYₙ} e^{iΣχₙZₙYₙ₊₁} e^{iΣξₙYₙ}`.
pub fn ansatz_unitary(params: &AnsatzParams, num_qubits: usize) -> Result<Operator> {
    if num_qubits < 2
        || params.theta.len() != num_qubits
        || params.xi.len() != num_qubits
        || params.chi.len() != num_qubits - 1
    {
        return Err(Error::InvalidParameter("ansatz parameter count does not match the chain".into()));
    }
    Generators::new(num_qubits)?.unitary(params, num_qubits)
}

/// Fits the ansatz so that `U M |T⟩ ∝ |T⟩`, by BFGS from several starts.
///
/// A residual above the target is not an error; it is returned for the caller to record.
pub fn solve_tfim_ansatz(m: &Operator, target: &StateVector, num_qubits: usize, opts: &AnsatzOptions) -> Result<AnsatzSolution> {
    if num_qubits < 2 || m.num_qubits() != num_qubits || target.num_qubits() != num_qubits {
        return Err(Error::InvalidParameter(format!("ansatz needs a chain of at least 2 qubits, got {num_qubits}")));
    }
    let gens = Generators::new(num_qubits)?;
    let objective = |x: &[f64]| -> f64 {
        let p = AnsatzParams::from_flat(x, num_qubits);
        gens.unitary(&p, num_qubits)
            .and_then(|u| stabilization_residual(&u, m, target))
            .unwrap_or(f64::INFINITY)
    };
    let dim = 3 * num_qubits - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in 0..=opts.restarts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; dim]
        } else {
            (0..dim).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI) / 2.0).collect()
        };
        let (x, fx) = bfgs(&objective, x0, opts.max_iterations);
        if best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x, fx));
        }
        if best.as_ref().is_some_and(|(_, b)| *b <= ANSATZ_RESIDUAL * 1e-4) {
            break;
        }
    }
    let (x, _) = best.expect("at least one start");
    let params = AnsatzParams::from_flat(&x, num_qubits);
    let unitary = gens.unitary(&params, num_qubits)?;
    let residual = stabilization_residual(&unitary, m, target)?;
    Ok(AnsatzSolution { unitary, params, residual })
}

fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> DVector<f64> {
    let h = 1e-6;
    let mut xp = x.to_vec();
    DVector::from_fn(x.len(), |i, _| {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        (fp - fm) / (2.0 * h)
    })
}

fn bfgs(f: &impl Fn(&[f64]) -> f64, x0: Vec<f64>, max_iterations: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let mut fx = f(x.as_slice());
    let mut g = gradient(f, x.as_slice());
    let mut h = DMatrix::<f64>::identity(n, n);
    for _ in 0..max_iterations {
        if fx <= 1e-15 || g.norm() < 1e-12 {
            break;
        }
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            p = -g.clone();
            slope = g.dot(&p);
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let trial = &x + &p * step;
            let ft = f(trial.as_slice());
            if ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else { break };
        let g_new = gradient(f, x_new.as_slice());
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-18 {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(n, n);
            let left = &id - (&s * y.transpose()) * rho;
            let right = &id - (&y * s.transpose()) * rho;
            h = &left * &h * &right + (&s * s.transpose()) * rho;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    (x.as_slice().to_vec(), fx)
}
