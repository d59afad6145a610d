//! Rotations of the orthogonal complement of the target, tuned so the
//! outcome-averaged dynamics contract onto it quickly.
//!
//! Each correction `U_k = W_k S_k` keeps the span rotation `S_k` and appends
//! `W_k = e^{iK_k}` with `K_k` supported on the complement of `|T⟩`, so
//! `W_k|T⟩ = |T⟩` and the stabilization condition is untouched. The `K_k` are
//! chosen by Adam ascent on the mean fidelity after `horizon` steps from the
//! maximally mixed state.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, Operator, StateVector, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringOptions {
    pub horizon: usize,
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions { horizon: 400, iterations: 600, learning_rate: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringReport {
    /// Mean fidelity at the horizon with `W_k = I`.
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
}

type M = DMatrix<C64>;

struct Exp {
    w: M,
    vecs: M,
    vals: Vec<f64>,
}

fn exp_i(k: &M) -> Result<Exp> {
    let op = Operator::new(k.clone())?;
    let eig = eigh(&op)?;
    let w = eig.reconstruct(|x| C64::from_polar(1.0, x));
    Ok(Exp { w, vecs: eig.vectors, vals: eig.values })
}

/// Mean target fidelity after `horizon` steps and its gradient in each `K_k`.
fn objective_and_gradient(a: &[M], k: &[M], target: &M, horizon: usize, want_grad: bool) -> Result<(f64, Vec<M>)> {
    let d = target.nrows();
    let exps = k.iter().map(exp_i).collect::<Result<Vec<_>>>()?;
    let cs: Vec<M> = exps.iter().zip(a).map(|(e, a)| &e.w * a).collect();
    let proj = target * target.adjoint();

    let mut rhos = Vec::with_capacity(horizon);
    let mut rho = M::identity(d, d).unscale(d as f64);
    for _ in 0..horizon {
        let next = cs.iter().fold(M::zeros(d, d), |acc, cm| acc + cm * &rho * cm.adjoint());
        if want_grad {
            rhos.push(rho);
        }
        rho = next;
    }
    let f = (target.adjoint() * &rho * target)[(0, 0)].re;
    if !want_grad {
        return Ok((f, Vec::new()));
    }

    let mut gammas = vec![M::zeros(d, d); a.len()];
    let mut e = proj.clone();
    for rho_t in rhos.iter().rev() {
        for (j, (am, ex)) in a.iter().zip(&exps).enumerate() {
            gammas[j] += am * rho_t * am.adjoint() * ex.w.adjoint() * &e;
        }
        e = cs.iter().fold(M::zeros(d, d), |acc, cm| acc + cm.adjoint() * &e * cm);
    }

    let perp = M::identity(d, d) - &proj;
    let grads = gammas
        .iter()
        .zip(&exps)
        .map(|(gamma, ex)| {
            let g = ex.vecs.adjoint() * gamma * &ex.vecs;
            let psi = M::from_fn(d, d, |p, q| {
                let (lp, lq) = (ex.vals[p], ex.vals[q]);
                let phi = if (lp - lq).abs() > 1e-9 {
                    (C64::from_polar(1.0, lp) - C64::from_polar(1.0, lq)) / (lp - lq)
                } else {
                    c(0.0, 1.0) * C64::from_polar(1.0, 0.5 * (lp + lq))
                };
                phi * g[(q, p)]
            });
            let omega = &ex.vecs * psi.transpose() * ex.vecs.adjoint();
            let grad = &omega + omega.adjoint();
            &perp * grad * &perp
        })
        .collect();
    Ok((f, grads))
}

/// Returns `W_k` for each `products[k] = S_k M_k`, plus the objective trace.
pub fn optimize_steering(products: &[Operator], target: &StateVector, opts: &SteeringOptions) -> Result<(Vec<Operator>, SteeringReport)> {
    if opts.horizon == 0 {
        return Err(Error::InvalidParameter("steering horizon must be at least 1".into()));
    }
    let d = target.dim();
    let a: Vec<M> = products.iter().map(|p| p.matrix().clone()).collect();
    let t = M::from_column_slice(d, 1, target.amplitudes().as_slice());
    let perp = M::identity(d, d) - &t * t.adjoint();

    let mut k = vec![M::zeros(d, d); a.len()];
    let mut m1 = vec![M::zeros(d, d); a.len()];
    let mut m2 = vec![DMatrix::<f64>::zeros(2 * d, d); a.len()];
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-12);

    let (f0, _) = objective_and_gradient(&a, &k, &t, opts.horizon, false)?;
    let mut best = (f0, k.clone());
    for it in 1..=opts.iterations {
        let (f, grads) = objective_and_gradient(&a, &k, &t, opts.horizon, true)?;
        if f > best.0 {
            best = (f, k.clone());
        }
        for j in 0..k.len() {
            for p in 0..d {
                for q in 0..d {
                    let g = grads[j][(p, q)];
                    m1[j][(p, q)] = m1[j][(p, q)] * b1 + g * (1.0 - b1);
                    m2[j][(2 * p, q)] = m2[j][(2 * p, q)] * b2 + g.re * g.re * (1.0 - b2);
                    m2[j][(2 * p + 1, q)] = m2[j][(2 * p + 1, q)] * b2 + g.im * g.im * (1.0 - b2);
                    let mh = m1[j][(p, q)] / (1.0 - b1.powi(it as i32));
                    let vr = m2[j][(2 * p, q)] / (1.0 - b2.powi(it as i32));
                    let vi = m2[j][(2 * p + 1, q)] / (1.0 - b2.powi(it as i32));
                    k[j][(p, q)] += c(mh.re / (vr.sqrt() + eps), mh.im / (vi.sqrt() + eps)) * opts.learning_rate;
                }
            }
            k[j] = &perp * (&k[j] + k[j].adjoint()).scale(0.5) * &perp;
        }
    }
    let (f_last, _) = objective_and_gradient(&a, &k, &t, opts.horizon, false)?;
    if f_last > best.0 {
        best = (f_last, k);
    }
    let ws = best
        .1
        .iter()
        .map(|km| Operator::new(exp_i(km)?.w))
        .collect::<Result<Vec<_>>>()?;
    let report = SteeringReport { initial_objective: f0, final_objective: best.0, iterations: opts.iterations };
    Ok((ws, report))
}
