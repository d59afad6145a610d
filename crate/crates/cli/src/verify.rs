//! `mite verify`: invariant checks over every module at a fixed seed.

use std::fmt;

use mite_core::linalg::{matrix_exp_hermitian, spectral_norm};
use mite_core::measurement::{build_kraus_pair, Backend, Measurement, DEFAULT_EPSILON_BOUND};
use mite_core::models::{grover_rotation, search_model, single_qubit_model, tfim_model, Preset, SearchInstance};
use mite_core::stabilizer::build_table;
use mite_core::{
    fidelity, signed_hamiltonian, MeasurementSet, OutcomeBitstring, StateVector, TrajectoryStepper, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed;

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Scales one `M₁` by 1.01 so the completeness check must fail.
    pub corrupt_kraus: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{:<width$}  {status}  {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn presets() -> mite_core::Result<Vec<(&'static str, Preset)>> {
    Ok(vec![
        ("single_qubit", single_qubit_model()?),
        ("tfim L=2", tfim_model(2, 1.0, 1.0)?),
        ("search D=8", search_model(&SearchInstance::from_dimension(8, 3)?)?),
    ])
}

fn completeness(opts: &VerifyOptions) -> mite_core::Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for (_, p) in presets()? {
        for term in p.model.terms() {
            for eps in [0.01, 0.05, 0.1] {
                worst = worst.max(build_kraus_pair(term, eps)?.completeness_defect());
            }
        }
    }
    if opts.corrupt_kraus {
        let p = single_qubit_model()?;
        let pair = build_kraus_pair(&p.model.terms()[0], 0.1)?;
        let m1 = pair.m1().scale_real(1.01);
        worst = worst.max(pair.with_m1(m1).completeness_defect());
    }
    Ok(check("kraus completeness", worst <= 1e-10, format!("max defect {worst:.2e} (tol 1e-10)")))
}

fn tables() -> mite_core::Result<(CheckResult, CheckResult)> {
    let mut worst_unitary: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for (_, p) in presets()? {
        let set = MeasurementSet::new(&p.model, 0.05, Backend::Kraus)?;
        let table = build_table(&set, &p.target, &p.correction, true)?;
        for e in table.entries() {
            worst_unitary = worst_unitary.max(e.unitary.unitarity_defect());
        }
        worst_residual = worst_residual.max(table.max_residual());
    }
    Ok((
        check("correction unitarity", worst_unitary <= 1e-10, format!("max defect {worst_unitary:.2e} (tol 1e-10)")),
        check("stabilization", worst_residual <= 1e-8, format!("max residual {worst_residual:.2e} (tol 1e-8)")),
    ))
}

/// `‖M_k − 2^{−N/2} e^{−εH_k}‖₂`.
pub fn trotter_error(set: &MeasurementSet, k: &OutcomeBitstring) -> mite_core::Result<f64> {
    let hk = signed_hamiltonian(set.model(), k)?;
    let exact = matrix_exp_hermitian(&hk, set.epsilon())?.scale_real(2f64.powf(-(set.num_terms() as f64) / 2.0));
    Ok(spectral_norm(&(set.sequence_operator(k)?.matrix() - exact.matrix())))
}

fn trotter_scaling() -> mite_core::Result<CheckResult> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (_, p) in presets()? {
        let coarse = MeasurementSet::new(&p.model, 0.02, Backend::Kraus)?;
        let fine = MeasurementSet::new(&p.model, 0.01, Backend::Kraus)?;
        for k in OutcomeBitstring::all(p.model.num_terms()) {
            let ratio = trotter_error(&coarse, &k)? / trotter_error(&fine, &k)?;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    Ok(check("trotter second order", lo >= 3.4 && hi <= 4.6, format!("halving ratios in [{lo:.3}, {hi:.3}] (want [3.4, 4.6])")))
}

fn backend_equivalence() -> mite_core::Result<CheckResult> {
    let p = single_qubit_model()?;
    let term = &p.model.terms()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = true;
    let mut worst = String::new();
    for eps in [0.1, 0.05] {
        let kraus = Measurement::build(term, eps, Backend::Kraus, DEFAULT_EPSILON_BOUND)?;
        let pointer = Measurement::build(term, eps, Backend::Pointer, DEFAULT_EPSILON_BOUND)?;
        let (mut dp, mut df): (f64, f64) = (0.0, 0.0);
        for _ in 0..50 {
            let psi = StateVector::random(1, &mut rng)?;
            for b in 0..2u8 {
                let a = kraus.operator(b).apply_raw(psi.amplitudes());
                let c = pointer.operator(b).apply_raw(psi.amplitudes());
                dp = dp.max((a.norm_squared() - c.norm_squared()).abs());
                let f = fidelity(&StateVector::new(a)?, &StateVector::new(c)?)?;
                df = df.max(1.0 - f);
            }
        }
        ok &= dp <= 5.0 * eps * eps && df <= 10.0 * eps * eps;
        worst.push_str(&format!("eps={eps}: dp {dp:.2e}, 1-F {df:.2e}; "));
    }
    Ok(check("backend equivalence", ok, worst.trim_end_matches("; ").to_string()))
}

fn subspace_confinement() -> mite_core::Result<CheckResult> {
    let instance = SearchInstance::from_dimension(16, 11)?;
    let p = search_model(&instance)?;
    let set = MeasurementSet::new(&p.model, 0.1, Backend::Kraus)?;
    let table = build_table(&set, &p.target, &p.correction, true)?;
    let mut worst: f64 = 0.0;
    for traj in 0..5 {
        let mut stepper = TrajectoryStepper::new(&set, &table, &p.initial_state, SEED + traj, true)?;
        for _ in 0..200 {
            stepper.advance()?;
            worst = worst.max(instance.leakage(stepper.state()));
        }
    }
    Ok(check("search subspace confinement", worst <= 1e-10, format!("max leakage {worst:.2e} (tol 1e-10)")))
}

/// `G·O` restricted to `(|S⟩, |⊥⟩)` equals `−(((D−2)/D) I + 2i(√(D−1)/D) Y)`.
fn grover_identity() -> mite_core::Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for dim in [4usize, 8, 16, 64] {
        let instance = SearchInstance::from_dimension(dim, dim / 3)?;
        let d = dim as f64;
        let (r, s) = ((d - 2.0) / d, 2.0 * (d - 1.0).sqrt() / d);
        let want = nalgebra::Matrix2::new(
            C64::new(-r, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(-r, 0.0),
        );
        worst = worst.max((instance.restrict(&grover_rotation(&instance)) - want).norm());
    }
    Ok(check("grover subspace form", worst <= 1e-10, format!("max deviation {worst:.2e} (tol 1e-10)")))
}

fn single_qubit_angles() -> mite_core::Result<CheckResult> {
    let p = single_qubit_model()?;
    let set = MeasurementSet::new(&p.model, 0.1, Backend::Kraus)?;
    let table = build_table(&set, &p.target, &p.correction, true)?;
    let a: Vec<f64> = table.entries().iter().map(|e| e.angle.unwrap_or(f64::NAN)).collect();
    let quarter = std::f64::consts::FRAC_PI_4;
    let closed = [2.0 * (0.8f64.atan() - quarter), 2.0 * ((0.68f64 / 0.5).sqrt().atan() - quarter)];
    let ok = (a[0] - closed[0]).abs() < 1e-12
        && (a[1] - closed[1]).abs() < 1e-12
        && (a[0] * 100.0).round() == -22.0
        && (a[1] * 100.0).round() == 15.0;
    Ok(check("single-qubit angles", ok, format!("theta0 {:.6}, theta1 {:.6}", a[0], a[1])))
}

pub fn cmd_verify(opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, r: mite_core::Result<CheckResult>| match r {
        Ok(c) => checks.push(c),
        Err(e) => checks.push(check(name, false, format!("error: {e}"))),
    };
    push("kraus completeness", completeness(opts));
    match tables() {
        Ok((u, s)) => {
            push(u.name, Ok(u));
            push(s.name, Ok(s));
        }
        Err(e) => push("correction tables", Err(e)),
    }
    push("trotter second order", trotter_scaling());
    push("backend equivalence", backend_equivalence());
    push("search subspace confinement", subspace_confinement());
    push("grover subspace form", grover_identity());
    push("single-qubit angles", single_qubit_angles());
    VerifyReport { checks }
}
