//! Fixed points of sequence operators, the target state and the correction table.

mod ansatz;
mod steering;

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, fidelity, gauge_vector, Operator, StateVector, C64};
use crate::trotter::{MeasurementSet, OutcomeBitstring};

pub use ansatz::{ansatz_unitary, solve_tfim_ansatz, AnsatzOptions, AnsatzParams, AnsatzSolution};
pub use steering::{optimize_steering, SteeringOptions, SteeringReport};

/// Minimum ratio `|λ₁|/|λ₂|` for a dominant eigenvalue to count as unique.
pub const MIN_DOMINANCE: f64 = 1.0 + 1e-6;

/// Residual bound for exactly solvable corrections.
pub const EXACT_RESIDUAL: f64 = 1e-8;

/// Residual target for the variational ansatz.
pub const ANSATZ_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub state: StateVector,
    pub eigenvalue: C64,
    /// `|λ₁|/|λ₂|`, infinite for one-dimensional operators.
    pub dominance: f64,
    /// `‖M x − λ x‖`.
    pub defect: f64,
}

/// Dominant right eigenvector of `m`, gauged so the largest amplitude is real positive.
pub fn fixed_point(m: &Operator) -> Result<StateVector> {
    Ok(dominant_eigenpair(m)?.state)
}

pub fn dominant_eigenpair(m: &Operator) -> Result<FixedPoint> {
    let d = m.dim();
    let eig = m
        .matrix()
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::InvalidParameter("eigenvalue computation failed".into()))?;
    let mut mods: Vec<C64> = eig.iter().cloned().collect();
    mods.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let lead = mods[0];
    let dominance = if d > 1 && mods[1].norm() > 0.0 { lead.norm() / mods[1].norm() } else { f64::INFINITY };
    if !(dominance >= MIN_DOMINANCE) {
        return Err(Error::DegenerateFixedPoint {
            ratio: dominance,
            gap: lead.norm() - mods.get(1).map_or(0.0, |x| x.norm()),
        });
    }

    // inverse iteration with a shift just off the eigenvalue
    let shift = lead + C64::new(1e-10 * lead.norm().max(1e-300), 0.0);
    let shifted = m.matrix() - DMatrix::<C64>::identity(d, d) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_fn(d, |i, _| c(1.0 + 0.37 * (i as f64).sin(), 0.11 * (i as f64).cos()));
    x.unscale_mut(x.norm());
    for _ in 0..6 {
        let Some(y) = lu.solve(&x) else { break };
        let n = y.norm();
        if !n.is_finite() || n == 0.0 {
            break;
        }
        x = y.unscale(n);
    }
    let mx = m.matrix() * &x;
    let lambda = x.dotc(&mx);
    let defect = (&mx - &x * lambda).norm();
    if !(defect <= 1e-8) {
        return Err(Error::FixedPointDefect(defect));
    }
    let state = StateVector::new(gauge_vector(&x))?;
    Ok(FixedPoint { state, eigenvalue: lambda, dominance, defect })
}

/// Rotation in `span{|T⟩, M|T⟩}` carrying `M|T⟩` onto the ray of `|T⟩`, identity elsewhere.
pub fn correction_span_rotation(m: &Operator, target: &StateVector) -> Result<Operator> {
    let t = target.amplitudes();
    let v = m.apply_raw(t);
    let norm = v.norm();
    if !(norm > 1e-12) {
        return Err(Error::AnnihilatedTarget);
    }
    let u = v.unscale(norm);
    let overlap = t.dotc(&u);
    let a = overlap.norm();
    let u = if a > 0.0 { u * (overlap.conj() / a) } else { u };
    let r = &u - t * c(a, 0.0);
    let s = r.norm();
    let d = m.dim();
    if s < 1e-14 {
        return Ok(Operator::identity(m.num_qubits()));
    }
    let w = r.unscale(s);
    let tt = t * t.adjoint();
    let ww = &w * w.adjoint();
    let tw = t * w.adjoint();
    let mat = DMatrix::<C64>::identity(d, d) + (tt + ww) * c(a - 1.0, 0.0) + (&tw - tw.adjoint()) * c(s, 0.0);
    Operator::new(mat)
}

/// `1 − |⟨T|U M T⟩|²/‖M T‖²`.
pub fn stabilization_residual(u: &Operator, m: &Operator, target: &StateVector) -> Result<f64> {
    let image = StateVector::new(u.apply_raw(&m.apply_raw(target.amplitudes())))?;
    Ok(1.0 - fidelity(&image, target)?)
}

/// Bloch angle `θ` of a single-qubit operator of the form `e^{iφ} e^{iθY/2}`.
pub fn bloch_y_angle(u: &Operator) -> Option<f64> {
    if u.dim() != 2 {
        return None;
    }
    let m = u.matrix();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if (det.norm() - 1.0).abs() > 1e-8 {
        return None;
    }
    let phase = det.sqrt();
    let r = m.map(|x| x / phase);
    let (cos, sin) = (r[(0, 0)], r[(0, 1)]);
    let structured = (r[(1, 1)] - cos).norm() < 1e-8 && (r[(1, 0)] + sin).norm() < 1e-8;
    if !structured || cos.im.abs() > 1e-8 || sin.im.abs() > 1e-8 {
        return None;
    }
    let mut theta = 2.0 * sin.re.atan2(cos.re);
    if theta > std::f64::consts::PI {
        theta -= 2.0 * std::f64::consts::PI;
    } else if theta <= -std::f64::consts::PI {
        theta += 2.0 * std::f64::consts::PI;
    }
    Some(theta)
}

/// Single-qubit `e^{iθY/2}`; `θ` is the Bloch-sphere angle.
pub fn y_rotation(theta: f64) -> Operator {
    let (s, co) = (theta / 2.0).sin_cos();
    Operator::new(DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(s, 0.0), c(-s, 0.0), c(co, 0.0)]))
        .expect("2x2 is a valid operator")
}

/// Which state the target is built from.
#[derive(Clone, Debug)]
pub enum Reference {
    /// Fixed point of `M_k` for the given outcome bitstring.
    FixedPoint(OutcomeBitstring),
    State(StateVector),
}

/// `|T⟩ = V |reference⟩`.
#[derive(Clone, Debug)]
pub struct TargetState {
    pub reference: Reference,
    pub v: Operator,
    pub description: String,
}

/// Per-outcome correction produced by a [`CorrectionSolver`].
#[derive(Clone, Debug)]
pub struct SolvedCorrection {
    pub unitary: Operator,
    pub angle: Option<f64>,
}

/// Pluggable per-outcome correction rule.
pub trait CorrectionSolver: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn solve(&self, set: &MeasurementSet, k: &OutcomeBitstring, mk: &Operator, target: &StateVector) -> Result<SolvedCorrection>;
}

#[derive(Clone, Debug, Default)]
pub enum CorrectionMethod {
    /// Minimal rotation in `span{|T⟩, M_k|T⟩}`.
    #[default]
    SpanRotation,
    /// Span rotation followed by optimized rotations of the complement of `|T⟩`.
    Steered(SteeringOptions),
    /// `e^{iΣθY} e^{iΣχZY} e^{iΣξY}` fitted per outcome.
    TfimAnsatz(AnsatzOptions),
    Custom(Arc<dyn CorrectionSolver>),
}

impl CorrectionMethod {
    pub fn name(&self) -> &str {
        match self {
            CorrectionMethod::SpanRotation => "span",
            CorrectionMethod::Steered(_) => "steered",
            CorrectionMethod::TfimAnsatz(_) => "ansatz",
            CorrectionMethod::Custom(s) => s.name(),
        }
    }

    fn residual_threshold(&self) -> f64 {
        match self {
            CorrectionMethod::TfimAnsatz(_) => ANSATZ_RESIDUAL,
            _ => EXACT_RESIDUAL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrectionEntry {
    pub bits: OutcomeBitstring,
    pub unitary: Operator,
    /// `1 −` stabilization fidelity.
    pub residual: f64,
    /// Bloch angle where the correction is a plain Y rotation.
    pub angle: Option<f64>,
    pub ansatz: Option<AnsatzParams>,
}

#[derive(Clone, Debug)]
pub struct CorrectionTable {
    target: StateVector,
    v: Operator,
    reference_state: StateVector,
    entries: Vec<CorrectionEntry>,
    method: String,
    epsilon: f64,
    steering: Option<SteeringReport>,
}

impl CorrectionTable {
    pub fn target(&self) -> &StateVector {
        &self.target
    }

    pub fn v(&self) -> &Operator {
        &self.v
    }

    /// The state `V` maps onto the target.
    pub fn reference_state(&self) -> &StateVector {
        &self.reference_state
    }

    /// Entries in bitstring index order.
    pub fn entries(&self) -> &[CorrectionEntry] {
        &self.entries
    }

    pub fn correction(&self, k: &OutcomeBitstring) -> &Operator {
        &self.entries[k.index()].unitary
    }

    pub fn correction_by_index(&self, index: usize) -> &Operator {
        &self.entries[index].unitary
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn steering(&self) -> Option<&SteeringReport> {
        self.steering.as_ref()
    }

    /// Text export: a header line, then per outcome one `k=… residual=…` line
    /// followed by the matrix rows, each entry written as `re,im` and entries
    /// separated by single spaces. `V` and the target follow the same layout.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# corrections method={} epsilon={:.16e} outcomes={} dim={}",
            self.method,
            self.epsilon,
            self.entries.len(),
            self.target.dim()
        )?;
        for e in &self.entries {
            write!(w, "k={} residual={:.16e}", e.bits, e.residual)?;
            if let Some(a) = e.angle {
                write!(w, " angle={a:.16e}")?;
            }
            writeln!(w)?;
            write_matrix(&mut w, e.unitary.matrix())?;
        }
        writeln!(w, "V")?;
        write_matrix(&mut w, self.v.matrix())?;
        writeln!(w, "target")?;
        let t = self.target.amplitudes();
        write_row(&mut w, t.iter())?;
        Ok(())
    }
}

fn write_row<'a, W: Write>(w: &mut W, row: impl Iterator<Item = &'a C64>) -> io::Result<()> {
    let cells: Vec<String> = row.map(|x| format!("{:.16e},{:.16e}", x.re, x.im)).collect();
    writeln!(w, "{}", cells.join(" "))
}

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<C64>) -> io::Result<()> {
    for r in 0..m.nrows() {
        write_row(w, m.row(r).iter())?;
    }
    Ok(())
}

/// Computes every `M_k`, the target, and one correction per outcome.
///
/// With `strict` set, any residual above the method's threshold is an error.
pub fn build_table(
    set: &MeasurementSet,
    target_spec: &TargetState,
    method: &CorrectionMethod,
    strict: bool,
) -> Result<CorrectionTable> {
    let n = set.num_terms();
    if n > 8 {
        return Err(Error::InvalidParameter(format!("{n} terms give too many outcome bitstrings")));
    }
    let ks: Vec<OutcomeBitstring> = OutcomeBitstring::all(n).collect();
    let mks = ks.par_iter().map(|k| set.sequence_operator(k)).collect::<Result<Vec<_>>>()?;

    if target_spec.v.dim() != 1 << set.num_qubits() {
        return Err(Error::DimensionMismatch { expected: 1 << set.num_qubits(), found: target_spec.v.dim() });
    }
    if !target_spec.v.is_unitary(1e-10) {
        return Err(Error::InvalidParameter(format!(
            "V is not unitary (defect {:.3e})",
            target_spec.v.unitarity_defect()
        )));
    }
    let reference_state = match &target_spec.reference {
        Reference::FixedPoint(k) => {
            if k.len() != n {
                return Err(Error::BitstringLength { expected: n, found: k.len() });
            }
            fixed_point(&mks[k.index()])?
        }
        Reference::State(s) => s.clone(),
    };
    let target = reference_state.apply(&target_spec.v)?.gauged();

    let span = || -> Result<Vec<(Operator, Option<AnsatzParams>)>> {
        mks.par_iter()
            .map(|m| Ok((correction_span_rotation(m, &target)?, None)))
            .collect()
    };
    let mut steering = None;
    let mut angles: Vec<Option<f64>> = vec![None; ks.len()];
    let solved: Vec<(Operator, Option<AnsatzParams>)> = match method {
        CorrectionMethod::SpanRotation => span()?,
        CorrectionMethod::Steered(opts) => {
            let base = span()?;
            let products: Vec<Operator> = base.iter().zip(&mks).map(|((s, _), m)| s * m).collect();
            let (w, report) = optimize_steering(&products, &target, opts)?;
            steering = Some(report);
            base.into_iter().zip(w).map(|((s, _), w)| (&w * &s, None)).collect()
        }
        CorrectionMethod::TfimAnsatz(opts) => mks
            .par_iter()
            .map(|m| {
                let sol = solve_tfim_ansatz(m, &target, set.num_qubits(), opts)?;
                Ok((sol.unitary, Some(sol.params)))
            })
            .collect::<Result<Vec<_>>>()?,
        CorrectionMethod::Custom(solver) => {
            let out = ks
                .par_iter()
                .zip(mks.par_iter())
                .map(|(k, m)| solver.solve(set, k, m, &target))
                .collect::<Result<Vec<_>>>()?;
            out.into_iter()
                .enumerate()
                .map(|(i, s)| {
                    angles[i] = s.angle;
                    (s.unitary, None)
                })
                .collect()
        }
    };

    let threshold = method.residual_threshold();
    let mut entries = Vec::with_capacity(ks.len());
    for (((k, m), (u, params)), angle) in ks.into_iter().zip(&mks).zip(solved).zip(angles) {
        let residual = stabilization_residual(&u, m, &target)?;
        if strict && residual > threshold {
            return Err(Error::ResidualTooLarge { bits: k.to_string(), residual, threshold });
        }
        if residual > threshold {
            log::warn!("correction for outcome {k} has residual {residual:.3e}");
        }
        let angle = angle.or_else(|| bloch_y_angle(&u));
        entries.push(CorrectionEntry { bits: k, unitary: u, residual, angle, ansatz: params });
    }
    Ok(CorrectionTable {
        target,
        v: target_spec.v.clone(),
        reference_state,
        entries,
        method: method.name().to_string(),
        epsilon: set.epsilon(),
        steering,
    })
}
