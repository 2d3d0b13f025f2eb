//! Reduction from learning a unitary to learning its single-output channels:
//! local inversions, Heisenberg-evolved Pauli blocks read off Choi
//! representations, and sewing them into an approximation of `U (x) U^dagger`.
//!
//! The sewn operator lives on `2n` wires: the original register on `0..n`
//! and the mirror register on `n..2n`.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{choi, choi_of_unitary, ChannelSpec, Qac0Circuit};
use crate::config::check_capacity;
use crate::error::{Error, Result};
use crate::learner::{learn_from_choi_state, AccuracySchedule, LearnOptions};
use crate::linalg::{norm, partial_trace, tensor, DenseOperator, NormKind, C64};
use crate::pauli::{pauli_matrix, synthesize, PauliString};

/// Tolerance of the clean-computation check.
pub const CLEAN_TOL: f64 = 1e-8;
/// Largest accepted residual for a supplied local inversion.
pub const INVERSION_TOL: f64 = 1e-6;

/// `V_i` with `U V_i = W (x) I_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalInversion {
    pub wire: usize,
    pub operator: DenseOperator,
    /// `|U V_i - W (x) I_i|_inf` for the extracted `W`.
    pub residual: f64,
}

/// Unitary computed by `c` on its `n` data wires, after checking that every
/// input returns the ancillas to `|0^a>`.
pub fn clean_unitary(c: &Qac0Circuit) -> Result<DenseOperator> {
    if !c.has_zero_ancilla() {
        return Err(Error::invalid("clean computation needs ancillas prepared in |0>"));
    }
    let u = c.build_unitary()?;
    let (n, a) = (c.n(), c.ancillas());
    if a == 0 {
        return Ok(u);
    }
    let anc_mask = (1usize << a) - 1;
    for x in 0..1usize << n {
        let col = x << a;
        let leak: f64 = (0..u.dim())
            .filter(|r| r & anc_mask != 0)
            .map(|r| u.get(r, col).norm_sqr())
            .sum();
        if leak.sqrt() > CLEAN_TOL {
            return Err(Error::invalid(format!(
                "input {x:0n$b} leaves ancilla weight {:.3e}",
                leak.sqrt()
            )));
        }
    }
    let wires: Vec<usize> = (n..n + a).collect();
    u.project_wires(&wires, &vec![false; a])
}

/// Local inversion for wire `i`: the canonical `U^dagger`, or `candidate`
/// after certifying it.
pub fn local_inversion(c: &Qac0Circuit, i: usize, candidate: Option<&DenseOperator>) -> Result<LocalInversion> {
    let u = clean_unitary(c)?;
    local_inversion_of(&u, i, candidate)
}

pub fn local_inversion_of(u: &DenseOperator, i: usize, candidate: Option<&DenseOperator>) -> Result<LocalInversion> {
    let n = u.qubits();
    if i >= n {
        return Err(Error::arg(format!("wire {i} outside 0..{n}")));
    }
    let v = match candidate {
        Some(v) => {
            if v.qubits() != n {
                return Err(Error::arg("candidate inversion has the wrong width"));
            }
            if !v.is_unitary(1e-9) {
                return Err(Error::InvalidInversion(v.unitarity_defect()));
            }
            v.clone()
        }
        None => u.adjoint(),
    };
    let uv = u.matmul(&v)?;
    let w = partial_trace(&uv, &[i])?.scale_real(0.5);
    let rest: Vec<usize> = (0..n).filter(|&w| w != i).collect();
    let fitted = if n == 1 {
        DenseOperator::identity(1).scale(w.get(0, 0))
    } else {
        DenseOperator::embed(&w, &rest, n)?
    };
    let residual = norm(&uv.sub(&fitted)?, NormKind::Spectral);
    if residual > INVERSION_TOL {
        return Err(Error::InvalidInversion(residual));
    }
    Ok(LocalInversion { wire: i, operator: v, residual })
}

fn b_x(x: usize) -> DenseOperator {
    pauli_matrix(&PauliString::new(&[x as u8]).expect("letter")).expect("one qubit")
}

/// `Q_{i,x}` from an (approximate) Choi representation `m_i` of the
/// `n -> 1` channel `rho -> Tr_{-i}(V_i^dagger rho V_i)`: `Q_{i,0} = I` and
/// otherwise `Tr_out(m_i^T (I_n (x) B_x^T))`.
pub fn heisenberg_slice(m_i: &DenseOperator, x: usize) -> Result<DenseOperator> {
    let q = m_i.qubits();
    if q < 2 {
        return Err(Error::arg("Choi representation needs at least one input wire"));
    }
    if x > 3 {
        return Err(Error::arg(format!("Pauli label {x} outside 0..=3")));
    }
    let n = q - 1;
    if x == 0 {
        return Ok(DenseOperator::identity(n));
    }
    let mut t = m_i.transpose();
    t.apply_right(&b_x(x).transpose(), &[n])?;
    partial_trace(&t, &[n])
}

pub fn heisenberg_blocks(m_i: &DenseOperator) -> Result<[DenseOperator; 4]> {
    Ok([
        heisenberg_slice(m_i, 0)?,
        heisenberg_slice(m_i, 1)?,
        heisenberg_slice(m_i, 2)?,
        heisenberg_slice(m_i, 3)?,
    ])
}

/// SWAP of wires `i` and `i + n` on `2n` wires.
pub fn swap_pair(n: usize, i: usize) -> Result<DenseOperator> {
    check_capacity(2 * n)?;
    if i >= n {
        return Err(Error::arg(format!("wire {i} outside 0..{n}")));
    }
    let (hi, lo) = (2 * n - 1 - i, n - 1 - i);
    Ok(DenseOperator::from_fn(2 * n, |r, c| {
        let (bh, bl) = (c >> hi & 1, c >> lo & 1);
        let swapped = (c & !(1 << hi) & !(1 << lo)) | bl << hi | bh << lo;
        if r == swapped {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Full register swap `S = prod_i S_i`.
pub fn register_swap(n: usize) -> Result<DenseOperator> {
    check_capacity(2 * n)?;
    let mask = (1usize << n) - 1;
    Ok(DenseOperator::from_fn(2 * n, |r, c| {
        if r == ((c & mask) << n | c >> n) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `V S_i V^dagger` with `V` acting on the original register.
pub fn sewing_factor(v: &DenseOperator, i: usize) -> Result<DenseOperator> {
    let n = v.qubits();
    let wires: Vec<usize> = (0..n).collect();
    swap_pair(n, i)?.conjugate_local(v, &wires)
}

/// `U (x) U^dagger` on `2n` wires.
pub fn doubled(u: &DenseOperator) -> Result<DenseOperator> {
    check_capacity(2 * u.qubits())?;
    tensor(u, &u.adjoint())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SewnOperator {
    pub n: usize,
    /// `Q = S Q_1 ... Q_n`.
    pub operator: DenseOperator,
    /// `Q_i = 1/2 sum_x Q_{i,x} (x) B_x^{(i+n)}`.
    pub factors: Vec<DenseOperator>,
    pub per_wire_blocks: Vec<[DenseOperator; 4]>,
}

pub fn sew(blocks: Vec<[DenseOperator; 4]>, n: usize) -> Result<SewnOperator> {
    if n == 0 || blocks.len() != n {
        return Err(Error::arg(format!("expected blocks for {n} wires, got {}", blocks.len())));
    }
    check_capacity(2 * n)?;
    let data: Vec<usize> = (0..n).collect();
    let mut factors = Vec::with_capacity(n);
    for (i, b) in blocks.iter().enumerate() {
        if b.iter().any(|q| q.qubits() != n) {
            return Err(Error::arg(format!("block for wire {i} is not an {n}-qubit operator")));
        }
        let mut qi = DenseOperator::zeros(2 * n);
        for (x, qx) in b.iter().enumerate() {
            let mut term = DenseOperator::embed(qx, &data, 2 * n)?;
            term.apply_left(&b_x(x), &[n + i])?;
            qi = qi.add(&term)?;
        }
        factors.push(qi.scale_real(0.5));
    }
    let mut q = register_swap(n)?;
    for f in &factors {
        q = q.matmul(f)?;
    }
    Ok(SewnOperator { n, operator: q, factors, per_wire_blocks: blocks })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductionMode {
    /// Exact Choi representations.
    Exact,
    /// Each wire's Choi representation is learned to spectral accuracy `eps`
    /// with failure probability `delta / n`.
    Sampled { eps: f64, delta: f64, options: LearnOptions },
}

impl ReductionMode {
    pub fn sampled(eps: f64, delta: f64, seed: u64) -> Self {
        ReductionMode::Sampled {
            eps,
            delta,
            options: LearnOptions { schedule: AccuracySchedule::Parseval, seed, ..LearnOptions::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WireReport {
    pub wire: usize,
    pub inversion_residual: f64,
    /// `|M_i - J_i|_inf` against the exact Choi representation.
    pub choi_error: f64,
    /// `|Q_i - V_i S_i V_i^dagger|_inf`.
    pub factor_error: f64,
    pub samples_used: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    pub sewn: SewnOperator,
    pub wires: Vec<WireReport>,
    /// `|Q - U (x) U^dagger|_inf`.
    pub final_error: f64,
    /// `3 n max_i factor_error`, valid when `n max_i factor_error < 1`.
    pub hybrid_bound: f64,
    /// `9 n eps` in sampled mode.
    pub learner_bound: Option<f64>,
}

impl ReductionReport {
    pub fn within_bounds(&self) -> bool {
        let slack = 1e-9;
        let max_v = self.wires.iter().map(|w| w.factor_error).fold(0.0, f64::max);
        let hybrid_ok = max_v * self.sewn.n as f64 >= 1.0 || self.final_error <= self.hybrid_bound + slack;
        let learner_ok = self.learner_bound.is_none_or(|b| self.final_error <= b + slack);
        hybrid_ok && learner_ok
    }
}

/// Runs the reduction end to end with `V_i = U^dagger` on every wire.
pub fn run_reduction(c: &Qac0Circuit, mode: &ReductionMode) -> Result<ReductionReport> {
    let n = c.n();
    check_capacity(2 * n)?;
    let u = clean_unitary(c)?;
    if let ReductionMode::Sampled { eps, delta, .. } = mode {
        if !(*eps > 0.0 && *eps < 1.0 && *delta > 0.0 && *delta < 1.0) {
            return Err(Error::arg("eps and delta must lie in (0, 1)"));
        }
    }
    let per_wire: Vec<Result<(WireReport, [DenseOperator; 4])>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let inv = local_inversion_of(&u, i, None)?;
            let exact = choi(&ChannelSpec::new(c.clone(), vec![i])?)?.representation;
            let (m_i, samples) = match mode {
                ReductionMode::Exact => (exact.clone(), 0),
                ReductionMode::Sampled { eps, delta, options } => {
                    // Normalized 2-norm accuracy that forces spectral accuracy eps.
                    let eps2 = eps * 0.5f64.powf((n + 1) as f64 / 2.0);
                    let opts = LearnOptions { seed: wire_seed(options.seed, i), ..options.clone() };
                    let state = exact.scale_real(0.5f64.powi(n as i32));
                    let h = learn_from_choi_state(&state, n, 1, n + 1, eps2, delta / n as f64, &opts)
                        .map_err(|e| match e {
                            Error::Infeasible { .. } | Error::Capacity { .. } => e,
                            other => Error::Learner(format!("wire {i}: {other}")),
                        })?;
                    (synthesize(&h.expansion)?, h.samples_used)
                }
            };
            let blocks = heisenberg_blocks(&m_i)?;
            let choi_error = norm(&m_i.sub(&exact)?, NormKind::Spectral);
            Ok((
                WireReport {
                    wire: i,
                    inversion_residual: inv.residual,
                    choi_error,
                    factor_error: 0.0,
                    samples_used: samples,
                },
                blocks,
            ))
        })
        .collect();
    let mut wires = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(n);
    for r in per_wire {
        let (w, b) = r?;
        wires.push(w);
        blocks.push(b);
    }
    let sewn = sew(blocks, n)?;
    let u_dag = u.adjoint();
    for (i, w) in wires.iter_mut().enumerate() {
        let target = sewing_factor(&u_dag, i)?;
        w.factor_error = norm(&sewn.factors[i].sub(&target)?, NormKind::Spectral);
    }
    let final_error = norm(&sewn.operator.sub(&doubled(&u)?)?, NormKind::Spectral);
    let max_v = wires.iter().map(|w| w.factor_error).fold(0.0, f64::max);
    let learner_bound = match mode {
        ReductionMode::Exact => None,
        ReductionMode::Sampled { eps, .. } => Some(9.0 * n as f64 * eps),
    };
    Ok(ReductionReport {
        sewn,
        wires,
        final_error,
        hybrid_bound: 3.0 * n as f64 * max_v,
        learner_bound,
    })
}

fn wire_seed(seed: u64, wire: usize) -> u64 {
    seed ^ (wire as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Exact Choi representation of `rho -> Tr_{-i}(V_i^dagger rho V_i)`.
pub fn wire_channel_choi(v_i: &DenseOperator, i: usize) -> Result<DenseOperator> {
    Ok(choi_of_unitary(&v_i.adjoint(), v_i.qubits(), &[C64::new(1.0, 0.0)], &[i])?.representation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{cz_gate, Layer};

    #[test]
    fn swap_decomposition() {
        for n in 1..=3 {
            for i in 0..n {
                let mut sum = DenseOperator::zeros(2 * n);
                for x in 0..4 {
                    let mut t = DenseOperator::embed(&b_x(x), &[i], 2 * n).unwrap();
                    t.apply_left(&b_x(x), &[n + i]).unwrap();
                    sum = sum.add(&t).unwrap();
                }
                let s = swap_pair(n, i).unwrap();
                assert!(sum.scale_real(0.5).max_abs_diff(&s) < 1e-12);
            }
        }
    }

    #[test]
    fn identity_circuit_sews_to_identity() {
        let c = Qac0Circuit::new(1, 0, None, vec![]).unwrap();
        let r = run_reduction(&c, &ReductionMode::Exact).unwrap();
        assert!(r.final_error < 1e-12);
    }

    #[test]
    fn cz_is_its_own_inversion() {
        let u = cz_gate(2).unwrap();
        let inv = local_inversion_of(&u, 0, Some(&u)).unwrap();
        assert!(inv.residual < 1e-14);
    }

    #[test]
    fn rejects_bad_candidate() {
        let u = cz_gate(2).unwrap();
        let h = DenseOperator::identity(2);
        assert!(matches!(local_inversion_of(&u, 0, Some(&h)), Err(Error::InvalidInversion(_))));
    }

    #[test]
    fn dirty_ancilla_rejected() {
        let x = DenseOperator::from_fn(1, |r, c| if r != c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let layer = Layer::Single([(1usize, x)].into_iter().collect());
        let c = Qac0Circuit::new(1, 1, None, vec![layer]).unwrap();
        assert!(matches!(clean_unitary(&c), Err(Error::Validation(_))));
    }
}
