//! Low-degree approximation of Heisenberg-evolved operators through CZ layers,
//! and of the normalized EPR projector.
//!
//! A CZ layer is processed gate by gate. Gate `i` on wire set `S_i` is replaced
//! by `X_i` (either `CZ` itself or a symmetric polynomial `p(W)` in the Hamming
//! weight of `S_i`); the top-left block of the dilated conjugation then acts as
//!
//! `Y -> X_i Y X_i^dag + (Tr_{S_i} Y / 2^{|S_i|}) (x) (I - X_i X_i^dag)`.
//!
//! [`approx_layer_dilated`] builds the same operator from explicit dilations.

use crate::circuit::{Layer, Qac0Circuit};
use crate::config::check_capacity;
use crate::dilation::{
    binomial_table, cz_approx_with_degree, cz_degree_budget, cz_spectrum, operator_dilate, unitary_dilate,
    DilationEnsemble,
};
use crate::error::{Error, Result};
use crate::linalg::{norm, scatter_offsets, DenseOperator, NormKind, C64};
use crate::minimax::discrete_minimax;
use crate::pauli::{expand, synthesize, PauliExpansion, PauliString, DROP_TOL};

/// `C~ = 4 log2(e)`: per-gate constant from stacking dilation errors.
pub fn c_tilde() -> f64 {
    4.0 * std::f64::consts::LOG2_E
}

/// `C = 2 C~`.
pub fn c_layer() -> f64 {
    2.0 * c_tilde()
}

/// Which branch a gate of the layer went through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateClass {
    /// Size at most `t`: conjugated exactly.
    Small,
    /// Size in `(t, t^2]`.
    Medium,
    /// Size above `t^2`.
    Large,
}

/// Per-gate record of a layer approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct GateReport {
    pub wires: Vec<usize>,
    pub class: GateClass,
    /// `true` when the exact CZ was used.
    pub exact: bool,
    pub poly_degree: usize,
    /// `max_w |p(w) - f(w)|`.
    pub gate_error: f64,
    /// `|| CZ^up - X^up ||`.
    pub dilation_distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerApproxReport {
    pub approx: PauliExpansion,
    pub n: usize,
    pub ell: usize,
    pub r: f64,
    pub threshold: f64,
    /// Sizes of the small / medium / large gate classes.
    pub partition: [usize; 3],
    pub gates: Vec<GateReport>,
    pub achieved_degree: usize,
    /// `4 sqrt(n ell r)`.
    pub degree_bound: f64,
    /// `|| U A U^dag - M ||`.
    pub spectral_error: f64,
    /// `C n 2^(-r/512) ||A||`.
    pub error_bound: f64,
    /// `2 sum_i || CZ_i^up - X_i^up || ||A||`.
    pub hybrid_bound: f64,
    /// `r > n / ell` (or `ell = 0`): `M = U A U^dag` directly.
    pub exact_branch: bool,
    /// `r` lies in `(1, sqrt(n/ell)) U (n/ell, n)`.
    pub in_lemma_range: bool,
    pub input_norm: f64,
    pub output_norm: f64,
}

impl LayerApproxReport {
    pub fn error_bound_vacuous(&self) -> bool {
        self.error_bound > 2.0 * self.input_norm
    }
}

struct LayerOutcome {
    m: DenseOperator,
    report: LayerApproxReport,
}

fn check_layer_sets(sets: &[Vec<usize>], q: usize) -> Result<()> {
    let mut used = vec![false; q];
    for set in sets {
        if set.is_empty() {
            return Err(Error::arg("empty CZ set"));
        }
        for &w in set {
            if w >= q || std::mem::replace(&mut used[w], true) {
                return Err(Error::arg(format!("CZ set wire {w} out of range or repeated")));
            }
        }
    }
    Ok(())
}

/// Symmetric gate `X` used for one CZ set, with its error data.
fn gate_choice(k: usize, r: f64, small: bool, exact_branch: bool) -> (Vec<f64>, bool, usize, f64) {
    let budget = cz_degree_budget(k, r);
    if exact_branch || small || budget >= k {
        return (cz_spectrum(k), true, k, 0.0);
    }
    let res = cz_approx_with_degree(k, r, budget);
    (res.poly_values, false, res.degree, res.spectral_error)
}

/// `|| CZ^up - X^up ||` for `X = diag(p(|x|))`: per basis state the 2x2
/// difference has singular value `sqrt(2 (1 - f p))`.
fn dilation_distance(values: &[f64]) -> f64 {
    values
        .iter()
        .zip(cz_spectrum(values.len() - 1))
        .map(|(p, f)| (2.0 * (1.0 - f * p)).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

/// Applies `Y -> P Y P + (Tr_S Y / 2^|S|) (x) (I - P^2)` for `P = diag(values[|x_S|])`.
fn apply_symmetric_channel(y: &DenseOperator, set: &[usize], values: &[f64]) -> DenseOperator {
    let q = y.qubits();
    let rest: Vec<usize> = (0..q).filter(|w| !set.contains(w)).collect();
    let s_off = scatter_offsets(q, set);
    let r_off = scatter_offsets(q, &rest);
    let p: Vec<f64> = (0..s_off.len()).map(|s| values[s.count_ones() as usize]).collect();
    let dim_s = s_off.len() as f64;
    let exact = p.iter().all(|v| v.abs() == 1.0);
    let mut out = y.clone().into_matrix();
    for &ra in &r_off {
        for &rb in &r_off {
            let trace: C64 = if exact {
                C64::new(0.0, 0.0)
            } else {
                s_off.iter().map(|&o| y.get(ra + o, rb + o)).sum::<C64>() / dim_s
            };
            for (s, &os) in s_off.iter().enumerate() {
                for (t, &ot) in s_off.iter().enumerate() {
                    let mut v = y.get(ra + os, rb + ot) * (p[s] * p[t]);
                    if s == t && !exact {
                        v += trace * (1.0 - p[s] * p[s]);
                    }
                    out[(ra + os, rb + ot)] = v;
                }
            }
        }
    }
    DenseOperator::from_parts(q, out)
}

fn conjugate_by_layer(a: &DenseOperator, sets: &[Vec<usize>]) -> DenseOperator {
    let q = a.qubits();
    let sign: Vec<f64> = (0..a.dim())
        .map(|x| {
            let flips = sets
                .iter()
                .filter(|set| set.iter().all(|&w| x >> (q - 1 - w) & 1 == 1))
                .count();
            if flips % 2 == 0 { 1.0 } else { -1.0 }
        })
        .collect();
    DenseOperator::from_fn(q, |r, c| a.get(r, c) * (sign[r] * sign[c]))
}

/// `input_norm` may be supplied when `||a||` is already known.
fn layer_dense(sets: &[Vec<usize>], a: &DenseOperator, ell: usize, r: f64, input_norm: Option<f64>) -> Result<LayerOutcome> {
    let q = a.qubits();
    check_layer_sets(sets, q)?;
    if !(r > 1.0) {
        return Err(Error::arg(format!("r = {r} must exceed 1")));
    }
    let exact_branch = ell == 0 || r > q as f64 / ell as f64;
    let t = if ell == 0 { f64::INFINITY } else { (q as f64 / ell as f64).sqrt() };
    let in_lemma_range = ell == 0 || r < t || (exact_branch && r < q as f64);

    let mut m = a.clone();
    let mut gates = Vec::with_capacity(sets.len());
    let mut partition = [0usize; 3];
    let mut hybrid = 0.0;
    for set in sets {
        let k = set.len();
        let class = if (k as f64) <= t {
            GateClass::Small
        } else if (k as f64) <= t * t {
            GateClass::Medium
        } else {
            GateClass::Large
        };
        partition[class as usize] += 1;
        let (values, exact, poly_degree, gate_error) = gate_choice(k, r, class == GateClass::Small, exact_branch);
        let dist = if exact { 0.0 } else { dilation_distance(&values) };
        hybrid += dist;
        m = if exact {
            conjugate_by_layer(&m, std::slice::from_ref(set))
        } else {
            apply_symmetric_channel(&m, set, &values)
        };
        gates.push(GateReport {
            wires: set.clone(),
            class,
            exact,
            poly_degree,
            gate_error,
            dilation_distance: dist,
        });
    }
    let target = conjugate_by_layer(a, sets);
    let input_norm = input_norm.unwrap_or_else(|| norm(a, NormKind::Spectral));
    let spectral_error = norm(&target.sub(&m)?, NormKind::Spectral);
    let approx = expand(&m);
    let report = LayerApproxReport {
        achieved_degree: approx.degree(),
        approx,
        n: q,
        ell,
        r,
        threshold: t,
        partition,
        gates,
        degree_bound: 4.0 * (q as f64 * ell as f64 * r).sqrt(),
        spectral_error,
        error_bound: c_layer() * q as f64 * 2f64.powf(-r / 512.0) * input_norm,
        hybrid_bound: 2.0 * hybrid * input_norm,
        exact_branch,
        in_lemma_range,
        input_norm,
        output_norm: norm(&m, NormKind::Spectral),
    };
    Ok(LayerOutcome { m, report })
}

/// Spectral norm of `a`; a single Pauli term has norm `|c|`.
fn expansion_norm(a: &PauliExpansion, dense: &DenseOperator) -> f64 {
    match a.iter().next() {
        Some((_, c)) if a.len() == 1 => c.norm(),
        _ => norm(dense, NormKind::Spectral),
    }
}

/// Approximates `U A U^dag` for one CZ layer `U` given by disjoint wire sets.
///
/// Requires `deg(a) <= ell` and `r > 1`. When `r > n/ell` the result is exact.
/// Values of `r` between `sqrt(n/ell)` and `n/ell` are accepted and reported
/// with `in_lemma_range = false`.
pub fn approx_layer(sets: &[Vec<usize>], a: &PauliExpansion, ell: usize, r: f64) -> Result<LayerApproxReport> {
    if a.degree() > ell {
        return Err(Error::precondition(format!(
            "operator degree {} exceeds ell = {ell}",
            a.degree()
        )));
    }
    let dense = synthesize(a)?;
    let a_norm = expansion_norm(a, &dense);
    Ok(layer_dense(sets, &dense, ell, r, Some(a_norm))?.report)
}

/// Same operator as [`approx_layer`] built explicitly: top-left block of
/// `U~ A^dilated U~^dag` with one flag per approximated gate.
pub fn approx_layer_dilated(sets: &[Vec<usize>], a: &PauliExpansion, ell: usize, r: f64) -> Result<DenseOperator> {
    let q = a.qubits();
    check_layer_sets(sets, q)?;
    let exact_branch = ell == 0 || r > q as f64 / ell as f64;
    let t = if ell == 0 { f64::INFINITY } else { (q as f64 / ell as f64).sqrt() };
    let mut approximated = Vec::new();
    let mut exact_sets = Vec::new();
    for set in sets {
        let (values, exact, _, _) = gate_choice(set.len(), r, set.len() as f64 <= t, exact_branch);
        if exact {
            exact_sets.push(set.clone());
        } else {
            approximated.push((set.clone(), values));
        }
    }
    let ensemble = DilationEnsemble::new(approximated.iter().map(|(s, _)| s.clone()).collect())?;
    let f = ensemble.len();
    check_capacity(q + f)?;
    let mut m = operator_dilate(a, &ensemble)?;
    for (i, (set, values)) in approximated.iter().enumerate() {
        let x = crate::dilation::symmetric_operator(values)?;
        let up = unitary_dilate(&x)?;
        let mut wires = vec![q + i];
        wires.extend(set);
        m = m.conjugate_local(&up, &wires)?;
    }
    let m = conjugate_by_layer(&m, &exact_sets);
    let flags: Vec<usize> = (q..q + f).collect();
    m.project_wires(&flags, &vec![false; f])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitApproxReport {
    pub approx: PauliExpansion,
    pub per_layer: Vec<LayerApproxReport>,
    /// `|| U A U^dag - M_d ||` from the dense product.
    pub total_error: f64,
    /// `d C n 2^(-r/512) ||A||`.
    pub total_error_bound: f64,
    /// Sum of per-layer hybrid bounds.
    pub total_hybrid_bound: f64,
    /// Closed-form degree bound after each CZ layer: `(16 n r)^(1-2^-i) ell0^(2^-i)`.
    pub degree_bounds: Vec<f64>,
    pub n_exponents: Vec<f64>,
    pub ell_exponents: Vec<f64>,
    /// Spectral norm of `M_i` after each CZ layer.
    pub norms: Vec<f64>,
    pub degree_bound: f64,
}

/// Closed form of `b_i = 4 sqrt(n b_{i-1} r)`, `b_0 = ell0`.
pub fn degree_recursion(n: usize, ell0: usize, r: f64, i: u32) -> f64 {
    let e = 0.5f64.powi(i as i32);
    (16.0 * n as f64 * r).powf(1.0 - e) * (ell0 as f64).powf(e)
}

/// Layer-by-layer approximation of `U A U^dag` for a whole circuit acting on
/// all `n + a` wires.
pub fn approx_circuit(c: &Qac0Circuit, a: &PauliExpansion, r: f64) -> Result<CircuitApproxReport> {
    let q = c.total_wires();
    if a.qubits() != q {
        return Err(Error::arg(format!(
            "observable has {} qubits, circuit has {q} wires",
            a.qubits()
        )));
    }
    let ell0 = a.degree();
    let a_dense = synthesize(a)?;
    let a_norm = expansion_norm(a, &a_dense);
    // Single-qubit layers are unitary, so this tracks ||m|| between CZ layers.
    let mut m_norm = a_norm;
    let mut m = a_dense.clone();
    let mut per_layer = Vec::new();
    let mut norms = Vec::new();
    let mut degree_bounds = Vec::new();
    let mut n_exponents = Vec::new();
    let mut ell_exponents = Vec::new();
    let mut degree = ell0;
    for (li, layer) in c.layers().iter().enumerate() {
        match layer {
            Layer::Single(gates) => {
                for (&w, g) in gates {
                    m = m.conjugate_local(g, &[w])?;
                }
            }
            Layer::Cz(sets) => {
                let out = layer_dense(sets, &m, degree, r, Some(m_norm))
                    .map_err(|e| Error::arg(format!("layer {li}: {e}")))?;
                degree = out.report.achieved_degree;
                m = out.m;
                m_norm = out.report.output_norm;
                let i = per_layer.len() as u32 + 1;
                degree_bounds.push(degree_recursion(q, ell0, r, i));
                n_exponents.push(1.0 - 0.5f64.powi(i as i32));
                ell_exponents.push(0.5f64.powi(i as i32));
                norms.push(out.report.output_norm);
                per_layer.push(out.report);
            }
        }
    }
    let target = c.conjugate(&a_dense)?;
    let total_error = norm(&target.sub(&m)?, NormKind::Spectral);
    let d = per_layer.len();
    Ok(CircuitApproxReport {
        approx: expand(&m),
        total_error,
        total_error_bound: d as f64 * c_layer() * q as f64 * 2f64.powf(-r / 512.0) * a_norm,
        total_hybrid_bound: per_layer.iter().map(|l| l.hybrid_bound).sum(),
        degree_bound: degree_bounds.last().copied().unwrap_or(ell0 as f64),
        degree_bounds,
        n_exponents,
        ell_exponents,
        norms,
        per_layer,
    })
}

/// Low-degree approximation of `2^-n |EPR_n><EPR_n|` on `2n` wires (pairs `(j, n+j)`).
#[derive(Clone, Debug, PartialEq)]
pub struct EprApprox {
    pub n: usize,
    pub expansion: PauliExpansion,
    pub poly_degree: usize,
    pub pauli_degree: usize,
    /// `p(0..=n)` on the number of pairs in the Bell state.
    pub poly_values: Vec<f64>,
    pub achieved_error: f64,
}

/// Smallest-degree symmetric polynomial in the pair projectors whose error on
/// the spectrum is at most `target_eps`.
pub fn approx_epr(n: usize, target_eps: f64) -> Result<EprApprox> {
    if n == 0 {
        return Err(Error::arg("approx_epr needs n >= 1"));
    }
    if !(target_eps > 0.0 && target_eps < 1.0) {
        return Err(Error::arg("target_eps must lie in (0, 1)"));
    }
    check_capacity(2 * n)?;
    let target: Vec<f64> = (0..=n).map(|w| if w == n { 1.0 } else { 0.0 }).collect();
    let pts: Vec<f64> = (0..=n).map(|w| w as f64).collect();
    let mut chosen = None;
    for deg in 0..=n {
        let (values, _) = if deg >= n {
            (target.clone(), 0.0)
        } else {
            let p = discrete_minimax(&pts, &target, deg)?;
            (p.values, p.error)
        };
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let values: Vec<f64> = if peak > 1.0 { values.iter().map(|v| v / peak).collect() } else { values };
        let err = values.iter().zip(&target).map(|(v, f)| (v - f).abs()).fold(0.0, f64::max);
        if err <= target_eps || deg == n {
            chosen = Some((deg, values, err));
            break;
        }
    }
    let (poly_degree, values, achieved_error) = chosen.expect("full degree is exact");
    let expansion = epr_expansion(n, &values)?;
    Ok(EprApprox {
        n,
        pauli_degree: expansion.degree(),
        expansion,
        poly_degree,
        poly_values: values,
        achieved_error,
    })
}

/// Pauli expansion of `sum_T g(|T|) prod_{i in T} P_i prod_{i notin T} (I - P_i)`.
fn epr_expansion(n: usize, g: &[f64]) -> Result<PauliExpansion> {
    let binom = binomial_table(n);
    let by_j: Vec<f64> = (0..=n)
        .map(|j| {
            let mut acc = 0.0;
            for a in 0..=j {
                for b in 0..=n - j {
                    acc += binom[j][a]
                        * binom[n - j][b]
                        * g[a + b]
                        * 0.25f64.powi(a as i32)
                        * (-0.25f64).powi((j - a) as i32)
                        * 0.25f64.powi(b as i32)
                        * 0.75f64.powi((n - j - b) as i32);
                }
            }
            acc
        })
        .collect();
    let mut p = PauliExpansion::new(2 * n);
    let mut letters = vec![0u8; 2 * n];
    for pattern in 0..1u64 << (2 * n) {
        let mut j = 0;
        let mut sign = 1.0;
        for i in 0..n {
            let l = (pattern >> (2 * (n - 1 - i)) & 3) as u8;
            letters[i] = l;
            letters[n + i] = l;
            if l != 0 {
                j += 1;
            }
            if l == 2 {
                sign = -sign;
            }
        }
        let c = sign * by_j[j];
        if c.abs() >= DROP_TOL {
            p.add_term(PauliString::new(&letters)?, C64::new(c, 0.0))?;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gates_are_exact() {
        let a = PauliExpansion::parse_monomial("XIII").unwrap();
        let rep = approx_layer(&[vec![0, 1], vec![2, 3]], &a, 1, 1.5).unwrap();
        assert_eq!(rep.partition, [2, 0, 0]);
        assert!(rep.spectral_error < 1e-12);
    }

    #[test]
    fn degree_above_ell_rejected() {
        let a = PauliExpansion::parse_monomial("XX").unwrap();
        assert!(matches!(approx_layer(&[vec![0, 1]], &a, 1, 1.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn epr_single_pair_is_bell_projector() {
        let e = approx_epr(1, 0.1).unwrap();
        assert_eq!(e.achieved_error, 0.0);
        assert_eq!(e.pauli_degree, 2);
        assert!((e.expansion.get(&"YY".parse().unwrap()).re + 0.25).abs() < 1e-15);
    }
}
