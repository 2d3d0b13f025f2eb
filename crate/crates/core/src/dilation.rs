//! Unitary dilation of contractions, flag-qubit operator dilation over a
//! disjoint wire ensemble, and low-degree symmetric approximations of CZ.

use crate::config::check_capacity;
use crate::error::{Error, Result};
use crate::linalg::{norm, psd_sqrt_tol, DenseOperator, NormKind, C64};
use crate::minimax::discrete_minimax;
use crate::pauli::{synthesize, PauliExpansion, DROP_TOL};

/// Spectral norms up to `1 + NORM_SLACK` count as contractions.
pub const NORM_SLACK: f64 = 1e-9;

/// `A^up = [[A, (I - A A^dag)^1/2], [-(I - A^dag A)^1/2, A^dag]]` on `q + 1`
/// wires; the new wire is wire 0, so `A` is the block with that wire in `|0>`.
pub fn unitary_dilate(a: &DenseOperator) -> Result<DenseOperator> {
    let s = norm(a, NormKind::Spectral);
    if s > 1.0 + NORM_SLACK {
        return Err(Error::Norm(s));
    }
    let q = a.qubits();
    check_capacity(q + 1)?;
    let id = DenseOperator::identity(q);
    let ad = a.adjoint();
    // Round-off eigenvalues of a near-isometry would otherwise turn into ~1e-8 entries.
    let floor = 64.0 * f64::EPSILON * a.dim() as f64;
    let c = psd_sqrt_tol(&id.sub(&a.matmul(&ad)?)?, 1e-8, floor)?;
    let d = psd_sqrt_tol(&id.sub(&ad.matmul(a)?)?, 1e-8, floor)?;
    let n = a.dim();
    Ok(DenseOperator::from_fn(q + 1, |r, col| match (r < n, col < n) {
        (true, true) => a.get(r, col),
        (true, false) => c.get(r, col - n),
        (false, true) => -d.get(r - n, col),
        (false, false) => ad.get(r - n, col - n),
    }))
}

/// Pairwise-disjoint wire subsets used to attach flag qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DilationEnsemble {
    sets: Vec<Vec<usize>>,
}

impl DilationEnsemble {
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for set in &sets {
            for &w in set {
                if !seen.insert(w) {
                    return Err(Error::invalid(format!("ensemble sets overlap on wire {w}")));
                }
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Bit `i` set iff the string acts non-trivially somewhere on set `i`.
    pub(crate) fn touched(&self, s: &crate::pauli::PauliString) -> usize {
        self.sets
            .iter()
            .enumerate()
            .filter(|(_, set)| set.iter().any(|&w| s.letter(w) != 0))
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// `sum_sigma A(sigma) B_sigma (x) L(sigma_S1) (x) ... (x) L(sigma_Sm)` with
/// `L = |0><0|` on touched sets and `I` otherwise. Flag wire `i` is wire `q + i`.
pub fn operator_dilate(p: &PauliExpansion, e: &DilationEnsemble) -> Result<DenseOperator> {
    let q = p.qubits();
    if e.sets.iter().flatten().any(|&w| w >= q) {
        return Err(Error::arg("ensemble wire outside the operator's range"));
    }
    let m = e.len();
    check_capacity(q + m)?;
    // Group terms by touched pattern.
    let mut groups = vec![PauliExpansion::new(q); 1 << m];
    for (s, c) in p.iter() {
        groups[e.touched(s)].add_term(*s, *c)?;
    }
    // Block for flag pattern y: sum over patterns avoiding the flags set in y.
    let mut blocks: Vec<DenseOperator> = groups.iter().map(synthesize).collect::<Result<_>>()?;
    for bit in 0..m {
        for t in 0..1usize << m {
            if t & (1 << bit) != 0 {
                let lower = blocks[t ^ (1 << bit)].clone();
                blocks[t] = blocks[t].add(&lower)?;
            }
        }
    }
    let flag_mask = |y: usize| {
        // Flag i is bit m-1-i of y; convert to ensemble bit order.
        (0..m).filter(|i| y >> (m - 1 - i) & 1 == 0).fold(0, |acc, i| acc | 1 << i)
    };
    let fm = 1usize << m;
    let ops: Vec<&DenseOperator> = (0..fm).map(|y| &blocks[flag_mask(y)]).collect();
    Ok(DenseOperator::from_fn(q + m, |r, c| {
        let (y, yc) = (r % fm, c % fm);
        if y == yc {
            ops[y].get(r / fm, c / fm)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Pauli coefficient of `Z_S` (any `|S| = j`) in `diag(g(|x|))` on `k = values.len() - 1` wires.
pub fn symmetric_pauli_coefficients(values: &[f64]) -> Vec<f64> {
    let k = values.len() - 1;
    let binom = binomial_table(k);
    (0..=k)
        .map(|j| {
            let mut acc = 0.0;
            for a in 0..=j {
                for b in 0..=k - j {
                    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binom[j][a] * binom[k - j][b] * values[a + b];
                }
            }
            acc / 2f64.powi(k as i32)
        })
        .collect()
}

pub(crate) fn binomial_table(k: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; k + 1]; k + 1];
    for n in 0..=k {
        t[n][0] = 1.0;
        for r in 1..=n {
            t[n][r] = t[n - 1][r - 1] + if r < n { t[n - 1][r] } else { 0.0 };
        }
    }
    t
}

/// Largest `j` whose symmetric coefficient survives [`DROP_TOL`].
pub fn symmetric_degree(values: &[f64]) -> usize {
    symmetric_pauli_coefficients(values)
        .iter()
        .rposition(|c| c.abs() >= DROP_TOL)
        .unwrap_or(0)
}

/// `diag(values[|x|])` on `values.len() - 1` wires.
pub fn symmetric_operator(values: &[f64]) -> Result<DenseOperator> {
    let k = values.len() - 1;
    check_capacity(k)?;
    let diag: Vec<C64> = (0..1usize << k)
        .map(|x| C64::new(values[x.count_ones() as usize], 0.0))
        .collect();
    DenseOperator::from_diagonal(k, &diag)
}

/// Symmetric low-degree approximation of `CZ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CzApproxResult {
    pub k: usize,
    pub r: f64,
    /// Polynomial degree budget `min(k, ceil(sqrt(k r)))`.
    pub degree_budget: usize,
    /// Pauli degree of the operator.
    pub degree: usize,
    /// `p(0), ..., p(k)` after rescaling.
    pub poly_values: Vec<f64>,
    /// Minimax error before rescaling.
    pub minimax_error: f64,
    /// Whether `p` was divided by `max |p(w)|`.
    pub rescaled: bool,
    /// `max_w |p(w) - f(w)|`, equal to `||CZ_k - p(W)||`.
    pub spectral_error: f64,
    /// `2^(1 - r/256) log2(e)`.
    pub paper_bound: f64,
}

impl CzApproxResult {
    pub fn operator(&self) -> Result<DenseOperator> {
        symmetric_operator(&self.poly_values)
    }

    /// The bound is informative only when it is at most 2 (`||CZ - M|| <= 2` always).
    pub fn bound_is_vacuous(&self) -> bool {
        self.paper_bound > 2.0
    }
}

/// `2^(1 - r/256) log2(e)`.
pub fn cz_error_bound(r: f64) -> f64 {
    2f64.powf(1.0 - r / 256.0) * std::f64::consts::LOG2_E
}

/// `min(k, ceil(sqrt(k r)))`, robust to round-off at exact squares.
pub fn cz_degree_budget(k: usize, r: f64) -> usize {
    let x = (k as f64 * r).sqrt();
    ((x - 1e-9).ceil().max(0.0) as usize).min(k)
}

/// Target values of `CZ_k` on Hamming weights `0..=k`.
pub fn cz_spectrum(k: usize) -> Vec<f64> {
    (0..=k).map(|w| if w == k { -1.0 } else { 1.0 }).collect()
}

/// Best symmetric approximation of `CZ_k` of degree `min(k, ceil(sqrt(k r)))`,
/// rescaled to a contraction when needed. Accepts `1 < r <= k`.
pub fn cz_low_degree_approx(k: usize, r: f64) -> Result<CzApproxResult> {
    if k < 2 {
        return Err(Error::arg("CZ approximation needs k >= 2"));
    }
    if !(r > 1.0 && r <= k as f64) {
        return Err(Error::arg(format!("r = {r} outside (1, {k}]")));
    }
    let budget = cz_degree_budget(k, r);
    Ok(cz_approx_with_degree(k, r, budget))
}

pub(crate) fn cz_approx_with_degree(k: usize, r: f64, budget: usize) -> CzApproxResult {
    let target = cz_spectrum(k);
    let (values, minimax_error) = if budget >= k {
        (target.clone(), 0.0)
    } else {
        let pts: Vec<f64> = (0..=k).map(|w| w as f64).collect();
        let p = discrete_minimax(&pts, &target, budget).expect("valid minimax input");
        (p.values, p.error)
    };
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rescaled = peak > 1.0;
    let values: Vec<f64> = if rescaled { values.iter().map(|v| v / peak).collect() } else { values };
    let spectral_error = values
        .iter()
        .zip(&target)
        .map(|(v, f)| (v - f).abs())
        .fold(0.0, f64::max);
    CzApproxResult {
        k,
        r,
        degree_budget: budget,
        degree: symmetric_degree(&values),
        poly_values: values,
        minimax_error,
        rescaled,
        spectral_error,
        paper_bound: cz_error_bound(r),
    }
}
