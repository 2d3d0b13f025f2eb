//! Dense complex operators on `q` qubits.
//!
//! Wire 0 is the most significant tensor factor: basis index
//! `x = sum_w b_w 2^(q-1-w)`. Every module relies on this convention.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::check_capacity;
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues in `[-PSD_CLAMP_TOL, 0)` are treated as round-off and clamped.
pub const PSD_CLAMP_TOL: f64 = 1e-9;

/// A square complex matrix of dimension `2^qubits`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    qubits: usize,
    data: DMatrix<C64>,
}

/// Which matrix norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    /// Largest singular value.
    Spectral,
    /// `sqrt(Tr(A^dagger A) / 2^q)`.
    Schatten2Normalized,
    /// `sqrt(Tr(A^dagger A))`.
    Frobenius,
    /// Sum of singular values.
    Trace,
}

impl DenseOperator {
    /// Wraps a matrix, checking that it is `2^qubits` square with finite entries.
    pub fn new(qubits: usize, data: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize
            .checked_shl(qubits as u32)
            .ok_or_else(|| Error::arg("qubit count overflows"))?;
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::arg(format!(
                "expected {dim}x{dim} matrix for {qubits} qubits, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("operator has non-finite entries"));
        }
        Ok(Self { qubits, data })
    }

    /// Infers the qubit count from the matrix dimension.
    pub fn from_matrix(data: DMatrix<C64>) -> Result<Self> {
        let dim = data.nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::arg(format!("dimension {dim} is not a power of two")));
        }
        Self::new(dim.trailing_zeros() as usize, data)
    }

    pub(crate) fn from_parts(qubits: usize, data: DMatrix<C64>) -> Self {
        debug_assert_eq!(data.nrows(), 1 << qubits);
        Self { qubits, data }
    }

    pub fn identity(qubits: usize) -> Self {
        let d = 1 << qubits;
        Self::from_parts(qubits, DMatrix::identity(d, d))
    }

    pub fn zeros(qubits: usize) -> Self {
        let d = 1 << qubits;
        Self::from_parts(qubits, DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(qubits: usize, diag: &[C64]) -> Result<Self> {
        if diag.len() != 1 << qubits {
            return Err(Error::arg("diagonal length does not match qubit count"));
        }
        let d = diag.len();
        let mut m = DMatrix::zeros(d, d);
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        Self::new(qubits, m)
    }

    pub fn from_fn(qubits: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = 1 << qubits;
        Self::from_parts(qubits, DMatrix::from_fn(d, d, f))
    }

    /// `|psi><psi|` for a state vector of length `2^q`.
    pub fn projector(psi: &[C64]) -> Result<Self> {
        let m = DMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj());
        Self::from_matrix(m)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.qubits, self.data.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::from_parts(self.qubits, self.data.transpose())
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_parts(self.qubits, &self.data * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_parts(self.qubits, &self.data * &other.data))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_parts(self.qubits, &self.data + &other.data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_parts(self.qubits, &self.data - &other.data))
    }

    /// `self * other * self^dagger`.
    pub fn conjugate(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_parts(
            self.qubits,
            &self.data * &other.data * self.data.adjoint(),
        ))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.qubits != other.qubits {
            return Err(Error::arg(format!(
                "qubit mismatch: {} vs {}",
                self.qubits, other.qubits
            )));
        }
        Ok(())
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (i..d).all(|j| (self.data[(i, j)] - self.data[(j, i)].conj()).norm() <= tol))
    }

    /// Spectral-norm distance of `A^dagger A` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.data.adjoint() * &self.data;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        spectral_norm_of(&(prod - id))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Checks that the operator is a density matrix: Hermitian, PSD and unit trace.
    pub fn validate_density(&self, tol: f64) -> Result<()> {
        if !self.is_hermitian(tol) {
            return Err(Error::invalid("state is not Hermitian"));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::invalid(format!("state has trace {tr}, expected 1")));
        }
        let min = hermitian_eigen(&self.data).0.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::invalid(format!(
                "state is not positive semi-definite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    /// Returns the operator with wires reordered so that new wire `j` is old
    /// wire `order[j]`.
    pub fn reorder_wires(&self, order: &[usize]) -> Result<Self> {
        let q = self.qubits;
        check_permutation(order, q)?;
        let d = self.dim();
        let map: Vec<usize> = (0..d)
            .map(|x| {
                let mut old = 0usize;
                for (j, &w) in order.iter().enumerate() {
                    if x >> (q - 1 - j) & 1 == 1 {
                        old |= 1 << (q - 1 - w);
                    }
                }
                old
            })
            .collect();
        Ok(Self::from_parts(
            q,
            DMatrix::from_fn(d, d, |i, j| self.data[(map[i], map[j])]),
        ))
    }

    /// Left-multiplies in place by `op` acting on `wires` (op's wire k is `wires[k]`).
    pub fn apply_left(&mut self, op: &DenseOperator, wires: &[usize]) -> Result<()> {
        let layout = LocalLayout::new(self.qubits, wires, op.qubits)?;
        let d = self.dim();
        let k = layout.local.len();
        let mut buf = vec![ZERO; k];
        for col in 0..d {
            for &base in &layout.other {
                for (s, &off) in layout.local.iter().enumerate() {
                    buf[s] = self.data[(base + off, col)];
                }
                for (s, &off) in layout.local.iter().enumerate() {
                    let mut acc = ZERO;
                    for (t, b) in buf.iter().enumerate() {
                        acc += op.data[(s, t)] * b;
                    }
                    self.data[(base + off, col)] = acc;
                }
            }
        }
        Ok(())
    }

    /// Right-multiplies in place by `op` acting on `wires`.
    pub fn apply_right(&mut self, op: &DenseOperator, wires: &[usize]) -> Result<()> {
        let layout = LocalLayout::new(self.qubits, wires, op.qubits)?;
        let d = self.dim();
        let k = layout.local.len();
        let mut buf = vec![ZERO; k];
        for row in 0..d {
            for &base in &layout.other {
                for (s, &off) in layout.local.iter().enumerate() {
                    buf[s] = self.data[(row, base + off)];
                }
                for (t, &off) in layout.local.iter().enumerate() {
                    let mut acc = ZERO;
                    for (s, b) in buf.iter().enumerate() {
                        acc += b * op.data[(s, t)];
                    }
                    self.data[(row, base + off)] = acc;
                }
            }
        }
        Ok(())
    }

    /// `op * self * op^dagger` with `op` acting on `wires`.
    pub fn conjugate_local(&self, op: &DenseOperator, wires: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.apply_left(op, wires)?;
        out.apply_right(&op.adjoint(), wires)?;
        Ok(out)
    }

    /// Promotes `op` on `wires` to the full `qubits`-wire space (identity elsewhere).
    pub fn embed(op: &DenseOperator, wires: &[usize], qubits: usize) -> Result<Self> {
        let layout = LocalLayout::new(qubits, wires, op.qubits)?;
        let d = 1 << qubits;
        let mut m = DMatrix::zeros(d, d);
        for &base in &layout.other {
            for (s, &so) in layout.local.iter().enumerate() {
                for (t, &to) in layout.local.iter().enumerate() {
                    m[(base + so, base + to)] = op.data[(s, t)];
                }
            }
        }
        Ok(Self::from_parts(qubits, m))
    }

    /// Sub-block selected by fixing `wires` to the basis values in `bits` on
    /// both sides (e.g. projecting flag wires onto `|0>`).
    pub fn project_wires(&self, wires: &[usize], bits: &[bool]) -> Result<Self> {
        if wires.len() != bits.len() {
            return Err(Error::arg("wires and bits differ in length"));
        }
        let q = self.qubits;
        let kept: Vec<usize> = (0..q).filter(|w| !wires.contains(w)).collect();
        let layout = LocalLayout::new(q, &kept, kept.len())?;
        let mut fixed = 0usize;
        for (&w, &b) in wires.iter().zip(bits) {
            if b {
                fixed |= 1 << (q - 1 - w);
            }
        }
        // `layout.other` enumerates the fixed wires; pick the requested assignment.
        let base = layout
            .other
            .iter()
            .copied()
            .find(|&o| o == fixed)
            .ok_or_else(|| Error::arg("projection wires out of range"))?;
        let d = layout.local.len();
        Ok(Self::from_parts(
            kept.len(),
            DMatrix::from_fn(d, d, |i, j| {
                self.data[(base + layout.local[i], base + layout.local[j])]
            }),
        ))
    }
}

/// Offsets used to address a wire subset inside a larger register.
struct LocalLayout {
    /// Full-index offset for each local basis state (local wire 0 most significant).
    local: Vec<usize>,
    /// Full-index offset for each assignment of the remaining wires.
    other: Vec<usize>,
}

impl LocalLayout {
    fn new(qubits: usize, wires: &[usize], op_qubits: usize) -> Result<Self> {
        if wires.len() != op_qubits {
            return Err(Error::arg(format!(
                "operator on {op_qubits} qubits applied to {} wires",
                wires.len()
            )));
        }
        let mut seen = vec![false; qubits];
        for &w in wires {
            if w >= qubits {
                return Err(Error::arg(format!("wire {w} out of range for {qubits} qubits")));
            }
            if std::mem::replace(&mut seen[w], true) {
                return Err(Error::arg(format!("wire {w} repeated")));
            }
        }
        let rest: Vec<usize> = (0..qubits).filter(|&w| !seen[w]).collect();
        Ok(Self {
            local: scatter_offsets(qubits, wires),
            other: scatter_offsets(qubits, &rest),
        })
    }
}

/// For each value of `wires.len()` bits (first wire most significant), the
/// corresponding full-register index contribution.
pub(crate) fn scatter_offsets(qubits: usize, wires: &[usize]) -> Vec<usize> {
    let k = wires.len();
    (0..1usize << k)
        .map(|v| {
            let mut off = 0;
            for (j, &w) in wires.iter().enumerate() {
                if v >> (k - 1 - j) & 1 == 1 {
                    off |= 1 << (qubits - 1 - w);
                }
            }
            off
        })
        .collect()
}

fn check_permutation(order: &[usize], q: usize) -> Result<()> {
    let mut seen = vec![false; q];
    if order.len() != q {
        return Err(Error::arg("wire order has wrong length"));
    }
    for &w in order {
        if w >= q || std::mem::replace(&mut seen[w], true) {
            return Err(Error::arg("wire order is not a permutation"));
        }
    }
    Ok(())
}

/// Kronecker product with `a` as the high-order block.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let q = a.qubits + b.qubits;
    check_capacity(q)?;
    Ok(DenseOperator::from_parts(q, a.data.kronecker(&b.data)))
}

/// Tensor product of a list of operators, first factor most significant.
pub fn tensor_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> Result<DenseOperator> {
    let mut acc = DenseOperator::identity(0);
    for op in ops {
        acc = tensor(&acc, op)?;
    }
    Ok(acc)
}

/// Traces out `traced` wires; the remaining wires keep their relative order.
pub fn partial_trace(a: &DenseOperator, traced: &[usize]) -> Result<DenseOperator> {
    let q = a.qubits;
    let mut is_traced = vec![false; q];
    for &w in traced {
        if w >= q {
            return Err(Error::arg(format!("wire {w} out of range for {q} qubits")));
        }
        is_traced[w] = true;
    }
    let kept: Vec<usize> = (0..q).filter(|&w| !is_traced[w]).collect();
    let gone: Vec<usize> = (0..q).filter(|&w| is_traced[w]).collect();
    let keep_off = scatter_offsets(q, &kept);
    let trace_off = scatter_offsets(q, &gone);
    let d = keep_off.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let (ri, cj) = (keep_off[i], keep_off[j]);
        trace_off
            .iter()
            .map(|&t| a.data[(ri + t, cj + t)])
            .sum::<C64>()
    });
    Ok(DenseOperator::from_parts(kept.len(), m))
}

pub(crate) fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

pub(crate) fn spectral_norm_of(m: &DMatrix<C64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Evaluates the requested norm.
pub fn norm(a: &DenseOperator, kind: NormKind) -> f64 {
    match kind {
        NormKind::Spectral => {
            // Hermitian inputs: the largest |eigenvalue| is the same quantity, and cheaper.
            let scale = a.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if a.is_hermitian(1e-14 * scale) {
                let h = (&a.data + a.data.adjoint()) * C64::new(0.5, 0.0);
                h.symmetric_eigenvalues().iter().fold(0.0, |m, v| m.max(v.abs()))
            } else {
                spectral_norm_of(&a.data)
            }
        }
        NormKind::Frobenius => a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        NormKind::Schatten2Normalized => {
            (a.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / a.dim() as f64).sqrt()
        }
        NormKind::Trace => singular_values(&a.data).into_iter().sum(),
    }
}

/// Eigen-decomposition of the Hermitian part of `m`: ascending eigenvalues and
/// the matching eigenvector columns.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Eigenvalues of a Hermitian operator, ascending.
pub fn eigenvalues_hermitian(a: &DenseOperator) -> Vec<f64> {
    hermitian_eigen(&a.data).0
}

/// Principal square root of a positive semi-definite operator.
pub fn psd_sqrt(a: &DenseOperator) -> Result<DenseOperator> {
    psd_sqrt_tol(a, PSD_CLAMP_TOL, 0.0)
}

/// As [`psd_sqrt`] with clamp tolerance `tol`; eigenvalues at or below
/// `floor` are treated as exact zeros.
pub(crate) fn psd_sqrt_tol(a: &DenseOperator, tol: f64, floor: f64) -> Result<DenseOperator> {
    let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if !a.is_hermitian(1e-9 * scale) {
        return Err(Error::precondition("psd_sqrt requires a Hermitian operator"));
    }
    let (vals, vecs) = hermitian_eigen(&a.data);
    if let Some(&min) = vals.first() {
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
    }
    let roots: Vec<f64> = vals.iter().map(|&v| if v <= floor { 0.0 } else { v.sqrt() }).collect();
    let d = a.dim();
    let mut scaled = vecs.clone();
    for c in 0..d {
        let r = C64::new(roots[c], 0.0);
        for row in 0..d {
            scaled[(row, c)] *= r;
        }
    }
    Ok(DenseOperator::from_parts(a.qubits, scaled * vecs.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_tensor_identity() {
        let i1 = DenseOperator::identity(1);
        assert_eq!(tensor(&i1, &i1).unwrap(), DenseOperator::identity(2));
    }

    #[test]
    fn z_tensor_z_is_diagonal() {
        let z = DenseOperator::from_diagonal(1, &[c(1.0), c(-1.0)]).unwrap();
        let zz = tensor(&z, &z).unwrap();
        let expect = DenseOperator::from_diagonal(2, &[c(1.0), c(-1.0), c(-1.0), c(1.0)]).unwrap();
        assert_eq!(zz, expect);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DenseOperator::projector(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        let m = partial_trace(&bell, &[1]).unwrap();
        assert!(m.max_abs_diff(&DenseOperator::identity(1).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random::ginibre(2, &mut rng);
        let b = random::ginibre(1, &mut rng);
        let ab = tensor(&a, &b).unwrap();
        let got = partial_trace(&ab, &[2]).unwrap();
        assert!(got.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let got = partial_trace(&ab, &[0, 1]).unwrap();
        assert!(got.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_wire() {
        assert!(matches!(
            partial_trace(&DenseOperator::identity(2), &[2]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn norms_of_simple_operators() {
        let id = DenseOperator::identity(3);
        assert!((norm(&id, NormKind::Schatten2Normalized) - 1.0).abs() < 1e-15);
        assert!((norm(&id, NormKind::Frobenius) - 8f64.sqrt()).abs() < 1e-12);
        assert!((norm(&id, NormKind::Trace) - 8.0).abs() < 1e-12);
        let d = DenseOperator::from_diagonal(1, &[c(3.0), c(4.0)]).unwrap();
        assert!((norm(&d, NormKind::Spectral) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_of_diagonal_and_zero() {
        let d = DenseOperator::from_diagonal(1, &[c(4.0), c(9.0)]).unwrap();
        let r = psd_sqrt(&d).unwrap();
        let expect = DenseOperator::from_diagonal(1, &[c(2.0), c(3.0)]).unwrap();
        assert!(r.max_abs_diff(&expect) < 1e-12);
        let z = psd_sqrt(&DenseOperator::zeros(2)).unwrap();
        assert!(z.max_abs_diff(&DenseOperator::zeros(2)) < 1e-15);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let d = DenseOperator::from_diagonal(1, &[c(1.0), c(-1e-6)]).unwrap();
        assert!(matches!(psd_sqrt(&d), Err(Error::NotPsd(_))));
        // Round-off sized negatives are clamped.
        let d = DenseOperator::from_diagonal(1, &[c(1.0), c(-1e-12)]).unwrap();
        assert!(psd_sqrt(&d).is_ok());
    }

    #[test]
    fn psd_sqrt_of_defect_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random::contraction(2, &mut rng);
            let defect = DenseOperator::identity(2).sub(&a.adjoint().matmul(&a).unwrap()).unwrap();
            let r = psd_sqrt(&defect).unwrap();
            let back = r.matmul(&r).unwrap().sub(&defect).unwrap();
            assert!(norm(&back, NormKind::Spectral) <= 1e-8);
        }
    }

    #[test]
    fn apply_left_matches_embedded_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = random::ginibre(3, &mut rng);
        let op = random::ginibre(2, &mut rng);
        let wires = [2, 0];
        let full = DenseOperator::embed(&op, &wires, 3).unwrap();
        let mut fast = target.clone();
        fast.apply_left(&op, &wires).unwrap();
        assert!(fast.max_abs_diff(&full.matmul(&target).unwrap()) < 1e-12);
        let mut fast = target.clone();
        fast.apply_right(&op, &wires).unwrap();
        assert!(fast.max_abs_diff(&target.matmul(&full).unwrap()) < 1e-12);
    }

    #[test]
    fn reorder_swaps_tensor_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::ginibre(1, &mut rng);
        let b = random::ginibre(2, &mut rng);
        let ab = tensor(&a, &b).unwrap();
        let ba = tensor(&b, &a).unwrap();
        assert!(ab.reorder_wires(&[1, 2, 0]).unwrap().max_abs_diff(&ba) < 1e-15);
    }

    #[test]
    fn project_wires_extracts_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random::ginibre(1, &mut rng);
        let b = random::ginibre(1, &mut rng);
        let p0 = DenseOperator::from_diagonal(1, &[c(1.0), c(0.0)]).unwrap();
        let full = tensor(&tensor(&a, &p0).unwrap(), &b).unwrap();
        let got = full.project_wires(&[1], &[false]).unwrap();
        assert!(got.max_abs_diff(&tensor(&a, &b).unwrap()) < 1e-15);
        assert!(full.project_wires(&[1], &[true]).unwrap().max_abs_diff(&DenseOperator::zeros(2)) < 1e-15);
    }
}
