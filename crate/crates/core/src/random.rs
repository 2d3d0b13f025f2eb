//! Random operators and circuits for tests and experiments.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{norm, DenseOperator, NormKind, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(qubits: usize, rng: &mut impl Rng) -> DenseOperator {
    DenseOperator::from_fn(qubits, |_, _| gaussian(rng))
}

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
pub fn haar_unitary(qubits: usize, rng: &mut impl Rng) -> DenseOperator {
    let g = ginibre(qubits, rng).into_matrix();
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for c in 0..q.ncols() {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..q.nrows() {
            q[(row, c)] *= phase;
        }
    }
    DenseOperator::from_parts(qubits, q)
}

/// Random Hermitian matrix `(G + G^dagger)/2`.
pub fn hermitian(qubits: usize, rng: &mut impl Rng) -> DenseOperator {
    let g = ginibre(qubits, rng);
    g.add(&g.adjoint()).expect("same shape").scale_real(0.5)
}

/// Random operator with spectral norm drawn uniformly from `(0, 1]`.
pub fn contraction(qubits: usize, rng: &mut impl Rng) -> DenseOperator {
    let g = ginibre(qubits, rng);
    let target: f64 = 1.0 - rng.random::<f64>();
    let n = norm(&g, NormKind::Spectral);
    g.scale_real(target / n)
}

/// Random mixed state `G G^dagger / Tr(G G^dagger)`.
pub fn density(qubits: usize, rng: &mut impl Rng) -> DenseOperator {
    let g = ginibre(qubits, rng);
    let w = g.matmul(&g.adjoint()).expect("same shape");
    let tr = w.trace().re;
    w.scale_real(1.0 / tr)
}

/// Haar-random pure state vector.
pub fn pure_state(qubits: usize, rng: &mut impl Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..1usize << qubits).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= n;
    }
    v
}
