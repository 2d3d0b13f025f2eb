#![allow(dead_code)]

use nalgebra::DMatrix;
use qlc0_core::{DenseOperator, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest singular value through a full SVD, independent of the library's norm code.
pub fn svd_norm(a: &DenseOperator) -> f64 {
    a.matrix().clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn naive_kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

pub fn naive_matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    DMatrix::from_fn(n, b.ncols(), |r, c| (0..a.ncols()).map(|k| a[(r, k)] * b[(k, c)]).sum())
}

/// `Tr(B_sigma a) / 2^q` from dense matrices.
pub fn trace_coefficient(a: &DenseOperator, letters: &[u8]) -> C64 {
    let pauli = pauli_dense(letters);
    let prod = naive_matmul(&pauli, a.matrix());
    prod.trace() / a.dim() as f64
}

pub fn pauli_dense(letters: &[u8]) -> DMatrix<C64> {
    let one = |l: u8| -> DMatrix<C64> {
        let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        match l {
            0 => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            1 => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            2 => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            _ => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    };
    letters.iter().fold(DMatrix::from_element(1, 1, C64::new(1.0, 0.0)), |acc, &l| naive_kron(&acc, &one(l)))
}

pub fn all_letters(q: usize) -> Vec<Vec<u8>> {
    (0..1usize << (2 * q))
        .map(|i| (0..q).map(|w| ((i >> (2 * (q - 1 - w))) & 3) as u8).collect())
        .collect()
}
