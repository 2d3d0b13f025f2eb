mod common;

use std::collections::BTreeMap;

use common::*;
use qlc0_core::circuit::{choi_of_unitary, random_layered, Layer, Qac0Circuit};
use qlc0_core::linalg::{norm, NormKind};
use qlc0_core::pauli::{pauli_matrix, PauliString};
use qlc0_core::random::{haar_unitary, hermitian};
use qlc0_core::reduction::{
    clean_unitary, doubled, heisenberg_blocks, heisenberg_slice, local_inversion, local_inversion_of,
    register_swap, run_reduction, sew, sewing_factor, swap_pair, wire_channel_choi, ReductionMode,
};
use qlc0_core::{DenseOperator, Error};

fn b_on(x: usize, wire: usize, n: usize) -> DenseOperator {
    pauli_matrix(&PauliString::single(n, wire, x as u8).unwrap()).unwrap()
}

/// Random Hermitian operator with spectral norm exactly `eps` (SVD-checked).
fn planted(q: usize, eps: f64, r: &mut rand_chacha::ChaCha8Rng) -> DenseOperator {
    let h = hermitian(q, r);
    let s = svd_norm(&h);
    h.scale_real(eps / s)
}

fn random_clean(n: usize, depth: usize, seed: u64) -> Qac0Circuit {
    random_layered(n, 0, depth, n.max(2), &mut rng(seed)).unwrap()
}

#[test]
fn product_circuit_inverse_is_local() {
    let mut r = rng(80);
    let gates: BTreeMap<usize, DenseOperator> = (0..3).map(|w| (w, haar_unitary(1, &mut r))).collect();
    let c = Qac0Circuit::new(3, 0, None, vec![Layer::Single(gates)]).unwrap();
    let u = clean_unitary(&c).unwrap();
    for i in 0..3 {
        let inv = local_inversion(&c, i, None).unwrap();
        assert!(inv.residual < 1e-12);
        assert!(u.matmul(&inv.operator).unwrap().max_abs_diff(&DenseOperator::identity(3)) < 1e-12);
    }
}

#[test]
fn cz_circuit_is_an_involution() {
    let c = Qac0Circuit::new(2, 0, None, vec![Layer::Cz(vec![vec![0, 1]])]).unwrap();
    let u = clean_unitary(&c).unwrap();
    let inv = local_inversion(&c, 0, Some(&u)).unwrap();
    assert!(inv.residual < 1e-14);
}

#[test]
fn random_circuit_residuals() {
    for seed in 0..10 {
        let c = random_clean(3, 2, 200 + seed);
        for i in 0..3 {
            assert!(local_inversion(&c, i, None).unwrap().residual <= 1e-10);
        }
    }
}

#[test]
fn non_trivial_family_certified() {
    // V_i = U^dagger (W (x) I_i) for a random W off wire i.
    let u = clean_unitary(&random_clean(3, 2, 81)).unwrap();
    let mut r = rng(82);
    for i in 0..3 {
        let rest: Vec<usize> = (0..3).filter(|&w| w != i).collect();
        let w = DenseOperator::embed(&haar_unitary(2, &mut r), &rest, 3).unwrap();
        let v = u.adjoint().matmul(&w).unwrap();
        assert!(local_inversion_of(&u, i, Some(&v)).unwrap().residual < 1e-10);
    }
}

#[test]
fn bad_inversions_rejected() {
    let u = clean_unitary(&random_clean(2, 2, 83)).unwrap();
    let v = haar_unitary(2, &mut rng(84));
    assert!(matches!(local_inversion_of(&u, 0, Some(&v)), Err(Error::InvalidInversion(_))));
    let not_unitary = DenseOperator::identity(2).scale_real(0.5);
    assert!(matches!(local_inversion_of(&u, 0, Some(&not_unitary)), Err(Error::InvalidInversion(_))));
    assert!(local_inversion_of(&u, 2, None).is_err());
}

#[test]
fn dirty_ancilla_rejected() {
    let h = DenseOperator::from_fn(1, |r, col| {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c(if r == 1 && col == 1 { -s } else { s })
    });
    let c = Qac0Circuit::new(1, 1, None, vec![Layer::Single(BTreeMap::from([(1, h)]))]).unwrap();
    assert!(matches!(clean_unitary(&c), Err(Error::Validation(_))));
}

#[test]
fn clean_ancilla_projected() {
    // CZ onto a |0> ancilla never fires.
    let mut r = rng(85);
    let g = haar_unitary(1, &mut r);
    let c = Qac0Circuit::new(
        1,
        1,
        None,
        vec![Layer::Single(BTreeMap::from([(0, g.clone())])), Layer::Cz(vec![vec![0, 1]])],
    )
    .unwrap();
    assert!(clean_unitary(&c).unwrap().max_abs_diff(&g) < 1e-12);
}

#[test]
fn heisenberg_identity_inversion() {
    for n in 1..=3 {
        for i in 0..n {
            let m = wire_channel_choi(&DenseOperator::identity(n), i).unwrap();
            for x in 0..4 {
                let q = heisenberg_slice(&m, x).unwrap();
                assert!(q.max_abs_diff(&b_on(x, i, n)) < 1e-12);
            }
        }
    }
}

#[test]
fn heisenberg_exact_and_perturbed() {
    let mut r = rng(86);
    for _ in 0..10 {
        let v = haar_unitary(2, &mut r);
        for i in 0..2 {
            let m = wire_channel_choi(&v, i).unwrap();
            let blocks = heisenberg_blocks(&m).unwrap();
            assert!(blocks[0].max_abs_diff(&DenseOperator::identity(2)) < 1e-15);
            let eps = 0.05;
            let noisy = m.add(&planted(3, eps, &mut r)).unwrap();
            for x in 0..4 {
                let target = b_on(x, i, 2).conjugate_local(&v, &[0, 1]).unwrap();
                assert!(svd_norm(&blocks[x].sub(&target).unwrap()) <= 1e-9);
                let q = heisenberg_slice(&noisy, x).unwrap();
                assert!(svd_norm(&q.sub(&target).unwrap()) <= 2.0 * eps + 1e-12);
            }
        }
    }
}

#[test]
fn swap_decomposition_exact() {
    for n in 1..=3 {
        let mut full = DenseOperator::identity(2 * n);
        for i in 0..n {
            let mut sum = DenseOperator::zeros(2 * n);
            for x in 0..4 {
                let mut letters = vec![0u8; 2 * n];
                letters[i] = x as u8;
                letters[i + n] = x as u8;
                sum = sum.add(&DenseOperator::new(2 * n, pauli_dense(&letters)).unwrap()).unwrap();
            }
            let s = swap_pair(n, i).unwrap();
            assert!(sum.scale_real(0.5).max_abs_diff(&s) < 1e-12);
            full = full.matmul(&s).unwrap();
        }
        assert!(full.max_abs_diff(&register_swap(n).unwrap()) < 1e-12);
    }
}

#[test]
fn sewing_identity_exhaustive() {
    for n in 1..=3 {
        for t in 0..30 {
            let u = clean_unitary(&random_clean(n, 2, 1000 * n as u64 + t)).unwrap();
            let v = u.adjoint();
            let mut q = register_swap(n).unwrap();
            for i in 0..n {
                q = q.matmul(&sewing_factor(&v, i).unwrap()).unwrap();
            }
            let target = doubled(&u).unwrap();
            assert!(svd_norm(&q.sub(&target).unwrap()) <= 1e-8);
            // Same through Heisenberg blocks of exact Choi representations.
            let blocks = (0..n).map(|i| heisenberg_blocks(&wire_channel_choi(&v, i).unwrap()).unwrap()).collect();
            let sewn = sew(blocks, n).unwrap();
            assert!(svd_norm(&sewn.operator.sub(&target).unwrap()) <= 1e-8);
        }
    }
}

#[test]
fn sewing_identity_general_family() {
    let n = 3;
    let u = clean_unitary(&random_clean(n, 2, 87)).unwrap();
    let mut r = rng(88);
    let mut q = register_swap(n).unwrap();
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&w| w != i).collect();
        let w = DenseOperator::embed(&haar_unitary(2, &mut r), &rest, n).unwrap();
        let v = u.adjoint().matmul(&w).unwrap();
        q = q.matmul(&sewing_factor(&v, i).unwrap()).unwrap();
    }
    assert!(svd_norm(&q.sub(&doubled(&u).unwrap()).unwrap()) <= 1e-8);
}

#[test]
fn sew_rejects_missing_blocks() {
    let id = DenseOperator::identity(2);
    let b = [id.clone(), id.clone(), id.clone(), id];
    assert!(sew(vec![b], 2).is_err());
}

#[test]
fn hybrid_bound() {
    let mut r = rng(89);
    for n in 1..=3 {
        for t in 0..10 {
            let u = clean_unitary(&random_clean(n, 2, 5000 + 10 * n as u64 + t)).unwrap();
            let v = u.adjoint();
            let eps_v = 0.2 / n as f64 * (t + 1) as f64 / 10.0;
            let mut q = register_swap(n).unwrap();
            for i in 0..n {
                let f = sewing_factor(&v, i).unwrap().add(&planted(2 * n, eps_v, &mut r)).unwrap();
                q = q.matmul(&f).unwrap();
            }
            let err = svd_norm(&q.sub(&doubled(&u).unwrap()).unwrap());
            assert!(err <= 3.0 * n as f64 * eps_v + 1e-9, "n={n} eps_v={eps_v}: {err}");
        }
    }
}

#[test]
fn exact_reduction_end_to_end() {
    for t in 0..5 {
        let c = random_clean(2, 2, 90 + t);
        let rep = run_reduction(&c, &ReductionMode::Exact).unwrap();
        assert!(rep.final_error <= 1e-7);
        assert!(rep.within_bounds());
        for w in &rep.wires {
            assert!(w.factor_error < 1e-9 && w.choi_error < 1e-12);
        }
        for b in &rep.sewn.per_wire_blocks {
            assert!(b[0].max_abs_diff(&DenseOperator::identity(2)) < 1e-15);
        }
    }
}

#[test]
fn sampled_reduction_meets_learner_bound() {
    let mut ok = 0;
    for t in 0..30u64 {
        let c = random_clean(2, 2, 300 + t);
        let rep = run_reduction(&c, &ReductionMode::sampled(0.02, 0.1, t)).unwrap();
        assert_eq!(rep.learner_bound, Some(0.36));
        if rep.final_error <= 0.36 {
            ok += 1;
        }
    }
    assert!(ok >= 27, "{ok}/30");
}

#[test]
fn injected_wire_error() {
    let mut r = rng(91);
    let n = 2;
    for t in 0..10 {
        let u = clean_unitary(&random_clean(n, 2, 400 + t)).unwrap();
        let v = u.adjoint();
        let eps = 0.01;
        let blocks = (0..n)
            .map(|i| {
                let mut m = wire_channel_choi(&v, i).unwrap();
                if i == 0 {
                    m = m.add(&planted(n + 1, eps, &mut r)).unwrap();
                }
                heisenberg_blocks(&m).unwrap()
            })
            .collect();
        let sewn = sew(blocks, n).unwrap();
        let factor_err = svd_norm(&sewn.factors[0].sub(&sewing_factor(&v, 0).unwrap()).unwrap());
        assert!(factor_err <= 3.0 * eps + 1e-12);
        let err = svd_norm(&sewn.operator.sub(&doubled(&u).unwrap()).unwrap());
        assert!(err <= 3.0 * n as f64 * 3.0 * eps, "{err}");
    }
}

#[test]
fn dual_channel_transpose() {
    // Phi(rho) = Tr_{-i}(W rho W^dagger), Phi*(Y) = W^dagger Y_i W.
    let mut r = rng(92);
    for n in 1..=3 {
        for i in 0..n {
            let w = haar_unitary(n, &mut r);
            let j = choi_of_unitary(&w, n, &[c(1.0)], &[i]).unwrap().representation;
            let dual: Vec<Vec<DenseOperator>> = (0..2)
                .map(|a| {
                    (0..2)
                        .map(|b| {
                            let e = DenseOperator::from_fn(1, |row, col| c(if row == a && col == b { 1.0 } else { 0.0 }));
                            let y = DenseOperator::embed(&e, &[i], n).unwrap();
                            w.adjoint().matmul(&y).unwrap().matmul(&w).unwrap()
                        })
                        .collect()
                })
                .collect();
            // Entry ((x, a), (y, b)) = <x| Phi*(|a><b|) |y>, laid out input-register first.
            let jd = DenseOperator::from_fn(n + 1, |row, col| dual[row & 1][col & 1].get(row >> 1, col >> 1));
            assert!(j.transpose().max_abs_diff(&jd) < 1e-10);
        }
    }
}

#[test]
fn completion_order_independent() {
    let c = random_clean(3, 2, 93);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let mode = ReductionMode::sampled(0.05, 0.1, 7);
    let a = one.install(|| run_reduction(&c, &mode).unwrap());
    let b = four.install(|| run_reduction(&c, &mode).unwrap());
    assert_eq!(a.sewn, b.sewn);
    assert_eq!(a.wires, b.wires);
    assert_eq!(a.final_error, b.final_error);
}

#[test]
fn spectral_norm_consistent() {
    let a = planted(3, 0.3, &mut rng(94));
    assert!((norm(&a, NormKind::Spectral) - 0.3).abs() < 1e-10);
}
