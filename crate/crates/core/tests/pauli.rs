mod common;

use common::*;
use proptest::prelude::*;
use qlc0_core::circuit::cz_gate;
use qlc0_core::linalg::eigenvalues_hermitian;
use qlc0_core::pauli::{coefficient, expand, pauli_matrix, synthesize};
use qlc0_core::random::{ginibre, haar_unitary};
use qlc0_core::{norm, DenseOperator, NormKind, PauliExpansion, PauliString, C64};
use rand::Rng;

fn ps(s: &str) -> PauliString {
    s.parse().unwrap()
}

#[test]
fn pauli_matrix_examples() {
    let z = pauli_matrix(&PauliString::new(&[3]).unwrap()).unwrap();
    let zd = DenseOperator::from_diagonal(1, &[c(1.0), c(-1.0)]).unwrap();
    assert_eq!(z, zd);
    assert_eq!(pauli_matrix(&PauliString::new(&[0, 0]).unwrap()).unwrap(), DenseOperator::identity(2));
    let xy = pauli_matrix(&PauliString::new(&[1, 2]).unwrap()).unwrap();
    assert!(xy.matmul(&xy).unwrap().max_abs_diff(&DenseOperator::identity(2)) < 1e-15);
    assert!(xy.trace().norm() < 1e-15);
}

#[test]
fn pauli_matrices_match_kronecker_oracle() {
    for letters in all_letters(3) {
        let m = pauli_matrix(&PauliString::new(&letters).unwrap()).unwrap();
        let oracle = pauli_dense(&letters);
        assert!((m.matrix() - oracle).iter().all(|z| z.norm() < 1e-15));
    }
}

#[test]
fn orthonormality_exhaustive() {
    for q in 1..=3 {
        let all = all_letters(q);
        let mats: Vec<_> = all.iter().map(|l| pauli_matrix(&PauliString::new(l).unwrap()).unwrap()).collect();
        for (i, a) in mats.iter().enumerate() {
            for (j, b) in mats.iter().enumerate() {
                let ip = a.adjoint().matmul(b).unwrap().trace() / a.dim() as f64;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn expand_examples() {
    let z = expand(&pauli_matrix(&ps("Z")).unwrap());
    assert_eq!(z.len(), 1);
    assert!((z.get(&ps("Z")) - c(1.0)).norm() < 1e-15);
    let i = expand(&DenseOperator::identity(3));
    assert_eq!(i.len(), 1);
    assert!((i.get(&ps("III")) - c(1.0)).norm() < 1e-15);
}

#[test]
fn cz2_expansion_against_trace_oracle() {
    let cz = cz_gate(2).unwrap();
    let e = expand(&cz);
    for letters in all_letters(2) {
        let s = PauliString::new(&letters).unwrap();
        assert!((e.get(&s) - trace_coefficient(&cz, &letters)).norm() < 1e-14);
    }
    assert_eq!(e.len(), 4);
    assert!((e.get(&ps("ZZ")) - c(-0.5)).norm() < 1e-15);
    let t = e.truncate_degree(1);
    assert_eq!(t.len(), 3);
    assert!(t.get(&ps("ZZ")).norm() == 0.0);
    assert!((t.get(&ps("IZ")) - c(0.5)).norm() < 1e-15);
}

#[test]
fn synthesize_examples() {
    let one = PauliExpansion::monomial(ps("I"), c(1.0));
    assert_eq!(synthesize(&one).unwrap(), DenseOperator::identity(1));
    let p = PauliExpansion::from_terms(1, [(ps("Z"), c(2.0)), (ps("X"), c(1.0))]).unwrap();
    let ev = eigenvalues_hermitian(&synthesize(&p).unwrap());
    assert!((ev[0] + 5f64.sqrt()).abs() < 1e-12 && (ev[1] - 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn round_trip_random_operators() {
    let mut r = rng(11);
    for _ in 0..50 {
        let a = ginibre(3, &mut r);
        let back = synthesize(&expand(&a)).unwrap();
        assert!(svd_norm(&back.sub(&a).unwrap()) < 1e-10);
    }
}

#[test]
fn coefficients_match_trace_oracle() {
    let mut r = rng(12);
    let a = ginibre(3, &mut r);
    let e = expand(&a);
    for letters in all_letters(3) {
        let s = PauliString::new(&letters).unwrap();
        let oracle = trace_coefficient(&a, &letters);
        assert!((e.get(&s) - oracle).norm() < 1e-12);
        assert!((coefficient(&a, &s).unwrap() - oracle).norm() < 1e-12);
    }
}

#[test]
fn truncation_edge_cases() {
    let mut r = rng(13);
    let a = expand(&ginibre(2, &mut r));
    assert_eq!(a.truncate_degree(2), a);
    let x = expand(&pauli_matrix(&ps("XI")).unwrap());
    assert!(x.truncate_degree(0).is_empty());
    assert_eq!(PauliExpansion::new(3).degree(), 0);
}

#[test]
fn csv_export_has_header_and_rows() {
    let mut buf = Vec::new();
    expand(&cz_gate(2).unwrap()).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma_string,weight,re,im");
    assert_eq!(lines.len(), 5);
    assert!(lines.contains(&"ZZ,2,-0.5,0"));
}

#[test]
fn csv_round_trip() {
    let mut r = rng(31);
    let p = random_low_degree(3, 2, &mut r);
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    assert_eq!(PauliExpansion::read_csv(&buf[..]).unwrap(), p);
    assert!(PauliExpansion::read_csv("sigma_string,weight,re,im\n".as_bytes()).is_err());
    assert!(PauliExpansion::read_csv("sigma_string,weight,re,im\nXQ,1,0.5,0\n".as_bytes()).is_err());
}

fn random_low_degree(q: usize, d: usize, r: &mut impl Rng) -> PauliExpansion {
    let mut p = PauliExpansion::new(q);
    for letters in all_letters(q) {
        let s = PauliString::new(&letters).unwrap();
        if s.weight() <= d && r.random::<f64>() < 0.6 {
            p.add_term(s, C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).unwrap();
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in any::<u64>(), q in 1usize..5) {
        let a = ginibre(q, &mut rng(seed));
        let e = expand(&a);
        let lhs = norm(&a, NormKind::Schatten2Normalized).powi(2);
        let rhs: f64 = e.iter().map(|(_, c)| c.norm_sqr()).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn truncation_is_the_two_norm_projection(seed in any::<u64>(), q in 1usize..4, d in 0usize..3) {
        let mut r = rng(seed);
        let a = expand(&ginibre(q, &mut r));
        let t = a.truncate_degree(d);
        let base = a.sub(&t).unwrap().l2_norm();
        prop_assert!((a.l2_norm().powi(2) - t.l2_norm().powi(2) - base.powi(2)).abs() < 1e-10);
        for _ in 0..10 {
            let b = random_low_degree(q, d, &mut r);
            prop_assert!(base <= a.sub(&b).unwrap().l2_norm() + 1e-12);
        }
    }

    #[test]
    fn local_conjugation_keeps_support(seed in any::<u64>(), letters in proptest::collection::vec(0u8..4, 3)) {
        let mut r = rng(seed);
        let s = PauliString::new(&letters).unwrap();
        let mut op = pauli_matrix(&s).unwrap();
        for w in 0..3 {
            op = op.conjugate_local(&haar_unitary(1, &mut r), &[w]).unwrap();
        }
        let e = expand(&op);
        for (t, _) in e.iter() {
            prop_assert!(t.support().iter().all(|w| s.support().contains(w)));
        }
        prop_assert_eq!(e.degree(), s.weight());
    }
}
