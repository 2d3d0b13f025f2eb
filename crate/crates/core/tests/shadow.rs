mod common;

use common::*;
use qlc0_core::pauli::{coefficient, PauliString};
use qlc0_core::random::{density, pure_state};
use qlc0_core::shadow::{
    batch_count, collect_shadows, estimate_pauli_batch, estimate_purity, exact_purity, median_of_means,
    BornTable, ShadowCounts, ShadowSet,
};
use qlc0_core::{DenseOperator, Error};

fn strings_up_to(q: usize, d: usize) -> Vec<PauliString> {
    (0..1u64 << (2 * q))
        .map(|i| PauliString::from_index(q, i))
        .filter(|s| s.weight() <= d)
        .collect()
}

fn expectation(rho: &DenseOperator, s: &PauliString) -> f64 {
    // Tr(B rho) = 2^q * coefficient.
    (coefficient(rho, s).unwrap() * rho.dim() as f64).re
}

/// Chi-square statistic of observed counts against expected counts.
fn chi_square(obs: &[u64], expected: &[f64]) -> f64 {
    obs.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum()
}

#[test]
fn maximally_mixed_qubit_outcomes_are_uniform() {
    let rho = DenseOperator::identity(1).scale_real(0.5);
    let s = collect_shadows(&rho, 10_000, 7).unwrap();
    let c = ShadowCounts::from_samples(1, &s.samples);
    // 6 cells, 5 degrees of freedom; 20.52 is the 0.999 quantile.
    assert!(chi_square(&c.counts, &[10_000.0 / 6.0; 6]) < 20.52);
}

#[test]
fn zero_state_z_outcomes() {
    let rho = DenseOperator::projector(&[c(1.0), c(0.0)]).unwrap();
    let s = collect_shadows(&rho, 3000, 1).unwrap();
    assert!(s.samples.iter().filter(|x| x.basis_letters(1)[0] == 3).all(|x| x.outcome_signs(1)[0] == 1));
}

#[test]
fn non_density_rejected() {
    let bad = DenseOperator::identity(1);
    assert!(matches!(collect_shadows(&bad, 10, 0), Err(Error::Validation(_))));
}

#[test]
fn seed_determinism_and_thread_independence() {
    let rho = density(3, &mut rng(50));
    let a = collect_shadows(&rho, 20_000, 99).unwrap();
    let b = collect_shadows(&rho, 20_000, 99).unwrap();
    assert_eq!(a, b);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let c1 = one.install(|| collect_shadows(&rho, 20_000, 99).unwrap());
    let c4 = four.install(|| collect_shadows(&rho, 20_000, 99).unwrap());
    assert_eq!(c1, a);
    assert_eq!(c4, a);
    let obs = strings_up_to(3, 2);
    let a = a.with_batches(10).unwrap();
    let e1 = one.install(|| estimate_pauli_batch(&a, &obs, 2).unwrap());
    let e4 = four.install(|| estimate_pauli_batch(&a, &obs, 2).unwrap());
    assert_eq!(e1, e4);
    assert_ne!(collect_shadows(&rho, 100, 100).unwrap(), collect_shadows(&rho, 100, 99).unwrap());
}

#[test]
fn estimates_independent_of_partition() {
    let rho = density(2, &mut rng(51));
    let s = collect_shadows(&rho, 6000, 3).unwrap();
    let whole = ShadowCounts::from_samples(2, &s.samples);
    let mut merged = ShadowCounts::from_samples(2, &s.samples[..1234]);
    merged.merge(&ShadowCounts::from_samples(2, &s.samples[1234..4000]));
    merged.merge(&ShadowCounts::from_samples(2, &s.samples[4000..]));
    assert_eq!(merged, whole);
    let a = whole.pauli_means(2);
    let b = merged.pauli_means(2);
    assert_eq!(a, b);
}

#[test]
fn estimator_is_unbiased() {
    let mut r = rng(52);
    for trial in 0..3 {
        let rho = density(3, &mut r);
        let s = collect_shadows(&rho, 100_000, 1000 + trial).unwrap();
        for sigma in strings_up_to(3, 3) {
            let vals: Vec<f64> = s.samples.iter().map(|x| x.estimate(&sigma)).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt().max(1e-12);
            let exact = expectation(&rho, &sigma);
            assert!((mean - exact).abs() <= 5.0 * se, "{sigma}: {mean} vs {exact} (se {se})");
        }
    }
}

/// Copies prescribed for accuracy `eps` on `m` observables of weight `d`:
/// `K = ceil(8 ln(m / delta))` batches of `ceil(4 * 3^d / eps^2)`.
fn lemma_samples(m: usize, d: usize, eps: f64, delta: f64) -> (usize, usize) {
    let k = batch_count(m, delta);
    let b = (4.0 * 3f64.powi(d as i32) / (eps * eps)).ceil() as usize;
    (k, b)
}

#[test]
fn zero_state_z_estimate() {
    let rho = DenseOperator::projector(&[c(1.0), c(0.0)]).unwrap();
    let z: PauliString = "Z".parse().unwrap();
    let (k, b) = lemma_samples(1, 1, 0.05, 0.01);
    let s = collect_shadows(&rho, k * b, 5).unwrap().with_batches(k).unwrap();
    let est = estimate_pauli_batch(&s, &[z], 1).unwrap();
    assert!((est[&z] - 1.0).abs() <= 0.05);
}

#[test]
fn maximally_mixed_estimates_vanish() {
    let rho = DenseOperator::identity(3).scale_real(0.125);
    let obs: Vec<PauliString> = strings_up_to(3, 2).into_iter().filter(|s| !s.is_identity()).collect();
    let (k, b) = lemma_samples(obs.len(), 2, 0.1, 0.05);
    let s = collect_shadows(&rho, k * b, 6).unwrap().with_batches(k).unwrap();
    let est = estimate_pauli_batch(&s, &obs, 2).unwrap();
    assert!(est.values().all(|v| v.abs() <= 0.1));
}

#[test]
fn weight_above_degree_rejected() {
    let rho = DenseOperator::identity(2).scale_real(0.25);
    let s = collect_shadows(&rho, 10, 0).unwrap();
    let zz: PauliString = "ZZ".parse().unwrap();
    assert!(matches!(estimate_pauli_batch(&s, &[zz], 1), Err(Error::Precondition(_))));
}

#[test]
fn uniform_accuracy_over_repetitions() {
    let (eps, delta) = (0.1, 0.1);
    let mut r = rng(53);
    let obs = strings_up_to(3, 2);
    let (k, b) = lemma_samples(obs.len(), 2, eps, delta);
    let mut failures = 0;
    for rep in 0..100 {
        let rho = density(3, &mut r);
        let s = collect_shadows(&rho, k * b, 5000 + rep).unwrap().with_batches(k).unwrap();
        let est = estimate_pauli_batch(&s, &obs, 2).unwrap();
        if obs.iter().any(|o| (est[o] - expectation(&rho, o)).abs() > eps) {
            failures += 1;
        }
    }
    assert!(failures as f64 <= 100.0 * delta, "{failures} failures");
}

#[test]
fn multinomial_histogram_follows_born_law() {
    let rho = density(2, &mut rng(54));
    let table = BornTable::new(&rho).unwrap();
    let n = 1_000_000u64;
    let c = ShadowCounts::sample(&table, n, &mut rng(55));
    let expected: Vec<f64> = (0..36).map(|i| n as f64 / 9.0 * table.prob(i / 4, i % 4)).collect();
    // 35 degrees of freedom, 0.999 quantile 66.62.
    assert!(chi_square(&c.counts, &expected) < 66.62);
}

#[test]
fn born_table_matches_rotated_diagonal() {
    // P(o | all-Z) is the diagonal of rho.
    let rho = density(2, &mut rng(56));
    let table = BornTable::new(&rho).unwrap();
    let z_basis = 2 * 3 + 2;
    for o in 0..4 {
        assert!((table.prob(z_basis, o) - rho.get(o, o).re).abs() < 1e-12);
    }
}

#[test]
fn sample_complexity_grows_like_three_to_the_d() {
    // Smallest batch size (on a geometric grid) passing the uniform test in 19 of 20 runs.
    let q = 3;
    let rho = DenseOperator::identity(q).scale_real(0.125);
    let table = BornTable::new(&rho).unwrap();
    let (eps, k) = (0.2, 15);
    let mut logs = Vec::new();
    for d in 1..=3 {
        let mut b = 8u64;
        let needed = loop {
            let passes = (0..20u64)
                .filter(|&rep| {
                    let batches: Vec<ShadowCounts> = (0..k)
                        .map(|i| ShadowCounts::sample(&table, b, &mut rng(rep * 1000 + i as u64 + 77 * b)))
                        .collect();
                    let est = median_of_means(&batches, d);
                    strings_up_to(q, d)
                        .iter()
                        .filter(|s| !s.is_identity())
                        .all(|s| est[s.index() as usize].abs() <= eps)
                })
                .count();
            if passes >= 19 {
                break b * k as u64;
            }
            b = (b as f64 * 1.25).ceil() as u64;
        };
        logs.push((d as f64, (needed as f64).ln()));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= 3f64.ln() + 0.3, "slope {slope}");
}

#[test]
fn purity_examples() {
    let psi = pure_state(2, &mut rng(57));
    let pure = DenseOperator::projector(&psi).unwrap();
    let s = collect_shadows(&pure, 200_000, 8).unwrap();
    assert!((estimate_purity(&s).unwrap() - 1.0).abs() < 0.05);
    let mixed = DenseOperator::identity(2).scale_real(0.25);
    let s = collect_shadows(&mixed, 200_000, 9).unwrap();
    assert!((estimate_purity(&s).unwrap() - 0.25).abs() < 0.02);
    assert!((exact_purity(&mixed) - 0.25).abs() < 1e-15);
}

#[test]
fn purity_of_random_mixed_state() {
    let rho = density(2, &mut rng(58));
    let s = collect_shadows(&rho, 100_000, 10).unwrap();
    assert!((estimate_purity(&s).unwrap() - exact_purity(&rho)).abs() < 0.05);
}

#[test]
fn purity_unbiased_on_pairs() {
    // Two-sample U-statistic equals the average of per-pair products.
    let rho = density(1, &mut rng(59));
    let s = collect_shadows(&rho, 40, 11).unwrap();
    let q = 1;
    let single = |x: &qlc0_core::shadow::ShadowSample, y: &qlc0_core::shadow::ShadowSample| -> f64 {
        // Tr(rho_x rho_y) for single-qubit snapshots 3|s><s| - I.
        let (bx, by) = (x.basis_letters(q)[0], y.basis_letters(q)[0]);
        let (ox, oy) = (x.outcome_signs(q)[0], y.outcome_signs(q)[0]);
        if bx != by {
            0.5
        } else if ox == oy {
            5.0
        } else {
            -4.0
        }
    };
    let mut acc = 0.0;
    let mut pairs = 0.0;
    for i in 0..s.samples.len() {
        for j in 0..s.samples.len() {
            if i != j {
                acc += single(&s.samples[i], &s.samples[j]);
                pairs += 1.0;
            }
        }
    }
    assert!((estimate_purity(&s).unwrap() - acc / pairs).abs() < 1e-12);
}

#[test]
fn jsonl_format() {
    let rho = density(2, &mut rng(60));
    let s = collect_shadows(&rho, 5, 12).unwrap().with_batches(2).unwrap();
    let mut buf = Vec::new();
    s.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].contains("\"seed\":12"));
    let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(v["b"].as_str().unwrap().len(), 2);
    assert!(v["o"].as_str().unwrap().chars().all(|ch| ch == '+' || ch == '-'));
    assert_eq!(ShadowSet::read_jsonl(&buf[..]).unwrap(), s);
    let bad = "{\"seed\":1,\"qubits\":2}\n{\"b\":\"XQ\",\"o\":\"++\"}\n";
    assert!(matches!(ShadowSet::read_jsonl(bad.as_bytes()), Err(Error::Validation(_))));
}
