//! Classical shadows from random single-qubit Pauli measurements of an
//! exactly simulated state.
//!
//! Bases are stored as a base-3 index (wire 0 most significant, digit
//! `axis - 1`), outcomes as a bit mask (bit set = eigenvalue `-1`).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseOperator;
use crate::pauli::{expand_dense, PauliString};

/// Largest register the measurement simulator accepts (the Born table has `6^q` entries).
pub const MAX_SHADOW_QUBITS: usize = 10;

const CHUNK: usize = 4096;
const AXES: [char; 3] = ['X', 'Y', 'Z'];

/// One measured copy: a basis per wire and the observed signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShadowSample {
    pub basis: u32,
    pub outcomes: u32,
}

impl ShadowSample {
    /// Measured axis per wire, `1 = X, 2 = Y, 3 = Z`.
    pub fn basis_letters(&self, q: usize) -> Vec<u8> {
        base3_digits(self.basis as usize, q).into_iter().map(|d| d + 1).collect()
    }

    /// Observed eigenvalue per wire.
    pub fn outcome_signs(&self, q: usize) -> Vec<i8> {
        (0..q)
            .map(|w| if self.outcomes >> (q - 1 - w) & 1 == 1 { -1 } else { 1 })
            .collect()
    }

    /// Single-sample estimator of `Tr(B_sigma rho)`.
    pub fn estimate(&self, s: &PauliString) -> f64 {
        let q = s.qubits();
        let basis = self.basis_letters(q);
        let signs = self.outcome_signs(q);
        let mut v = 1.0;
        for w in s.support() {
            if basis[w] != s.letter(w) {
                return 0.0;
            }
            v *= 3.0 * signs[w] as f64;
        }
        v
    }
}

fn base3_digits(mut b: usize, q: usize) -> Vec<u8> {
    let mut d = vec![0u8; q];
    for w in (0..q).rev() {
        d[w] = (b % 3) as u8;
        b /= 3;
    }
    d
}

/// Measurement records plus the seed that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    pub qubits: usize,
    pub samples: Vec<ShadowSample>,
    pub seed: u64,
    pub batches: usize,
}

impl ShadowSet {
    /// Sets the median-of-means batch count.
    pub fn with_batches(mut self, k: usize) -> Result<Self> {
        if k == 0 || k > self.samples.len() {
            return Err(Error::arg(format!(
                "batch count {k} must lie in 1..={}",
                self.samples.len()
            )));
        }
        self.batches = k;
        Ok(self)
    }

    /// Histogram per median-of-means batch (contiguous, sizes differ by at most one).
    pub fn batch_counts(&self) -> Vec<ShadowCounts> {
        let k = self.batches.max(1);
        let n = self.samples.len();
        (0..k)
            .map(|i| {
                let (lo, hi) = (i * n / k, (i + 1) * n / k);
                ShadowCounts::from_samples(self.qubits, &self.samples[lo..hi])
            })
            .collect()
    }

    /// JSON lines: a header with the seed, then one `{"b":..,"o":..}` per sample.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = JsonlHeader { seed: self.seed, qubits: self.qubits, batches: self.batches };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for s in &self.samples {
            let b: String = s.basis_letters(self.qubits).iter().map(|&l| AXES[l as usize - 1]).collect();
            let o: String = s
                .outcome_signs(self.qubits)
                .iter()
                .map(|&v| if v > 0 { '+' } else { '-' })
                .collect();
            writeln!(out, "{}", serde_json::to_string(&JsonlSample { b, o })?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let bad = |e: String| Error::invalid(format!("shadow file: {e}"));
        let header: JsonlHeader = match lines.next() {
            Some(l) => serde_json::from_str(&l.map_err(|e| bad(e.to_string()))?).map_err(|e| bad(e.to_string()))?,
            None => return Err(bad("missing header".into())),
        };
        let q = header.qubits;
        let mut samples = Vec::new();
        for line in lines {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlSample = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            if rec.b.chars().count() != q || rec.o.chars().count() != q {
                return Err(bad(format!("record length differs from {q} qubits")));
            }
            let mut basis = 0u32;
            for c in rec.b.chars() {
                let d = AXES.iter().position(|&a| a == c).ok_or_else(|| bad(format!("bad axis '{c}'")))?;
                basis = basis * 3 + d as u32;
            }
            let mut outcomes = 0u32;
            for c in rec.o.chars() {
                outcomes = outcomes << 1
                    | match c {
                        '+' => 0,
                        '-' => 1,
                        other => return Err(bad(format!("bad outcome '{other}'"))),
                    };
            }
            samples.push(ShadowSample { basis, outcomes });
        }
        Ok(Self { qubits: q, samples, seed: header.seed, batches: header.batches.max(1) })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    seed: u64,
    qubits: usize,
    #[serde(default = "one")]
    batches: usize,
}

fn one() -> usize {
    1
}

#[derive(Serialize, Deserialize)]
struct JsonlSample {
    b: String,
    o: String,
}

/// Outcome distribution for every measurement basis of a fixed state.
#[derive(Clone, Debug)]
pub struct BornTable {
    qubits: usize,
    /// `probs[b * 2^q + o]`.
    probs: Vec<f64>,
}

impl BornTable {
    pub fn new(state: &DenseOperator) -> Result<Self> {
        let q = state.qubits();
        if q > MAX_SHADOW_QUBITS {
            return Err(Error::Capacity { requested: q, limit: MAX_SHADOW_QUBITS });
        }
        state.validate_density(1e-9)?;
        let coeffs = expand_dense(state);
        let nb = 3usize.pow(q as u32);
        let no = 1usize << q;
        let mut probs = vec![0.0; nb * no];
        for (b, chunk) in probs.chunks_mut(no).enumerate() {
            let digits = base3_digits(b, q);
            // f[S] = rho_hat(b|S); Walsh-Hadamard over S gives P(o|b).
            for (s, slot) in chunk.iter_mut().enumerate() {
                let mut idx = 0u64;
                for (w, &d) in digits.iter().enumerate() {
                    if s >> (q - 1 - w) & 1 == 1 {
                        idx |= (d as u64 + 1) << (2 * (q - 1 - w));
                    }
                }
                *slot = coeffs[idx as usize].re;
            }
            walsh_hadamard(chunk);
            let mut total = 0.0;
            for p in chunk.iter_mut() {
                *p = p.max(0.0);
                total += *p;
            }
            for p in chunk.iter_mut() {
                *p /= total;
            }
        }
        Ok(Self { qubits: q, probs })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// `P(outcome | basis)`.
    pub fn prob(&self, basis: usize, outcome: usize) -> f64 {
        self.probs[basis << self.qubits | outcome]
    }

    fn outcomes(&self, basis: usize) -> &[f64] {
        let no = 1 << self.qubits;
        &self.probs[basis * no..(basis + 1) * no]
    }
}

/// In-place unnormalized Walsh-Hadamard transform.
fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n_samples` independent measurement records. Samples are produced in
/// fixed-size chunks, each from its own stream of the master seed, so the
/// result does not depend on the thread count.
pub fn collect_shadows(state: &DenseOperator, n_samples: usize, seed: u64) -> Result<ShadowSet> {
    let table = BornTable::new(state)?;
    Ok(collect_from_table(&table, n_samples, seed))
}

pub fn collect_from_table(table: &BornTable, n_samples: usize, seed: u64) -> ShadowSet {
    let q = table.qubits;
    let nb = 3u32.pow(q as u32);
    let chunks = n_samples.div_ceil(CHUNK);
    let samples: Vec<ShadowSample> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len)
                .map(|_| {
                    let basis = rng.random_range(0..nb);
                    let u: f64 = rng.random();
                    let probs = table.outcomes(basis as usize);
                    let mut acc = 0.0;
                    let mut outcome = probs.len() - 1;
                    for (o, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            outcome = o;
                            break;
                        }
                    }
                    ShadowSample { basis, outcomes: outcome as u32 }
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    ShadowSet { qubits: q, samples, seed, batches: 1 }
}

/// Histogram of measurement records over (basis, outcome).
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowCounts {
    pub qubits: usize,
    /// `counts[b * 2^q + o]`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ShadowCounts {
    pub fn from_samples(q: usize, samples: &[ShadowSample]) -> Self {
        let mut counts = vec![0u64; 3usize.pow(q as u32) << q];
        for s in samples {
            counts[(s.basis as usize) << q | s.outcomes as usize] += 1;
        }
        Self { qubits: q, counts, total: samples.len() as u64 }
    }

    /// Histogram of `n` records drawn with the same law as [`collect_shadows`],
    /// sampled directly as a multinomial (cost independent of `n`).
    pub fn sample(table: &BornTable, n: u64, rng: &mut impl Rng) -> Self {
        let q = table.qubits;
        let nb = 3usize.pow(q as u32);
        let no = 1usize << q;
        let mut counts = vec![0u64; nb * no];
        let mut left = n;
        for b in 0..nb {
            let kb = if b + 1 == nb { left } else { binomial(left, 1.0 / (nb - b) as f64, rng) };
            left -= kb;
            let probs = table.outcomes(b);
            let mut rem_n = kb;
            let mut rem_p = 1.0;
            for (o, &p) in probs.iter().enumerate() {
                if rem_n == 0 {
                    break;
                }
                let k = if o + 1 == no || rem_p <= p {
                    rem_n
                } else {
                    binomial(rem_n, (p / rem_p).clamp(0.0, 1.0), rng)
                };
                counts[b * no + o] = k;
                rem_n -= k;
                rem_p -= p;
            }
        }
        Self { qubits: q, counts, total: n }
    }

    /// Mean single-sample estimate of every Pauli of weight at most `d`,
    /// indexed by [`PauliString::index`] (other entries are 0).
    pub fn pauli_means(&self, d: usize) -> Vec<f64> {
        let q = self.qubits;
        let no = 1usize << q;
        let mut est = vec![0.0; 1usize << (2 * q)];
        if self.total == 0 {
            return est;
        }
        let mut f = vec![0.0; no];
        let pow3: Vec<f64> = (0..=q).map(|j| 3f64.powi(j as i32)).collect();
        for (b, row) in self.counts.chunks(no).enumerate() {
            if row.iter().all(|&c| c == 0) {
                continue;
            }
            for (x, &c) in f.iter_mut().zip(row) {
                *x = c as f64;
            }
            walsh_hadamard(&mut f);
            let digits = base3_digits(b, q);
            for (s, &fs) in f.iter().enumerate() {
                let w = s.count_ones() as usize;
                if w > d {
                    continue;
                }
                let mut idx = 0usize;
                for (wire, &dg) in digits.iter().enumerate() {
                    if s >> (q - 1 - wire) & 1 == 1 {
                        idx |= (dg as usize + 1) << (2 * (q - 1 - wire));
                    }
                }
                est[idx] += pow3[w] * fs;
            }
        }
        let n = self.total as f64;
        for e in &mut est {
            *e /= n;
        }
        est
    }

    pub fn merge(&mut self, other: &ShadowCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }
}

fn binomial(n: u64, p: f64, rng: &mut impl Rng) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// Median over batches of the batch means, per Pauli index.
pub fn median_of_means(batches: &[ShadowCounts], d: usize) -> Vec<f64> {
    let means: Vec<Vec<f64>> = batches.par_iter().map(|b| b.pauli_means(d)).collect();
    let len = means.first().map_or(0, |m| m.len());
    (0..len)
        .map(|i| {
            let mut col: Vec<f64> = means.iter().map(|m| m[i]).collect();
            median(&mut col)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `ceil(8 ln(M / delta))` batches for `M` observables.
pub fn batch_count(observables: usize, delta: f64) -> usize {
    ((8.0 * (observables.max(1) as f64 / delta).ln()).ceil() as usize).max(1)
}

/// Median-of-means estimates of `Tr(B_sigma rho)` for the requested strings.
pub fn estimate_pauli_batch(
    shadows: &ShadowSet,
    observables: &[PauliString],
    max_degree: usize,
) -> Result<BTreeMap<PauliString, f64>> {
    for s in observables {
        if s.qubits() != shadows.qubits {
            return Err(Error::arg(format!("observable {s} has the wrong width")));
        }
        if s.weight() > max_degree {
            return Err(Error::precondition(format!(
                "observable {s} has weight {} above {max_degree}",
                s.weight()
            )));
        }
    }
    if shadows.samples.is_empty() {
        return Err(Error::precondition("no shadow samples"));
    }
    let est = median_of_means(&shadows.batch_counts(), max_degree);
    Ok(observables.iter().map(|s| (*s, est[s.index() as usize])).collect())
}

/// Pair U-statistic for `Tr(rho^2)` from a histogram.
pub fn purity_from_counts(c: &ShadowCounts) -> Result<f64> {
    if c.total < 2 {
        return Err(Error::precondition("purity needs at least two samples"));
    }
    let q = c.qubits;
    let no = 1usize << q;
    // Re-index to six levels per wire: 2 * axis + outcome bit.
    let mut v = vec![0.0; 6usize.pow(q as u32)];
    for (i, &n) in c.counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let digits = base3_digits(i / no, q);
        let o = i % no;
        let mut idx = 0;
        for (w, &d) in digits.iter().enumerate() {
            idx = idx * 6 + 2 * d as usize + (o >> (q - 1 - w) & 1);
        }
        v[idx] = n as f64;
    }
    let kernel = |a: usize, b: usize| -> f64 {
        if a / 2 != b / 2 {
            0.5
        } else if a == b {
            5.0
        } else {
            -4.0
        }
    };
    let mut y = v.clone();
    let mut stride = 1;
    for _ in 0..q {
        let mut next = vec![0.0; y.len()];
        for base in 0..y.len() {
            if (base / stride) % 6 != 0 {
                continue;
            }
            for a in 0..6 {
                next[base + a * stride] = (0..6).map(|b| kernel(a, b) * y[base + b * stride]).sum();
            }
        }
        y = next;
        stride *= 6;
    }
    let n = c.total as f64;
    let all_pairs: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
    Ok((all_pairs - n * 5f64.powi(q as i32)) / (n * (n - 1.0)))
}

/// Pair U-statistic for `Tr(rho^2)` over all samples.
pub fn estimate_purity(shadows: &ShadowSet) -> Result<f64> {
    purity_from_counts(&ShadowCounts::from_samples(shadows.qubits, &shadows.samples))
}

/// `Tr(rho^2)` computed densely.
pub fn exact_purity(state: &DenseOperator) -> f64 {
    state.matmul(state).expect("square").trace().re
}
