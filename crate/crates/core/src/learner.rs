//! Agnostic learning of low-degree Choi representations from shadows of the
//! Choi state, the degree schedule for QLC0 channels, and the tolerant tester.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{choi, ChannelSpec};
use crate::config::check_capacity;
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64};
use crate::pauli::{PauliExpansion, PauliString};
use crate::shadow::{
    batch_count, exact_purity, median_of_means, purity_from_counts, BornTable, ShadowCounts, ShadowSet,
    MAX_SHADOW_QUBITS,
};

/// How the per-observable shadow accuracy is derived from the target `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracySchedule {
    /// `eps^2 / (D (n+m)^D 2^m)`.
    Algorithm1,
    /// `eps 2^m / sqrt(M)` with `M` the number of learned coefficients; the
    /// loosest accuracy for which Parseval still gives `eps` in 2-norm.
    Parseval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnOptions {
    pub schedule: AccuracySchedule,
    /// Batch size is `batch_constant * 3^D / eps_s^2`.
    pub batch_constant: f64,
    /// Requests needing more copies than this fail with [`Error::Infeasible`].
    pub max_samples: u128,
    pub seed: u64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            schedule: AccuracySchedule::Algorithm1,
            batch_constant: 4.0,
            max_samples: 1_000_000_000_000_000,
            seed: 0,
        }
    }
}

/// Copies needed for one learning run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePlan {
    pub observables: usize,
    pub shadow_accuracy: f64,
    pub batches: usize,
    pub batch_size: u64,
    pub total: u128,
}

/// Learned hypothesis `L = sum_{|sigma| <= D} alpha_sigma B_sigma`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowDegreeHypothesis {
    pub expansion: PauliExpansion,
    pub d: usize,
    pub eps: f64,
    pub delta: f64,
    pub samples_used: u128,
    pub batches: usize,
    pub shadow_accuracy: f64,
    pub n: usize,
    pub m: usize,
}

impl LowDegreeHypothesis {
    pub fn operator(&self) -> Result<DenseOperator> {
        crate::pauli::synthesize(&self.expansion)
    }
}

/// Number of Pauli strings on `q` qubits with weight at most `d`.
pub fn observable_count(q: usize, d: usize) -> usize {
    let mut total = 0usize;
    let mut binom = 1usize;
    let mut pow3 = 1usize;
    for k in 0..=d.min(q) {
        total += binom * pow3;
        binom = binom * (q - k) / (k + 1);
        pow3 *= 3;
    }
    total
}

fn low_weight_strings(q: usize, d: usize) -> impl Iterator<Item = PauliString> {
    (0..1u64 << (2 * q))
        .map(move |i| PauliString::from_index(q, i))
        .filter(move |s| s.weight() <= d)
}

pub fn shadow_accuracy(schedule: AccuracySchedule, n: usize, m: usize, d: usize, eps: f64) -> f64 {
    let q = n + m;
    match schedule {
        AccuracySchedule::Algorithm1 => {
            eps * eps / (d as f64 * (q as f64).powi(d as i32) * 2f64.powi(m as i32))
        }
        AccuracySchedule::Parseval => eps * 2f64.powi(m as i32) / (observable_count(q, d) as f64).sqrt(),
    }
}

fn check_params(n: usize, m: usize, d: usize, eps: f64, delta: f64) -> Result<()> {
    if d == 0 || d > n + m {
        return Err(Error::arg(format!("degree D = {d} must lie in 1..={}", n + m)));
    }
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg("eps and delta must lie in (0, 1)"));
    }
    Ok(())
}

pub fn sample_plan(n: usize, m: usize, d: usize, eps: f64, delta: f64, opts: &LearnOptions) -> Result<SamplePlan> {
    check_params(n, m, d, eps, delta)?;
    let observables = observable_count(n + m, d);
    let acc = shadow_accuracy(opts.schedule, n, m, d, eps);
    let batches = batch_count(observables, delta);
    let size = (opts.batch_constant * 3f64.powi(d as i32) / (acc * acc)).ceil();
    let total = size * batches as f64;
    if !(size.is_finite() && total < opts.max_samples as f64 && size < u64::MAX as f64) {
        return Err(Error::Infeasible {
            reason: format!("shadow accuracy {acc:e} at degree {d}"),
            required_samples: if total.is_finite() && total < u128::MAX as f64 { total as u128 } else { u128::MAX },
        });
    }
    let batch_size = size as u64;
    Ok(SamplePlan {
        observables,
        shadow_accuracy: acc,
        batches,
        batch_size,
        total: batch_size as u128 * batches as u128,
    })
}

/// Learns the degree-`d` part of the Choi representation of `spec` from
/// simulated shadows of its Choi state.
pub fn channel_learn(spec: &ChannelSpec, d: usize, eps: f64, delta: f64, opts: &LearnOptions) -> Result<LowDegreeHypothesis> {
    let (n, m) = (spec.n(), spec.m());
    check_params(n, m, d, eps, delta)?;
    shadow_capacity(n + m)?;
    let c = choi(spec)?;
    learn_from_choi_state(&c.state, n, m, d, eps, delta, opts)
}

fn shadow_capacity(q: usize) -> Result<()> {
    check_capacity(q)?;
    if q > MAX_SHADOW_QUBITS {
        return Err(Error::Capacity { requested: q, limit: MAX_SHADOW_QUBITS });
    }
    Ok(())
}

/// As [`channel_learn`], for an explicitly given Choi state on `n + m` qubits.
pub fn learn_from_choi_state(
    state: &DenseOperator,
    n: usize,
    m: usize,
    d: usize,
    eps: f64,
    delta: f64,
    opts: &LearnOptions,
) -> Result<LowDegreeHypothesis> {
    if state.qubits() != n + m {
        return Err(Error::arg("Choi state width differs from n + m"));
    }
    shadow_capacity(n + m)?;
    let plan = sample_plan(n, m, d, eps, delta, opts)?;
    let table = BornTable::new(state)?;
    let batches: Vec<ShadowCounts> = (0..plan.batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            ShadowCounts::sample(&table, plan.batch_size, &mut rng)
        })
        .collect();
    let est = median_of_means(&batches, d);
    Ok(LowDegreeHypothesis {
        expansion: hypothesis_from_estimates(n + m, m, d, &est)?,
        d,
        eps,
        delta,
        samples_used: plan.total,
        batches: plan.batches,
        shadow_accuracy: plan.shadow_accuracy,
        n,
        m,
    })
}

fn hypothesis_from_estimates(q: usize, m: usize, d: usize, est: &[f64]) -> Result<PauliExpansion> {
    let scale = 0.5f64.powi(m as i32);
    PauliExpansion::from_terms(
        q,
        low_weight_strings(q, d).map(|s| (s, C64::new(est[s.index() as usize] * scale, 0.0))),
    )
}

/// Learns from recorded shadows of a Choi state. No sample-count guarantee
/// is checked; `eps` and `delta` are carried into the hypothesis as given.
pub fn learn_from_shadows(
    shadows: &ShadowSet,
    n: usize,
    m: usize,
    d: usize,
    eps: f64,
    delta: f64,
) -> Result<LowDegreeHypothesis> {
    if shadows.qubits != n + m {
        return Err(Error::arg("shadow register width differs from n + m"));
    }
    check_params(n, m, d, eps, delta)?;
    if shadows.samples.is_empty() {
        return Err(Error::precondition("no shadow samples"));
    }
    let est = median_of_means(&shadows.batch_counts(), d);
    Ok(LowDegreeHypothesis {
        expansion: hypothesis_from_estimates(n + m, m, d, &est)?,
        d,
        eps,
        delta,
        samples_used: shadows.samples.len() as u128,
        batches: shadows.batches,
        shadow_accuracy: f64::NAN,
        n,
        m,
    })
}

/// Learning degree for depth-`depth` QLC0 channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegreeSchedule {
    pub degree: usize,
    /// `kappa (n+a)^{1-2^-d} m^{2^-d+1} log2(1/eps)^2` before rounding and clamping.
    pub unclamped: f64,
    pub clamped: bool,
    /// Whether `eps >= exp(-n^{2^{-d-2}} / m)`.
    pub eps_admissible: bool,
}

pub fn degree_schedule(n: usize, m: usize, a: usize, depth: usize, eps: f64, kappa: f64) -> Result<DegreeSchedule> {
    if n == 0 || m == 0 || depth == 0 {
        return Err(Error::arg("n, m and depth must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) || !(kappa > 0.0) {
        return Err(Error::arg("eps must lie in (0, 1) and kappa must be positive"));
    }
    let t = 0.5f64.powi(depth as i32);
    let log = (1.0 / eps).log2();
    let raw = kappa * ((n + a) as f64).powf(1.0 - t) * (m as f64).powf(t + 1.0) * log * log;
    let ceil = raw.ceil().max(1.0);
    let cap = (n + m) as f64;
    let eps_floor = (-(n as f64).powf(t / 4.0) / m as f64).exp();
    Ok(DegreeSchedule {
        degree: ceil.min(cap) as usize,
        unclamped: raw,
        clamped: ceil > cap,
        eps_admissible: eps >= eps_floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Close,
    Far,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PurityMode {
    Exact,
    Sampled { samples: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TolerantOptions {
    pub learn: LearnOptions,
    pub purity: PurityMode,
}

impl Default for TolerantOptions {
    fn default() -> Self {
        Self {
            learn: LearnOptions { schedule: AccuracySchedule::Parseval, ..LearnOptions::default() },
            purity: PurityMode::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TolerantVerdict {
    pub verdict: Verdict,
    /// `sqrt(max(0, v^2 - |L|_2^2))`.
    pub measured_distance_estimate: f64,
    pub threshold: f64,
    pub v: f64,
    #[serde(rename = "l2_of_L")]
    pub l2_of_l: f64,
    /// Accuracy handed to the learner, `(eps2 - eps1)^2 / 64`.
    pub learner_eps: f64,
    pub lower_estimate: f64,
    pub upper_estimate: f64,
    pub samples_used: u128,
}

/// Decides whether the Choi representation is within `eps1` of some degree-`d`
/// operator or at least `eps2` away from all of them.
pub fn tolerant_test(
    spec: &ChannelSpec,
    d: usize,
    eps1: f64,
    eps2: f64,
    delta: f64,
    opts: &TolerantOptions,
) -> Result<TolerantVerdict> {
    if !(0.0 < eps1 && eps1 < eps2 && eps2 < 1.0) {
        return Err(Error::precondition("need 0 < eps1 < eps2 < 1"));
    }
    let gap = eps2 - eps1;
    let eps_l = gap * gap / 64.0;
    let (n, m) = (spec.n(), spec.m());
    check_params(n, m, d, eps_l, delta)?;
    shadow_capacity(n + m)?;
    let state = choi(spec)?.state;
    let h = learn_from_choi_state(&state, n, m, d, eps_l, delta / 2.0, &opts.learn)?;
    let (purity, extra) = match opts.purity {
        PurityMode::Exact => (exact_purity(&state), 0),
        PurityMode::Sampled { samples } => {
            let table = BornTable::new(&state)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.learn.seed);
            rng.set_stream(u64::MAX);
            (purity_from_counts(&ShadowCounts::sample(&table, samples, &mut rng))?, samples as u128)
        }
    };
    let v2 = 2f64.powi(n as i32 - m as i32) * purity;
    let l2 = h.expansion.l2_norm();
    let est = (v2 - l2 * l2).max(0.0).sqrt();
    let threshold = 0.5 * (eps1 + eps2);
    Ok(TolerantVerdict {
        verdict: if est > threshold { Verdict::Far } else { Verdict::Close },
        measured_distance_estimate: est,
        threshold,
        v: v2.max(0.0).sqrt(),
        l2_of_l: l2,
        learner_eps: eps_l,
        lower_estimate: est - 2.0 * eps_l.sqrt(),
        upper_estimate: est + 3.0 * eps_l.sqrt(),
        samples_used: h.samples_used + extra,
    })
}
