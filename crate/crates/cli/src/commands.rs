use std::io::BufReader;
use std::path::Path;

use qlc0_core::circuit::{choi, ChannelSpec};
use qlc0_core::dilation::cz_low_degree_approx;
use qlc0_core::learner::{
    channel_learn, degree_schedule, learn_from_shadows, tolerant_test, LearnOptions, LowDegreeHypothesis,
    PurityMode, TolerantOptions,
};
use qlc0_core::lowdeg::approx_circuit;
use qlc0_core::pauli::{expand, synthesize};
use qlc0_core::reduction::{run_reduction, ReductionMode};
use qlc0_core::shadow::{collect_shadows, exact_purity, ShadowSet};
use qlc0_core::{norm, NormKind, PauliExpansion};
use serde_json::{json, Value};

use crate::config::*;
use crate::report::Check;
use crate::CliError;

/// Largest `n + m` for which reports include dense-oracle comparisons.
pub const DENSE_ORACLE_QUBITS: usize = 10;

pub(crate) struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(results: Value) -> Self {
        Self { results, checks: Vec::new(), csv: None }
    }
}

pub(crate) fn load_spec(cfg: &ExperimentConfig) -> Result<ChannelSpec, CliError> {
    let path = cfg
        .circuit_path
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("{} needs a circuit file", cfg.command.name())))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read circuit {}: {e}", path.display())))?;
    Ok(ChannelSpec::from_json(&text)?)
}

fn coeff_rows(p: &PauliExpansion) -> Value {
    Value::Array(
        p.iter()
            .map(|(s, c)| json!({"sigma": s.to_string(), "weight": s.weight(), "re": c.re, "im": c.im}))
            .collect(),
    )
}

fn expansion_csv(p: &PauliExpansion) -> Result<String, CliError> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf).map_err(|e| CliError::Io(format!("csv: {e}")))?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub(crate) fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: SpectrumParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let (label, exp) = match p.of {
        SpectrumTarget::Unitary => ("unitary", expand(&spec.circuit().build_unitary()?)),
        SpectrumTarget::Choi => ("choi", expand(&choi(&spec)?.representation)),
    };
    let l2 = exp.l2_norm();
    let mut out = Outcome::new(json!({
        "target": label,
        "qubits": exp.qubits(),
        "terms": exp.len(),
        "degree": exp.degree(),
        "l2_norm": l2,
        "coeffs": coeff_rows(&exp),
    }));
    if p.of == SpectrumTarget::Unitary {
        // Parseval for a unitary: the squared coefficients sum to 1.
        out.checks.push(Check::at_most("parseval_unitary", (l2 * l2 - 1.0).abs(), 1e-10));
    }
    out.csv = Some(expansion_csv(&exp)?);
    Ok(out)
}

pub(crate) fn approx_cz(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: ApproxCzParams = cfg.parse_params()?;
    let cz_checks = |res: &qlc0_core::dilation::CzApproxResult| {
        let peak = res.poly_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = if res.bound_is_vacuous() {
            Check::vacuous("cz_error_bound", res.spectral_error, res.paper_bound)
        } else {
            Check::at_most("cz_error_bound", res.spectral_error, res.paper_bound)
        };
        vec![
            Check::at_most("degree_budget", res.degree as f64, (res.k as f64 * res.r).sqrt().ceil()),
            Check::at_most("contraction", peak, 1.0),
            bound,
        ]
    };
    if let Some(r) = p.r {
        let res = cz_low_degree_approx(p.k, r)?;
        let mut out = Outcome::new(json!({
            "k": res.k,
            "r": res.r,
            "degree": res.degree,
            "degree_budget": res.degree_budget,
            "spectral_error": res.spectral_error,
            "poly_values": res.poly_values,
            "minimax_error": res.minimax_error,
            "rescaled": res.rescaled,
            "paper_bound": res.paper_bound,
            "bound_vacuous": res.bound_is_vacuous(),
        }));
        out.checks = cz_checks(&res);
        return Ok(out);
    }
    let grid: Vec<f64> = p.r_grid.iter().copied().filter(|&r| r > 1.0 && r <= p.k as f64).collect();
    if grid.is_empty() {
        return Ok(Outcome::new(json!({})));
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["r", "degree", "spectral_error", "bound"]).map_err(csv_err)?;
    for r in grid {
        let res = cz_low_degree_approx(p.k, r)?;
        csv.write_record([r.to_string(), res.degree.to_string(), res.spectral_error.to_string(), res.paper_bound.to_string()])
            .map_err(csv_err)?;
        rows.push(json!({"r": r, "degree": res.degree, "spectral_error": res.spectral_error, "bound": res.paper_bound}));
        for mut c in cz_checks(&res) {
            c.name = format!("{}[r={r}]", c.name);
            checks.push(c);
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))?;
    Ok(Outcome {
        results: json!({"k": p.k, "sweep": rows}),
        checks,
        csv: Some(String::from_utf8(bytes).expect("csv is utf-8")),
    })
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

fn load_observable(spec: &str) -> Result<PauliExpansion, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let f = std::fs::File::open(path)
            .map_err(|e| CliError::Validation(format!("cannot read observable {spec}: {e}")))?;
        Ok(PauliExpansion::read_csv(BufReader::new(f))?)
    } else {
        Ok(PauliExpansion::parse_monomial(spec)?)
    }
}

pub(crate) fn approx_circuit_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: ApproxCircuitParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let a = load_observable(&p.observable)?;
    let a_norm = norm(&synthesize(&a)?, NormKind::Spectral);
    let rep = approx_circuit(spec.circuit(), &a, p.r)?;
    let layers: Vec<Value> = rep
        .per_layer
        .iter()
        .map(|l| {
            json!({
                "ell": l.ell,
                "threshold": l.threshold,
                "partition": l.partition,
                "achieved_degree": l.achieved_degree,
                "degree_bound": l.degree_bound,
                "spectral_error": l.spectral_error,
                "error_bound": l.error_bound,
                "error_bound_vacuous": l.error_bound_vacuous(),
                "hybrid_bound": l.hybrid_bound,
                "exact_branch": l.exact_branch,
                "in_lemma_range": l.in_lemma_range,
                "input_norm": l.input_norm,
                "output_norm": l.output_norm,
            })
        })
        .collect();
    let mut out = Outcome::new(json!({
        "observable": p.observable,
        "r": p.r,
        "degree": rep.approx.degree(),
        "total_error": rep.total_error,
        "total_error_bound": rep.total_error_bound,
        "total_hybrid_bound": rep.total_hybrid_bound,
        "degree_bounds": rep.degree_bounds,
        "n_exponents": rep.n_exponents,
        "ell_exponents": rep.ell_exponents,
        "norms": rep.norms,
        "degree_bound": rep.degree_bound,
        "per_layer": layers,
        "coeffs": coeff_rows(&rep.approx),
    }));
    out.checks.push(Check::at_most("hybrid_bound", rep.total_error, rep.total_hybrid_bound));
    // |U A U^dag - M| <= |A| + |M| <= 3 |A| always holds.
    out.checks.push(if rep.total_error_bound > 3.0 * a_norm {
        Check::vacuous("circuit_error_bound", rep.total_error, rep.total_error_bound)
    } else {
        Check::at_most("circuit_error_bound", rep.total_error, rep.total_error_bound)
    });
    for (i, l) in rep.per_layer.iter().enumerate() {
        out.checks.push(Check::at_most(&format!("layer_degree_bound[{i}]"), l.achieved_degree as f64, l.degree_bound.max(l.ell as f64)));
    }
    if let Some(max_norm) = rep.norms.iter().copied().reduce(f64::max) {
        out.checks.push(Check::at_most("norm_control", max_norm, 2.0 * a_norm));
    }
    out.csv = Some(expansion_csv(&rep.approx)?);
    Ok(out)
}

pub(crate) fn choi_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: ChoiParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let obj = choi(&spec)?;
    let exp = expand(&obj.representation);
    let purity = exact_purity(&obj.state);
    let mut results = json!({
        "n": obj.n,
        "m": obj.m,
        "trace": obj.representation.trace().re,
        "two_norm": exp.l2_norm(),
        "state_purity": purity,
        "degree": exp.degree(),
        "coeffs": coeff_rows(&exp),
    });
    let mut out_checks = Vec::new();
    // Trace-preserving: Tr J = 2^n.
    out_checks.push(Check::at_most("choi_trace", (obj.representation.trace().re - (1u64 << obj.n) as f64).abs(), 1e-9));
    if let Some(count) = p.shadows {
        let set = collect_shadows(&obj.state, count as usize, cfg.seed)?.with_batches(p.batches)?;
        if let Some(path) = &p.shadow_out {
            let f = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            set.write_jsonl(std::io::BufWriter::new(f))
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            results["shadow_file"] = json!(path.display().to_string());
        }
        results["shadow_samples"] = json!(count);
        results["shadow_batches"] = json!(p.batches);
    }
    let mut out = Outcome::new(results);
    out.checks = out_checks;
    out.csv = Some(expansion_csv(&exp)?);
    Ok(out)
}

fn hypothesis_json(h: &LowDegreeHypothesis) -> Value {
    json!({
        "D": h.d,
        "eps": h.eps,
        "delta": h.delta,
        "samples_used": u64::try_from(h.samples_used).unwrap_or(u64::MAX),
        "batches": h.batches,
        "shadow_accuracy": if h.shadow_accuracy.is_finite() { json!(h.shadow_accuracy) } else { Value::Null },
        "coeffs": coeff_rows(&h.expansion),
    })
}

pub(crate) fn learn(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: LearnParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let (n, m) = (spec.n(), spec.m());
    let mut schedule_info = Value::Null;
    let d = match p.d {
        Some(d) => d,
        None => {
            let c = spec.circuit();
            let s = degree_schedule(n, m, c.ancillas(), c.depth().max(1), p.eps, cfg.kappa)?;
            schedule_info = json!({
                "requested": s.unclamped,
                "degree": s.degree,
                "clamped": s.clamped,
                "eps_admissible": s.eps_admissible,
                "kappa": cfg.kappa,
            });
            s.degree
        }
    };
    let h = match &p.shadows_in {
        Some(path) => {
            let f = std::fs::File::open(path)
                .map_err(|e| CliError::Validation(format!("cannot read shadows {}: {e}", path.display())))?;
            let set = ShadowSet::read_jsonl(BufReader::new(f))?;
            learn_from_shadows(&set, n, m, d, p.eps, p.delta)?
        }
        None => {
            let opts = LearnOptions {
                schedule: p.schedule.into(),
                batch_constant: p.batch_constant,
                max_samples: p.max_samples as u128,
                seed: cfg.seed,
            };
            channel_learn(&spec, d, p.eps, p.delta, &opts)?
        }
    };
    let mut results = hypothesis_json(&h);
    results["schedule"] = json!(p.schedule);
    if !schedule_info.is_null() {
        results["degree_schedule"] = schedule_info;
    }
    let mut checks = Vec::new();
    if n + m <= DENSE_ORACLE_QUBITS {
        let j = expand(&choi(&spec)?.representation);
        let to_trunc = h.expansion.sub(&j.truncate_degree(d))?.l2_norm();
        let to_choi = h.expansion.sub(&j)?.l2_norm();
        let best = j.sub(&j.truncate_degree(d))?.l2_norm();
        results["l2_to_truncation_exact"] = json!(to_trunc);
        results["l2_to_choi_exact"] = json!(to_choi);
        checks.push(Check::at_most("learner_guarantee", to_trunc, p.eps));
        checks.push(Check::at_most("skeleton_inequality", to_choi, best + p.eps));
    }
    let mut out = Outcome::new(results);
    out.checks = checks;
    out.csv = Some(expansion_csv(&h.expansion)?);
    Ok(out)
}

pub(crate) fn tolerant(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: TolerantParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let opts = TolerantOptions {
        learn: LearnOptions {
            schedule: p.schedule.into(),
            max_samples: p.max_samples as u128,
            seed: cfg.seed,
            ..LearnOptions::default()
        },
        purity: match p.purity {
            PurityArg::Exact => PurityMode::Exact,
            PurityArg::Sampled => PurityMode::Sampled { samples: p.purity_samples },
        },
    };
    let v = tolerant_test(&spec, p.d, p.eps1, p.eps2, p.delta, &opts)?;
    let mut results = serde_json::to_value(&v).expect("verdict serializes");
    results["D"] = json!(p.d);
    results["eps1"] = json!(p.eps1);
    results["eps2"] = json!(p.eps2);
    results["delta"] = json!(p.delta);
    results["purity_mode"] = json!(p.purity);
    let mut checks = Vec::new();
    if spec.n() + spec.m() <= DENSE_ORACLE_QUBITS {
        let j = expand(&choi(&spec)?.representation);
        let truth = j.sub(&j.truncate_degree(p.d))?.l2_norm();
        results["true_distance_exact"] = json!(truth);
        checks.push(Check::at_most("sandwich_lower", v.lower_estimate, truth));
        checks.push(Check::at_most("sandwich_upper", truth, v.upper_estimate));
    }
    let mut out = Outcome::new(results);
    out.checks = checks;
    Ok(out)
}

pub(crate) fn reduce(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: ReduceParams = cfg.parse_params()?;
    let spec = load_spec(cfg)?;
    let mode = match p.mode {
        ReduceModeArg::Exact => ReductionMode::Exact,
        ReduceModeArg::Sampled => {
            let (Some(eps), Some(delta)) = (p.eps, p.delta) else {
                return Err(CliError::Validation("sampled reduction needs eps and delta".into()));
            };
            ReductionMode::sampled(eps, delta, cfg.seed)
        }
    };
    let rep = run_reduction(spec.circuit(), &mode)?;
    let mut out = Outcome::new(json!({
        "mode": p.mode,
        "n": rep.sewn.n,
        "eps": p.eps,
        "delta": p.delta,
        "wires": rep.wires,
        "final_error": rep.final_error,
        "hybrid_bound": rep.hybrid_bound,
        "learner_bound": rep.learner_bound,
    }));
    let n = rep.sewn.n as f64;
    let max_v = rep.wires.iter().map(|w| w.factor_error).fold(0.0, f64::max);
    out.checks.push(if n * max_v < 1.0 {
        Check::at_most("hybrid_bound", rep.final_error, rep.hybrid_bound)
    } else {
        Check::vacuous("hybrid_bound", rep.final_error, rep.hybrid_bound)
    });
    match rep.learner_bound {
        Some(b) => out.checks.push(Check::at_most("learner_bound", rep.final_error, b)),
        None => out.checks.push(Check::at_most("exact_identity", rep.final_error, 1e-7)),
    }
    Ok(out)
}
