use std::fmt::Write as _;

use consensus_core::dde::{consensus_report, simulate, DelayModel};
use consensus_core::kernel::DelayKernel;
use consensus_core::markov::{duality_check, h1_check, stationary, StationaryMethod};
use consensus_core::matcore::{eigenvalues, mat_exp};
use consensus_core::netgraph::LaplacianData;
use consensus_core::spectral::{processing_verdict, propagation_verdict, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, Exit};
use crate::scenario::{Model, Scenario};
use crate::verify::{self, Check};

/// What a command produced: a human summary, a JSON report and any data
/// files for `--out`.
#[derive(Debug)]
pub struct Outcome {
    pub exit: Exit,
    pub summary: String,
    pub report: Value,
    pub files: Vec<(String, String)>,
}

/// 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    if x.abs() < 1e-4 || x.abs() >= 1e15 {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt12(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn spread(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn not_h1(ld: &LaplacianData) -> CliError {
    let m = eigenvalues(&ld.laplacian).map(|s| s.zero_multiplicity).unwrap_or(0);
    CliError::new(
        Exit::NotH1,
        format!("zero is not a simple eigenvalue of L (multiplicity {m}); consensus value is not unique"),
    )
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn stationary_cmd(scenario: &Scenario) -> CliResult<Outcome> {
    let ld = scenario.laplacian()?;
    if !h1_check(&ld) {
        return Err(not_h1(&ld));
    }
    let mut summary = String::new();
    let mut methods = serde_json::Map::new();
    let mut results = Vec::new();
    for method in StationaryMethod::ALL {
        let pi = stationary(&ld, method)?.pi;
        writeln!(summary, "{:<16} {}", method.name(), fmt_vec(&pi)).unwrap();
        methods.insert(method.name().into(), json!(pi));
        results.push((method, pi));
    }
    let mut discrepancies = serde_json::Map::new();
    let mut max = 0.0_f64;
    for a in 0..results.len() {
        for b in a + 1..results.len() {
            let d = sup_diff(&results[a].1, &results[b].1);
            max = max.max(d);
            let key = format!("{}/{}", results[a].0.name(), results[b].0.name());
            writeln!(summary, "discrepancy {key}: {}", fmt12(d)).unwrap();
            discrepancies.insert(key, json!(d));
        }
    }
    writeln!(summary, "H1: zero is a simple eigenvalue of L").unwrap();
    let report = json!({
        "h1": true,
        "nodes": ld.node_count(),
        "methods": methods,
        "discrepancies": discrepancies,
        "max_discrepancy": max,
    });
    Ok(Outcome {
        exit: Exit::Success,
        summary,
        files: vec![("stationary.json".into(), pretty(&report))],
        report,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn h2_warning(ld: &LaplacianData) -> Option<String> {
    (ld.delta >= 1.0).then(|| {
        format!(
            "warning: Δ = {} >= 1, so H2 fails; I - L need not be stochastic and the iteration may not converge",
            fmt12(ld.delta)
        )
    })
}

fn grid_csv(header: &str, n: usize, rows: impl Iterator<Item = (f64, Vec<f64>)>) -> String {
    let mut out = String::from(header);
    for i in 1..=n {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for (t, x) in rows {
        write!(out, "{t:.16e}").unwrap();
        for v in x {
            write!(out, ",{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn simulate_cmd(scenario: &Scenario) -> CliResult<Outcome> {
    let ld = scenario.laplacian()?;
    if !h1_check(&ld) {
        return Err(not_h1(&ld));
    }
    match scenario.model.delay_model() {
        Some(model) => simulate_delay(scenario, &ld, model),
        None => simulate_undelayed(scenario, &ld),
    }
}

fn simulate_delay(scenario: &Scenario, ld: &LaplacianData, model: DelayModel) -> CliResult<Outcome> {
    let n = ld.node_count();
    let kernel = scenario.kernel()?;
    let phi = scenario.history(n)?;
    let traj = simulate(model, ld, &kernel, &phi, scenario.horizon()?, scenario.step()?)?;
    let tol = &scenario.tolerances;
    let report = consensus_report(&traj, ld, &kernel, &phi, tol.consensus, scenario.window(&kernel))?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let mut summary = String::new();
    writeln!(summary, "model: {}", model_name(scenario.model)).unwrap();
    writeln!(summary, "grid: h = {}, {} nodes from t = {} to {}", fmt12(traj.step()), traj.len(), fmt12(traj.t_start()), fmt12(traj.end_time())).unwrap();
    match report.detected_value {
        Some(c) => writeln!(summary, "detected consensus value: {}", fmt12(c)).unwrap(),
        None => writeln!(summary, "detected consensus value: none").unwrap(),
    }
    writeln!(summary, "predicted consensus value: {}", fmt12(report.predicted_value)).unwrap();
    if let Some(c) = report.detected_value {
        writeln!(summary, "|detected - predicted|: {}", fmt12((c - report.predicted_value).abs())).unwrap();
    }
    writeln!(
        summary,
        "conserved quantity: q(0) = {}, max drift {} (relative {})",
        fmt12(report.q_initial),
        fmt12(report.q_drift),
        fmt12(report.relative_q_drift())
    )
    .unwrap();
    writeln!(summary, "final spread: {}", fmt12(*report.spread_history.last().unwrap_or(&f64::NAN))).unwrap();
    if let Some(t) = report.diverged_at {
        writeln!(summary, "diverged: blow-up guard tripped at t = {}", fmt12(t)).unwrap();
    }

    let mut json_report = to_json(&report);
    if let Value::Object(m) = &mut json_report {
        // the full spread series lives in the CSV
        m.remove("spread_history");
        m.insert("final_spread".into(), json!(report.spread_history.last()));
        m.insert("relative_q_drift".into(), json!(report.relative_q_drift()));
    }
    Ok(Outcome {
        exit: if report.converged { Exit::Success } else { Exit::Divergence },
        summary,
        files: vec![
            ("trajectory.csv".into(), String::from_utf8(csv).unwrap_or_default()),
            ("report.json".into(), pretty(&json_report)),
        ],
        report: json_report,
    })
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Propagation => "propagation",
        Model::Processing => "processing",
        Model::DiscreteTime => "discrete-time",
        Model::Markov => "markov",
    }
}

fn simulate_undelayed(scenario: &Scenario, ld: &LaplacianData) -> CliResult<Outcome> {
    let n = ld.node_count();
    let x0 = scenario.initial_state(n)?;
    let predicted = stationary(ld, StationaryMethod::Adjugate)?.weighted_mean(&x0);
    let mut summary = String::new();
    writeln!(summary, "model: {}", model_name(scenario.model)).unwrap();

    let (states, times): (Vec<Vec<f64>>, Vec<f64>) = if scenario.model == Model::DiscreteTime {
        if let Some(w) = h2_warning(ld) {
            writeln!(summary, "{w}").unwrap();
        }
        let steps = scenario.steps.unwrap_or(1000);
        let states = consensus_core::markov::discrete_consensus(ld, &x0, steps)?;
        let times = (0..=steps).map(|k| k as f64).collect();
        (states, times)
    } else {
        let horizon = scenario.horizon()?;
        let h = scenario.step()?;
        if !(h > 0.0 && horizon >= 0.0) {
            return Err(CliError::parse("need step > 0 and horizon >= 0"));
        }
        let steps = (horizon / h - 1e-9).ceil().max(0.0) as usize;
        let p = mat_exp(&ld.laplacian.scale(-1.0), h)?;
        let mut states = vec![x0.clone()];
        for _ in 0..steps {
            let next = p.mul_vec(states.last().unwrap());
            states.push(next);
        }
        let times = (0..=steps).map(|k| k as f64 * h).collect();
        (states, times)
    };
    let last = states.last().unwrap();
    if last.iter().any(|v| !v.is_finite()) {
        return Err(CliError::new(Exit::Numerical, "iteration produced non-finite values"));
    }
    let final_spread = spread(last);
    let converged = final_spread < scenario.tolerances.consensus;
    let detected = converged.then(|| last.iter().sum::<f64>() / n as f64);
    match detected {
        Some(c) => writeln!(summary, "detected consensus value: {}", fmt12(c)).unwrap(),
        None => writeln!(summary, "detected consensus value: none").unwrap(),
    }
    writeln!(summary, "predicted consensus value: {}", fmt12(predicted)).unwrap();
    writeln!(summary, "final spread: {}", fmt12(final_spread)).unwrap();

    let header = if scenario.model == Model::DiscreteTime { "k" } else { "t" };
    let csv = grid_csv(header, n, times.into_iter().zip(states.iter().cloned()));
    let report = json!({
        "model": model_name(scenario.model),
        "converged": converged,
        "detected_value": detected,
        "predicted_value": predicted,
        "final_spread": final_spread,
        "h2": ld.delta < 1.0,
    });
    Ok(Outcome {
        exit: if converged { Exit::Success } else { Exit::Divergence },
        summary,
        files: vec![
            ("trajectory.csv".into(), csv),
            ("report.json".into(), pretty(&report)),
        ],
        report,
    })
}

fn is_discrete(kernel: &DelayKernel) -> bool {
    kernel.density().is_empty()
        && kernel.atoms().len() == 1
        && (kernel.atoms()[0].location + kernel.tau()).abs() <= 1e-12 * kernel.tau().max(1.0)
}

pub fn stability_cmd(scenario: &Scenario) -> CliResult<Outcome> {
    let ld = scenario.laplacian()?;
    let mut summary = String::new();
    let (report, h1) = match scenario.model {
        Model::Propagation => {
            let r = propagation_verdict(&ld, &scenario.kernel()?)?;
            let h1 = r.h1;
            (to_json(&r), h1)
        }
        Model::Processing => {
            let kernel = scenario.kernel()?;
            if !is_discrete(&kernel) {
                return Err(CliError::parse(
                    "processing stability verdict is defined for a discrete delay kernel only",
                ));
            }
            if !h1_check(&ld) {
                return Err(not_h1(&ld));
            }
            let r = processing_verdict(&ld, kernel.tau())?;
            let mut v = to_json(&r);
            if let (Some(pi), Some(_)) = (&r.stationary, &scenario.history) {
                let x0 = scenario.initial_state(ld.node_count())?;
                let c: f64 = pi.iter().zip(&x0).map(|(p, x)| p * x).sum();
                v["predicted_value"] = json!(c);
            }
            (v, true)
        }
        Model::DiscreteTime | Model::Markov => {
            let spec = eigenvalues(&ld.laplacian)?;
            let h1 = spec.zero_multiplicity == 1;
            let h2 = ld.delta < 1.0;
            let verdict = match (h1, h2, scenario.model) {
                (false, _, _) => Verdict::NoConsensus,
                (true, _, Model::Markov) | (true, true, _) => Verdict::Consensus,
                (true, false, _) => Verdict::Inconclusive,
            };
            if scenario.model == Model::DiscreteTime {
                if let Some(w) = h2_warning(&ld) {
                    writeln!(summary, "{w}").unwrap();
                }
            }
            let report = json!({
                "model": model_name(scenario.model),
                "laplacian_eigenvalues": spec.eigenvalues,
                "zero_multiplicity": spec.zero_multiplicity,
                "h1": h1,
                "delta": ld.delta,
                "h2": h2,
                "verdict": verdict,
            });
            (report, h1)
        }
    };
    writeln!(summary, "model: {}", model_name(scenario.model)).unwrap();
    for key in ["h1", "zero_multiplicity", "chi_prime_zero", "rightmost_nonzero_real_part", "threshold", "sufficient_bound", "predicted_value", "verdict", "note"] {
        if let Some(v) = report.get(key) {
            if v.is_null() {
                continue;
            }
            let text = match v.as_f64() {
                Some(x) if !v.is_u64() => fmt12(x),
                _ => v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string()),
            };
            writeln!(summary, "{key}: {text}").unwrap();
        }
    }
    if !h1 {
        let err = not_h1(&ld);
        return Ok(Outcome {
            exit: Exit::NotH1,
            summary: format!("{summary}{}\n", err.message),
            files: vec![("stability.json".into(), pretty(&report))],
            report,
        });
    }
    Ok(Outcome {
        exit: Exit::Success,
        summary,
        files: vec![("stability.json".into(), pretty(&report))],
        report,
    })
}

pub fn verify_cmd(scenario: Option<&Scenario>, seed: u64) -> CliResult<Outcome> {
    let (checks, warnings) = match scenario {
        Some(s) => verify::scenario_checks(s)?,
        None => (verify::builtin_battery(seed)?, Vec::new()),
    };
    let mut summary = String::new();
    for w in &warnings {
        writeln!(summary, "WARN  {w}").unwrap();
    }
    for c in &checks {
        writeln!(summary, "{}  {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).unwrap();
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    writeln!(summary, "verify: {} passed, {} failed", checks.len() - failed.len(), failed.len()).unwrap();
    let report = json!({
        "checks": checks,
        "warnings": warnings,
        "failed": failed.len(),
    });
    Ok(Outcome {
        exit: if failed.is_empty() { Exit::Success } else { Exit::Verification },
        summary,
        files: vec![("verify.json".into(), pretty(&report))],
        report,
    })
}

pub(crate) fn duality_checks(ld: &LaplacianData, t_samples: &[f64], label: &str) -> CliResult<Vec<Check>> {
    let report = duality_check(ld, t_samples)?;
    let worst = report
        .samples
        .iter()
        .filter_map(|s| s.stationary_residual)
        .fold(0.0, f64::max);
    Ok(vec![Check::new(
        format!("{label}duality"),
        report.passed(),
        format!(
            "e^(-Lt) stochastic at t = {}, π* residual {}, distance to limit {}",
            fmt_vec(t_samples),
            fmt12(worst),
            if report.monotone { "nonincreasing" } else { "not monotone" }
        ),
    )])
}
