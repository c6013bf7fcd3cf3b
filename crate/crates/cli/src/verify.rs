//! Invariant checks behind `consensus verify`.

use consensus_core::dde::{consensus_report, simulate, DelayModel, InitialHistory};
use consensus_core::kernel::DelayKernel;
use consensus_core::markov::{h1_check, is_stochastic, p_epsilon, stationary, StationaryMethod};
use consensus_core::matcore::{adjugate, mat_exp, Matrix};
use consensus_core::netgraph::{laplacian, LaplacianData, WeightedDigraph};
use consensus_core::spectral::{chi, chi_prime_zero, processing_verdict, scalar_roots_default, Verdict};
use consensus_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{duality_checks, fmt12};
use crate::error::CliResult;
use crate::scenario::{Model, Scenario};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

const AGREEMENT_TOL: f64 = 1e-8;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn stationary_agreement(ld: &LaplacianData) -> CliResult<f64> {
    let pis = StationaryMethod::ALL
        .iter()
        .map(|&m| stationary(ld, m).map(|d| d.pi))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0_f64;
    for a in &pis {
        for b in &pis {
            worst = worst.max(sup_diff(a, b));
        }
    }
    Ok(worst)
}

fn rank_one_residual(ld: &LaplacianData) -> CliResult<f64> {
    let adj = adjugate(&ld.laplacian)?;
    let pi = stationary(ld, StationaryMethod::NullVector)?.pi;
    let alpha = adj.trace();
    let n = ld.node_count();
    Ok(adj.max_abs_diff(&Matrix::from_fn(n, n, |_, j| alpha * pi[j])))
}

/// Conservation and prediction checks for one delayed run.
#[allow(clippy::too_many_arguments)]
fn delay_run_checks(
    label: &str,
    ld: &LaplacianData,
    model: DelayModel,
    kernel: &DelayKernel,
    phi: &InitialHistory,
    horizon: f64,
    h: f64,
    tol: (f64, f64, f64),
    window: f64,
) -> CliResult<Vec<Check>> {
    let (consensus_tol, drift_tol, prediction_tol) = tol;
    let traj = simulate(model, ld, kernel, phi, horizon, h)?;
    let report = consensus_report(&traj, ld, kernel, phi, consensus_tol, window)?;
    let quantity = match model {
        DelayModel::Propagation => "q",
        DelayModel::Processing => "⟨π*, x⟩",
    };
    let mut checks = vec![Check::new(
        format!("{label}conservation"),
        report.relative_q_drift() <= drift_tol,
        format!(
            "{quantity} drift {} relative (q(0) = {}, tolerance {})",
            fmt12(report.relative_q_drift()),
            fmt12(report.q_initial),
            fmt12(drift_tol)
        ),
    )];
    match report.detected_value {
        Some(c) => {
            let err = (c - report.predicted_value).abs();
            checks.push(Check::new(
                format!("{label}prediction"),
                err <= prediction_tol,
                format!(
                    "detected {} vs predicted {} (|Δ| = {})",
                    fmt12(c),
                    fmt12(report.predicted_value),
                    fmt12(err)
                ),
            ));
        }
        None => checks.push(Check::new(
            format!("{label}prediction"),
            true,
            format!(
                "no consensus detected by t = {}, comparison skipped",
                fmt12(traj.end_time())
            ),
        )),
    }
    Ok(checks)
}

/// Checks for a single scenario, plus warnings that do not fail it.
pub fn scenario_checks(s: &Scenario) -> CliResult<(Vec<Check>, Vec<String>)> {
    let ld = s.laplacian()?;
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let h1 = h1_check(&ld);
    checks.push(Check::new(
        "H1",
        h1,
        if h1 {
            "zero is a simple eigenvalue of L".to_string()
        } else {
            "zero eigenvalue of L is not simple; later checks skipped".to_string()
        },
    ));
    checks.extend(duality_checks(&ld, &s.t_samples(), "")?);
    if !h1 {
        return Ok((checks, warnings));
    }
    let worst = stationary_agreement(&ld)?;
    checks.push(Check::new(
        "stationary agreement",
        worst <= AGREEMENT_TOL,
        format!("max pairwise ‖Δπ*‖∞ = {}", fmt12(worst)),
    ));
    let adj = rank_one_residual(&ld)?;
    checks.push(Check::new(
        "rank-one adjugate",
        adj <= AGREEMENT_TOL,
        format!("max |adj(L) - α1π*| = {}", fmt12(adj)),
    ));
    match s.model {
        Model::Propagation | Model::Processing => {
            let model = s.model.delay_model().unwrap();
            let kernel = s.kernel()?;
            let phi = s.history(ld.node_count())?;
            let t = &s.tolerances;
            checks.extend(delay_run_checks(
                "",
                &ld,
                model,
                &kernel,
                &phi,
                s.horizon()?,
                s.step()?,
                (t.consensus, t.q_drift, t.prediction),
                s.window(&kernel),
            )?);
        }
        Model::DiscreteTime => {
            if ld.delta >= 1.0 {
                warnings.push(format!(
                    "Δ = {} >= 1, so H2 fails; I - L need not be stochastic",
                    fmt12(ld.delta)
                ));
            } else {
                let p = p_epsilon(&ld, 1.0)?;
                checks.push(Check::new(
                    "I - L stochastic",
                    is_stochastic(&p, 1e-12),
                    format!("Δ = {} < 1", fmt12(ld.delta)),
                ));
            }
        }
        Model::Markov => {}
    }
    Ok((checks, warnings))
}

fn random_h1(rng: &mut ChaCha8Rng, max_n: usize) -> LaplacianData {
    loop {
        let n = rng.gen_range(2..=max_n);
        let density = rng.gen_range(0.4..0.9);
        let w = Matrix::from_fn(n, n, |i, j| {
            if i != j && rng.gen_bool(density) {
                rng.gen_range(0.5..1.5)
            } else {
                0.0
            }
        });
        let ld = laplacian(&WeightedDigraph::new(w).expect("nonnegative weights"));
        if h1_check(&ld) {
            return ld;
        }
    }
}

/// Randomized battery over all modules with a fixed seed.
pub fn builtin_battery(seed: u64) -> CliResult<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let (mut semigroup_ok, mut agree, mut rank_one, mut fd) = (true, 0.0_f64, 0.0_f64, 0.0_f64);
    for g in 0..20 {
        let ld = random_h1(&mut rng, 8);
        for t in [0.1, 1.0, 10.0] {
            semigroup_ok &= is_stochastic(&mat_exp(&ld.laplacian.scale(-1.0), t)?, 1e-10);
        }
        if g < 5 {
            checks.extend(duality_checks(&ld, &[0.1, 1.0, 10.0], &format!("graph {g} "))?);
        }
        agree = agree.max(stationary_agreement(&ld)?);
        rank_one = rank_one.max(rank_one_residual(&ld)?);
        let tau = rng.gen_range(0.2..2.0);
        for kernel in [DelayKernel::discrete(tau)?, DelayKernel::uniform(tau)?] {
            for model in [DelayModel::Propagation, DelayModel::Processing] {
                let exact = chi_prime_zero(&ld, &kernel, model)?;
                let step = 1e-5;
                let diff = chi(model, &ld, &kernel, Complex64::new(step, 0.0))
                    - chi(model, &ld, &kernel, Complex64::new(-step, 0.0));
                fd = fd.max((diff.re / (2.0 * step) - exact).abs() / exact.abs());
            }
        }
    }
    checks.push(Check::new("semigroup stochastic", semigroup_ok, "20 graphs, t = 0.1, 1, 10"));
    checks.push(Check::new(
        "stationary agreement",
        agree <= AGREEMENT_TOL,
        format!("max pairwise ‖Δπ*‖∞ = {}", fmt12(agree)),
    ));
    checks.push(Check::new(
        "rank-one adjugate",
        rank_one <= AGREEMENT_TOL,
        format!("max |adj(L) - α1π*| = {}", fmt12(rank_one)),
    ));
    checks.push(Check::new(
        "χ'(0) finite differences",
        fd <= 1e-5,
        format!("max relative error {}", fmt12(fd)),
    ));

    let two = laplacian(&WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)])?);
    let ramp = InitialHistory::Affine {
        intercept: vec![0.0, 1.0],
        slope: vec![1.0, 0.0],
    };
    checks.extend(delay_run_checks(
        "two-node ramp ",
        &two,
        DelayModel::Propagation,
        &DelayKernel::discrete(1.0)?,
        &ramp,
        40.0,
        1e-2,
        (1e-8, 1e-6, 1e-4),
        1.0,
    )?);
    for g in 0..3 {
        let ld = random_h1(&mut rng, 5);
        let n = ld.node_count();
        let phi = InitialHistory::Affine {
            intercept: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            slope: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        checks.extend(delay_run_checks(
            &format!("random propagation {g} "),
            &ld,
            DelayModel::Propagation,
            &DelayKernel::uniform(1.0)?,
            &phi,
            100.0,
            1e-2,
            (1e-6, 1e-6, 1e-4),
            1.0,
        )?);
    }

    for (tau, expect) in [(0.7, Verdict::Consensus), (0.9, Verdict::NoConsensus)] {
        let verdict = processing_verdict(&two, tau)?.verdict;
        let roots = scalar_roots_default(Complex64::new(2.0, 0.0), &DelayKernel::discrete(tau)?)?;
        let lead = roots.first().map_or(f64::NAN, |r| r.re);
        let sign_ok = if expect == Verdict::Consensus { lead < 0.0 } else { lead > 0.0 };
        checks.push(Check::new(
            format!("delay threshold τ = {tau}"),
            verdict == expect && sign_ok,
            format!("verdict {verdict:?}, rightmost root real part {}", fmt12(lead)),
        ));
    }
    Ok(checks)
}
