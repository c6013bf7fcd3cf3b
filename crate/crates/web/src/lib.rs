//! WebAssembly entry points for the browser demo in `www/`.
//!
//! Every operation takes and returns JSON text. The `*_json` functions are
//! plain Rust so they can be tested natively; the `#[wasm_bindgen]` exports
//! only convert the error type.

use consensus_core::dde::{consensus_report, default_window, simulate, DelayModel, InitialHistory};
use consensus_core::kernel::DelayKernel;
use consensus_core::netgraph::{
    laplacian, preset_chain, preset_complete, preset_ring, preset_star, LaplacianData,
    WeightedDigraph,
};
use consensus_core::spectral::{
    hayes_threshold, processing_verdict, propagation_verdict, scalar_roots_default,
};
use consensus_core::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Upper bound on integration steps so a page cannot hang the tab.
pub const MAX_STEPS: usize = 400_000;
const DEFAULT_SAMPLES: usize = 600;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkInput {
    /// `chain`, `ring`, `star`, `complete`, or `table` for `edges`.
    pub preset: String,
    #[serde(default)]
    pub nodes: usize,
    #[serde(default = "one")]
    pub gain: f64,
    /// Edge table text: node count, then `i j weight` lines (1-based).
    #[serde(default)]
    pub edges: String,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Propagation,
    Processing,
}

impl From<ModelKind> for DelayModel {
    fn from(m: ModelKind) -> Self {
        match m {
            ModelKind::Propagation => DelayModel::Propagation,
            ModelKind::Processing => DelayModel::Processing,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Discrete,
    Uniform,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeInput {
    pub network: NetworkInput,
    pub model: ModelKind,
    pub kernel: KernelKind,
    pub tau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateInput {
    pub network: NetworkInput,
    pub model: ModelKind,
    pub kernel: KernelKind,
    pub tau: f64,
    /// Constant initial history, one value per node.
    pub values: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Maximum number of returned time points.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn build_network(net: &NetworkInput) -> Result<LaplacianData, String> {
    let g = match net.preset.as_str() {
        "chain" => preset_chain(net.nodes, net.gain),
        "ring" => preset_ring(net.nodes, net.gain),
        "star" => preset_star(net.nodes, net.gain),
        "complete" => preset_complete(net.nodes, net.gain),
        "table" => WeightedDigraph::from_edge_table(&net.edges),
        other => return Err(format!("unknown network preset {other:?}")),
    }
    .map_err(err)?;
    Ok(laplacian(&g))
}

fn build_kernel(kind: &KernelKind, tau: f64) -> Result<DelayKernel, String> {
    match kind {
        KernelKind::Discrete => DelayKernel::discrete(tau),
        KernelKind::Uniform => DelayKernel::uniform(tau),
    }
    .map_err(err)
}

fn parse<T: for<'de> Deserialize<'de>>(input: &str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad input: {e}"))
}

fn complex_list(zs: &[Complex64]) -> Value {
    zs.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect()
}

/// Simulate the delayed model and return a subsampled trajectory with the
/// detected and predicted consensus values.
pub fn simulate_json(input: &str) -> Out {
    let req: SimulateInput = parse(input)?;
    let ld = build_network(&req.network)?;
    let kernel = build_kernel(&req.kernel, req.tau)?;
    if !(req.step > 0.0 && req.horizon > 0.0) {
        return Err("horizon and step must be positive".into());
    }
    let steps = req.horizon / req.step;
    if steps > MAX_STEPS as f64 {
        return Err(format!(
            "{steps:.0} steps requested, the demo allows at most {MAX_STEPS}"
        ));
    }
    let phi = InitialHistory::Constant(req.values);
    let traj = simulate(req.model.into(), &ld, &kernel, &phi, req.horizon, req.step).map_err(err)?;
    let report = consensus_report(&traj, &ld, &kernel, &phi, req.tol, default_window(&kernel)).map_err(err)?;

    let first = traj.zero_index();
    let count = traj.len() - first;
    let stride = count.div_ceil(req.samples.max(2)).max(1);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut k = first;
    loop {
        times.push(traj.time(k));
        states.push(traj.state(k).to_vec());
        if k + 1 == traj.len() {
            break;
        }
        k = (k + stride).min(traj.len() - 1);
    }
    Ok(json!({
        "times": times,
        "states": states,
        "converged": report.converged,
        "detected_value": report.detected_value,
        "predicted_value": report.predicted_value,
        "diverged_at": report.diverged_at,
        "relative_q_drift": report.relative_q_drift(),
        "final_spread": report.spread_history.last(),
    })
    .to_string())
}

/// Spectral report for the network: Laplacian eigenvalues, stationary
/// distribution, rightmost characteristic root and the stability verdict.
pub fn analyze_json(input: &str) -> Out {
    let req: AnalyzeInput = parse(input)?;
    let ld = build_network(&req.network)?;
    let report = match (req.model, &req.kernel) {
        (ModelKind::Processing, KernelKind::Discrete) => processing_verdict(&ld, req.tau),
        (ModelKind::Processing, KernelKind::Uniform) => {
            return Err("the processing verdict needs a discrete delay".into())
        }
        (ModelKind::Propagation, kind) => propagation_verdict(&ld, &build_kernel(kind, req.tau)?),
    }
    .map_err(err)?;
    let mut v = serde_json::to_value(&report).map_err(err)?;
    v["laplacian_eigenvalues"] = complex_list(&report.laplacian_eigenvalues);
    Ok(v.to_string())
}

/// Roots of `s + λ F(s) = 0` in the default search box, rightmost first.
pub fn roots_json(lambda_re: f64, lambda_im: f64, kernel: &str, tau: f64) -> Out {
    let kind: KernelKind = parse(&format!("{kernel:?}"))?;
    let k = build_kernel(&kind, tau)?;
    let lambda = Complex64::new(lambda_re, lambda_im);
    let roots = scalar_roots_default(lambda, &k).map_err(err)?;
    let threshold = match kind {
        KernelKind::Discrete if lambda_im == 0.0 && lambda_re > 0.0 => hayes_threshold(lambda_re).ok(),
        _ => None,
    };
    Ok(json!({
        "roots": complex_list(&roots),
        "rightmost_real_part": roots.first().map(|z| z.re),
        "threshold": threshold,
    })
    .to_string())
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_network(input: &str) -> Result<String, JsError> {
    js(simulate_json(input))
}

#[wasm_bindgen]
pub fn analyze_network(input: &str) -> Result<String, JsError> {
    js(analyze_json(input))
}

#[wasm_bindgen]
pub fn characteristic_roots(lambda_re: f64, lambda_im: f64, kernel: &str, tau: f64) -> Result<String, JsError> {
    js(roots_json(lambda_re, lambda_im, kernel, tau))
}
