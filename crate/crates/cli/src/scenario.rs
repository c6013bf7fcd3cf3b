//! Scenario documents. See `SCENARIO.md` for the schema.

use std::path::{Path, PathBuf};

use consensus_core::dde::{DelayModel, InitialHistory, DEFAULT_CONSENSUS_TOL};
use consensus_core::kernel::DelayKernel;
use consensus_core::netgraph::{
    laplacian, linearize, preset_chain, preset_complete, preset_ring, preset_star, LaplacianData,
    WeightedDigraph,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Propagation,
    Processing,
    DiscreteTime,
    Markov,
}

impl Model {
    pub fn delay_model(self) -> Option<DelayModel> {
        match self {
            Model::Propagation => Some(DelayModel::Propagation),
            Model::Processing => Some(DelayModel::Processing),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub nodes: Option<usize>,
    /// One-based `[i, j, weight]`: node `j` influences node `i`.
    pub edges: Option<Vec<(usize, usize, f64)>>,
    pub preset: Option<String>,
    pub gain: Option<f64>,
    /// Edge-table file, relative to the scenario file.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Discrete {
        tau: f64,
    },
    Uniform {
        tau: f64,
    },
    Mixture {
        tau: f64,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
        #[serde(default)]
        density: Vec<f64>,
        #[serde(default)]
        renormalize: bool,
    },
}

impl KernelSpec {
    pub fn build(&self) -> CliResult<DelayKernel> {
        Ok(match self {
            KernelSpec::Discrete { tau } => DelayKernel::discrete(*tau)?,
            KernelSpec::Uniform { tau } => DelayKernel::uniform(*tau)?,
            KernelSpec::Mixture {
                tau,
                atoms,
                density,
                renormalize,
            } => DelayKernel::mixture(atoms, density, *tau, *renormalize)?,
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HistorySpec {
    Constant { values: Vec<f64> },
    Affine { intercept: Vec<f64>, slope: Vec<f64> },
    Polynomial { coefficients: Vec<Vec<f64>> },
}

impl HistorySpec {
    pub fn build(&self) -> InitialHistory {
        match self {
            HistorySpec::Constant { values } => InitialHistory::Constant(values.clone()),
            HistorySpec::Affine { intercept, slope } => InitialHistory::Affine {
                intercept: intercept.clone(),
                slope: slope.clone(),
            },
            HistorySpec::Polynomial { coefficients } => {
                InitialHistory::Polynomial(coefficients.clone())
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_consensus_tol")]
    pub consensus: f64,
    /// Detection window in time units; defaults to `max(τ, 1)`.
    pub window: Option<f64>,
    #[serde(default = "default_drift_tol")]
    pub q_drift: f64,
    #[serde(default = "default_prediction_tol")]
    pub prediction: f64,
}

fn default_consensus_tol() -> f64 {
    DEFAULT_CONSENSUS_TOL
}

fn default_drift_tol() -> f64 {
    1e-6
}

fn default_prediction_tol() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            consensus: default_consensus_tol(),
            window: None,
            q_drift: default_drift_tol(),
            prediction: default_prediction_tol(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub graph: GraphSpec,
    /// Linearized coupling slope multiplying every weight.
    pub slope: Option<f64>,
    pub model: Model,
    pub kernel: Option<KernelSpec>,
    pub history: Option<HistorySpec>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Iterations for the discrete-time model.
    pub steps: Option<usize>,
    /// Sample times for the semigroup checks of the Markov model.
    pub t_samples: Option<Vec<f64>>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_json(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut s: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::parse(format!("scenario: {e}")))?;
        s.base_dir = base_dir.to_path_buf();
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn graph(&self) -> CliResult<WeightedDigraph> {
        let g = &self.graph;
        let sources = [g.edges.is_some(), g.preset.is_some(), g.file.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::parse(
                "graph: give exactly one of \"edges\", \"preset\" or \"file\"",
            ));
        }
        let graph = if let Some(edges) = &g.edges {
            let n = g
                .nodes
                .ok_or_else(|| CliError::parse("graph: \"edges\" needs \"nodes\""))?;
            let mut zero_based = Vec::with_capacity(edges.len());
            for &(i, j, w) in edges {
                if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                    return Err(CliError::parse(format!(
                        "graph: edge [{i}, {j}, {w}] references a node outside 1..={n}"
                    )));
                }
                zero_based.push((i - 1, j - 1, w));
            }
            WeightedDigraph::from_edges(n, &zero_based)?
        } else if let Some(name) = &g.preset {
            let n = g
                .nodes
                .ok_or_else(|| CliError::parse("graph: \"preset\" needs \"nodes\""))?;
            let gain = g.gain.unwrap_or(1.0);
            match name.as_str() {
                "chain" => preset_chain(n, gain)?,
                "ring" => preset_ring(n, gain)?,
                "star" => preset_star(n, gain)?,
                "complete" => preset_complete(n, gain)?,
                other => {
                    return Err(CliError::parse(format!(
                        "graph: unknown preset {other:?} (chain, ring, star, complete)"
                    )))
                }
            }
        } else {
            let path = self.base_dir.join(g.file.as_ref().unwrap());
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
            let graph = WeightedDigraph::from_edge_table(&text)?;
            if let Some(n) = g.nodes {
                if n != graph.node_count() {
                    return Err(CliError::parse(format!(
                        "graph: \"nodes\" is {n} but {} declares {}",
                        path.display(),
                        graph.node_count()
                    )));
                }
            }
            graph
        };
        match self.slope {
            Some(slope) => Ok(linearize(graph.weights(), slope)?),
            None => Ok(graph),
        }
    }

    pub fn laplacian(&self) -> CliResult<LaplacianData> {
        let ld = laplacian(&self.graph()?);
        if self.model == Model::Propagation && ld.has_self_loops() {
            return Err(CliError::parse(
                "propagation model requires zero self-coupling (a_ii = 0)",
            ));
        }
        Ok(ld)
    }

    /// The delay kernel; a zero-delay discrete kernel when none is given.
    pub fn kernel(&self) -> CliResult<DelayKernel> {
        match &self.kernel {
            Some(k) => k.build(),
            None => Ok(DelayKernel::discrete(0.0)?),
        }
    }

    pub fn history(&self, n: usize) -> CliResult<InitialHistory> {
        let spec = self
            .history
            .as_ref()
            .ok_or_else(|| CliError::parse("scenario needs a \"history\" for this command"))?;
        let phi = spec.build();
        phi.validate()?;
        use consensus_core::dde::History;
        if phi.dim() != n {
            return Err(CliError::parse(format!(
                "history has {} entries, graph has {n} nodes",
                phi.dim()
            )));
        }
        Ok(phi)
    }

    pub fn initial_state(&self, n: usize) -> CliResult<Vec<f64>> {
        use consensus_core::dde::History;
        let phi = self.history(n)?;
        let mut x0 = vec![0.0; n];
        phi.value(0.0, &mut x0);
        Ok(x0)
    }

    pub fn horizon(&self) -> CliResult<f64> {
        self.horizon
            .ok_or_else(|| CliError::parse("scenario needs \"horizon\" for this command"))
    }

    pub fn step(&self) -> CliResult<f64> {
        self.step
            .ok_or_else(|| CliError::parse("scenario needs \"step\" for this command"))
    }

    pub fn window(&self, kernel: &DelayKernel) -> f64 {
        self.tolerances
            .window
            .unwrap_or_else(|| consensus_core::dde::default_window(kernel))
    }

    pub fn t_samples(&self) -> Vec<f64> {
        self.t_samples.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0])
    }
}
