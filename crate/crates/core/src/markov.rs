//! The Markov side of the consensus problem: `P_ε = I - εL` and `e^{-Lt}`
//! are stochastic, and the consensus weights are the stationary
//! distribution of the chain they generate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{adjugate, eigenvalues, left_null_vector, mat_exp, Matrix};
use crate::netgraph::LaplacianData;

/// Components below zero by less than this are treated as roundoff.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryMethod {
    Adjugate,
    NullVector,
    PowerIteration,
}

impl StationaryMethod {
    pub const ALL: [StationaryMethod; 3] = [
        StationaryMethod::Adjugate,
        StationaryMethod::NullVector,
        StationaryMethod::PowerIteration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StationaryMethod::Adjugate => "adjugate",
            StationaryMethod::NullVector => "null-vector",
            StationaryMethod::PowerIteration => "power-iteration",
        }
    }
}

/// Probability row vector `π*` with `π* L = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub source: StationaryMethod,
}

impl StationaryDistribution {
    /// `⟨π*, x⟩`
    pub fn weighted_mean(&self, x: &[f64]) -> f64 {
        self.pi.iter().zip(x).map(|(p, v)| p * v).sum()
    }
}

/// Distribution over the nodes at discrete time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub pi: Vec<f64>,
    pub t: u64,
}

/// `I - εL`, stochastic whenever `εΔ <= 1`.
pub fn p_epsilon(ld: &LaplacianData, eps: f64) -> Result<Matrix> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {eps}")));
    }
    if eps * ld.delta > 1.0 {
        return Err(Error::Argument(format!(
            "epsilon {eps} exceeds the stochastic bound 1/Δ = {}",
            1.0 / ld.delta
        )));
    }
    let n = ld.node_count();
    Matrix::identity(n).sub(&ld.laplacian.scale(eps))
}

pub fn is_stochastic(m: &Matrix, tol: f64) -> bool {
    m.is_square()
        && m.as_slice().iter().all(|&v| v >= -tol)
        && m.row_sums().iter().all(|s| (s - 1.0).abs() <= tol)
}

/// Zero is a simple eigenvalue of `L`.
pub fn h1_check(ld: &LaplacianData) -> bool {
    match eigenvalues(&ld.laplacian) {
        Ok(spec) => spec.zero_multiplicity == 1,
        Err(_) => false,
    }
}

/// Default step for the uniformized chain used by power iteration.
pub fn default_epsilon(ld: &LaplacianData) -> f64 {
    0.5 / ld.delta.max(1e-12)
}

pub fn stationary(ld: &LaplacianData, method: StationaryMethod) -> Result<StationaryDistribution> {
    if !h1_check(ld) {
        return Err(Error::Ambiguity(
            "zero is not a simple eigenvalue of the Laplacian".into(),
        ));
    }
    let raw = match method {
        StationaryMethod::Adjugate => adjugate_row(ld)?,
        StationaryMethod::NullVector => left_null_vector(&ld.laplacian)?,
        StationaryMethod::PowerIteration => power_iteration(ld)?,
    };
    Ok(StationaryDistribution {
        pi: normalize_distribution(raw)?,
        source: method,
    })
}

/// The largest row of `adj(L)`; all rows are multiples of `π*`.
fn adjugate_row(ld: &LaplacianData) -> Result<Vec<f64>> {
    let adj = adjugate(&ld.laplacian)?;
    let best = (0..adj.rows())
        .max_by(|&a, &b| {
            let sa: f64 = adj.row(a).iter().map(|v| v.abs()).sum();
            let sb: f64 = adj.row(b).iter().map(|v| v.abs()).sum();
            sa.total_cmp(&sb)
        })
        .unwrap_or(0);
    Ok(adj.row(best).to_vec())
}

fn power_iteration(ld: &LaplacianData) -> Result<Vec<f64>> {
    let n = ld.node_count();
    let p = p_epsilon(ld, default_epsilon(ld))?;
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITERATIONS {
        let next = p.vec_mul(&pi);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < POWER_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach {POWER_TOLERANCE:e} in {POWER_MAX_ITERATIONS} steps"
    )))
}

/// Scales to unit sum, fixing the sign and clamping roundoff negatives.
fn normalize_distribution(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::Numerical(
            "cannot normalize a vector with zero component sum".into(),
        ));
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    if let Some(bad) = v.iter().find(|&&x| x < -CLAMP_TOLERANCE) {
        return Err(Error::Numerical(format!(
            "stationary vector has a negative component {bad:e}"
        )));
    }
    if v.iter().any(|&x| x < 0.0) {
        for x in v.iter_mut() {
            *x = x.max(0.0);
        }
        let sum: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= sum;
        }
    }
    Ok(v)
}

/// One step `π(t+1) = π(t) P`.
pub fn chain_step(state: &ChainState, p: &Matrix) -> Result<ChainState> {
    if !p.is_square() || p.rows() != state.pi.len() {
        return Err(Error::Dimension(format!(
            "distribution of length {} against {}x{} transition matrix",
            state.pi.len(),
            p.rows(),
            p.cols()
        )));
    }
    Ok(ChainState {
        pi: p.vec_mul(&state.pi),
        t: state.t + 1,
    })
}

/// `x(t) = (I - L)^t x(0)` for `t = 0..=steps`.
pub fn discrete_consensus(ld: &LaplacianData, x0: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    let n = ld.node_count();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "initial state has length {}, graph has {n} nodes",
            x0.len()
        )));
    }
    let p = Matrix::identity(n).sub(&ld.laplacian)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.to_vec());
    for _ in 0..steps {
        let next = p.mul_vec(out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DualitySample {
    pub t: f64,
    pub stochastic: bool,
    /// `‖π* e^{-Lt} - π*‖∞`, when `π*` exists.
    pub stationary_residual: Option<f64>,
    /// `‖e^{-Lt} - 1π*‖∞`, when `π*` exists.
    pub distance_to_limit: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub h1: bool,
    pub samples: Vec<DualitySample>,
    /// Distances to the limit are nonincreasing in `t`.
    pub monotone: bool,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.monotone
            && self.samples.iter().all(|s| {
                s.stochastic && s.stationary_residual.is_none_or(|r| r <= STATIONARY_RESIDUAL_TOL)
            })
    }
}

pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-9;
const SEMIGROUP_TOL: f64 = 1e-10;

/// Checks that `e^{-Lt}` is stochastic, leaves `π*` invariant and
/// approaches `1π*` monotonically, at each requested time.
pub fn duality_check(ld: &LaplacianData, t_samples: &[f64]) -> Result<DualityReport> {
    let h1 = h1_check(ld);
    let pi = if h1 {
        Some(stationary(ld, StationaryMethod::Adjugate)?.pi)
    } else {
        None
    };
    let mut times = t_samples.to_vec();
    times.sort_by(f64::total_cmp);
    let generator = ld.laplacian.scale(-1.0);
    let mut samples = Vec::with_capacity(times.len());
    for &t in &times {
        let semigroup = mat_exp(&generator, t)?;
        let (stationary_residual, distance_to_limit) = match &pi {
            Some(pi) => {
                let moved = semigroup.vec_mul(pi);
                let residual = moved.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let limit = Matrix::from_fn(pi.len(), pi.len(), |_, j| pi[j]);
                let dist = semigroup.sub(&limit)?.norm_inf();
                (Some(residual), Some(dist))
            }
            None => (None, None),
        };
        samples.push(DualitySample {
            t,
            stochastic: is_stochastic(&semigroup, SEMIGROUP_TOL),
            stationary_residual,
            distance_to_limit,
        });
    }
    let monotone = samples.windows(2).all(|w| match (w[0].distance_to_limit, w[1].distance_to_limit) {
        (Some(a), Some(b)) => b <= a + 1e-12,
        _ => true,
    });
    Ok(DualityReport {
        h1,
        samples,
        monotone,
    })
}

/// Spectral SIA test for a stochastic matrix: eigenvalue 1 is simple and
/// no other eigenvalue lies on the unit circle.
pub fn is_sia(p: &Matrix) -> Result<bool> {
    let spec = eigenvalues(p)?;
    let tol = 1e-9;
    let ones = spec
        .eigenvalues
        .iter()
        .filter(|z| (*z - 1.0).norm() < tol)
        .count();
    let unimodular = spec
        .eigenvalues
        .iter()
        .filter(|z| (z.norm() - 1.0).abs() < tol)
        .count();
    Ok(ones == 1 && unimodular == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{laplacian, preset_chain, preset_ring, preset_star, WeightedDigraph};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_node(w: f64) -> LaplacianData {
        laplacian(&WeightedDigraph::from_edges(2, &[(0, 1, w), (1, 0, w)]).unwrap())
    }

    fn dyads() -> LaplacianData {
        laplacian(
            &WeightedDigraph::from_edges(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
                .unwrap(),
        )
    }

    #[test]
    fn p_epsilon_examples() {
        let ld = two_node(1.0);
        assert_eq!(p_epsilon(&ld, 1.0).unwrap().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(p_epsilon(&ld, 0.5).unwrap().to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let err = p_epsilon(&ld, 1.5).unwrap_err();
        assert!(matches!(err, Error::Argument(ref m) if m.contains("1/Δ")));
    }

    #[test]
    fn stochastic_examples() {
        assert!(is_stochastic(&Matrix::identity(3), 0.0));
        let bad = Matrix::from_rows(&[[1.0, -0.1], [0.0, 1.1]]).unwrap();
        assert!(!is_stochastic(&bad, 1e-12));
    }

    #[test]
    fn stationary_examples() {
        for method in StationaryMethod::ALL {
            let pi = stationary(&two_node(1.0), method).unwrap().pi;
            assert_relative_eq!(pi[0], 0.5, epsilon = 1e-12);
            assert_relative_eq!(pi[1], 0.5, epsilon = 1e-12);

            let pi = stationary(&laplacian(&preset_ring(3, 1.0).unwrap()), method).unwrap().pi;
            for p in pi {
                assert_relative_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
            }

            for g in [preset_star(4, 1.0).unwrap(), preset_chain(5, 0.7).unwrap()] {
                let pi = stationary(&laplacian(&g), method).unwrap().pi;
                assert_relative_eq!(pi[0], 1.0, epsilon = 1e-12);
                assert!(pi[1..].iter().all(|p| p.abs() < 1e-12));
            }

            assert!(matches!(stationary(&dyads(), method), Err(Error::Ambiguity(_))));
        }
    }

    #[test]
    fn h1_examples() {
        assert!(h1_check(&two_node(1.0)));
        assert!(!h1_check(&dyads()));
        assert!(h1_check(&laplacian(&WeightedDigraph::empty(1).unwrap())));
    }

    #[test]
    fn chain_step_examples() {
        let p = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = chain_step(&ChainState { pi: vec![1.0, 0.0], t: 0 }, &p).unwrap();
        assert_eq!(s, ChainState { pi: vec![0.0, 1.0], t: 1 });

        let ld = laplacian(&preset_star(3, 0.5).unwrap());
        let pstar = stationary(&ld, StationaryMethod::Adjugate).unwrap().pi;
        let p = p_epsilon(&ld, 1.0).unwrap();
        let s = chain_step(&ChainState { pi: pstar.clone(), t: 4 }, &p).unwrap();
        assert_eq!(s.pi, pstar);

        let ring = p_epsilon(&laplacian(&preset_ring(4, 1.0).unwrap()), 0.5).unwrap();
        let s = chain_step(&ChainState { pi: vec![0.25; 4], t: 0 }, &ring).unwrap();
        assert!(s.pi.iter().all(|&x| (x - 0.25).abs() < 1e-16));

        assert!(chain_step(&ChainState { pi: vec![1.0], t: 0 }, &p).is_err());
    }

    #[test]
    fn discrete_consensus_examples() {
        let traj = discrete_consensus(&two_node(0.25), &[0.0, 1.0], 200).unwrap();
        let last = traj.last().unwrap();
        assert_relative_eq!(last[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(last[1], 0.5, epsilon = 1e-12);

        let traj = discrete_consensus(&two_node(0.25), &[3.0, 3.0], 10).unwrap();
        assert!(traj.iter().all(|x| x == &vec![3.0, 3.0]));

        let ld = laplacian(&preset_star(3, 0.5).unwrap());
        let traj = discrete_consensus(&ld, &[7.0, 0.0, 0.0], 200).unwrap();
        for v in traj.last().unwrap() {
            assert_relative_eq!(*v, 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn duality_examples() {
        let rep = duality_check(&two_node(1.0), &[0.0, 10.0]).unwrap();
        assert!(rep.passed());
        let d = rep.samples[1].distance_to_limit.unwrap();
        assert!(d <= 2.0 * (-20.0f64).exp());
        assert_relative_eq!(rep.samples[0].distance_to_limit.unwrap(), 1.0, epsilon = 1e-15);

        let rep = duality_check(&dyads(), &[0.5, 2.0]).unwrap();
        assert!(!rep.h1);
        assert!(rep.passed());
    }

    #[test]
    fn sia_spectral_criterion() {
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(!is_sia(&swap).unwrap());
        let lazy = p_epsilon(&two_node(1.0), 0.5).unwrap();
        assert!(is_sia(&lazy).unwrap());
    }

    fn random_h1_laplacian() -> impl Strategy<Value = LaplacianData> {
        (2usize..=8).prop_flat_map(|n| {
            prop::collection::vec(0.05f64..1.0, n * n).prop_map(move |mut w| {
                for i in 0..n {
                    w[i * n + i] = 0.0;
                }
                laplacian(&WeightedDigraph::new(Matrix::new(n, n, w).unwrap()).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn methods_agree(ld in random_h1_laplacian()) {
            let reference = stationary(&ld, StationaryMethod::Adjugate).unwrap().pi;
            for method in [StationaryMethod::NullVector, StationaryMethod::PowerIteration] {
                let pi = stationary(&ld, method).unwrap().pi;
                let diff = pi.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                prop_assert!(diff <= 1e-8, "{:?} differs by {}", method, diff);
            }
        }

        #[test]
        fn adjugate_is_rank_one(ld in random_h1_laplacian()) {
            let adj = adjugate(&ld.laplacian).unwrap();
            let pi = stationary(&ld, StationaryMethod::NullVector).unwrap().pi;
            let alpha = adj.trace();
            let n = pi.len();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((adj[(i, j)] - alpha * pi[j]).abs() <= 1e-8 * alpha.abs().max(1.0));
                }
            }
        }

        #[test]
        fn discrete_consensus_conserves_weighted_mean(
            ld in random_h1_laplacian(),
            x0 in prop::collection::vec(-5.0f64..5.0, 8),
        ) {
            let n = ld.node_count();
            // rescale into the stochastic regime
            let eps = default_epsilon(&ld);
            let scaled = LaplacianData {
                laplacian: ld.laplacian.scale(eps),
                adjacency: ld.adjacency.scale(eps),
                degrees: ld.degrees.iter().map(|d| d * eps).collect(),
                delta: ld.delta * eps,
            };
            let pi = stationary(&scaled, StationaryMethod::Adjugate).unwrap();
            let traj = discrete_consensus(&scaled, &x0[..n], 50).unwrap();
            let q0 = pi.weighted_mean(&traj[0]);
            for w in traj.windows(2) {
                prop_assert!((pi.weighted_mean(&w[1]) - pi.weighted_mean(&w[0])).abs() <= 1e-10);
            }
            prop_assert!((pi.weighted_mean(traj.last().unwrap()) - q0).abs() <= 1e-9);
        }

        #[test]
        fn chain_step_stays_on_simplex(ld in random_h1_laplacian(), seed in prop::collection::vec(0.01f64..1.0, 8)) {
            let n = ld.node_count();
            let p = p_epsilon(&ld, 1.0 / ld.delta).unwrap();
            let total: f64 = seed[..n].iter().sum();
            let mut state = ChainState { pi: seed[..n].iter().map(|v| v / total).collect(), t: 0 };
            for _ in 0..100 {
                state = chain_step(&state, &p).unwrap();
            }
            prop_assert!(state.pi.iter().all(|&v| v >= -1e-12));
            prop_assert!((state.pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn semigroup_is_stochastic(ld in random_h1_laplacian()) {
            let rep = duality_check(&ld, &[0.1, 1.0, 2.7, 10.0]).unwrap();
            prop_assert!(rep.passed(), "{:?}", rep);
        }
    }
}
