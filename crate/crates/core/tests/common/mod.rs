#![allow(dead_code)]

use consensus_core::dde::InitialHistory;
use consensus_core::kernel::DelayKernel;
use consensus_core::markov::h1_check;
use consensus_core::matcore::{eigenvalues, Matrix};
use consensus_core::netgraph::{laplacian, LaplacianData, WeightedDigraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative weights with zero diagonal, each edge present with
/// probability `density`.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, density: f64, w: (f64, f64)) -> Matrix {
    Matrix::from_fn(n, n, |i, j| {
        if i != j && rng.gen_bool(density) {
            rng.gen_range(w.0..w.1)
        } else {
            0.0
        }
    })
}

/// Random graph on `n_range` nodes whose Laplacian has a simple zero
/// eigenvalue (rejection sampling).
pub fn random_h1(rng: &mut ChaCha8Rng, n_range: (usize, usize), w: (f64, f64)) -> LaplacianData {
    loop {
        let n = rng.gen_range(n_range.0..=n_range.1);
        let density = rng.gen_range(0.3..0.9);
        let g = WeightedDigraph::new(random_weights(rng, n, density, w)).unwrap();
        let ld = laplacian(&g);
        if h1_check(&ld) {
            return ld;
        }
    }
}

/// Smallest real part among the nonzero Laplacian eigenvalues.
pub fn spectral_gap(ld: &LaplacianData) -> f64 {
    let spec = eigenvalues(&ld.laplacian).unwrap();
    let mut re: Vec<f64> = spec.eigenvalues.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    re.get(1).copied().unwrap_or(f64::INFINITY)
}

/// [`random_h1`] restricted to graphs with `spectral_gap >= min_gap`, so
/// that fixed-horizon convergence checks are past the mixing time. Returns
/// the graph and the number of H1 graphs rejected for a small gap.
pub fn random_h1_mixing(
    rng: &mut ChaCha8Rng,
    n_range: (usize, usize),
    w: (f64, f64),
    min_gap: f64,
) -> (LaplacianData, usize) {
    let mut rejected = 0;
    loop {
        let ld = random_h1(rng, n_range, w);
        if spectral_gap(&ld) >= min_gap {
            return (ld, rejected);
        }
        rejected += 1;
    }
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-range..range)).collect()
}

pub fn random_affine(rng: &mut ChaCha8Rng, n: usize) -> InitialHistory {
    InitialHistory::Affine {
        intercept: random_vector(rng, n, 2.0),
        slope: random_vector(rng, n, 1.0),
    }
}

/// Mixture with a few atoms and a piecewise-constant density on `[-τ, 0]`.
pub fn random_mixture(rng: &mut ChaCha8Rng, tau: f64) -> DelayKernel {
    let atoms: Vec<(f64, f64)> = (0..rng.gen_range(0..4))
        .map(|_| (-rng.gen_range(0.0..=tau), rng.gen_range(0.05..1.0)))
        .collect();
    let cells = if atoms.is_empty() { rng.gen_range(1..6) } else { rng.gen_range(0..6) };
    let density: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.0..1.0)).collect();
    let density = if density.iter().all(|v| *v == 0.0) && atoms.is_empty() {
        vec![1.0]
    } else {
        density
    };
    DelayKernel::mixture(&atoms, &density, tau, true).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
