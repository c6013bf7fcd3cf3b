//! Weighted digraphs, Laplacians and the scenario presets.
//!
//! `weight(i, j)` is the influence of node `j` on node `i`: row `i` of the
//! weight table collects everything node `i` listens to, so the in-degree
//! `d_i` is a row sum and `L = D - A` has zero row sums.

use crate::error::{Error, Result};
use crate::matcore::{Matrix, Spectrum};

/// Nonnegative interaction weights on `n >= 1` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedDigraph {
    weights: Matrix,
}

impl WeightedDigraph {
    pub fn new(weights: Matrix) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::Dimension(format!(
                "weight table must be square, got {}x{}",
                weights.rows(),
                weights.cols()
            )));
        }
        let n = weights.rows();
        for i in 0..n {
            for j in 0..n {
                if weights[(i, j)] < 0.0 {
                    return Err(Error::Argument(format!(
                        "negative weight {} for edge {} -> {}",
                        weights[(i, j)],
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("graph needs at least one node".into()));
        }
        Ok(Self {
            weights: Matrix::zeros(n, n),
        })
    }

    /// Builds a graph from zero-based `(i, j, w)` triples setting `a_ij = w`.
    /// Repeated triples accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Argument(format!(
                    "edge ({}, {}) references a node outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Argument(format!(
                    "edge ({}, {}) has invalid weight {w}",
                    i + 1,
                    j + 1
                )));
            }
            g.weights[(i, j)] += w;
        }
        Ok(g)
    }

    /// Parses the plain-text edge table:
    ///
    /// ```text
    /// # comment
    /// 3            <- node count
    /// 2 1 1.0      <- i j weight, one-based: a_ij, node j influences node i
    /// 3 2 0.5
    /// ```
    ///
    /// Blank lines and everything after `#` are ignored.
    pub fn from_edge_table(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (no, header) = lines
            .next()
            .ok_or_else(|| Error::Argument("edge table is empty".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Argument(format!("line {no}: expected node count, got {header:?}")))?;
        let mut edges = Vec::new();
        for (no, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Argument(format!(
                    "line {no}: expected \"i j weight\", got {line:?}"
                )));
            }
            let parse_node = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
                    _ => Err(Error::Argument(format!("line {no}: node {s:?} not in 1..={n}"))),
                }
            };
            let i = parse_node(fields[0])?;
            let j = parse_node(fields[1])?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Argument(format!("line {no}: bad weight {:?}", fields[2])))?;
            edges.push((i, j, w));
        }
        Self::from_edges(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    /// `a_ij`: influence of `j` on `i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.node_count()).any(|i| self.weights[(i, i)] != 0.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.node_count();
        (0..n).all(|i| (0..i).all(|j| (self.weights[(i, j)] - self.weights[(j, i)]).abs() <= tol))
    }
}

/// Laplacian `L = D - A` together with the degree data it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianData {
    pub laplacian: Matrix,
    pub adjacency: Matrix,
    /// In-degrees `d_i = Σ_j a_ij`.
    pub degrees: Vec<f64>,
    /// `Δ = max_i (d_i - a_ii)`, the Gershgorin radius and centre.
    pub delta: f64,
}

impl LaplacianData {
    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree_matrix(&self) -> Matrix {
        Matrix::diag(&self.degrees)
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.node_count()).any(|i| self.adjacency[(i, i)] != 0.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.node_count();
        (0..n).all(|i| {
            (0..i).all(|j| (self.adjacency[(i, j)] - self.adjacency[(j, i)]).abs() <= tol)
        })
    }
}

pub fn laplacian(g: &WeightedDigraph) -> LaplacianData {
    let a = g.weights().clone();
    let n = g.node_count();
    let degrees = a.row_sums();
    let mut l = a.scale(-1.0);
    for (i, d) in degrees.iter().enumerate() {
        l[(i, i)] += d;
    }
    let delta = (0..n)
        .map(|i| degrees[i] - a[(i, i)])
        .fold(0.0, f64::max);
    LaplacianData {
        laplacian: l,
        adjacency: a,
        degrees,
        delta,
    }
}

/// Checks that every eigenvalue lies in the closed disc `D(Δ, Δ)` and that
/// none has negative real part, both up to a small tolerance.
pub fn gershgorin_check(ld: &LaplacianData, spec: &Spectrum) -> bool {
    let tol = 1e-9 * ld.delta.max(1.0);
    spec.eigenvalues
        .iter()
        .all(|z| (z - ld.delta).norm() <= ld.delta + tol && z.re > -tol)
}

fn require_nodes(n: usize, gain: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument(format!("preset needs n >= 2, got {n}")));
    }
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::Argument(format!("preset gain must be positive, got {gain}")));
    }
    Ok(())
}

/// Car-following chain: vehicle `i` watches vehicle `i - 1`.
pub fn preset_chain(n: usize, gain: f64) -> Result<WeightedDigraph> {
    require_nodes(n, gain)?;
    let edges: Vec<_> = (1..n).map(|i| (i, i - 1, gain)).collect();
    WeightedDigraph::from_edges(n, &edges)
}

/// Directed ring: node `i` listens to node `i + 1 (mod n)`.
pub fn preset_ring(n: usize, gain: f64) -> Result<WeightedDigraph> {
    require_nodes(n, gain)?;
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, gain)).collect();
    WeightedDigraph::from_edges(n, &edges)
}

/// Every node follows node 1, which listens to nobody.
pub fn preset_star(n: usize, gain: f64) -> Result<WeightedDigraph> {
    require_nodes(n, gain)?;
    let edges: Vec<_> = (1..n).map(|i| (i, 0, gain)).collect();
    WeightedDigraph::from_edges(n, &edges)
}

pub fn preset_complete(n: usize, gain: f64) -> Result<WeightedDigraph> {
    require_nodes(n, gain)?;
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, gain)))
        .collect();
    WeightedDigraph::from_edges(n, &edges)
}

/// Coupling weights after linearizing a monotone coupling function about
/// zero: every base weight is multiplied by the slope `h'(0)`.
pub fn linearize(base_weights: &Matrix, slope: f64) -> Result<WeightedDigraph> {
    if !(slope.is_finite() && slope > 0.0) {
        return Err(Error::Argument(format!(
            "coupling slope must be positive, got {slope}"
        )));
    }
    WeightedDigraph::new(base_weights.clone())?;
    WeightedDigraph::new(base_weights.scale(slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::eigenvalues;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_node_laplacian() {
        let g = WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let ld = laplacian(&g);
        assert_eq!(ld.laplacian.to_rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(ld.degrees, vec![1.0, 1.0]);
        assert_eq!(ld.delta, 1.0);
    }

    #[test]
    fn single_node() {
        let ld = laplacian(&WeightedDigraph::empty(1).unwrap());
        assert_eq!(ld.laplacian.to_rows(), vec![vec![0.0]]);
        assert_eq!(ld.delta, 0.0);
        assert!(WeightedDigraph::empty(0).is_err());
    }

    #[test]
    fn star_degrees() {
        let ld = laplacian(&preset_star(4, 1.0).unwrap());
        assert_eq!(ld.degrees, vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(ld.delta, 1.0);
        let ld = laplacian(&preset_star(3, 2.0).unwrap());
        assert_eq!(ld.degrees, vec![0.0, 2.0, 2.0]);
    }

    #[test]
    fn self_loops_do_not_enter_delta() {
        let g = WeightedDigraph::from_edges(2, &[(0, 0, 5.0), (0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let ld = laplacian(&g);
        assert!(ld.has_self_loops());
        assert_eq!(ld.degrees, vec![6.0, 2.0]);
        assert_eq!(ld.delta, 2.0);
        assert_eq!(ld.laplacian[(0, 0)], 1.0);
    }

    #[test]
    fn gershgorin_examples() {
        let two = laplacian(&WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap());
        assert!(gershgorin_check(&two, &eigenvalues(&two.laplacian).unwrap()));
        let cyc = laplacian(&preset_ring(3, 1.0).unwrap());
        assert!(gershgorin_check(&cyc, &eigenvalues(&cyc.laplacian).unwrap()));
    }

    #[test]
    fn chain_preset() {
        let g = preset_chain(3, 1.0).unwrap();
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(2, 1), 1.0);
        assert_eq!(g.weights().as_slice().iter().filter(|&&w| w != 0.0).count(), 2);
        let g = preset_chain(2, 0.5).unwrap();
        assert_eq!(g.weights().to_rows(), vec![vec![0.0, 0.0], vec![0.5, 0.0]]);
        let spec = eigenvalues(&laplacian(&preset_chain(5, 0.7).unwrap()).laplacian).unwrap();
        assert!(spec.eigenvalues[0].norm() < 1e-12);
        // defective eigenvalue: perturbation of order eps^(1/(n-1))
        for z in &spec.eigenvalues[1..] {
            assert!((z - 0.7).norm() < 1e-3, "{z}");
        }
        assert!(preset_chain(1, 1.0).is_err());
        assert!(preset_chain(3, 0.0).is_err());
    }

    #[test]
    fn other_presets() {
        let ring = preset_ring(3, 1.0).unwrap();
        assert_eq!(ring.weight(0, 1), 1.0);
        assert_eq!(ring.weight(1, 2), 1.0);
        assert_eq!(ring.weight(2, 0), 1.0);
        assert_eq!(laplacian(&preset_complete(3, 1.0).unwrap()).delta, 2.0);
        for f in [preset_ring, preset_star, preset_complete] {
            assert!(f(1, 1.0).is_err());
        }
    }

    #[test]
    fn linearize_scales() {
        let base = preset_chain(4, 2.0).unwrap();
        assert_eq!(linearize(base.weights(), 1.0).unwrap(), base);
        let half = linearize(base.weights(), 0.5).unwrap();
        assert_eq!(half, preset_chain(4, 1.0).unwrap());
        let neg = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        assert!(linearize(&neg, 1.0).is_err());
        assert!(linearize(base.weights(), 0.0).is_err());

        let ring = preset_ring(5, 1.0).unwrap();
        let a = eigenvalues(&laplacian(&ring).laplacian).unwrap();
        let b = eigenvalues(&laplacian(&linearize(ring.weights(), 0.3).unwrap()).laplacian).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x * 0.3 - y).norm() < 1e-12);
        }
    }

    #[test]
    fn edge_table_parsing() {
        let text = "# two agents\n2\n1 2 1.0\n2 1 0.5  # back edge\n\n";
        let g = WeightedDigraph::from_edge_table(text).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 0), 0.5);
        assert!(WeightedDigraph::from_edge_table("2\n1 3 1.0").is_err());
        assert!(WeightedDigraph::from_edge_table("2\n1 2").is_err());
        assert!(WeightedDigraph::from_edge_table("2\n1 2 -1").is_err());
        assert!(WeightedDigraph::from_edge_table("").is_err());
    }

    fn random_graph() -> impl Strategy<Value = WeightedDigraph> {
        (1usize..=8).prop_flat_map(|n| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..3.0], n * n).prop_map(move |w| {
                WeightedDigraph::new(Matrix::new(n, n, w).unwrap()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn laplacian_rows_sum_to_zero(g in random_graph()) {
            let ld = laplacian(&g);
            for s in ld.laplacian.mul_vec(&vec![1.0; g.node_count()]) {
                prop_assert!(s.abs() <= 1e-12);
            }
            prop_assert!(ld.delta >= 0.0);
        }

        #[test]
        fn spectrum_in_gershgorin_disc(g in random_graph()) {
            let ld = laplacian(&g);
            let spec = eigenvalues(&ld.laplacian).unwrap();
            prop_assert!(gershgorin_check(&ld, &spec));
        }

        #[test]
        fn presets_are_deterministic(n in 2usize..9, gain in 0.1f64..5.0) {
            prop_assert_eq!(preset_ring(n, gain).unwrap(), preset_ring(n, gain).unwrap());
            prop_assert_eq!(preset_chain(n, gain).unwrap(), preset_chain(n, gain).unwrap());
            let ld = laplacian(&preset_complete(n, gain).unwrap());
            assert_relative_eq!(ld.delta, (n - 1) as f64 * gain, max_relative = 1e-14);
        }
    }
}
