//! Consensus dynamics on weighted digraphs and their dual Markov processes,
//! with distributed-delay simulation and characteristic-equation analysis.
//!
//! Edge convention used throughout: `a[i][j]` is the weight with which the
//! state of node `j` influences node `i` (the in-degree of `i` is the sum of
//! row `i`). Many graph file formats store the transpose.
//!
//! Module map:
//!
//! - [`matcore`]: dense matrices, determinants, adjugates, `expm`, eigenvalues.
//! - [`netgraph`]: weighted digraphs, Laplacians and scenario presets.
//! - [`markov`]: stochastic matrices, stationary distributions, duality checks.
//! - [`kernel`]: delay distributions, their transform and grid quadrature.
//! - [`dde`]: method-of-steps integration of the delayed consensus models.
//! - [`spectral`]: characteristic equations, root finding and stability verdicts.

pub mod dde;
pub mod error;
pub mod kernel;
pub mod markov;
pub mod matcore;
pub mod netgraph;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
