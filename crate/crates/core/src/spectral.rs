//! Characteristic equations of the delayed models,
//!
//! ```text
//! propagation:  χ(s) = det(sI + D - F(s) A)
//! processing:   χ̂(s) = det(sI + F(s) L)
//! ```
//!
//! their derivative at the origin, roots of the scalar reduction
//! `s + λ F(s) = 0`, and stability verdicts.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dde::DelayModel;
use crate::error::{Error, Result};
use crate::kernel::DelayKernel;
use crate::markov::{stationary, StationaryMethod};
use crate::matcore::{adjugate, eigenvalues, zero_tolerance, ComplexMatrix, Spectrum};
use crate::netgraph::LaplacianData;

pub const DEFAULT_SEED_GRID: usize = 40;
/// Roots closer than this are merged.
pub const ROOT_DEDUP_TOL: f64 = 1e-8;
/// Acceptance threshold on `|s + λF(s)| / max(1, |s|)`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Real parts at or above this count as unstable in the propagation scan.
pub const SCAN_UNSTABLE_RE: f64 = 1e-6;
pub const SYMMETRY_TOL: f64 = 1e-12;

const NEWTON_MAX_ITERATIONS: usize = 100;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `det(sI + D - F(s) A)`. Meaningful for graphs without self-loops.
pub fn chi_propagation(ld: &LaplacianData, k: &DelayKernel, s: Complex64) -> Complex64 {
    propagation_matrix(ld, k.transform(s), s).determinant()
}

/// `det(sI + F(s) L)`.
pub fn chi_processing(ld: &LaplacianData, k: &DelayKernel, s: Complex64) -> Complex64 {
    processing_matrix(ld, k.transform(s), s).determinant()
}

pub fn chi(model: DelayModel, ld: &LaplacianData, k: &DelayKernel, s: Complex64) -> Complex64 {
    match model {
        DelayModel::Propagation => chi_propagation(ld, k, s),
        DelayModel::Processing => chi_processing(ld, k, s),
    }
}

fn propagation_matrix(ld: &LaplacianData, f: Complex64, s: Complex64) -> ComplexMatrix {
    let a = &ld.adjacency;
    ComplexMatrix::from_fn(ld.node_count(), |i, j| {
        let diag = if i == j { s + ld.degrees[i] } else { c(0.0) };
        diag - f * a[(i, j)]
    })
}

fn processing_matrix(ld: &LaplacianData, f: Complex64, s: Complex64) -> ComplexMatrix {
    let l = &ld.laplacian;
    ComplexMatrix::from_fn(ld.node_count(), |i, j| {
        let diag = if i == j { s } else { c(0.0) };
        diag + f * l[(i, j)]
    })
}

/// `χ'(0)` by Jacobi's formula: `tr[adj(L) (I + τ̄ A)]` for propagation
/// (equal to `tr[adj(L)(I + τ̄ D)]` since `adj(L) = α 1 π*`), `tr[adj(L)]`
/// for processing.
pub fn chi_prime_zero(ld: &LaplacianData, k: &DelayKernel, model: DelayModel) -> Result<f64> {
    // H1 check shares the stationary-distribution diagnostics
    stationary(ld, StationaryMethod::Adjugate)?;
    let adj = adjugate(&ld.laplacian)?;
    match model {
        DelayModel::Processing => Ok(adj.trace()),
        DelayModel::Propagation => {
            let tau_bar = k.mean_delay();
            let n = ld.node_count();
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let m = if i == j { 1.0 } else { 0.0 } + tau_bar * ld.adjacency[(j, i)];
                    sum += adj[(i, j)] * m;
                }
            }
            Ok(sum)
        }
    }
}

/// Rectangle in the complex plane seeded with a `grid × grid` lattice of
/// Newton starting points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub grid: usize,
}

impl SearchBox {
    pub fn new(re: (f64, f64), im: (f64, f64), grid: usize) -> Result<Self> {
        let ok = re.0.is_finite() && re.1.is_finite() && im.0.is_finite() && im.1.is_finite();
        if !ok || re.0 >= re.1 || im.0 > im.1 || grid == 0 {
            return Err(Error::Argument(format!(
                "invalid search box re {re:?}, im {im:?}, grid {grid}"
            )));
        }
        Ok(Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            grid,
        })
    }

    /// `Re ∈ [-5/τ̄, 1/τ̄]`, `Im ∈ [-4π/τ, 4π/τ]`, widened so that the disc
    /// `|s| ≤ |λ|`, which holds every root with `Re s ≥ 0`, is covered.
    pub fn default_for(lambda: Complex64, k: &DelayKernel) -> Self {
        let r = lambda.norm();
        let tau_bar = k.mean_delay();
        let (re_min, re_max) = if tau_bar > 0.0 {
            (-5.0 / tau_bar, (1.0 / tau_bar).max(r))
        } else {
            (-2.0 * r - 1.0, r + 1.0)
        };
        let im = if k.tau() > 0.0 { 4.0 * PI / k.tau() } else { 0.0 };
        let im = im.max(r + 1.0);
        Self {
            re_min: re_min.min(-r - 1.0),
            re_max,
            im_min: -im,
            im_max: im,
            grid: DEFAULT_SEED_GRID,
        }
    }

    fn seeds(&self) -> impl Iterator<Item = Complex64> + '_ {
        let at = |lo: f64, hi: f64, i: usize| {
            if self.grid == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (self.grid - 1) as f64
            }
        };
        (0..self.grid).flat_map(move |i| {
            (0..self.grid).map(move |j| {
                Complex64::new(at(self.re_min, self.re_max, i), at(self.im_min, self.im_max, j))
            })
        })
    }

    fn contains(&self, s: Complex64, slack: f64) -> bool {
        let pad_re = slack * (self.re_max - self.re_min);
        let pad_im = slack * (self.im_max - self.im_min).max(1.0);
        s.re >= self.re_min - pad_re
            && s.re <= self.re_max + pad_re
            && s.im >= self.im_min - pad_im
            && s.im <= self.im_max + pad_im
    }
}

/// Newton from every seed; `step(s)` returns the Newton correction or
/// `None` when the derivative vanishes. Converged points are filtered by
/// `accept`, deduplicated within `dedup` and sorted by descending real part.
fn newton_search(
    search: &SearchBox,
    dedup: f64,
    step_tol: f64,
    step: impl Fn(Complex64) -> Option<Complex64>,
    accept: impl Fn(Complex64) -> bool,
) -> Vec<Complex64> {
    let mut found: Vec<Complex64> = Vec::new();
    for seed in search.seeds() {
        let mut s = seed;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let Some(ds) = step(s) else { break };
            if !ds.is_finite() {
                break;
            }
            s -= ds;
            if !search.contains(s, 1.0) {
                break;
            }
            if ds.norm() <= step_tol * (1.0 + s.norm()) {
                converged = true;
                break;
            }
        }
        if converged && search.contains(s, 1e-9) && accept(s) {
            found.push(s);
        }
    }
    found.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut roots: Vec<Complex64> = Vec::new();
    for s in found {
        if roots.iter().all(|r| (r - s).norm() > dedup) {
            roots.push(s);
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    roots
}

/// Roots of `s + λF(s) = 0` inside `search`, sorted by descending real part.
pub fn scalar_roots(lambda: Complex64, k: &DelayKernel, search: &SearchBox) -> Result<Vec<Complex64>> {
    if lambda.norm() == 0.0 || !lambda.is_finite() {
        return Err(Error::Argument(format!("λ must be nonzero and finite, got {lambda}")));
    }
    let g = |s: Complex64| s + lambda * k.transform(s);
    let step = |s: Complex64| {
        let dg = c(1.0) + lambda * k.transform_derivative(s);
        if dg.norm() < 1e-300 {
            None
        } else {
            Some(g(s) / dg)
        }
    };
    let accept = |s: Complex64| g(s).norm() <= ROOT_RESIDUAL_TOL * s.norm().max(1.0);
    Ok(newton_search(search, ROOT_DEDUP_TOL, 1e-14, step, accept))
}

/// [`scalar_roots`] over [`SearchBox::default_for`].
pub fn scalar_roots_default(lambda: Complex64, k: &DelayKernel) -> Result<Vec<Complex64>> {
    scalar_roots(lambda, k, &SearchBox::default_for(lambda, k))
}

/// Critical discrete delay `π / (2λ)` for `s + λ e^{-sτ} = 0`.
pub fn hayes_threshold(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("λ must be positive, got {lambda}")));
    }
    Ok(PI / (2.0 * lambda))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consensus,
    NoConsensus,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub model: DelayModel,
    pub laplacian_eigenvalues: Vec<Complex64>,
    pub zero_multiplicity: usize,
    pub h1: bool,
    pub chi_prime_zero: Option<f64>,
    /// Largest real part among characteristic roots other than `s = 0`
    /// that the numerical scan found.
    pub rightmost_nonzero_real_part: Option<f64>,
    /// Critical delay; processing model with symmetric coupling only.
    pub threshold: Option<f64>,
    /// `π / (4Δ)`; processing model with symmetric coupling only.
    pub sufficient_bound: Option<f64>,
    pub verdict: Verdict,
    pub note: String,
    pub stationary: Option<Vec<f64>>,
}

fn distinct_nonzero(spec: &Spectrum, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for &z in &spec.eigenvalues {
        if z.norm() >= tol && out.iter().all(|w| (w - z).norm() > 1e-9 * z.norm().max(1.0)) {
            out.push(z);
        }
    }
    out
}

fn zero_tol(ld: &LaplacianData) -> f64 {
    zero_tolerance(&ld.laplacian)
}

/// Verdict for the processing model with a discrete delay `τ`.
pub fn processing_verdict(ld: &LaplacianData, tau: f64) -> Result<SpectralReport> {
    let kernel = DelayKernel::discrete(tau)?;
    let spec = eigenvalues(&ld.laplacian)?;
    let pi = stationary(ld, StationaryMethod::Adjugate)?;
    let chi0 = chi_prime_zero(ld, &kernel, DelayModel::Processing)?;
    let lambdas = distinct_nonzero(&spec, zero_tol(ld));

    let mut rightmost: Option<f64> = None;
    for &lambda in &lambdas {
        let roots = scalar_roots_default(lambda, &kernel)?;
        if let Some(r) = roots.first() {
            rightmost = Some(rightmost.map_or(r.re, |m: f64| m.max(r.re)));
        }
    }

    let mut report = SpectralReport {
        model: DelayModel::Processing,
        laplacian_eigenvalues: spec.eigenvalues.clone(),
        zero_multiplicity: spec.zero_multiplicity,
        h1: true,
        chi_prime_zero: Some(chi0),
        rightmost_nonzero_real_part: rightmost,
        threshold: None,
        sufficient_bound: None,
        verdict: Verdict::Inconclusive,
        note: String::new(),
        stationary: Some(pi.pi),
    };
    if !ld.is_symmetric(SYMMETRY_TOL) {
        report.note = "coupling is not symmetric; the delay threshold criterion does not apply, \
                       rightmost root of the scalar equations reported without a verdict"
            .into();
        return Ok(report);
    }
    let lambda_max = lambdas.iter().map(|z| z.re).fold(0.0, f64::max);
    let threshold = hayes_threshold(lambda_max)?;
    report.threshold = Some(threshold);
    report.sufficient_bound = Some(PI / (4.0 * ld.delta.max(f64::MIN_POSITIVE)));
    if tau < threshold {
        report.verdict = Verdict::Consensus;
        report.note = format!("τ = {tau} below critical delay π/(2 λmax) = {threshold:.6}");
        if rightmost.is_some_and(|r| r >= 0.0) {
            report.verdict = Verdict::Inconclusive;
            report.note.push_str("; root scan found a non-decaying root, numerical disagreement");
        }
    } else {
        report.verdict = Verdict::NoConsensus;
        report.note = format!("τ = {tau} at or above critical delay π/(2 λmax) = {threshold:.6}");
    }
    Ok(report)
}

/// Box that holds every root of `χ` with `Re s ≥ 0` (those satisfy
/// `|s + d_i| ≤ d_i` for some `i`) plus a strip of the left half plane.
fn propagation_scan_box(ld: &LaplacianData, k: &DelayKernel) -> SearchBox {
    let dmax = ld.degrees.iter().fold(0.0_f64, |a, &d| a.max(d));
    let tau_bar = k.mean_delay();
    let left = 2.0 * dmax + 1.0 + if tau_bar > 0.0 { 5.0 / tau_bar } else { 0.0 };
    let im = if k.tau() > 0.0 { 4.0 * PI / k.tau() } else { 0.0 };
    let im = im.max(2.0 * dmax + 1.0);
    SearchBox {
        re_min: -left,
        re_max: 2.0 * dmax + 1.0,
        im_min: -im,
        im_max: im,
        grid: DEFAULT_SEED_GRID,
    }
}

/// Roots of `χ` found by a Newton scan, sorted by descending real part.
pub fn propagation_roots(ld: &LaplacianData, k: &DelayKernel, search: &SearchBox) -> Vec<Complex64> {
    let n = ld.node_count();
    let step = |s: Complex64| {
        let m = propagation_matrix(ld, k.transform(s), s);
        let fp = k.transform_derivative(s);
        let dm = ComplexMatrix::from_fn(n, |i, j| {
            let id = if i == j { c(1.0) } else { c(0.0) };
            id - fp * ld.adjacency[(i, j)]
        });
        match m.trace_of_solve(&dm) {
            Some(t) if t.norm() > 1e-300 => Some(c(1.0) / t),
            Some(_) => None,
            // exactly singular: already on a root
            None => Some(c(0.0)),
        }
    };
    newton_search(search, 1e-6, 1e-10, step, |_| true)
}

/// Verdict for the propagation model: consensus for any kernel exactly when
/// zero is a simple eigenvalue of `L`, cross-checked by a root scan.
pub fn propagation_verdict(ld: &LaplacianData, k: &DelayKernel) -> Result<SpectralReport> {
    if ld.has_self_loops() {
        return Err(Error::Argument(
            "propagation-delay model requires zero self-coupling a_ii".into(),
        ));
    }
    let spec = eigenvalues(&ld.laplacian)?;
    let mut report = SpectralReport {
        model: DelayModel::Propagation,
        laplacian_eigenvalues: spec.eigenvalues.clone(),
        zero_multiplicity: spec.zero_multiplicity,
        h1: spec.zero_multiplicity == 1,
        chi_prime_zero: None,
        rightmost_nonzero_real_part: None,
        threshold: None,
        sufficient_bound: None,
        verdict: Verdict::NoConsensus,
        note: String::new(),
        stationary: None,
    };
    if !report.h1 {
        report.note = format!(
            "zero eigenvalue of L has multiplicity {}, consensus value not unique",
            spec.zero_multiplicity
        );
        return Ok(report);
    }
    report.chi_prime_zero = Some(chi_prime_zero(ld, k, DelayModel::Propagation)?);
    report.stationary = Some(stationary(ld, StationaryMethod::Adjugate)?.pi);

    let roots = propagation_roots(ld, k, &propagation_scan_box(ld, k));
    report.rightmost_nonzero_real_part = roots.iter().find(|s| s.norm() > 1e-6).map(|s| s.re);
    match report.rightmost_nonzero_real_part {
        Some(r) if r >= SCAN_UNSTABLE_RE => {
            report.verdict = Verdict::Inconclusive;
            report.note = format!("root scan found a root with real part {r:e}, numerical disagreement");
        }
        Some(_) => {
            report.verdict = Verdict::Consensus;
            report.note = "zero is a simple characteristic root; all others decay".into();
        }
        None => {
            report.verdict = Verdict::Consensus;
            report.note =
                "zero is a simple characteristic root; scan found no other roots in its box".into();
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{laplacian, preset_chain, preset_complete, WeightedDigraph};
    use approx::assert_relative_eq;

    fn two_node() -> LaplacianData {
        laplacian(&WeightedDigraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap())
    }

    #[test]
    fn chi_examples() {
        let ld = two_node();
        let k = DelayKernel::discrete(1.0).unwrap();
        assert!(chi_propagation(&ld, &k, c(0.0)).norm() < 1e-15);
        assert!(chi_processing(&ld, &k, c(0.0)).norm() < 1e-15);
        let v = chi_propagation(&ld, &k, c(1.0));
        assert_relative_eq!(v.re, 4.0 - (-2.0f64).exp(), epsilon = 1e-14);

        let zero = DelayKernel::discrete(0.0).unwrap();
        let s = Complex64::new(0.3, -1.2);
        let direct = (s * (s + 2.0)).re;
        assert_relative_eq!(chi_propagation(&ld, &zero, s).re, direct, epsilon = 1e-14);

        let tau = 0.6;
        let k = DelayKernel::discrete(tau).unwrap();
        let expected = s * (s + 2.0 * (-s * tau).exp());
        assert!((chi_processing(&ld, &k, s) - expected).norm() < 1e-14);

        let crit = DelayKernel::discrete(PI / 4.0).unwrap();
        assert!(chi_processing(&ld, &crit, Complex64::new(0.0, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn chi_prime_examples() {
        let ld = two_node();
        let k = DelayKernel::discrete(1.0).unwrap();
        assert_relative_eq!(chi_prime_zero(&ld, &k, DelayModel::Propagation).unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(chi_prime_zero(&ld, &k, DelayModel::Processing).unwrap(), 2.0, epsilon = 1e-12);
        let dyads = laplacian(
            &WeightedDigraph::from_edges(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]).unwrap(),
        );
        assert!(matches!(
            chi_prime_zero(&dyads, &k, DelayModel::Processing),
            Err(Error::Ambiguity(_))
        ));
    }

    #[test]
    fn scalar_root_examples() {
        let crit = DelayKernel::discrete(PI / 4.0).unwrap();
        let roots = scalar_roots_default(c(2.0), &crit).unwrap();
        assert!(roots.iter().any(|r| (r - Complex64::new(0.0, 2.0)).norm() < 1e-8));
        assert!(roots.iter().any(|r| (r - Complex64::new(0.0, -2.0)).norm() < 1e-8));
        assert!(roots[0].re.abs() < 1e-8);

        let k = DelayKernel::discrete(0.5).unwrap();
        let roots = scalar_roots_default(c(2.0), &k).unwrap();
        assert!(!roots.is_empty());
        assert!(roots.iter().all(|r| r.re < 0.0));

        let zero = DelayKernel::discrete(0.0).unwrap();
        let roots = scalar_roots_default(c(3.0), &zero).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].re, -3.0, epsilon = 1e-12);

        assert!(scalar_roots_default(c(0.0), &k).is_err());
    }

    #[test]
    fn hayes_examples() {
        assert_relative_eq!(hayes_threshold(2.0).unwrap(), PI / 4.0);
        assert_relative_eq!(hayes_threshold(1.0).unwrap(), PI / 2.0);
        assert_relative_eq!(hayes_threshold(6.0).unwrap(), hayes_threshold(3.0).unwrap() / 2.0);
        assert!(hayes_threshold(0.0).is_err());
        assert!(hayes_threshold(-1.0).is_err());
    }

    #[test]
    fn processing_verdicts() {
        let ld = two_node();
        let r = processing_verdict(&ld, 0.7).unwrap();
        assert_eq!(r.verdict, Verdict::Consensus);
        assert!(r.rightmost_nonzero_real_part.unwrap() < 0.0);
        let r = processing_verdict(&ld, 0.9).unwrap();
        assert_eq!(r.verdict, Verdict::NoConsensus);
        assert!(r.rightmost_nonzero_real_part.unwrap() > 0.0);

        let k3 = laplacian(&preset_complete(3, 1.0).unwrap());
        let r = processing_verdict(&k3, 0.1).unwrap();
        assert_relative_eq!(r.threshold.unwrap(), PI / 6.0, epsilon = 1e-10);
        assert_relative_eq!(r.sufficient_bound.unwrap(), PI / 8.0, epsilon = 1e-12);

        let chain = laplacian(&preset_chain(3, 1.0).unwrap());
        let r = processing_verdict(&chain, 0.1).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.threshold.is_none());
    }

    #[test]
    fn propagation_verdicts() {
        let ld = two_node();
        let r = propagation_verdict(&ld, &DelayKernel::discrete(10.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Consensus);
        assert_relative_eq!(r.chi_prime_zero.unwrap(), 2.0 * 11.0, epsilon = 1e-10);
        assert!(r.rightmost_nonzero_real_part.is_none_or(|x| x < 0.0));

        let chain = laplacian(&preset_chain(4, 1.0).unwrap());
        let r = propagation_verdict(&chain, &DelayKernel::uniform(2.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Consensus);

        let split = laplacian(&WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap());
        let r = propagation_verdict(&split, &DelayKernel::uniform(1.0).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::NoConsensus);
        assert!(!r.h1);
        assert_eq!(r.zero_multiplicity, 2);
    }

    #[test]
    fn zero_delay_propagation_roots_are_negated_eigenvalues() {
        let ld = laplacian(&preset_complete(3, 0.5).unwrap());
        let zero = DelayKernel::discrete(0.0).unwrap();
        let roots = propagation_roots(&ld, &zero, &propagation_scan_box(&ld, &zero));
        // spectrum {0, 1.5, 1.5}
        assert_eq!(roots.len(), 2);
        assert!(roots[0].norm() < 1e-9);
        assert_relative_eq!(roots[1].re, -1.5, epsilon = 1e-6);
    }
}
