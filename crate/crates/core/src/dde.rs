//! Method-of-steps integration of the two delayed consensus models
//!
//! ```text
//! propagation:  x'(t) = -D x(t) + A ∫ x(t+θ) dη(θ)
//! processing:   x'(t) = -L ∫ x(t+θ) dη(θ)
//! ```
//!
//! on a uniform grid whose step divides the maximum delay. The Stieltjes
//! integral is replaced by the kernel's grid quadrature, so the scheme
//! integrates a system with delays at grid multiples only; classical RK4
//! advances it, with delayed stage values taken from the committed history
//! through cubic Hermite interpolation. The stored slopes make the history
//! a C¹ piecewise cubic, which is also what the conserved-quantity
//! integrals are evaluated against.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{DelayKernel, QuadratureRule};
use crate::markov::{stationary, StationaryDistribution, StationaryMethod};
use crate::netgraph::LaplacianData;

/// Growth factor over the initial sup-norm at which a run is declared
/// divergent.
pub const BLOWUP_FACTOR: f64 = 1e6;
pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayModel {
    Propagation,
    Processing,
}

/// Initial function `φ` on `[-τ, 0]` with its derivative.
pub trait History {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, out: &mut [f64]);
    fn slope(&self, t: f64, out: &mut [f64]);
}

/// The closed-form initial functions accepted by the simulators.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialHistory {
    Constant(Vec<f64>),
    /// `x_i(t) = intercept_i + slope_i · t`
    Affine { intercept: Vec<f64>, slope: Vec<f64> },
    /// Per-node coefficients in ascending powers of `t`.
    Polynomial(Vec<Vec<f64>>),
}

impl InitialHistory {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            InitialHistory::Constant(c) => !c.is_empty() && finite(c),
            InitialHistory::Affine { intercept, slope } => {
                !intercept.is_empty()
                    && intercept.len() == slope.len()
                    && finite(intercept)
                    && finite(slope)
            }
            InitialHistory::Polynomial(p) => !p.is_empty() && p.iter().all(|c| finite(c)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(
                "history needs one finite entry per node (and matching lengths)".into(),
            ))
        }
    }

    /// `a φ + b·1`
    pub fn affine_map(&self, a: f64, b: f64) -> InitialHistory {
        match self {
            InitialHistory::Constant(c) => {
                InitialHistory::Constant(c.iter().map(|v| a * v + b).collect())
            }
            InitialHistory::Affine { intercept, slope } => InitialHistory::Affine {
                intercept: intercept.iter().map(|v| a * v + b).collect(),
                slope: slope.iter().map(|v| a * v).collect(),
            },
            InitialHistory::Polynomial(p) => InitialHistory::Polynomial(
                p.iter()
                    .map(|c| {
                        let mut c: Vec<f64> = c.iter().map(|v| a * v).collect();
                        if c.is_empty() {
                            c.push(0.0);
                        }
                        c[0] += b;
                        c
                    })
                    .collect(),
            ),
        }
    }
}

impl History for InitialHistory {
    fn dim(&self) -> usize {
        match self {
            InitialHistory::Constant(c) => c.len(),
            InitialHistory::Affine { intercept, .. } => intercept.len(),
            InitialHistory::Polynomial(p) => p.len(),
        }
    }

    fn value(&self, t: f64, out: &mut [f64]) {
        match self {
            InitialHistory::Constant(c) => out.copy_from_slice(c),
            InitialHistory::Affine { intercept, slope } => {
                for ((o, a), b) in out.iter_mut().zip(intercept).zip(slope) {
                    *o = a + b * t;
                }
            }
            InitialHistory::Polynomial(p) => {
                for (o, coeffs) in out.iter_mut().zip(p) {
                    *o = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
                }
            }
        }
    }

    fn slope(&self, t: f64, out: &mut [f64]) {
        match self {
            InitialHistory::Constant(_) => out.fill(0.0),
            InitialHistory::Affine { slope, .. } => out.copy_from_slice(slope),
            InitialHistory::Polynomial(p) => {
                for (o, coeffs) in out.iter_mut().zip(p) {
                    *o = coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c);
                }
            }
        }
    }
}

/// Grid solution on `t_k = (k - M) h`, `k = 0..len`, where `M h = τ`.
#[derive(Clone, Debug)]
pub struct HistoryTrajectory {
    model: DelayModel,
    n: usize,
    h: f64,
    span: usize,
    states: Vec<f64>,
    /// Right derivative at each node.
    slopes: Vec<f64>,
    /// Left derivative at `t = 0`, from the initial function.
    initial_slope: Vec<f64>,
    diverged_at: Option<f64>,
}

impl HistoryTrajectory {
    pub fn model(&self) -> DelayModel {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the node at `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.span
    }

    pub fn t_start(&self) -> f64 {
        -(self.span as f64) * self.h
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.span as f64) * self.h
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn slope(&self, k: usize) -> &[f64] {
        &self.slopes[k * self.n..(k + 1) * self.n]
    }

    fn left_slope(&self, k: usize) -> &[f64] {
        if k == self.span {
            &self.initial_slope
        } else {
            self.slope(k)
        }
    }

    /// Time at which the blow-up guard stopped the run, if it did.
    pub fn diverged_at(&self) -> Option<f64> {
        self.diverged_at
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Index of the grid node at time `t`.
    pub fn node_at(&self, t: f64) -> Result<usize> {
        let pos = t / self.h + self.span as f64;
        let k = pos.round();
        if !(0.0..self.len() as f64).contains(&k) || (pos - k).abs() > 1e-6 {
            return Err(Error::Range {
                t,
                start: self.t_start(),
                end: self.end_time(),
            });
        }
        Ok(k as usize)
    }

    /// Cubic Hermite interpolant of the stored solution.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        let range_err = || Error::Range {
            t,
            start: self.t_start(),
            end: self.end_time(),
        };
        let pos = t / self.h + self.span as f64;
        let last = (self.len() - 1) as f64;
        if !(-1e-9..=last + 1e-9).contains(&pos) {
            return Err(range_err());
        }
        let pos = pos.clamp(0.0, last);
        let k = (pos.floor() as usize).min(self.len().saturating_sub(2));
        if self.len() == 1 {
            return Ok(self.state(0).to_vec());
        }
        let s = pos - k as f64;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let (x0, x1) = (self.state(k), self.state(k + 1));
        let (d0, d1) = (self.slope(k), self.left_slope(k + 1));
        Ok((0..self.n)
            .map(|i| h00 * x0[i] + self.h * h10 * d0[i] + h01 * x1[i] + self.h * h11 * d1[i])
            .collect())
    }

    /// `max_{i,j} |x_i - x_j|` at node `k`.
    pub fn spread(&self, k: usize) -> f64 {
        spread_of(self.state(k))
    }

    /// Spread at every node from `t = 0` on.
    pub fn spread_history(&self) -> Vec<f64> {
        (self.span..self.len()).map(|k| self.spread(k)).collect()
    }

    fn cell_integral(&self, j: usize, out: &mut [f64]) {
        let (x0, x1) = (self.state(j), self.state(j + 1));
        let (d0, d1) = (self.slope(j), self.left_slope(j + 1));
        let h = self.h;
        for i in 0..self.n {
            out[i] = 0.5 * h * (x0[i] + x1[i]) + h * h / 12.0 * (d0[i] - d1[i]);
        }
    }

    /// `P_k = ∫_{t_0}^{t_k} x(s) ds` per node, flat.
    fn prefix_integrals(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.states.len()];
        let mut cell = vec![0.0; n];
        for j in 0..self.len() - 1 {
            self.cell_integral(j, &mut cell);
            for i in 0..n {
                out[(j + 1) * n + i] = out[j * n + i] + cell[i];
            }
        }
        out
    }

    /// CSV with header `t,x1,...,xn`, one row per grid node, 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.n {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.time(k))?;
            for v in self.state(k) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn spread_of(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Right-hand side `f(x, z)` where `z` is the discretized delayed integral.
struct Coupling<'a> {
    model: DelayModel,
    ld: &'a LaplacianData,
}

impl Coupling<'_> {
    fn eval(&self, x: &[f64], delayed: &[f64], out: &mut [f64]) {
        let n = x.len();
        match self.model {
            DelayModel::Propagation => {
                let a = &self.ld.adjacency;
                for i in 0..n {
                    let coupled: f64 = a.row(i).iter().zip(delayed).map(|(w, z)| w * z).sum();
                    out[i] = coupled - self.ld.degrees[i] * x[i];
                }
            }
            DelayModel::Processing => {
                let l = &self.ld.laplacian;
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    *o = -l.row(i).iter().zip(delayed).map(|(w, z)| w * z).sum::<f64>();
                }
            }
        }
    }
}

/// Integrates the propagation-delay model. Requires a zero diagonal.
pub fn simulate_propagation<H: History + ?Sized>(
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    horizon: f64,
    h: f64,
) -> Result<HistoryTrajectory> {
    if ld.has_self_loops() {
        return Err(Error::Argument(
            "propagation-delay model requires zero self-coupling a_ii".into(),
        ));
    }
    integrate(DelayModel::Propagation, ld, kernel, phi, horizon, h)
}

pub fn simulate_processing<H: History + ?Sized>(
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    horizon: f64,
    h: f64,
) -> Result<HistoryTrajectory> {
    integrate(DelayModel::Processing, ld, kernel, phi, horizon, h)
}

pub fn simulate<H: History + ?Sized>(
    model: DelayModel,
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    horizon: f64,
    h: f64,
) -> Result<HistoryTrajectory> {
    match model {
        DelayModel::Propagation => simulate_propagation(ld, kernel, phi, horizon, h),
        DelayModel::Processing => simulate_processing(ld, kernel, phi, horizon, h),
    }
}

fn integrate<H: History + ?Sized>(
    model: DelayModel,
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    horizon: f64,
    h: f64,
) -> Result<HistoryTrajectory> {
    let n = ld.node_count();
    if phi.dim() != n {
        return Err(Error::Dimension(format!(
            "history has dimension {}, graph has {n} nodes",
            phi.dim()
        )));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Argument(format!("horizon must be >= 0, got {horizon}")));
    }
    let rule = kernel.quadrature_weights(h)?;
    let span = rule.span();
    let steps = (horizon / h - 1e-9).ceil().max(0.0) as usize;
    let total = span + steps + 1;

    let mut traj = HistoryTrajectory {
        model,
        n,
        h,
        span,
        states: Vec::with_capacity(total * n),
        slopes: Vec::with_capacity(total * n),
        initial_slope: vec![0.0; n],
        diverged_at: None,
    };
    let mut buf = vec![0.0; n];
    for k in 0..=span {
        let t = traj.time(k);
        phi.value(t, &mut buf);
        traj.states.extend_from_slice(&buf);
        phi.slope(t, &mut buf);
        traj.slopes.extend_from_slice(&buf);
    }
    if traj.states.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("initial function is not finite".into()));
    }
    traj.initial_slope = traj.slope(span).to_vec();
    let norm0 = traj.states.chunks(n).map(sup_norm).fold(0.0, f64::max);

    let coupling = Coupling { model, ld };
    let u0 = rule.weights()[0];
    let past: Vec<(usize, f64)> = rule.nonzero().iter().copied().filter(|&(m, _)| m > 0).collect();

    let mut s_now = vec![0.0; n];
    let mut s_mid = vec![0.0; n];
    let mut s_next = vec![0.0; n];
    let mut z = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut y = vec![0.0; n];

    // right slope at t = 0
    past_sum(&traj, &past, span, &mut s_now);
    let x0 = traj.state(span).to_vec();
    combine(&s_now, u0, &x0, &mut z);
    coupling.eval(&x0, &z, &mut k1);
    traj.slopes[span * n..(span + 1) * n].copy_from_slice(&k1);

    for k in span..span + steps {
        let xk = traj.state(k).to_vec();
        k1.copy_from_slice(traj.slope(k));
        past_sum(&traj, &past, k, &mut s_now);
        past_mid_sum(&traj, &past, k, &mut s_mid);
        past_sum(&traj, &past, k + 1, &mut s_next);

        axpy_into(&xk, 0.5 * h, &k1, &mut y);
        combine(&s_mid, u0, &y, &mut z);
        coupling.eval(&y, &z, &mut k2);

        axpy_into(&xk, 0.5 * h, &k2, &mut y);
        combine(&s_mid, u0, &y, &mut z);
        coupling.eval(&y, &z, &mut k3);

        axpy_into(&xk, h, &k3, &mut y);
        combine(&s_next, u0, &y, &mut z);
        coupling.eval(&y, &z, &mut k4);

        for i in 0..n {
            y[i] = xk[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = traj.time(k + 1);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup { t: t_next });
        }
        combine(&s_next, u0, &y, &mut z);
        coupling.eval(&y, &z, &mut k1);
        traj.states.extend_from_slice(&y);
        traj.slopes.extend_from_slice(&k1);

        if norm0 > 0.0 && sup_norm(&y) > BLOWUP_FACTOR * norm0 {
            traj.diverged_at = Some(t_next);
            break;
        }
    }
    Ok(traj)
}

/// `Σ_{m≥1} u_m x_{k-m}` with indices clamped below at the grid start.
fn past_sum(traj: &HistoryTrajectory, past: &[(usize, f64)], k: usize, out: &mut [f64]) {
    out.fill(0.0);
    for &(m, u) in past {
        let x = traj.state(k - m);
        for (o, v) in out.iter_mut().zip(x) {
            *o += u * v;
        }
    }
}

/// `Σ_{m≥1} u_m x(t_k + h/2 - m h)` from the Hermite midpoints of
/// committed cells.
fn past_mid_sum(traj: &HistoryTrajectory, past: &[(usize, f64)], k: usize, out: &mut [f64]) {
    out.fill(0.0);
    let h8 = traj.h / 8.0;
    for &(m, u) in past {
        let j = k - m;
        let (x0, x1) = (traj.state(j), traj.state(j + 1));
        let (d0, d1) = (traj.slope(j), traj.left_slope(j + 1));
        for i in 0..out.len() {
            out[i] += u * (0.5 * (x0[i] + x1[i]) + h8 * (d0[i] - d1[i]));
        }
    }
}

fn combine(past: &[f64], u0: f64, current: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = past[i] + u0 * current[i];
    }
}

fn axpy_into(x: &[f64], a: f64, d: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = x[i] + a * d[i];
    }
}

fn pi_star(ld: &LaplacianData) -> Result<StationaryDistribution> {
    stationary(ld, StationaryMethod::Adjugate)
}

/// `⟨π*, x(t) + D Σ_m u_m ∫_{t-mh}^t x(s) ds⟩` at grid nodes `k` (t ≥ 0).
fn q_at_nodes(
    traj: &HistoryTrajectory,
    ld: &LaplacianData,
    rule: &QuadratureRule,
    pi: &[f64],
    nodes: impl Iterator<Item = usize>,
) -> Vec<f64> {
    let n = traj.n;
    let prefix = traj.prefix_integrals();
    let weights: Vec<f64> = pi.iter().zip(&ld.degrees).map(|(p, d)| p * d).collect();
    nodes
        .map(|k| {
            let mut q = pi.iter().zip(traj.state(k)).map(|(p, x)| p * x).sum::<f64>();
            for &(m, u) in rule.nonzero() {
                if m == 0 {
                    continue;
                }
                let hi = &prefix[k * n..(k + 1) * n];
                let lo = &prefix[(k - m) * n..(k - m + 1) * n];
                q += u * (0..n).map(|i| weights[i] * (hi[i] - lo[i])).sum::<f64>();
            }
            q
        })
        .collect()
}

fn rule_for(traj: &HistoryTrajectory, kernel: &DelayKernel) -> Result<QuadratureRule> {
    let rule = kernel.quadrature_weights(traj.h)?;
    if rule.span() > traj.span {
        return Err(Error::Argument(format!(
            "kernel needs {} history steps, trajectory stores {}",
            rule.span(),
            traj.span
        )));
    }
    Ok(rule)
}

/// The conserved quantity of the propagation-delay model at grid time `t`.
pub fn conserved_q(
    traj: &HistoryTrajectory,
    ld: &LaplacianData,
    kernel: &DelayKernel,
    t: f64,
) -> Result<f64> {
    let k = traj.node_at(t)?;
    if k < traj.span {
        return Err(Error::Range {
            t,
            start: 0.0,
            end: traj.end_time(),
        });
    }
    let rule = rule_for(traj, kernel)?;
    let pi = pi_star(ld)?;
    Ok(q_at_nodes(traj, ld, &rule, &pi.pi, std::iter::once(k))[0])
}

/// `q` at every node from `t = 0` to the end of the run.
pub fn conserved_q_series(
    traj: &HistoryTrajectory,
    ld: &LaplacianData,
    kernel: &DelayKernel,
) -> Result<Vec<f64>> {
    let rule = rule_for(traj, kernel)?;
    let pi = pi_star(ld)?;
    Ok(q_at_nodes(traj, ld, &rule, &pi.pi, traj.span..traj.len()))
}

/// `⟨π*, x(t)⟩`, conserved by the processing-delay model.
pub fn conserved_processing(traj: &HistoryTrajectory, ld: &LaplacianData, t: f64) -> Result<f64> {
    let k = traj.node_at(t)?;
    let pi = pi_star(ld)?;
    Ok(pi.weighted_mean(traj.state(k)))
}

/// Consensus value of the propagation-delay model,
///
/// ```text
/// c = ⟨π*, φ(0) + D ∫∫_{θ}^{0} φ(s) ds dη(θ)⟩ / (1 + τ̄ ⟨π*, d⟩)
/// ```
///
/// with the outer integral taken by the kernel's quadrature on a grid of
/// step `h` and the inner ones by Hermite-corrected trapezoid sums, the
/// same rules the simulator and [`conserved_q`] use.
pub fn predict_propagation<H: History + ?Sized>(
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    h: f64,
) -> Result<f64> {
    let n = ld.node_count();
    if phi.dim() != n {
        return Err(Error::Dimension(format!(
            "history has dimension {}, graph has {n} nodes",
            phi.dim()
        )));
    }
    let pi = pi_star(ld)?;
    let rule = kernel.quadrature_weights(h)?;
    let span = rule.span();

    let mut x0 = vec![0.0; n];
    phi.value(0.0, &mut x0);
    // ∫_{-mh}^{0} φ, accumulated cell by cell backwards from 0
    let mut inner = vec![0.0; n];
    let mut weighted = vec![0.0; n];
    let (mut xa, mut xb, mut da, mut db) = (vec![0.0; n], x0.clone(), vec![0.0; n], vec![0.0; n]);
    phi.slope(0.0, &mut db);
    let mut next = rule.nonzero().iter().peekable();
    if let Some(&&(0, _)) = next.peek() {
        next.next();
    }
    for m in 1..=span {
        let t = -(m as f64) * h;
        phi.value(t, &mut xa);
        phi.slope(t, &mut da);
        for i in 0..n {
            inner[i] += 0.5 * h * (xa[i] + xb[i]) + h * h / 12.0 * (da[i] - db[i]);
        }
        if let Some(&&(mm, u)) = next.peek() {
            if mm == m {
                for i in 0..n {
                    weighted[i] += u * inner[i];
                }
                next.next();
            }
        }
        std::mem::swap(&mut xa, &mut xb);
        std::mem::swap(&mut da, &mut db);
    }
    let numerator: f64 = (0..n)
        .map(|i| pi.pi[i] * (x0[i] + ld.degrees[i] * weighted[i]))
        .sum();
    let mean_degree = pi.weighted_mean(&ld.degrees);
    Ok(numerator / (1.0 + rule.mean_delay() * mean_degree))
}

/// Consensus value of the processing-delay model, `⟨π*, φ(0)⟩`.
pub fn predict_processing<H: History + ?Sized>(ld: &LaplacianData, phi: &H) -> Result<f64> {
    let n = ld.node_count();
    if phi.dim() != n {
        return Err(Error::Dimension(format!(
            "history has dimension {}, graph has {n} nodes",
            phi.dim()
        )));
    }
    let pi = pi_star(ld)?;
    let mut x0 = vec![0.0; n];
    phi.value(0.0, &mut x0);
    Ok(pi.weighted_mean(&x0))
}

/// Default detection window, `max(τ, 1)` time units.
pub fn default_window(kernel: &DelayKernel) -> f64 {
    kernel.tau().max(1.0)
}

/// Mean of the final state if, over the last `window` time units, the
/// spread stayed below `tol` and no component moved faster than `tol`.
pub fn detect_consensus(traj: &HistoryTrajectory, tol: f64, window: f64) -> Option<f64> {
    if traj.diverged_at.is_some() {
        return None;
    }
    let steps = (window / traj.h - 1e-9).ceil().max(1.0) as usize;
    let last = traj.len() - 1;
    if last < traj.span + steps {
        return None;
    }
    let first = last - steps;
    for k in first..=last {
        if traj.spread(k) >= tol {
            return None;
        }
        if k > first {
            let moved = traj
                .state(k)
                .iter()
                .zip(traj.state(k - 1))
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            if moved >= tol * traj.h {
                return None;
            }
        }
    }
    let x = traj.final_state();
    Some(x.iter().sum::<f64>() / x.len() as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsensusReport {
    pub model: DelayModel,
    pub converged: bool,
    pub detected_value: Option<f64>,
    pub predicted_value: f64,
    pub diverged_at: Option<f64>,
    pub spread_history: Vec<f64>,
    /// Conserved quantity at `t = 0`.
    pub q_initial: f64,
    /// `max_t |q(t) - q(0)|`.
    pub q_drift: f64,
    /// `max(|q(0)|, sup |φ|)`, the scale for [`Self::relative_q_drift`].
    pub q_scale: f64,
}

impl ConsensusReport {
    pub fn relative_q_drift(&self) -> f64 {
        if self.q_scale > 0.0 {
            self.q_drift / self.q_scale
        } else {
            self.q_drift
        }
    }
}

/// Detection, prediction and conservation diagnostics for a finished run.
pub fn consensus_report<H: History + ?Sized>(
    traj: &HistoryTrajectory,
    ld: &LaplacianData,
    kernel: &DelayKernel,
    phi: &H,
    tol: f64,
    window: f64,
) -> Result<ConsensusReport> {
    let (predicted_value, q) = match traj.model {
        DelayModel::Propagation => (
            predict_propagation(ld, kernel, phi, traj.h)?,
            conserved_q_series(traj, ld, kernel)?,
        ),
        DelayModel::Processing => {
            let pi = pi_star(ld)?;
            let q = (traj.span..traj.len()).map(|k| pi.weighted_mean(traj.state(k))).collect();
            (predict_processing(ld, phi)?, q)
        }
    };
    let q_initial = q[0];
    let q_drift = q.iter().fold(0.0_f64, |acc, v| acc.max((v - q_initial).abs()));
    let detected_value = detect_consensus(traj, tol, window);
    let phi_sup = (0..=traj.span).map(|k| sup_norm(traj.state(k))).fold(0.0, f64::max);
    Ok(ConsensusReport {
        model: traj.model,
        converged: detected_value.is_some(),
        detected_value,
        predicted_value,
        diverged_at: traj.diverged_at,
        spread_history: traj.spread_history(),
        q_initial,
        q_drift,
        q_scale: q_initial.abs().max(phi_sup),
    })
}
