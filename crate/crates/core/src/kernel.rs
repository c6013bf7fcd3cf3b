//! Delay distributions on `[-τ, 0]`.
//!
//! A kernel is a nonnegative measure of total mass one made of point masses
//! (atoms) plus a piecewise-constant density on a uniform partition of the
//! support. The Stieltjes integral `∫ x(t+θ) dη(θ)` is discretized on the
//! simulation grid by [`DelayKernel::quadrature_weights`].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    /// Position `θ` in `[-τ, 0]`.
    pub location: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayKernel {
    tau: f64,
    atoms: Vec<Atom>,
    /// Values on `density.len()` equal cells partitioning `[-τ, 0]`,
    /// ordered from `-τ` upwards.
    density: Vec<f64>,
}

impl DelayKernel {
    /// Point mass at `θ = -τ`.
    pub fn discrete(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Argument(format!("delay must be >= 0, got {tau}")));
        }
        Ok(Self {
            tau,
            atoms: vec![Atom {
                location: -tau,
                mass: 1.0,
            }],
            density: Vec::new(),
        })
    }

    /// Constant density `1/τ` on `[-τ, 0]`.
    pub fn uniform(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Argument(format!(
                "uniform kernel needs τ > 0 (use a discrete kernel for τ = 0), got {tau}"
            )));
        }
        Ok(Self {
            tau,
            atoms: Vec::new(),
            density: vec![1.0 / tau],
        })
    }

    /// General kernel from atoms `(θ, mass)` and density cell values.
    /// Total mass must be one unless `renormalize` is set, in which case
    /// everything is rescaled to unit mass.
    pub fn mixture(atoms: &[(f64, f64)], density: &[f64], tau: f64, renormalize: bool) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Argument(format!("delay must be >= 0, got {tau}")));
        }
        if !density.is_empty() && tau == 0.0 {
            return Err(Error::Argument("a density needs τ > 0".into()));
        }
        let slack = 1e-12 * tau.max(1.0);
        let mut parsed = Vec::with_capacity(atoms.len());
        for &(location, mass) in atoms {
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::Argument(format!("atom mass must be >= 0, got {mass}")));
            }
            if !location.is_finite() || location < -tau - slack || location > slack {
                return Err(Error::Argument(format!(
                    "atom at {location} lies outside [-{tau}, 0]"
                )));
            }
            parsed.push(Atom {
                location: location.clamp(-tau, 0.0),
                mass,
            });
        }
        if let Some(v) = density.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Argument(format!("density value must be >= 0, got {v}")));
        }
        let mut kernel = Self {
            tau,
            atoms: parsed,
            density: density.to_vec(),
        };
        let mass = kernel.total_mass();
        if mass <= 0.0 {
            return Err(Error::Argument("kernel has zero total mass".into()));
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            if !renormalize {
                return Err(Error::Argument(format!(
                    "kernel mass is {mass}, expected 1 (set renormalize to rescale)"
                )));
            }
            for a in kernel.atoms.iter_mut() {
                a.mass /= mass;
            }
            for d in kernel.density.iter_mut() {
                *d /= mass;
            }
        }
        Ok(kernel)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn cell_width(&self) -> f64 {
        self.tau / self.density.len() as f64
    }

    /// Density pieces as `(left end, width, value)`.
    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let w = self.cell_width();
        self.density
            .iter()
            .enumerate()
            .map(move |(k, &rho)| (-self.tau + k as f64 * w, w, rho))
    }

    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let dens: f64 = self.pieces().map(|(_, w, rho)| rho * w).sum();
        atoms + dens
    }

    /// `τ̄ = -∫ θ dη(θ)`.
    pub fn mean_delay(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| -a.location * a.mass).sum();
        let dens: f64 = self
            .pieces()
            .map(|(a, w, rho)| {
                let b = a + w;
                -rho * (b * b - a * a) / 2.0
            })
            .sum();
        atoms + dens
    }

    /// `F(s) = ∫ e^{sθ} dη(θ)`.
    pub fn transform(&self, s: Complex64) -> Complex64 {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| a.mass * (s * a.location).exp())
            .sum();
        let dens: Complex64 = self
            .pieces()
            .map(|(a, w, rho)| rho * w * (s * a).exp() * exp_rel1(s * w))
            .sum();
        atoms + dens
    }

    /// `F'(s) = ∫ θ e^{sθ} dη(θ)`.
    pub fn transform_derivative(&self, s: Complex64) -> Complex64 {
        let atoms: Complex64 = self
            .atoms
            .iter()
            .map(|a| a.mass * a.location * (s * a.location).exp())
            .sum();
        let dens: Complex64 = self
            .pieces()
            .map(|(a, w, rho)| {
                let z = s * w;
                rho * (s * a).exp() * (a * w * exp_rel1(z) + w * w * exp_rel2(z))
            })
            .sum();
        atoms + dens
    }

    /// Discretizes the kernel on the history grid `θ_m = -m h`,
    /// `m = 0..=τ/h`.
    ///
    /// Atoms are split linearly between the two neighbouring nodes. The
    /// density mass of each grid cell is placed at its centroid and split
    /// the same way, which for a density that is constant on the cell is
    /// the trapezoid rule. Both preserve total mass and mean delay; the
    /// weights are finally rescaled to sum to one.
    pub fn quadrature_weights(&self, h: f64) -> Result<QuadratureRule> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Argument(format!("grid step must be positive, got {h}")));
        }
        let span = grid_span(self.tau, h)?;
        let mut weights = vec![0.0; span + 1];
        let mut place = |theta: f64, mass: f64| {
            let p = (-theta / h).clamp(0.0, span as f64);
            let lower = (p.floor() as usize).min(span);
            let frac = p - lower as f64;
            if lower == span || frac <= 1e-12 {
                weights[lower] += mass;
            } else if frac >= 1.0 - 1e-12 {
                weights[lower + 1] += mass;
            } else {
                weights[lower] += (1.0 - frac) * mass;
                weights[lower + 1] += frac * mass;
            }
        };
        for a in &self.atoms {
            place(a.location, a.mass);
        }
        if !self.density.is_empty() {
            // mass and first moment of the density in each grid cell
            // [-(c+1)h, -ch]
            let mut mass = vec![0.0; span];
            let mut moment = vec![0.0; span];
            for (a, w, rho) in self.pieces() {
                if rho == 0.0 {
                    continue;
                }
                let b = a + w;
                let first = ((-b / h).floor().max(0.0) as usize).min(span - 1);
                let last = ((-a / h).ceil().max(1.0) as usize).min(span);
                for c in first..last {
                    let lo = a.max(-((c + 1) as f64) * h);
                    let hi = b.min(-(c as f64) * h);
                    if hi > lo {
                        mass[c] += rho * (hi - lo);
                        moment[c] += rho * (hi * hi - lo * lo) / 2.0;
                    }
                }
            }
            for c in 0..span {
                if mass[c] > 0.0 {
                    let centroid = moment[c] / mass[c];
                    place(centroid.clamp(-((c + 1) as f64) * h, -(c as f64) * h), mass[c]);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Numerical("quadrature weights have zero mass".into()));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        let nonzero = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(m, &w)| (m, w))
            .collect();
        Ok(QuadratureRule {
            step: h,
            weights,
            nonzero,
        })
    }
}

/// Number of grid steps covering `[-τ, 0]`, requiring `h` to divide `τ`.
pub fn grid_span(tau: f64, h: f64) -> Result<usize> {
    if tau == 0.0 {
        return Ok(0);
    }
    let ratio = tau / h;
    let span = ratio.round();
    if span < 1.0 {
        return Err(Error::Argument(format!(
            "grid step {h} exceeds the maximum delay {tau}"
        )));
    }
    if (ratio - span).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::Argument(format!(
            "grid step {h} does not divide the maximum delay {tau}"
        )));
    }
    Ok(span as usize)
}

/// `(e^z - 1) / z`
fn exp_rel1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ z^k / (k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..30 {
            term = term * z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫_0^1 u e^{zu} du = (e^z (z - 1) + 1) / z²`
fn exp_rel2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ z^k / (k! (k+2))
        let mut fact = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 1..30 {
            fact = fact * z / k as f64;
            sum += fact / (k as f64 + 2.0);
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

/// Weights `u_m` on the nodes `θ_m = -m h` with `Σ u_m = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    step: f64,
    weights: Vec<f64>,
    nonzero: Vec<(usize, f64)>,
}

impl QuadratureRule {
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest node index `M = τ/h`.
    pub fn span(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(m, u_m)` for the nonzero weights, ascending in `m`.
    pub fn nonzero(&self) -> &[(usize, f64)] {
        &self.nonzero
    }

    /// Mean delay of the discretized kernel, `Σ u_m m h`.
    pub fn mean_delay(&self) -> f64 {
        self.nonzero
            .iter()
            .map(|&(m, u)| u * m as f64 * self.step)
            .sum()
    }

    /// `Σ u_m f(θ_m)`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nonzero
            .iter()
            .map(|&(m, u)| u * f(-(m as f64) * self.step))
            .sum()
    }
}
