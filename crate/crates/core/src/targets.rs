//! Potentials `V = −ln p` (up to a constant) and direct samplers.

use std::f64::consts::TAU;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A differentiable potential on the support space of a run. Coordinates are
/// the original (pulled-back) ones.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇V(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Targets that can be sampled exactly, used as ground truth for diagnostics.
pub trait DirectSampler {
    fn sample_into(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    /// `count` i.i.d. draws stored row-major.
    fn sample(&self, count: usize, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut out = vec![0.0; count * dim];
        for row in out.chunks_exact_mut(dim) {
            self.sample_into(rng, row);
        }
        out
    }
}

fn normal(rng: &mut dyn RngCore) -> f64 {
    StandardNormal.sample(rng)
}

/// `V ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Flat {
    dim: usize,
}

impl Flat {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Potential for Flat {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Axis-aligned Gaussian `V(x) = ½ Σ pᵢ (xᵢ − mᵢ)²` with precisions `pᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub precision: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, precision: Vec<f64>) -> Result<Self> {
        if mean.len() != precision.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: precision.len(),
            });
        }
        if precision.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Config("precisions must be positive".into()));
        }
        Ok(Self { mean, precision })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            precision: vec![1.0; dim],
        }
    }
}

impl Potential for DiagonalGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.precision)
            .map(|((xi, m), p)| 0.5 * p * (xi - m) * (xi - m))
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (((g, xi), m), p) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.precision) {
            *g = p * (xi - m);
        }
    }
}

impl DirectSampler for DiagonalGaussian {
    fn sample_into(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for ((o, m), p) in out.iter_mut().zip(&self.mean).zip(&self.precision) {
            *o = m + normal(rng) / p.sqrt();
        }
    }
}

/// Hybrid Rosenbrock density
///
/// ```text
/// V(x) = a (x₁ − μ)² + Σⱼ Σᵢ bⱼᵢ (xⱼᵢ − xⱼ₍ᵢ₋₁₎²)²,   xⱼ₁ ≡ x₁
/// ```
///
/// with `n₂` blocks of `n₁ − 1` chained coordinates each. The state vector is
/// `[x₁, x₁,₂ … x₁,ₙ₁, x₂,₂ … x₂,ₙ₁, …]`, of length `(n₁ − 1) n₂ + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridRosenbrock {
    a: f64,
    mu: f64,
    n1: usize,
    n2: usize,
    /// `b[j][i − 2]` for block `j` and chain position `i ∈ 2..=n₁`.
    b: Vec<Vec<f64>>,
}

impl HybridRosenbrock {
    pub fn new(a: f64, b: Vec<Vec<f64>>, mu: f64, n1: usize, n2: usize) -> Result<Self> {
        if n1 < 2 || n2 < 1 {
            return Err(Error::Config("hybrid Rosenbrock needs n1 >= 2 and n2 >= 1".into()));
        }
        if !(a > 0.0) {
            return Err(Error::Config("hybrid Rosenbrock needs a > 0".into()));
        }
        if b.len() != n2 || b.iter().any(|row| row.len() != n1 - 1) {
            return Err(Error::Config(format!(
                "hybrid Rosenbrock needs a {n2}×{} coefficient table",
                n1 - 1
            )));
        }
        if b.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("hybrid Rosenbrock needs every b > 0".into()));
        }
        Ok(Self { a, mu, n1, n2, b })
    }

    pub fn uniform(a: f64, b: f64, mu: f64, n1: usize, n2: usize) -> Result<Self> {
        Self::new(a, vec![vec![b; n1.saturating_sub(1)]; n2], mu, n1, n2)
    }

    /// `a = 30`, `b = 20`, `μ = 1`, `n₁ = 4`, `n₂ = 3`: ten dimensions.
    pub fn benchmark() -> Self {
        Self::uniform(30.0, 20.0, 1.0, 4, 3).expect("valid parameters")
    }

    pub fn dimension(&self) -> usize {
        (self.n1 - 1) * self.n2 + 1
    }

    fn index(&self, j: usize, i: usize) -> usize {
        // i counts from 2 along the chain; i = 1 is the shared root
        if i == 1 {
            0
        } else {
            1 + j * (self.n1 - 1) + (i - 2)
        }
    }
}

impl Potential for HybridRosenbrock {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.a * (x[0] - self.mu).powi(2);
        for j in 0..self.n2 {
            for i in 2..=self.n1 {
                let prev = x[self.index(j, i - 1)];
                let r = x[self.index(j, i)] - prev * prev;
                v += self.b[j][i - 2] * r * r;
            }
        }
        v
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = 2.0 * self.a * (x[0] - self.mu);
        for j in 0..self.n2 {
            for i in 2..=self.n1 {
                let p = self.index(j, i - 1);
                let c = self.index(j, i);
                let r = x[c] - x[p] * x[p];
                let b = self.b[j][i - 2];
                out[c] += 2.0 * b * r;
                out[p] -= 4.0 * b * r * x[p];
            }
        }
    }
}

impl DirectSampler for HybridRosenbrock {
    fn sample_into(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.mu + normal(rng) / (2.0 * self.a).sqrt();
        for j in 0..self.n2 {
            for i in 2..=self.n1 {
                let prev = out[self.index(j, i - 1)];
                out[self.index(j, i)] = prev * prev + normal(rng) / (2.0 * self.b[j][i - 2]).sqrt();
            }
        }
    }
}

/// One ring of equally weighted isotropic components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub radius: f64,
    pub total_weight: f64,
    pub component_count: usize,
}

/// Isotropic Gaussian mixture in the plane with components arranged on
/// concentric rings at angles `2πk / count`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingMixture {
    sigma: f64,
    rings: Vec<Ring>,
    means: Vec<[f64; 2]>,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RingMixture {
    pub fn new(rings: Vec<Ring>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Config("component sigma must be positive".into()));
        }
        let total: f64 = rings.iter().map(|r| r.total_weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("ring weights sum to {total}, not 1")));
        }
        let mut means = Vec::new();
        let mut log_weights = Vec::new();
        for ring in &rings {
            if ring.component_count == 0 || !(ring.total_weight > 0.0) {
                return Err(Error::Config("rings need components and positive weight".into()));
            }
            let w = ring.total_weight / ring.component_count as f64;
            for k in 0..ring.component_count {
                let t = TAU * k as f64 / ring.component_count as f64;
                means.push([ring.radius * t.cos(), ring.radius * t.sin()]);
                log_weights.push(w.ln());
            }
        }
        let mut acc = 0.0;
        let cumulative = log_weights
            .iter()
            .map(|lw| {
                acc += lw.exp();
                acc
            })
            .collect();
        Ok(Self {
            sigma,
            rings,
            means,
            log_weights,
            cumulative,
        })
    }

    /// Six components at radius 3 carrying weight 0.1 and six at radius 6
    /// carrying 0.9, each with standard deviation `sigma`.
    pub fn two_ring(sigma: f64) -> Result<Self> {
        Self::new(
            vec![
                Ring {
                    radius: 3.0,
                    total_weight: 0.1,
                    component_count: 6,
                },
                Ring {
                    radius: 6.0,
                    total_weight: 0.9,
                    component_count: 6,
                },
            ],
            sigma,
        )
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn means(&self) -> &[[f64; 2]] {
        &self.means
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// Index of the component mean closest to `x`.
    pub fn nearest_component(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, m) in self.means.iter().enumerate() {
            let d = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    /// Per-component log terms `ln wₖ + ln N(x; μₖ, σ²I)` and their
    /// log-sum-exp.
    fn log_terms(&self, x: &[f64], terms: &mut Vec<f64>) -> f64 {
        let s2 = self.sigma * self.sigma;
        let norm = -(TAU * s2).ln();
        terms.clear();
        let mut max = f64::NEG_INFINITY;
        for (m, lw) in self.means.iter().zip(&self.log_weights) {
            let d2 = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
            let t = lw + norm - 0.5 * d2 / s2;
            max = max.max(t);
            terms.push(t);
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }
}

impl Potential for RingMixture {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut terms = Vec::with_capacity(self.means.len());
        -self.log_terms(x, &mut terms)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut terms = Vec::with_capacity(self.means.len());
        let lse = self.log_terms(x, &mut terms);
        let s2 = self.sigma * self.sigma;
        out[0] = 0.0;
        out[1] = 0.0;
        for (m, t) in self.means.iter().zip(&terms) {
            let r = (t - lse).exp();
            out[0] += r * (x[0] - m[0]) / s2;
            out[1] += r * (x[1] - m[1]) / s2;
        }
    }
}

impl DirectSampler for RingMixture {
    fn sample_into(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.means.len() - 1);
        out[0] = self.means[k][0] + self.sigma * normal(rng);
        out[1] = self.means[k][1] + self.sigma * normal(rng);
    }
}
