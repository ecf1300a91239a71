//! Euler–Maruyama steps for an ensemble of Langevin particles.
//!
//! All step functions take the drift gradients and a matrix of standard
//! normal draws `ξ` (one row per particle) so that the update itself is a pure
//! function of its inputs. With a preconditioner `𝓘 = UᵀU` the drift becomes
//! `𝓘⁻¹∇V` and the noise `U⁻¹ξ ~ N(0, 𝓘⁻¹)`, both via triangular solves on
//! the cached factor.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseStream, Purpose};
use crate::space::SupportSpace;

/// `N` particles in `d` working coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    positions: Vec<f64>,
    n: usize,
    space: SupportSpace,
}

impl Ensemble {
    pub fn new(positions: Vec<f64>, space: SupportSpace) -> Result<Self> {
        let d = space.dim();
        if positions.is_empty() || positions.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: positions.len(),
            });
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { particle: i / d });
        }
        let n = positions.len() / d;
        let mut e = Self { positions, n, space };
        e.wrap();
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> &SupportSpace {
        &self.space
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim())
    }

    /// Replaces every particle by the one it jumps to: `xᵢ ← x_{jumps[i]}`.
    pub fn reindex(&mut self, jumps: &[usize]) {
        assert_eq!(jumps.len(), self.n);
        let d = self.dim();
        let old = self.positions.clone();
        for (i, &j) in jumps.iter().enumerate() {
            self.positions[i * d..(i + 1) * d].copy_from_slice(&old[j * d..(j + 1) * d]);
        }
    }

    fn wrap(&mut self) {
        if self.space.has_periodic() {
            let d = self.dim();
            for row in self.positions.chunks_exact_mut(d) {
                self.space.wrap_in_place(row);
            }
        }
    }

    /// Standard normal draws for every particle at `iteration`, keyed so the
    /// result does not depend on evaluation order.
    pub fn diffusion_noise(&self, stream: &NoiseStream, iteration: u64) -> Vec<f64> {
        let d = self.dim();
        let mut xi = vec![0.0; self.positions.len()];
        xi.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            stream.fill_normal(Purpose::Diffusion, iteration, i as u64, row);
        });
        xi
    }
}

/// Damped ensemble Fisher matrix `𝓘 = (1/N) Σ gₙgₙᵀ + λI` with its upper
/// Cholesky factor `U` (`𝓘 = UᵀU`).
#[derive(Debug, Clone, PartialEq)]
pub struct FisherPreconditioner {
    matrix: DMatrix<f64>,
    upper: DMatrix<f64>,
    damping: f64,
}

impl FisherPreconditioner {
    /// Estimates `𝓘` from per-particle gradients stored row-major.
    pub fn estimate(gradients: &[f64], dim: usize, damping: f64) -> Result<Self> {
        if !(damping > 0.0) {
            return Err(Error::Config("Fisher damping must be positive".into()));
        }
        if gradients.is_empty() || gradients.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: gradients.len(),
            });
        }
        if let Some(i) = gradients.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { particle: i / dim });
        }
        let n = gradients.len() / dim;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for g in gradients.chunks_exact(dim) {
            for r in 0..dim {
                for c in r..dim {
                    m[(r, c)] += g[r] * g[c];
                }
            }
        }
        for r in 0..dim {
            for c in r..dim {
                let v = m[(r, c)] / n as f64;
                m[(r, c)] = v;
                m[(c, r)] = v;
            }
            m[(r, r)] += damping;
        }
        Self::from_matrix(m, damping)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            upper: DMatrix::identity(dim, dim),
            damping: 0.0,
        }
    }

    /// Factors an explicit symmetric positive definite matrix.
    pub fn from_matrix(matrix: DMatrix<f64>, damping: f64) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;
        let upper = chol.l().transpose();
        if (0..upper.nrows()).any(|i| !(upper[(i, i)] > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            matrix,
            upper,
            damping,
        })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.upper
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Solves `U z = b` in place.
    fn solve_upper(&self, b: &mut [f64]) {
        let d = self.dim();
        for i in (0..d).rev() {
            let mut s = b[i];
            for j in i + 1..d {
                s -= self.upper[(i, j)] * b[j];
            }
            b[i] = s / self.upper[(i, i)];
        }
    }

    /// Solves `Uᵀ z = b` in place.
    fn solve_upper_transposed(&self, b: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut s = b[i];
            for j in 0..i {
                s -= self.upper[(j, i)] * b[j];
            }
            b[i] = s / self.upper[(i, i)];
        }
    }

    /// `𝓘⁻¹ g` in place.
    pub fn solve_in_place(&self, g: &mut [f64]) {
        self.solve_upper_transposed(g);
        self.solve_upper(g);
    }

    /// Maps a standard normal draw to `U⁻¹ξ ~ N(0, 𝓘⁻¹)` in place.
    pub fn precondition_noise(&self, xi: &mut [f64]) {
        self.solve_upper(xi);
    }

    /// Draws one `N(0, 𝓘⁻¹)` vector.
    pub fn sample_noise<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let mut xi: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        self.precondition_noise(&mut xi);
        xi
    }

    /// `vᵀ 𝓘 v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for r in 0..d {
            let mut row = 0.0;
            for c in 0..d {
                row += self.matrix[(r, c)] * v[c];
            }
            s += v[r] * row;
        }
        s
    }
}

/// Linear inverse-temperature ramp from `beta_min` at iteration 0 to 1 at
/// `total_iterations`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub beta_min: f64,
    pub total_iterations: usize,
}

impl AnnealingSchedule {
    pub fn linear(beta_min: f64, total_iterations: usize) -> Result<Self> {
        if !(beta_min > 0.0 && beta_min < 1.0) {
            return Err(Error::Config("beta_min must lie in (0, 1)".into()));
        }
        if total_iterations == 0 {
            return Err(Error::Config("annealing needs at least one iteration".into()));
        }
        Ok(Self {
            beta_min,
            total_iterations,
        })
    }

    pub fn beta_at(&self, iteration: usize) -> f64 {
        if iteration >= self.total_iterations {
            return 1.0;
        }
        let t = iteration as f64 / self.total_iterations as f64;
        self.beta_min + (1.0 - self.beta_min) * t
    }
}

/// `x ← x − τ∇V + √(2τ) ξ`.
pub fn ula_step(ensemble: &mut Ensemble, gradients: &[f64], tau: f64, noise: &[f64]) -> Result<()> {
    annealed_step(ensemble, gradients, None, tau, 1.0, noise)
}

/// `x ← x − τ𝓘⁻¹∇V + √(2τ) U⁻¹ξ`.
pub fn preconditioned_step(
    ensemble: &mut Ensemble,
    gradients: &[f64],
    fisher: &FisherPreconditioner,
    tau: f64,
    noise: &[f64],
) -> Result<()> {
    annealed_step(ensemble, gradients, Some(fisher), tau, 1.0, noise)
}

/// The general step: `x ← x − τA∇ + √(2τ/β) A^{1/2}ξ` with `A = 𝓘⁻¹` when a
/// preconditioner is given and the identity otherwise. `gradients` must
/// already be the temperature-`β` drift (base gradient at full strength,
/// confinement scaled by `1/β`). Periodic coordinates are wrapped afterwards.
pub fn annealed_step(
    ensemble: &mut Ensemble,
    gradients: &[f64],
    fisher: Option<&FisherPreconditioner>,
    tau: f64,
    beta: f64,
    noise: &[f64],
) -> Result<()> {
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("tau must be nonnegative, got {tau}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Config(format!("beta must lie in (0, 1], got {beta}")));
    }
    let d = ensemble.dim();
    let len = ensemble.positions.len();
    if gradients.len() != len || noise.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: gradients.len().min(noise.len()),
        });
    }
    if let Some(f) = fisher {
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.dim(),
            });
        }
    }
    let scale = (2.0 * tau / beta).sqrt();
    let space = &ensemble.space;
    let bad = ensemble
        .positions
        .par_chunks_mut(d)
        .zip(gradients.par_chunks(d))
        .zip(noise.par_chunks(d))
        .enumerate()
        .filter_map(|(i, ((x, g), xi))| {
            let mut drift = g.to_vec();
            let mut eta = xi.to_vec();
            if let Some(f) = fisher {
                f.solve_in_place(&mut drift);
                f.precondition_noise(&mut eta);
            }
            for k in 0..d {
                x[k] = x[k] - tau * drift[k] + scale * eta[k];
            }
            space.wrap_in_place(x);
            x.iter().any(|v| !v.is_finite()).then_some(i)
        })
        .min();
    match bad {
        Some(particle) => Err(Error::NonFinite { particle }),
        None => Ok(()),
    }
}
