//! Kernel-smoothed birth-death jumps between particles.
//!
//! Rates compare a kernel estimate of the ensemble density against the
//! target: particles sitting in over-populated regions get positive rates and
//! are replaced by copies of others, under-populated ones duplicate. Jumps are
//! resolved serially with [`ParticleTracker`] so that every particle dies at
//! most once per round.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langevin::{Ensemble, FisherPreconditioner};
use crate::space::SupportSpace;

/// Gaussian kernel `exp(−‖x − y‖²_𝓘 / 2h)`, summed over `±K` periods on
/// circular coordinates.
#[derive(Debug, Clone)]
pub struct SmoothingKernel {
    metric: FisherPreconditioner,
    bandwidth: f64,
    space: SupportSpace,
    shifts: Vec<Vec<f64>>,
}

impl SmoothingKernel {
    pub fn new(
        metric: FisherPreconditioner,
        bandwidth: f64,
        space: SupportSpace,
        wrap_truncation: usize,
    ) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::DegenerateBandwidth);
        }
        space.check_dim(metric.dim())?;
        let periodic: Vec<usize> = (0..space.dim()).filter(|&i| space.coord(i).is_periodic()).collect();
        let k = wrap_truncation as i64;
        let mut shifts = vec![vec![0.0; space.dim()]];
        for &axis in &periodic {
            let mut next = Vec::with_capacity(shifts.len() * (2 * wrap_truncation + 1));
            for s in &shifts {
                for m in -k..=k {
                    let mut t = s.clone();
                    t[axis] = TAU * m as f64;
                    next.push(t);
                }
            }
            shifts = next;
        }
        Ok(Self {
            metric,
            bandwidth,
            space,
            shifts,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn metric(&self) -> &FisherPreconditioner {
        &self.metric
    }

    /// `ln k(x, y)`.
    pub fn ln_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = x.len();
        let mut disp = vec![0.0; d];
        self.space.displacement_into(x, y, &mut disp);
        if self.shifts.len() == 1 {
            return -self.metric.quadratic_form(&disp) / (2.0 * self.bandwidth);
        }
        let mut shifted = vec![0.0; d];
        let mut terms = Vec::with_capacity(self.shifts.len());
        for s in &self.shifts {
            for k in 0..d {
                shifted[k] = disp[k] + s[k];
            }
            terms.push(-self.metric.quadratic_form(&shifted) / (2.0 * self.bandwidth));
        }
        log_sum_exp(&terms)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.ln_value(x, y).exp()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Median over pairs `i < j` of the squared `𝓘`-distance, with periodic
/// coordinates measured along the shortest arc.
pub fn median_bandwidth(ensemble: &Ensemble, metric: &FisherPreconditioner) -> Result<f64> {
    let n = ensemble.len();
    if n < 2 {
        return Err(Error::DegenerateBandwidth);
    }
    let d = ensemble.dim();
    let space = ensemble.space();
    let mut sq: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut disp = vec![0.0; d];
            let xi = ensemble.particle(i);
            (i + 1..n)
                .map(|j| {
                    space.displacement_into(xi, ensemble.particle(j), &mut disp);
                    metric.quadratic_form(&disp)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let h = median(&mut sq);
    if h > 0.0 {
        return Ok(h);
    }
    // more than half the pairs coincide; fall back to the distinct pairs
    let mut nonzero: Vec<f64> = sq.into_iter().filter(|&v| v > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(median(&mut nonzero))
}

fn median(v: &mut [f64]) -> f64 {
    let m = v.len();
    let (_, &mut upper, _) = v.select_nth_unstable_by(m / 2, f64::total_cmp);
    if m % 2 == 1 {
        upper
    } else {
        let lower = v[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// How the density-to-target ratio is discretized for an empirical measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateForm {
    /// `ln[(1/N) Σⱼ k(xᵢ, xⱼ) e^{V(xⱼ)}]`
    #[default]
    #[serde(rename = "k_rho_over_p")]
    KRhoOverP,
    /// `ln[(1/N) Σⱼ k(xᵢ, xⱼ)] + V(xᵢ)`
    #[serde(rename = "k_rho_times_invp")]
    KRhoTimesInvP,
}

/// Mean-centred rates `Λᵢ` for particles with energies `energies[i] = V(xᵢ)`.
pub fn compute_rates(
    ensemble: &Ensemble,
    energies: &[f64],
    kernel: &SmoothingKernel,
    form: RateForm,
) -> Result<Vec<f64>> {
    let n = ensemble.len();
    if energies.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: energies.len(),
        });
    }
    if let Some(i) = energies.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { particle: i });
    }
    let ln_n = (n as f64).ln();
    let mut raw: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = ensemble.particle(i);
            let terms: Vec<f64> = (0..n)
                .map(|j| {
                    let lk = kernel.ln_value(xi, ensemble.particle(j));
                    match form {
                        RateForm::KRhoOverP => lk + energies[j],
                        RateForm::KRhoTimesInvP => lk,
                    }
                })
                .collect();
            let s = log_sum_exp(&terms) - ln_n;
            match form {
                RateForm::KRhoOverP => s,
                RateForm::KRhoTimesInvP => s + energies[i],
            }
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    for r in &mut raw {
        *r -= mean;
    }
    Ok(raw)
}

/// `c = min(c_max, 2f / ⟨|Λ|⟩)`, or `c_max` when all rates vanish.
pub fn adapt_rate_scale(rates: &[f64], max_jump_fraction: f64, c_max: f64) -> f64 {
    let mad = rates.iter().map(|r| r.abs()).sum::<f64>() / rates.len() as f64;
    if mad > 0.0 {
        c_max.min(2.0 * max_jump_fraction / mad)
    } else {
        c_max
    }
}

/// Alive set over labels `0..N` with O(1) lookup, uniform choice and removal.
/// Alive labels occupy the prefix `particles[..n_alive]`, and `indices` is the
/// inverse permutation of `particles`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticleTracker {
    particles: Vec<usize>,
    indices: Vec<usize>,
    n_alive: usize,
}

impl ParticleTracker {
    pub fn new(n: usize) -> Self {
        Self {
            particles: (0..n).collect(),
            indices: (0..n).collect(),
            n_alive: n,
        }
    }

    pub fn particles(&self) -> &[usize] {
        &self.particles
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n_alive(&self) -> usize {
        self.n_alive
    }

    pub fn is_alive(&self, label: usize) -> bool {
        self.indices[label] < self.n_alive
    }

    pub fn choose_random_alive<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.n_alive == 0 {
            return Err(Error::EmptyTracker);
        }
        Ok(self.particles[rng.random_range(0..self.n_alive)])
    }

    /// Uniform draw among alive labels other than `label`, which must be
    /// alive. `None` if it is the only one left.
    pub fn choose_random_alive_except<R: Rng + ?Sized>(&self, rng: &mut R, label: usize) -> Option<usize> {
        assert!(self.is_alive(label), "label {label} is not alive");
        if self.n_alive < 2 {
            return None;
        }
        let skip = self.indices[label];
        let mut k = rng.random_range(0..self.n_alive - 1);
        if k >= skip {
            k += 1;
        }
        Some(self.particles[k])
    }

    /// Panics if `label` is already dead.
    pub fn kill(&mut self, label: usize) {
        assert!(self.is_alive(label), "kill on dead label {label}");
        let pos = self.indices[label];
        let last = self.n_alive - 1;
        let other = self.particles[last];
        self.particles.swap(pos, last);
        self.indices[other] = pos;
        self.indices[label] = last;
        self.n_alive -= 1;
    }
}

/// Outcome of one pass of jump resolution. `jumps[i]` is the particle whose
/// old position particle `i` takes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpPlan {
    pub jumps: Vec<usize>,
    pub accepted: usize,
    pub killed: usize,
}

/// Resolves jumps for given uniforms `r` and visiting `order`. Particle `i`
/// is accepted when `r[i] < 1 − exp(−|cΛᵢ|γ)`; accepted particles are visited
/// in `order`, skipping ones that already died.
pub fn plan_jumps<R: Rng + ?Sized>(
    rates: &[f64],
    c: f64,
    gamma: f64,
    r: &[f64],
    order: &[usize],
    rng: &mut R,
) -> JumpPlan {
    let n = rates.len();
    let mut tracker = ParticleTracker::new(n);
    let mut jumps: Vec<usize> = (0..n).collect();
    let mut accepted = 0;
    let mut killed = 0;
    for &i in order {
        let p = -(-(c * rates[i]).abs() * gamma).exp_m1();
        if !(r[i] < p) {
            continue;
        }
        accepted += 1;
        if !tracker.is_alive(i) {
            continue;
        }
        let Some(j) = tracker.choose_random_alive_except(rng, i) else {
            continue;
        };
        if rates[i] > 0.0 {
            jumps[i] = j;
            tracker.kill(i);
        } else {
            jumps[j] = i;
            tracker.kill(j);
        }
        killed += 1;
    }
    JumpPlan {
        jumps,
        accepted,
        killed,
    }
}

/// Draws the uniforms and a random visiting order, resolves the jumps and
/// teleports the particles.
pub fn bd_jump<R: Rng + ?Sized>(
    ensemble: &mut Ensemble,
    rates: &[f64],
    c: f64,
    gamma: f64,
    rng: &mut R,
) -> JumpPlan {
    let n = rates.len();
    assert_eq!(n, ensemble.len());
    let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let plan = plan_jumps(rates, c, gamma, &r, &order, rng);
    if plan.killed > 0 {
        ensemble.reindex(&plan.jumps);
    }
    plan
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthDeathConfig {
    pub bd_stride: usize,
    pub max_jump_fraction: f64,
    /// Rate-time increment per round; `None` means `0.01·τ`.
    pub gamma: Option<f64>,
    pub c_max: f64,
    pub wrap_truncation: usize,
    pub rate_form: RateForm,
    /// Fixed bandwidth replacing the median heuristic.
    pub bandwidth: Option<f64>,
}

impl Default for BirthDeathConfig {
    fn default() -> Self {
        Self {
            bd_stride: 50,
            max_jump_fraction: 0.05,
            gamma: None,
            c_max: 1.0,
            wrap_truncation: 3,
            rate_form: RateForm::KRhoOverP,
            bandwidth: None,
        }
    }
}

impl BirthDeathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bd_stride == 0 {
            return Err(Error::Config("bd_stride must be positive".into()));
        }
        if !(self.max_jump_fraction > 0.0 && self.max_jump_fraction < 1.0) {
            return Err(Error::Config("max_jump_fraction must lie in (0, 1)".into()));
        }
        if matches!(self.gamma, Some(g) if !(g > 0.0)) {
            return Err(Error::Config("gamma must be positive".into()));
        }
        if !(self.c_max > 0.0) {
            return Err(Error::Config("c_max must be positive".into()));
        }
        if matches!(self.bandwidth, Some(h) if !(h > 0.0)) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundReport {
    pub accepted: usize,
    pub jumps: usize,
    pub scale: f64,
    pub bandwidth: f64,
    pub mean_abs_rate: f64,
}

/// Kernel from `metric` and the median (or fixed) bandwidth, rates, scale,
/// jumps. `energies` are the potential values at the current positions.
pub fn bd_round<R: Rng + ?Sized>(
    ensemble: &mut Ensemble,
    energies: &[f64],
    metric: &FisherPreconditioner,
    config: &BirthDeathConfig,
    gamma: f64,
    rng: &mut R,
) -> Result<RoundReport> {
    let h = match config.bandwidth {
        Some(h) => h,
        None => median_bandwidth(ensemble, metric)?,
    };
    let kernel = SmoothingKernel::new(metric.clone(), h, ensemble.space().clone(), config.wrap_truncation)?;
    let rates = compute_rates(ensemble, energies, &kernel, config.rate_form)?;
    let c = adapt_rate_scale(&rates, config.max_jump_fraction, config.c_max);
    let mean_abs_rate = rates.iter().map(|r| r.abs()).sum::<f64>() / rates.len() as f64;
    let plan = bd_jump(ensemble, &rates, c, gamma, rng);
    Ok(RoundReport {
        accepted: plan.accepted,
        jumps: plan.killed,
        scale: c,
        bandwidth: h,
        mean_abs_rate,
    })
}
