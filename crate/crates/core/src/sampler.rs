//! Run configuration and the main sampling loop.
//!
//! Particles live in dual coordinates for the whole run. Each iteration
//! evaluates drift gradients in parallel, optionally refreshes the Fisher
//! preconditioner, takes one (annealed, preconditioned) step and every
//! `bd_stride` iterations a birth-death round. Samples are pulled back to the
//! original support only for diagnostics and output.

use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::birth_death::{bd_round, BirthDeathConfig, RateForm, RoundReport};
use crate::diagnostics::{energy_statistic, ConvergenceTrace, TraceRow};
use crate::error::{Error, Result};
use crate::langevin::{annealed_step, AnnealingSchedule, Ensemble, FisherPreconditioner};
use crate::noise::{NoiseStream, Purpose};
use crate::reparam::{Family, Reparameterization};
use crate::space::{Coord, SupportSpace};
use crate::targets::{DiagonalGaussian, DirectSampler, Flat, HybridRosenbrock, Potential, Ring, RingMixture};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    HybridRosenbrock {
        #[serde(default = "default_hrd_a")]
        a: f64,
        #[serde(default = "default_hrd_b")]
        b: f64,
        #[serde(default = "default_hrd_mu")]
        mu: f64,
        #[serde(default = "default_hrd_n1")]
        n1: usize,
        #[serde(default = "default_hrd_n2")]
        n2: usize,
    },
    TwoRing {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    RingMixture {
        rings: Vec<Ring>,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        precision: Vec<f64>,
    },
    Flat {
        dim: usize,
    },
}

fn default_hrd_a() -> f64 {
    30.0
}
fn default_hrd_b() -> f64 {
    20.0
}
fn default_hrd_mu() -> f64 {
    1.0
}
fn default_hrd_n1() -> usize {
    4
}
fn default_hrd_n2() -> usize {
    3
}
fn default_sigma() -> f64 {
    0.5
}

/// A constructed target with its optional exact sampler.
#[derive(Debug, Clone)]
pub enum Target {
    HybridRosenbrock(HybridRosenbrock),
    Rings(RingMixture),
    Gaussian(DiagonalGaussian),
    Flat(Flat),
}

impl TargetSpec {
    pub fn build(&self) -> Result<Target> {
        Ok(match self {
            TargetSpec::HybridRosenbrock { a, b, mu, n1, n2 } => {
                Target::HybridRosenbrock(HybridRosenbrock::uniform(*a, *b, *mu, *n1, *n2)?)
            }
            TargetSpec::TwoRing { sigma } => Target::Rings(RingMixture::two_ring(*sigma)?),
            TargetSpec::RingMixture { rings, sigma } => Target::Rings(RingMixture::new(rings.clone(), *sigma)?),
            TargetSpec::Gaussian { mean, precision } => {
                Target::Gaussian(DiagonalGaussian::new(mean.clone(), precision.clone())?)
            }
            TargetSpec::Flat { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("flat target needs dim >= 1".into()));
                }
                Target::Flat(Flat::new(*dim))
            }
        })
    }
}

impl Target {
    pub fn potential(&self) -> &dyn Potential {
        match self {
            Target::HybridRosenbrock(t) => t,
            Target::Rings(t) => t,
            Target::Gaussian(t) => t,
            Target::Flat(t) => t,
        }
    }

    pub fn oracle(&self) -> Option<&dyn DirectSampler> {
        match self {
            Target::HybridRosenbrock(t) => Some(t),
            Target::Rings(t) => Some(t),
            Target::Gaussian(t) => Some(t),
            Target::Flat(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.potential().dim()
    }
}

/// Initial particle distribution in the original coordinates. Draws outside
/// the support are redrawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Uniform { lower: f64, upper: f64 },
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        std: f64,
    },
    /// Explicit cloud with exactly `n_particles` rows.
    Points { points: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Gaussian { mean: 0.0, std: 1.0 }
    }
}

/// Accepts `true`/`false` or `"on"`/`"off"`.
fn on_off<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Word(String),
    }
    match Flag::deserialize(d)? {
        Flag::Bool(b) => Ok(b),
        Flag::Word(w) => match w.as_str() {
            "on" => Ok(true),
            "off" => Ok(false),
            other => Err(serde::de::Error::custom(format!("expected \"on\" or \"off\", got \"{other}\""))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: TargetSpec,
    /// Defaults to an unconstrained space of the target's dimension.
    #[serde(default)]
    pub space: Option<SupportSpace>,
    #[serde(default)]
    pub reparam: Family,
    pub n_particles: usize,
    pub iterations: usize,
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitSpec,

    #[serde(default, deserialize_with = "on_off")]
    pub precondition: bool,
    #[serde(default = "default_fisher_stride")]
    pub fisher_stride: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,

    #[serde(default, deserialize_with = "on_off")]
    pub anneal: bool,
    #[serde(default = "default_beta_min")]
    pub beta_min: f64,

    #[serde(default, deserialize_with = "on_off")]
    pub bd: bool,
    #[serde(default = "default_bd_stride")]
    pub bd_stride: usize,
    #[serde(default = "default_max_jump_fraction")]
    pub max_jump_fraction: f64,
    /// Defaults to `0.01·tau`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_c_max")]
    pub c_max: f64,
    #[serde(default = "default_wrap_truncation")]
    pub wrap_truncation: usize,
    #[serde(default)]
    pub rate_form: RateForm,
    /// Fixed kernel bandwidth; disables the median heuristic.
    #[serde(default)]
    pub bandwidth: Option<f64>,

    #[serde(default = "default_diag_stride")]
    pub diag_stride: usize,
    /// Oracle draws used as the reference sample; 0 disables the ε-statistic.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_fisher_stride() -> usize {
    10
}
fn default_lambda() -> f64 {
    1e-3
}
fn default_beta_min() -> f64 {
    1e-5
}
fn default_bd_stride() -> usize {
    BirthDeathConfig::default().bd_stride
}
fn default_max_jump_fraction() -> f64 {
    BirthDeathConfig::default().max_jump_fraction
}
fn default_c_max() -> f64 {
    BirthDeathConfig::default().c_max
}
fn default_wrap_truncation() -> usize {
    BirthDeathConfig::default().wrap_truncation
}
fn default_diag_stride() -> usize {
    100
}
fn default_reference_samples() -> usize {
    2000
}

impl RunConfig {
    /// A config with every optional key at its default.
    pub fn new(target: TargetSpec, n_particles: usize, iterations: usize, tau: f64) -> Self {
        Self {
            target,
            space: None,
            reparam: Family::default(),
            n_particles,
            iterations,
            tau,
            seed: 0,
            init: InitSpec::default(),
            precondition: false,
            fisher_stride: default_fisher_stride(),
            lambda: default_lambda(),
            anneal: false,
            beta_min: default_beta_min(),
            bd: false,
            bd_stride: default_bd_stride(),
            max_jump_fraction: default_max_jump_fraction(),
            gamma: None,
            c_max: default_c_max(),
            wrap_truncation: default_wrap_truncation(),
            rate_form: RateForm::default(),
            bandwidth: None,
            diag_stride: default_diag_stride(),
            reference_samples: default_reference_samples(),
            threads: None,
        }
    }

    pub fn bd_config(&self) -> BirthDeathConfig {
        BirthDeathConfig {
            bd_stride: self.bd_stride,
            max_jump_fraction: self.max_jump_fraction,
            gamma: self.gamma,
            c_max: self.c_max,
            wrap_truncation: self.wrap_truncation,
            rate_form: self.rate_form,
            bandwidth: self.bandwidth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.n_particles < 2 {
            return fail("n_particles must be at least 2");
        }
        if self.iterations == 0 {
            return fail("iterations must be positive");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail("tau must be positive and finite");
        }
        if self.fisher_stride == 0 {
            return fail("fisher_stride must be positive");
        }
        if !(self.lambda > 0.0) {
            return fail("lambda must be positive");
        }
        if self.anneal && !(self.beta_min > 0.0 && self.beta_min < 1.0) {
            return fail("beta_min must lie in (0, 1)");
        }
        if self.diag_stride == 0 {
            return fail("diag_stride must be positive");
        }
        if self.threads == Some(0) {
            return fail("threads must be positive");
        }
        if self.bd {
            self.bd_config().validate()?;
            if self.bd_stride > self.iterations {
                return fail("bd_stride must not exceed iterations");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub gradient_evaluations: u64,
    pub potential_evaluations: u64,
    pub bd_rounds: u64,
    pub total_jumps: u64,
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    /// Final particles in the original coordinates, row-major.
    pub samples: Vec<f64>,
    pub dim: usize,
    pub trace: ConvergenceTrace,
    pub rounds: Vec<RoundReport>,
    pub counters: Counters,
    pub wall_time: Duration,
}

impl SampleRun {
    pub fn n_particles(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn final_epsilon(&self) -> Option<f64> {
        self.trace.last().map(|r| r.epsilon_stat).filter(|e| e.is_finite())
    }
}

fn dual_space(space: &SupportSpace) -> SupportSpace {
    let coords = space
        .coords()
        .iter()
        .map(|c| match c {
            Coord::Bounded { .. } => Coord::Real,
            other => *other,
        })
        .collect();
    SupportSpace::new(coords).expect("dual of a valid space is valid")
}

fn inside(space: &SupportSpace, x: &[f64]) -> bool {
    x.iter().zip(space.coords()).all(|(&v, c)| {
        v.is_finite()
            && match c.bounds() {
                Some((lo, hi)) => lo < v && v < hi,
                None => true,
            }
    })
}

const MAX_INIT_ATTEMPTS: u64 = 10_000;

fn initial_points(config: &RunConfig, space: &SupportSpace, stream: &NoiseStream) -> Result<Vec<f64>> {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    let d = space.dim();
    let n = config.n_particles;
    if let InitSpec::Points { points } = &config.init {
        if points.len() != n {
            return Err(Error::Config(format!(
                "init.points has {} rows but n_particles is {n}",
                points.len()
            )));
        }
        let mut out = Vec::with_capacity(n * d);
        for (i, p) in points.iter().enumerate() {
            space.check_dim(p.len())?;
            if !inside(space, p) {
                return Err(Error::Config(format!("init.points row {i} lies outside the support")));
            }
            out.extend_from_slice(p);
        }
        return Ok(out);
    }
    if let InitSpec::Uniform { lower, upper } = config.init {
        if !(lower < upper && lower.is_finite() && upper.is_finite()) {
            return Err(Error::Config("init.lower must be below init.upper".into()));
        }
    }
    if let InitSpec::Gaussian { std, .. } = config.init {
        if !(std > 0.0) {
            return Err(Error::Config("init.std must be positive".into()));
        }
    }
    let mut out = vec![0.0; n * d];
    for (i, row) in out.chunks_exact_mut(d).enumerate() {
        let mut attempt = 0;
        loop {
            let mut rng = stream.rng(Purpose::Init, attempt, i as u64);
            for v in row.iter_mut() {
                *v = match config.init {
                    InitSpec::Uniform { lower, upper } => rng.random_range(lower..upper),
                    InitSpec::Gaussian { mean, std } => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean + std * z
                    }
                    InitSpec::Points { .. } => unreachable!(),
                };
            }
            if inside(space, row) {
                break;
            }
            attempt += 1;
            if attempt >= MAX_INIT_ATTEMPTS {
                return Err(Error::Config("init distribution almost never lands inside the support".into()));
            }
        }
    }
    Ok(out)
}

fn diverged(iteration: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { particle } => Error::Diverged { iteration, particle },
        other => other,
    }
}

/// Executes a run, using a dedicated pool when `threads` is set.
pub fn run(config: &RunConfig) -> Result<SampleRun> {
    config.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<SampleRun> {
    let started = Instant::now();
    let target = config.target.build()?;
    let potential = target.potential();
    let space = match &config.space {
        Some(s) => s.clone(),
        None => SupportSpace::euclidean(target.dim())?,
    };
    space.check_dim(target.dim()).map_err(|_| {
        Error::Config(format!(
            "space has {} coordinates but the target has dimension {}",
            space.dim(),
            target.dim()
        ))
    })?;
    let d = space.dim();
    let n = config.n_particles;
    let reparam = Reparameterization::new(config.reparam, space.clone());
    let stream = NoiseStream::new(config.seed);

    let x0 = initial_points(config, &space, &stream)?;
    let mut y0 = Vec::with_capacity(n * d);
    for row in x0.chunks_exact(d) {
        y0.extend(reparam.push_point(row)?);
    }
    let mut ensemble = Ensemble::new(y0, dual_space(&space))?;

    let reference = match target.oracle() {
        Some(oracle) if config.reference_samples >= 2 => {
            let mut rng: ChaCha8Rng = stream.rng(Purpose::Reference, 0, 0);
            Some(oracle.sample(config.reference_samples, d, &mut rng))
        }
        _ => None,
    };

    let schedule = if config.anneal {
        Some(AnnealingSchedule::linear(config.beta_min, config.iterations)?)
    } else {
        None
    };
    let beta_at = |l: usize| schedule.map_or(1.0, |s| s.beta_at(l));
    let bd_config = config.bd_config();
    let gamma = bd_config.gamma.unwrap_or(0.01 * config.tau);

    let pull_all = |ens: &Ensemble| -> Vec<f64> {
        let mut x = vec![0.0; n * d];
        x.par_chunks_mut(d).zip(ens.positions().par_chunks(d)).for_each(|(xr, yr)| {
            reparam.pull_into(yr, xr);
            space.wrap_in_place(xr);
        });
        x
    };
    let epsilon = |ens: &Ensemble| -> Result<f64> {
        match &reference {
            Some(r) => energy_statistic(&pull_all(ens), r, d),
            None => Ok(f64::NAN),
        }
    };

    let mut trace = ConvergenceTrace::new();
    let mut counters = Counters::default();
    let mut rounds = Vec::new();
    let mut jumps_since_row = 0usize;
    let mut last_bandwidth = 0.0;
    trace.push(TraceRow {
        iteration: 0,
        epsilon_stat: epsilon(&ensemble)?,
        beta: beta_at(0),
        jump_count: 0,
        bandwidth: 0.0,
    });

    let mut gradients = vec![0.0; n * d];
    let mut fisher: Option<FisherPreconditioner> = None;
    for l in 1..=config.iterations {
        let beta = beta_at(l);
        gradients
            .par_chunks_mut(d)
            .zip(ensemble.positions().par_chunks(d))
            .for_each_init(
                || vec![0.0; d],
                |scratch, (g, y)| reparam.annealed_gradient_into(potential, y, beta, scratch, g),
            );
        counters.gradient_evaluations += n as u64;
        if let Some(i) = gradients.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: l,
                particle: i / d,
            });
        }
        if config.precondition && (l - 1) % config.fisher_stride == 0 {
            fisher = Some(FisherPreconditioner::estimate(&gradients, d, config.lambda).map_err(|e| diverged(l, e))?);
        }
        let noise = ensemble.diffusion_noise(&stream, l as u64);
        let pre = if config.precondition { fisher.as_ref() } else { None };
        annealed_step(&mut ensemble, &gradients, pre, config.tau, beta, &noise).map_err(|e| diverged(l, e))?;

        if config.bd && l % bd_config.bd_stride == 0 {
            let energies: Vec<f64> = ensemble
                .positions()
                .par_chunks(d)
                .map_init(
                    || vec![0.0; d],
                    |scratch, y| reparam.heated_potential(potential, y, beta, scratch),
                )
                .collect();
            counters.potential_evaluations += n as u64;
            // kernel metric from the gradients of this iteration, whether or
            // not the dynamics are preconditioned
            let metric = match pre {
                Some(f) => f.clone(),
                None => FisherPreconditioner::estimate(&gradients, d, config.lambda).map_err(|e| diverged(l, e))?,
            };
            let mut rng = stream.rng(Purpose::BirthDeath, l as u64, 0);
            let report = bd_round(&mut ensemble, &energies, &metric, &bd_config, gamma, &mut rng)
                .map_err(|e| diverged(l, e))?;
            counters.bd_rounds += 1;
            counters.total_jumps += report.jumps as u64;
            jumps_since_row += report.jumps;
            last_bandwidth = report.bandwidth;
            rounds.push(report);
        }

        if l % config.diag_stride == 0 || l == config.iterations {
            trace.push(TraceRow {
                iteration: l,
                epsilon_stat: epsilon(&ensemble)?,
                beta,
                jump_count: jumps_since_row,
                bandwidth: last_bandwidth,
            });
            jumps_since_row = 0;
        }
    }

    Ok(SampleRun {
        samples: pull_all(&ensemble),
        dim: d,
        trace,
        rounds,
        counters,
        wall_time: started.elapsed(),
    })
}

/// `count` oracle draws for `target`, row-major.
pub fn oracle_samples(target: &TargetSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    let built = target.build()?;
    let oracle = built
        .oracle()
        .ok_or_else(|| Error::NoOracle(format!("{target:?}")))?;
    let mut rng: ChaCha8Rng = NoiseStream::new(seed).rng(Purpose::Reference, 0, 0);
    Ok(oracle.sample(count, built.dim(), &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_1d() -> TargetSpec {
        TargetSpec::Gaussian {
            mean: vec![0.0],
            precision: vec![1.0],
        }
    }

    #[test]
    fn plain_ula_variance() {
        // four seeds pooled so the 10% band is about three standard errors
        let mut c = RunConfig::new(gaussian_1d(), 500, 10_000, 0.01);
        c.diag_stride = 10_000;
        c.reference_samples = 0;
        let mut samples = Vec::new();
        for seed in 0..4 {
            c.seed = seed;
            samples.extend(run(&c).unwrap().samples);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // ULA on N(0,1) is stationary at variance 1/(1 − τ/2)
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn evaluation_counters_follow_formula() {
        let mut c = RunConfig::new(TargetSpec::TwoRing { sigma: 0.5 }, 40, 120, 0.005);
        c.bd = true;
        c.bd_stride = 25;
        c.diag_stride = 60;
        c.reference_samples = 50;
        let r = run(&c).unwrap();
        assert_eq!(r.counters.gradient_evaluations, 40 * 120);
        assert_eq!(r.counters.bd_rounds, 4);
        assert_eq!(r.counters.potential_evaluations, 40 * 4);
        assert_eq!(r.trace.iterations(), vec![0, 60, 120]);
        let jumps: usize = r.trace.rows().iter().map(|t| t.jump_count).sum();
        assert_eq!(jumps as u64, r.counters.total_jumps);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let mut c = RunConfig::new(TargetSpec::TwoRing { sigma: 0.5 }, 30, 100, 0.01);
        c.bd = true;
        c.bd_stride = 10;
        c.anneal = true;
        c.precondition = true;
        c.diag_stride = 50;
        c.reference_samples = 40;
        c.threads = Some(1);
        let a = run(&c).unwrap();
        c.threads = Some(3);
        let b = run(&c).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.trace, b.trace);
        c.seed = 1;
        assert_ne!(run(&c).unwrap().samples, a.samples);
    }

    #[test]
    fn bounded_samples_stay_inside() {
        let mut c = RunConfig::new(TargetSpec::HybridRosenbrock { a: 30.0, b: 20.0, mu: 1.0, n1: 4, n2: 3 }, 50, 200, 0.05);
        c.space = Some(SupportSpace::hypercube(10, -5.0, 5.0).unwrap());
        c.init = InitSpec::Uniform { lower: -5.0, upper: 5.0 };
        c.precondition = true;
        c.reference_samples = 0;
        for family in Family::ALL {
            c.reparam = family;
            let r = run(&c).unwrap();
            assert!(r.samples.iter().all(|&v| -5.0 < v && v < 5.0));
        }
    }

    #[test]
    fn periodic_samples_in_canonical_range() {
        let mut c = RunConfig::new(
            TargetSpec::Gaussian {
                mean: vec![1.0, 3.0],
                precision: vec![0.5, 0.5],
            },
            40,
            300,
            0.05,
        );
        c.space = Some(SupportSpace::new(vec![Coord::Bounded { lower: 0.0, upper: 2.0 }, Coord::Periodic]).unwrap());
        c.init = InitSpec::Uniform { lower: 0.0, upper: 2.0 };
        c.bd = true;
        c.bd_stride = 30;
        c.reference_samples = 0;
        let r = run(&c).unwrap();
        for row in r.samples.chunks_exact(2) {
            assert!(0.0 < row[0] && row[0] < 2.0);
            assert!((0.0..std::f64::consts::TAU).contains(&row[1]));
        }
    }

    #[test]
    fn divergence_reports_iteration() {
        // a huge step on a stiff quadratic blows up quickly
        let c = RunConfig::new(
            TargetSpec::Gaussian {
                mean: vec![0.0],
                precision: vec![1e4],
            },
            4,
            1000,
            1.0,
        );
        match run(&c) {
            Err(Error::Diverged { iteration, .. }) => assert!(iteration > 0 && iteration < 1000),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(gaussian_1d(), 10, 100, 0.1);
        c.bd = true;
        c.bd_stride = 200;
        assert!(matches!(run(&c), Err(Error::Config(_))));
        let mut c = RunConfig::new(gaussian_1d(), 10, 100, 0.1);
        c.space = Some(SupportSpace::euclidean(2).unwrap());
        assert!(matches!(run(&c), Err(Error::Config(_))));
        let c = RunConfig::new(gaussian_1d(), 10, 100, -0.1);
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn config_from_json() {
        let json = r#"{
            "target": {"kind": "two_ring"},
            "n_particles": 10, "iterations": 5, "tau": 0.01,
            "bd": "on", "anneal": true, "rate_form": "k_rho_times_invp",
            "init": {"kind": "uniform", "lower": -1.0, "upper": 1.0}
        }"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        assert!(c.bd && c.anneal && !c.precondition);
        assert_eq!(c.rate_form, RateForm::KRhoTimesInvP);
        assert_eq!(c.target, TargetSpec::TwoRing { sigma: 0.5 });
        let err = serde_json::from_str::<RunConfig>(r#"{"target":{"kind":"two_ring"},"n_particles":10,"iterations":5}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("tau"), "{err}");
    }

    #[test]
    fn rejection_resampling_of_init() {
        let mut c = RunConfig::new(TargetSpec::Flat { dim: 2 }, 100, 1, 0.01);
        c.space = Some(SupportSpace::hypercube(2, 0.0, 0.5).unwrap());
        c.init = InitSpec::Gaussian { mean: 0.0, std: 1.0 };
        let r = run(&c).unwrap();
        assert!(r.samples.iter().all(|&v| 0.0 < v && v < 0.5));
    }

    #[test]
    fn oracle_needs_sampler() {
        assert!(matches!(oracle_samples(&TargetSpec::Flat { dim: 1 }, 5, 0), Err(Error::NoOracle(_))));
        let s = oracle_samples(&TargetSpec::TwoRing { sigma: 0.5 }, 7, 3).unwrap();
        assert_eq!(s.len(), 14);
        assert_eq!(s, oracle_samples(&TargetSpec::TwoRing { sigma: 0.5 }, 7, 3).unwrap());
    }
}
