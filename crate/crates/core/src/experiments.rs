//! Ready-made configurations for the benchmark experiments, shared by the
//! command-line tool and the acceptance suite.

use std::io::Write;

use crate::diagnostics::ConvergenceTrace;
use crate::reparam::Family;
use crate::sampler::{InitSpec, RunConfig, TargetSpec};
use crate::space::SupportSpace;
use crate::targets::RingMixture;

pub const PRECONDITIONED_TAU: f64 = 2.0;
pub const IDENTITY_TAU: f64 = 0.001;

/// Rate-time increment used by the two-ring runs.
pub const TWO_RING_GAMMA: f64 = 0.5;
pub const TWO_RING_TAU: f64 = 0.005;
pub const TWO_RING_BD_STRIDE: usize = 50;

pub fn hybrid_rosenbrock() -> TargetSpec {
    TargetSpec::HybridRosenbrock {
        a: 30.0,
        b: 20.0,
        mu: 1.0,
        n1: 4,
        n2: 3,
    }
}

/// Unconstrained 10-d hybrid Rosenbrock from `Unif[−5, 5]`, with or without
/// Fisher preconditioning.
pub fn preconditioning(preconditioned: bool, seed: u64) -> RunConfig {
    let tau = if preconditioned { PRECONDITIONED_TAU } else { IDENTITY_TAU };
    let mut c = RunConfig::new(hybrid_rosenbrock(), 200, 10_000, tau);
    c.precondition = preconditioned;
    c.lambda = 1e-3;
    c.init = InitSpec::Uniform { lower: -5.0, upper: 5.0 };
    c.seed = seed;
    c
}

/// The preconditioned run constrained to `[−5, 5]¹⁰` under `family`.
pub fn reparameterization(family: Family, seed: u64) -> RunConfig {
    let mut c = preconditioning(true, seed);
    c.space = Some(SupportSpace::hypercube(10, -5.0, 5.0).expect("valid box"));
    c.reparam = family;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoRingVariant {
    Standard,
    Annealed,
    AnnealedBirthDeath,
}

impl TwoRingVariant {
    pub const ALL: [TwoRingVariant; 3] = [
        TwoRingVariant::Standard,
        TwoRingVariant::Annealed,
        TwoRingVariant::AnnealedBirthDeath,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TwoRingVariant::Standard => "Standard",
            TwoRingVariant::Annealed => "Annealed",
            TwoRingVariant::AnnealedBirthDeath => "Annealed+BD",
        }
    }
}

/// Two-ring mixture, `N(0, I)` start, 1000 iterations.
pub fn two_ring(variant: TwoRingVariant, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(TargetSpec::TwoRing { sigma: 0.5 }, 200, 1000, TWO_RING_TAU);
    c.init = InitSpec::Gaussian { mean: 0.0, std: 1.0 };
    c.seed = seed;
    c.beta_min = 1e-5;
    c.anneal = variant != TwoRingVariant::Standard;
    c.bd = variant == TwoRingVariant::AnnealedBirthDeath;
    c.bd_stride = TWO_RING_BD_STRIDE;
    c.gamma = Some(TWO_RING_GAMMA);
    c
}

pub const SWEEP_BANDWIDTHS: [f64; 3] = [0.01, 1.0, 100.0];

/// Annealed birth-death two-ring run with the kernel bandwidth pinned to `h`.
pub fn fixed_bandwidth(h: f64, seed: u64) -> RunConfig {
    let mut c = two_ring(TwoRingVariant::AnnealedBirthDeath, seed);
    c.bandwidth = Some(h);
    c
}

pub fn bandwidth_label(h: f64) -> String {
    format!("h={h}")
}

/// Number of planar samples whose nearest component is each mode.
pub fn mode_occupancy(target: &RingMixture, samples: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; target.means().len()];
    for x in samples.chunks_exact(2) {
        counts[target.nearest_component(x)] += 1;
    }
    counts
}

/// One column per series over a shared iteration grid. Missing entries (a
/// shorter trace) are left empty.
pub fn write_series_csv<W: Write>(mut w: W, names: &[String], traces: &[ConvergenceTrace]) -> std::io::Result<()> {
    assert_eq!(names.len(), traces.len());
    write!(w, "iteration")?;
    for name in names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    let grid = traces
        .iter()
        .map(|t| t.iterations())
        .max_by_key(|it| it.len())
        .unwrap_or_default();
    for (row, it) in grid.iter().enumerate() {
        write!(w, "{it}")?;
        for t in traces {
            match t.rows().get(row) {
                Some(r) if r.iteration == *it => write!(w, ",{}", r.epsilon_stat)?,
                _ => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
