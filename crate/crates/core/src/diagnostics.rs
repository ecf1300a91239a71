//! Two-sample energy statistic, ring weights and convergence traces.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean Euclidean distance between rows of `a` and rows of `b`. With
/// `same = true` the diagonal pairs are skipped.
fn mean_distance(a: &[f64], b: &[f64], dim: usize, same: bool) -> f64 {
    let n = a.len() / dim;
    let m = b.len() / dim;
    // per-row sums are reduced serially so the result is independent of the
    // worker count
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = &a[i * dim..(i + 1) * dim];
            (0..m)
                .filter(|&j| !(same && j == i))
                .map(|j| dist(x, &b[j * dim..(j + 1) * dim]))
                .sum::<f64>()
        })
        .collect();
    let total: f64 = rows.iter().sum();
    let pairs = if same { n * (n - 1) } else { n * m };
    total / pairs as f64
}

/// Energy distance `E = 2·E‖X−Y‖ − E‖X−X′‖ − E‖Y−Y′‖` between two row-major
/// samples, with off-diagonal means for the within-sample terms.
pub fn energy_distance(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    if dim == 0 || x.len() % dim != 0 || y.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: if x.len() % dim.max(1) != 0 { x.len() } else { y.len() },
        });
    }
    if x.len() < 2 * dim || y.len() < 2 * dim {
        return Err(Error::Config("energy distance needs at least two samples per side".into()));
    }
    let xy = mean_distance(x, y, dim, false);
    let xx = mean_distance(x, x, dim, true);
    let yy = mean_distance(y, y, dim, true);
    Ok(2.0 * xy - xx - yy)
}

/// `(nm / (n + m))·E`, the statistic tracked during runs.
pub fn energy_statistic(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    let e = energy_distance(x, y, dim)?;
    let n = (x.len() / dim) as f64;
    let m = (y.len() / dim) as f64;
    Ok(n * m / (n + m) * e)
}

/// Fraction of planar samples further from the origin than the midpoint of
/// the two radii.
pub fn ring_weight(samples: &[f64], inner_r: f64, outer_r: f64) -> f64 {
    let cut = 0.5 * (inner_r + outer_r);
    let n = samples.len() / 2;
    if n == 0 {
        return 0.0;
    }
    let outside = samples
        .chunks_exact(2)
        .filter(|p| p[0].hypot(p[1]) > cut)
        .count();
    outside as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `NaN` when no reference sample is available.
    pub epsilon_stat: f64,
    pub beta: f64,
    pub jump_count: usize,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "iteration,epsilon_stat,beta,jump_count,bandwidth";

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rows must arrive in strictly increasing iteration order.
    pub fn push(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            assert!(row.iteration > last.iteration, "trace iterations must increase");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.iteration).collect()
    }

    pub fn epsilon(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.epsilon_stat).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// First recorded iteration whose ε-statistic is at or below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.epsilon_stat <= threshold)
            .map(|r| r.iteration)
    }

    /// ε-statistic at the last recorded iteration not after `iteration`.
    pub fn epsilon_at(&self, iteration: usize) -> Option<f64> {
        self.rows
            .iter()
            .take_while(|r| r.iteration <= iteration)
            .last()
            .map(|r| r.epsilon_stat)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iteration, r.epsilon_stat, r.beta, r.jump_count, r.bandwidth
            )?;
        }
        Ok(())
    }
}
