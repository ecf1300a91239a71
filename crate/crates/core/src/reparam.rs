//! Quantile-function reparameterization of bounded coordinates.
//!
//! Each bounded coordinate `x ∈ (a, b)` is mapped to the real line by
//! `y = q((x − a) / (b − a))` where `q` is the quantile function of a standard
//! random variable, and back by `x = a + (b − a) F(y)`. The density of the
//! target on the real line is then `exp(−V(T⁻¹(y)) − U(y))` with the
//! confining potential `U(y) = Σ −ln f(yᵢ)` taken over bounded coordinates.
//!
//! Periodic and real coordinates pass through unchanged.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::space::{Coord, SupportSpace};
use crate::targets::Potential;

/// Relative inward nudge applied to points sitting exactly on a bound.
pub const BOUNDARY_NUDGE: f64 = 1e-12;

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;

/// Standard (location 0, scale 1) symmetric families.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Logistic,
    Gaussian,
    Cauchy,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gaussian, Family::Logistic, Family::Cauchy];

    pub fn name(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::Gaussian => "gaussian",
            Family::Cauchy => "cauchy",
        }
    }

    /// `−ln f(y)`.
    pub fn neg_ln_pdf(self, y: f64) -> f64 {
        match self {
            Family::Logistic => {
                let a = y.abs();
                a + 2.0 * (-a).exp().ln_1p()
            }
            Family::Gaussian => HALF_LN_TAU + 0.5 * y * y,
            Family::Cauchy => PI.ln() + (y * y).ln_1p(),
        }
    }

    pub fn pdf(self, y: f64) -> f64 {
        (-self.neg_ln_pdf(y)).exp()
    }

    pub fn cdf(self, y: f64) -> f64 {
        if y > 0.0 {
            1.0 - self.lower_tail(-y)
        } else {
            self.lower_tail(y)
        }
    }

    /// `F(y)` for `y ≤ 0`, accurate deep into the tail. Upper tails use
    /// `1 − F(y) = F(−y)`.
    fn lower_tail(self, y: f64) -> f64 {
        debug_assert!(y <= 0.0);
        match self {
            Family::Logistic => {
                let e = y.exp();
                e / (1.0 + e)
            }
            Family::Gaussian => 0.5 * erfc(-y * FRAC_1_SQRT_2),
            Family::Cauchy => {
                if y == 0.0 {
                    0.5
                } else {
                    (-1.0 / y).atan() / PI
                }
            }
        }
    }

    /// `F⁻¹(u)` for `u ∈ (0, 1/2]`.
    fn lower_quantile(self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 0.5);
        match self {
            Family::Logistic => u.ln() - (-u).ln_1p(),
            Family::Gaussian => {
                let mut y = -SQRT_2 * erfc_inv(2.0 * u);
                // one Newton polish on the log-cdf keeps the tails tight
                let f = self.pdf(y);
                if f > 0.0 {
                    y -= (self.lower_tail(y.min(0.0)) - u) / f;
                }
                y.min(0.0)
            }
            Family::Cauchy => -1.0 / (PI * u).tan(),
        }
    }

    pub fn quantile(self, u: f64) -> f64 {
        if u <= 0.5 {
            self.lower_quantile(u)
        } else {
            -self.lower_quantile(1.0 - u)
        }
    }

    /// `−d/dy ln f(y)`, the restoring force away from the interval ends.
    pub fn confining_force(self, y: f64) -> f64 {
        match self {
            // 2F(y) − 1
            Family::Logistic => (0.5 * y).tanh(),
            Family::Gaussian => y,
            Family::Cauchy => 2.0 * y / (1.0 + y * y),
        }
    }

    /// `−ln f(0)`.
    pub fn neg_ln_pdf_at_zero(self) -> f64 {
        match self {
            Family::Logistic => 2.0 * LN_2,
            Family::Gaussian => HALF_LN_TAU,
            Family::Cauchy => PI.ln(),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(Family::Logistic),
            "gaussian" | "gauss" | "normal" => Ok(Family::Gaussian),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(Error::Config(format!("unknown reparameterization `{other}`"))),
        }
    }
}

/// The coordinate map `T` from the support to the dual (working) space.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterization {
    family: Family,
    space: SupportSpace,
}

impl Reparameterization {
    pub fn new(family: Family, space: SupportSpace) -> Self {
        Self { family, space }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn space(&self) -> &SupportSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Maps a support point into the dual space. Points exactly on a bound are
    /// nudged inward by [`BOUNDARY_NUDGE`] times the interval width.
    pub fn push_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.space.check_dim(x.len())?;
        let mut y = Vec::with_capacity(x.len());
        for (i, (&xi, c)) in x.iter().zip(self.space.coords()).enumerate() {
            let v = match *c {
                Coord::Bounded { lower, upper } => {
                    if !(lower..=upper).contains(&xi) {
                        return Err(Error::OutsideSupport {
                            coord: i,
                            value: xi,
                            lower,
                            upper,
                        });
                    }
                    let width = upper - lower;
                    let eps = BOUNDARY_NUDGE * width;
                    let xi = xi.clamp(lower + eps, upper - eps);
                    let from_lower = (xi - lower) / width;
                    if from_lower <= 0.5 {
                        self.family.quantile(from_lower)
                    } else {
                        -self.family.lower_quantile((upper - xi) / width)
                    }
                }
                _ => xi,
            };
            y.push(v);
        }
        Ok(y)
    }

    /// Maps a dual point back onto the support. Bounded results are kept at
    /// least [`BOUNDARY_NUDGE`] widths inside the interval.
    pub fn pull_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.space.check_dim(y.len())?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { particle: i });
        }
        let mut x = vec![0.0; y.len()];
        self.pull_into(y, &mut x);
        Ok(x)
    }

    pub(crate) fn pull_into(&self, y: &[f64], x: &mut [f64]) {
        for ((xi, &yi), c) in x.iter_mut().zip(y).zip(self.space.coords()) {
            *xi = match *c {
                Coord::Bounded { lower, upper } => {
                    let width = upper - lower;
                    let eps = BOUNDARY_NUDGE * width;
                    let v = if yi <= 0.0 {
                        lower + width * self.family.lower_tail(yi)
                    } else {
                        upper - width * self.family.lower_tail(-yi)
                    };
                    v.clamp(lower + eps, upper - eps)
                }
                _ => yi,
            };
        }
    }

    /// `U(y) = Σ −ln f(yᵢ)` over bounded coordinates.
    pub fn confining_potential(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.space.coords())
            .filter(|(_, c)| c.bounds().is_some())
            .map(|(&yi, _)| self.family.neg_ln_pdf(yi))
            .sum()
    }

    /// `∇U(y)`; zero on unbounded coordinates.
    pub fn confining_gradient(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.space.coords())
            .map(|(&yi, c)| {
                if c.bounds().is_some() {
                    self.family.confining_force(yi)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `V(T⁻¹(y)) + U(y) − ln vol`.
    pub fn pushforward_potential<P: Potential + ?Sized>(&self, potential: &P, y: &[f64]) -> f64 {
        let mut x = vec![0.0; y.len()];
        self.pull_into(y, &mut x);
        potential.value(&x) + self.confining_potential(y) - self.space.log_volume()
    }

    /// Gradient of [`Self::pushforward_potential`].
    pub fn pushforward_gradient<P: Potential + ?Sized>(&self, potential: &P, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        let mut scratch = vec![0.0; y.len()];
        self.annealed_gradient_into(potential, y, 1.0, &mut scratch, &mut out);
        out
    }

    /// Gradient of `V(T⁻¹(y)) + U(y)/β`: the base term at full strength and a
    /// confinement cooled by `1/β`. At `β = 1` this is the pushforward gradient.
    pub fn annealed_gradient_into<P: Potential + ?Sized>(
        &self,
        potential: &P,
        y: &[f64],
        beta: f64,
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        self.pull_into(y, scratch);
        potential.gradient(scratch, out);
        let inv_beta = 1.0 / beta;
        for ((g, &yi), c) in out.iter_mut().zip(y).zip(self.space.coords()) {
            if let Coord::Bounded { lower, upper } = *c {
                *g = *g * (upper - lower) * self.family.pdf(yi)
                    + self.family.confining_force(yi) * inv_beta;
            }
        }
    }

    /// `β V(T⁻¹(y)) + U(y)`: the potential whose Gibbs density the annealed
    /// dual-space dynamics at inverse temperature `β` leave invariant.
    pub fn heated_potential<P: Potential + ?Sized>(&self, potential: &P, y: &[f64], beta: f64, scratch: &mut [f64]) -> f64 {
        self.pull_into(y, scratch);
        beta * potential.value(scratch) + self.confining_potential(y)
    }
}
