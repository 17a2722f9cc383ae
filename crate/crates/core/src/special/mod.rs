//! Regularized incomplete gamma and beta functions, and the gamma and
//! negative binomial distribution functions built on them.
//!
//! Everything here is evaluated in `f64` with the prefactors
//! `x^a e^{-x} / Γ(a+1)` and `x^a (1-x)^b / B(a, b)` carried in a
//! deviance form (Stirling remainder plus `bd0`) so that shapes in the
//! hundreds of thousands keep full relative accuracy. The incomplete gamma
//! function switches from its power series to a continued fraction at
//! `x = a + 1`; the incomplete beta function switches at the mean-like
//! crossover `x = (a + 1) / (a + b + 2)`. On either side the tail that is
//! computed directly is the small one, and its complement comes from
//! subtraction, so both tails of every distribution keep their relative
//! accuracy deep into the tail.

pub(crate) mod beta;
pub(crate) mod gamma;
pub(crate) mod kernels;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use beta::{negbinom_trials_cdf, negbinom_trials_sf, reg_inc_beta, reg_inc_beta_complement};
pub use gamma::{
    gamma_cdf, gamma_quantile, gamma_quantiles_sorted, gamma_sf, reg_inc_gamma_lower,
    reg_inc_gamma_upper,
};
pub use kernels::ln_gamma;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain(format!("probability must lie in [0, 1], got {value}")))
        }
    }

    /// Clamps a computed value into `[0, 1]`. Rounding can push a
    /// subtraction like `1 - q` a hair outside the interval.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

/// Parameters of a gamma distribution in the shape/rate convention, so
/// that the mean is `shape / rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!("gamma rate must be positive, got {rate}")));
        }
        Ok(GammaParams { shape, rate })
    }

    /// Gamma with rate 1.
    pub fn standard(shape: f64) -> Result<Self> {
        GammaParams::new(shape, 1.0)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Negative binomial in the trials parameterization: the number of
/// Bernoulli(p) trials needed to collect `k` successes. Support is
/// `{k, k + 1, ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinTrialsParams {
    k: u64,
    p: f64,
}

impl NegBinTrialsParams {
    /// `p = 0` is rejected: the k-th success never arrives.
    pub fn new(k: u64, p: f64) -> Result<Self> {
        if k == 0 {
            return Err(domain("negative binomial needs k >= 1 successes"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(domain(format!(
                "negative binomial success probability must lie in (0, 1], got {p}"
            )));
        }
        Ok(NegBinTrialsParams { k, p })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}
