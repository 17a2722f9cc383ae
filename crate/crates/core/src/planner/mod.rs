//! Choosing the number of geometric draws `k`.
//!
//! Every planner here returns the smallest `k` whose exact tail bound is
//! at most `δ`:
//!
//! * [`find_k_gbas`] for the gamma scheme, where the relative error of the
//!   estimate has a `Gamma(k, (k - 1) / c)` law whatever `p` is;
//! * [`find_k_dklr`] for the negative binomial scheme when `p` is only
//!   known to lie in `[a, 1]`, bounding the error over a fine partition of
//!   that interval;
//! * [`plan_two_stage`], which chains the two.
//!
//! The negative binomial bound is not monotone in `k`: its thresholds are
//! floored, so it oscillates and feasible values interleave with
//! infeasible ones just above the first feasible `k`. The search brackets
//! by doubling, bisects, and then walks down from the answer until a run
//! of [`DEFAULT_RESCAN_WINDOW`] consecutive infeasible values is seen.

mod dklr;
mod gbas;
mod search;
mod two_stage;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use dklr::{
    dklr_interval_error, dklr_partition_error, dklr_partition_tails, find_k_dklr,
    PIntervalPartition, TailPair,
};
pub use gbas::{find_k_gbas, gbas_error};
pub use two_stage::{plan_two_stage, LowerBoundRule, TwoStagePlanner};

/// Default ceiling on `k` for every search.
pub const DEFAULT_K_CEILING: u64 = 100_000_000;

/// Default subinterval divisor: widths are `(1 - a) ε / divisor`.
pub const DEFAULT_DIVISOR: u32 = 100;

/// Consecutive infeasible values that end the downward walk. Across the
/// planner's reference configurations the longest infeasible run inside an
/// oscillation band is 4.
pub const DEFAULT_RESCAN_WINDOW: u64 = 16;

/// Slack added to `δ` when accepting a `k`, so that an error bound equal
/// to `δ` up to rounding is accepted.
pub const ACCEPT_SLACK: f64 = 1e-15;

/// Relative error `ε` and failure probability `δ`: the estimate must
/// satisfy `P(|p̂/p - 1| > ε) <= δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasTarget {
    epsilon: f64,
    delta: f64,
}

impl RasTarget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(RasTarget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Whether estimates are divided by the tilting constant, and its value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltConfig {
    enabled: bool,
    c_tilt: f64,
}

impl TiltConfig {
    pub const OFF: TiltConfig = TiltConfig { enabled: false, c_tilt: 1.0 };

    /// Tilting for relative error `epsilon`, or [`TiltConfig::OFF`].
    pub fn new(enabled: bool, epsilon: f64) -> Result<Self> {
        if enabled {
            Ok(TiltConfig { enabled, c_tilt: tilt_value(epsilon)? })
        } else {
            Ok(TiltConfig::OFF)
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// The divisor applied to estimates; 1 when tilting is off.
    pub fn c_tilt(&self) -> f64 {
        self.c_tilt
    }
}

/// The constant that balances the decay of the two tails of the relative
/// error:
///
/// `c = 2ε / [(1 - ε²) ln(1 + 2ε / (1 - ε))]`, which is `1 + (2/3)ε² + O(ε⁴)`.
///
/// ```
/// use bernoulli_ras::planner::tilt_value;
/// let c = tilt_value(0.1).unwrap();
/// assert!((c - 1.006_724_980_719_994_5).abs() < 1e-14);
/// ```
pub fn tilt_value(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("tilt needs epsilon in (0, 1), got {epsilon}")));
    }
    // ln(1 + 2ε/(1-ε)) = ln((1+ε)/(1-ε)) = 2 atanh(ε); the atanh form keeps
    // full precision for small ε.
    Ok(epsilon / ((1.0 - epsilon * epsilon) * epsilon.atanh()))
}

/// Analytic estimate of the speedup of the two-stage scheme over the
/// gamma scheme at success probability `p`:
///
/// `ρ = ln(1/δ) / (ln 2 + ln(1/δ)) · 1 / (1 - p (1 - √ε) / (1 + √ε) + ε)`.
pub fn speedup_rho(p: f64, target: &RasTarget) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("speedup model needs p in (0, 1), got {p}")));
    }
    let ln_inv_delta = -target.delta.ln();
    let sq = target.epsilon.sqrt();
    let gap = 1.0 - p * (1.0 - sq) / (1.0 + sq) + target.epsilon;
    Ok(ln_inv_delta / (std::f64::consts::LN_2 + ln_inv_delta) / gap)
}

/// The draw count of the original negative binomial scheme,
/// `⌈1 + (1 + ε) 4(e - 2) ε⁻² ln(2/δ)⌉`. Reported for comparison only.
pub fn original_dklr_k(target: &RasTarget) -> u64 {
    let eps = target.epsilon;
    let k = 1.0
        + (1.0 + eps) * 4.0 * (std::f64::consts::E - 2.0) * (2.0 / target.delta).ln()
            / (eps * eps);
    k.ceil() as u64
}

/// Which bound a [`Plan`] was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    /// Gamma scheme; certifies every `p` in `(0, 1]`.
    Gbas,
    /// Negative binomial scheme certified on `[a, 1]`.
    DklrInterval,
}

/// A planned draw count with the bound it was certified against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub method: PlanMethod,
    pub k: u64,
    pub target: RasTarget,
    pub tilt: TiltConfig,
    /// `[a, b]` such that the guarantee holds for every `p` inside; `None`
    /// for a caller-fixed `k`.
    pub certified_interval: Option<(f64, f64)>,
    /// The error bound evaluated at `k`; at most `target.delta()`.
    pub error_bound: Option<f64>,
    /// Partition divisor used for a [`PlanMethod::DklrInterval`] plan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divisor: Option<u32>,
}

impl Plan {
    /// A plan with a caller-chosen `k` and no certificate attached, for
    /// running an estimator at a fixed draw count.
    pub fn fixed(method: PlanMethod, k: u64, target: RasTarget, tilt: TiltConfig) -> Result<Plan> {
        if k < 2 {
            return Err(domain("estimators need k >= 2"));
        }
        Ok(Plan {
            method,
            k,
            target,
            tilt,
            certified_interval: None,
            error_bound: None,
            divisor: None,
        })
    }
}

/// Cooperative cancellation for long k-searches; checked before every
/// evaluation of the error bound.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// Knobs shared by every k-search.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// The search returns the smallest feasible `k > min_k_hint`. A hint
    /// must lie below the true answer or the result is merely conservative.
    pub min_k_hint: u64,
    pub ceiling: u64,
    /// See [`DEFAULT_RESCAN_WINDOW`].
    pub rescan_window: u64,
    pub cancel: Option<CancelToken>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            min_k_hint: 1,
            ceiling: DEFAULT_K_CEILING,
            rescan_window: DEFAULT_RESCAN_WINDOW,
            cancel: None,
        }
    }
}

impl SearchOptions {
    pub fn with_hint(min_k_hint: u64) -> Self {
        SearchOptions { min_k_hint, ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_validation() {
        assert!(RasTarget::new(0.0, 0.1).is_err());
        assert!(RasTarget::new(1.0, 0.1).is_err());
        assert!(RasTarget::new(0.1, 0.0).is_err());
        assert!(RasTarget::new(0.1, 1.0).is_err());
        assert!(RasTarget::new(0.1, 0.1).is_ok());
    }

    #[test]
    fn tilt_matches_the_log_form() {
        for &e in &[0.01f64, 0.1, 0.3, 0.5, 0.9] {
            let direct = 2.0 * e / ((1.0 - e * e) * (1.0 + 2.0 * e / (1.0 - e)).ln());
            assert!((tilt_value(e).unwrap() - direct).abs() < 1e-13);
        }
        assert!(tilt_value(0.0).is_err());
        assert!(tilt_value(1.0).is_err());
        assert_eq!(TiltConfig::new(false, 0.3).unwrap().c_tilt(), 1.0);
    }

    #[test]
    fn rho_rejects_degenerate_p() {
        let t = RasTarget::new(0.1, 0.01).unwrap();
        assert!(speedup_rho(0.0, &t).is_err());
        assert!(speedup_rho(1.0, &t).is_err());
    }

    #[test]
    fn original_k_formula() {
        // ⌈1 + 1.1 · 4(e - 2) · 100 · ln 200⌉
        let t = RasTarget::new(0.1, 0.01).unwrap();
        let raw: f64 = 1.0 + 1.1 * 4.0 * (std::f64::consts::E - 2.0) * 100.0 * 200f64.ln();
        assert_eq!(original_dklr_k(&t), raw.ceil() as u64);
    }
}
