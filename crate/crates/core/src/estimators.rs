//! The estimation schemes. Each consumes a [`SampleSource`] and returns an
//! [`EstimateReport`].

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::planner::{Plan, RasTarget, TiltConfig, TwoStagePlanner};
use crate::sampling::{draw_gamma, SampleSource, VariateRng};

/// Largest stage-two lower bound; a pilot estimate implying `a >= 1` is
/// clamped here.
pub const MAX_LOWER_BOUND: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    FixedN,
    Dklr,
    Gbas,
    TwoStage,
    Unbiased,
}

/// The outcome of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: EstimateMethod,
    pub p_hat: f64,
    /// Successes waited for (`n` for the fixed-size average).
    pub k_used: u64,
    /// Bits consumed by this run, both stages included.
    pub samples_consumed: u64,
    pub tilt: TiltConfig,
    /// The realized negative binomial total `T_k` (or `M` for the gamma
    /// scheme).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_negbin_total: Option<u64>,
    /// The pilot run of a two-stage estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage1: Option<Box<EstimateReport>>,
    /// Stage-two lower bound `a` derived from the pilot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    /// Whether `a` had to be clamped below 1.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lower_bound_clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<RasTarget>,
}

impl EstimateReport {
    fn new(method: EstimateMethod, p_hat: f64, k_used: u64, samples: u64, tilt: TiltConfig) -> Self {
        EstimateReport {
            method,
            p_hat,
            k_used,
            samples_consumed: samples,
            tilt,
            aux_negbin_total: None,
            stage1: None,
            lower_bound: None,
            lower_bound_clamped: false,
            target: None,
        }
    }

    /// Whether `|p_hat / p - 1| > epsilon`.
    pub fn misses(&self, p: f64, epsilon: f64) -> bool {
        (self.p_hat / p - 1.0).abs() > epsilon
    }
}

/// The sample average of `n` bits. Carries no guarantee.
pub fn estimate_fixed_n<S: SampleSource>(source: &mut S, n: u64) -> Result<EstimateReport> {
    if n == 0 {
        return Err(domain("fixed-n estimate needs n >= 1"));
    }
    let mut ones = 0u64;
    for _ in 0..n {
        ones += source.next_bernoulli()? as u64;
    }
    Ok(EstimateReport::new(EstimateMethod::FixedN, ones as f64 / n as f64, n, n, TiltConfig::OFF))
}

fn check_plan_k(plan: &Plan) -> Result<()> {
    if plan.k < 2 {
        return Err(domain("estimators need k >= 2"));
    }
    Ok(())
}

/// `p̂ = (k - 1) / (T c)` with `T` the trials until the `k`-th success.
///
/// ```
/// use bernoulli_ras::estimators::estimate_dklr;
/// use bernoulli_ras::planner::{Plan, PlanMethod, RasTarget, TiltConfig};
/// use bernoulli_ras::sampling::InMemorySource;
///
/// // Geometric draws 2 and 3: T = 5, so p̂ = 1/5.
/// let mut bits = InMemorySource::parse(b"01 001").unwrap();
/// let target = RasTarget::new(0.1, 0.05).unwrap();
/// let plan = Plan::fixed(PlanMethod::DklrInterval, 2, target, TiltConfig::OFF).unwrap();
/// let report = estimate_dklr(&mut bits, &plan).unwrap();
/// assert_eq!(report.p_hat, 0.2);
/// assert_eq!(report.samples_consumed, 5);
/// ```
pub fn estimate_dklr<S: SampleSource>(source: &mut S, plan: &Plan) -> Result<EstimateReport> {
    check_plan_k(plan)?;
    let start = source.draws_consumed();
    let t = source.draw_negbin_trials(plan.k)?;
    let p_hat = (plan.k - 1) as f64 / (t as f64 * plan.tilt.c_tilt());
    let mut report = EstimateReport::new(
        EstimateMethod::Dklr,
        p_hat,
        plan.k,
        source.draws_consumed() - start,
        plan.tilt,
    );
    report.aux_negbin_total = Some(t);
    report.target = Some(plan.target);
    Ok(report)
}

/// `p̂ = (k - 1) / (S c)` where, given `M` trials to the `k`-th success,
/// `S ~ Gamma(M, 1)`. The relative error `p / p̂` then has a law that does
/// not depend on `p`.
pub fn estimate_gbas<S: SampleSource>(
    source: &mut S,
    plan: &Plan,
    rng: &mut VariateRng,
) -> Result<EstimateReport> {
    check_plan_k(plan)?;
    let start = source.draws_consumed();
    let m = source.draw_negbin_trials(plan.k)?;
    let s = draw_gamma(m as f64, rng)?;
    let p_hat = (plan.k - 1) as f64 / (s * plan.tilt.c_tilt());
    let mut report = EstimateReport::new(
        EstimateMethod::Gbas,
        p_hat,
        plan.k,
        source.draws_consumed() - start,
        plan.tilt,
    );
    report.aux_negbin_total = Some(m);
    report.target = Some(plan.target);
    Ok(report)
}

/// Two-stage estimate: a gamma-scheme pilot at `(√ε, δ/2)`, then a
/// negative binomial run on fresh bits, planned for `p` in `[a, 1]` with
/// `a` derived from the pilot.
pub fn estimate_two_stage<S: SampleSource>(
    source: &mut S,
    planner: &TwoStagePlanner,
    rng: &mut VariateRng,
) -> Result<EstimateReport> {
    let stage1 = estimate_gbas(source, planner.stage1(), rng)?;
    let raw = planner.lower_bound(stage1.p_hat);
    let clamped = raw >= MAX_LOWER_BOUND;
    let a = raw.min(MAX_LOWER_BOUND);
    let plan = planner.stage2_for_lower_bound(a)?;
    let stage2 = estimate_dklr(source, &plan)?;
    let mut report = EstimateReport::new(
        EstimateMethod::TwoStage,
        stage2.p_hat,
        stage2.k_used,
        stage1.samples_consumed + stage2.samples_consumed,
        plan.tilt,
    );
    report.aux_negbin_total = stage2.aux_negbin_total;
    report.lower_bound = Some(a);
    report.lower_bound_clamped = clamped;
    report.target = Some(*planner.target());
    report.stage1 = Some(Box::new(stage1));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan_two_stage, PlanMethod};
    use crate::sampling::{InMemorySource, SimulatedSource};

    fn fixed(method: PlanMethod, k: u64) -> Plan {
        Plan::fixed(method, k, RasTarget::new(0.1, 0.05).unwrap(), TiltConfig::OFF).unwrap()
    }

    #[test]
    fn fixed_n_averages() {
        let mut ones = InMemorySource::parse(b"1111111111").unwrap();
        assert_eq!(estimate_fixed_n(&mut ones, 10).unwrap().p_hat, 1.0);
        let mut alt = InMemorySource::parse(b"0101010101").unwrap();
        assert_eq!(estimate_fixed_n(&mut alt, 10).unwrap().p_hat, 0.5);
        assert!(estimate_fixed_n(&mut alt, 0).is_err());
    }

    #[test]
    fn dklr_on_a_certain_stream() {
        let mut s = SimulatedSource::new(1.0, 0).unwrap();
        let r = estimate_dklr(&mut s, &fixed(PlanMethod::DklrInterval, 5)).unwrap();
        assert_eq!(r.aux_negbin_total, Some(5));
        assert_eq!(r.p_hat, 0.8);
    }

    #[test]
    fn gbas_on_a_certain_stream_only_varies_through_the_gamma() {
        let plan = fixed(PlanMethod::Gbas, 5);
        let mut s = SimulatedSource::new(1.0, 0).unwrap();
        let mut rng = VariateRng::new(11);
        let r = estimate_gbas(&mut s, &plan, &mut rng).unwrap();
        assert_eq!(r.aux_negbin_total, Some(5));
        let mut rng = VariateRng::new(11);
        let g = draw_gamma(5.0, &mut rng).unwrap();
        assert_eq!(r.p_hat, 4.0 / g);
    }

    #[test]
    fn two_stage_on_a_certain_stream() {
        let planner = plan_two_stage(&RasTarget::new(0.1, 0.01).unwrap(), true, 100).unwrap();
        let mut s = SimulatedSource::new(1.0, 0).unwrap();
        let mut rng = VariateRng::new(5);
        let r = estimate_two_stage(&mut s, &planner, &mut rng).unwrap();
        let stage1 = r.stage1.as_ref().unwrap();
        assert_eq!(stage1.k_used, 76);
        assert!(r.k_used < 413);
        assert_eq!(r.samples_consumed, 76 + r.k_used);
        assert_eq!(r.samples_consumed, s.draws_consumed());
    }

    #[test]
    fn exhaustion_propagates() {
        let mut s = InMemorySource::parse(b"0001").unwrap();
        assert!(estimate_dklr(&mut s, &fixed(PlanMethod::DklrInterval, 2)).is_err());
    }
}
