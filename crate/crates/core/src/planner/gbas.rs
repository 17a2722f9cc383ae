use super::search::smallest_feasible_k;
use super::{Plan, PlanMethod, RasTarget, SearchOptions, TiltConfig, ACCEPT_SLACK};
use crate::error::{domain, Result};
use crate::special::gamma::gamma_pq;

/// `P(p̂/p > 1 + ε) + P(p̂/p < 1 - ε)` for the gamma scheme with `k` draws.
///
/// `p/p̂` has a `Gamma(k, (k - 1) / c)` law, so this does not depend on `p`.
pub fn gbas_error(k: u64, epsilon: f64, tilt: &TiltConfig) -> Result<f64> {
    if k == 0 {
        return Err(domain("gbas_error needs k >= 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let shape = k as f64;
    let rate = (k - 1) as f64 / tilt.c_tilt();
    let high = gamma_pq(shape, rate / (1.0 - epsilon)).1;
    let low = gamma_pq(shape, rate / (1.0 + epsilon)).0;
    Ok(high + low)
}

/// Smallest `k` for which the gamma scheme meets `target`.
///
/// ```
/// use bernoulli_ras::planner::{find_k_gbas, RasTarget, SearchOptions};
/// let t = RasTarget::new(0.1, 0.01).unwrap();
/// assert_eq!(find_k_gbas(&t, true, &SearchOptions::default()).unwrap().k, 661);
/// ```
pub fn find_k_gbas(target: &RasTarget, tilt: bool, opts: &SearchOptions) -> Result<Plan> {
    let tilt = TiltConfig::new(tilt, target.epsilon())?;
    let eps = target.epsilon();
    let delta = target.delta();
    let k = smallest_feasible_k(opts, |k| Ok(gbas_error(k, eps, &tilt)? <= delta + ACCEPT_SLACK))?;
    Ok(Plan {
        method: PlanMethod::Gbas,
        k,
        target: *target,
        tilt,
        certified_interval: Some((0.0, 1.0)),
        error_bound: Some(gbas_error(k, eps, &tilt)?),
        divisor: None,
    })
}
