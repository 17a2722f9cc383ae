//! The negative binomial scheme certified on an interval `[a, 1]`.
//!
//! With `T_k(p)` the trials needed for `k` successes and `p̂ = (k-1)/(c T)`,
//! the two failure events on a subinterval `[lo, up]` are bounded by
//!
//! * lower tail: `P(T_k(up) > (k-1) / (lo (1-ε) c))`,
//! * upper tail: `P(T_k(lo) <= (k-1) / (up (1+ε) c))`.
//!
//! The partition error is the largest lower tail plus the largest upper
//! tail over all subintervals.

use serde::{Deserialize, Serialize};

use super::search::smallest_feasible_k;
use super::{Plan, PlanMethod, RasTarget, SearchOptions, TiltConfig, ACCEPT_SLACK};
use crate::error::{domain, Result};
use crate::special::beta::negbin_pair;
use crate::special::Probability;

/// Cut points `a = x_0 < x_1 < ... < x_m = 1` of equal width
/// `(1 - a) ε / divisor`, the last one shortened to end at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PIntervalPartition {
    cut_points: Vec<f64>,
}

impl PIntervalPartition {
    pub fn new(a: f64, epsilon: f64, divisor: u32) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(domain(format!("partition needs 0 < a < 1, got {a}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if divisor == 0 {
            return Err(domain("partition divisor must be positive"));
        }
        let width = (1.0 - a) * epsilon / divisor as f64;
        let m = ((1.0 - a) / width - 1e-9).ceil().max(1.0) as usize;
        let mut cut_points: Vec<f64> = (0..m).map(|i| a + i as f64 * width).collect();
        cut_points.push(1.0);
        Ok(PIntervalPartition { cut_points })
    }

    /// A partition with explicit cut points, which must increase strictly
    /// from some `a > 0` to exactly 1.
    pub fn from_cut_points(cut_points: Vec<f64>) -> Result<Self> {
        if cut_points.len() < 2 {
            return Err(domain("a partition needs at least two cut points"));
        }
        if !(cut_points[0] > 0.0) || *cut_points.last().unwrap() != 1.0 {
            return Err(domain("cut points must run from a > 0 to 1"));
        }
        if cut_points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("cut points must increase strictly"));
        }
        Ok(PIntervalPartition { cut_points })
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    /// Number of subintervals.
    pub fn len(&self) -> usize {
        self.cut_points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `i`-th subinterval `[x_i, x_{i+1}]`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.cut_points[i], self.cut_points[i + 1])
    }

    pub fn lower_end(&self) -> f64 {
        self.cut_points[0]
    }
}

/// The two tail bounds of a subinterval, or their maxima over a partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPair {
    pub lower_tail: f64,
    pub upper_tail: f64,
}

impl TailPair {
    pub fn total(&self) -> f64 {
        self.lower_tail + self.upper_tail
    }
}

struct Thresholds {
    k: u64,
    num: f64,
    eps: f64,
}

impl Thresholds {
    fn new(k: u64, epsilon: f64, tilt: &TiltConfig) -> Self {
        Thresholds { k, num: (k - 1) as f64 / tilt.c_tilt(), eps: epsilon }
    }

    // P(T_k(up) > (k-1) / (lo (1-ε) c))
    fn lower(&self, lo: f64, up: f64) -> f64 {
        negbin_pair(self.num / (lo * (1.0 - self.eps)), self.k, up).1
    }

    // P(T_k(lo) <= (k-1) / (up (1+ε) c))
    fn upper(&self, lo: f64, up: f64) -> f64 {
        negbin_pair(self.num / (up * (1.0 + self.eps)), self.k, lo).0
    }
}

fn check_k_eps(k: u64, epsilon: f64) -> Result<()> {
    if k < 2 {
        return Err(domain("the negative binomial bound needs k >= 2"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Tail bounds for `p` anywhere in `[lo, up]`.
pub fn dklr_interval_error(
    lo: f64,
    up: f64,
    epsilon: f64,
    k: u64,
    tilt: &TiltConfig,
) -> Result<TailPair> {
    check_k_eps(k, epsilon)?;
    if !(lo > 0.0 && lo <= up && up <= 1.0) {
        return Err(domain(format!("need 0 < lo <= up <= 1, got [{lo}, {up}]")));
    }
    let th = Thresholds::new(k, epsilon, tilt);
    Ok(TailPair { lower_tail: th.lower(lo, up), upper_tail: th.upper(lo, up) })
}

// Largest leaf value over subintervals 0..m. `bound(s, e)` must dominate
// `bound(i, i)` for every s <= i <= e and equal it when s == e.
// `seed` is a subinterval likely to be near the maximum; evaluating it
// first lets most blocks be pruned. Returns the maximum and its index, or
// stops early with some leaf value above `stop_above`.
fn block_max(
    m: usize,
    seed: usize,
    stop_above: f64,
    bound: impl Fn(usize, usize) -> f64,
) -> (f64, usize) {
    let seed = seed.min(m - 1);
    let mut best = bound(seed, seed);
    let mut arg = seed;
    let mut stack = vec![(0usize, m - 1)];
    while let Some((s, e)) = stack.pop() {
        if best > stop_above {
            break;
        }
        let b = bound(s, e);
        if b <= best {
            continue;
        }
        if s == e {
            best = b;
            arg = s;
            continue;
        }
        let mid = s + (e - s) / 2;
        stack.push((mid + 1, e));
        stack.push((s, mid));
    }
    (best, arg)
}

/// Maximizing subintervals of the two tails, carried between evaluations
/// at nearby `k` to warm start the pruning.
#[derive(Debug, Clone, Copy, Default)]
struct ArgMax {
    lower: usize,
    upper: usize,
}

fn partition_tails(
    partition: &PIntervalPartition,
    th: &Thresholds,
    seeds: &mut ArgMax,
) -> TailPair {
    partition_tails_until(partition, th, seeds, f64::INFINITY)
}

// Exact maxima when their sum is at most `limit`; otherwise a pair whose
// sum already exceeds `limit`.
fn partition_tails_until(
    partition: &PIntervalPartition,
    th: &Thresholds,
    seeds: &mut ArgMax,
    limit: f64,
) -> TailPair {
    let x = partition.cut_points();
    let m = partition.len();
    // Both tails grow with lo and shrink with up, so a block is bounded by
    // its largest lower end and its smallest upper end.
    let lower_bound = |s: usize, e: usize| th.lower(x[e], x[s + 1]);
    let upper_bound = |s: usize, e: usize| th.upper(x[e], x[s + 1]);
    let up_seed = upper_bound(seeds.upper.min(m - 1), seeds.upper.min(m - 1));
    let (lower_tail, lower) = block_max(m, seeds.lower, limit - up_seed, lower_bound);
    let (upper_tail, upper) = block_max(m, seeds.upper, limit - lower_tail, upper_bound);
    *seeds = ArgMax { lower, upper };
    TailPair { lower_tail, upper_tail }
}

/// Largest lower-tail and upper-tail bounds over every subinterval.
///
/// Both bounds are monotone in the subinterval endpoints, so a block of
/// consecutive subintervals is bounded by pairing its extreme endpoints.
/// Blocks that cannot beat the running maximum are skipped; the result is
/// the exact maximum, not an approximation.
pub fn dklr_partition_tails(
    partition: &PIntervalPartition,
    epsilon: f64,
    k: u64,
    tilt: &TiltConfig,
) -> Result<TailPair> {
    check_k_eps(k, epsilon)?;
    let th = Thresholds::new(k, epsilon, tilt);
    Ok(partition_tails(partition, &th, &mut ArgMax::default()))
}

/// Error bound for the whole partition: the sum of the two tail maxima,
/// capped at 1.
pub fn dklr_partition_error(
    partition: &PIntervalPartition,
    epsilon: f64,
    k: u64,
    tilt: &TiltConfig,
) -> Result<Probability> {
    let tails = dklr_partition_tails(partition, epsilon, k, tilt)?;
    Ok(Probability::clamped(tails.total().min(1.0)))
}

/// Smallest `k` for which the negative binomial scheme meets `target` for
/// every `p` in `[a, 1]`.
pub fn find_k_dklr(
    a: f64,
    target: &RasTarget,
    tilt: bool,
    divisor: u32,
    opts: &SearchOptions,
) -> Result<Plan> {
    let eps = target.epsilon();
    let tilt = TiltConfig::new(tilt, eps)?;
    let partition = PIntervalPartition::new(a, eps, divisor)?;
    let delta = target.delta() + ACCEPT_SLACK;
    let mut seeds = ArgMax::default();
    let k = smallest_feasible_k(opts, |k| {
        let th = Thresholds::new(k, eps, &tilt);
        Ok(partition_tails_until(&partition, &th, &mut seeds, delta).total() <= delta)
    })?;
    Ok(Plan {
        method: PlanMethod::DklrInterval,
        k,
        target: *target,
        tilt,
        certified_interval: Some((a, 1.0)),
        error_bound: Some(dklr_partition_tails(&partition, eps, k, &tilt)?.total()),
        divisor: Some(divisor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_shape() {
        let p = PIntervalPartition::new(0.5, 0.1, 100).unwrap();
        assert_eq!(p.len(), 1000);
        assert_eq!(p.lower_end(), 0.5);
        assert_eq!(*p.cut_points().last().unwrap(), 1.0);
        assert!(p.cut_points().windows(2).all(|w| w[0] < w[1]));
        let widths: Vec<f64> = p.cut_points().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(widths.iter().all(|w| *w <= 0.5 * 0.1 / 100.0 + 1e-15));
    }

    #[test]
    fn explicit_cut_points_are_validated() {
        assert!(PIntervalPartition::from_cut_points(vec![0.5, 1.0]).is_ok());
        assert!(PIntervalPartition::from_cut_points(vec![1.0]).is_err());
        assert!(PIntervalPartition::from_cut_points(vec![0.0, 1.0]).is_err());
        assert!(PIntervalPartition::from_cut_points(vec![0.5, 0.9]).is_err());
        assert!(PIntervalPartition::from_cut_points(vec![0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn partition_rejects_bad_input() {
        assert!(PIntervalPartition::new(0.0, 0.1, 100).is_err());
        assert!(PIntervalPartition::new(1.0, 0.1, 100).is_err());
        assert!(PIntervalPartition::new(0.5, 0.1, 0).is_err());
    }

    #[test]
    fn block_max_matches_linear_scan() {
        let vals = [0.3, 0.9, 0.1, 0.95, 0.2, 0.95, 0.0];
        for seed in 0..vals.len() {
            let got = block_max(vals.len(), seed, f64::INFINITY, |s, e| {
                vals[s..=e].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            });
            assert_eq!(got.0, 0.95);
        }
    }
}
