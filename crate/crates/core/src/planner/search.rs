//! Smallest feasible `k` above a hint.

use std::collections::HashMap;

use super::SearchOptions;
use crate::error::{Error, Result};

/// Returns the smallest `k > opts.min_k_hint` (and `k >= 2`) for which
/// `feasible` holds, assuming feasibility is eventually permanent.
///
/// Brackets by doubling, bisects, then walks down from the answer until
/// `opts.rescan_window` consecutive values below it are infeasible. The
/// walk matters: floored thresholds make the bound oscillate in `k`, so
/// feasible and infeasible values interleave in a band just above the
/// first feasible one.
pub(crate) fn smallest_feasible_k(
    opts: &SearchOptions,
    mut feasible: impl FnMut(u64) -> Result<bool>,
) -> Result<u64> {
    let first = opts.min_k_hint.saturating_add(1).max(2);
    if first > opts.ceiling {
        return Err(Error::CeilingExceeded { ceiling: opts.ceiling });
    }
    let mut cache: HashMap<u64, bool> = HashMap::new();
    let mut check = |k: u64| -> Result<bool> {
        if let Some(&v) = cache.get(&k) {
            return Ok(v);
        }
        if opts.cancel.as_ref().is_some_and(|c| c.is_cancelled()) {
            return Err(Error::Cancelled);
        }
        let v = feasible(k)?;
        cache.insert(k, v);
        Ok(v)
    };

    // `below` is the largest value known (or assumed) infeasible.
    let mut below = first - 1;
    let mut hi = first;
    let mut step = 1u64;
    while !check(hi)? {
        below = hi;
        if hi >= opts.ceiling {
            return Err(Error::CeilingExceeded { ceiling: opts.ceiling });
        }
        hi = below.saturating_add(step).min(opts.ceiling);
        step = step.saturating_mul(2);
    }
    while hi - below > 1 {
        let mid = below + (hi - below) / 2;
        if check(mid)? {
            hi = mid;
        } else {
            below = mid;
        }
    }

    let mut answer = hi;
    let mut run = 0;
    let mut k = answer;
    while run < opts.rescan_window.max(1) && k > first {
        k -= 1;
        if check(k)? {
            answer = k;
            run = 0;
        } else {
            run += 1;
        }
    }
    Ok(answer)
}
