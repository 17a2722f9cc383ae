//! The shifted-grid unbiased estimate.
//!
//! Given the negative binomial total `M` from a gamma-scheme run, the
//! estimate `(k - 1) / Gamma(M, 1)` is unbiased but random. Replacing the
//! single gamma variate by an average of `1 / F⁻¹(U_i)` over a randomly
//! shifted lattice `U_i = (i + U) / n` keeps the estimate unbiased (each
//! `U_i` is uniform) while making it nearly deterministic given `M`.
//!
//! Because `1 / F⁻¹(u)` decreases in `u`, evaluating the lattice at the two
//! ends of each cell brackets every shift in between; [`ratio_bound`] turns
//! that into a bound on how far the unbiased estimate can drift from the
//! biased one `(k - 1) / M`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimators::{EstimateMethod, EstimateReport};
use crate::planner::TiltConfig;
use crate::sampling::{SampleSource, UniformDraw, VariateRng};
use crate::special::{gamma_quantiles_sorted, GammaParams};

/// The lattice `(i + shift) / n`, `i = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    shift: UniformDraw,
    points: Vec<f64>,
}

impl GridSpec {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn shift(&self) -> UniformDraw {
        self.shift
    }

    /// Grid points in increasing order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Builds the shifted lattice.
///
/// ```
/// use bernoulli_ras::sampling::UniformDraw;
/// use bernoulli_ras::unbiased::make_grid;
/// let g = make_grid(4, UniformDraw::new(0.9).unwrap()).unwrap();
/// assert_eq!(g.points(), &[0.225, 0.475, 0.725, 0.975]);
/// ```
pub fn make_grid(n: usize, shift: UniformDraw) -> Result<GridSpec> {
    if n == 0 {
        return Err(domain("grid size must be positive"));
    }
    let nf = n as f64;
    let points = (0..n).map(|i| (i as f64 + shift.value()) / nf).collect();
    Ok(GridSpec { shift, points })
}

// Neumaier's compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

// mean_i 1 / F⁻¹(u_i) for Gamma(m, 1), `us` ascending in (0, 1).
fn mean_inverse_quantile(m: u64, us: &[f64]) -> Result<f64> {
    let g = GammaParams::standard(m as f64)?;
    let qs = gamma_quantiles_sorted(us, &g)?;
    Ok(compensated_sum(qs.iter().map(|q| 1.0 / q)) / us.len() as f64)
}

/// `M · mean_i 1 / F⁻¹(U_i)`: the ratio of the unbiased estimate to the
/// biased one `(k - 1) / M`.
pub fn grid_ratio(m: u64, grid: &GridSpec) -> Result<f64> {
    if m == 0 {
        return Err(domain("M must be positive"));
    }
    let us: Vec<f64> = grid
        .points
        .iter()
        .map(|&u| if u == 0.0 { f64::from_bits(1) } else { u })
        .collect();
    Ok(m as f64 * mean_inverse_quantile(m, &us)?)
}

/// `(k - 1) · mean_i 1 / F⁻¹(U_i)` with `F` the `Gamma(M, 1)` distribution.
pub fn unbiased_estimate(m: u64, k: u64, grid: &GridSpec) -> Result<f64> {
    if k < 2 {
        return Err(domain("the unbiased estimate needs k >= 2"));
    }
    Ok((k - 1) as f64 * grid_ratio(m, grid)? / m as f64)
}

/// Bound `x` on `|r - 1|` for `r` the grid ratio, valid whenever the shift
/// keeps every point at least `δ₁/2` from its cell's ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBound {
    pub m: u64,
    pub n: usize,
    pub delta1: f64,
    pub x: f64,
}

impl RatioBound {
    /// The shifts `U` the bound covers: `[nδ₁/2, 1 - nδ₁/2]`. The excluded
    /// set has probability `nδ₁`.
    pub fn certified_shifts(&self) -> (f64, f64) {
        let half = self.n as f64 * self.delta1 / 2.0;
        (half, 1.0 - half)
    }

    pub fn covers(&self, shift: UniformDraw) -> bool {
        let (lo, hi) = self.certified_shifts();
        (lo..=hi).contains(&shift.value())
    }
}

/// The largest deviation of the grid ratio from 1 over the certified
/// shifts, found by placing every point `δ₁/2` inside either end of its cell.
///
/// ```
/// use bernoulli_ras::unbiased::ratio_bound;
/// let b = ratio_bound(10_000, 100, 1e-8).unwrap();
/// assert!((b.x - 0.000_689_90).abs() < 1e-7);
/// ```
pub fn ratio_bound(m: u64, n: usize, delta1: f64) -> Result<RatioBound> {
    if m == 0 || n == 0 {
        return Err(domain("ratio bound needs M >= 1 and n >= 1"));
    }
    if !(delta1 > 0.0 && delta1 < 1.0) {
        return Err(domain(format!("delta1 must lie in (0, 1), got {delta1}")));
    }
    let nf = n as f64;
    if delta1 / 2.0 >= 1.0 / nf {
        return Err(domain(format!("delta1 / 2 = {} must be below the cell width 1/n", delta1 / 2.0)));
    }
    let low: Vec<f64> = (0..n).map(|i| i as f64 / nf + delta1 / 2.0).collect();
    let high: Vec<f64> = (0..n).map(|i| i as f64 / nf + 1.0 / nf - delta1 / 2.0).collect();
    let mf = m as f64;
    let lower = (1.0 - mf * mean_inverse_quantile(m, &low)?).abs();
    let upper = (1.0 - mf * mean_inverse_quantile(m, &high)?).abs();
    Ok(RatioBound { m, n, delta1, x: lower.max(upper) })
}

/// A gamma-scheme run whose gamma variate is replaced by the shifted-grid
/// average. No tilting is applied; the estimate is unbiased for `p`.
pub fn estimate_unbiased<S: SampleSource>(
    source: &mut S,
    k: u64,
    n: usize,
    rng: &mut VariateRng,
) -> Result<EstimateReport> {
    if k < 2 {
        return Err(domain("the unbiased estimate needs k >= 2"));
    }
    let start = source.draws_consumed();
    let m = source.draw_negbin_trials(k)?;
    let grid = make_grid(n, rng.uniform())?;
    Ok(EstimateReport {
        method: EstimateMethod::Unbiased,
        p_hat: unbiased_estimate(m, k, &grid)?,
        k_used: k,
        samples_consumed: source.draws_consumed() - start,
        tilt: TiltConfig::OFF,
        aux_negbin_total: Some(m),
        stage1: None,
        lower_bound: None,
        lower_bound_clamped: false,
        target: None,
    })
}
