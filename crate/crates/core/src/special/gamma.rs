use super::kernels::{ln_gamma, ln_poisson_term, normal_quantile};
use super::{GammaParams, Probability};
use crate::error::{domain, Result};

const MAX_ITER: usize = 10_000_000;

/// Both regularized incomplete gamma functions `(P(a, x), Q(a, x))`.
///
/// The smaller of the two is always the one computed directly.
pub(crate) fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = upper_fraction(a, x);
        (1.0 - q, q)
    }
}

// P(a, x) = x^a e^{-x} / Γ(a+1) · Σ_n x^n / ((a+1)···(a+n))
fn lower_series(a: f64, x: f64) -> f64 {
    let ln_pre = ln_poisson_term(a, x);
    if ln_pre < -746.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 1.0;
    for _ in 0..MAX_ITER {
        term *= x / (a + n);
        sum += term;
        if term <= sum * 0.5 * f64::EPSILON {
            break;
        }
        n += 1.0;
    }
    (ln_pre.exp() * sum).min(1.0)
}

// Q(a, x) by the Legendre continued fraction, modified Lentz.
fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let ln_pre = ln_poisson_term(a, x) + a.ln();
    if ln_pre < -746.0 {
        return 0.0;
    }
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    (ln_pre.exp() * h).min(1.0)
}

/// Density of Gamma(a, 1) at `x > 0`.
fn standard_density(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if a < 1.0 { f64::INFINITY } else if a == 1.0 { 1.0 } else { 0.0 };
    }
    (ln_poisson_term(a, x) + a.ln() - x.ln()).exp()
}

fn check_shape_and_x(shape: f64, x: f64) -> Result<()> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(domain(format!("incomplete gamma needs shape > 0, got {shape}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma function `P(shape, x)`.
///
/// ```
/// use bernoulli_ras::special::reg_inc_gamma_lower;
/// let p = reg_inc_gamma_lower(2.0, 1.0).unwrap().get();
/// assert!((p - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-15);
/// ```
pub fn reg_inc_gamma_lower(shape: f64, x: f64) -> Result<Probability> {
    check_shape_and_x(shape, x)?;
    Ok(Probability::clamped(gamma_pq(shape, x).0))
}

/// Regularized upper incomplete gamma function `Q(shape, x) = 1 - P(shape, x)`,
/// accurate in relative terms when it is small.
pub fn reg_inc_gamma_upper(shape: f64, x: f64) -> Result<Probability> {
    check_shape_and_x(shape, x)?;
    Ok(Probability::clamped(gamma_pq(shape, x).1))
}

/// `P(X <= x)` for `X ~ Gamma(shape, rate)`. Negative `x` gives 0.
pub fn gamma_cdf(x: f64, params: &GammaParams) -> Result<Probability> {
    if x.is_nan() {
        return Err(domain("gamma_cdf at NaN"));
    }
    Ok(Probability::clamped(gamma_pq(params.shape(), (x * params.rate()).max(0.0)).0))
}

/// `P(X > x)` for `X ~ Gamma(shape, rate)`.
pub fn gamma_sf(x: f64, params: &GammaParams) -> Result<Probability> {
    if x.is_nan() {
        return Err(domain("gamma_sf at NaN"));
    }
    Ok(Probability::clamped(gamma_pq(params.shape(), (x * params.rate()).max(0.0)).1))
}

/// Quantile of `Gamma(shape, rate)`: the `x` with `gamma_cdf(x) = u`.
///
/// Seeded by the Wilson–Hilferty approximation, bracketed by expansion, and
/// polished with Newton steps that fall back to bisection whenever they
/// leave the bracket.
pub fn gamma_quantile(u: f64, params: &GammaParams) -> Result<f64> {
    check_open_unit(u)?;
    Ok(standard_quantile(params.shape(), u, None) / params.rate())
}

/// Quantiles for an ascending slice of probabilities, each solve warm
/// started from the previous root.
pub fn gamma_quantiles_sorted(us: &[f64], params: &GammaParams) -> Result<Vec<f64>> {
    let a = params.shape();
    let mut out = Vec::with_capacity(us.len());
    let mut prev: Option<(f64, f64)> = None;
    for &u in us {
        check_open_unit(u)?;
        let start = match prev {
            Some((pu, px)) if u >= pu && px > 0.0 => {
                let dens = standard_density(a, px);
                let step = if dens > 0.0 { (u - pu) / dens } else { 0.0 };
                Some(px + step)
            }
            _ => None,
        };
        let x = standard_quantile(a, u, start);
        prev = Some((u, x));
        out.push(x / params.rate());
    }
    Ok(out)
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("quantile level must lie in (0, 1), got {u}")))
    }
}

fn initial_guess(a: f64, u: f64) -> f64 {
    // Lower-tail power approximation P(a, x) ≈ x^a / Γ(a + 1).
    let small = ((u.ln() + ln_gamma(a + 1.0)) / a).exp();
    if a < 1.0 {
        return small;
    }
    let z = normal_quantile(u);
    let t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
    let wh = a * t * t * t;
    if wh > 0.0 && wh.is_finite() {
        wh
    } else {
        small
    }
}

/// Root of `P(a, x) = u` for the standard (rate 1) gamma.
pub(crate) fn standard_quantile(a: f64, u: f64, start: Option<f64>) -> f64 {
    // Work with whichever tail is smaller so that u near 1 keeps its digits.
    let upper = u > 0.5;
    let target = if upper { 1.0 - u } else { u };
    let residual = |x: f64| {
        let (p, q) = gamma_pq(a, x);
        if upper {
            target - q
        } else {
            p - target
        }
    };

    let x0 = match start {
        Some(s) if s > 0.0 && s.is_finite() => s,
        _ => initial_guess(a, u),
    };
    let r0 = residual(x0);
    if r0 == 0.0 {
        return x0;
    }

    let (mut lo, mut hi) = if r0 < 0.0 {
        let mut lo = x0;
        let mut step = a.sqrt().max(x0 * 1e-3).max(1e-300);
        let mut hi = x0 + step;
        while residual(hi) < 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
        (lo, hi)
    } else {
        let mut hi = x0;
        let mut lo = x0 * 0.5;
        while residual(lo) > 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                lo = 0.0;
                break;
            }
        }
        (lo, hi)
    };

    let mut x = if r0 < 0.0 { lo } else { hi };
    for _ in 0..400 {
        let r = residual(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let dens = standard_density(a, x);
        let newton = x - r / dens;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() || hi - lo <= 2.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}
