use super::kernels::beta_prefactor;
use super::{NegBinTrialsParams, Probability};
use crate::error::{domain, Result};

const MAX_ITER: usize = 10_000_000;

/// `(I_x(a, b), 1 - I_x(a, b))` with `y = 1 - x` supplied by the caller.
pub(crate) fn beta_pair(x: f64, y: f64, a: f64, b: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        let i = (beta_prefactor(a, b, x, y) * beta_fraction(a, b, x) / a).min(1.0);
        (i, 1.0 - i)
    } else {
        let j = (beta_prefactor(b, a, y, x) * beta_fraction(b, a, y) / b).min(1.0);
        (1.0 - j, j)
    }
}

// Continued fraction for I_x(a, b), modified Lentz.
fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
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
    h
}

fn check_beta_args(x: f64, a: f64, b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("incomplete beta needs 0 <= x <= 1, got {x}")));
    }
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(domain(format!("incomplete beta needs a, b > 0, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// ```
/// use bernoulli_ras::special::reg_inc_beta;
/// // I_x(2, 3) = 1 - (1 - x)^3 (1 + 3x)
/// assert!((reg_inc_beta(0.5, 2.0, 3.0).unwrap().get() - 0.6875).abs() < 1e-14);
/// ```
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<Probability> {
    check_beta_args(x, a, b)?;
    Ok(Probability::clamped(beta_pair(x, 1.0 - x, a, b).0))
}

/// `1 - I_x(a, b)`, computed directly when it is the small tail.
pub fn reg_inc_beta_complement(x: f64, a: f64, b: f64) -> Result<Probability> {
    check_beta_args(x, a, b)?;
    Ok(Probability::clamped(beta_pair(x, 1.0 - x, a, b).1))
}

/// `(P(T <= t), P(T > t))` for `T ~ NegBin(k, p)` counted in trials.
///
/// Real thresholds are floored: `P(T <= t) = P(T <= floor(t))`.
pub(crate) fn negbin_pair(t: f64, k: u64, p: f64) -> (f64, f64) {
    let n = t.floor();
    let kf = k as f64;
    if !(n >= kf) {
        return (0.0, 1.0);
    }
    if p >= 1.0 || n.is_infinite() {
        return (1.0, 0.0);
    }
    // P(T_k <= n) = P(at least k successes in n trials) = I_p(k, n - k + 1)
    beta_pair(p, 1.0 - p, kf, n - kf + 1.0)
}

/// `P(T_k(p) <= t)` where `T_k(p)` is the number of trials needed for `k`
/// successes.
///
/// ```
/// use bernoulli_ras::special::{negbinom_trials_cdf, NegBinTrialsParams};
/// let nb = NegBinTrialsParams::new(3, 0.5).unwrap();
/// // Below the support, and the event that the first three trials all succeed.
/// assert_eq!(negbinom_trials_cdf(2.5, &nb).get(), 0.0);
/// assert!((negbinom_trials_cdf(3.0, &nb).get() - 0.125).abs() < 1e-15);
/// ```
pub fn negbinom_trials_cdf(t: f64, params: &NegBinTrialsParams) -> Probability {
    Probability::clamped(negbin_pair(t, params.k(), params.p()).0)
}

/// `P(T_k(p) > t)`.
pub fn negbinom_trials_sf(t: f64, params: &NegBinTrialsParams) -> Probability {
    Probability::clamped(negbin_pair(t, params.k(), params.p()).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_power_closed_forms() {
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert!((reg_inc_beta(x, 1.0, 1.0).unwrap().get() - x).abs() < 1e-15);
            for &b in &[0.5, 2.0, 7.5] {
                let want = 1.0 - (1.0 - x as f64).powf(b);
                let got = reg_inc_beta(x, 1.0, b).unwrap().get();
                assert!((got - want).abs() < 1e-14, "x = {x}, b = {b}");
            }
        }
    }

    #[test]
    fn polynomial_closed_form() {
        // I_x(2, 3) = 1 - (1-x)^3 (1 + 3x), which is 11/16 at x = 1/2;
        // swapping the shapes gives the complement 5/16.
        let got = reg_inc_beta(0.5, 2.0, 3.0).unwrap().get();
        assert!((got - 11.0 / 16.0).abs() < 1e-14);
        let swapped = reg_inc_beta(0.5, 3.0, 2.0).unwrap().get();
        assert!((swapped - 5.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn negbin_point_mass_at_p_one() {
        let nb = NegBinTrialsParams::new(7, 1.0).unwrap();
        assert_eq!(negbinom_trials_cdf(6.99, &nb).get(), 0.0);
        assert_eq!(negbinom_trials_cdf(7.0, &nb).get(), 1.0);
        assert_eq!(negbinom_trials_sf(1e9, &nb).get(), 0.0);
        assert!(NegBinTrialsParams::new(7, 0.0).is_err());
        assert!(NegBinTrialsParams::new(0, 0.5).is_err());
    }

    #[test]
    fn negbin_at_support_start_is_p_to_the_k() {
        for &(k, p) in &[(1u64, 0.3), (4, 0.7), (10, 0.95)] {
            let nb = NegBinTrialsParams::new(k, p).unwrap();
            let want = p.powi(k as i32);
            assert!((negbinom_trials_cdf(k as f64, &nb).get() - want).abs() < 1e-14);
        }
    }
}
