//! Planner checks: published draw counts, brute-force partition maxima,
//! minimality witnesses and structural properties.

use bernoulli_ras::planner::{
    dklr_interval_error, dklr_partition_error, dklr_partition_tails, find_k_dklr, find_k_gbas,
    gbas_error, plan_two_stage, speedup_rho, tilt_value, CancelToken, PIntervalPartition,
    RasTarget, SearchOptions, TiltConfig, ACCEPT_SLACK,
};
use bernoulli_ras::special::{negbinom_trials_cdf, negbinom_trials_sf, NegBinTrialsParams};
use bernoulli_ras::Error;

fn target(e: f64, d: f64) -> RasTarget {
    RasTarget::new(e, d).unwrap()
}

fn default_search() -> SearchOptions {
    SearchOptions::default()
}

/// (p, ε, δ, k GBAS, k stage 1, k stage 2, speedup, ρ)
const TABLE: &[(f64, f64, f64, u64, u64, u64, f64, f64)] = &[
    (0.9, 0.1, 1e-2, 661, 76, 413, 1.35, 1.37),
    (0.9, 0.1, 1e-6, 2380, 239, 1317, 1.53, 1.51),
    (0.9, 0.01, 1e-6, 239_268, 2513, 66_203, 3.48, 3.48),
    (0.5, 0.1, 1e-2, 661, 76, 551, 1.05, 1.03),
    (0.5, 0.1, 1e-6, 2380, 239, 1760, 1.19, 1.13),
    (0.5, 0.01, 1e-6, 239_268, 2513, 145_055, 1.62, 1.58),
    (0.1, 0.1, 1e-2, 661, 76, 595, 0.99, 0.83),
    (0.1, 0.1, 1e-6, 2380, 239, 1901, 1.11, 0.91),
    (0.1, 0.01, 1e-6, 239_268, 2513, 191_853, 1.23, 1.03),
];

fn table_lower_bound(p: f64, e: f64) -> f64 {
    let s = e.sqrt();
    p * (1.0 - s) / (1.0 + s)
}

// 40-digit evaluations of 2ε / ((1 - ε²) ln(1 + 2ε/(1 - ε))).
const TILT_REFERENCE: &[(f64, f64)] = &[
    (0.01, 1.000_066_672_444_975_711_482_747),
    (0.1, 1.006_724_980_719_994_522_774_207),
    (0.5, 1.213_652_302_169_116_524_818_987),
];

#[test]
fn tilt_matches_high_precision_values() {
    for &(e, want) in TILT_REFERENCE {
        assert!((tilt_value(e).unwrap() - want).abs() <= 1e-12, "eps = {e}");
    }
    let sq = 0.1f64.sqrt();
    assert!((tilt_value(sq).unwrap() - 1.073_031_068_113_933_000_957_731).abs() <= 1e-12);
}

#[test]
fn tilt_exceeds_one_and_follows_its_expansion() {
    for i in 1..1000 {
        let e = i as f64 / 1000.0;
        let c = tilt_value(e).unwrap();
        assert!(c > 1.0, "eps = {e}");
        if e <= 0.2 {
            let rem = (c - 1.0 - 2.0 / 3.0 * e * e).abs();
            assert!(rem <= 2.0 * e.powi(4), "eps = {e}: remainder {rem}");
        }
    }
}

#[test]
fn gbas_draw_counts_match_the_table() {
    for &(e, d, want) in &[(0.1, 1e-2, 661u64), (0.1, 1e-6, 2380), (0.01, 1e-6, 239_268)] {
        let plan = find_k_gbas(&target(e, d), true, &default_search()).unwrap();
        assert_eq!(plan.k, want, "eps = {e}, delta = {d}");
    }
    let pilot = find_k_gbas(&target(0.1f64.sqrt(), 0.005), true, &default_search()).unwrap();
    assert_eq!(pilot.k, 76);
}

#[test]
fn two_stage_draw_counts_match_the_table() {
    for &(p, e, d, _, k1, k2, _, _) in TABLE {
        let planner = plan_two_stage(&target(e, d), true, 100).unwrap();
        assert_eq!(planner.stage1().k, k1, "stage 1 at p = {p}, eps = {e}, delta = {d}");
        let stage2 = planner.stage2_for_lower_bound(table_lower_bound(p, e)).unwrap();
        assert_eq!(stage2.k, k2, "stage 2 at p = {p}, eps = {e}, delta = {d}");
    }
}

#[test]
fn pilot_estimate_maps_to_the_table_lower_bound() {
    let e: f64 = 0.1;
    let planner = plan_two_stage(&target(e, 0.01), true, 100).unwrap();
    let p_hat1 = 0.9 * (1.0 - e.sqrt());
    assert!((planner.lower_bound(p_hat1) - table_lower_bound(0.9, e)).abs() < 1e-15);
    assert_eq!(planner.stage2(p_hat1).unwrap().k, 413);
}

#[test]
fn speedup_and_rho_columns() {
    for &(p, e, d, kg, k1, k2, speedup, rho) in TABLE {
        let got = kg as f64 / (k1 + k2) as f64;
        assert!((got - speedup).abs() <= 0.01 / 2.0 + 1e-12, "speedup at p = {p}: {got}");
        let got = speedup_rho(p, &target(e, d)).unwrap();
        assert!((got - rho).abs() <= 0.01 / 2.0 + 1e-12, "rho at p = {p}: {got}");
    }
}

/// Both tails for every subinterval with an independent loop over the
/// public distribution functions.
fn brute_force_tails(cuts: &[f64], e: f64, k: u64, c: f64) -> (f64, f64) {
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 0.0;
    for w in cuts.windows(2) {
        let (lo, up) = (w[0], w[1]);
        let at_up = NegBinTrialsParams::new(k, up).unwrap();
        let at_lo = NegBinTrialsParams::new(k, lo).unwrap();
        let t_low = (k - 1) as f64 / (lo * (1.0 - e)) / c;
        let t_high = (k - 1) as f64 / (up * (1.0 + e)) / c;
        lower = lower.max(negbinom_trials_sf(t_low, &at_up).get());
        upper = upper.max(negbinom_trials_cdf(t_high, &at_lo).get());
    }
    (lower, upper)
}

#[test]
fn partition_maximum_equals_brute_force() {
    let cases = [
        (0.9, 0.1, 100u64, true),
        (0.9, 0.1, 100, false),
        (0.4675, 0.1, 413, true),
        (0.05, 0.1, 300, true),
        (0.3, 0.3, 40, true),
        (0.2, 0.05, 2500, true),
    ];
    for &(a, e, k, tilt) in &cases {
        let tilt = TiltConfig::new(tilt, e).unwrap();
        let part = PIntervalPartition::new(a, e, 100).unwrap();
        let got = dklr_partition_tails(&part, e, k, &tilt).unwrap();
        let (lower, upper) = brute_force_tails(part.cut_points(), e, k, tilt.c_tilt());
        assert_eq!(got.lower_tail, lower, "lower tail at a = {a}, eps = {e}, k = {k}");
        assert_eq!(got.upper_tail, upper, "upper tail at a = {a}, eps = {e}, k = {k}");
        let total = dklr_partition_error(&part, e, k, &tilt).unwrap().get();
        assert!((total - (lower + upper).min(1.0)).abs() < 1e-15);
    }
}

/// P(T_2(1/2) = n) = (n - 1) / 2^n
fn negbin2_half_cdf(t: u64) -> f64 {
    (2..=t).map(|n| (n - 1) as f64 / 2f64.powi(n as i32)).sum()
}

#[test]
fn single_point_interval_by_enumeration() {
    let e = 0.5;
    // Untilted: too-small threshold 1 / (0.5 · 0.5) = 4, too-large 1 / 0.75.
    let got = dklr_interval_error(0.5, 0.5, e, 2, &TiltConfig::OFF).unwrap();
    assert!((got.lower_tail - (1.0 - negbin2_half_cdf(4))).abs() < 1e-15);
    assert_eq!(got.upper_tail, 0.0);
    // Tilted: 4 / c is about 3.30, floored to 3.
    let tilt = TiltConfig::new(true, e).unwrap();
    let got = dklr_interval_error(0.5, 0.5, e, 2, &tilt).unwrap();
    assert!((got.lower_tail - (1.0 - negbin2_half_cdf(3))).abs() < 1e-15);
    assert_eq!(got.upper_tail, 0.0);
}

#[test]
fn near_one_interval_is_a_point_mass() {
    let part = PIntervalPartition::from_cut_points(vec![1.0 - 1e-12, 1.0]).unwrap();
    assert_eq!(part.len(), 1);
    let tilt = TiltConfig::new(true, 0.1).unwrap();
    let err = dklr_partition_error(&part, 0.1, 50, &tilt).unwrap().get();
    assert!(err < 1e-9, "error {err}");
}

#[test]
fn interval_error_rejects_bad_input() {
    let t = TiltConfig::OFF;
    assert!(dklr_interval_error(0.5, 0.4, 0.1, 10, &t).is_err());
    assert!(dklr_interval_error(0.0, 0.4, 0.1, 10, &t).is_err());
    assert!(dklr_interval_error(0.5, 1.1, 0.1, 10, &t).is_err());
    assert!(dklr_interval_error(0.4, 0.5, 0.1, 1, &t).is_err());
}

#[test]
fn table_plans_carry_minimality_witnesses() {
    for &(p, e, d, _, _, _, _, _) in TABLE.iter().filter(|r| r.1 == 0.1) {
        let half = target(e, d / 2.0);
        let a = table_lower_bound(p, e);
        let plan = find_k_dklr(a, &half, true, 100, &default_search()).unwrap();
        let part = PIntervalPartition::new(a, e, 100).unwrap();
        let at = |k| dklr_partition_tails(&part, e, k, &plan.tilt).unwrap().total();
        assert!(at(plan.k) <= half.delta() + ACCEPT_SLACK);
        assert!(at(plan.k - 1) > half.delta());
        assert_eq!(plan.error_bound, Some(at(plan.k)));
        assert_eq!(plan.certified_interval, Some((a, 1.0)));
    }
    for &(e, d) in &[(0.1, 1e-2), (0.05, 1e-3), (0.3, 0.2)] {
        let plan = find_k_gbas(&target(e, d), true, &default_search()).unwrap();
        assert!(gbas_error(plan.k, e, &plan.tilt).unwrap() <= d + ACCEPT_SLACK);
        assert!(gbas_error(plan.k - 1, e, &plan.tilt).unwrap() > d);
    }
}

#[test]
fn first_feasible_k_below_an_oscillation_band() {
    // The bound dips under δ at 66203, rises above it again, and only stays
    // below it a few values later; the planner must report the first dip.
    let e = 0.01;
    let a = table_lower_bound(0.9, e);
    let part = PIntervalPartition::new(a, e, 100).unwrap();
    let tilt = TiltConfig::new(true, e).unwrap();
    let delta = 5e-7;
    let at = |k| dklr_partition_tails(&part, e, k, &tilt).unwrap().total();
    assert!(at(66_203) <= delta);
    assert!(at(66_204) > delta);
    assert!((66_150..66_203).all(|k| at(k) > delta));
}

#[test]
fn gbas_plans_are_monotone_in_tolerances() {
    let eps = [0.05, 0.1, 0.2, 0.3];
    let deltas = [1e-4, 1e-3, 1e-2, 0.05, 0.1];
    let k = |e: f64, d: f64| find_k_gbas(&target(e, d), true, &default_search()).unwrap().k;
    for &e in &eps {
        for w in deltas.windows(2) {
            assert!(k(e, w[1]) <= k(e, w[0]), "delta at eps = {e}");
        }
    }
    for &d in &deltas {
        for w in eps.windows(2) {
            assert!(k(w[1], d) <= k(w[0], d), "eps at delta = {d}");
        }
    }
}

// Each subinterval pairs its threshold with the opposite endpoint's
// distribution, so a subinterval's value sits below the worst point inside
// it and splitting can only raise the maximum toward the pointwise one.
#[test]
fn refining_the_partition_never_lowers_the_bound() {
    let e = 0.1;
    let tilt = TiltConfig::new(true, e).unwrap();
    for &(a, k) in &[(0.4675, 413u64), (0.9, 100), (0.1, 600)] {
        let coarse = PIntervalPartition::new(a, e, 100).unwrap();
        let mut cuts = Vec::new();
        for w in coarse.cut_points().windows(2) {
            cuts.push(w[0]);
            cuts.push(0.5 * (w[0] + w[1]));
        }
        cuts.push(1.0);
        let fine = PIntervalPartition::from_cut_points(cuts).unwrap();
        let c = dklr_partition_tails(&coarse, e, k, &tilt).unwrap();
        let f = dklr_partition_tails(&fine, e, k, &tilt).unwrap();
        assert!(f.lower_tail + 1e-12 >= c.lower_tail, "a = {a}");
        assert!(f.upper_tail + 1e-12 >= c.upper_tail, "a = {a}");
    }
}

#[test]
fn stage_two_near_one_needs_few_draws() {
    let planner = plan_two_stage(&target(0.1, 0.01), true, 100).unwrap();
    let wide = planner.stage2_for_lower_bound(0.3).unwrap().k;
    let narrow = planner.stage2_for_lower_bound(0.999).unwrap().k;
    assert!(narrow < wide / 10, "{narrow} vs {wide}");
}

#[test]
fn stage_two_rejects_degenerate_pilots() {
    let planner = plan_two_stage(&target(0.1, 0.01), true, 100).unwrap();
    assert!(planner.stage2(0.0).is_err());
    assert!(planner.stage2(-0.2).is_err());
    assert!(planner.stage2(1.5).is_err());
    assert!(planner.stage2_for_lower_bound(1.0).is_err());
}

#[test]
fn ceiling_and_cancellation_surface_as_errors() {
    let t = target(0.01, 1e-6);
    let opts = SearchOptions { ceiling: 1000, ..Default::default() };
    assert!(matches!(find_k_gbas(&t, true, &opts), Err(Error::CeilingExceeded { ceiling: 1000 })));
    let token = CancelToken::new();
    token.cancel();
    let opts = SearchOptions { cancel: Some(token), ..Default::default() };
    assert!(matches!(find_k_dklr(0.5, &t, true, 100, &opts), Err(Error::Cancelled)));
}

#[test]
fn hint_skips_values_at_or_below_it() {
    let t = target(0.1, 1e-2);
    let plan = find_k_gbas(&t, true, &SearchOptions::with_hint(660)).unwrap();
    assert_eq!(plan.k, 661);
    let plan = find_k_gbas(&t, true, &SearchOptions::with_hint(700)).unwrap();
    assert_eq!(plan.k, 701);
}
