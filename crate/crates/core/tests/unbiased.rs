use std::time::{Duration, Instant};

use bernoulli_ras::harness::{mean_and_se, regenerate_table2};
use bernoulli_ras::sampling::{SimulatedSource, UniformDraw, VariateRng};
use bernoulli_ras::unbiased::{estimate_unbiased, grid_ratio, make_grid, ratio_bound};
use proptest::prelude::*;

const TABLE2: [(u64, usize, f64, f64); 5] = [
    (10_000, 1000, 1e-6, 0.000_149_67),
    (10_000, 10_000, 1e-6, 0.000_104_91),
    (10_000, 1000, 1e-8, 0.000_158_71),
    (10_000, 100, 1e-8, 0.000_689_90),
    (100_000, 1000, 1e-8, 0.000_028_26),
];

#[test]
fn ratio_bound_table() {
    let start = Instant::now();
    let rows = regenerate_table2().unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(rows.len(), TABLE2.len());
    for (row, &(m, n, d, x)) in rows.iter().zip(&TABLE2) {
        assert_eq!((row.m, row.n, row.delta1), (m, n, d));
        assert!((row.x - x).abs() < 1e-7, "({m}, {n}, {d}): {}", row.x);
    }
}

#[test]
fn ratio_bound_shrinks_with_n_and_m() {
    let x = |m, n| ratio_bound(m, n, 1e-8).unwrap().x;
    assert!(x(10_000, 1000) <= x(10_000, 100));
    assert!(x(100_000, 1000) <= x(10_000, 1000));
}

#[test]
fn certified_shifts_stay_within_the_bound() {
    let b = ratio_bound(10_000, 100, 1e-8).unwrap();
    let (lo, hi) = b.certified_shifts();
    for i in 0..=20 {
        let u = lo + (hi - lo) * i as f64 / 20.0;
        let g = make_grid(100, UniformDraw::new(u).unwrap()).unwrap();
        let r = grid_ratio(10_000, &g).unwrap();
        assert!((r - 1.0).abs() <= b.x * (1.0 + 1e-9), "shift {u}: {r}");
    }
}

#[test]
fn unbiased_estimate_has_mean_p() {
    let p = 0.3;
    let xs: Vec<f64> = (0..3000)
        .map(|i| {
            let mut s = SimulatedSource::for_replicate(p, 61, i).unwrap();
            let mut rng = VariateRng::for_replicate(61, i);
            estimate_unbiased(&mut s, 6, 64, &mut rng).unwrap().p_hat
        })
        .collect();
    let m = mean_and_se(&xs);
    assert!(m.within(p, 4.0), "{m:?}");
}

proptest! {
    #[test]
    fn grid_points_are_sorted_and_spaced(n in 1usize..500, u in 0.0f64..1.0) {
        let g = make_grid(n, UniformDraw::new(u).unwrap()).unwrap();
        let pts = g.points();
        prop_assert_eq!(pts.len(), n);
        prop_assert!(pts[0] >= 0.0 && pts[n - 1] < 1.0);
        for w in pts.windows(2) {
            prop_assert!((w[1] - w[0] - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_ratio_decreases_in_the_shift(m in 2u64..2000, a in 0.0f64..0.5, b in 0.5f64..1.0) {
        let r = |u| grid_ratio(m, &make_grid(16, UniformDraw::new(u).unwrap()).unwrap()).unwrap();
        prop_assert!(r(a) >= r(b));
    }
}
