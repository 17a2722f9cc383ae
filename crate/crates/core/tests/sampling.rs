use std::io::Cursor;

use bernoulli_ras::harness::{ks_one_sample, mean_and_se};
use bernoulli_ras::sampling::{
    draw_gamma, draw_gamma_integer, FileSource, InMemorySource, SampleSource, SimulatedSource,
    VariateRng,
};
use bernoulli_ras::special::{gamma_cdf, negbinom_trials_cdf, GammaParams, NegBinTrialsParams};
use bernoulli_ras::Error;
use proptest::prelude::*;

#[test]
fn replicate_streams_are_disjoint() {
    let bits = |idx| {
        let mut s = SimulatedSource::for_replicate(0.5, 11, idx).unwrap();
        (0..256).map(|_| s.next_bernoulli().unwrap()).collect::<Vec<_>>()
    };
    assert_ne!(bits(0), bits(1));
    assert_eq!(bits(3), bits(3));
    let mut a = VariateRng::for_replicate(11, 0);
    let mut b = VariateRng::for_replicate(11, 1);
    assert_ne!(a.uniform(), b.uniform());
}

#[test]
fn bit_frequency_matches_p() {
    let mut s = SimulatedSource::new(0.3, 5).unwrap();
    let n = 200_000;
    let ones = (0..n).filter(|_| s.next_bernoulli().unwrap()).count() as f64;
    let se = (0.3 * 0.7 / n as f64).sqrt();
    assert!((ones / n as f64 - 0.3).abs() < 4.0 * se);
}

#[test]
fn negbin_trials_follow_their_law() {
    // Compare the empirical CDF of T_5 at p = 0.4 against the exact CDF at
    // a few points.
    let params = NegBinTrialsParams::new(5, 0.4).unwrap();
    let mut s = SimulatedSource::new(0.4, 17).unwrap();
    let n = 20_000;
    let draws: Vec<u64> = (0..n).map(|_| s.draw_negbin_trials(5).unwrap()).collect();
    for t in [8u64, 12, 16, 24] {
        let emp = draws.iter().filter(|&&d| d <= t).count() as f64 / n as f64;
        let exact = negbinom_trials_cdf(t as f64, &params).get();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((emp - exact).abs() < 4.5 * se, "t = {t}: {emp} vs {exact}");
    }
}

#[test]
fn gamma_variates_pass_ks() {
    let mut rng = VariateRng::new(23);
    let xs: Vec<f64> = (0..5000).map(|_| draw_gamma(7.5, &mut rng).unwrap()).collect();
    let g = GammaParams::standard(7.5).unwrap();
    let ks = ks_one_sample(&xs, |x| gamma_cdf(x, &g).unwrap().get());
    assert!(!ks.rejects_at(0.01), "{ks:?}");

    let xs: Vec<f64> = (0..5000).map(|_| draw_gamma_integer(4, &mut rng).unwrap()).collect();
    let g = GammaParams::standard(4.0).unwrap();
    let ks = ks_one_sample(&xs, |x| gamma_cdf(x, &g).unwrap().get());
    assert!(!ks.rejects_at(0.01), "{ks:?}");
    let m = mean_and_se(&xs);
    assert!(m.within(4.0, 4.0));
}

#[test]
fn file_source_reports_position_of_bad_bytes() {
    let mut f = FileSource::from_reader(Cursor::new(b"10\n1x".to_vec()));
    for _ in 0..3 {
        f.next_bernoulli().unwrap();
    }
    match f.next_bernoulli() {
        Err(Error::Format { offset, byte }) => assert_eq!((offset, byte), (4, b'x')),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn exhaustion_carries_counts() {
    let mut f = FileSource::from_reader(Cursor::new(b"1 1 0 ".to_vec()));
    match f.draw_negbin_trials(3) {
        Err(Error::Exhausted { consumed, bytes_read }) => assert_eq!((consumed, bytes_read), (3, 6)),
        other => panic!("unexpected {other:?}"),
    }
    let mut m = InMemorySource::parse(b"0").unwrap();
    assert!(matches!(m.draw_geometric(), Err(Error::Exhausted { consumed: 1, .. })));
}

#[test]
fn file_source_reads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bits.txt");
    std::fs::write(&path, "0 0 1\n0 1\n").unwrap();
    let mut f = FileSource::open(&path).unwrap();
    assert_eq!(f.draw_geometric().unwrap(), 3);
    assert_eq!(f.draw_geometric().unwrap(), 2);
    assert_eq!(f.draws_consumed(), 5);
}

proptest! {
    #[test]
    fn parsing_keeps_exactly_the_bits(bits in proptest::collection::vec(any::<bool>(), 0..200),
                                      sep in "[ \n\t]{0,2}") {
        let text: String = bits.iter().map(|&b| format!("{}{}", b as u8, sep)).collect();
        let mut src = InMemorySource::parse(text.as_bytes()).unwrap();
        prop_assert_eq!(src.remaining(), bits.len());
        for &b in &bits {
            prop_assert_eq!(src.next_bernoulli().unwrap(), b);
        }
    }

    #[test]
    fn geometric_counts_sum_to_consumption(seed in any::<u64>(), k in 1u64..20) {
        let mut s = SimulatedSource::new(0.35, seed).unwrap();
        let t = s.draw_negbin_trials(k).unwrap();
        prop_assert_eq!(t, s.draws_consumed());
        prop_assert!(t >= k);
    }
}
