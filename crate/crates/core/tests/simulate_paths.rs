use proptest::prelude::*;
use stable_ergo::simulate::{
    crossing_index, ks_against_stable, ks_critical_1pct, ks_two_sample, sample_clocked_path, sample_truncated_path,
    simulate_time_changed, Driver, SimConfig,
};
use stable_ergo::StableIndex;

fn stable(alpha: f64) -> Driver {
    Driver::Stable { alpha: StableIndex::new(alpha).unwrap() }
}

#[test]
fn constant_weight_clock_is_rescaled_time() {
    let cfg = SimConfig::new(stable(1.5), 0.01, 1.0, 1, 7);
    let path = sample_clocked_path(&|_| 2.5, &cfg, 0, 3.0).unwrap();
    path.check_invariants().unwrap();
    for (t, c) in path.times.iter().zip(&path.clock) {
        assert!((c - t / 2.5).abs() <= 1e-12 * (1.0 + t), "{t} {c}");
    }

    let idx = StableIndex::new(1.3).unwrap();
    let cfg = SimConfig::new(stable(1.3), 0.01, 20.0, 1, 3);
    let a = |_: f64| 4.0;
    let path = sample_truncated_path(idx, &cfg, Some(&a), 0).unwrap();
    for (t, c) in path.times.iter().zip(&path.clock) {
        assert!((c - t / 4.0).abs() <= 1e-12 * (1.0 + t));
    }
}

#[test]
fn constant_weight_marginal_is_scaled_stable() {
    // a = c gives Y_t = X_{ct}.
    let (alpha, c, t) = (1.5, 2.0, 0.5);
    let cfg = SimConfig::new(stable(alpha), 0.01, 1.0, 1, 42);
    let n = 2000;
    let scale = (c * t as f64).powf(1.0 / alpha);
    let sample: Vec<f64> =
        (0..n).map(|i| simulate_time_changed(&|_| c, &cfg, i, &[t]).unwrap()[0] / scale).collect();
    let grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.1).collect();
    let d = ks_against_stable(alpha, &sample, &grid).unwrap();
    assert!(d < 1.628 / (n as f64).sqrt(), "KS {d}");
}

#[test]
fn dt_halving_leaves_marginal_unchanged() {
    let a = |x: f64| (1.0 + x.abs()).powf(2.0);
    let run = |dt: f64, seed: u64| -> Vec<f64> {
        let cfg = SimConfig::new(stable(1.5), dt, 1.0, 1, seed);
        (0..1500).map(|i| simulate_time_changed(&a, &cfg, i, &[1.0]).unwrap()[0]).collect()
    };
    let coarse = run(0.02, 1);
    let fine = run(0.01, 2);
    let d = ks_two_sample(&coarse, &fine);
    assert!(d < ks_critical_1pct(coarse.len(), fine.len()), "KS {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn crossing_index_inverts_clock(seed in 0u64..1000, t in 0.01f64..2.0) {
        let cfg = SimConfig::new(stable(1.7), 0.01, 1.0, 1, seed);
        let path = sample_clocked_path(&|x: f64| 1.0 + x * x, &cfg, 0, 2.0).unwrap();
        let k = crossing_index(&path, t);
        prop_assert!(path.clock[k] >= t);
        prop_assert!(k == 0 || path.clock[k - 1] < t);
    }

    #[test]
    fn paths_are_reproducible(seed in 0u64..1000, idx in 0u64..64) {
        let cfg = SimConfig::new(Driver::Brownian, 0.02, 1.0, 1, seed);
        let a = |x: f64| 1.0 + x.abs();
        prop_assert_eq!(
            simulate_time_changed(&a, &cfg, idx, &[0.5, 1.0]).unwrap(),
            simulate_time_changed(&a, &cfg, idx, &[0.5, 1.0]).unwrap()
        );
    }
}
