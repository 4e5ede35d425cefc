use proptest::prelude::*;
use stable_ergo::ergodicity_mc::{fit_decay, DecayCurve, InvariantLaw, Law, Metric};
use stable_ergo::weights_rates::WeightSpec;
use stable_ergo::StableIndex;

fn curve(t: &[f64], f: impl Fn(f64) -> f64) -> DecayCurve {
    let values: Vec<f64> = t.iter().map(|&s| f(s)).collect();
    DecayCurve {
        t_grid: t.to_vec(),
        std_errors: values.iter().map(|v| 1e-3 * v).collect(),
        values,
        metric: Metric::L2Mu,
        ensemble_size: 1000,
        seed: 0,
        warnings: vec![],
    }
}

#[test]
fn fit_recovers_exponential_and_polynomial_laws() {
    let t: Vec<f64> = (1..=30).map(|k| 0.2 * k as f64).collect();
    let e = fit_decay(&curve(&t, |s| 0.7 * (-1.3 * s).exp()), None, 1, 50).unwrap();
    assert_eq!(e.law, Law::Exponential);
    assert!((e.fit(Law::Exponential).parameter - 1.3).abs() < 1e-6);
    assert!(e.exponential_beats_polynomial());

    let t: Vec<f64> = (0..25).map(|k| 0.5 * 1.25f64.powi(k)).collect();
    let p = fit_decay(&curve(&t, |s| 2.0 * s.powf(-1.5)), None, 1, 50).unwrap();
    assert_eq!(p.law, Law::Polynomial);
    assert!((p.fit(Law::Polynomial).parameter - 1.5).abs() < 1e-6);
    assert!(!p.exponential_beats_polynomial());
}

#[test]
fn squared_curve_doubles_the_exponent() {
    let t: Vec<f64> = (0..20).map(|k| 1.3f64.powi(k)).collect();
    let c = curve(&t, |s| s.powf(-0.75)).squared();
    c.check_invariants().unwrap();
    let fit = fit_decay(&c, None, 2, 20).unwrap();
    assert!((fit.fit(Law::Polynomial).parameter - 1.5).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn invariant_law_quantile_inverts_cdf(gamma in 1.1f64..4.0, u in 0.001f64..0.999) {
        let law = InvariantLaw::new(&WeightSpec::power(gamma, StableIndex::new(1.5).unwrap()).unwrap()).unwrap();
        let x = law.quantile(u);
        prop_assert!((law.cdf(x) - u).abs() < 1e-9);
        prop_assert!((law.cdf(-x) - (1.0 - u)).abs() < 1e-9);
    }

    #[test]
    fn invariant_law_cdf_monotone(gamma in 1.1f64..4.0, x in -50.0f64..50.0, dx in 0.0f64..10.0) {
        let law = InvariantLaw::new(&WeightSpec::power(gamma, StableIndex::new(1.5).unwrap()).unwrap()).unwrap();
        prop_assert!(law.cdf(x) <= law.cdf(x + dx) + 1e-15);
        prop_assert!(law.mass_outside(x.abs()) <= 1.0 + 1e-15);
    }
}
