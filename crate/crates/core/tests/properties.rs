mod common;

use proptest::prelude::*;

use tpplab::diagnose::{ripley_k, wasserstein_1d};
use tpplab::evaluate::{mape, occupancy_probability, roc_auc};
use tpplab::{EventSequence, ModelFamily, ParamSet};

fn arb_theta() -> impl Strategy<Value = ParamSet> {
    prop_oneof![
        (0.01..3.0f64).prop_map(|m| ParamSet::hpp(m).unwrap()),
        (0.01..2.0f64, 0.2..2.5f64).prop_map(|(a, k)| ParamSet::nhpp(a, k).unwrap()),
        (0.01..1.0f64, 0.0..0.95f64, 0.05..5.0f64).prop_map(|(m, a, b)| ParamSet::hawkes_exp(m, a, b).unwrap()),
        (0.01..1.0f64, 0.0..0.5f64, 0.05..5.0f64, 0.0..0.45f64, 0.05..5.0f64)
            .prop_map(|(m, a1, b1, a2, b2)| ParamSet::hawkes_2exp(m, a1, b1, a2, b2).unwrap()),
        (0.01..1.0f64, 0.01..2.0f64, 0.05..3.0f64, 1.05..3.5f64)
            .prop_map(|(m, k, c, p)| ParamSet::hawkes_pl(m, k, c, p).unwrap()),
    ]
}

fn arb_sequence() -> impl Strategy<Value = EventSequence> {
    (1.0..100.0f64, prop::collection::vec(0.0..1.0f64, 0..30)).prop_map(|(t, us)| {
        let mut on: Vec<f64> = us.into_iter().map(|u| u * t).filter(|&x| x < t).collect();
        on.sort_by(f64::total_cmp);
        on.dedup();
        EventSequence::new("p", on, t).unwrap()
    })
}

fn arb_samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compensator_starts_at_zero_and_never_decreases(theta in arb_theta(), seq in arb_sequence()) {
        prop_assert_eq!(theta.cumulative_intensity(&seq, 0.0), 0.0);
        let mut prev: f64 = 0.0;
        for i in 1..=200 {
            let t = seq.duration * i as f64 / 200.0;
            let c = theta.cumulative_intensity(&seq, t);
            prop_assert!(c >= prev - 1e-9 * prev.abs().max(1.0), "Λ({t})={c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn compensator_derivative_is_intensity(theta in arb_theta(), seq in arb_sequence(), u in 0.05..0.95f64) {
        let t = u * seq.duration;
        let h = 1e-4 * seq.duration.min(1.0);
        let near_onset = seq.onsets.iter().any(|&s| (s - t).abs() < 4.0 * h);
        prop_assume!(!near_onset && t > 4.0 * h);
        let f = |x: f64| theta.cumulative_intensity(&seq, x);
        let num = (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h);
        let lam = theta.intensity(&seq, t);
        prop_assert!((num - lam).abs() <= 1e-6 * lam.abs().max(1.0), "dΛ/dt {num} vs λ {lam}");
    }

    #[test]
    fn hawkes_jump_equals_kernel_at_zero(theta in arb_theta(), seq in arb_sequence()) {
        prop_assume!(theta.family().is_hawkes() && !seq.onsets.is_empty());
        let t = seq.onsets[seq.len() / 2];
        let jump = theta.intensity_after(&seq, t) - theta.intensity(&seq, t);
        let expected = theta.kernel_at_zero();
        prop_assert!((jump - expected).abs() <= 1e-9 * expected.max(1.0));
    }

    #[test]
    fn two_exp_is_ordered(m in 0.01..1.0f64, a1 in 0.0..0.5f64, b1 in 0.05..5.0f64, a2 in 0.0..0.45f64, b2 in 0.05..5.0f64) {
        let v = ParamSet::hawkes_2exp(m, a1, b1, a2, b2).unwrap();
        prop_assert!(v.values()[2] >= v.values()[4]);
    }

    #[test]
    fn wasserstein_symmetric_and_zero_on_self(a in arb_samples(), b in arb_samples()) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        let ba = wasserstein_1d(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
        prop_assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
        let mut shuffled = a.clone();
        shuffled.reverse();
        prop_assert!(wasserstein_1d(&a, &shuffled).unwrap() < 1e-12);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn wasserstein_positive_between_different_sets(a in arb_samples(), shift in 0.1..10.0f64) {
        let b: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let d = wasserstein_1d(&a, &b).unwrap();
        prop_assert!((d - shift).abs() < 1e-9 * shift.max(1.0));
    }

    #[test]
    fn ripley_nondecreasing_in_lag(seq in arb_sequence()) {
        prop_assume!(seq.len() >= 2);
        let lags: Vec<f64> = (1..=40).map(|i| i as f64 * seq.duration / 40.0).collect();
        let k = ripley_k(&seq, &lags).unwrap();
        prop_assert!(k.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mape_nonnegative_and_zero_on_exact(n in 0usize..500, pred in 0.0..500.0f64) {
        prop_assert!(mape(n, pred) >= 0.0);
        prop_assert_eq!(mape(n, n as f64), 0.0);
    }

    #[test]
    fn occupancy_is_probability_and_grows_with_window(theta in arb_theta(), seq in arb_sequence(), u in 0.0..0.5f64) {
        let t0 = u * seq.duration;
        let mut prev = 0.0;
        for i in 1..=20 {
            let dt = i as f64 * seq.duration / 40.0;
            let p = occupancy_probability(&theta, &seq, t0, dt);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn auc_invariant_under_monotone_maps(
        pairs in prop::collection::vec((any::<bool>(), -5.0..5.0f64), 2..80),
        scale in 0.1..10.0f64,
        shift in -3.0..3.0f64,
    ) {
        let labels: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let base = roc_auc(&labels, &scores);
        let affine: Vec<f64> = scores.iter().map(|s| scale * s + shift).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        let logistic: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        for other in [affine, cubed, logistic] {
            match (base, roc_auc(&labels, &other)) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "class presence changed"),
            }
        }
    }
}

#[test]
fn wasserstein_triangle_inequality() {
    use rand::Rng as _;
    let mut rng = tpplab::rng::substream(5, "triangle", 0);
    for _ in 0..100 {
        let mut draw = || -> Vec<f64> {
            let n = rng.random_range(1..30);
            (0..n).map(|_| rng.random::<f64>() * 20.0 - 10.0).collect()
        };
        let (a, b, c) = (draw(), draw(), draw());
        let ac = wasserstein_1d(&a, &c).unwrap();
        let ab = wasserstein_1d(&a, &b).unwrap();
        let bc = wasserstein_1d(&b, &c).unwrap();
        assert!(ac <= ab + bc + 1e-9, "{ac} > {ab} + {bc}");
    }
}

#[test]
fn every_family_generates_parameters() {
    for family in ModelFamily::ALL {
        let lb = family.lower_bounds();
        let v: Vec<f64> = lb.iter().map(|b| b + 0.5).collect();
        assert!(ParamSet::new(family, v).is_ok(), "{family}");
    }
}
