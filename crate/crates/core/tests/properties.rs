use proptest::prelude::*;

use pfnts::domain::{
    crps_binned, crps_gaussian, cumulative_regret, encode_onehot, BinnedPmf, SeedSpec,
};
use pfnts::harness::midranks;
use pfnts::ope::{importance_weights, snips, LoggedDecision, TraceStep};
use pfnts::predictive::{ConjugateLinearModel, PredictiveModel};
use pfnts::subclt::{block_weights, estimate_from_means, geometric_grid};
use rand::RngCore;

fn bases() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.1f64..4.0]
}

proptest! {
    #[test]
    fn grid_is_increasing_and_bounded(n in 4usize..50_000, b in bases()) {
        if let Ok(g) = geometric_grid(n, b) {
            let p = g.points();
            prop_assert_eq!(p[0], 2);
            prop_assert!(p.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(*p.last().unwrap() <= n);
        }
    }

    #[test]
    fn weights_are_positive_and_exact(n in 4usize..50_000, b in bases()) {
        if let Ok(g) = geometric_grid(n, b) {
            let p = g.points().to_vec();
            for (w, t) in block_weights(&g).iter().zip(p.windows(2)) {
                prop_assert!(*w > 0.0);
                prop_assert_eq!(*w, (t[0] * t[1]) as f64 / (t[1] - t[0]) as f64);
            }
        }
    }

    #[test]
    fn variance_estimate_is_nonnegative(n in 8usize..5000, seed in any::<u64>()) {
        let g = geometric_grid(n, 2.0).unwrap();
        let mut rng = SeedSpec::root(seed).rng();
        let means: Vec<f64> = g.points().iter().map(|_| (rng.next_u32() as f64 / 1e9) - 2.0).collect();
        let est = estimate_from_means(g.clone(), &means);
        prop_assert!(est.vhat >= 0.0);
        prop_assert_eq!(est.refresh, *g.points().last().unwrap());
        prop_assert_eq!(est.mean, *means.last().unwrap());
        let flat = estimate_from_means(g.clone(), &vec![0.7; g.points().len()]);
        prop_assert_eq!(flat.vhat, 0.0);
    }

    #[test]
    fn binned_crps_is_nonnegative(
        raw in prop::collection::vec(0.0f64..1.0, 1..30),
        start in -5.0f64..5.0,
        width in 0.01f64..1.0,
        r in -10.0f64..10.0,
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let k = raw.len();
        let mids: Vec<f64> = (0..k).map(|j| start + (j as f64 + 0.5) * width).collect();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let pmf = BinnedPmf::new(mids, vec![width; k], probs).unwrap();
        prop_assert!(crps_binned(&pmf, r).unwrap() >= 0.0);
    }

    #[test]
    fn gaussian_crps_scales_with_sd(mu in -5.0f64..5.0, sd in 0.1f64..5.0, r in -5.0f64..5.0, c in 0.1f64..10.0) {
        let base = crps_gaussian(mu, sd * sd, r).unwrap();
        let scaled = crps_gaussian(c * mu, (c * sd).powi(2), c * r).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
        let shifted = crps_gaussian(mu + 3.0, sd * sd, r + 3.0).unwrap();
        prop_assert!((shifted - base).abs() <= 1e-9);
    }

    #[test]
    fn cumulative_regret_is_monotone(
        rounds in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 3), 0usize..3), 1..100)
    ) {
        let means: Vec<Vec<f64>> = rounds.iter().map(|r| r.0.clone()).collect();
        let actions: Vec<usize> = rounds.iter().map(|r| r.1).collect();
        let c = cumulative_regret(&means, &actions);
        prop_assert_eq!(c.len(), rounds.len());
        prop_assert!(c[0] >= 0.0);
        prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn onehot_has_single_indicator(x in prop::collection::vec(-10.0f64..10.0, 0..8), arms in 1usize..10, pick in 0usize..10) {
        let arm = pick % arms;
        let e = encode_onehot(&x, arm, arms).unwrap();
        prop_assert_eq!(e.values.len(), x.len() + arms);
        prop_assert_eq!(&e.values[..x.len()], &x[..]);
        let tail = &e.values[x.len()..];
        prop_assert_eq!(tail.iter().filter(|v| **v != 0.0).count(), 1);
        prop_assert_eq!(tail[arm], 1.0);
        prop_assert!(encode_onehot(&x, arms, arms).is_err());
    }

    #[test]
    fn snips_is_scale_invariant_and_bounded(
        steps in prop::collection::vec((0usize..3, 0.0f64..1.0, 0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0), 1..60),
        scale in 0.1f64..10.0,
    ) {
        let props = [0.4, 0.3, 0.3];
        let mut log = Vec::new();
        let mut trace = Vec::new();
        for (i, (a, r, p0, p1, p2)) in steps.iter().enumerate() {
            log.push(LoggedDecision {
                t: i + 1,
                context: vec![],
                action: *a,
                propensity: props.to_vec(),
                reward: *r,
                cluster: (i % 4) as u64,
            });
            let s = p0 + p1 + p2;
            trace.push(TraceStep { probs: vec![p0 / s, p1 / s, p2 / s], proposal: *a, matched: true });
        }
        let w = importance_weights(&log, &trace).unwrap();
        prop_assert!(w.iter().all(|w| *w >= 0.0 && *w <= 10.0 / 3.0 + 1e-12));
        let v = snips(&log, &trace).unwrap();
        let lo = log.iter().map(|d| d.reward).fold(f64::INFINITY, f64::min);
        let hi = log.iter().map(|d| d.reward).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        // scaling rewards scales the estimate
        let scaled: Vec<LoggedDecision> = log.iter().cloned().map(|mut d| { d.reward *= scale; d }).collect();
        prop_assert!((snips(&scaled, &trace).unwrap() - scale * v).abs() <= 1e-9 * (1.0 + scale));
    }

    #[test]
    fn midranks_sum_and_order(values in prop::collection::vec(-100i32..100, 1..40)) {
        let v: Vec<f64> = values.iter().map(|x| *x as f64).collect();
        let r = midranks(&v);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] { prop_assert!(r[i] < r[j]); }
                if v[i] == v[j] { prop_assert_eq!(r[i], r[j]); }
            }
        }
    }

    #[test]
    fn seeds_are_deterministic(root in any::<u64>(), label in "[a-z/]{0,12}", idx in any::<u64>()) {
        let a = SeedSpec::root(root).derive(&label, idx).rng().next_u64();
        let b = SeedSpec::root(root).derive(&label, idx).rng().next_u64();
        prop_assert_eq!(a, b);
        let other = SeedSpec::root(root).derive(&label, idx.wrapping_add(1)).rng().next_u64();
        prop_assert_ne!(a, other);
    }

    #[test]
    fn prefix_predictions_ignore_later_data(
        rows in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 3), -3.0f64..3.0), 2..60),
        cut in 0usize..60,
        q in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let cut = cut % rows.len();
        let mut full = ConjugateLinearModel::new(3, 1.0, 0.5).unwrap();
        let mut short = ConjugateLinearModel::new(3, 1.0, 0.5).unwrap();
        for (i, (x, y)) in rows.iter().enumerate() {
            full.append(x, *y).unwrap();
            if i < cut {
                short.append(x, *y).unwrap();
            }
        }
        prop_assert_eq!(
            full.predict_mean(&q, cut).unwrap().to_bits(),
            short.predict_mean(&q, cut).unwrap().to_bits()
        );
        prop_assert!(full.predict_mean(&q, rows.len() + 1).is_err());
    }
}
