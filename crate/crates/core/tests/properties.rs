use proptest::prelude::*;
use statrs::function::gamma::gamma;

use varorder::rng::{RandomStream, StableLaw};
use varorder::sim::{
    exact_occupation, geometric_grid, invert_time_change, simulate_coupled, simulate_growth, simulate_time_changed,
    SimConfig,
};
use varorder::stats::{fit_growth_exponent, run_ensemble_outcomes, run_growth_ensemble, summarize, GrowthQuantity};
use varorder::{AlphaField, IntervalUnion};

fn two_level(a_in: f64, a_out: f64) -> AlphaField {
    AlphaField::two_level(a_in, 0.0, 1.0, a_out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sampled_increments_are_positive_and_replayable(alpha in 0.1f64..0.95, dt in 1e-3f64..10.0, seed in any::<u64>(), id in any::<u64>()) {
        let law = StableLaw::new(alpha, dt).unwrap();
        let mut a = RandomStream::new(seed, id);
        let mut b = RandomStream::new(seed, id);
        for _ in 0..200 {
            let x = law.sample_raw(&mut a);
            prop_assert!(x > 0.0);
            prop_assert_eq!(x.to_bits(), law.sample_raw(&mut b).to_bits());
        }
    }

    #[test]
    fn path_structure(a_in in 0.2f64..0.5, gap in 0.05f64..0.4, seed in any::<u64>(), x0 in -1.0f64..2.0) {
        let field = two_level(a_in, a_in + gap);
        let cfg = SimConfig::new(0.02, 50.0).with_x0(x0);
        let split = IntervalUnion::single(0.0, 1.0);
        let sets = vec![("A".to_string(), split.clone())];
        let path = simulate_coupled(&field, &cfg, Some(&split), &sets, &mut RandomStream::new(seed, 0)).unwrap();
        prop_assert!(path.is_complete());
        for w in path.steps.windows(2) {
            prop_assert!(w[1].sigma > w[0].sigma);
            prop_assert!(w[1].s > w[0].s);
        }
        // each increment goes to exactly one side of the split
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut h = 0.0;
        for w in path.steps.windows(2) {
            let inc = w[1].sigma - w[0].sigma;
            if split.contains(w[1].b) {
                s1 += inc;
                h += cfg.dt;
            } else {
                s2 += inc;
            }
        }
        let tot = path.sigma_final();
        prop_assert!((s1 - path.sigma1_acc).abs() <= 1e-9 * tot);
        prop_assert!((s2 - path.sigma2_acc).abs() <= 1e-9 * tot);
        prop_assert!((path.sigma1_acc + path.sigma2_acc - tot).abs() <= 1e-9 * tot);
        prop_assert!((path.occupation_internal["A"] - h).abs() <= 1e-9 * h.max(1.0));

        let grid = geometric_grid(0.01, 50.0, 60).unwrap();
        let s = invert_time_change(&path, &grid).unwrap();
        for j in 0..s.len() {
            let t = s.external_times[j];
            prop_assert!(s.g_values[j] <= t && t < s.h_values[j]);
            prop_assert!(s.age[j] >= t - s.g_values[j] - 1e-12);
            if j > 0 {
                prop_assert!(s.l_values[j] >= s.l_values[j - 1]);
                if s.step_index[j] == s.step_index[j - 1] {
                    prop_assert_eq!(s.positions[j], s.positions[j - 1]);
                    prop_assert_eq!(s.g_values[j], s.g_values[j - 1]);
                }
            }
        }
    }

    #[test]
    fn streaming_and_stored_paths_agree(seed in any::<u64>()) {
        let field = two_level(0.3, 0.7);
        let cfg = SimConfig::new(0.05, 20.0).with_x0(0.5);
        let a = IntervalUnion::single(0.0, 1.0);
        let grid = geometric_grid(0.1, 20.0, 15).unwrap();
        let stored = simulate_coupled(&field, &cfg, None, &[], &mut RandomStream::new(seed, 3)).unwrap();
        let streamed = simulate_time_changed(&field, &cfg, &grid, std::slice::from_ref(&a), &mut RandomStream::new(seed, 3)).unwrap();
        let inv = invert_time_change(&stored, &grid).unwrap();
        prop_assert_eq!(&inv, &streamed.sample);
        for (j, &t) in grid.iter().enumerate() {
            prop_assert!((exact_occupation(&stored, &a, t) - streamed.occupation[0][j]).abs() < 1e-9);
        }
    }

    #[test]
    fn growth_trace_split_identity(seed in any::<u64>()) {
        let field = two_level(0.3, 0.7);
        let split = IntervalUnion::single(0.0, 1.0);
        let grid = geometric_grid(1.0, 100.0, 12).unwrap();
        let cfg = SimConfig::new(0.1, f64::INFINITY).with_x0(0.5).with_internal_horizon(100.0);
        let (tr, _) = simulate_growth(&field, &cfg, &split, &grid, &mut RandomStream::new(seed, 0)).unwrap();
        for j in 0..grid.len() {
            prop_assert!(tr.occupation[j] <= tr.internal_times[j] + 1e-9 && tr.internal_times[j] >= grid[j]);
            prop_assert!((tr.sigma1[j] + tr.sigma2[j] - tr.sigma[j]).abs() <= 1e-9 * tr.sigma[j]);
        }
    }

    #[test]
    fn ensemble_summary_order_independent(seed in any::<u64>(), rot in 0usize..30) {
        let field = two_level(0.3, 0.7);
        let cfg = SimConfig::new(0.05, 30.0).with_x0(0.5);
        let grid = [1.0, 10.0, 30.0];
        let a = IntervalUnion::single(0.0, 1.0);
        let mut outs = run_ensemble_outcomes(&field, &cfg, &grid, 30, &a, seed).unwrap();
        let s1 = summarize(&grid, &outs).unwrap();
        outs.rotate_left(rot);
        let s2 = summarize(&grid, &outs).unwrap();
        prop_assert_eq!(&s1, &s2);
        for j in 0..grid.len() {
            prop_assert!((0.0..=1.0).contains(&s1.occ_mean[j]) && (0.0..=1.0).contains(&s1.hit_prob[j]));
            let (lo, hi) = s1.occ_ci(j);
            prop_assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
        }
    }
}

#[test]
fn constant_order_mean_of_inverse_clock() {
    // E[L(t)] = t^a / Gamma(1 + a)
    let field = AlphaField::constant(0.5).unwrap();
    let cfg = SimConfig::new(1e-3, 1.0);
    let n = 20_000;
    let ls: Vec<f64> = (0..n)
        .map(|i| {
            let p = simulate_time_changed(&field, &cfg, &[1.0], &[], &mut RandomStream::new(17, i)).unwrap();
            p.sample.l_values[0]
        })
        .collect();
    let mean = ls.iter().sum::<f64>() / n as f64;
    let var = ls.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    let want = 1.0 / gamma(1.5);
    assert!((want - 1.128_379_167).abs() < 1e-9);
    // the discrete clock overshoots by at most one internal step
    assert!((mean - want).abs() <= 3.0 * se + 1e-3, "{mean} vs {want} (se {se})");
}

#[test]
fn constant_order_clock_slope() {
    for alpha in [0.4, 0.7] {
        let field = AlphaField::constant(alpha).unwrap();
        let grid = geometric_grid(1e1, 1e4, 20).unwrap();
        let cfg = SimConfig::new(1.0, f64::INFINITY).with_internal_horizon(1e4);
        let traces = run_growth_ensemble(&field, &cfg, &IntervalUnion::real_line(), &grid, 60, 4).unwrap();
        let fit = fit_growth_exponent(&traces, GrowthQuantity::Sigma).unwrap();
        assert!((fit.slope - 1.0 / alpha).abs() <= 0.1, "alpha={alpha}: slope {}", fit.slope);
    }
}
