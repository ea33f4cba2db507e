use proptest::prelude::*;

use tilt_core::mixing::{
    alpha_bruteforce, alpha_profile_dobrushin, alpha_upper_dobrushin, delta_profile_expanding,
    map_covariance_exact, PiecewiseLinear, TrigPolynomial,
};
use tilt_core::models::{
    sample_trajectories, InhomogeneousMarkovChain, Measure, ProcessModel, SequentialExpandingMap,
};

fn chain_from(s: usize, raw: &[f64], periods: usize) -> InhomogeneousMarkovChain {
    let mut it = raw.iter().copied().cycle();
    let row = |it: &mut dyn Iterator<Item = f64>| {
        let r: Vec<f64> = (0..s).map(|_| 0.05 + it.next().unwrap()).collect();
        let t: f64 = r.iter().sum();
        r.into_iter().map(|v| v / t).collect::<Vec<f64>>()
    };
    let mats = (0..periods)
        .map(|_| (0..s).flat_map(|_| row(&mut it)).collect())
        .collect();
    let init = row(&mut it);
    InhomogeneousMarkovChain::new(s, mats, true, init).unwrap()
}

/// Joint law of `(X_0..X_k, X_{k+n}..X_{k+n+depth})` as a table over (past path, future path).
fn joint_table(
    chain: &InhomogeneousMarkovChain,
    k: usize,
    n: usize,
    depth: usize,
) -> Vec<Vec<f64>> {
    let s = chain.state_count();
    let past_len = k + 1;
    let fut_len = depth + 1;
    let total = k + n + depth + 1;
    let mut table = vec![vec![0.0; s.pow(fut_len as u32)]; s.pow(past_len as u32)];
    let mut path = vec![0usize; total];
    loop {
        let mut w = chain.initial()[path[0]];
        for j in 0..total - 1 {
            w *= chain.matrix(j).unwrap()[path[j] * s + path[j + 1]];
        }
        let code = |xs: &[usize]| xs.iter().fold(0, |acc, &x| acc * s + x);
        table[code(&path[..past_len])][code(&path[k + n..])] += w;
        let mut i = 0;
        loop {
            if i == total {
                return table;
            }
            path[i] += 1;
            if path[i] < s {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

/// `sup_{A,B} |P(A∩B) − P(A)P(B)|` over every pair of events.
fn alpha_all_pairs(table: &[Vec<f64>]) -> f64 {
    let (pa, pb) = (table.len(), table[0].len());
    let mut best = 0.0f64;
    for a in 0u64..1 << pa {
        let rows: Vec<usize> = (0..pa).filter(|i| a >> i & 1 == 1).collect();
        let prob_a: f64 = rows.iter().flat_map(|&i| table[i].iter()).sum();
        let row_sum: Vec<f64> = (0..pb)
            .map(|j| rows.iter().map(|&i| table[i][j]).sum())
            .collect();
        let col: Vec<f64> = (0..pb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        for b in 0u64..1 << pb {
            let (mut joint, mut prob_b) = (0.0, 0.0);
            for j in (0..pb).filter(|j| b >> j & 1 == 1) {
                joint += row_sum[j];
                prob_b += col[j];
            }
            best = best.max((joint - prob_a * prob_b).abs());
        }
    }
    best
}

#[test]
fn bruteforce_alpha_matches_enumeration_of_all_event_pairs() {
    let raw: Vec<f64> = (0..97)
        .map(|i| ((i * 37 + 11) % 101) as f64 / 101.0)
        .collect();
    for (s, k, n, depth) in [
        (2, 0, 1, 0),
        (2, 0, 2, 1),
        (2, 1, 1, 1),
        (2, 0, 3, 2),
        (3, 0, 1, 0),
        (3, 0, 2, 1),
        (3, 1, 1, 0),
    ] {
        for shift in 0..3 {
            let chain = chain_from(s, &raw[shift * 7..], 3);
            let oracle = alpha_all_pairs(&joint_table(&chain, k, n, depth));
            let got = alpha_bruteforce(&chain, k, n, depth, false).unwrap();
            assert!(got.exact);
            assert!(
                (got.value - oracle).abs() < 1e-14,
                "s={s} k={k} n={n} depth={depth}: {} vs {oracle}",
                got.value
            );
        }
    }
}

#[test]
fn map_covariance_agrees_with_monte_carlo() {
    let map = SequentialExpandingMap::new(vec![2, 3], true).unwrap();
    let model = ProcessModel::Map(map.clone());
    let s = PiecewiseLinear::new(vec![0.0, 0.3, 0.7, 1.0], vec![2.0, 0.5, 1.5, 0.2])
        .unwrap()
        .normalized()
        .unwrap();
    let f = TrigPolynomial {
        mean: 0.1,
        terms: vec![(1, 1.0, 0.3), (2, -0.5, 1.1)],
    };
    let n_mc = 1_000_000;
    let batch = sample_trajectories(&model, 4, n_mc, 5, Measure::Base).unwrap();
    let f_mean = 0.1;
    for n in 0..4 {
        let v: Vec<f64> = (0..n_mc)
            .map(|i| s.eval(batch.value(i, 0)) * f.eval(batch.value(i, n)))
            .collect();
        let m = v.iter().sum::<f64>() / n_mc as f64;
        let se =
            (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n_mc as f64 - 1.0) / n_mc as f64)
                .sqrt();
        let exact = map_covariance_exact(&map, &s, &f, n).unwrap();
        assert!(
            (m - f_mean - exact).abs() < 4.0 * se,
            "n = {n}: MC {} vs exact {exact}",
            m - f_mean
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn dobrushin_dominates_bruteforce(raw in prop::collection::vec(0.0f64..1.0, 16), n in 1usize..=3, depth in 0usize..=2) {
        let chain = chain_from(2, &raw, 3);
        let brute = alpha_bruteforce(&chain, 0, n, depth, false).unwrap();
        let upper = alpha_upper_dobrushin(&chain, n).unwrap();
        prop_assert!(upper >= brute.value, "{} < {}", upper, brute.value);
    }

    #[test]
    fn alpha_values_lie_in_range(raw in prop::collection::vec(0.0f64..1.0, 30), s in 2usize..=3, n in 1usize..=3) {
        let chain = chain_from(s, &raw, 2);
        let brute = alpha_bruteforce(&chain, 0, n, 1, false).unwrap().value;
        prop_assert!((0.0..=0.25).contains(&brute));
        for v in alpha_profile_dobrushin(&chain, 6).unwrap().values {
            prop_assert!((0.0..=0.25).contains(&v));
        }
    }

    #[test]
    fn expanding_delta_at_least_halves(slopes in prop::collection::vec(2u32..9, 1..6), n_max in 1usize..60) {
        let map = SequentialExpandingMap::new(slopes, true).unwrap();
        let d = delta_profile_expanding(&map, n_max).unwrap();
        for n in 0..n_max {
            prop_assert!(d.value(n + 1).unwrap() <= d.value(n).unwrap() / 2.0);
        }
    }
}
