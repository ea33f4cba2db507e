use num_complex::Complex64;
use proptest::prelude::*;

use tilt_core::mixing::dobrushin_coefficient;
use tilt_core::models::{DensityTilt, InhomogeneousMarkovChain, ObservableSequence, ProcessModel};
use tilt_core::spectral::{exact_cf_chain, exact_moments_chain, operator_norm_envelope};

fn chain_from(s: usize, raw: &[f64], periods: usize, floor: f64) -> InhomogeneousMarkovChain {
    let mut it = raw.iter().copied().cycle();
    let mut row = || {
        let r: Vec<f64> = (0..s).map(|_| floor + it.next().unwrap()).collect();
        let t: f64 = r.iter().sum();
        r.into_iter().map(|v| v / t).collect::<Vec<f64>>()
    };
    let mats = (0..periods)
        .map(|_| (0..s).flat_map(|_| row()).collect())
        .collect();
    let init = row();
    InhomogeneousMarkovChain::new(s, mats, true, init).unwrap()
}

fn observable_from(s: usize, raw: &[f64]) -> ObservableSequence {
    let rows = (0..2)
        .map(|k| {
            (0..s)
                .map(|x| 2.0 * raw[(k * s + x) % raw.len()] - 1.0)
                .collect()
        })
        .collect();
    ObservableSequence::state_values(s, 1, rows, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivatives_at_zero_give_moments(
        raw in prop::collection::vec(0.0f64..1.0, 40),
        g in prop::collection::vec(0.0f64..1.0, 8),
        s in 2usize..=4,
        n in 1usize..12,
    ) {
        let chain = chain_from(s, &raw, 3, 0.05);
        let obs = observable_from(s, &g);
        let m = exact_moments_chain(&chain, &obs, None, n, 2).unwrap();
        let h = 1e-5;
        let cf = |t: f64| exact_cf_chain(&chain, &obs, None, n, &[t]).unwrap();
        let d1 = (cf(h) - cf(-h)) / (2.0 * h);
        let d2 = (cf(h) - 2.0 * cf(0.0) + cf(-h)) / (h * h);
        let first = Complex64::new(0.0, m.mean);
        let second = m.second.unwrap();
        // Absolute floors cover the finite-difference rounding level when a moment is near zero.
        prop_assert!((d1 - first).norm() <= 1e-6 * first.norm().max(1.0), "{} vs {}", d1, first);
        prop_assert!((d2.re + second).abs() <= 1e-5 * second.max(1.0), "{} vs {}", d2.re, -second);
    }

    #[test]
    fn tilted_cf_at_zero_is_the_tilt_mass(
        raw in prop::collection::vec(0.0f64..1.0, 40),
        w in prop::collection::vec(0.01f64..5.0, 4),
        s in 2usize..=4,
        n in 0usize..10,
    ) {
        let chain = chain_from(s, &raw, 2, 0.05);
        let obs = observable_from(s, &raw);
        let tilt = DensityTilt::states_normalized(w[..s].to_vec(), 2.0, chain.initial())
            .unwrap()
            .validate(&ProcessModel::Chain(chain.clone()))
            .unwrap();
        let mass: f64 = (0..s).map(|x| chain.initial()[x] * tilt.at_state(x).unwrap()).sum();
        let z = exact_cf_chain(&chain, &obs, Some(&tilt), n, &[0.0]).unwrap();
        prop_assert!((z.re - mass).abs() <= 1e-14 && z.im == 0.0, "{} vs {}", z, mass);
    }

    #[test]
    fn envelope_at_zero_is_controlled_by_contraction(
        raw in prop::collection::vec(0.0f64..1.0, 60),
        g in prop::collection::vec(0.0f64..1.0, 8),
        s in 2usize..=4,
        floor in 0.0f64..0.5,
    ) {
        let chain = chain_from(s, &raw, 4, floor);
        let obs = observable_from(s, &g);
        let ns = [0usize, 1, 2, 3, 5, 8, 13];
        let rows = operator_norm_envelope(&chain, &obs, &[0.0], &ns).unwrap();
        for row in rows {
            let theta: f64 = (0..row.n).map(|j| dobrushin_coefficient(chain.matrix(j).unwrap(), s)).product();
            prop_assert!(row.tv_norm <= theta + 1e-12, "n = {}: tv {} > {}", row.n, row.tv_norm, theta);
            prop_assert!(row.norm <= theta.sqrt() + 1e-12, "n = {}: L² {} > √{}", row.n, row.norm, theta);
        }
    }
}

#[test]
fn weighted_norm_can_exceed_the_contraction_product() {
    // One step, μ_0 uniform: the L² norm is the second singular value (√0.5 here) while θ = 0.5.
    let chain =
        InhomogeneousMarkovChain::homogeneous(2, vec![1.0, 0.0, 0.5, 0.5], vec![0.5, 0.5]).unwrap();
    let obs = ObservableSequence::state_scalar(vec![0.0, 1.0]).unwrap();
    let row = operator_norm_envelope(&chain, &obs, &[0.0], &[1]).unwrap()[0];
    let theta = dobrushin_coefficient(chain.matrix(0).unwrap(), 2);
    assert!((theta - 0.5).abs() < 1e-15);
    assert!((row.tv_norm - 0.5).abs() < 1e-15);
    assert!(
        row.norm > theta && row.norm <= theta.sqrt() + 1e-15,
        "norm {}",
        row.norm
    );
}
