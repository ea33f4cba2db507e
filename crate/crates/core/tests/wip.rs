use std::f64::consts::PI;

use proptest::prelude::*;

use tilt_core::models::{
    sample_trajectories, DensityTilt, InhomogeneousMarkovChain, Measure, MeasureTag,
    ObservableSequence, ProcessModel, SequentialExpandingMap,
};
use tilt_core::spectral::empirical_cf;
use tilt_core::sums::{partial_sums, sample_checkpointed_sums, PartialSumSample};
use tilt_core::wip::{
    fdd_distance, nu_tightness_transfer, path_from_checkpoints, path_process, uniform_grid,
    FddVector,
};

fn map_model() -> ProcessModel {
    ProcessModel::Map(SequentialExpandingMap::new(vec![2, 3], true).unwrap())
}

/// One-state chain, so `g_j` is a deterministic sequence.
fn deterministic(values: Vec<f64>) -> (ProcessModel, ObservableSequence) {
    let chain = InhomogeneousMarkovChain::homogeneous(1, vec![1.0], vec![1.0]).unwrap();
    let tables = values.into_iter().map(|v| vec![v]).collect();
    (
        ProcessModel::Chain(chain),
        ObservableSequence::state_values(1, 1, tables, false).unwrap(),
    )
}

#[test]
fn path_examples() {
    let (model, obs) = deterministic(vec![1.0, 2.0, 3.0, 4.0]);
    let batch = sample_trajectories(&model, 4, 1, 0, Measure::Base).unwrap();
    let p = path_process(&batch, &obs, 4, 2.0, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(p.at(0, 0), &[0.0]);
    assert_eq!(p.at(0, 1), &[1.5]);
    assert_eq!(p.at(0, 2), &[5.0]);

    let (model, ones) = deterministic(vec![1.0; 37]);
    let batch = sample_trajectories(&model, 37, 1, 0, Measure::Base).unwrap();
    let grid = uniform_grid(10);
    let p = path_process(&batch, &ones, 37, 3.0, &grid).unwrap();
    for (k, t) in grid.iter().enumerate() {
        assert_eq!(p.at(0, k)[0], (37.0 * t).floor() / 3.0);
    }
}

#[test]
fn path_endpoint_is_the_normalized_sum() {
    let model = map_model();
    let obs = ObservableSequence::cosine(1);
    let n = 300;
    let b = (n as f64).sqrt();
    let batch = sample_trajectories(&model, n, 200, 8, Measure::Base).unwrap();
    let p = path_process(&batch, &obs, n, b, &uniform_grid(30)).unwrap();
    let s = partial_sums(&batch, &obs, &[n]).unwrap().remove(0);
    for i in 0..200 {
        assert_eq!(p.at(i, 30)[0], s.values[i] / b);
    }
}

#[test]
fn streamed_paths_match_materialized_paths() {
    let model = map_model();
    let obs = ObservableSequence::cosine(2);
    let n = 256;
    let grid = uniform_grid(16);
    let checkpoints: Vec<usize> = (1..=16).map(|k| 16 * k).collect();
    let batch = sample_trajectories(&model, n, 100, 21, Measure::Base).unwrap();
    let direct = path_process(&batch, &obs, n, 16.0, &grid).unwrap();
    let sums =
        sample_checkpointed_sums(&model, &obs, Measure::Base, 21, 100, &checkpoints).unwrap();
    let streamed = path_from_checkpoints(&sums, n, 16.0, &grid).unwrap();
    assert_eq!(direct.values, streamed.values);
}

fn frequency_grid(m: usize) -> Vec<Vec<f64>> {
    (0..20)
        .map(|k| {
            (0..m)
                .map(|c| -2.0 + 0.2 * k as f64 + 0.37 * c as f64)
                .collect()
        })
        .collect()
}

#[test]
fn fdd_distance_vanishes_on_identical_laws() {
    let model = map_model();
    let obs = ObservableSequence::cosine(1);
    let (n, grid) = (128, uniform_grid(8));
    let fdd = FddVector::new(vec![0.25, 0.5, 1.0]).unwrap();
    let batch = sample_trajectories(&model, n, 500, 4, Measure::Base).unwrap();
    let p = path_process(&batch, &obs, n, 8.0, &grid).unwrap();
    assert_eq!(
        fdd_distance(&p, &p, &fdd, &frequency_grid(3))
            .unwrap()
            .distance,
        0.0
    );

    let one = DensityTilt::uniform().validate(&model).unwrap();
    let tilted = sample_trajectories(&model, n, 500, 4, Measure::Tilted(&one)).unwrap();
    let q = path_process(&tilted, &obs, n, 8.0, &grid).unwrap();
    assert_eq!(
        fdd_distance(&p, &q, &fdd, &frequency_grid(3))
            .unwrap()
            .distance,
        0.0
    );
}

#[test]
fn single_time_fdd_is_the_scalar_cf_comparison() {
    let model = map_model();
    let obs = ObservableSequence::cosine(1);
    let tilt = DensityTilt::cosine(0.5, 1).validate(&model).unwrap();
    let (n, grid) = (64, uniform_grid(4));
    let mu = sample_trajectories(&model, n, 400, 6, Measure::Base).unwrap();
    let nu = sample_trajectories(&model, n, 300, 7, Measure::Tilted(&tilt)).unwrap();
    let pm = path_process(&mu, &obs, n, 8.0, &grid).unwrap();
    let pn = path_process(&nu, &obs, n, 8.0, &grid).unwrap();
    let freqs = frequency_grid(1);
    let got = fdd_distance(&pm, &pn, &FddVector::new(vec![0.5]).unwrap(), &freqs).unwrap();
    let scalar = |p: &tilt_core::wip::PathBatch, tag| {
        let column = (0..p.count).map(|i| p.at(i, 2)[0]).collect();
        empirical_cf(&PartialSumSample::from_values(column, 1, n, tag).unwrap()).unwrap()
    };
    let (a, b) = (
        scalar(&pm, MeasureTag::Base),
        scalar(&pn, MeasureTag::Tilted),
    );
    for (t, d) in freqs.iter().zip(&got.per_frequency) {
        assert_eq!(*d, (a.at(t) - b.at(t)).norm());
    }
    assert_eq!(got.radius, a.confidence_radius() + b.confidence_radius());
}

#[test]
fn transfer_examples() {
    let map = map_model();
    let cos = DensityTilt::cosine(0.5, 1).validate(&map).unwrap();
    let t = nu_tightness_transfer(0.1, &cos, &map, &[1.25]).unwrap();
    let closed = 1.0 / 3.0 + (3f64.sqrt() / 2.0) / (2.0 * PI);
    assert!(
        (t.rows[0].eta - closed).abs() < 1e-10,
        "{} vs {closed}",
        t.rows[0].eta
    );

    let t = nu_tightness_transfer(0.2, &cos, &map, &[1.5, 2.0, 4.0]).unwrap();
    for row in &t.rows {
        assert_eq!(row.eta, 0.0);
        assert_eq!(row.bound, row.c * 0.2);
    }
    let one = DensityTilt::uniform().validate(&map).unwrap();
    assert_eq!(
        nu_tightness_transfer(0.3, &one, &map, &[1.0])
            .unwrap()
            .best
            .bound,
        0.3
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_is_monotone_in_c_and_linear_in_exceedance(
        w in prop::collection::vec(0.01f64..5.0, 4),
        init in prop::collection::vec(0.05f64..1.0, 4),
        e in 0.0f64..1.0,
        mut cs in prop::collection::vec(0.05f64..6.0, 1..12),
    ) {
        let total: f64 = init.iter().sum();
        let init: Vec<f64> = init.iter().map(|v| v / total).collect();
        let chain = InhomogeneousMarkovChain::homogeneous(4, vec![0.25; 16], init.clone()).unwrap();
        let model = ProcessModel::Chain(chain);
        let tilt = DensityTilt::states_normalized(w, 2.0, &init).unwrap().validate(&model).unwrap();
        cs.sort_by(f64::total_cmp);
        let t = nu_tightness_transfer(e, &tilt, &model, &cs).unwrap();
        let zero = nu_tightness_transfer(0.0, &tilt, &model, &cs).unwrap();
        for pair in t.rows.windows(2) {
            prop_assert!(pair[1].eta <= pair[0].eta);
        }
        for (row, base) in t.rows.iter().zip(&zero.rows) {
            prop_assert_eq!(row.eta, base.eta);
            prop_assert_eq!(row.bound, base.bound + row.c * e);
        }
        prop_assert!(t.rows.iter().all(|r| t.best.bound <= r.bound));
    }
}
