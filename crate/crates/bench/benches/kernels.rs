use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tilt_core::esseen::{esseen_constant, kolmogorov_two_sample, select_T};
use tilt_core::mixing::{alpha_profile_dobrushin, delta_profile_expanding};
use tilt_core::models::{
    DensityTilt, InhomogeneousMarkovChain, Measure, ObservableSequence, ProcessModel,
    SequentialExpandingMap,
};
use tilt_core::spectral::exact_cf_chain;
use tilt_core::sums::sample_checkpointed_sums;
use tilt_core::wip::cadlag_modulus;

fn chain() -> InhomogeneousMarkovChain {
    let mats = vec![
        vec![0.7, 0.2, 0.1, 0.3, 0.4, 0.3, 0.2, 0.2, 0.6],
        vec![0.5, 0.25, 0.25, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4],
    ];
    InhomogeneousMarkovChain::new(3, mats, true, vec![0.3, 0.3, 0.4]).unwrap()
}

fn map_sums(c: &mut Criterion) {
    let model = ProcessModel::Map(SequentialExpandingMap::new(vec![2, 3], true).unwrap());
    let obs = ObservableSequence::cosine(1);
    let tilt = DensityTilt::uniform().validate(&model).unwrap();
    let mut g = c.benchmark_group("map_checkpointed_sums");
    g.sample_size(10);
    for n in [256usize, 1024] {
        g.bench_with_input(BenchmarkId::new("mu", n), &n, |b, &n| {
            b.iter(|| {
                sample_checkpointed_sums(&model, &obs, Measure::Base, 1, 1000, &[n / 2, n]).unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("nu", n), &n, |b, &n| {
            b.iter(|| {
                sample_checkpointed_sums(&model, &obs, Measure::Tilted(&tilt), 1, 1000, &[n / 2, n])
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn chain_cf(c: &mut Criterion) {
    let ch = chain();
    let obs = ObservableSequence::state_scalar(vec![-1.0, 0.0, 1.0]).unwrap();
    let mut g = c.benchmark_group("exact_cf_chain");
    for n in [100usize, 1000, 10000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| exact_cf_chain(&ch, &obs, None, n, black_box(&[0.3])).unwrap())
        });
    }
    g.finish();
}

fn ks(c: &mut Criterion) {
    let a: Vec<f64> = (0..20_000).map(|i| ((i * 7919) % 20_011) as f64).collect();
    let b: Vec<f64> = (0..20_000)
        .map(|i| ((i * 104_729) % 20_011) as f64 + 0.5)
        .collect();
    c.bench_function("kolmogorov_two_sample_20k", |bch| {
        bch.iter(|| kolmogorov_two_sample(black_box(&a), black_box(&b)).unwrap())
    });
}

fn modulus(c: &mut Criterion) {
    let m = 256;
    let grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let path: Vec<f64> = (0..=m).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    c.bench_function("cadlag_modulus_256", |b| {
        b.iter(|| cadlag_modulus(&grid, black_box(&path), 0.05))
    });
}

fn certificates(c: &mut Criterion) {
    let model = SequentialExpandingMap::new(vec![2, 3], true).unwrap();
    let ch = chain();
    c.bench_function("esseen_constant", |b| b.iter(|| esseen_constant().unwrap()));
    c.bench_function("select_T", |b| {
        b.iter(|| select_T(black_box(0.3), black_box(40.0), 1e6).unwrap())
    });
    c.bench_function("delta_profile_expanding_1024", |b| {
        b.iter(|| delta_profile_expanding(&model, 1024).unwrap())
    });
    c.bench_function("alpha_profile_dobrushin_513", |b| {
        b.iter(|| alpha_profile_dobrushin(&ch, 513).unwrap())
    });
}

criterion_group!(benches, map_sums, chain_cf, ks, modulus, certificates);
criterion_main!(benches);
