use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetsched::config::RunConfig;
use hetsched::dqn::{train_step, LstmQNet, Transition};
use hetsched::experiment::{jobs, run_batch_sequential};
use hetsched::rl::LearnParams;
use hetsched::SchedulerChoice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch_config(choice: SchedulerChoice) -> RunConfig {
    let mut cfg = RunConfig {
        scheduler: choice,
        horizon: 500,
        seeds: (1..=8).collect(),
        ..RunConfig::default()
    };
    cfg.traffic.mtc_period_s = 0.25;
    cfg.dqn.hidden = 8;
    cfg.dqn.batch = 8;
    cfg
}

fn batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for choice in [SchedulerChoice::Rr, SchedulerChoice::Qtab, SchedulerChoice::Dmdq] {
        let cfg = batch_config(choice);
        let js = jobs(&cfg);
        let label = format!("{:?}", choice).to_lowercase();
        group.bench_with_input(BenchmarkId::new("sequential", &label), &js, |b, js| {
            b.iter(|| run_batch_sequential(&cfg, black_box(js)).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", &label), &js, |b, js| {
            b.iter(|| hetsched::experiment::run_batch_parallel(&cfg, black_box(js)).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (dim, w) = (6, 10);
    let mut net = LstmQNet::init(dim, 32, 256, &mut rng).unwrap();
    let window: Vec<f64> = (0..dim * w).map(|_| rng.random()).collect();
    c.bench_function("lstm_forward", |b| b.iter(|| net.forward(black_box(&window)).unwrap()));

    let batch: Vec<Transition> = (0..32)
        .map(|_| Transition {
            window: (0..dim * w).map(|_| rng.random()).collect(),
            action: rng.random_range(0..256),
            reward: rng.random(),
            next_window: (0..dim * w).map(|_| rng.random()).collect(),
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let p = LearnParams::default();
    c.bench_function("train_step_32", |b| b.iter(|| train_step(&mut net, black_box(&refs), &p, 1e-4).unwrap()));
}

criterion_group!(benches, batches, network);
criterion_main!(benches);
