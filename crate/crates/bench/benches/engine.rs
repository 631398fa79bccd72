use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use retsim::analytics::{cohens_d, fit_random_intercept, GroupSummary};
use retsim::session::{replay, task_for_header};
use retsim::task::TaskKind;
use retsim::trainee::{generate_session, SkillProfile};
use retsim_bench::{fixture_session, lmm_dataset, LMM_TERMS};

fn ticks(c: &mut Criterion) {
    let mut group = c.benchmark_group("tick");
    for kind in TaskKind::ALL {
        let log = fixture_session(kind, 1);
        group.throughput(Throughput::Elements(log.frames.len() as u64));
        group.bench_function(kind.as_str(), |b| {
            b.iter_batched(
                || task_for_header(&log.header).unwrap(),
                |mut task| {
                    for f in &log.frames {
                        black_box(task.tick(f).unwrap());
                    }
                    task
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn replay_session(c: &mut Criterion) {
    let log = fixture_session(TaskKind::Laser, 2);
    c.bench_function("replay/laser", |b| b.iter(|| replay(black_box(&log)).unwrap()));
}

fn synth(c: &mut Criterion) {
    c.bench_function("synth/tremor", |b| {
        b.iter(|| generate_session(TaskKind::Tremor, &SkillProfile::NOVICE, black_box(3), 1).unwrap())
    });
}

fn effect_size(c: &mut Criterion) {
    let a = GroupSummary::from_moments(30, 61.3, 25.1);
    let e = GroupSummary::from_moments(30, 49.86, 14.17);
    c.bench_function("cohens_d", |b| b.iter(|| cohens_d(black_box(&a), black_box(&e)).unwrap()));
}

fn lmm(c: &mut Criterion) {
    let mut group = c.benchmark_group("lmm");
    for n in [20, 200] {
        let (y, x, g) = lmm_dataset(7, n);
        group.bench_function(format!("{n}x3"), |b| b.iter(|| fit_random_intercept(&y, &x, &LMM_TERMS, &g).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, ticks, replay_session, synth, effect_size, lmm);
criterion_main!(benches);
