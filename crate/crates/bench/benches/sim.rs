use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use felsim_core::fel::{place_tasks, CostModel, DomainCost, LearningTask};
use felsim_core::harness::scenarios;
use felsim_core::topology::FogDomain;
use felsim_core::workload::ZipfTable;
use felsim_core::{run_scenario, Engine, NodeId, RandomStream, SimTime};

fn engine(c: &mut Criterion) {
    c.bench_function("engine_schedule_pop_10k", |b| {
        let mut stream = RandomStream::new(1, "bench/engine");
        let times: Vec<u64> = (0..10_000).map(|_| stream.next_index(1_000_000) as u64).collect();
        b.iter(|| {
            let mut e: Engine<u32> = Engine::new();
            for (i, &t) in times.iter().enumerate() {
                e.schedule(SimTime(t), i as u32).unwrap();
            }
            let mut n = 0u64;
            while let Some(ev) = e.pop_until(SimTime(u64::MAX)) {
                n += u64::from(ev.kind);
            }
            black_box(n)
        });
    });
}

fn zipf(c: &mut Criterion) {
    let table = ZipfTable::new(1000, 1.0).unwrap();
    let mut stream = RandomStream::new(1, "bench/zipf");
    c.bench_function("zipf_sample_n1000", |b| b.iter(|| black_box(table.sample(&mut stream))));
}

fn placement(c: &mut Criterion) {
    let tasks: Vec<LearningTask> = (0..6)
        .map(|i| LearningTask {
            task_id: format!("t{i}"),
            cycles: 8 + i,
            data_bytes: 1_000_000,
            delay_sensitive: i % 2 == 0,
        })
        .collect();
    let domains = |n: usize| -> (Vec<FogDomain>, CostModel) {
        let doms = (0..n)
            .map(|i| FogDomain {
                domain_id: format!("d{i}"),
                members: BTreeSet::new(),
                anchor: NodeId(i),
                capacity: 40,
            })
            .collect();
        let model = CostModel {
            per_domain: (0..n)
                .map(|i| DomainCost {
                    compute_price: 0.01 * (i + 1) as f64,
                    caching_cost: 1e-6,
                    comm_delay: 5.0 + i as f64,
                })
                .collect(),
            comm_delay_penalty: 0.1,
        };
        (doms, model)
    };
    let (exact_doms, exact_model) = domains(2);
    c.bench_function("place_tasks_exact_6x2", |b| {
        b.iter(|| black_box(place_tasks(&tasks, &exact_doms, &exact_model, None)))
    });
    let (greedy_doms, greedy_model) = domains(10);
    c.bench_function("place_tasks_greedy_6x10", |b| {
        b.iter(|| black_box(place_tasks(&tasks, &greedy_doms, &greedy_model, None)))
    });
}

fn scenario(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    group.bench_function("a_one_seed", |b| {
        b.iter_batched(|| scenarios::scenario_a(1), |cfg| run_scenario(&cfg).unwrap(), BatchSize::LargeInput)
    });
    group.finish();
}

criterion_group!(benches, engine, zipf, placement, scenario);
criterion_main!(benches);
