use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tumulab::channel::{classical_channel_tumula, cq_tumula};
use tumulab::measures::{prli, tumula_information, umlaut_information};
use tumulab::random::{random_full_rank_density, seeded};
use tumulab::{BipartiteState, ChannelOptions, ClassicalChannel, CqChannel, SolverOptions, Variant};

fn random_state(d: usize, seed: u64) -> BipartiteState {
    let mut rng = seeded(seed);
    BipartiteState::new(random_full_rank_density(d * d, &mut rng), d, d).unwrap()
}

fn state_measures(c: &mut Criterion) {
    let opts = SolverOptions { restarts: 2, ..SolverOptions::default() };
    let mut g = c.benchmark_group("state");
    for d in [2, 3] {
        let rho = random_state(d, 7);
        g.bench_with_input(BenchmarkId::new("umlaut", d), &rho, |b, r| b.iter(|| umlaut_information(black_box(r)).unwrap()));
        for variant in [Variant::Singly, Variant::Doubly] {
            let id = BenchmarkId::new(format!("prli_{variant:?}_0.3").to_lowercase(), d);
            g.bench_with_input(id, &rho, |b, r| b.iter(|| prli(black_box(r), variant, 0.3, &opts).unwrap()));
        }
        g.bench_with_input(BenchmarkId::new("tumula", d), &rho, |b, r| {
            b.iter(|| tumula_information(black_box(r), &opts).unwrap())
        });
    }
    g.finish();
}

fn channel_measures(c: &mut Criterion) {
    let opts = ChannelOptions::default();
    let mut g = c.benchmark_group("channel");
    g.sample_size(10);
    for eps in [0.05, 0.25] {
        let w = ClassicalChannel::bsc(eps).unwrap();
        g.bench_with_input(BenchmarkId::new("bsc_tumula", eps), &w, |b, w| {
            b.iter(|| classical_channel_tumula(black_box(w), &opts).unwrap())
        });
    }
    let ch = CqChannel::from_classical(&ClassicalChannel::bsc(0.1).unwrap());
    g.bench_function("cq_tumula_bsc_0.1", |b| b.iter(|| cq_tumula(black_box(&ch), &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, state_measures, channel_measures);
criterion_main!(benches);
