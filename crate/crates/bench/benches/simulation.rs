use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphlb_core::fluid::{FluidIntegrator, FluidState};
use graphlb_core::graph::GraphSpec;
use graphlb_core::sim::{simulate, simulate_coupled, Policy, SimConfig, TieRule};

fn graph_jsq(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_graph_jsq");
    group.sample_size(10);
    let specs = [
        ("clique", GraphSpec::Clique { n: 1000 }),
        ("ring", GraphSpec::Ring { n: 1000 }),
        ("errg_sqrt", GraphSpec::ErdosRenyi { n: 1000, p: 1000f64.sqrt().recip() }),
        ("rgg_log", GraphSpec::RggTorus { n: 1000, radius: graphlb_core::graph::rgg_radius(1000, 1000f64.ln()) }),
    ];
    for (name, spec) in specs {
        let g = spec.generate(1).unwrap();
        let cfg = SimConfig::new(0.9, 10.0).seed(2);
        group.bench_with_input(BenchmarkId::from_parameter(name), &g, |b, g| {
            b.iter(|| black_box(simulate(g, &cfg).unwrap()))
        });
    }
    group.finish();
}

fn policies(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_policy");
    group.sample_size(10);
    let g = GraphSpec::ErdosRenyi { n: 2000, p: 0.01 }.generate(1).unwrap();
    for (name, policy) in [("cjsq_50", Policy::Cjsq { n: 50 }), ("isolated", Policy::Isolated)] {
        let cfg = SimConfig::new(0.9, 10.0).seed(3).policy(policy);
        group.bench_function(name, |b| b.iter(|| black_box(simulate(&g, &cfg).unwrap())));
    }
    let cfg = SimConfig::new(0.9, 10.0).seed(4);
    group.bench_function("coupled_n50", |b| {
        b.iter(|| black_box(simulate_coupled(&g, &cfg, 50, TieRule::EarliestPosition).unwrap()))
    });
    group.finish();
}

fn fluid(c: &mut Criterion) {
    let integrator = FluidIntegrator::new(0.95, 1e-3).unwrap();
    let start = FluidState::empty(60);
    c.bench_function("fluid_rk4_T10", |b| {
        b.iter(|| black_box(integrator.integrate(&start, 10.0, 0.1).unwrap()))
    });
}

criterion_group!(benches, graph_jsq, policies, fluid);
criterion_main!(benches);
