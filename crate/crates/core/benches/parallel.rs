use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use zeipel::elements::kep_to_delaunay;
use zeipel::propagator::{orbit_grid, propagate_analytic};
use zeipel::vonzeipel::{GeneratingSeries, TorusAverage};
use zeipel::{Exec, KeplerianElements, Order, PhysicalModel};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn leo() -> KeplerianElements {
    KeplerianElements::new(7000.0, 0.01, 0.5, 0.3, 1.2, 2.1).unwrap()
}

fn torus_average(c: &mut Criterion) {
    let model = PhysicalModel::earth();
    let s = GeneratingSeries::new(&model);
    let m = kep_to_delaunay(&leo(), &model).unwrap().momenta();
    let mut group = c.benchmark_group("hbar_torus_average_256");
    for (name, exec) in MODES {
        let avg = TorusAverage::new(256).with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                avg.anomaly_torus_average(m.big_l, m.big_g, |pt, l, g| s.hbar_at(&m, l, g, pt).unwrap())
            })
        });
    }
    group.finish();
}

fn s2_table(c: &mut Criterion) {
    let model = PhysicalModel::earth();
    let m = kep_to_delaunay(&leo(), &model).unwrap().momenta();
    let mut group = c.benchmark_group("s2_slice");
    for (name, exec) in MODES {
        let s = GeneratingSeries::new(&model).with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| s.s2_slice(black_box(&m)).unwrap()));
    }
    group.finish();
}

fn ephemeris(c: &mut Criterion) {
    let model = PhysicalModel::earth();
    let el = leo();
    let times = orbit_grid(&el, &model, 10.0, 100);
    let mut group = c.benchmark_group("propagate_analytic_1000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| propagate_analytic(&el, &times, &model, Order::Second, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, torus_average, s2_table, ephemeris);
criterion_main!(benches);
