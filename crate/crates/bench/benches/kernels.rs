use std::hint::black_box;

use choquard_core::riesz::double_integral;
use choquard_core::{
    random_bumps, Functional, FunctionalKind, Grading, KernelTable, ModelDoc, Profile, RadialGrid,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn grid(nodes: usize) -> RadialGrid {
    RadialGrid::new(
        6,
        30.0,
        nodes,
        Grading::Geometric {
            first_spacing: 1e-4,
        },
    )
    .unwrap()
}

fn kernel_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_table");
    group.sample_size(10);
    for nodes in [256, 512, 1024] {
        let g = grid(nodes);
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &g, |b, g| {
            b.iter(|| KernelTable::build(g, 2.0).unwrap())
        });
    }
    group.finish();
}

fn choquard_term(c: &mut Criterion) {
    let g = grid(2048);
    let table = KernelTable::build(&g, 2.0).unwrap();
    let u = random_bumps(&g, 1, 1).remove(0).into_values();
    c.bench_function("double_integral/2048", |b| {
        b.iter(|| double_integral(&table, &g, black_box(&u), 2.5))
    });
}

fn energy_and_gradient(c: &mut Criterion) {
    let (model, params) = ModelDoc::exemplar().build().unwrap();
    let g = grid(2048);
    let table = KernelTable::build(&g, params.mu).unwrap();
    let v = random_bumps(&g, 1, 2).remove(0).into_values();
    for kind in [FunctionalKind::Limit, FunctionalKind::Full] {
        let f = Functional::new(kind, &model, &params, &g, &table).unwrap();
        c.bench_function(&format!("energy_and_gradient/{kind:?}/2048"), |b| {
            b.iter(|| f.energy_and_gradient(black_box(&v)).unwrap())
        });
    }
}

fn translated_weights(c: &mut Criterion) {
    let g = grid(2048);
    let mut group = c.benchmark_group("translated_weights");
    group.sample_size(10);
    for (name, profile) in [
        ("ball", Profile::Ball { radius: 1.0 }),
        ("exponential", Profile::Exponential { rate: 3.0 }),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| choquard_core::translated_weights(&g, profile, black_box(5.0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    kernel_table,
    choquard_term,
    energy_and_gradient,
    translated_weights
);
criterion_main!(benches);
