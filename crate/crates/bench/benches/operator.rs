use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracheat_bench::{interval_grid, reference_params, square_grid};
use fracheat_core::evolution::{evolve, heat_kernels, EvolveOptions, Scheme};
use fracheat_core::linalg::expm;
use fracheat_core::{assemble_operator, HardyConstants};

fn assembly(c: &mut Criterion) {
    let params = reference_params();
    let cs = 0.5 * HardyConstants::new(params).unwrap().c_star;
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    for n in [100, 200, 400] {
        let grid = interval_grid(n);
        g.bench_with_input(BenchmarkId::new("1d", n), &grid, |b, grid| {
            b.iter(|| assemble_operator(grid, params, cs, f64::INFINITY).unwrap())
        });
    }
    let grid = square_grid(16);
    g.bench_function("2d/16x16", |b| {
        b.iter(|| assemble_operator(&grid, params, cs, f64::INFINITY).unwrap())
    });
    g.finish();
}

fn propagation(c: &mut Criterion) {
    let params = reference_params();
    let cs = 0.5 * HardyConstants::new(params).unwrap().c_star;
    let mut g = c.benchmark_group("propagate");
    g.sample_size(10);
    for n in [100, 200] {
        let op = assemble_operator(&interval_grid(n), params, cs, 1e3).unwrap();
        let h = op.hamiltonian();
        let a = -0.1 * &h;
        g.bench_with_input(BenchmarkId::new("expm", n), &a, |b, a| {
            b.iter(|| expm(a).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("heat_kernels", n), &op, |b, op| {
            b.iter(|| heat_kernels(op, &[0.05, 0.1, 0.5]).unwrap())
        });
        let u0 = vec![1.0; n];
        g.bench_with_input(BenchmarkId::new("crank_nicolson", n), &h, |b, h| {
            b.iter(|| {
                evolve(
                    h,
                    &u0,
                    &[0.1, 0.5],
                    EvolveOptions::with_scheme(Scheme::CrankNicolson),
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, propagation);
criterion_main!(benches);
