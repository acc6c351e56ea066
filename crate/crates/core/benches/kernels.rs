//! Sequential against parallel execution of the two hot kernels: the
//! binary convolution scan and the m-fold rearrangement. Without the
//! `parallel` feature both rows run the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use powerconv::convolve::convolve_binary;
use powerconv::exec::Exec;
use powerconv::field::GridFunction;
use powerconv::geometry::{ConvexBody, Vec2};
use powerconv::pde::{solve_poisson, SolveParams, SourceTerm};
use powerconv::rearrange::sharp_rearrangement;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn torsion(body: &ConvexBody, h: f64) -> GridFunction {
    solve_poisson(body, &SourceTerm::Constant(1.0), &SolveParams::new(h)).unwrap()
}

fn convolution(c: &mut Criterion) {
    let h = 1.0 / 32.0;
    let u0 = torsion(&ConvexBody::square(1.0).unwrap(), h);
    let u1 = torsion(&ConvexBody::disc(Vec2::ZERO, 1.0).unwrap(), h);
    let mut g = c.benchmark_group("convolve_binary_square_disc_h32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| convolve_binary(black_box(&u0), black_box(&u1), 0.5, 0.5, Some(h), exec).unwrap())
        });
    }
    g.finish();
}

fn rearrangement(c: &mut Criterion) {
    let h = 1.0 / 16.0;
    let u = torsion(&ConvexBody::square(1.0).unwrap(), h);
    let mut g = c.benchmark_group("sharp_rearrangement_square_m8_h16");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sharp_rearrangement(black_box(&u), 0.5, 8, Some(h), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, convolution, rearrangement);
criterion_main!(benches);
