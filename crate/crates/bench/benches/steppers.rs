use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use oscex_core::exact1d::exact_step;
use oscex_core::exactnd::nd_exact_step;
use oscex_core::harness::{run, RunConfig};
use oscex_core::locexact::{discrete_gradient_step, DeltaPolicy, Potential};
use oscex_core::phasefun::phase_functions;
use oscex_core::{Osc1DSpec, OscNDSpec, Phase1D, PhaseND, SquareMatrix};

fn spd(n: usize) -> SquareMatrix {
    SquareMatrix::from_fn(n, |i, j| {
        let d = (i as f64 - j as f64).abs();
        if i == j {
            2.0 + i as f64 / n as f64
        } else {
            0.5 / (1.0 + d * d)
        }
    })
}

fn phase_function_sets(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase_functions");
    for n in [2, 8, 32] {
        let a = spd(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| phase_functions(black_box(a), black_box(0.3)).unwrap())
        });
    }
    group.finish();
}

fn single_steps(c: &mut Criterion) {
    let spec = Osc1DSpec::driven(2.0, 0.5);
    let s = Phase1D::new(1.0, 0.0, 0.0);
    c.bench_function("exact_step 1d", |b| {
        b.iter(|| exact_step(black_box(s), &spec, black_box(0.1)).unwrap())
    });

    let nd = OscNDSpec::constant(spd(8), vec![0.1; 8]).unwrap();
    let state = PhaseND::new(vec![0.2; 8], vec![0.0; 8], 0.0).unwrap();
    c.bench_function("nd_exact_step 8", |b| {
        b.iter(|| nd_exact_step(black_box(&state), &nd, black_box(0.1)).unwrap())
    });

    let pot = Potential::pendulum(1.0);
    let start = Phase1D::new(2.5, 0.0, 0.0);
    let mut group = c.benchmark_group("discrete_gradient");
    for policy in [
        DeltaPolicy::StandardEps,
        DeltaPolicy::LocalAtXn,
        DeltaPolicy::LocalAtMidpoint,
    ] {
        group.bench_function(format!("{policy:?}"), |b| {
            b.iter(|| discrete_gradient_step(black_box(start), &pot, 0.2, policy).unwrap())
        });
    }
    group.finish();
}

fn full_runs(c: &mut Criterion) {
    let config = |stepper: &str| {
        RunConfig::from_json(&format!(
            r#"{{"problem": "osc1d", "spec": {{"omega": 2.0, "g": 0.5}}, "stepper": "{stepper}",
                "eps": 0.01, "steps": 10000, "initial": {{"x": 1.0, "v": 0.0}},
                "outputs": ["trajectory"]}}"#
        ))
        .unwrap()
    };
    let mut group = c.benchmark_group("run 1e4 steps");
    group.sample_size(20);
    for stepper in ["exact_driven", "recurrence", "symmetric_euler", "gautschi"] {
        let cfg = config(stepper);
        group.bench_function(stepper, |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, phase_function_sets, single_steps, full_runs);
criterion_main!(benches);
