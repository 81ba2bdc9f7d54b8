use std::f64::consts::FRAC_1_SQRT_2;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use qam_core::kernel::sequential;
#[cfg(feature = "parallel")]
use qam_core::kernel::parallel;
use qam_core::reduce::{build_reduced_circuit, plan_reduction};
use qam_core::sweep::{self, Execution};

fn register(qubits: usize) -> Vec<Complex64> {
    let n = 1usize << qubits;
    let a = 1.0 / (n as f64).sqrt();
    vec![Complex64::new(a, 0.0); n]
}

fn hadamard(_: usize, a: &mut Complex64, b: &mut Complex64) {
    let (x, y) = (*a, *b);
    *a = (x + y) * FRAC_1_SQRT_2;
    *b = (x - y) * FRAC_1_SQRT_2;
}

fn gate_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("hadamard_all_wires");
    for qubits in [12usize, 16, 20] {
        let mut amps = register(qubits);
        group.bench_with_input(BenchmarkId::new("sequential", qubits), &qubits, |b, &q| {
            b.iter(|| {
                for t in 0..q {
                    sequential::for_each_pair(black_box(&mut amps), t, hadamard);
                }
            })
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", qubits), &qubits, |b, &q| {
            b.iter(|| {
                for t in 0..q {
                    parallel::for_each_pair(black_box(&mut amps), t, hadamard);
                }
            })
        });
    }
    group.finish();
}

fn instance_sweep(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..64).collect();
    let work = |seed: u64| {
        let mut rng = sweep::rng(seed);
        let set = sweep::random_patterns(&mut rng, 10, 16).unwrap();
        let circuit = build_reduced_circuit(&plan_reduction(&set).unwrap()).unwrap();
        circuit.run().unwrap().norm_sqr()
    };
    let mut group = c.benchmark_group("reduced_encoding_sweep");
    group.sample_size(20);
    for (name, mode) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| sweep::run(black_box(&seeds), mode, work)));
    }
    group.finish();
}

criterion_group!(benches, gate_kernels, instance_sweep);
criterion_main!(benches);
