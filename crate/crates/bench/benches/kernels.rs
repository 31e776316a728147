use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use twwc::channel::{additive_to_tensor, AdditiveCoeffs};
use twwc::measures::breve_mi;
use twwc::regions::{fourier_motzkin, grid_laws, region_union, symbolic_rate_system};
use twwc::simulator::{exact_leakage, generate_codebook, run_error_trials, CodebookParams, InputMode};
use twwc::{AdditiveChannelSpec, ChannelTensor, CondPmf, JointInputLaw, Pmf, SecrecyFlavor};

fn binary_channel() -> ChannelTensor {
    let ones = AdditiveCoeffs { a1: 1, b1: 1, a2: 1, b2: 1, a3: 1, b3: 1 };
    let b = |p: f64| Pmf::new(vec![1.0 - p, p]).unwrap();
    additive_to_tensor(&AdditiveChannelSpec::new(2, ones, [b(0.05), b(0.05), b(0.25)]).unwrap()).unwrap()
}

fn codebook(n: usize) -> twwc::Codebook {
    let mode = InputMode::Iid(JointInputLaw::identity(Pmf::uniform(2), Pmf::uniform(2)));
    generate_codebook(CodebookParams { n, m: [3, 3], l: [2, 2], mode }, 1).unwrap()
}

fn bench_breve(c: &mut Criterion) {
    let w = CondPmf::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3], vec![0.25, 0.25, 0.5]]).unwrap();
    let p = Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
    c.bench_function("breve_mi 3x3 order 0.5", |b| b.iter(|| breve_mi(black_box(&w), &p, 0.5).unwrap()));
    c.bench_function("breve_mi 3x3 order 2", |b| b.iter(|| breve_mi(black_box(&w), &p, 2.0).unwrap()));
}

fn bench_fm(c: &mut Criterion) {
    let sys = symbolic_rate_system(SecrecyFlavor::Individual);
    c.bench_function("fourier_motzkin rate system", |b| b.iter(|| fourier_motzkin(black_box(&sys), &["r1", "r2"]).unwrap()));
}

fn bench_simulator(c: &mut Criterion) {
    let t = binary_channel();
    let cb = codebook(4);
    c.bench_function("exact_leakage n=4", |b| b.iter(|| exact_leakage(black_box(&t), &cb).unwrap()));
    let cb = codebook(8);
    c.bench_function("run_error_trials n=8 x1000", |b| b.iter(|| run_error_trials(black_box(&t), &cb, 1000, 0).unwrap()));
}

fn bench_union(c: &mut Criterion) {
    let t = binary_channel();
    let laws = grid_laws(2, 2, 8).unwrap();
    c.bench_function("region_union grid 8", |b| {
        b.iter(|| region_union(black_box(&t), &laws, None, SecrecyFlavor::Joint).unwrap())
    });
}

criterion_group!(kernels, bench_breve, bench_fm, bench_simulator, bench_union);
criterion_main!(kernels);
