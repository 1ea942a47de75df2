use adaptmps::dmrg::{ground_state, DmrgOptions};
use adaptmps::models::{boson_spaces, density_from_pure, mpo_xyz, spin_spaces, LindbladModel, ModelParams};
use adaptmps::tevo::rk4_step;
use adaptmps::{AsMps, Charge, SymTensor, TruncationPolicy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

/// Two neighbouring bulk sites of a random spin-chain MPS at bond `chi`.
fn site_pair(chi: usize) -> (SymTensor, SymTensor) {
    let psi = AsMps::random(spin_spaces(12), &[Charge(6)], chi, 1, false).unwrap();
    (psi.site(5).clone(), psi.site(6).clone())
}

fn contract(c: &mut Criterion) {
    let mut g = c.benchmark_group("contract");
    for chi in [16, 64] {
        let (a, b) = site_pair(chi);
        g.bench_with_input(BenchmarkId::new("chi", chi), &chi, |bench, _| {
            bench.iter(|| SymTensor::contract(black_box(&a), black_box(&b), &[(2, 1)]).unwrap())
        });
    }
    g.finish();
}

fn block_svd(c: &mut Criterion) {
    let mut g = c.benchmark_group("block_svd");
    for chi in [16, 64] {
        let (a, b) = site_pair(chi);
        // (sigma_l, a_l, sigma_l1, a_l2)
        let theta = SymTensor::contract(&a, &b, &[(2, 1)]).unwrap();
        g.bench_with_input(BenchmarkId::new("chi", chi), &chi, |bench, _| {
            bench.iter(|| black_box(&theta).block_svd(&[0, 1], &[2, 3], &TruncationPolicy::new(chi, 0.0)).unwrap())
        });
    }
    g.finish();
}

fn dmrg_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("dmrg_sweep");
    g.sample_size(10);
    for gamma in [0.0, 0.5] {
        let p = ModelParams { l: 10, gamma, delta: 1.5, h: 0.5, ..Default::default() };
        let op = mpo_xyz(&p).unwrap();
        let init = AsMps::random(spin_spaces(10), &[Charge(5)], 8, 7, false).unwrap();
        let opts = DmrgOptions { max_bond: 32, max_sweeps: 1, ..Default::default() };
        g.bench_with_input(BenchmarkId::new("gamma", gamma), &gamma, |bench, _| bench.iter(|| ground_state(&op, &init, &opts).unwrap()));
    }
    g.finish();
}

fn lindblad_rk4(c: &mut Criterion) {
    let p = ModelParams { l: 3, d: 4, j: 1.0, u: 4.0, lambda1: 1.0, lambda_l: 1.0, nbar1: 0.75, nbar_l: 0.25, ..Default::default() };
    let model = LindbladModel::bose_hubbard(&p).unwrap();
    let generator = model.generator_mpo(&TruncationPolicy::exact()).unwrap();
    let psi = AsMps::random(boson_spaces(3, 4), &[Charge(1)], 4, 9, false).unwrap().normalized();
    let rho = density_from_pure(&psi).unwrap();
    let policy = TruncationPolicy::new(128, 0.0);
    c.bench_function("lindblad_rk4_step", |bench| bench.iter(|| rk4_step(&generator, black_box(&rho), 0.01, &policy).unwrap()));
}

criterion_group!(benches, contract, block_svd, dmrg_sweep, lindblad_rk4);
criterion_main!(benches);
