use criterion::{black_box, criterion_group, criterion_main, Criterion};

use coopsched::rounding::{repair, Activations};
use coopsched::{build_milp, solve_lp, solve_milp, BuildOptions, Mode, PowerPolicy};
use coopsched_bench::fixture;

fn lp_relaxation(c: &mut Criterion) {
    let inst = fixture(1, 4, 4, 8);
    let model = build_milp(&inst, BuildOptions::new(Mode::Cls).relaxed()).unwrap();
    c.bench_function("lp_relaxation_n4_m4_t8", |b| b.iter(|| solve_lp(black_box(&model))));
}

fn branch_and_bound(c: &mut Criterion) {
    let inst = fixture(2, 3, 1, 2);
    let model = build_milp(&inst, BuildOptions::new(Mode::Cls)).unwrap();
    c.bench_function("branch_and_bound_n3_m1_t2", |b| {
        b.iter(|| solve_milp(black_box(&model), 100_000).unwrap())
    });
}

fn repair_pass(c: &mut Criterion) {
    let inst = fixture(3, 8, 8, 8);
    let t = inst.params.slots;
    let rounded = Activations {
        x: vec![vec![true; inst.links.len()]; t],
        y: vec![vec![true; inst.relay_links.len()]; t],
    };
    let lp_power = vec![vec![30.0; inst.n_sources]; t];
    c.bench_function("repair_n8_m8_t8_all_on", |b| {
        b.iter(|| repair(black_box(&inst), &lp_power, &rounded, PowerPolicy::KeepLp).unwrap())
    });
}

criterion_group!(benches, lp_relaxation, branch_and_bound, repair_pass);
criterion_main!(benches);
