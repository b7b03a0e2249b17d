use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trailproof::cdcl::{run, Amendments, Policy};
use trailproof::cnf::order_row_then_column;
use trailproof::oracle::{saturate, OracleBudget};
use trailproof::resproof::check_refutation;
use trailproof::transforms::{cdcl_to_half, half_to_ordered, p0w_simulate, psim, refute_ind_xor2};
use trailproof_bench::{identity, induction, unsat_3cnf};

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("saturate");
    for n in [6u32, 8, 10] {
        let (tau, _) = unsat_3cnf(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &tau, |b, tau| b.iter(|| saturate(tau, OracleBudget::default()).unwrap()));
    }
    g.finish();
}

fn checkers(c: &mut Criterion) {
    let (tau, pi) = unsat_3cnf(10);
    c.bench_function("check_refutation/n10", |b| b.iter(|| check_refutation(&pi, &tau)));
}

fn simulations(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    for n in [6u32, 8] {
        let (tau, pi) = unsat_3cnf(n);
        let order = identity(&tau);
        g.bench_with_input(BenchmarkId::new("psim", n), &n, |b, _| b.iter(|| psim(&pi, &tau, &order).unwrap()));
        g.bench_with_input(BenchmarkId::new("p0w", n), &n, |b, _| b.iter(|| p0w_simulate(&pi, &tau, &order).unwrap()));
    }
    for n in [10u32, 20] {
        let (tau, _) = induction(n);
        let order = identity(&tau);
        let am = Amendments::pi_d(order.clone()).with_decision_l();
        let trace = run(&tau, &Policy::Greedy(0), &am, 1_000_000);
        g.bench_with_input(BenchmarkId::new("cdcl_to_half_to_ordered", n), &n, |b, _| {
            b.iter(|| {
                let half = cdcl_to_half(&trace, &order).unwrap();
                half_to_ordered(&half, &tau, &order).unwrap()
            })
        });
    }
    g.finish();
}

fn explicit(c: &mut Criterion) {
    let mut g = c.benchmark_group("refute_ind_xor2");
    for n in [10u32, 40] {
        let order = order_row_then_column(n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| refute_ind_xor2(n, &order).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = oracle, checkers, simulations, explicit
}
criterion_main!(benches);
