use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tradewind_core::airflow::{solve_network, AirflowConfig};
use tradewind_core::fixtures;
use tradewind_core::{SimConfig, Simulator};

fn periodic_day(c: &mut Criterion) {
    let model = fixtures::individual_light();
    let day = fixtures::typical_day();
    c.bench_function("periodic_day_3_zones", |b| {
        b.iter(|| {
            Simulator::new(black_box(&model), SimConfig::default())
                .run_periodic_day(black_box(&day))
                .unwrap()
        })
    });
}

fn airflow_solve(c: &mut Criterion) {
    let model = fixtures::individual_light();
    let weather = fixtures::typical_day()[14];
    let config = AirflowConfig::default();
    let temps = [31.0, 29.5, 30.2];
    c.bench_function("airflow_network_3_zones", |b| {
        b.iter(|| solve_network(black_box(&model), black_box(&temps), &weather, &config).unwrap())
    });
}

fn compliance_check(c: &mut Criterion) {
    let rules = fixtures::rule_set();
    let model = fixtures::individual_light();
    c.bench_function("compliance_report", |b| {
        b.iter(|| tradewind_core::ecodom::evaluate(black_box(&model), &rules))
    });
}

criterion_group!(benches, periodic_day, airflow_solve, compliance_check);
criterion_main!(benches);
