use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fsol_bench::fixture;
use fsol_core::fuzz::{generate_program, run_campaign, CampaignConfig, FuzzMode, GenConfig};
use fsol_core::scenario::run_scenario;
use fsol_core::typing::check;
use fsol_core::{parse, pretty_print, resolve_hierarchy, Typing};

fn front_end(c: &mut Criterion) {
    let fx = fixture("counterexample_fixed", Typing::Refined);
    c.bench_function("parse", |b| b.iter(|| parse(black_box(&fx.source)).unwrap()));
    c.bench_function("print", |b| b.iter(|| pretty_print(black_box(&fx.program))));
    c.bench_function("resolve_hierarchy", |b| b.iter(|| resolve_hierarchy(black_box(&fx.program)).unwrap()));
    let mut g = c.benchmark_group("check");
    for typing in [Typing::Baseline, Typing::Refined] {
        g.bench_with_input(BenchmarkId::from_parameter(typing), &typing, |b, &typing| b.iter(|| check(typing, &fx.program, &fx.table)));
    }
    g.finish();
}

fn vm(c: &mut Criterion) {
    let unsafe_fx = fixture("counterexample", Typing::Baseline);
    let fixed = fixture("counterexample_fixed", Typing::Refined);
    c.bench_function("scenario/counterexample", |b| b.iter(|| run_scenario(&unsafe_fx.table, &unsafe_fx.scenario, Typing::Baseline)));
    c.bench_function("scenario/fixed", |b| b.iter(|| run_scenario(&fixed.table, &fixed.scenario, Typing::Refined)));
}

fn fuzz(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    for mode in [FuzzMode::RefinedSound, FuzzMode::BaselineHoles] {
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                generate_program(&GenConfig::new(seed, mode))
            })
        });
    }
    g.finish();
    let mut g = c.benchmark_group("campaign-50");
    g.sample_size(10);
    for mode in [FuzzMode::RefinedSound, FuzzMode::BaselineHoles] {
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| b.iter(|| run_campaign(&CampaignConfig::new(mode, 50, 1))));
    }
    g.finish();
}

criterion_group!(benches, front_end, vm, fuzz);
criterion_main!(benches);
