use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mcvd_core::detection::{optimal_threshold, simulate_ber};
use mcvd_core::optimizer::{numerical_tu, optimal_window, optimize};
use mcvd_core::stats::reuse_adjusted_stats;
use mcvd_core::{ChannelParams, LinkConfig, ReusableWindow, SearchSettings, SimMode};

fn window_search(c: &mut Criterion) {
    let p = ChannelParams::default_absorbing();
    let mut g = c.benchmark_group("optimal_window");
    for l in [1usize, 3, 10] {
        let cfg = LinkConfig::new(1000, 0.2, l);
        g.bench_with_input(BenchmarkId::from_parameter(l), &cfg, |b, cfg| {
            b.iter(|| optimal_window(black_box(cfg), &p, 2000).unwrap())
        });
    }
    g.finish();
}

fn threshold_search(c: &mut Criterion) {
    let p = ChannelParams::default_absorbing();
    let mut g = c.benchmark_group("optimal_threshold");
    for l in [3usize, 10] {
        let cfg = LinkConfig::new(1000, 0.2, l);
        let w = optimal_window(&cfg, &p, 2000).unwrap().window;
        let tu = numerical_tu(&w, &cfg, &p, 400).unwrap();
        let ts = reuse_adjusted_stats(&w, &ReusableWindow::Continuous { tu }, &cfg, &p).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(l), &ts, |b, ts| {
            b.iter(|| optimal_threshold(black_box(ts), 1000, None, 2048).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = ChannelParams::default_absorbing();
    let cfg = LinkConfig::new(1000, 0.2, 3);
    let w = optimal_window(&cfg, &p, 2000).unwrap().window;
    let r = ReusableWindow::Continuous { tu: numerical_tu(&w, &cfg, &p, 400).unwrap() };
    let mut g = c.benchmark_group("simulate_ber_1e5");
    g.sample_size(10);
    for mode in [SimMode::Gaussian, SimMode::Binomial] {
        g.bench_function(mode.to_string(), |b| {
            b.iter(|| simulate_ber(&cfg, &p, &w, &r, 20.0, 100_000, 1, mode).unwrap())
        });
    }
    g.finish();
}

fn full_optimize(c: &mut Criterion) {
    let p = ChannelParams::default_absorbing();
    let cfg = LinkConfig::new(1000, 0.2, 3);
    let s = SearchSettings::default();
    let mut g = c.benchmark_group("optimize");
    g.sample_size(10);
    g.bench_function("absorbing_L3", |b| b.iter(|| optimize(black_box(&cfg), &p, &s).unwrap()));
    g.finish();
}

criterion_group!(benches, window_search, threshold_search, monte_carlo, full_optimize);
criterion_main!(benches);
