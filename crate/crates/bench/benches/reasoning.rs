use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tdl_bench::{flatten, query, sensor_stream, with_ring, ATRISK, MALFUNC, SHDN};
use tdl_core::dtp::{decide_dtp_general, decide_dtp_nonrecursive, DtpInstance};
use tdl_core::engine::evaluate_at;
use tdl_core::forget::{decide_forget, ForgetInstance};
use tdl_core::offline::{minimal_delay, minimal_window};
use tdl_core::stream::{run_offline, run_online, OnlineOptions};

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_at");
    let q = query(MALFUNC);
    for units in [10, 100] {
        let data = flatten(&sensor_stream(units, 50));
        group.bench_with_input(BenchmarkId::from_parameter(units), &data, |b, d| b.iter(|| evaluate_at(&q, black_box(d), 25).unwrap()));
    }
    group.finish();
}

fn decisions(c: &mut Criterion) {
    let history = flatten(&sensor_stream(5, 10));
    let dtp = DtpInstance::new(query(MALFUNC), history.clone(), 9, 7).unwrap();
    c.bench_function("dtp/general", |b| b.iter(|| decide_dtp_general(black_box(&dtp)).unwrap()));
    c.bench_function("dtp/nonrecursive", |b| b.iter(|| decide_dtp_nonrecursive(black_box(&dtp)).unwrap()));
    let forget = ForgetInstance::new(query(SHDN), history, 9, 8, 6).unwrap();
    c.bench_function("forget", |b| b.iter(|| decide_forget(black_box(&forget)).unwrap()));
    c.bench_function("minimal_delay/malfunc", |b| b.iter(|| minimal_delay(black_box(&query(MALFUNC))).unwrap()));
    c.bench_function("minimal_window/shdn", |b| b.iter(|| minimal_window(black_box(&query(SHDN)), 0).unwrap()));
}

fn streaming(c: &mut Criterion) {
    let mut group = c.benchmark_group("stream");
    group.sample_size(10);
    let events = sensor_stream(10, 100);
    let options = OnlineOptions::default();
    for (name, q) in [("shdn", query(SHDN)), ("malfunc", query(MALFUNC))] {
        group.bench_function(format!("online/{name}"), |b| {
            b.iter(|| run_online(q.clone(), &options, events.iter().cloned().map(Ok), &mut |e| drop(black_box(e))).unwrap())
        });
        let d = minimal_delay(&q).unwrap();
        let s = minimal_window(&q, d).unwrap();
        group.bench_function(format!("offline/{name}"), |b| {
            b.iter(|| run_offline(q.clone(), d, s, true, events.iter().cloned().map(Ok), &mut |e| drop(black_box(e))).unwrap())
        });
    }
    let atrisk = with_ring(&query(ATRISK), 10);
    let short = sensor_stream(10, 30);
    group.bench_function("online/atrisk", |b| {
        b.iter(|| run_online(atrisk.clone(), &options, short.iter().cloned().map(Ok), &mut |e| drop(black_box(e))).unwrap())
    });
    group.finish();
}

criterion_group!(benches, evaluation, decisions, streaming);
criterion_main!(benches);
