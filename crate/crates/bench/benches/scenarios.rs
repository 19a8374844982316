//! Benchmarks for the hot paths: single grid-point evaluation, the
//! chi-solver, a small scan, contour extraction and the three-box report.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use lgsim_core::contour::extract_contours;
use lgsim_core::threebox::run_three_box;
use lgsim_core::threelevel::{
    evaluate_point, point_metrics, rotation, scan, solve_chi, ThreeLevelParams, CHI_TOL,
};

fn bench_point_metrics(c: &mut Criterion) {
    let params = ThreeLevelParams {
        phi: 0.423527 * std::f64::consts::PI,
        chi: 0.687505 * std::f64::consts::PI,
        theta: 0.831 * std::f64::consts::PI,
    };
    let u = rotation(&params);
    c.bench_function("point_metrics", |b| b.iter(|| point_metrics(black_box(&u))));
}

fn bench_solve_chi(c: &mut Criterion) {
    let phi = 0.423527 * std::f64::consts::PI;
    let theta = 0.831 * std::f64::consts::PI;
    c.bench_function("solve_chi", |b| {
        b.iter(|| solve_chi(black_box(phi), black_box(theta), CHI_TOL).unwrap())
    });
}

fn bench_evaluate_point(c: &mut Criterion) {
    let phi = 0.423527 * std::f64::consts::PI;
    let theta = 0.831 * std::f64::consts::PI;
    c.bench_function("evaluate_point", |b| {
        b.iter(|| evaluate_point(black_box(theta), black_box(phi), CHI_TOL).unwrap())
    });
}

fn bench_scan_64(c: &mut Criterion) {
    let pi = std::f64::consts::PI;
    c.bench_function("scan_64x64", |b| {
        b.iter(|| scan(black_box((0.0, pi)), black_box((0.0, pi)), (64, 64)).unwrap())
    });
}

fn bench_contours_48(c: &mut Criterion) {
    let pi = std::f64::consts::PI;
    let grid = scan((0.6 * pi, 0.95 * pi), (0.3 * pi, 0.6 * pi), (48, 48)).unwrap();
    c.bench_function("extract_contours_48x48", |b| {
        b.iter(|| extract_contours(black_box(&grid)).unwrap())
    });
}

fn bench_three_box(c: &mut Criterion) {
    c.bench_function("three_box_report", |b| b.iter(|| run_three_box().unwrap()));
}

criterion_group!(
    benches,
    bench_point_metrics,
    bench_solve_chi,
    bench_evaluate_point,
    bench_scan_64,
    bench_contours_48,
    bench_three_box
);
criterion_main!(benches);
