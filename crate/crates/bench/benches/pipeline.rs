use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fireray_core::cloud::{farthest_point_sample, normalize_cloud, partition_view, ViewPlane};
use fireray_core::fireworks::{optimize_plane, MutationConfig, SearchSettings};
use fireray_core::predictor::{predict_kappa, PredictorConfig, PredictorWeights};
use fireray_core::raster::{render_view, ColorMode, Palette};
use fireray_core::scenes::{preset, synth_room};
use fireray_core::{Axis, ImageSize, PointCloud, RayParams, Side};

fn two_wall() -> PointCloud {
    normalize_cloud(&synth_room(&preset("two-wall").unwrap()).unwrap()).unwrap()
}

fn render(c: &mut Criterion) {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let subset = partition_view(&cloud, &plane);
    let palette = Palette::default();
    let mut group = c.benchmark_group("render_view");
    for side in [64usize, 224] {
        let size = ImageSize::square(side).unwrap();
        let ray = RayParams::new(1.5, -1.0, -5.0, 5.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side), &size, |b, &size| {
            b.iter(|| {
                render_view(
                    &cloud,
                    &subset,
                    &plane,
                    &ray,
                    size,
                    ColorMode::Semantic,
                    &palette,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let subset = partition_view(&cloud, &plane);
    c.bench_function("farthest_point_sample/32", |b| {
        b.iter(|| farthest_point_sample(&cloud, &subset, 32).unwrap())
    });
    let weights = PredictorWeights::random(1, 1.0);
    c.bench_function("predict_kappa", |b| {
        b.iter(|| {
            predict_kappa(&cloud, &plane, &weights, &PredictorConfig::default(), None).unwrap()
        })
    });
}

fn search(c: &mut Criterion) {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let subset = partition_view(&cloud, &plane);
    let settings = SearchSettings {
        size: ImageSize::square(224).unwrap(),
        tau: 0.8,
        population: 8,
        iterations: 4,
    };
    let mut group = c.benchmark_group("optimize_plane");
    group.sample_size(10);
    group.bench_function("pop8_iters4", |b| {
        b.iter(|| {
            optimize_plane(
                &cloud,
                &subset,
                &plane,
                &settings,
                &MutationConfig::with_seed(7),
                &RayParams::straight(),
                &Palette::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, render, sampling, search);
criterion_main!(benches);
