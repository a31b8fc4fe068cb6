use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tileviz_bench::random_store;
use tileviz_core::filter::parse_filter;
use tileviz_core::render::{composite, rasterize_annotation_tile, AnnotationLayerParams};
use tileviz_core::slide::generate_synthetic_slide;
use tileviz_core::{RasterImage, Rgba, TileCoord};

fn annotation_tiles(c: &mut Criterion) {
    let store = random_store(1, 100_000, 100_000.0, 200.0);
    let plain = AnnotationLayerParams { fill_alpha: 128, ..Default::default() };
    let filtered = AnnotationLayerParams { filter: Some(parse_filter("type == 'gland' and prob > 0.5").unwrap()), ..plain.clone() };
    let mut group = c.benchmark_group("annotation_tile");
    for z in [0u32, 2, 4] {
        let n = (100_000u32 >> z) / 256;
        let tile = TileCoord::new(z, n / 2, n / 2);
        group.bench_with_input(BenchmarkId::new("plain", z), &tile, |b, t| {
            b.iter(|| rasterize_annotation_tile(&store, &plain, black_box(*t)))
        });
        group.bench_with_input(BenchmarkId::new("filtered", z), &tile, |b, t| {
            b.iter(|| rasterize_annotation_tile(&store, &filtered, black_box(*t)))
        });
    }
    group.finish();
}

fn slide_tiles(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(4096, 4096, dir.path().join("s")).unwrap();
    c.bench_function("slide_grid_tile/z0", |b| b.iter(|| slide.read_grid_tile(0, black_box(7), 7).unwrap()));
    c.bench_function("slide_grid_tile/z2_unaligned", |b| {
        b.iter(|| slide.read_region(2, black_box(100), 100, 256, 256).unwrap())
    });
}

fn compositing(c: &mut Criterion) {
    let layers = vec![
        RasterImage::filled(256, 256, Rgba::new(200, 180, 220, 255)),
        RasterImage::filled(256, 256, Rgba::new(255, 0, 0, 128)),
        RasterImage::filled(256, 256, Rgba::new(0, 0, 255, 77)),
        RasterImage::filled(256, 256, Rgba::new(0, 0, 0, 0)),
    ];
    c.bench_function("composite/4_layers", |b| b.iter(|| composite(black_box(&layers)).unwrap()));
}

criterion_group!(benches, annotation_tiles, slide_tiles, compositing);
criterion_main!(benches);
