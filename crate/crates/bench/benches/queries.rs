use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use tileviz_bench::{random_items, random_store};
use tileviz_core::filter::{evaluate_filter, parse_filter};
use tileviz_core::{AnnotationStore, BBox};

fn spatial(c: &mut Criterion) {
    let store = random_store(2, 100_000, 100_000.0, 200.0);
    let filter = parse_filter("prob > 0.3 and type != 'stroma'").unwrap();
    let view = BBox::new(40_000.0, 40_000.0, 44_096.0, 44_096.0);
    c.bench_function("query_bbox/4096", |b| b.iter(|| store.query_bbox(black_box(&view), None).len()));
    c.bench_function("query_bbox/4096_filtered", |b| b.iter(|| store.query_bbox(black_box(&view), Some(&filter)).len()));
    c.bench_function("query_point", |b| b.iter(|| store.query_point(black_box(50_000.0), 50_000.0, 5.0).len()));
}

fn index_build(c: &mut Criterion) {
    let items = random_items(3, 10_000, 20_000.0, 100.0);
    c.bench_function("insert_10k", |b| {
        b.iter_batched(
            || items.clone(),
            |items| {
                let mut store = AnnotationStore::in_memory().unwrap();
                store.insert_annotations(items).unwrap();
                store
            },
            BatchSize::LargeInput,
        )
    });
}

fn filters(c: &mut Criterion) {
    let src = "(type == 'gland' or type in ('lumen', 'x')) and prob * 2 > 0.5 and not (grade == 3)";
    c.bench_function("filter/parse", |b| b.iter(|| parse_filter(black_box(src)).unwrap()));
    let expr = parse_filter(src).unwrap();
    let items = random_items(4, 1000, 1000.0, 10.0);
    c.bench_function("filter/evaluate_1000", |b| {
        b.iter(|| items.iter().filter(|(_, p)| evaluate_filter(&expr, p)).count())
    });
}

criterion_group!(benches, spatial, index_build, filters);
criterion_main!(benches);
