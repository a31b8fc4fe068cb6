//! Fixtures shared by the benchmarks.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tileviz_core::{AnnotationStore, Geometry, Properties, PropertyValue};

pub const TYPES: [&str; 3] = ["gland", "lumen", "stroma"];

/// `n` star polygons with `type`/`prob` properties over `[0, extent)²`.
pub fn random_items(seed: u64, n: usize, extent: f64, max_r: f64) -> Vec<(Geometry, Properties)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (cx, cy) = (rng.gen_range(0.0..extent), rng.gen_range(0.0..extent));
            let r = rng.gen_range(max_r * 0.1..=max_r);
            let k = rng.gen_range(3..=14);
            let ring = (0..k)
                .map(|i| {
                    let a = TAU * (i as f64 + rng.gen_range(0.0..0.8)) / k as f64;
                    let d = rng.gen_range(r * 0.5..=r);
                    (cx + d * a.cos(), cy + d * a.sin())
                })
                .collect();
            let mut props = Properties::new();
            props.insert("type".into(), PropertyValue::Text(TYPES[rng.gen_range(0..TYPES.len())].into()));
            props.insert("prob".into(), PropertyValue::Number(rng.gen_range(0.0..1.0)));
            (Geometry::polygon(ring, Vec::new()).unwrap(), props)
        })
        .collect()
}

pub fn random_store(seed: u64, n: usize, extent: f64, max_r: f64) -> AnnotationStore {
    let mut store = AnnotationStore::in_memory().unwrap();
    store.insert_annotations(random_items(seed, n, extent, max_r)).unwrap();
    store
}
