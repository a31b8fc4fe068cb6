//! Deterministic sample data: a synthetic slide with every overlay kind.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use tileviz_core::slide::generate_synthetic_slide;
use tileviz_core::store::{Properties, PropertyValue};
use tileviz_core::{AnnotationStore, Geometry};

pub const DEMO_TYPES: [&str; 3] = ["gland", "lumen", "stroma"];

/// A star-shaped simple polygon with `k` vertices around (cx, cy).
pub fn star_polygon(rng: &mut impl Rng, cx: f64, cy: f64, r_min: f64, r_max: f64, k: usize) -> Geometry {
    let coords = (0..k)
        .map(|i| {
            let a = TAU * (i as f64 + rng.gen_range(0.0..0.8)) / k as f64;
            let r = rng.gen_range(r_min..=r_max);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    Geometry::polygon(coords, Vec::new()).expect("star polygon is valid")
}

/// `n` random annotations over a `width`×`height` slide with `type`, `prob`
/// and `grade` properties.
pub fn random_annotations(seed: u64, n: usize, width: f64, height: f64, max_radius: f64) -> Vec<(Geometry, Properties)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let cx = rng.gen_range(0.0..width);
            let cy = rng.gen_range(0.0..height);
            let r = rng.gen_range(max_radius * 0.1..=max_radius);
            let k = rng.gen_range(3..=12);
            let geom = match i % 20 {
                0 => Geometry::point(cx, cy).unwrap(),
                1 => Geometry::polyline(vec![(cx, cy), (cx + r, cy + r / 2.0), (cx + 2.0 * r, cy)]).unwrap(),
                _ => star_polygon(&mut rng, cx, cy, r * 0.4, r, k),
            };
            let mut props = Properties::new();
            props.insert("type".into(), PropertyValue::Text(DEMO_TYPES[rng.gen_range(0..DEMO_TYPES.len())].into()));
            props.insert("prob".into(), PropertyValue::Number((rng.gen_range(0.0..1.0f64) * 1000.0).round() / 1000.0));
            props.insert("grade".into(), PropertyValue::Number(rng.gen_range(1..=3) as f64));
            (geom, props)
        })
        .collect()
}

/// Writes `slides/<id>/` and one overlay of each kind into `root`.
pub fn write_demo_workspace(root: &Path, id: &str, width: u32, height: u32, annotations: usize) -> Result<()> {
    let slides = root.join("slides");
    let overlays = root.join("overlays");
    fs::create_dir_all(&slides)?;
    fs::create_dir_all(&overlays)?;
    generate_synthetic_slide(width, height, slides.join(id)).context("writing synthetic slide")?;

    let (w, h) = (width as f64, height as f64);
    let db = overlays.join(format!("{id}_glands.db"));
    if db.exists() {
        fs::remove_file(&db)?;
    }
    let mut store = AnnotationStore::create(&db)?;
    store.insert_annotations(random_annotations(7, annotations, w, h, w.min(h) / 20.0))?;
    drop(store);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let features: Vec<serde_json::Value> = random_annotations(13, 40, w, h, w.min(h) / 30.0)
        .into_iter()
        .map(|(g, p)| {
            json!({
                "type": "Feature",
                "properties": tileviz_core::store::properties_to_json(&p),
                "geometry": {"type": "Polygon", "coordinates": [g.exterior().iter().chain(g.exterior().first()).map(|&(x, y)| [x, y]).collect::<Vec<_>>()]},
            })
        })
        .collect();
    fs::write(
        overlays.join(format!("{id}_cells.geojson")),
        serde_json::to_vec_pretty(&json!({"type": "FeatureCollection", "features": features}))?,
    )?;

    let (cols, rows) = (12usize, 9usize);
    let mut coords = Vec::new();
    let mut feats = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 + 0.5) * w / cols as f64 + rng.gen_range(-10.0..10.0);
            let y = (r as f64 + 0.5) * h / rows as f64 + rng.gen_range(-10.0..10.0);
            coords.push([x, y]);
            feats.push([c as f64 / (cols - 1) as f64, rng.gen_range(0.0..1.0)]);
        }
    }
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                src.push(i);
                dst.push(i + 1);
            }
            if r + 1 < rows {
                src.push(i);
                dst.push(i + cols);
            }
        }
    }
    fs::write(
        overlays.join(format!("{id}_graph.json")),
        serde_json::to_vec(&json!({
            "coordinates": coords,
            "edge_index": [src, dst],
            "feats": feats,
            "feat_names": ["column", "score"],
        }))?,
    )?;

    let (hw, hh) = ((width / 32).max(1), (height / 32).max(1));
    let heat = image::GrayImage::from_fn(hw, hh, |x, y| {
        let dx = x as f64 / hw as f64 - 0.5;
        let dy = y as f64 / hh as f64 - 0.5;
        image::Luma([(255.0 * (1.0 - (dx * dx + dy * dy).sqrt() * 1.8).clamp(0.0, 1.0)).round() as u8])
    });
    heat.save(overlays.join(format!("{id}_heatmap.png")))?;
    Ok(())
}
