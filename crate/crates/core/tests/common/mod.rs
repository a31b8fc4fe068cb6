//! Random inputs and brute-force reference implementations.
//!
//! The oracles here work straight from the definitions and share no code
//! with the library's geometry, index or rasterizer.

#![allow(dead_code)]

pub mod filters;

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tileviz_core::filter::evaluate_filter;
use tileviz_core::geometry::{BBox, GeometryKind};
use tileviz_core::render::{AnnotationLayerParams, PixelRegion};
use tileviz_core::store::{Annotation, Properties, PropertyValue};
use tileviz_core::{Geometry, RasterImage, Rgba};

pub const TYPES: [&str; 4] = ["gland", "lumen", "stroma", "nucleus"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn star(rng: &mut impl Rng, cx: f64, cy: f64, r_min: f64, r_max: f64, k: usize) -> Vec<(f64, f64)> {
    (0..k)
        .map(|i| {
            let a = TAU * (i as f64 + rng.gen_range(0.0..0.8)) / k as f64;
            let r = rng.gen_range(r_min..=r_max);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

/// A star polygon, sometimes with a hole around its center.
pub fn random_polygon(rng: &mut impl Rng, cx: f64, cy: f64, r_max: f64) -> Geometry {
    let k = rng.gen_range(3..=14);
    let exterior = star(rng, cx, cy, r_max * 0.5, r_max, k);
    let holes = if rng.gen_bool(0.25) {
        let k = rng.gen_range(3..=6);
        vec![star(rng, cx, cy, r_max * 0.1, r_max * 0.3, k)]
    } else {
        Vec::new()
    };
    Geometry::polygon(exterior, holes).unwrap()
}

pub fn random_props(rng: &mut impl Rng) -> Properties {
    let mut p = Properties::new();
    if rng.gen_bool(0.95) {
        p.insert("type".into(), PropertyValue::Text(TYPES[rng.gen_range(0..TYPES.len())].into()));
    }
    p.insert("prob".into(), PropertyValue::Number(rng.gen_range(0.0..1.0)));
    if rng.gen_bool(0.5) {
        p.insert("grade".into(), PropertyValue::Number(rng.gen_range(1..=3) as f64));
    }
    p
}

/// Mixed polygons (85%), polylines and points scattered over
/// `[0, extent)²` with feature sizes up to `max_r`.
pub fn random_items(rng: &mut impl Rng, n: usize, extent: f64, max_r: f64) -> Vec<(Geometry, Properties)> {
    (0..n)
        .map(|_| {
            let cx = rng.gen_range(0.0..extent);
            let cy = rng.gen_range(0.0..extent);
            let r = rng.gen_range(max_r * 0.05..=max_r);
            let roll: f64 = rng.gen();
            let geom = if roll < 0.85 {
                random_polygon(rng, cx, cy, r)
            } else if roll < 0.93 {
                let k = rng.gen_range(2..=6);
                Geometry::polyline((0..k).map(|_| (cx + rng.gen_range(-r..r), cy + rng.gen_range(-r..r))).collect())
                    .unwrap()
            } else {
                Geometry::point(cx, cy).unwrap()
            };
            (geom, random_props(rng))
        })
        .collect()
}

pub fn random_bbox(rng: &mut impl Rng, extent: f64, max_size: f64) -> BBox {
    let x = rng.gen_range(-max_size..extent);
    let y = rng.gen_range(-max_size..extent);
    BBox::new(x, y, x + rng.gen_range(0.0..max_size), y + rng.gen_range(0.0..max_size))
}

fn segments(g: &Geometry) -> Vec<((f64, f64), (f64, f64))> {
    let mut out = Vec::new();
    let mut ring = |pts: &[(f64, f64)], closed: bool| {
        for w in pts.windows(2) {
            out.push((w[0], w[1]));
        }
        if closed && pts.len() > 2 {
            out.push((pts[pts.len() - 1], pts[0]));
        }
    };
    let closed = g.kind() == GeometryKind::Polygon;
    ring(g.exterior(), closed);
    for h in g.holes() {
        ring(h, closed);
    }
    out
}

fn extremes(g: &Geometry) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in g.exterior().iter().chain(g.holes().iter().flatten()) {
        b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
    }
    b
}

/// Distance from `p` to segment `ab`.
pub fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0) };
    let (dx, dy) = (a.0 + t * vx - p.0, a.1 + t * vy - p.1);
    dx.hypot(dy)
}

/// Distance from `p` to the outline (or the point/polyline itself).
pub fn outline_dist(g: &Geometry, p: (f64, f64)) -> f64 {
    if g.kind() == GeometryKind::Point {
        let q = g.exterior()[0];
        return (q.0 - p.0).hypot(q.1 - p.1);
    }
    segments(g).into_iter().map(|(a, b)| seg_dist(p, a, b)).fold(f64::INFINITY, f64::min)
}

fn exactly_on(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    cross == 0.0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Even-odd ray cast to +x, all rings; the outline itself counts as inside.
pub fn polygon_contains(g: &Geometry, p: (f64, f64)) -> bool {
    let segs = segments(g);
    if segs.iter().any(|&(a, b)| exactly_on(p, a, b)) {
        return true;
    }
    let mut inside = false;
    for (a, b) in segs {
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            inside = !inside;
        }
    }
    inside
}

fn boxes_meet(a: (f64, f64, f64, f64), q: &BBox) -> bool {
    a.0 <= q.max_x && q.min_x <= a.2 && a.1 <= q.max_y && q.min_y <= a.3
}

/// Linear-scan `query_bbox`.
pub fn oracle_bbox(anns: &[Annotation], q: &BBox, filter: Option<&tileviz_core::FilterExpr>) -> Vec<i64> {
    let mut ids: Vec<i64> = anns
        .iter()
        .filter(|a| boxes_meet(extremes(&a.geometry), q))
        .filter(|a| filter.is_none_or(|f| evaluate_filter(f, &a.properties)))
        .map(|a| a.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// Linear-scan `query_point`.
pub fn oracle_point(anns: &[Annotation], x: f64, y: f64, tol: f64) -> Vec<i64> {
    let mut hits: Vec<(f64, i64)> = anns
        .iter()
        .filter(|a| match a.geometry.kind() {
            GeometryKind::Polygon => polygon_contains(&a.geometry, (x, y)),
            _ => outline_dist(&a.geometry, (x, y)) <= tol,
        })
        .map(|a| {
            let b = extremes(&a.geometry);
            ((b.2 - b.0) * (b.3 - b.1), a.id)
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|h| h.1).collect()
}

/// The annotation layer evaluated pixel by pixel from the definition, over
/// every annotation with a plain bbox reject (no index).
pub fn oracle_annotation_region(anns: &[Annotation], params: &AnnotationLayerParams, region: PixelRegion) -> RasterImage {
    let scale = (1u64 << region.z) as f64;
    let half = params.edge_thickness / 2.0;
    let edge = params.edge_color.with_alpha(255);
    let mut img = RasterImage::transparent(region.width, region.height);
    let mut ordered: Vec<&Annotation> = anns.iter().collect();
    ordered.sort_by_key(|a| a.id);
    for a in ordered {
        if !params.filter.as_ref().is_none_or(|f| evaluate_filter(f, &a.properties)) || !params.shows(a) {
            continue;
        }
        let b = extremes(&a.geometry);
        // Nothing beyond the stroke half-width (plus a pixel) of the region can paint.
        let reach = (half.max(0.0) + 1.0) * scale;
        let (rx0, ry0) = (region.x as f64 * scale - reach, region.y as f64 * scale - reach);
        let (rx1, ry1) = ((region.x + region.width as i64) as f64 * scale + reach, (region.y + region.height as i64) as f64 * scale + reach);
        if b.2 < rx0 || b.0 > rx1 || b.3 < ry0 || b.1 > ry1 {
            continue;
        }
        if (b.2 - b.0) / scale < 1.0 && (b.3 - b.1) / scale < 1.0 {
            let gx = ((b.0 + b.2) / 2.0 / scale).floor() as i64 - region.x;
            let gy = ((b.1 + b.3) / 2.0 / scale).floor() as i64 - region.y;
            if (0..region.width as i64).contains(&gx) && (0..region.height as i64).contains(&gy) {
                img.blend(gx as u32, gy as u32, edge);
            }
            continue;
        }
        let fill = params.color_source.color_for(a).with_alpha(params.fill_alpha);
        for j in 0..region.height {
            for i in 0..region.width {
                let c = (
                    ((region.x + i as i64) as f64 + 0.5) * scale,
                    ((region.y + j as i64) as f64 + 0.5) * scale,
                );
                let color = if outline_dist(&a.geometry, c) / scale <= half {
                    edge
                } else if a.geometry.kind() == GeometryKind::Polygon && polygon_contains(&a.geometry, c) {
                    fill
                } else {
                    continue;
                };
                img.blend(i, j, color);
            }
        }
    }
    img
}

/// Level `level` of the synthetic test slide, built by repeated 2×2 box
/// filtering of the level-0 pattern.
pub fn oracle_synthetic_level(width: u32, height: u32, level: u32) -> Vec<Vec<[u8; 4]>> {
    let mut cur: Vec<Vec<[u8; 4]>> = (0..height)
        .map(|y| {
            (0..width)
                .map(|x| [(x % 256) as u8, (y % 256) as u8, ((x / 256 + y / 256) % 256) as u8, 255])
                .collect()
        })
        .collect();
    for _ in 0..level {
        let h = cur.len();
        let w = cur[0].len();
        let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
        let at = |x: usize, y: usize| cur[y.min(h - 1)][x.min(w - 1)];
        cur = (0..nh)
            .map(|y| {
                (0..nw)
                    .map(|x| {
                        let mut px = [0u8; 4];
                        for (c, out) in px.iter_mut().enumerate() {
                            let s: u32 = [at(2 * x, 2 * y), at(2 * x + 1, 2 * y), at(2 * x, 2 * y + 1), at(2 * x + 1, 2 * y + 1)]
                                .iter()
                                .map(|p| p[c] as u32)
                                .sum();
                            *out = ((s + 2) / 4) as u8;
                        }
                        px
                    })
                    .collect()
            })
            .collect();
    }
    cur
}

pub fn count_painted(img: &RasterImage) -> usize {
    img.pixels().chunks(4).filter(|p| p[3] != 0).count()
}

pub fn first_mismatch(a: &RasterImage, b: &RasterImage) -> Option<(u32, u32, Rgba, Rgba)> {
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) != b.get(x, y) {
                return Some((x, y, a.get(x, y), b.get(x, y)));
            }
        }
    }
    None
}
