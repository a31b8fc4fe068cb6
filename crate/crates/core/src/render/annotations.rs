use std::collections::{BTreeMap, BTreeSet};

use super::colormap::{map_value_to_color, Colormap, DEFAULT_PALETTE};
use super::{check_range, pixel_center, PixelRegion, RenderError, TileCoord};
use crate::filter::FilterExpr;
use crate::geometry::{edge_crossing, on_segment, point_distance, segment_distance, BBox, GeometryKind};
use crate::raster::{RasterImage, Rgb};
use crate::store::{Annotation, AnnotationStore};

#[derive(Debug, Clone, PartialEq)]
pub enum ColorSource {
    Fixed(Rgb),
    /// Per-type colors; annotations with an unlisted or missing type use `fallback`.
    ByType { colors: BTreeMap<String, Rgb>, fallback: Rgb },
    /// Numeric property through a colormap; non-numeric or missing values use `fallback`.
    ByProperty { key: String, colormap: Colormap, range: (f64, f64), fallback: Rgb },
}

impl ColorSource {
    pub fn by_property(
        key: &str,
        colormap: Colormap,
        range: (f64, f64),
        fallback: Rgb,
    ) -> Result<Self, RenderError> {
        check_range(range)?;
        Ok(ColorSource::ByProperty { key: key.to_string(), colormap, range, fallback })
    }

    pub fn color_for(&self, a: &Annotation) -> Rgb {
        match self {
            ColorSource::Fixed(c) => *c,
            ColorSource::ByType { colors, fallback } => {
                a.annotation_type().and_then(|t| colors.get(t)).copied().unwrap_or(*fallback)
            }
            ColorSource::ByProperty { key, colormap, range, fallback } => a
                .properties
                .get(key)
                .and_then(|v| v.as_f64())
                .map_or(*fallback, |v| map_value_to_color(v, colormap, *range)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationLayerParams {
    pub filter: Option<FilterExpr>,
    /// `None` shows every annotation; otherwise only those whose text
    /// `type` property is in the set.
    pub visible_types: Option<BTreeSet<String>>,
    pub color_source: ColorSource,
    pub fill_alpha: u8,
    pub edge_color: Rgb,
    /// Stroke width in rendered pixels.
    pub edge_thickness: f64,
}

impl Default for AnnotationLayerParams {
    fn default() -> Self {
        AnnotationLayerParams {
            filter: None,
            visible_types: None,
            color_source: ColorSource::ByType { colors: BTreeMap::new(), fallback: DEFAULT_PALETTE[0] },
            fill_alpha: 255,
            edge_color: Rgb([0, 0, 0]),
            edge_thickness: 1.0,
        }
    }
}

impl AnnotationLayerParams {
    pub fn shows(&self, a: &Annotation) -> bool {
        match &self.visible_types {
            None => true,
            Some(types) => a.annotation_type().is_some_and(|t| types.contains(t)),
        }
    }
}

const NONE: u8 = 0;
const FILL: u8 = 1;
const EDGE: u8 = 2;

/// Per-annotation coverage over a window of level pixels.
struct Mask {
    x0: i64,
    y0: i64,
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl Mask {
    fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        let width = (x1 - x0) as usize;
        let height = (y1 - y0) as usize;
        Mask { x0, y0, width, height, cells: vec![NONE; width * height] }
    }

    fn x_end(&self) -> i64 {
        self.x0 + self.width as i64
    }

    fn y_end(&self) -> i64 {
        self.y0 + self.height as i64
    }

    #[inline]
    fn cell(&mut self, gx: i64, gy: i64) -> &mut u8 {
        let i = (gy - self.y0) as usize * self.width + (gx - self.x0) as usize;
        &mut self.cells[i]
    }

    fn cols(&self, lo: f64, hi: f64, reach: f64, scale: f64) -> (i64, i64) {
        pixel_span(lo, hi, reach, scale, self.x0, self.x_end())
    }

    fn rows(&self, lo: f64, hi: f64, reach: f64, scale: f64) -> (i64, i64) {
        pixel_span(lo, hi, reach, scale, self.y0, self.y_end())
    }
}

/// Half-open range of level pixels whose centers may lie within `reach`
/// rendered pixels of the baseline span `[lo, hi]`, clipped to `[start, end)`.
fn pixel_span(lo: f64, hi: f64, reach: f64, scale: f64, start: i64, end: i64) -> (i64, i64) {
    let a = (lo / scale - reach - 1.0).floor();
    let b = (hi / scale + reach + 1.0).ceil();
    let a = if a.is_finite() { a as i64 } else { start };
    let b = if b.is_finite() { b as i64 } else { end };
    (a.max(start), b.min(end))
}

fn fill_polygon(mask: &mut Mask, a: &Annotation, scale: f64) {
    let geom = &a.geometry;
    let mut crossings: Vec<f64> = Vec::new();
    for gy in mask.y0..mask.y_end() {
        let py = pixel_center(gy, scale);
        if py < a.bbox.min_y || py > a.bbox.max_y {
            continue;
        }
        crossings.clear();
        geom.for_each_segment(|p, q| {
            if let Some(x) = edge_crossing(py, p, q) {
                crossings.push(x);
            }
        });
        crossings.sort_unstable_by(f64::total_cmp);
        for gx in mask.x0..mask.x_end() {
            let px = pixel_center(gx, scale);
            // Crossing test: toggle for every crossing strictly right of px.
            let right = crossings.len() - crossings.partition_point(|&x| x <= px);
            if right % 2 == 1 {
                *mask.cell(gx, gy) = FILL;
            }
        }
        // Pixel centers lying exactly on the outline count as inside.
        geom.for_each_segment(|p, q| {
            if py < p.1.min(q.1) || py > p.1.max(q.1) {
                return;
            }
            let (lo, hi) = if p.1 == q.1 {
                (p.0.min(q.0), p.0.max(q.0))
            } else {
                let x = p.0 + (py - p.1) * (q.0 - p.0) / (q.1 - p.1);
                (x, x)
            };
            let (c0, c1) = mask.cols(lo, hi, 0.0, scale);
            for gx in c0..c1 {
                let cell = mask.cell(gx, gy);
                if *cell == NONE && on_segment((pixel_center(gx, scale), py), p, q) {
                    *cell = FILL;
                }
            }
        });
    }
}

fn stroke_segment(mask: &mut Mask, p: (f64, f64), q: (f64, f64), half: f64, scale: f64) {
    let (c0, c1) = mask.cols(p.0.min(q.0), p.0.max(q.0), half, scale);
    let (r0, r1) = mask.rows(p.1.min(q.1), p.1.max(q.1), half, scale);
    for gy in r0..r1 {
        let py = pixel_center(gy, scale);
        for gx in c0..c1 {
            let cell = mask.cell(gx, gy);
            if *cell != EDGE && segment_distance((pixel_center(gx, scale), py), p, q) / scale <= half {
                *cell = EDGE;
            }
        }
    }
}

fn paint(img: &mut RasterImage, region: &PixelRegion, a: &Annotation, params: &AnnotationLayerParams) {
    let scale = region.scale();
    let half = params.edge_thickness / 2.0;
    let edge = params.edge_color.with_alpha(255);
    let bb = &a.bbox;

    if bb.width() / scale < 1.0 && bb.height() / scale < 1.0 {
        let gx = ((bb.min_x + bb.max_x) / 2.0 / scale).floor() as i64;
        let gy = ((bb.min_y + bb.max_y) / 2.0 / scale).floor() as i64;
        if (region.x..region.x_end()).contains(&gx) && (region.y..region.y_end()).contains(&gy) {
            img.blend((gx - region.x) as u32, (gy - region.y) as u32, edge);
        }
        return;
    }

    let reach = if half.is_finite() { half.max(0.0) } else { 0.0 };
    let (x0, x1) = pixel_span(bb.min_x, bb.max_x, reach, scale, region.x, region.x_end());
    let (y0, y1) = pixel_span(bb.min_y, bb.max_y, reach, scale, region.y, region.y_end());
    if x0 >= x1 || y0 >= y1 {
        return;
    }
    let mut mask = Mask::new(x0, y0, x1, y1);
    match a.geometry.kind() {
        GeometryKind::Polygon => fill_polygon(&mut mask, a, scale),
        GeometryKind::Point => {
            let p = a.geometry.exterior()[0];
            for gy in y0..y1 {
                for gx in x0..x1 {
                    let c = (pixel_center(gx, scale), pixel_center(gy, scale));
                    if point_distance(c, p) / scale <= half {
                        *mask.cell(gx, gy) = EDGE;
                    }
                }
            }
        }
        GeometryKind::Polyline => {}
    }
    a.geometry.for_each_segment(|p, q| stroke_segment(&mut mask, p, q, half, scale));

    let fill = params.color_source.color_for(a).with_alpha(params.fill_alpha);
    for gy in y0..y1 {
        for gx in x0..x1 {
            let color = match *mask.cell(gx, gy) {
                EDGE => edge,
                FILL => fill,
                _ => continue,
            };
            img.blend((gx - region.x) as u32, (gy - region.y) as u32, color);
        }
    }
}

/// Renders the annotation layer over an arbitrary level-pixel region.
pub fn rasterize_annotation_region(
    store: &AnnotationStore,
    params: &AnnotationLayerParams,
    region: PixelRegion,
) -> RasterImage {
    let mut img = RasterImage::transparent(region.width, region.height);
    let scale = region.scale();
    let half = params.edge_thickness / 2.0;
    let reach = (if half.is_finite() { half.max(0.0) } else { 0.0 } + 1.0) * scale;
    let query = BBox::new(
        region.x as f64 * scale - reach,
        region.y as f64 * scale - reach,
        region.x_end() as f64 * scale + reach,
        region.y_end() as f64 * scale + reach,
    );
    for a in store.query_bbox(&query, params.filter.as_ref()) {
        if params.shows(a) {
            paint(&mut img, &region, a, params);
        }
    }
    img
}

/// Renders one 256×256 annotation tile. Tiles without candidates are fully
/// transparent.
pub fn rasterize_annotation_tile(
    store: &AnnotationStore,
    params: &AnnotationLayerParams,
    tile: TileCoord,
) -> RasterImage {
    rasterize_annotation_region(store, params, tile.region())
}
