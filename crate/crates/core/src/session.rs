//! Viewer sessions: a base slide plus an ordered stack of overlay layers.
//!
//! Every mutation bumps the session version. Each layer remembers the
//! version at which it last changed, so a tile URL stays valid until its own
//! layer changes, regardless of edits to other layers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::ProjectConfig;
use crate::filter::{parse_filter, unparse};
use crate::geometry::BBox;
use crate::graph::Graph;
use crate::raster::{RasterImage, Rgb};
use crate::render::{
    assign_type_colors, composite, rasterize_annotation_tile, rasterize_graph_tile, resample_heatmap_tile,
    slide_overlay_tile, AnnotationLayerParams, ColorSource, Colormap, GraphLayerParams, ImageLayerParams,
    NodeColorSource, RenderError, Resample, TileCoord, DEFAULT_PALETTE,
};
use crate::slide::{level_dimensions, FlatOverlayImage, OverlayChannels, SlideError, SlidePyramid, TILE_SIZE};
use crate::store::{properties_to_json, AnnotationStore};

pub const BASE_LAYER_ID: &str = "base";

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("unknown layer {0}")]
    UnknownLayer(String),
    #[error("{0}")]
    LayerCombination(String),
    #[error("{field}: {message}")]
    InvalidDelta { field: String, message: String },
    #[error("the base slide layer cannot be removed")]
    BaseLayer,
    #[error("overlay does not match the slide: {0}")]
    Incompatible(String),
}

#[derive(Debug, Error)]
pub enum TileError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Slide(#[from] SlideError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SessionError {
    SessionError::InvalidDelta { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone)]
pub enum LayerSource {
    Slide,
    Annotations(Arc<AnnotationStore>),
    Graph(Arc<Graph>),
    Heatmap(Arc<FlatOverlayImage>),
    SlideOverlay(Arc<SlidePyramid>),
}

impl LayerSource {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSource::Slide => "slide",
            LayerSource::Annotations(_) => "annotations",
            LayerSource::Graph(_) => "graph",
            LayerSource::Heatmap(_) => "image-overlay",
            LayerSource::SlideOverlay(_) => "slide-overlay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Slide,
    Annotation(AnnotationLayerParams),
    Graph(GraphLayerParams),
    Image(ImageLayerParams),
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub id: String,
    /// Workspace-relative path of the overlay, if any.
    pub source_path: Option<String>,
    pub source: LayerSource,
    pub params: LayerParams,
    pub visible: bool,
    /// Session version at which this layer was added or last modified.
    pub changed_at: u64,
}

impl Layer {
    pub fn describe(&self) -> Value {
        json!({
            "layer_id": self.id,
            "kind": self.source.kind(),
            "source": self.source_path,
            "visible": self.visible,
            "changed_at": self.changed_at,
            "params": params_to_json(&self.params),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    slide: Arc<SlidePyramid>,
    config: Arc<ProjectConfig>,
    layers: Vec<Arc<Layer>>,
    version: u64,
    next_layer: u64,
}

impl Session {
    /// A session showing only the base slide, at version 1.
    pub fn new(id: impl Into<String>, slide: Arc<SlidePyramid>, config: Arc<ProjectConfig>) -> Self {
        let base = Layer {
            id: BASE_LAYER_ID.to_string(),
            source_path: None,
            source: LayerSource::Slide,
            params: LayerParams::Slide,
            visible: true,
            changed_at: 1,
        };
        Session { id: id.into(), slide, config, layers: vec![Arc::new(base)], version: 1, next_layer: 1 }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn slide(&self) -> &Arc<SlidePyramid> {
        &self.slide
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn layers(&self) -> &[Arc<Layer>] {
        &self.layers
    }

    pub fn layer(&self, id: &str) -> Option<&Arc<Layer>> {
        self.layers.iter().find(|l| l.id == id)
    }

    fn position(&self, id: &str) -> Result<usize, SessionError> {
        self.layers.iter().position(|l| l.id == id).ok_or_else(|| SessionError::UnknownLayer(id.to_string()))
    }

    pub fn annotation_layer(&self) -> Option<(&Layer, &AnnotationStore)> {
        self.layers.iter().find_map(|l| match &l.source {
            LayerSource::Annotations(s) => Some((l.as_ref(), s.as_ref())),
            _ => None,
        })
    }

    pub fn graph_layer(&self) -> Option<(&Layer, &Graph)> {
        self.layers.iter().find_map(|l| match &l.source {
            LayerSource::Graph(g) => Some((l.as_ref(), g.as_ref())),
            _ => None,
        })
    }

    /// Adds an overlay layer with default parameters, then applies `delta`.
    pub fn add_layer(
        &mut self,
        source: LayerSource,
        source_path: Option<String>,
        delta: Option<&Value>,
    ) -> Result<(String, u64), SessionError> {
        let params = match &source {
            LayerSource::Slide => return Err(SessionError::LayerCombination("a session has one base slide".into())),
            LayerSource::Annotations(store) => {
                if self.annotation_layer().is_some() {
                    return Err(SessionError::LayerCombination(
                        "a session may hold at most one annotation layer".into(),
                    ));
                }
                LayerParams::Annotation(default_annotation_params(store, &self.config))
            }
            LayerSource::Graph(_) => {
                if self.graph_layer().is_some() {
                    return Err(SessionError::LayerCombination("a session may hold at most one graph layer".into()));
                }
                LayerParams::Graph(GraphLayerParams::default())
            }
            LayerSource::Heatmap(img) => LayerParams::Image(ImageLayerParams {
                colormap: (img.channels == OverlayChannels::GraySingleChannel).then(|| self.config.colormap()),
                ..Default::default()
            }),
            LayerSource::SlideOverlay(p) => {
                if (p.width(), p.height()) != (self.slide.width(), self.slide.height()) {
                    return Err(SessionError::Incompatible(format!(
                        "overlay pyramid is {}x{}, slide is {}x{}",
                        p.width(),
                        p.height(),
                        self.slide.width(),
                        self.slide.height()
                    )));
                }
                LayerParams::Image(ImageLayerParams::default())
            }
        };
        let mut layer = Layer {
            id: format!("l{}", self.next_layer),
            source_path,
            source,
            params,
            visible: true,
            changed_at: self.version + 1,
        };
        if let Some(d) = delta {
            apply_delta(&mut layer, d, &self.config)?;
        }
        let id = layer.id.clone();
        self.next_layer += 1;
        self.version += 1;
        self.layers.push(Arc::new(layer));
        Ok((id, self.version))
    }

    /// Applies a parameter delta atomically: either every field applies and
    /// the version is bumped, or nothing changes.
    pub fn update_layer(&mut self, id: &str, delta: &Value) -> Result<u64, SessionError> {
        let pos = self.position(id)?;
        let mut layer = self.layers[pos].as_ref().clone();
        apply_delta(&mut layer, delta, &self.config)?;
        self.version += 1;
        layer.changed_at = self.version;
        self.layers[pos] = Arc::new(layer);
        Ok(self.version)
    }

    pub fn remove_layer(&mut self, id: &str) -> Result<u64, SessionError> {
        let pos = self.position(id)?;
        if pos == 0 {
            return Err(SessionError::BaseLayer);
        }
        self.layers.remove(pos);
        self.version += 1;
        Ok(self.version)
    }

    /// Visible layers in drawing order: slide, slide overlays and heatmaps
    /// in insertion order, annotations, graph.
    pub fn draw_order(&self) -> Vec<Arc<Layer>> {
        let rank = |l: &Layer| match l.source {
            LayerSource::Slide => 0,
            LayerSource::Heatmap(_) | LayerSource::SlideOverlay(_) => 1,
            LayerSource::Annotations(_) => 2,
            LayerSource::Graph(_) => 3,
        };
        let mut out: Vec<Arc<Layer>> = self.layers.iter().filter(|l| l.visible).cloned().collect();
        out.sort_by_key(|l| rank(l));
        out
    }

    /// Version after which the composite of all layers last changed.
    pub fn composite_changed_at(&self) -> u64 {
        self.layers.iter().map(|l| l.changed_at).max().unwrap_or(1)
    }

    /// Annotations under (x, y) that the annotation layer currently shows,
    /// smallest first, and the nearest graph node within `tolerance`.
    pub fn lookup(&self, x: f64, y: f64, tolerance: f64) -> Value {
        let mut annotations = Vec::new();
        if let Some((layer, store)) = self.annotation_layer() {
            if let LayerParams::Annotation(p) = &layer.params {
                for a in store.query_point(x, y, tolerance) {
                    let passes = p.filter.as_ref().is_none_or(|f| crate::filter::evaluate_filter(f, &a.properties));
                    if layer.visible && p.shows(a) && passes {
                        annotations.push(json!({
                            "id": a.id,
                            "bbox": [a.bbox.min_x, a.bbox.min_y, a.bbox.max_x, a.bbox.max_y],
                            "properties": properties_to_json(&a.properties),
                        }));
                    }
                }
            }
        }
        let node = self.graph_layer().and_then(|(_, g)| g.nearest_node(x, y, tolerance)).map(|hit| {
            json!({
                "index": hit.index,
                "distance": hit.distance,
                "features": hit.features,
                "feature_names": hit.feature_names,
            })
        });
        json!({ "annotations": annotations, "node": node })
    }

    /// Property keys of the annotation layer's store with summary statistics.
    pub fn property_summary(&self) -> Value {
        let Some((_, store)) = self.annotation_layer() else {
            return json!({ "properties": {} });
        };
        let mut props = Map::new();
        for key in store.property_keys() {
            let s = store.property_stats(&key);
            props.insert(
                key,
                json!({
                    "numeric_min": s.numeric_min,
                    "numeric_max": s.numeric_max,
                    "distinct_text_values": s.distinct_text_values,
                    "text_values_truncated": s.text_values_truncated,
                }),
            );
        }
        json!({ "annotation_count": store.len(), "properties": props })
    }
}

/// Whether (z, x, y) addresses a tile of the slide's grid.
pub fn tile_in_range(slide: &SlidePyramid, tile: TileCoord) -> bool {
    if tile.z >= slide.grid_levels() {
        return false;
    }
    let (w, h) = level_dimensions(slide.width(), slide.height(), tile.z);
    tile.x < w.div_ceil(TILE_SIZE) && tile.y < h.div_ceil(TILE_SIZE)
}

/// Renders one layer. Hidden layers give a transparent tile.
pub fn render_layer_tile(slide: &SlidePyramid, layer: &Layer, tile: TileCoord) -> Result<RasterImage, TileError> {
    if !layer.visible {
        return Ok(RasterImage::transparent(TILE_SIZE, TILE_SIZE));
    }
    Ok(match (&layer.source, &layer.params) {
        (LayerSource::Slide, _) => slide.read_grid_tile(tile.z, tile.x, tile.y)?,
        (LayerSource::Annotations(store), LayerParams::Annotation(p)) => rasterize_annotation_tile(store, p, tile),
        (LayerSource::Graph(g), LayerParams::Graph(p)) => rasterize_graph_tile(g, p, tile)?,
        (LayerSource::Heatmap(img), LayerParams::Image(p)) => resample_heatmap_tile(img, p, tile, slide)?,
        (LayerSource::SlideOverlay(pyr), LayerParams::Image(p)) => slide_overlay_tile(pyr, p, tile)?,
        _ => unreachable!("layer params always match their source"),
    })
}

/// Composites the given layers bottom to top.
pub fn render_composite_tile(
    slide: &SlidePyramid,
    layers: &[Arc<Layer>],
    tile: TileCoord,
) -> Result<RasterImage, TileError> {
    let tiles = layers.iter().map(|l| render_layer_tile(slide, l, tile)).collect::<Result<Vec<_>, _>>()?;
    Ok(composite(&tiles)?)
}

fn default_annotation_params(store: &AnnotationStore, config: &ProjectConfig) -> AnnotationLayerParams {
    let types: BTreeSet<&str> = store.iter().filter_map(|a| a.annotation_type()).collect();
    AnnotationLayerParams {
        color_source: ColorSource::ByType {
            colors: assign_type_colors(types, &config.type_colors()),
            fallback: DEFAULT_PALETTE[0],
        },
        fill_alpha: config.default_fill_alpha,
        ..Default::default()
    }
}

fn as_object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>, SessionError> {
    v.as_object().ok_or_else(|| invalid(field, "expected an object"))
}

fn as_bool(v: &Value, field: &str) -> Result<bool, SessionError> {
    v.as_bool().ok_or_else(|| invalid(field, "expected a boolean"))
}

fn as_byte(v: &Value, field: &str) -> Result<u8, SessionError> {
    match v.as_u64() {
        Some(n) if n <= 255 => Ok(n as u8),
        _ => Err(invalid(field, "expected an integer in 0..=255")),
    }
}

fn as_non_negative(v: &Value, field: &str) -> Result<f64, SessionError> {
    match v.as_f64() {
        Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(invalid(field, "expected a non-negative number")),
    }
}

fn as_rgb(v: &Value, field: &str) -> Result<Rgb, SessionError> {
    let arr = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| invalid(field, "expected [r, g, b]"))?;
    let mut out = [0u8; 3];
    for (i, c) in arr.iter().enumerate() {
        out[i] = as_byte(c, &format!("{field}[{i}]"))?;
    }
    Ok(Rgb(out))
}

fn as_range(v: &Value, field: &str) -> Result<(f64, f64), SessionError> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
        .ok_or_else(|| invalid(field, "expected [min, max]"))?;
    if pair.0 < pair.1 {
        Ok(pair)
    } else {
        Err(invalid(field, "range must satisfy min < max"))
    }
}

/// A colormap by name, `{"control_points": [[t, [r,g,b]], ...]}` or
/// `{"palette": [[r,g,b], ...]}`.
pub fn colormap_from_json(v: &Value, field: &str) -> Result<Colormap, SessionError> {
    if let Some(name) = v.as_str() {
        return Colormap::by_name(name).ok_or_else(|| {
            invalid(field, format!("unknown colormap {name:?} (known: {})", Colormap::NAMES.join(", ")))
        });
    }
    let obj = as_object(v, field)?;
    if let Some(points) = obj.get("control_points") {
        let f = format!("{field}.control_points");
        let arr = points.as_array().ok_or_else(|| invalid(&f, "expected an array"))?;
        let mut out = Vec::with_capacity(arr.len());
        for (i, p) in arr.iter().enumerate() {
            let pf = format!("{f}[{i}]");
            let pair = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| invalid(&pf, "expected [t, [r, g, b]]"))?;
            let t = pair[0].as_f64().ok_or_else(|| invalid(&pf, "t must be a number"))?;
            out.push((t, as_rgb(&pair[1], &pf)?));
        }
        return Colormap::continuous(out).map_err(|e| invalid(&f, e.to_string()));
    }
    if let Some(palette) = obj.get("palette") {
        let f = format!("{field}.palette");
        let arr = palette.as_array().ok_or_else(|| invalid(&f, "expected an array"))?;
        let colors = arr.iter().enumerate().map(|(i, c)| as_rgb(c, &format!("{f}[{i}]"))).collect::<Result<_, _>>()?;
        return Colormap::categorical(colors).map_err(|e| invalid(&f, e.to_string()));
    }
    Err(invalid(field, "expected a colormap name or an object with control_points or palette"))
}

fn colormap_to_json(c: &Colormap) -> Value {
    match c {
        Colormap::Continuous(points) => {
            json!({ "control_points": points.iter().map(|(t, c)| json!([t, c.0])).collect::<Vec<_>>() })
        }
        Colormap::Categorical(p) => json!({ "palette": p.iter().map(|c| c.0).collect::<Vec<_>>() }),
    }
}

fn kind_of<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a str, SessionError> {
    obj.get("kind").and_then(|k| k.as_str()).ok_or_else(|| invalid(format!("{field}.kind"), "expected a string"))
}

fn check_keys(obj: &Map<String, Value>, field: &str, allowed: &[&str]) -> Result<(), SessionError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(invalid(format!("{field}.{k}"), "unknown key")),
        None => Ok(()),
    }
}

fn color_source_from_json(
    v: &Value,
    store: &AnnotationStore,
    current: &ColorSource,
    config: &ProjectConfig,
) -> Result<ColorSource, SessionError> {
    const F: &str = "color_source";
    let obj = as_object(v, F)?;
    let fallback = match current {
        ColorSource::Fixed(_) => DEFAULT_PALETTE[0],
        ColorSource::ByType { fallback, .. } | ColorSource::ByProperty { fallback, .. } => *fallback,
    };
    match kind_of(obj, F)? {
        "fixed" => {
            check_keys(obj, F, &["kind", "color"])?;
            let c = obj.get("color").ok_or_else(|| invalid("color_source.color", "required"))?;
            Ok(ColorSource::Fixed(as_rgb(c, "color_source.color")?))
        }
        "by_type" => {
            check_keys(obj, F, &["kind", "colors"])?;
            let types: BTreeSet<&str> = store.iter().filter_map(|a| a.annotation_type()).collect();
            let mut colors = assign_type_colors(types, &config.type_colors());
            if let Some(given) = obj.get("colors") {
                for (t, c) in as_object(given, "color_source.colors")? {
                    colors.insert(t.clone(), as_rgb(c, &format!("color_source.colors.{t}"))?);
                }
            }
            Ok(ColorSource::ByType { colors, fallback })
        }
        "by_property" => {
            check_keys(obj, F, &["kind", "key", "colormap", "range"])?;
            let key = obj
                .get("key")
                .and_then(|k| k.as_str())
                .ok_or_else(|| invalid("color_source.key", "expected a string"))?;
            let colormap = match obj.get("colormap") {
                Some(c) => colormap_from_json(c, "color_source.colormap")?,
                None => config.colormap(),
            };
            let range = match obj.get("range") {
                Some(r) => as_range(r, "color_source.range")?,
                None => {
                    let stats = store.property_stats(key);
                    match (stats.numeric_min, stats.numeric_max) {
                        (Some(lo), Some(hi)) if lo < hi => (lo, hi),
                        (Some(lo), Some(_)) => (lo, lo + 1.0),
                        _ => return Err(invalid("color_source.key", format!("property {key:?} has no numeric values"))),
                    }
                }
            };
            ColorSource::by_property(key, colormap, range, fallback).map_err(|e| invalid(F, e.to_string()))
        }
        other => Err(invalid("color_source.kind", format!("unknown kind {other:?}"))),
    }
}

fn node_color_from_json(v: &Value, graph: &Graph, config: &ProjectConfig) -> Result<NodeColorSource, SessionError> {
    const F: &str = "node_color_source";
    let obj = as_object(v, F)?;
    match kind_of(obj, F)? {
        "fixed" => {
            check_keys(obj, F, &["kind", "color"])?;
            let c = obj.get("color").ok_or_else(|| invalid("node_color_source.color", "required"))?;
            Ok(NodeColorSource::Fixed(as_rgb(c, "node_color_source.color")?))
        }
        "by_feature" => {
            check_keys(obj, F, &["kind", "index", "colormap", "range"])?;
            let index = obj
                .get("index")
                .and_then(|i| i.as_u64())
                .ok_or_else(|| invalid("node_color_source.index", "expected a non-negative integer"))?
                as usize;
            if index >= graph.feature_count() {
                return Err(invalid(
                    "node_color_source.index",
                    RenderError::FeatureOutOfRange { index, count: graph.feature_count() }.to_string(),
                ));
            }
            let colormap = match obj.get("colormap") {
                Some(c) => colormap_from_json(c, "node_color_source.colormap")?,
                None => config.colormap(),
            };
            let range = match obj.get("range") {
                Some(r) => as_range(r, "node_color_source.range")?,
                None => match graph.feature_range(index) {
                    Some((lo, hi)) if lo < hi => (lo, hi),
                    Some((lo, _)) => (lo, lo + 1.0),
                    None => (0.0, 1.0),
                },
            };
            Ok(NodeColorSource::ByFeature { index, colormap, range })
        }
        other => Err(invalid("node_color_source.kind", format!("unknown kind {other:?}"))),
    }
}

/// Applies a JSON parameter delta to `layer` in place. On error `layer` may
/// be partially modified; callers apply deltas to a copy.
pub fn apply_delta(layer: &mut Layer, delta: &Value, config: &ProjectConfig) -> Result<(), SessionError> {
    let obj = as_object(delta, "(delta)")?;
    for (key, v) in obj {
        let key = key.as_str();
        if key == "visible" {
            layer.visible = as_bool(v, key)?;
            continue;
        }
        match (&layer.source, &mut layer.params) {
            (LayerSource::Annotations(store), LayerParams::Annotation(p)) => match key {
                "filter" => {
                    p.filter = match v {
                        Value::Null => None,
                        Value::String(s) if s.trim().is_empty() => None,
                        Value::String(s) => Some(parse_filter(s).map_err(|e| invalid(key, e.to_string()))?),
                        _ => return Err(invalid(key, "expected filter source text or null")),
                    }
                }
                "visible_types" => {
                    p.visible_types = match v {
                        Value::Null => None,
                        Value::Array(items) => Some(
                            items
                                .iter()
                                .enumerate()
                                .map(|(i, t)| {
                                    t.as_str().map(str::to_string).ok_or_else(|| invalid(format!("{key}[{i}]"), "expected a string"))
                                })
                                .collect::<Result<_, _>>()?,
                        ),
                        _ => return Err(invalid(key, "expected an array of type names or null")),
                    }
                }
                "color_source" => p.color_source = color_source_from_json(v, store, &p.color_source, config)?,
                "fill_alpha" => p.fill_alpha = as_byte(v, key)?,
                "edge_color" => p.edge_color = as_rgb(v, key)?,
                "edge_thickness" => p.edge_thickness = as_non_negative(v, key)?,
                _ => return Err(invalid(key, "unknown parameter for an annotation layer")),
            },
            (LayerSource::Graph(graph), LayerParams::Graph(p)) => match key {
                "show_nodes" => p.show_nodes = as_bool(v, key)?,
                "show_edges" => p.show_edges = as_bool(v, key)?,
                "node_radius" => p.node_radius = as_non_negative(v, key)?,
                "node_color_source" => p.node_color_source = node_color_from_json(v, graph, config)?,
                "edge_color" => p.edge_color = as_rgb(v, key)?,
                "edge_thickness" => p.edge_thickness = as_non_negative(v, key)?,
                _ => return Err(invalid(key, "unknown parameter for a graph layer")),
            },
            (source, LayerParams::Image(p)) => match key {
                "alpha" => p.alpha = as_byte(v, key)?,
                "colormap" => {
                    let gray = matches!(source, LayerSource::Heatmap(img) if img.channels == OverlayChannels::GraySingleChannel);
                    p.colormap = match v {
                        Value::Null if gray => return Err(invalid(key, "single-channel overlays need a colormap")),
                        Value::Null => None,
                        _ => Some(colormap_from_json(v, key)?),
                    }
                }
                "resample" => {
                    p.resample = match v.as_str() {
                        Some("bilinear") => Resample::Bilinear,
                        Some("nearest") => Resample::Nearest,
                        _ => return Err(invalid(key, "expected \"bilinear\" or \"nearest\"")),
                    }
                }
                _ => return Err(invalid(key, "unknown parameter for an image layer")),
            },
            _ => return Err(invalid(key, "the base slide layer only accepts \"visible\"")),
        }
    }
    Ok(())
}

fn rgb_json(c: Rgb) -> Value {
    json!(c.0)
}

pub fn params_to_json(params: &LayerParams) -> Value {
    match params {
        LayerParams::Slide => json!({}),
        LayerParams::Annotation(p) => {
            let color_source = match &p.color_source {
                ColorSource::Fixed(c) => json!({ "kind": "fixed", "color": rgb_json(*c) }),
                ColorSource::ByType { colors, fallback } => json!({
                    "kind": "by_type",
                    "colors": colors.iter().map(|(k, c)| (k.clone(), rgb_json(*c))).collect::<BTreeMap<_, _>>(),
                    "fallback": rgb_json(*fallback),
                }),
                ColorSource::ByProperty { key, colormap, range, fallback } => json!({
                    "kind": "by_property",
                    "key": key,
                    "colormap": colormap_to_json(colormap),
                    "range": [range.0, range.1],
                    "fallback": rgb_json(*fallback),
                }),
            };
            json!({
                "filter": p.filter.as_ref().map(unparse),
                "visible_types": p.visible_types,
                "color_source": color_source,
                "fill_alpha": p.fill_alpha,
                "edge_color": rgb_json(p.edge_color),
                "edge_thickness": p.edge_thickness,
            })
        }
        LayerParams::Graph(p) => {
            let node_color_source = match &p.node_color_source {
                NodeColorSource::Fixed(c) => json!({ "kind": "fixed", "color": rgb_json(*c) }),
                NodeColorSource::ByFeature { index, colormap, range } => json!({
                    "kind": "by_feature",
                    "index": index,
                    "colormap": colormap_to_json(colormap),
                    "range": [range.0, range.1],
                }),
            };
            json!({
                "show_nodes": p.show_nodes,
                "show_edges": p.show_edges,
                "node_radius": p.node_radius,
                "node_color_source": node_color_source,
                "edge_color": rgb_json(p.edge_color),
                "edge_thickness": p.edge_thickness,
            })
        }
        LayerParams::Image(p) => json!({
            "alpha": p.alpha,
            "colormap": p.colormap.as_ref().map(colormap_to_json),
            "resample": match p.resample { Resample::Bilinear => "bilinear", Resample::Nearest => "nearest" },
        }),
    }
}

/// Baseline rectangle covered by a tile.
pub fn tile_bbox(tile: TileCoord) -> BBox {
    let r = tile.region();
    let s = r.scale();
    BBox::new(r.x as f64 * s, r.y as f64 * s, r.x_end() as f64 * s, r.y_end() as f64 * s)
}
