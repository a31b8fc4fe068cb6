//! GeoJSON FeatureCollection import.

use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::geometry::{Geometry, Point};
use crate::store::{properties_from_json, AnnotationStore, Properties, StoreError};

#[derive(Debug, Error)]
pub enum GeoJsonError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a GeoJSON FeatureCollection")]
    NotFeatureCollection,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// A feature that could not be imported.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFeature {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportReport {
    pub inserted: usize,
    pub ids: Vec<i64>,
    pub skipped: Vec<SkippedFeature>,
}

fn position(v: &Value) -> Result<Point, String> {
    let arr = v.as_array().ok_or("position is not an array")?;
    match (arr.first().and_then(Value::as_f64), arr.get(1).and_then(Value::as_f64)) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err("position needs two numbers".into()),
    }
}

fn positions(v: &Value) -> Result<Vec<Point>, String> {
    v.as_array().ok_or("expected an array of positions")?.iter().map(position).collect()
}

fn polygon(v: &Value) -> Result<Geometry, String> {
    let rings = v.as_array().ok_or("polygon coordinates must be an array of rings")?;
    let mut rings = rings.iter().map(positions);
    let exterior = rings.next().ok_or("polygon without rings")??;
    let holes = rings.collect::<Result<Vec<_>, _>>()?;
    Geometry::polygon(exterior, holes).map_err(|e| e.to_string())
}

/// Converts one GeoJSON geometry object into one or more annotation geometries.
pub fn convert_geometry(geom: &Value) -> Result<Vec<Geometry>, String> {
    let kind = geom.get("type").and_then(Value::as_str).ok_or("geometry without type")?;
    let coords = || geom.get("coordinates").ok_or_else(|| format!("{kind} without coordinates"));
    let single = |g: Result<Geometry, String>| g.map(|g| vec![g]);
    match kind {
        "Point" => {
            let (x, y) = position(coords()?)?;
            single(Geometry::point(x, y).map_err(|e| e.to_string()))
        }
        "LineString" => single(Geometry::polyline(positions(coords()?)?).map_err(|e| e.to_string())),
        "Polygon" => single(polygon(coords()?)),
        "MultiPolygon" => coords()?
            .as_array()
            .ok_or("MultiPolygon coordinates must be an array")?
            .iter()
            .map(polygon)
            .collect(),
        "MultiLineString" => coords()?
            .as_array()
            .ok_or("MultiLineString coordinates must be an array")?
            .iter()
            .map(|l| Geometry::polyline(positions(l)?).map_err(|e| e.to_string()))
            .collect(),
        other => Err(format!("unsupported geometry type {other}")),
    }
}

pub type ParsedFeatures = (Vec<(Geometry, Properties)>, Vec<SkippedFeature>);

/// Parses a FeatureCollection into (geometry, properties) pairs plus skips.
pub fn parse_feature_collection(text: &str) -> Result<ParsedFeatures, GeoJsonError> {
    let doc: Value = serde_json::from_str(text)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoJsonError::NotFeatureCollection);
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or(GeoJsonError::NotFeatureCollection)?;
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let props = match feature.get("properties") {
            Some(Value::Object(map)) => properties_from_json(map),
            _ => Properties::new(),
        };
        if let Some(t) = props.get("type") {
            if t.as_text().is_none() {
                skipped.push(SkippedFeature { index, reason: "property \"type\" must be text".into() });
                continue;
            }
        }
        let converted = match feature.get("geometry") {
            Some(g) if !g.is_null() => convert_geometry(g),
            _ => Err("feature without geometry".to_string()),
        };
        match converted {
            Ok(geoms) => items.extend(geoms.into_iter().map(|g| (g, props.clone()))),
            Err(reason) => skipped.push(SkippedFeature { index, reason }),
        }
    }
    Ok((items, skipped))
}

/// Imports every feature of a GeoJSON FeatureCollection into `store`.
///
/// Unsupported or invalid features are skipped and reported; malformed JSON
/// fails the whole file.
pub fn import_geojson(
    store: &mut AnnotationStore,
    path: impl AsRef<Path>,
) -> Result<ImportReport, GeoJsonError> {
    let text = std::fs::read_to_string(path)?;
    let (items, skipped) = parse_feature_collection(&text)?;
    let ids = store.insert_annotations(items)?;
    Ok(ImportReport { inserted: ids.len(), ids, skipped })
}
