//! File-backed annotation store with an in-memory spatial index.
//!
//! The file is a SQLite database:
//!
//! ```sql
//! annotations(id INTEGER PRIMARY KEY, min_x REAL, min_y REAL, max_x REAL, max_y REAL,
//!             geom BLOB /* ISO WKB, little-endian */, props TEXT /* JSON object */)
//! metadata(key TEXT PRIMARY KEY, value TEXT)
//! ```
//!
//! On open every row is loaded and bulk-indexed in an R-tree over bounding
//! boxes; queries never touch SQLite.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rstar::{RTree, RTreeObject, AABB};
use rusqlite::{params, Connection, OpenFlags};
use serde_json::Value;
use thiserror::Error;

use crate::filter::{evaluate_filter, FilterExpr};
use crate::geometry::{BBox, Geometry, GeometryError, GeometryKind};

pub const STORE_FORMAT_VERSION: &str = "1";
pub const MAX_DISTINCT_TEXT_VALUES: usize = 64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store already exists and is not empty: {0}")]
    AlreadyExists(PathBuf),
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("store format version {found}, expected {STORE_FORMAT_VERSION}")]
    VersionMismatch { found: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(#[from] GeometryError),
    #[error("invalid property: {0}")]
    InvalidProperty(String),
    #[error("store is read-only")]
    ReadOnly,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("sqlite: {0}")]
    Sqlite(#[from] rusqlite::Error),
}

type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Scalar property value. Nested JSON values are stored as their canonical text.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Number(f64),
    Text(String),
    Bool(bool),
    Null,
}

pub type Properties = BTreeMap<String, PropertyValue>;

impl PropertyValue {
    pub fn from_json(v: &Value) -> PropertyValue {
        match v {
            Value::Null => PropertyValue::Null,
            Value::Bool(b) => PropertyValue::Bool(*b),
            Value::Number(n) => match n.as_f64() {
                Some(f) if f.is_finite() => PropertyValue::Number(f),
                _ => PropertyValue::Text(n.to_string()),
            },
            Value::String(s) => PropertyValue::Text(s.clone()),
            Value::Array(_) | Value::Object(_) => PropertyValue::Text(v.to_string()),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            PropertyValue::Number(n) => serde_json::Number::from_f64(*n)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            PropertyValue::Text(s) => Value::String(s.clone()),
            PropertyValue::Bool(b) => Value::Bool(*b),
            PropertyValue::Null => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PropertyValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for PropertyValue {
    fn from(v: f64) -> Self {
        PropertyValue::Number(v)
    }
}

impl From<&str> for PropertyValue {
    fn from(v: &str) -> Self {
        PropertyValue::Text(v.to_string())
    }
}

impl From<bool> for PropertyValue {
    fn from(v: bool) -> Self {
        PropertyValue::Bool(v)
    }
}

pub fn properties_from_json(obj: &serde_json::Map<String, Value>) -> Properties {
    obj.iter().map(|(k, v)| (k.clone(), PropertyValue::from_json(v))).collect()
}

pub fn properties_to_json(props: &Properties) -> Value {
    Value::Object(props.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: i64,
    pub geometry: Geometry,
    pub properties: Properties,
    pub bbox: BBox,
}

impl Annotation {
    pub fn annotation_type(&self) -> Option<&str> {
        self.properties.get("type").and_then(PropertyValue::as_text)
    }
}

struct IndexEntry {
    envelope: AABB<[f64; 2]>,
    slot: usize,
}

impl RTreeObject for IndexEntry {
    type Envelope = AABB<[f64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        self.envelope
    }
}

fn envelope(b: &BBox) -> AABB<[f64; 2]> {
    AABB::from_corners([b.min_x, b.min_y], [b.max_x, b.max_y])
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyStats {
    pub numeric_min: Option<f64>,
    pub numeric_max: Option<f64>,
    /// Sorted, at most [`MAX_DISTINCT_TEXT_VALUES`] entries.
    pub distinct_text_values: Vec<String>,
    pub text_values_truncated: bool,
}

pub struct AnnotationStore {
    conn: Mutex<Connection>,
    path: Option<PathBuf>,
    read_only: bool,
    /// Sorted by id; ids only ever grow.
    annotations: Vec<Annotation>,
    index: RTree<IndexEntry>,
    metadata: BTreeMap<String, String>,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore")
            .field("path", &self.path)
            .field("len", &self.annotations.len())
            .finish_non_exhaustive()
    }
}

const SCHEMA: &str = "
    CREATE TABLE annotations (
        id    INTEGER PRIMARY KEY AUTOINCREMENT,
        min_x REAL NOT NULL,
        min_y REAL NOT NULL,
        max_x REAL NOT NULL,
        max_y REAL NOT NULL,
        geom  BLOB NOT NULL,
        props TEXT NOT NULL
    );
    CREATE TABLE metadata (
        key   TEXT PRIMARY KEY,
        value TEXT NOT NULL
    );
";

impl AnnotationStore {
    /// Creates an empty store at `path`, which must be absent or an empty file.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() && std::fs::metadata(path)?.len() > 0 {
            return Err(StoreError::AlreadyExists(path.to_path_buf()));
        }
        let conn = Connection::open(path)?;
        Self::init(conn, Some(path.to_path_buf()))
    }

    /// A store that lives only in memory (used for GeoJSON layers).
    pub fn in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?, None)
    }

    fn init(conn: Connection, path: Option<PathBuf>) -> Result<Self> {
        conn.execute_batch(SCHEMA)?;
        conn.execute(
            "INSERT INTO metadata(key, value) VALUES ('format_version', ?1)",
            params![STORE_FORMAT_VERSION],
        )?;
        let mut metadata = BTreeMap::new();
        metadata.insert("format_version".to_string(), STORE_FORMAT_VERSION.to_string());
        Ok(AnnotationStore {
            conn: Mutex::new(conn),
            path,
            read_only: false,
            annotations: Vec::new(),
            index: RTree::new(),
            metadata,
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path.as_ref(), false)
    }

    /// Opens a snapshot that rejects writes.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path.as_ref(), true)
    }

    fn open_with(path: &Path, read_only: bool) -> Result<Self> {
        if !path.is_file() {
            return Err(StoreError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no store at {}", path.display()),
            )));
        }
        let flags = if read_only {
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX
        } else {
            OpenFlags::SQLITE_OPEN_READ_WRITE | OpenFlags::SQLITE_OPEN_NO_MUTEX
        };
        let corrupt = |message: String| StoreError::Corrupt { path: path.to_path_buf(), message };
        let conn = Connection::open_with_flags(path, flags).map_err(|e| corrupt(e.to_string()))?;

        let metadata = load_metadata(&conn).map_err(|e| corrupt(e.to_string()))?;
        match metadata.get("format_version") {
            Some(v) if v == STORE_FORMAT_VERSION => {}
            Some(v) => return Err(StoreError::VersionMismatch { found: v.clone() }),
            None => return Err(corrupt("missing format_version".into())),
        }
        let annotations = load_annotations(&conn).map_err(|e| match e {
            StoreError::Sqlite(e) => corrupt(e.to_string()),
            other => corrupt(other.to_string()),
        })?;
        let entries = annotations
            .iter()
            .enumerate()
            .map(|(slot, a)| IndexEntry { envelope: envelope(&a.bbox), slot })
            .collect();
        Ok(AnnotationStore {
            conn: Mutex::new(conn),
            path: Some(path.to_path_buf()),
            read_only,
            annotations,
            index: RTree::bulk_load(entries),
            metadata,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// All annotations in ascending id order.
    pub fn iter(&self) -> std::slice::Iter<'_, Annotation> {
        self.annotations.iter()
    }

    pub fn get(&self, id: i64) -> Option<&Annotation> {
        self.annotations
            .binary_search_by_key(&id, |a| a.id)
            .ok()
            .map(|i| &self.annotations[i])
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: &str, value: &str) -> Result<()> {
        if self.read_only {
            return Err(StoreError::ReadOnly);
        }
        self.conn.lock().unwrap().execute(
            "INSERT INTO metadata(key, value) VALUES (?1, ?2)
             ON CONFLICT(key) DO UPDATE SET value = excluded.value",
            params![key, value],
        )?;
        self.metadata.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Inserts annotations in one transaction and returns their new ids.
    pub fn insert_annotations<I>(&mut self, items: I) -> Result<Vec<i64>>
    where
        I: IntoIterator<Item = (Geometry, Properties)>,
    {
        if self.read_only {
            return Err(StoreError::ReadOnly);
        }
        let items: Vec<(Geometry, Properties)> = items.into_iter().collect();
        for (_, props) in &items {
            if let Some(t) = props.get("type") {
                if t.as_text().is_none() {
                    return Err(StoreError::InvalidProperty(
                        "property \"type\" must be text".into(),
                    ));
                }
            }
        }
        let mut next_id = self.annotations.last().map_or(1, |a| a.id + 1);
        let mut added = Vec::with_capacity(items.len());
        {
            let mut conn = self.conn.lock().unwrap();
            let tx = conn.transaction()?;
            {
                let mut stmt = tx.prepare(
                    "INSERT INTO annotations(id, min_x, min_y, max_x, max_y, geom, props)
                     VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                )?;
                for (geometry, properties) in items {
                    let bbox = geometry.bbox();
                    let props = properties_to_json(&properties).to_string();
                    stmt.execute(params![
                        next_id,
                        bbox.min_x,
                        bbox.min_y,
                        bbox.max_x,
                        bbox.max_y,
                        geometry.to_wkb(),
                        props
                    ])?;
                    added.push(Annotation { id: next_id, geometry, properties, bbox });
                    next_id += 1;
                }
            }
            tx.commit()?;
        }
        let ids = added.iter().map(|a| a.id).collect();
        for a in added {
            let slot = self.annotations.len();
            self.index.insert(IndexEntry { envelope: envelope(&a.bbox), slot });
            self.annotations.push(a);
        }
        Ok(ids)
    }

    fn slots_in(&self, bbox: &BBox) -> Vec<usize> {
        let mut slots: Vec<usize> = self
            .index
            .locate_in_envelope_intersecting(envelope(bbox))
            .map(|e| e.slot)
            .collect();
        slots.sort_unstable();
        slots
    }

    /// Annotations whose bbox meets `bbox` (closed intervals) and which pass
    /// `filter`, in ascending id order.
    pub fn query_bbox(&self, bbox: &BBox, filter: Option<&FilterExpr>) -> Vec<&Annotation> {
        self.slots_in(bbox)
            .into_iter()
            .map(|s| &self.annotations[s])
            .filter(|a| filter.is_none_or(|f| evaluate_filter(f, &a.properties)))
            .collect()
    }

    /// Annotations hit at (`x`, `y`): polygons containing the point (even-odd,
    /// boundary inside), points and polylines within `tolerance`. Smallest
    /// bbox first, ties by id.
    pub fn query_point(&self, x: f64, y: f64, tolerance: f64) -> Vec<&Annotation> {
        let tolerance = tolerance.max(0.0);
        let probe = BBox::new(x, y, x, y).expand(tolerance);
        let mut hits: Vec<&Annotation> = self
            .slots_in(&probe)
            .into_iter()
            .map(|s| &self.annotations[s])
            .filter(|a| match a.geometry.kind() {
                GeometryKind::Polygon => a.geometry.contains((x, y)),
                _ => a.geometry.boundary_distance((x, y)) <= tolerance,
            })
            .collect();
        hits.sort_by(|a, b| a.bbox.area().total_cmp(&b.bbox.area()).then(a.id.cmp(&b.id)));
        hits
    }

    pub fn property_stats(&self, key: &str) -> PropertyStats {
        let mut stats = PropertyStats::default();
        let mut texts = BTreeSet::new();
        for a in &self.annotations {
            match a.properties.get(key) {
                Some(PropertyValue::Number(n)) => {
                    stats.numeric_min = Some(stats.numeric_min.map_or(*n, |m| m.min(*n)));
                    stats.numeric_max = Some(stats.numeric_max.map_or(*n, |m| m.max(*n)));
                }
                Some(PropertyValue::Text(s)) => {
                    texts.insert(s.as_str());
                }
                _ => {}
            }
        }
        stats.text_values_truncated = texts.len() > MAX_DISTINCT_TEXT_VALUES;
        stats.distinct_text_values =
            texts.into_iter().take(MAX_DISTINCT_TEXT_VALUES).map(str::to_string).collect();
        stats
    }

    /// Every property key used by at least one annotation, sorted.
    pub fn property_keys(&self) -> Vec<String> {
        let keys: BTreeSet<&str> = self
            .annotations
            .iter()
            .flat_map(|a| a.properties.keys().map(String::as_str))
            .collect();
        keys.into_iter().map(str::to_string).collect()
    }
}

fn load_metadata(conn: &Connection) -> rusqlite::Result<BTreeMap<String, String>> {
    let mut stmt = conn.prepare("SELECT key, value FROM metadata")?;
    let rows = stmt.query_map([], |r| Ok((r.get(0)?, r.get(1)?)))?;
    rows.collect()
}

fn load_annotations(conn: &Connection) -> Result<Vec<Annotation>> {
    let mut stmt = conn.prepare("SELECT id, geom, props FROM annotations ORDER BY id")?;
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        let id: i64 = row.get(0)?;
        let wkb: Vec<u8> = row.get(1)?;
        let props: String = row.get(2)?;
        let geometry = Geometry::from_wkb(&wkb)?;
        let properties = match serde_json::from_str::<Value>(&props) {
            Ok(Value::Object(map)) => properties_from_json(&map),
            _ => {
                return Err(StoreError::InvalidProperty(format!(
                    "annotation {id}: props is not a JSON object"
                )))
            }
        };
        let bbox = geometry.bbox();
        out.push(Annotation { id, geometry, properties, bbox });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props(pairs: &[(&str, PropertyValue)]) -> Properties {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
        Geometry::polygon(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)], vec![]).unwrap()
    }

    #[test]
    fn create_is_empty_and_first_id_is_one() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = AnnotationStore::create(dir.path().join("a.db")).unwrap();
        assert_eq!(store.len(), 0);
        let ids = store
            .insert_annotations([(
                Geometry::point(10.0, 20.0).unwrap(),
                props(&[("type", "cell".into())]),
            )])
            .unwrap();
        assert_eq!(ids, vec![1]);
    }

    #[test]
    fn create_refuses_non_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.db");
        std::fs::write(&p, b"hello").unwrap();
        assert!(matches!(AnnotationStore::create(&p), Err(StoreError::AlreadyExists(_))));
    }

    #[test]
    fn bbox_and_corner_touch() {
        let mut store = AnnotationStore::in_memory().unwrap();
        store.insert_annotations([(square(0.0, 0.0, 10.0, 10.0), Properties::new())]).unwrap();
        assert_eq!(store.get(1).unwrap().bbox, BBox::new(0.0, 0.0, 10.0, 10.0));
        assert_eq!(store.query_bbox(&BBox::new(10.0, 10.0, 20.0, 20.0), None).len(), 1);
        assert!(store.query_bbox(&BBox::new(11.0, 11.0, 20.0, 20.0), None).is_empty());
    }

    #[test]
    fn non_text_type_rejected() {
        let mut store = AnnotationStore::in_memory().unwrap();
        let err = store
            .insert_annotations([(Geometry::point(0.0, 0.0).unwrap(), props(&[("type", 3.0.into())]))])
            .unwrap_err();
        assert!(matches!(err, StoreError::InvalidProperty(_)));
    }

    #[test]
    fn query_point_orders_smallest_first() {
        let mut store = AnnotationStore::in_memory().unwrap();
        store
            .insert_annotations([
                (square(0.0, 0.0, 100.0, 100.0), props(&[("type", "gland".into())])),
                (square(40.0, 40.0, 60.0, 60.0), props(&[("type", "nucleus".into())])),
            ])
            .unwrap();
        let hits = store.query_point(50.0, 50.0, 0.0);
        assert_eq!(hits.iter().map(|a| a.id).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn query_point_polyline_tolerance() {
        let mut store = AnnotationStore::in_memory().unwrap();
        store
            .insert_annotations([(
                Geometry::polyline(vec![(0.0, 0.0), (10.0, 0.0)]).unwrap(),
                Properties::new(),
            )])
            .unwrap();
        assert_eq!(store.query_point(5.0, 2.0, 2.0).len(), 1);
        assert!(store.query_point(5.0, 2.5, 2.0).is_empty());
    }

    #[test]
    fn stats() {
        let mut store = AnnotationStore::in_memory().unwrap();
        store
            .insert_annotations([
                (Geometry::point(0.0, 0.0).unwrap(), props(&[("prob", 0.2.into())])),
                (Geometry::point(1.0, 0.0).unwrap(), props(&[("prob", 0.9.into())])),
                (Geometry::point(2.0, 0.0).unwrap(), props(&[("prob", "high".into())])),
            ])
            .unwrap();
        let s = store.property_stats("prob");
        assert_eq!((s.numeric_min, s.numeric_max), (Some(0.2), Some(0.9)));
        assert_eq!(s.distinct_text_values, vec!["high".to_string()]);
        assert_eq!(store.property_stats("nope"), PropertyStats::default());
        assert_eq!(store.property_keys(), vec!["prob".to_string()]);
    }

    #[test]
    fn nested_json_becomes_canonical_text() {
        let v: Value = serde_json::json!({"b": 1, "a": [1, 2]});
        assert_eq!(PropertyValue::from_json(&v), PropertyValue::Text(r#"{"a":[1,2],"b":1}"#.into()));
    }
}
