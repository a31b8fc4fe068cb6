//! Node/edge graphs overlaid on a slide.
//!
//! JSON schema: `{"coordinates": [[x, y], ...], "edge_index": [[src...], [dst...]],
//! "feats": [[f1, ..., fF], ...], "feat_names": ["name", ...]}`. Only
//! `coordinates` is required. Edges are drawn as undirected segments.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{point_distance, BBox, Point};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing \"coordinates\"")]
    MissingCoordinates,
    #[error("non-finite node coordinate at node {0}")]
    NonFinite(usize),
    #[error("edge_index must be two arrays of equal length")]
    EdgeShape,
    #[error("edge {edge} references node {node}, but the graph has {nodes} nodes")]
    EdgeOutOfRange { edge: usize, node: u64, nodes: usize },
    #[error("feats has {rows} rows, expected one per node ({nodes})")]
    FeatureRows { rows: usize, nodes: usize },
    #[error("feats row {row} has {len} values, expected {expected}")]
    FeatureWidth { row: usize, len: usize, expected: usize },
    #[error("feat_names has {names} entries, feats has {features} columns")]
    FeatureNames { names: usize, features: usize },
}

#[derive(Deserialize)]
struct RawGraph {
    coordinates: Option<Vec<[f64; 2]>>,
    edge_index: Option<Vec<Vec<u64>>>,
    feats: Option<Vec<Vec<f64>>>,
    feat_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    nodes: Vec<Point>,
    edges: Vec<(usize, usize)>,
    features: Option<Vec<Vec<f64>>>,
    feature_names: Option<Vec<String>>,
}

/// Nearest node lookup result.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeHit<'a> {
    pub index: usize,
    pub distance: f64,
    pub features: Option<&'a [f64]>,
    pub feature_names: Option<&'a [String]>,
}

impl Graph {
    pub fn new(
        nodes: Vec<Point>,
        edges: Vec<(usize, usize)>,
        features: Option<Vec<Vec<f64>>>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, GraphError> {
        if let Some(i) = nodes.iter().position(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(GraphError::NonFinite(i));
        }
        for (edge, &(s, d)) in edges.iter().enumerate() {
            for node in [s, d] {
                if node >= nodes.len() {
                    return Err(GraphError::EdgeOutOfRange {
                        edge,
                        node: node as u64,
                        nodes: nodes.len(),
                    });
                }
            }
        }
        let mut width = None;
        if let Some(rows) = &features {
            if rows.len() != nodes.len() {
                return Err(GraphError::FeatureRows { rows: rows.len(), nodes: nodes.len() });
            }
            let expected = rows.first().map_or(0, Vec::len);
            if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != expected) {
                return Err(GraphError::FeatureWidth { row, len: r.len(), expected });
            }
            width = Some(expected);
        }
        if let (Some(names), Some(f)) = (&feature_names, width) {
            if names.len() != f {
                return Err(GraphError::FeatureNames { names: names.len(), features: f });
            }
        }
        Ok(Graph { nodes, edges, features, feature_names })
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let raw: RawGraph = serde_json::from_str(text)?;
        let nodes: Vec<Point> = raw
            .coordinates
            .ok_or(GraphError::MissingCoordinates)?
            .into_iter()
            .map(|[x, y]| (x, y))
            .collect();
        let mut edges = Vec::new();
        if let Some(index) = raw.edge_index {
            if index.is_empty() {
                // `[]` means no edges.
            } else if index.len() != 2 || index[0].len() != index[1].len() {
                return Err(GraphError::EdgeShape);
            } else {
                for (edge, (&s, &d)) in index[0].iter().zip(&index[1]).enumerate() {
                    for node in [s, d] {
                        if node >= nodes.len() as u64 {
                            return Err(GraphError::EdgeOutOfRange { edge, node, nodes: nodes.len() });
                        }
                    }
                    edges.push((s as usize, d as usize));
                }
            }
        }
        Graph::new(nodes, edges, raw.feats, raw.feat_names)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of feature columns, 0 without features.
    pub fn feature_count(&self) -> usize {
        self.features.as_ref().and_then(|f| f.first()).map_or(0, Vec::len)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self, node: usize) -> Option<&[f64]> {
        self.features.as_ref().map(|f| f[node].as_slice())
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn feature_column(&self, index: usize) -> Option<impl Iterator<Item = f64> + '_> {
        if index >= self.feature_count() {
            return None;
        }
        self.features.as_ref().map(move |rows| rows.iter().map(move |r| r[index]))
    }

    /// (min, max) of a feature column.
    pub fn feature_range(&self, index: usize) -> Option<(f64, f64)> {
        self.feature_column(index)?.fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
        })
    }

    pub fn segment(&self, edge: usize) -> (Point, Point) {
        let (s, d) = self.edges[edge];
        (self.nodes[s], self.nodes[d])
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.nodes.iter().fold(None, |acc, &(x, y)| {
            Some(match acc {
                None => BBox::new(x, y, x, y),
                Some(b) => BBox::new(b.min_x.min(x), b.min_y.min(y), b.max_x.max(x), b.max_y.max(y)),
            })
        })
    }

    /// Nearest node within `tolerance` baseline pixels; lowest index on ties.
    pub fn nearest_node(&self, x: f64, y: f64, tolerance: f64) -> Option<NodeHit<'_>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in self.nodes.iter().enumerate() {
            let d = point_distance((x, y), p);
            if d <= tolerance && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(index, distance)| NodeHit {
            index,
            distance,
            features: self.features(index),
            feature_names: self.feature_names(),
        })
    }
}

pub fn import_graph_json(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    Graph::from_json_str(&std::fs::read_to_string(path)?)
}
