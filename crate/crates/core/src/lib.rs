//! Core library for tiled whole-slide viewing: pyramid I/O, the annotation
//! store, the property filter language and overlay tile rendering.

pub mod config;
pub mod filter;
pub mod geojson;
pub mod geometry;
pub mod graph;
pub mod raster;
pub mod render;
pub mod session;
pub mod slide;
pub mod store;
pub mod workspace;

pub use filter::{parse_filter, unparse, FilterExpr, ParseError};
pub use geometry::{BBox, Geometry, GeometryKind, Point};
pub use graph::Graph;
pub use raster::{RasterImage, Rgb, Rgba};
pub use render::TileCoord;
pub use slide::{FlatOverlayImage, OverlayChannels, SlidePyramid, TILE_SIZE};
pub use store::{Annotation, AnnotationStore, Properties, PropertyValue};
pub use config::ProjectConfig;
pub use session::{Layer, LayerParams, LayerSource, Session};
pub use workspace::{scan_workspace, OverlayKind, WorkspaceCatalog};
