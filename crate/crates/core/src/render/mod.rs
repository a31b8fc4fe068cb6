//! Tile rasterization for annotation, graph and image layers.
//!
//! All coverage is decided per pixel from the pixel center, mapped to
//! baseline coordinates. Tile (z, x, y) covers baseline
//! `[x·256·2^z, (x+1)·256·2^z) × [y·256·2^z, (y+1)·256·2^z)`; level pixel
//! `(gx, gy)` at zoom `z` has its center at `((gx + 0.5)·2^z, (gy + 0.5)·2^z)`.
//! Because the predicate depends only on global pixel indices, any region
//! renders identically to the tiles it is cut from.

mod annotations;
mod colormap;
mod composite;
mod graph;
mod heatmap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotations::{
    rasterize_annotation_region, rasterize_annotation_tile, AnnotationLayerParams, ColorSource,
};
pub use colormap::{assign_type_colors, map_value_to_color, Colormap, DEFAULT_COLORMAP, DEFAULT_PALETTE};
pub use composite::composite;
pub use graph::{rasterize_graph_region, rasterize_graph_tile, GraphLayerParams, NodeColorSource};
pub use heatmap::{
    resample_heatmap_region, resample_heatmap_tile, slide_overlay_tile, ImageLayerParams, Resample,
};

use crate::slide::TILE_SIZE;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("feature index {index} out of range (graph has {count} features)")]
    FeatureOutOfRange { index: usize, count: usize },
    #[error("gray overlay needs a colormap")]
    MissingColormap,
    #[error("layer {index} is {width}x{height}, expected {expected_w}x{expected_h}")]
    SizeMismatch { index: usize, width: u32, height: u32, expected_w: u32, expected_h: u32 },
    #[error("invalid colormap: {0}")]
    InvalidColormap(String),
    #[error("value range must satisfy min < max, got ({0}, {1})")]
    InvalidRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileCoord {
    pub z: u32,
    pub x: u32,
    pub y: u32,
}

impl TileCoord {
    pub fn new(z: u32, x: u32, y: u32) -> Self {
        TileCoord { z, x, y }
    }

    pub fn region(&self) -> PixelRegion {
        PixelRegion {
            z: self.z,
            x: self.x as i64 * TILE_SIZE as i64,
            y: self.y as i64 * TILE_SIZE as i64,
            width: TILE_SIZE,
            height: TILE_SIZE,
        }
    }
}

/// A rectangle of level pixels at zoom `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRegion {
    pub z: u32,
    pub x: i64,
    pub y: i64,
    pub width: u32,
    pub height: u32,
}

impl PixelRegion {
    /// Baseline pixels per level pixel.
    pub fn scale(&self) -> f64 {
        scale_for(self.z)
    }

    pub fn x_end(&self) -> i64 {
        self.x + self.width as i64
    }

    pub fn y_end(&self) -> i64 {
        self.y + self.height as i64
    }
}

pub fn scale_for(z: u32) -> f64 {
    (1u64 << z.min(62)) as f64
}

/// Baseline coordinate of the center of level pixel `g` at `scale`.
#[inline]
pub fn pixel_center(g: i64, scale: f64) -> f64 {
    (g as f64 + 0.5) * scale
}

fn check_range(range: (f64, f64)) -> Result<(), RenderError> {
    if range.0 < range.1 {
        Ok(())
    } else {
        Err(RenderError::InvalidRange(range.0, range.1))
    }
}
