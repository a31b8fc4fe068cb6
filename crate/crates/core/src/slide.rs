//! Pyramidal slide images, flat overlay images and the synthetic slide generator.
//!
//! A pyramid lives in a directory:
//!
//! ```text
//! <slide>/manifest.json         {"version":1,"width":..,"height":..,"tile_size":256,"levels":..,"mpp":..}
//! <slide>/tiles/<level>/<col>_<row>.png
//! ```
//!
//! Level `L` has dimensions `ceil(baseline / 2^L)`. Tiles are RGBA PNGs of
//! 256×256 except at the right/bottom edges, where they are cropped to the
//! level bounds.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use image::{ColorType, DynamicImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{RasterError, RasterImage, Rgba};

pub const TILE_SIZE: u32 = 256;
pub const MANIFEST_VERSION: u32 = 1;
pub const MAX_DIMENSION: u32 = 1 << 20;
/// Relative tolerance when comparing overlay and slide aspect ratios.
pub const ASPECT_TOLERANCE: f64 = 0.01;

const TILE_CACHE_CAPACITY: usize = 512;

#[derive(Debug, Error)]
pub enum SlideError {
    #[error("dimension {width}x{height} out of range (1..={MAX_DIMENSION})")]
    DimensionOutOfRange { width: u64, height: u64 },
    #[error("path not writable: {path}: {source}")]
    NotWritable { path: PathBuf, source: std::io::Error },
    #[error("missing manifest: {0}")]
    MissingManifest(PathBuf),
    #[error("invalid manifest: {0}")]
    BadManifest(String),
    #[error("unsupported manifest version {0}")]
    UnsupportedVersion(u32),
    #[error("manifest and tiles inconsistent: {0}")]
    Inconsistent(String),
    #[error("level {level} out of range (level count {level_count})")]
    LevelOutOfRange { level: u32, level_count: u32 },
    #[error("region must be at least 1x1")]
    EmptyRegion,
    #[error("overlay aspect ratio {overlay:.4} does not match slide aspect ratio {parent:.4}")]
    AspectRatioMismatch { overlay: f64, parent: f64 },
    #[error("cannot decode image {path}: {message}")]
    Undecodable { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

type Result<T, E = SlideError> = std::result::Result<T, E>;

/// Number of pyramid levels needed so that the top level fits in one tile.
pub fn level_count_for(width: u32, height: u32) -> u32 {
    let longest = width.max(height).max(1) as u64;
    let mut levels = 1;
    let mut span = TILE_SIZE as u64;
    while span < longest {
        span *= 2;
        levels += 1;
    }
    levels
}

/// Dimensions of `level` for a baseline of `width`×`height`.
pub fn level_dimensions(width: u32, height: u32, level: u32) -> (u32, u32) {
    let div = |v: u32| -> u32 {
        let f = 1u64 << level.min(40);
        (v as u64).div_ceil(f) as u32
    };
    (div(width), div(height))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub width: u32,
    pub height: u32,
    pub tile_size: u32,
    pub levels: u32,
    pub mpp: Option<f64>,
}

enum Backing {
    Tiles {
        root: PathBuf,
        cache: Mutex<HashMap<(u32, u32, u32), Arc<RasterImage>>>,
    },
    Memory(Arc<RasterImage>),
}

/// A multi-resolution tiled slide.
///
/// Flat images opened with [`SlidePyramid::open_flat`] behave as a
/// single-level pyramid held in memory.
pub struct SlidePyramid {
    id: String,
    width: u32,
    height: u32,
    level_count: u32,
    mpp: Option<f64>,
    backing: Backing,
}

impl std::fmt::Debug for SlidePyramid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlidePyramid")
            .field("id", &self.id)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("level_count", &self.level_count)
            .field("mpp", &self.mpp)
            .finish()
    }
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn tile_path(root: &Path, level: u32, col: u32, row: u32) -> PathBuf {
    root.join("tiles").join(level.to_string()).join(format!("{col}_{row}.png"))
}

fn tile_grid(level_w: u32, level_h: u32) -> (u32, u32) {
    (level_w.div_ceil(TILE_SIZE), level_h.div_ceil(TILE_SIZE))
}

impl SlidePyramid {
    /// Opens a pyramid directory. Only the manifest and tile headers are read.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let root = path.as_ref();
        let manifest_path = root.join("manifest.json");
        if !manifest_path.is_file() {
            return Err(SlideError::MissingManifest(manifest_path));
        }
        let text = fs::read_to_string(&manifest_path)
            .map_err(|source| SlideError::Io { path: manifest_path.clone(), source })?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| SlideError::BadManifest(e.to_string()))?;
        if let Some(v) = raw.get("version").and_then(|v| v.as_u64()) {
            if v != MANIFEST_VERSION as u64 {
                return Err(SlideError::UnsupportedVersion(v as u32));
            }
        }
        let manifest: Manifest =
            serde_json::from_value(raw).map_err(|e| SlideError::BadManifest(e.to_string()))?;
        if manifest.width == 0 || manifest.height == 0 {
            return Err(SlideError::BadManifest("baseline dimensions must be >= 1".into()));
        }
        if manifest.tile_size != TILE_SIZE {
            return Err(SlideError::Inconsistent(format!(
                "tile_size {} (expected {TILE_SIZE})",
                manifest.tile_size
            )));
        }
        let expected_levels = level_count_for(manifest.width, manifest.height);
        if manifest.levels != expected_levels {
            return Err(SlideError::Inconsistent(format!(
                "declared {} levels, dimensions require {expected_levels}",
                manifest.levels
            )));
        }
        for level in 0..manifest.levels {
            let (lw, lh) = level_dimensions(manifest.width, manifest.height, level);
            let (cols, rows) = tile_grid(lw, lh);
            let last = tile_path(root, level, cols - 1, rows - 1);
            let dims = image::image_dimensions(&last).map_err(|e| {
                SlideError::Inconsistent(format!("level {level}: tile {}: {e}", last.display()))
            })?;
            let expected = (lw - (cols - 1) * TILE_SIZE, lh - (rows - 1) * TILE_SIZE);
            if dims != expected {
                return Err(SlideError::Inconsistent(format!(
                    "level {level}: edge tile is {}x{}, level {lw}x{lh} needs {}x{}",
                    dims.0, dims.1, expected.0, expected.1
                )));
            }
            for extra in [tile_path(root, level, cols, 0), tile_path(root, level, 0, rows)] {
                if extra.exists() {
                    return Err(SlideError::Inconsistent(format!(
                        "level {level}: tile {} beyond the {cols}x{rows} grid",
                        extra.display()
                    )));
                }
            }
        }
        Ok(SlidePyramid {
            id: root.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            width: manifest.width,
            height: manifest.height,
            level_count: manifest.levels,
            mpp: manifest.mpp,
            backing: Backing::Tiles { root: root.to_path_buf(), cache: Mutex::new(HashMap::new()) },
        })
    }

    /// Treats a PNG/JPEG file as a single-level slide.
    pub fn open_flat(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = decode_image(path)?;
        let rgba = img.into_rgba8();
        let (w, h) = rgba.dimensions();
        Ok(Self::from_image(stem_of(path), RasterImage::from_raw(w, h, rgba.into_raw())?))
    }

    pub fn from_image(id: impl Into<String>, image: RasterImage) -> Self {
        SlidePyramid {
            id: id.into(),
            width: image.width(),
            height: image.height(),
            level_count: 1,
            mpp: None,
            backing: Backing::Memory(Arc::new(image)),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn tile_size(&self) -> u32 {
        TILE_SIZE
    }

    pub fn level_count(&self) -> u32 {
        self.level_count
    }

    pub fn mpp(&self) -> Option<f64> {
        self.mpp
    }

    /// Number of zoom levels in the served tile grid. Equal to `level_count`
    /// for pyramids; flat slides synthesize the upper levels on demand.
    pub fn grid_levels(&self) -> u32 {
        level_count_for(self.width, self.height)
    }

    pub fn level_dimensions(&self, level: u32) -> (u32, u32) {
        level_dimensions(self.width, self.height, level)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            width: self.width,
            height: self.height,
            tile_size: TILE_SIZE,
            levels: self.level_count,
            mpp: self.mpp,
        }
    }

    fn load_tile(&self, level: u32, col: u32, row: u32) -> Result<Arc<RasterImage>> {
        match &self.backing {
            Backing::Memory(img) => {
                let x = col * TILE_SIZE;
                let y = row * TILE_SIZE;
                let w = TILE_SIZE.min(img.width() - x);
                let h = TILE_SIZE.min(img.height() - y);
                Ok(Arc::new(img.crop(x, y, w, h)))
            }
            Backing::Tiles { root, cache } => {
                let key = (level, col, row);
                if let Some(t) = cache.lock().unwrap().get(&key) {
                    return Ok(t.clone());
                }
                let path = tile_path(root, level, col, row);
                let bytes = fs::read(&path).map_err(|source| SlideError::Io { path, source })?;
                let tile = Arc::new(RasterImage::from_png(&bytes)?);
                let mut cache = cache.lock().unwrap();
                if cache.len() >= TILE_CACHE_CAPACITY {
                    cache.clear();
                }
                cache.insert(key, tile.clone());
                Ok(tile)
            }
        }
    }

    /// Reads a `w`×`h` block of level pixels starting at (`x`, `y`).
    ///
    /// Pixels outside the level rectangle are opaque white.
    pub fn read_region(&self, level: u32, x: i64, y: i64, w: u32, h: u32) -> Result<RasterImage> {
        if level >= self.level_count {
            return Err(SlideError::LevelOutOfRange { level, level_count: self.level_count });
        }
        if w == 0 || h == 0 {
            return Err(SlideError::EmptyRegion);
        }
        let mut out = RasterImage::filled(w, h, Rgba::WHITE);
        let (lw, lh) = self.level_dimensions(level);
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = (x + w as i64).min(lw as i64);
        let y1 = (y + h as i64).min(lh as i64);
        if x0 >= x1 || y0 >= y1 {
            return Ok(out);
        }
        let ts = TILE_SIZE as i64;
        for row in (y0 / ts)..=((y1 - 1) / ts) {
            for col in (x0 / ts)..=((x1 - 1) / ts) {
                let tile = self.load_tile(level, col as u32, row as u32)?;
                let tx0 = (col * ts).max(x0);
                let ty0 = (row * ts).max(y0);
                let tx1 = ((col + 1) * ts).min(x1);
                let ty1 = ((row + 1) * ts).min(y1);
                let part = tile.crop(
                    (tx0 - col * ts) as u32,
                    (ty0 - row * ts) as u32,
                    (tx1 - tx0) as u32,
                    (ty1 - ty0) as u32,
                );
                out.paste(&part, (tx0 - x) as u32, (ty0 - y) as u32);
            }
        }
        Ok(out)
    }

    /// The 256×256 grid tile at zoom `z` (0 = baseline), padded with white.
    ///
    /// Zoom levels above the stored pyramid are box-downsampled from the
    /// coarsest stored level.
    pub fn read_grid_tile(&self, z: u32, col: u32, row: u32) -> Result<RasterImage> {
        let top = self.level_count - 1;
        if z <= top {
            return self.read_region(
                z,
                col as i64 * TILE_SIZE as i64,
                row as i64 * TILE_SIZE as i64,
                TILE_SIZE,
                TILE_SIZE,
            );
        }
        let steps = z - top;
        let span = TILE_SIZE << steps;
        let mut img = self.read_region(
            top,
            col as i64 * span as i64,
            row as i64 * span as i64,
            span,
            span,
        )?;
        for _ in 0..steps {
            img = downsample_box(&img);
        }
        Ok(img)
    }
}

/// Halves an image with a 2×2 box filter, rounding half up. Odd edges
/// replicate the last row/column.
pub fn downsample_box(src: &RasterImage) -> RasterImage {
    let w = src.width().div_ceil(2);
    let h = src.height().div_ceil(2);
    let mut out = RasterImage::transparent(w, h);
    let max_x = src.width() - 1;
    let max_y = src.height() - 1;
    for y in 0..h {
        let sy0 = 2 * y;
        let sy1 = (2 * y + 1).min(max_y);
        for x in 0..w {
            let sx0 = 2 * x;
            let sx1 = (2 * x + 1).min(max_x);
            let px = [src.get(sx0, sy0), src.get(sx1, sy0), src.get(sx0, sy1), src.get(sx1, sy1)];
            let mut c = [0u8; 4];
            for (ch, slot) in c.iter_mut().enumerate() {
                let sum: u32 = px.iter().map(|p| p.0[ch] as u32).sum();
                *slot = ((sum + 2) / 4) as u8;
            }
            out.set(x, y, Rgba(c));
        }
    }
    out
}

/// Baseline pixel of the synthetic test slide.
pub fn synthetic_pixel(x: u32, y: u32) -> Rgba {
    Rgba([(x % 256) as u8, (y % 256) as u8, ((x / 256 + y / 256) % 256) as u8, 255])
}

/// Writes a deterministic synthetic pyramid to `out_path` and opens it.
pub fn generate_synthetic_slide(
    width: u32,
    height: u32,
    out_path: impl AsRef<Path>,
) -> Result<SlidePyramid> {
    if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
        return Err(SlideError::DimensionOutOfRange { width: width as u64, height: height as u64 });
    }
    let root = out_path.as_ref();
    let not_writable = |source| SlideError::NotWritable { path: root.to_path_buf(), source };
    fs::create_dir_all(root.join("tiles")).map_err(not_writable)?;

    let levels = level_count_for(width, height);
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        width,
        height,
        tile_size: TILE_SIZE,
        levels,
        mpp: None,
    };
    let write_tile = |level: u32, col: u32, row: u32, img: &RasterImage| -> Result<()> {
        let path = tile_path(root, level, col, row);
        fs::write(&path, img.to_png()?)
            .map_err(|source| SlideError::NotWritable { path, source })
    };

    // Baseline.
    fs::create_dir_all(root.join("tiles/0")).map_err(not_writable)?;
    let (cols, rows) = tile_grid(width, height);
    for row in 0..rows {
        for col in 0..cols {
            let x0 = col * TILE_SIZE;
            let y0 = row * TILE_SIZE;
            let tw = TILE_SIZE.min(width - x0);
            let th = TILE_SIZE.min(height - y0);
            let mut tile = RasterImage::transparent(tw, th);
            for y in 0..th {
                for x in 0..tw {
                    tile.set(x, y, synthetic_pixel(x0 + x, y0 + y));
                }
            }
            write_tile(0, col, row, &tile)?;
        }
    }

    // Each level is built from the tiles of the one below, already on disk.
    let partial = SlidePyramid {
        id: stem_of(root),
        width,
        height,
        level_count: levels,
        mpp: None,
        backing: Backing::Tiles { root: root.to_path_buf(), cache: Mutex::new(HashMap::new()) },
    };
    for level in 1..levels {
        fs::create_dir_all(root.join("tiles").join(level.to_string())).map_err(not_writable)?;
        let (pw, ph) = level_dimensions(width, height, level - 1);
        let (lw, lh) = level_dimensions(width, height, level);
        let (cols, rows) = tile_grid(lw, lh);
        for row in 0..rows {
            for col in 0..cols {
                let sx = 2 * col * TILE_SIZE;
                let sy = 2 * row * TILE_SIZE;
                let sw = (2 * TILE_SIZE).min(pw - sx);
                let sh = (2 * TILE_SIZE).min(ph - sy);
                let src = partial.read_region(level - 1, sx as i64, sy as i64, sw, sh)?;
                write_tile(level, col, row, &downsample_box(&src))?;
            }
        }
    }

    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(root.join("manifest.json"), text).map_err(not_writable)?;
    SlidePyramid::open(root)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlayChannels {
    GraySingleChannel,
    Rgb,
    Rgba,
}

/// A low-resolution overlay image bound to a parent slide.
#[derive(Debug, Clone)]
pub struct FlatOverlayImage {
    pub image: RasterImage,
    pub channels: OverlayChannels,
    pub parent_slide_id: String,
}

fn decode_image(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|source| SlideError::Io { path: path.to_path_buf(), source })?
        .with_guessed_format()
        .map_err(|source| SlideError::Io { path: path.to_path_buf(), source })?
        .decode()
        .map_err(|e| SlideError::Undecodable { path: path.to_path_buf(), message: e.to_string() })
}

/// Checks that `overlay_w/overlay_h` is within [`ASPECT_TOLERANCE`] of the
/// parent's ratio.
pub fn check_aspect_ratio(
    overlay_w: u32,
    overlay_h: u32,
    parent_w: u32,
    parent_h: u32,
) -> Result<()> {
    let overlay = overlay_w as f64 / overlay_h as f64;
    let parent = parent_w as f64 / parent_h as f64;
    if (overlay - parent).abs() / parent > ASPECT_TOLERANCE {
        return Err(SlideError::AspectRatioMismatch { overlay, parent });
    }
    Ok(())
}

/// Decodes a PNG/JPEG overlay and validates it against `parent`.
pub fn load_flat_overlay(path: impl AsRef<Path>, parent: &SlidePyramid) -> Result<FlatOverlayImage> {
    let img = decode_image(path.as_ref())?;
    let channels = match img.color() {
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16 => {
            OverlayChannels::GraySingleChannel
        }
        ColorType::Rgb8 | ColorType::Rgb16 | ColorType::Rgb32F => OverlayChannels::Rgb,
        _ => OverlayChannels::Rgba,
    };
    let rgba = img.into_rgba8();
    let (w, h) = rgba.dimensions();
    check_aspect_ratio(w, h, parent.width(), parent.height())?;
    Ok(FlatOverlayImage {
        image: RasterImage::from_raw(w, h, rgba.into_raw())?,
        channels,
        parent_slide_id: parent.id().to_string(),
    })
}
