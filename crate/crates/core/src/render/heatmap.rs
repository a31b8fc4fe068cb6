use serde::{Deserialize, Serialize};

use super::colormap::{map_value_to_color, Colormap};
use super::{pixel_center, PixelRegion, RenderError, TileCoord};
use crate::raster::{RasterImage, Rgba};
use crate::slide::{FlatOverlayImage, OverlayChannels, SlideError, SlidePyramid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    #[default]
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageLayerParams {
    pub alpha: u8,
    /// Required for single-channel sources.
    pub colormap: Option<Colormap>,
    pub resample: Resample,
}

impl Default for ImageLayerParams {
    fn default() -> Self {
        ImageLayerParams { alpha: 255, colormap: None, resample: Resample::Bilinear }
    }
}

#[inline]
fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[inline]
fn scale_alpha(a: u8, by: u8) -> u8 {
    ((2 * a as u32 * by as u32 + 255) / 510) as u8
}

fn sample(img: &RasterImage, u: f64, v: f64, mode: Resample) -> Rgba {
    let max_x = img.width() as i64 - 1;
    let max_y = img.height() as i64 - 1;
    match mode {
        Resample::Nearest => {
            let x = ((u + 0.5).floor() as i64).clamp(0, max_x);
            let y = ((v + 0.5).floor() as i64).clamp(0, max_y);
            img.get(x as u32, y as u32)
        }
        Resample::Bilinear => {
            let fx0 = u.floor();
            let fy0 = v.floor();
            let fx = u - fx0;
            let fy = v - fy0;
            let x0 = (fx0 as i64).clamp(0, max_x) as u32;
            let x1 = (fx0 as i64 + 1).clamp(0, max_x) as u32;
            let y0 = (fy0 as i64).clamp(0, max_y) as u32;
            let y1 = (fy0 as i64 + 1).clamp(0, max_y) as u32;
            let (p00, p10, p01, p11) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
            let mut out = [0u8; 4];
            for (c, slot) in out.iter_mut().enumerate() {
                let top = (1.0 - fx) * p00.0[c] as f64 + fx * p10.0[c] as f64;
                let bottom = (1.0 - fx) * p01.0[c] as f64 + fx * p11.0[c] as f64;
                *slot = round_half_up((1.0 - fy) * top + fy * bottom);
            }
            Rgba(out)
        }
    }
}

/// Upsamples a low-resolution overlay onto a level-pixel region of `slide`.
///
/// A pixel centered at baseline `bx` samples overlay column
/// `u = bx / W_slide · W_overlay − 0.5` (rows likewise), clamping at the
/// overlay edges.
pub fn resample_heatmap_region(
    overlay: &FlatOverlayImage,
    params: &ImageLayerParams,
    region: PixelRegion,
    slide: &SlidePyramid,
) -> Result<RasterImage, RenderError> {
    let gray_map = match (overlay.channels, &params.colormap) {
        (OverlayChannels::GraySingleChannel, None) => return Err(RenderError::MissingColormap),
        (OverlayChannels::GraySingleChannel, Some(c)) => Some(c),
        _ => None,
    };
    let img = &overlay.image;
    let scale = region.scale();
    let sx = img.width() as f64 / slide.width() as f64;
    let sy = img.height() as f64 / slide.height() as f64;
    let mut out = RasterImage::transparent(region.width, region.height);
    for j in 0..region.height {
        let by = pixel_center(region.y + j as i64, scale);
        let v = by * sy - 0.5;
        for i in 0..region.width {
            let bx = pixel_center(region.x + i as i64, scale);
            let u = bx * sx - 0.5;
            let s = sample(img, u, v, params.resample);
            let px = match gray_map {
                Some(cmap) => map_value_to_color(s.0[0] as f64, cmap, (0.0, 255.0)).with_alpha(params.alpha),
                None => Rgba([s.0[0], s.0[1], s.0[2], scale_alpha(s.0[3], params.alpha)]),
            };
            out.set(i, j, px);
        }
    }
    Ok(out)
}

pub fn resample_heatmap_tile(
    overlay: &FlatOverlayImage,
    params: &ImageLayerParams,
    tile: TileCoord,
    slide: &SlidePyramid,
) -> Result<RasterImage, RenderError> {
    resample_heatmap_region(overlay, params, tile.region(), slide)
}

/// A tile of a pyramidal overlay registered to the base slide, with its
/// alpha scaled by the layer opacity.
pub fn slide_overlay_tile(
    overlay: &SlidePyramid,
    params: &ImageLayerParams,
    tile: TileCoord,
) -> Result<RasterImage, SlideError> {
    let mut img = overlay.read_grid_tile(tile.z, tile.x, tile.y)?;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let mut p = img.get(x, y);
            p.0[3] = scale_alpha(p.0[3], params.alpha);
            img.set(x, y, p);
        }
    }
    Ok(img)
}
