//! In-memory RGBA rasters and PNG encoding.

use std::io::Cursor;

use image::{ImageFormat, RgbaImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BadLength { expected: usize, actual: usize },
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
}

/// Straight-alpha RGBA color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rgba(pub [u8; 4]);

impl Rgba {
    pub const TRANSPARENT: Rgba = Rgba([0, 0, 0, 0]);
    pub const WHITE: Rgba = Rgba([255, 255, 255, 255]);

    pub fn new(r: u8, g: u8, b: u8, a: u8) -> Self {
        Rgba([r, g, b, a])
    }

    pub fn alpha(self) -> u8 {
        self.0[3]
    }
}

/// RGB triple used by color sources and colormaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb([r, g, b])
    }

    pub fn with_alpha(self, a: u8) -> Rgba {
        Rgba([self.0[0], self.0[1], self.0[2], a])
    }
}

/// Row-major RGBA8 image with straight (non-premultiplied) alpha.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: Rgba) -> Self {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 4);
        for _ in 0..n {
            pixels.extend_from_slice(&color.0);
        }
        RasterImage { width, height, pixels }
    }

    pub fn transparent(width: u32, height: u32) -> Self {
        RasterImage {
            width,
            height,
            pixels: vec![0; width as usize * height as usize * 4],
        }
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize * 4;
        if pixels.len() != expected {
            return Err(RasterError::BadLength { expected, actual: pixels.len() });
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize * self.width as usize + x as usize) * 4
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgba {
        let o = self.offset(x, y);
        Rgba([self.pixels[o], self.pixels[o + 1], self.pixels[o + 2], self.pixels[o + 3]])
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgba) {
        let o = self.offset(x, y);
        self.pixels[o..o + 4].copy_from_slice(&c.0);
    }

    /// Source-over `src` onto the pixel at (x, y).
    #[inline]
    pub fn blend(&mut self, x: u32, y: u32, src: Rgba) {
        let dst = self.get(x, y);
        self.set(x, y, source_over(dst, src));
    }

    /// Copy of the sub-rectangle starting at (x, y). The rectangle must lie inside the image.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> RasterImage {
        assert!(x + w <= self.width && y + h <= self.height, "crop out of bounds");
        let mut out = RasterImage::transparent(w, h);
        for row in 0..h {
            let src = self.offset(x, y + row);
            let dst = (row as usize * w as usize) * 4;
            out.pixels[dst..dst + w as usize * 4]
                .copy_from_slice(&self.pixels[src..src + w as usize * 4]);
        }
        out
    }

    /// Copy `src` into this image with its top-left corner at (x, y), clipping at the edges.
    pub fn paste(&mut self, src: &RasterImage, x: u32, y: u32) {
        let w = src.width.min(self.width.saturating_sub(x));
        let h = src.height.min(self.height.saturating_sub(y));
        for row in 0..h {
            let s = (row as usize * src.width as usize) * 4;
            let d = self.offset(x, y + row);
            self.pixels[d..d + w as usize * 4].copy_from_slice(&src.pixels[s..s + w as usize * 4]);
        }
    }

    /// Lossless PNG, RGBA8, straight alpha.
    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let img = RgbaImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length checked at construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgba8();
        let (w, h) = img.dimensions();
        Ok(RasterImage { width: w, height: h, pixels: img.into_raw() })
    }
}

#[inline]
fn div_round_half_up(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Source-over of two straight-alpha pixels.
///
/// Computed exactly in premultiplied integer arithmetic and rounded half-up once
/// per channel when converting back to straight alpha.
#[inline]
pub fn source_over(dst: Rgba, src: Rgba) -> Rgba {
    let sa = src.0[3] as u64;
    if sa == 255 {
        return src;
    }
    if sa == 0 {
        return dst;
    }
    let da = dst.0[3] as u64;
    // Alpha scaled by 255^2.
    let out_a = sa * 255 + da * (255 - sa);
    if out_a == 0 {
        return Rgba::TRANSPARENT;
    }
    let mut out = [0u8; 4];
    for (c, o) in out.iter_mut().take(3).enumerate() {
        let num = src.0[c] as u64 * sa * 255 + dst.0[c] as u64 * da * (255 - sa);
        *o = div_round_half_up(num, out_a).min(255) as u8;
    }
    out[3] = div_round_half_up(out_a, 255) as u8;
    Rgba(out)
}
