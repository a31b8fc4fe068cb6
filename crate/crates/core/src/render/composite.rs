use super::RenderError;
use crate::raster::{source_over, RasterImage};
use crate::slide::TILE_SIZE;

/// Stacks layers bottom to top with source-over. An empty stack yields a
/// transparent tile.
pub fn composite(layers: &[RasterImage]) -> Result<RasterImage, RenderError> {
    let Some(first) = layers.first() else {
        return Ok(RasterImage::transparent(TILE_SIZE, TILE_SIZE));
    };
    let (w, h) = (first.width(), first.height());
    for (index, l) in layers.iter().enumerate() {
        if (l.width(), l.height()) != (w, h) {
            return Err(RenderError::SizeMismatch {
                index,
                width: l.width(),
                height: l.height(),
                expected_w: w,
                expected_h: h,
            });
        }
    }
    let mut out = first.clone();
    for layer in &layers[1..] {
        for y in 0..h {
            for x in 0..w {
                let src = layer.get(x, y);
                if src.alpha() != 0 {
                    out.set(x, y, source_over(out.get(x, y), src));
                }
            }
        }
    }
    Ok(out)
}
