use super::colormap::{map_value_to_color, Colormap};
use super::{check_range, pixel_center, PixelRegion, RenderError, TileCoord};
use crate::geometry::{point_distance, segment_distance};
use crate::graph::Graph;
use crate::raster::{RasterImage, Rgb, Rgba};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeColorSource {
    Fixed(Rgb),
    ByFeature { index: usize, colormap: Colormap, range: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLayerParams {
    pub show_nodes: bool,
    pub show_edges: bool,
    /// Disc radius in rendered pixels.
    pub node_radius: f64,
    pub node_color_source: NodeColorSource,
    pub edge_color: Rgb,
    pub edge_thickness: f64,
}

impl Default for GraphLayerParams {
    fn default() -> Self {
        GraphLayerParams {
            show_nodes: true,
            show_edges: true,
            node_radius: 4.0,
            node_color_source: NodeColorSource::Fixed(Rgb([0x1f, 0x77, 0xb4])),
            edge_color: Rgb([0, 0, 0]),
            edge_thickness: 1.0,
        }
    }
}

impl GraphLayerParams {
    pub fn validate(&self, graph: &Graph) -> Result<(), RenderError> {
        if let NodeColorSource::ByFeature { index, range, .. } = &self.node_color_source {
            if *index >= graph.feature_count() {
                return Err(RenderError::FeatureOutOfRange {
                    index: *index,
                    count: graph.feature_count(),
                });
            }
            check_range(*range)?;
        }
        Ok(())
    }

    fn node_color(&self, graph: &Graph, node: usize) -> Rgb {
        match &self.node_color_source {
            NodeColorSource::Fixed(c) => *c,
            NodeColorSource::ByFeature { index, colormap, range } => {
                let v = graph.features(node).map_or(f64::NAN, |f| f[*index]);
                map_value_to_color(v, colormap, *range)
            }
        }
    }
}

/// Index range of level pixels whose centers may fall within `reach`
/// rendered pixels of `[lo, hi]`, clipped to `[start, end)`.
fn span(lo: f64, hi: f64, reach: f64, scale: f64, start: i64, end: i64) -> (i64, i64) {
    let a = ((lo / scale - reach - 1.0).floor() as i64).max(start);
    let b = ((hi / scale + reach + 1.0).ceil() as i64).min(end);
    (a, b)
}

/// Renders graph edges and nodes over a level-pixel region. Nodes paint over
/// edges; among overlapping nodes the highest index wins.
pub fn rasterize_graph_region(
    graph: &Graph,
    params: &GraphLayerParams,
    region: PixelRegion,
) -> Result<RasterImage, RenderError> {
    params.validate(graph)?;
    let mut img = RasterImage::transparent(region.width, region.height);
    let scale = region.scale();
    let (rx0, rx1, ry0, ry1) = (region.x, region.x_end(), region.y, region.y_end());

    if params.show_edges && params.edge_thickness >= 0.0 {
        let half = params.edge_thickness / 2.0;
        let color = params.edge_color.with_alpha(255);
        for e in 0..graph.edge_count() {
            let (p, q) = graph.segment(e);
            let (x0, x1) = span(p.0.min(q.0), p.0.max(q.0), half, scale, rx0, rx1);
            let (y0, y1) = span(p.1.min(q.1), p.1.max(q.1), half, scale, ry0, ry1);
            for gy in y0..y1 {
                let cy = pixel_center(gy, scale);
                for gx in x0..x1 {
                    let c = (pixel_center(gx, scale), cy);
                    if segment_distance(c, p, q) / scale <= half {
                        img.set((gx - rx0) as u32, (gy - ry0) as u32, color);
                    }
                }
            }
        }
    }

    if params.show_nodes && params.node_radius >= 0.0 {
        let r = params.node_radius;
        for (i, &p) in graph.nodes().iter().enumerate() {
            let (x0, x1) = span(p.0, p.0, r, scale, rx0, rx1);
            let (y0, y1) = span(p.1, p.1, r, scale, ry0, ry1);
            if x0 >= x1 || y0 >= y1 {
                continue;
            }
            let color: Rgba = params.node_color(graph, i).with_alpha(255);
            for gy in y0..y1 {
                let cy = pixel_center(gy, scale);
                for gx in x0..x1 {
                    if point_distance((pixel_center(gx, scale), cy), p) / scale <= r {
                        img.set((gx - rx0) as u32, (gy - ry0) as u32, color);
                    }
                }
            }
        }
    }
    Ok(img)
}

pub fn rasterize_graph_tile(
    graph: &Graph,
    params: &GraphLayerParams,
    tile: TileCoord,
) -> Result<RasterImage, RenderError> {
    rasterize_graph_region(graph, params, tile.region())
}
