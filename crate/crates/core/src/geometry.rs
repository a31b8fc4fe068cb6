//! Annotation geometry: validation, bounding boxes, hit predicates and WKB.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = (f64, f64);

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{kind:?} needs {min} vertices, got {got}")]
    TooFewVertices { kind: GeometryKind, min: usize, got: usize },
    #[error("point must have exactly one coordinate, got {0}")]
    PointArity(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("holes are only allowed on polygons")]
    HolesOnNonPolygon,
    #[error("malformed WKB: {0}")]
    Wkb(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Point,
    Polyline,
    Polygon,
}

/// Axis-aligned closed bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        BBox { min_x, min_y, max_x, max_y }
    }

    /// Closed-interval overlap; touching edges count.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x) * (self.max_y - self.min_y)
    }

    pub fn expand(&self, by: f64) -> BBox {
        BBox::new(self.min_x - by, self.min_y - by, self.max_x + by, self.max_y + by)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    kind: GeometryKind,
    exterior: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl Geometry {
    pub fn point(x: f64, y: f64) -> Result<Self, GeometryError> {
        Self::new(GeometryKind::Point, vec![(x, y)], Vec::new())
    }

    pub fn polyline(coords: Vec<Point>) -> Result<Self, GeometryError> {
        Self::new(GeometryKind::Polyline, coords, Vec::new())
    }

    pub fn polygon(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self, GeometryError> {
        Self::new(GeometryKind::Polygon, exterior, holes)
    }

    pub fn new(
        kind: GeometryKind,
        exterior: Vec<Point>,
        holes: Vec<Vec<Point>>,
    ) -> Result<Self, GeometryError> {
        match kind {
            GeometryKind::Point if exterior.len() != 1 => {
                return Err(GeometryError::PointArity(exterior.len()))
            }
            GeometryKind::Polyline if exterior.len() < 2 => {
                return Err(GeometryError::TooFewVertices { kind, min: 2, got: exterior.len() })
            }
            GeometryKind::Polygon => {
                for ring in std::iter::once(&exterior).chain(&holes) {
                    if ring.len() < 3 {
                        return Err(GeometryError::TooFewVertices { kind, min: 3, got: ring.len() });
                    }
                }
            }
            _ => {}
        }
        if kind != GeometryKind::Polygon && !holes.is_empty() {
            return Err(GeometryError::HolesOnNonPolygon);
        }
        let finite = exterior
            .iter()
            .chain(holes.iter().flatten())
            .all(|&(x, y)| x.is_finite() && y.is_finite());
        if !finite {
            return Err(GeometryError::NonFinite);
        }
        Ok(Geometry { kind, exterior, holes })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        // Holes lie inside the exterior of a valid polygon, but include them so
        // the box is the exact extremes of every stored coordinate.
        for &(x, y) in self.exterior.iter().chain(self.holes.iter().flatten()) {
            b.min_x = b.min_x.min(x);
            b.min_y = b.min_y.min(y);
            b.max_x = b.max_x.max(x);
            b.max_y = b.max_y.max(y);
        }
        b
    }

    /// Rings of a polygon (exterior first), each implicitly closed.
    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Segments that make up the drawable outline: closed rings for polygons,
    /// consecutive vertex pairs for polylines, none for points.
    pub fn for_each_segment(&self, mut f: impl FnMut(Point, Point)) {
        match self.kind {
            GeometryKind::Point => {}
            GeometryKind::Polyline => {
                for w in self.exterior.windows(2) {
                    f(w[0], w[1]);
                }
            }
            GeometryKind::Polygon => {
                for ring in self.rings() {
                    for i in 0..ring.len() {
                        f(ring[i], ring[(i + 1) % ring.len()]);
                    }
                }
            }
        }
    }

    /// Distance from `p` to the outline (or to the point itself), in the
    /// coordinate units of the geometry.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        if self.kind == GeometryKind::Point {
            return point_distance(p, self.exterior[0]);
        }
        let mut best = f64::INFINITY;
        self.for_each_segment(|a, b| best = best.min(segment_distance(p, a, b)));
        best
    }

    /// Even-odd containment with boundary points counted as inside. Always
    /// false for points and polylines.
    pub fn contains(&self, p: Point) -> bool {
        if self.kind != GeometryKind::Polygon {
            return false;
        }
        let mut on_boundary = false;
        self.for_each_segment(|a, b| on_boundary |= on_segment(p, a, b));
        on_boundary || even_odd_inside(self.rings(), p)
    }
}

#[inline]
pub fn point_distance(p: Point, q: Point) -> f64 {
    let dx = p.0 - q.0;
    let dy = p.1 - q.1;
    (dx * dx + dy * dy).sqrt()
}

/// Euclidean distance from `p` to the closed segment `a`–`b`.
#[inline]
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return point_distance(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    point_distance(p, (a.0 + t * dx, a.1 + t * dy))
}

/// Whether `p` lies exactly on segment `a`–`b`.
#[inline]
pub fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    cross == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// X coordinate where the horizontal line through `y` crosses edge `a`–`b`,
/// if the edge straddles it under the half-open rule used by the even-odd
/// test.
#[inline]
pub fn edge_crossing(y: f64, a: Point, b: Point) -> Option<f64> {
    if (a.1 > y) != (b.1 > y) {
        Some(a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1))
    } else {
        None
    }
}

/// Crossing-number test over every ring; holes subtract by parity.
pub fn even_odd_inside<'a>(rings: impl Iterator<Item = &'a [Point]>, p: Point) -> bool {
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        for i in 0..n {
            if let Some(x) = edge_crossing(p.1, ring[i], ring[(i + 1) % n]) {
                if p.0 < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

// ISO WKB, little-endian, 2D.
const WKB_POINT: u32 = 1;
const WKB_LINESTRING: u32 = 2;
const WKB_POLYGON: u32 = 3;

fn put_points(out: &mut Vec<u8>, pts: &[Point]) {
    out.extend_from_slice(&(pts.len() as u32).to_le_bytes());
    for &(x, y) in pts {
        out.extend_from_slice(&x.to_le_bytes());
        out.extend_from_slice(&y.to_le_bytes());
    }
}

impl Geometry {
    pub fn to_wkb(&self) -> Vec<u8> {
        let mut out = vec![1u8];
        match self.kind {
            GeometryKind::Point => {
                out.extend_from_slice(&WKB_POINT.to_le_bytes());
                let (x, y) = self.exterior[0];
                out.extend_from_slice(&x.to_le_bytes());
                out.extend_from_slice(&y.to_le_bytes());
            }
            GeometryKind::Polyline => {
                out.extend_from_slice(&WKB_LINESTRING.to_le_bytes());
                put_points(&mut out, &self.exterior);
            }
            GeometryKind::Polygon => {
                out.extend_from_slice(&WKB_POLYGON.to_le_bytes());
                out.extend_from_slice(&(1 + self.holes.len() as u32).to_le_bytes());
                for ring in self.rings() {
                    put_points(&mut out, ring);
                }
            }
        }
        out
    }

    pub fn from_wkb(bytes: &[u8]) -> Result<Self, GeometryError> {
        let mut r = WkbReader { bytes, pos: 0 };
        let order = r.take(1)?[0];
        if order != 1 {
            return Err(GeometryError::Wkb(format!("unsupported byte order {order}")));
        }
        let geom = match r.u32()? {
            WKB_POINT => {
                let p = r.point()?;
                Geometry::point(p.0, p.1)?
            }
            WKB_LINESTRING => Geometry::polyline(r.points()?)?,
            WKB_POLYGON => {
                let n = r.u32()? as usize;
                if n == 0 {
                    return Err(GeometryError::Wkb("polygon without rings".into()));
                }
                let exterior = r.points()?;
                let holes = (1..n).map(|_| r.points()).collect::<Result<_, _>>()?;
                Geometry::polygon(exterior, holes)?
            }
            t => return Err(GeometryError::Wkb(format!("unsupported geometry type {t}"))),
        };
        if r.pos != bytes.len() {
            return Err(GeometryError::Wkb("trailing bytes".into()));
        }
        Ok(geom)
    }
}

struct WkbReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> WkbReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GeometryError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| GeometryError::Wkb("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, GeometryError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, GeometryError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn point(&mut self) -> Result<Point, GeometryError> {
        Ok((self.f64()?, self.f64()?))
    }

    fn points(&mut self) -> Result<Vec<Point>, GeometryError> {
        let n = self.u32()? as usize;
        if n > (self.bytes.len() - self.pos) / 16 {
            return Err(GeometryError::Wkb("truncated".into()));
        }
        (0..n).map(|_| self.point()).collect()
    }
}
