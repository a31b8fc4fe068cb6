use std::collections::BTreeMap;

use super::RenderError;
use crate::raster::Rgb;

/// Categorical palette assigned to type names in sorted order, cycling.
pub const DEFAULT_PALETTE: [Rgb; 10] = [
    Rgb([0x1f, 0x77, 0xb4]),
    Rgb([0xff, 0x7f, 0x0e]),
    Rgb([0x2c, 0xa0, 0x2c]),
    Rgb([0xd6, 0x27, 0x28]),
    Rgb([0x94, 0x67, 0xbd]),
    Rgb([0x8c, 0x56, 0x4b]),
    Rgb([0xe3, 0x77, 0xc2]),
    Rgb([0x7f, 0x7f, 0x7f]),
    Rgb([0xbc, 0xbd, 0x22]),
    Rgb([0x17, 0xbe, 0xcf]),
];

pub const DEFAULT_COLORMAP: &str = "diverging";

#[derive(Debug, Clone, PartialEq)]
pub enum Colormap {
    /// Control points with strictly increasing `t`, starting at 0 and ending at 1.
    Continuous(Vec<(f64, Rgb)>),
    Categorical(Vec<Rgb>),
}

impl Colormap {
    pub fn continuous(points: Vec<(f64, Rgb)>) -> Result<Self, RenderError> {
        let ok = points.len() >= 2
            && points.first().is_some_and(|p| p.0 == 0.0)
            && points.last().is_some_and(|p| p.0 == 1.0)
            && points.windows(2).all(|w| w[0].0 < w[1].0);
        if !ok {
            return Err(RenderError::InvalidColormap(
                "control points must strictly increase from t=0 to t=1".into(),
            ));
        }
        Ok(Colormap::Continuous(points))
    }

    pub fn categorical(palette: Vec<Rgb>) -> Result<Self, RenderError> {
        if palette.is_empty() {
            return Err(RenderError::InvalidColormap("empty palette".into()));
        }
        Ok(Colormap::Categorical(palette))
    }

    /// Blue–gray–red diverging map.
    pub fn diverging() -> Self {
        Colormap::Continuous(vec![
            (0.0, Rgb([59, 76, 192])),
            (0.5, Rgb([221, 221, 221])),
            (1.0, Rgb([180, 4, 38])),
        ])
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "diverging" | "coolwarm" => Self::diverging(),
            "gray" | "grey" => {
                Colormap::Continuous(vec![(0.0, Rgb([0, 0, 0])), (1.0, Rgb([255, 255, 255]))])
            }
            "viridis" => Colormap::Continuous(vec![
                (0.0, Rgb([0x44, 0x01, 0x54])),
                (0.25, Rgb([0x3b, 0x52, 0x8b])),
                (0.5, Rgb([0x21, 0x91, 0x8c])),
                (0.75, Rgb([0x5e, 0xc9, 0x62])),
                (1.0, Rgb([0xfd, 0xe7, 0x25])),
            ]),
            "reds" => {
                Colormap::Continuous(vec![(0.0, Rgb([255, 245, 240])), (1.0, Rgb([103, 0, 13]))])
            }
            "categorical" | "tab10" => Colormap::Categorical(DEFAULT_PALETTE.to_vec()),
            _ => return None,
        })
    }

    pub const NAMES: &'static [&'static str] =
        &["diverging", "coolwarm", "gray", "grey", "viridis", "reds", "categorical", "tab10"];

    /// Color at normalized position `t` in [0, 1].
    pub fn sample(&self, t: f64) -> Rgb {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        match self {
            Colormap::Categorical(p) => {
                let i = ((t * p.len() as f64).floor() as usize).min(p.len() - 1);
                p[i]
            }
            Colormap::Continuous(points) => {
                let last = points.len() - 1;
                if t >= points[last].0 {
                    return points[last].1;
                }
                let i = points.partition_point(|p| p.0 <= t).saturating_sub(1).min(last - 1);
                let (t0, c0) = points[i];
                let (t1, c1) = points[i + 1];
                if t == t0 {
                    return c0;
                }
                let f = (t - t0) / (t1 - t0);
                Rgb(std::array::from_fn(|ch| {
                    let a = c0.0[ch] as f64;
                    let b = c1.0[ch] as f64;
                    (a + f * (b - a) + 0.5).floor().clamp(0.0, 255.0) as u8
                }))
            }
        }
    }
}

/// Maps `value` into `range`, clamps to [0, 1] and samples the colormap.
pub fn map_value_to_color(value: f64, cmap: &Colormap, range: (f64, f64)) -> Rgb {
    let (min, max) = range;
    let t = if max > min { (value - min) / (max - min) } else { 0.0 };
    cmap.sample(t)
}

/// Default per-type colors: palette in sorted type order, then `overrides`.
pub fn assign_type_colors<'a>(
    types: impl IntoIterator<Item = &'a str>,
    overrides: &BTreeMap<String, Rgb>,
) -> BTreeMap<String, Rgb> {
    let mut sorted: Vec<&str> = types.into_iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: BTreeMap<String, Rgb> = sorted
        .iter()
        .enumerate()
        .map(|(i, t)| (t.to_string(), DEFAULT_PALETTE[i % DEFAULT_PALETTE.len()]))
        .collect();
    for (k, v) in overrides {
        out.insert(k.clone(), *v);
    }
    out
}
