//! Static SVG figures of maps, fields, heat and trajectories.
//!
//! World coordinates map linearly onto the canvas with the y axis flipped so
//! that row 0 is drawn at the bottom. Numbers are printed with six decimals,
//! so output is byte-stable for identical inputs.

use std::fmt::Write;

use thiserror::Error;

use crate::gridmap::{Point, SemanticRegion, WorldMap};
use crate::heatfield::{FieldStack, HeatState};
use crate::planner::Trajectory;

/// One color per robot, cycling after nine.
pub const ROBOT_COLORS: [&str; 9] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324",
    "#000075",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Occupancy,
    Regions,
    /// Score arrows of level `t`.
    FieldArrows(usize),
    /// Heat snapshot of level `t`.
    Heat(usize),
    Trajectories,
    Starts,
    Goals,
}

impl Layer {
    pub fn name(&self) -> String {
        match self {
            Layer::Occupancy => "occupancy".into(),
            Layer::Regions => "regions".into(),
            Layer::FieldArrows(t) => format!("field{t}"),
            Layer::Heat(t) => format!("heat{t}"),
            Layer::Trajectories => "trajectories".into(),
            Layer::Starts => "starts".into(),
            Layer::Goals => "goals".into(),
        }
    }
}

impl std::str::FromStr for Layer {
    type Err = RenderError;

    /// `occupancy`, `regions`, `field:<t>`, `heat:<t>`, `trajectories`,
    /// `starts` or `goals`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let level = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| RenderError::Spec(format!("bad level in layer {s:?}")))
        };
        match s.split_once(':') {
            Some(("field", t)) => Ok(Layer::FieldArrows(level(t)?)),
            Some(("heat", t)) => Ok(Layer::Heat(level(t)?)),
            None => match s {
                "occupancy" => Ok(Layer::Occupancy),
                "regions" => Ok(Layer::Regions),
                "trajectories" => Ok(Layer::Trajectories),
                "starts" => Ok(Layer::Starts),
                "goals" => Ok(Layer::Goals),
                _ => Err(RenderError::Spec(format!("unknown layer {s:?}"))),
            },
            _ => Err(RenderError::Spec(format!("unknown layer {s:?}"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("layer {0} needs data that was not provided")]
    MissingLayer(String),
    #[error("layer {layer} asks for level {t}, available 1..={available}")]
    Level { layer: String, t: usize, available: usize },
    #[error("invalid render spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub layers: Vec<Layer>,
    /// Draw one arrow every `stride` cells per axis.
    pub stride: usize,
    /// Canvas width in pixels; the height follows the map aspect ratio.
    pub width_px: f64,
    pub colors: Vec<String>,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            layers: vec![
                Layer::Occupancy,
                Layer::Regions,
                Layer::Trajectories,
                Layer::Starts,
            ],
            stride: 4,
            width_px: 512.0,
            colors: ROBOT_COLORS.iter().map(|c| c.to_string()).collect(),
        }
    }
}

impl RenderSpec {
    pub fn with_layers(layers: Vec<Layer>) -> Self {
        Self {
            layers,
            ..Self::default()
        }
    }

    /// Name used in `<scenario-id>.<layerset>.svg`.
    pub fn layer_set_name(&self) -> String {
        self.layers.iter().map(Layer::name).collect::<Vec<_>>().join("+")
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.stride == 0 {
            return Err(RenderError::Spec("stride must be at least 1".into()));
        }
        if !(self.width_px > 0.0 && self.width_px.is_finite()) {
            return Err(RenderError::Spec("canvas width must be positive".into()));
        }
        if self.colors.is_empty() {
            return Err(RenderError::Spec("color cycle is empty".into()));
        }
        Ok(())
    }
}

/// Linear world-to-canvas map with a flipped y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanvasTransform {
    pub scale: f64,
    pub height_px: f64,
}

impl CanvasTransform {
    pub fn new(map: &WorldMap, width_px: f64) -> Self {
        let (w, h) = map.world_size();
        let scale = width_px / w;
        Self {
            scale,
            height_px: h * scale,
        }
    }

    pub fn to_canvas(&self, p: &Point) -> (f64, f64) {
        (p.x * self.scale, self.height_px - p.y * self.scale)
    }

    pub fn to_world(&self, x: f64, y: f64) -> Point {
        Point::new(x / self.scale, (self.height_px - y) / self.scale)
    }
}

/// Everything a figure may draw from.
#[derive(Debug, Clone, Copy)]
pub struct RenderInput<'a> {
    pub map: &'a WorldMap,
    pub fields: Option<&'a FieldStack>,
    /// Heat snapshots, element `t - 1` for level `t`.
    pub heat: Option<&'a [HeatState]>,
    pub trajectories: Option<&'a [Trajectory]>,
    /// Goal label per trajectory, for the goals layer.
    pub goal_labels: Option<&'a [String]>,
}

impl<'a> RenderInput<'a> {
    pub fn map(map: &'a WorldMap) -> Self {
        Self {
            map,
            fields: None,
            heat: None,
            trajectories: None,
            goal_labels: None,
        }
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal runs `(row, col_start, len)` of cells satisfying `keep`.
fn runs(width: usize, height: usize, keep: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for r in 0..height {
        let mut c = 0;
        while c < width {
            if keep(c, r) {
                let start = c;
                while c < width && keep(c, r) {
                    c += 1;
                }
                out.push((r, start, c - start));
            } else {
                c += 1;
            }
        }
    }
    out
}

pub fn render_svg(input: &RenderInput<'_>, spec: &RenderSpec) -> Result<String, RenderError> {
    spec.validate()?;
    let map = input.map;
    let tf = CanvasTransform::new(map, spec.width_px);
    let (hx, hy) = map.cell_size();
    let cell_w = hx * tf.scale;
    let cell_h = hy * tf.scale;
    let color = |i: usize| spec.colors[i % spec.colors.len()].as_str();
    let cell_rect = |out: &mut String, row: usize, col: usize, len: usize, attrs: &str| {
        let (x, y) = tf.to_canvas(&Point::new(col as f64 * hx, (row + 1) as f64 * hy));
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" {attrs}/>"#,
            f6(x),
            f6(y),
            f6(len as f64 * cell_w),
            f6(cell_h)
        );
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = f6(spec.width_px),
        h = f6(tf.height_px)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(map.name()));

    for layer in &spec.layers {
        let _ = writeln!(out, r#"<g id="{}">"#, layer.name());
        match *layer {
            Layer::Occupancy => {
                let _ = writeln!(
                    out,
                    r##"<rect x="0.000000" y="0.000000" width="{}" height="{}" fill="#ffffff"/>"##,
                    f6(spec.width_px),
                    f6(tf.height_px)
                );
                for (r, c, len) in runs(map.width(), map.height(), |c, r| map.occupancy()[r * map.width() + c]) {
                    cell_rect(&mut out, r, c, len, r##"fill="#404040""##);
                }
            }
            Layer::Regions => {
                for region in map.regions() {
                    draw_region(&mut out, map, region, &cell_rect, "#ffd24d", 0.5);
                    let (x, y) = tf.to_canvas(&region.centroid(map));
                    let _ = writeln!(
                        out,
                        r#"<text x="{}" y="{}" font-size="{}" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                        f6(x),
                        f6(y),
                        f6(spec.width_px / 40.0),
                        escape(&region.label)
                    );
                }
            }
            Layer::Heat(t) => {
                let heat = input.heat.ok_or_else(|| RenderError::MissingLayer(layer.name()))?;
                if !(1..=heat.len()).contains(&t) {
                    return Err(RenderError::Level {
                        layer: layer.name(),
                        t,
                        available: heat.len(),
                    });
                }
                let state = &heat[t - 1];
                let peak = state.peak();
                if peak > 0.0 {
                    for (i, &u) in state.u.iter().enumerate() {
                        // opacity on a log scale over twelve decades
                        let level = ((u / peak).max(1e-12).log10() + 12.0) / 12.0;
                        if level <= 0.0 {
                            continue;
                        }
                        let cell = map.cell_at(i);
                        cell_rect(
                            &mut out,
                            cell.row,
                            cell.col,
                            1,
                            &format!(r##"fill="#d7301f" fill-opacity="{}""##, f6(level * 0.8)),
                        );
                    }
                }
            }
            Layer::FieldArrows(t) => {
                let fields = input.fields.ok_or_else(|| RenderError::MissingLayer(layer.name()))?;
                if !(1..=fields.len()).contains(&t) {
                    return Err(RenderError::Level {
                        layer: layer.name(),
                        t,
                        available: fields.len(),
                    });
                }
                let field = fields.level(t);
                let length = 0.8 * spec.stride as f64 * hx.min(hy);
                for r in (0..map.height()).step_by(spec.stride) {
                    for c in (0..map.width()).step_by(spec.stride) {
                        let cell = crate::gridmap::Cell::new(c, r);
                        let v = field.vector_at(cell);
                        let norm = v.norm();
                        if map.is_obstacle(cell) || !(norm > 0.0) {
                            continue;
                        }
                        let a = map.cell_center(cell);
                        let b = a + v * (length / norm);
                        let (x1, y1) = tf.to_canvas(&a);
                        let (x2, y2) = tf.to_canvas(&b);
                        let _ = writeln!(
                            out,
                            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#2b5797" stroke-width="1"/>"##,
                            f6(x1),
                            f6(y1),
                            f6(x2),
                            f6(y2)
                        );
                    }
                }
            }
            Layer::Trajectories => {
                let trajs = input.trajectories.ok_or_else(|| RenderError::MissingLayer(layer.name()))?;
                for (i, traj) in trajs.iter().enumerate() {
                    let points: Vec<String> = traj
                        .waypoints
                        .iter()
                        .map(|p| {
                            let (x, y) = tf.to_canvas(p);
                            format!("{},{}", f6(x), f6(y))
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline data-robot="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                        escape(&traj.id),
                        points.join(" "),
                        color(i)
                    );
                }
            }
            Layer::Starts => {
                let trajs = input.trajectories.ok_or_else(|| RenderError::MissingLayer(layer.name()))?;
                for (i, traj) in trajs.iter().enumerate() {
                    let (x, y) = tf.to_canvas(&traj.start());
                    let _ = writeln!(
                        out,
                        r##"<circle data-robot="{}" cx="{}" cy="{}" r="{}" fill="{}" stroke="#000000"/>"##,
                        escape(&traj.id),
                        f6(x),
                        f6(y),
                        f6(spec.width_px / 100.0),
                        color(i)
                    );
                }
            }
            Layer::Goals => {
                let labels = input.goal_labels.ok_or_else(|| RenderError::MissingLayer(layer.name()))?;
                for (i, label) in labels.iter().enumerate() {
                    for region in map.regions().iter().filter(|r| &r.label == label) {
                        draw_region(&mut out, map, region, &cell_rect, color(i), 0.25);
                    }
                }
            }
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

fn draw_region(
    out: &mut String,
    map: &WorldMap,
    region: &SemanticRegion,
    cell_rect: &impl Fn(&mut String, usize, usize, usize, &str),
    fill: &str,
    opacity: f64,
) {
    let attrs = format!(r#"fill="{fill}" fill-opacity="{}""#, f6(opacity));
    for (r, c, len) in runs(map.width(), map.height(), |c, r| {
        region.contains(crate::gridmap::Cell::new(c, r))
    }) {
        cell_rect(out, r, c, len, &attrs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_single_background() {
        let map = WorldMap::empty("e", 16, 16);
        let svg = render_svg(&RenderInput::map(&map), &RenderSpec::with_layers(vec![Layer::Occupancy])).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn missing_data_names_layer() {
        let map = WorldMap::empty("e", 16, 16);
        let err = render_svg(&RenderInput::map(&map), &RenderSpec::with_layers(vec![Layer::FieldArrows(3)]))
            .unwrap_err();
        assert_eq!(err, RenderError::MissingLayer("field3".into()));
    }

    #[test]
    fn transform_round_trip() {
        let map = WorldMap::empty("e", 16, 16);
        let tf = CanvasTransform::new(&map, 512.0);
        let p = Point::new(0.3, 1.7);
        let (x, y) = tf.to_canvas(&p);
        assert!((tf.to_world(x, y) - p).norm() < 1e-12);
        assert_eq!(tf.to_canvas(&Point::new(0.0, 0.0)), (0.0, 512.0));
    }

    #[test]
    fn layer_parsing() {
        assert_eq!("field:3".parse::<Layer>().unwrap(), Layer::FieldArrows(3));
        assert_eq!("heat:20".parse::<Layer>().unwrap(), Layer::Heat(20));
        assert!("bogus".parse::<Layer>().is_err());
        assert!("field:x".parse::<Layer>().is_err());
        let spec = RenderSpec { stride: 0, ..RenderSpec::default() };
        assert!(spec.validate().is_err());
    }
}
