//! Deterministic SVG output: map layers and the smoothing-sweep line chart.

use std::fmt::Write as _;

use crate::curvefit::SweepRow;
use crate::geometry::Point2;
use crate::instance::{bounding_box, MapClass, Shape};
use crate::mapstore::GlobalMap;

const CANVAS: f64 = 1000.0;
const MARGIN: f64 = 20.0;

fn class_color(class: MapClass) -> &'static str {
    match class {
        MapClass::Divider => "#e69f00",
        MapClass::Boundary => "#009e73",
        MapClass::PedCrossing => "#0072b2",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerStyle {
    Solid,
    /// Thin dashed grey, for reference overlays.
    Reference,
}

/// A named set of instances drawn as one `<g>` group.
#[derive(Debug, Clone, Copy)]
pub struct Layer<'a> {
    pub name: &'a str,
    pub map: &'a GlobalMap,
    pub style: LayerStyle,
}

/// Draws the layers in order, sharing one world-to-canvas transform (north
/// up, equal axis scale). Empty input gives a blank canvas.
pub fn render_maps(layers: &[Layer<'_>]) -> String {
    let all: Vec<Point2> =
        layers.iter().flat_map(|l| l.map.instances().flat_map(|i| i.points().iter().copied())).collect();
    let (lo, hi) = if all.is_empty() { (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)) } else { bounding_box(&all) };
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let width = ((hi.x - lo.x) * scale + 2.0 * MARGIN).ceil();
    let height = ((hi.y - lo.y) * scale + 2.0 * MARGIN).ceil();
    let to_px = |p: Point2| ((p.x - lo.x) * scale + MARGIN, (hi.y - p.y) * scale + MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for layer in layers {
        let _ = writeln!(out, r#"<g id="{}" class="layer">"#, escape(layer.name));
        for inst in layer.map.instances() {
            let pts: Vec<String> = inst
                .shape
                .points()
                .iter()
                .map(|&p| {
                    let (x, y) = to_px(p);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let (stroke, width, dash) = match layer.style {
                LayerStyle::Solid => (class_color(inst.class), 2.0, ""),
                LayerStyle::Reference => ("#888888", 1.0, r#" stroke-dasharray="4 3""#),
            };
            let id = inst.id.map_or_else(String::new, |id| format!(r#" data-id="{id}""#));
            let tag = match inst.shape {
                Shape::Line(_) => "polyline",
                Shape::Area(_) => "polygon",
            };
            let _ = writeln!(
                out,
                r#"<{tag} class="{}"{id} points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
                inst.class,
                pts.join(" ")
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of fit error against `s`, one series per class plus the mean.
pub fn render_sweep_chart(rows: &[SweepRow]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let s_max = rows.iter().map(|r| r.s).fold(0.0f64, f64::max).max(1e-9);
    let e_max = rows
        .iter()
        .flat_map(|r| r.error.values().copied().chain(std::iter::once(r.mean_error())))
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let x = |s: f64| pad + s / s_max * (w - 2.0 * pad);
    let y = |e: f64| h - pad - e / e_max * (h - 2.0 * pad);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{pad},{top} V{bottom} H{right}" fill="none" stroke="black"/>"#,
        top = pad,
        bottom = h - pad,
        right = w - pad
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">s</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})">CD (m), max {e_max:.4}</text>"#,
        h / 2.0,
        h / 2.0
    );
    let mut series: Vec<(&str, &str, Vec<(f64, f64)>)> = Vec::new();
    for class in [MapClass::Divider, MapClass::Boundary] {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.error.get(&class).map(|e| (r.s, *e))).collect();
        series.push((class.as_str(), class_color(class), pts));
    }
    series.push(("mean", "#000000", rows.iter().map(|r| (r.s, r.mean_error())).filter(|p| p.1.is_finite()).collect()));
    for (name, color, pts) in series {
        if pts.is_empty() {
            continue;
        }
        let coords: Vec<String> = pts.iter().map(|&(s, e)| format!("{:.2},{:.2}", x(s), y(e))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="{name}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
