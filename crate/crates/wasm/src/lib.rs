//! Browser bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust twin (`*_impl`) returning `Result<_, String>`
//! so the logic can be tested natively.

use ic_mapper::curvefit::{fit_smoothing_spline, SmoothingFitParams};
use ic_mapper::geometry::Point2;
use ic_mapper::metrics::EvalConfig;
use ic_mapper::pipeline::{evaluate, run_scene, EvalInput, PipelineConfig};
use ic_mapper::polygon::{union_rings, UnionResult};
use ic_mapper::render::{render_maps, Layer, LayerStyle};
use ic_mapper::synth::{build_scene, Curvature, NoiseConfig, SceneConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn to_points(flat: &[f64]) -> Result<Vec<Point2>, String> {
    if !flat.len().is_multiple_of(2) {
        return Err(format!("expected x,y pairs, got {} numbers", flat.len()));
    }
    Ok(flat.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect())
}

fn flatten(points: &[Point2]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn parse_curvature(name: &str) -> Result<Curvature, String> {
    match name {
        "straight" => Ok(Curvature::Straight),
        "arc" => Ok(Curvature::Arc),
        "s_curve" | "s-curve" => Ok(Curvature::SCurve),
        other => Err(format!("unknown curvature {other:?}")),
    }
}

/// Synthesizes a scene, maps it, and returns `{svg, map_size, mcd, map_ap, mota, id_switches}` as JSON.
pub fn run_demo_impl(curvature: &str, seed: u64, noise_scale: f64, max_age: u32, fusion: bool) -> Result<String, String> {
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(format!("noise scale must be >= 0, got {noise_scale}"));
    }
    let base = NoiseConfig::default();
    let noise = NoiseConfig {
        jitter: base.jitter * noise_scale,
        dropout: (base.dropout * noise_scale).min(0.9),
        fp_rate: base.fp_rate * noise_scale,
        split: base.split * noise_scale,
        ..base
    };
    let config = SceneConfig { curvature: parse_curvature(curvature)?, seed, noise, ..SceneConfig::default() };
    let scene = build_scene(&config).map_err(|e| e.to_string())?;
    let pipeline = PipelineConfig { max_age, fusion, ..PipelineConfig::default() };
    let out = run_scene(&scene, &pipeline).map_err(|e| e.to_string())?;
    let input = EvalInput { scene: &scene, map: Some(&out.map), trace: Some(&out.trace) };
    let report = evaluate(&[input], &EvalConfig::default()).map_err(|e| e.to_string())?;
    let svg = render_maps(&[
        Layer { name: "gt", map: &scene.gt, style: LayerStyle::Reference },
        Layer { name: "pred", map: &out.map, style: LayerStyle::Solid },
    ]);
    let mot = report.mot.as_ref().map(|m| &m.total);
    Ok(json!({
        "svg": svg,
        "map_size": out.map.len(),
        "mcd": report.cd.as_ref().map(|c| c.mcd),
        "map_ap": report.ap.as_ref().map(|a| a.map),
        "mota": mot.map(|m| m.mota),
        "id_switches": mot.map(|m| m.counts.id_switches),
    })
    .to_string())
}

/// Smoothing-spline fit of a flat `[x0, y0, x1, y1, ...]` array.
pub fn fit_demo_impl(flat: &[f64], s: f64) -> Result<Vec<f64>, String> {
    let params = SmoothingFitParams::default().with_s(s);
    let fitted = fit_smoothing_spline(&to_points(flat)?, &params).map_err(|e| e.to_string())?;
    Ok(flatten(fitted.points()))
}

/// Union of two flat rings as `{merged, ring, area}` JSON; `ring` is empty
/// when the polygons do not overlap.
pub fn union_demo_impl(a: &[f64], b: &[f64]) -> Result<String, String> {
    let out = match union_rings(&to_points(a)?, &to_points(b)?).map_err(|e| e.to_string())? {
        UnionResult::Merged(p) => json!({ "merged": true, "ring": flatten(p.ring()), "area": p.area() }),
        UnionResult::Disjoint => json!({ "merged": false, "ring": [], "area": 0.0 }),
    };
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn run_demo(curvature: &str, seed: u32, noise_scale: f64, max_age: u32, fusion: bool) -> Result<String, JsError> {
    run_demo_impl(curvature, seed as u64, noise_scale, max_age, fusion).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_demo(flat: &[f64], s: f64) -> Result<Vec<f64>, JsError> {
    fit_demo_impl(flat, s).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn union_demo(a: &[f64], b: &[f64]) -> Result<String, JsError> {
    union_demo_impl(a, b).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn fit_returns_pairs_on_the_input_line() {
        let flat: Vec<f64> = (0..30).flat_map(|i| [i as f64, 2.0]).collect();
        let out = fit_demo_impl(&flat, 0.5).unwrap();
        assert_eq!(out.len() % 2, 0);
        assert!(out.len() >= 40);
        assert!(out.chunks(2).all(|c| (c[1] - 2.0).abs() < 1e-6));
    }

    #[test]
    fn fit_rejects_odd_input() {
        assert!(fit_demo_impl(&[0.0, 1.0, 2.0], 0.5).unwrap_err().contains("pairs"));
        assert!(fit_demo_impl(&[0.0, 0.0, 1.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn union_of_overlapping_squares() {
        let a = [0.0, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 2.0];
        let b = [1.0, 1.0, 3.0, 1.0, 3.0, 3.0, 1.0, 3.0];
        let v: Value = serde_json::from_str(&union_demo_impl(&a, &b).unwrap()).unwrap();
        assert_eq!(v["merged"], true);
        assert!((v["area"].as_f64().unwrap() - 7.0).abs() < 1e-9);
        assert_eq!(v["ring"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn union_of_far_squares_is_disjoint() {
        let a = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let b = [5.0, 5.0, 6.0, 5.0, 6.0, 6.0, 5.0, 6.0];
        let v: Value = serde_json::from_str(&union_demo_impl(&a, &b).unwrap()).unwrap();
        assert_eq!(v["merged"], false);
    }

    #[test]
    fn clean_run_scores_well() {
        let v: Value = serde_json::from_str(&run_demo_impl("arc", 3, 0.0, 0, true).unwrap()).unwrap();
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        assert!(v["map_size"].as_u64().unwrap() > 0);
        assert!(v["mcd"].as_f64().unwrap() < 0.5);
        assert_eq!(v["mota"].as_f64().unwrap(), 1.0);
    }

    #[test]
    fn run_rejects_bad_inputs() {
        assert!(run_demo_impl("zigzag", 0, 1.0, 0, true).unwrap_err().contains("zigzag"));
        assert!(run_demo_impl("arc", 0, f64::NAN, 0, true).is_err());
    }
}
