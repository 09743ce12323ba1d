//! The maintained global map: history sampling around the current patch,
//! nearest-neighbor fusion of detections with that history, class-dispatched
//! merging, and JSON persistence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvefit::{merge_polylines, CurveFitError, SmoothingFitParams};
use crate::geometry::{clip_polygon_to_rect, clip_polyline_to_rect, resample_points, Point2, Polyline, Rect};
use crate::instance::{MapClass, MapInstance, Shape};
use crate::polygon::{polygon_union, PolygonError, UnionResult};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MapStoreError {
    #[error("instance {id} is stored as {stored} but the detection is {incoming}")]
    ClassConflict { id: u64, stored: MapClass, incoming: MapClass },
    #[error("detection has no id")]
    MissingId,
    #[error(transparent)]
    CurveFit(#[from] CurveFitError),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
}

#[derive(Debug, Error)]
pub enum MapFormatError {
    #[error("map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("map file line {line}, column {column}, at `{path}`: {message}")]
    Syntax { line: usize, column: usize, path: String, message: String },
    #[error("map file: unsupported format_version {0}")]
    UnsupportedVersion(u64),
    #[error("map file instance {index} (id {id}): {message}")]
    Invalid { index: usize, id: u64, message: String },
    #[error("map file: duplicate id {0}")]
    DuplicateId(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEntry {
    pub instance: MapInstance,
    pub last_update: Option<u64>,
}

/// World-frame instances keyed by ID.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalMap {
    pub scene_id: String,
    entries: BTreeMap<u64, MapEntry>,
}

impl GlobalMap {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self { scene_id: scene_id.into(), entries: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&MapInstance> {
        self.entries.get(&id).map(|e| &e.instance)
    }

    pub fn entry(&self, id: u64) -> Option<&MapEntry> {
        self.entries.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    /// Instances in ascending ID order.
    pub fn instances(&self) -> impl Iterator<Item = &MapInstance> {
        self.entries.values().map(|e| &e.instance)
    }

    /// Inserts or replaces; the stored copy takes `id` and drops score and embedding.
    pub fn insert(&mut self, id: u64, instance: MapInstance, frame: Option<u64>) {
        let instance = MapInstance { id: Some(id), score: 1.0, embedding: None, ..instance };
        self.entries.insert(id, MapEntry { instance, last_update: frame });
    }

    pub fn remove(&mut self, id: u64) -> Option<MapInstance> {
        self.entries.remove(&id).map(|e| e.instance)
    }

    /// Instances of one class.
    pub fn of_class(&self, class: MapClass) -> impl Iterator<Item = &MapInstance> {
        self.instances().filter(move |i| i.class == class)
    }
}

/// Evenly spaced world-frame history points per requested ID; `None` where
/// the ID is unknown or its instance misses the expanded patch.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledHistory {
    pub samples: Vec<Option<Vec<Point2>>>,
}

/// Expands `patch` by `expand` on every side, intersects each requested
/// instance with it, and resamples the longest piece to `n_sample` points.
/// Polygons are sampled along the boundary of their clipped ring.
pub fn sample_history(map: &GlobalMap, patch: &Rect, expand: f64, ids: &[u64], n_sample: usize) -> SampledHistory {
    assert!(expand >= 0.0 && n_sample >= 2, "expand >= 0 and n_sample >= 2");
    let area = patch.expanded(expand);
    let samples = ids
        .iter()
        .map(|&id| {
            let inst = map.get(id)?;
            match &inst.shape {
                Shape::Line(line) => {
                    let pieces = clip_polyline_to_rect(line, &area);
                    let longest = pieces.iter().max_by(|a, b| a.length().total_cmp(&b.length()))?;
                    Some(resample_points(longest.points(), n_sample))
                }
                Shape::Area(poly) => {
                    let pieces = clip_polygon_to_rect(poly, &area);
                    let largest = pieces.iter().max_by(|a, b| a.area().total_cmp(&b.area()))?;
                    let mut ring = resample_points(&largest.closed_path(), n_sample + 1);
                    ring.pop();
                    Some(ring)
                }
            }
        })
        .collect();
    SampledHistory { samples }
}

/// Moves every detected point with a history point within `radius` to
/// `(1 − weight)·p + weight·h` for its nearest history point `h`. Polygons are
/// returned unchanged.
pub fn fuse_with_history(det: &MapInstance, hist: &[Point2], radius: f64, weight: f64) -> MapInstance {
    let Shape::Line(line) = &det.shape else {
        return det.clone();
    };
    if hist.is_empty() || weight == 0.0 {
        return det.clone();
    }
    let r2 = radius * radius;
    let moved: Vec<Point2> = line
        .points()
        .iter()
        .map(|&p| {
            let nearest = hist
                .iter()
                .map(|&h| (p.dist_sq(h), h))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .filter(|(d, _)| *d <= r2);
            match nearest {
                Some((_, h)) => p * (1.0 - weight) + h * weight,
                None => p,
            }
        })
        .collect();
    match Polyline::new(moved) {
        Ok(l) => MapInstance { shape: Shape::Line(l), ..det.clone() },
        Err(_) => det.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeKind {
    Inserted,
    Fitted,
    United,
    /// Disjoint polygons under one ID: the detection replaced the stored shape.
    Replaced,
}

/// Merges a world-frame detection carrying an ID into the map.
pub fn merge_instance(
    map: &mut GlobalMap,
    det: &MapInstance,
    params: &SmoothingFitParams,
    frame: Option<u64>,
) -> Result<MergeKind, MapStoreError> {
    let id = det.id.ok_or(MapStoreError::MissingId)?;
    let Some(stored) = map.get(id) else {
        map.insert(id, det.clone(), frame);
        return Ok(MergeKind::Inserted);
    };
    if stored.class != det.class {
        return Err(MapStoreError::ClassConflict { id, stored: stored.class, incoming: det.class });
    }
    let (shape, kind) = match (&stored.shape, &det.shape) {
        (Shape::Line(g), Shape::Line(d)) => (Shape::Line(merge_polylines(g, d, params)?), MergeKind::Fitted),
        (Shape::Area(g), Shape::Area(d)) => match polygon_union(g, d)? {
            UnionResult::Merged(p) => (Shape::Area(p), MergeKind::United),
            UnionResult::Disjoint => {
                warn!("instance {id}: detected polygon is disjoint from the stored one, replacing it");
                (Shape::Area(d.clone()), MergeKind::Replaced)
            }
        },
        _ => unreachable!("class decides the shape kind"),
    };
    let merged = MapInstance::from_shape(det.class, shape);
    map.insert(id, merged, frame);
    Ok(kind)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRecord {
    id: u64,
    class: MapClass,
    points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    last_update: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    format_version: u32,
    scene_id: String,
    instances: Vec<MapRecord>,
}

impl GlobalMap {
    pub fn to_json(&self) -> String {
        let file = MapFile {
            format_version: MAP_FORMAT_VERSION,
            scene_id: self.scene_id.clone(),
            instances: self
                .entries
                .iter()
                .map(|(&id, e)| MapRecord {
                    id,
                    class: e.instance.class,
                    points: e.instance.points().to_vec(),
                    last_update: e.last_update,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("map serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MapFormatError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| syntax_error(e, String::new()))?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64);
        if let Some(v) = version {
            if v != u64::from(MAP_FORMAT_VERSION) {
                return Err(MapFormatError::UnsupportedVersion(v));
            }
        }
        let mut de = serde_json::Deserializer::from_str(text);
        let file: MapFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            syntax_error(e.into_inner(), path)
        })?;
        let mut map = GlobalMap::new(file.scene_id);
        for (index, rec) in file.instances.into_iter().enumerate() {
            if map.entries.contains_key(&rec.id) {
                return Err(MapFormatError::DuplicateId(rec.id));
            }
            let inst = MapInstance::new(rec.class, rec.points)
                .map_err(|e| MapFormatError::Invalid { index, id: rec.id, message: e.to_string() })?;
            map.insert(rec.id, inst, rec.last_update);
        }
        Ok(map)
    }
}

fn syntax_error(e: serde_json::Error, path: String) -> MapFormatError {
    MapFormatError::Syntax { line: e.line(), column: e.column(), path, message: e.to_string() }
}

pub fn save_map(map: &GlobalMap, path: &Path) -> Result<(), MapFormatError> {
    fs::write(path, map.to_json())?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<GlobalMap, MapFormatError> {
    GlobalMap::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chamfer_distance, densify, Pose2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(class: MapClass, pts: &[(f64, f64)]) -> MapInstance {
        MapInstance::new(class, pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn quad(x0: f64, y0: f64, x1: f64, y1: f64) -> MapInstance {
        line(MapClass::PedCrossing, &[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    fn patch() -> Rect {
        Rect::from_range(Pose2::identity(), 60.0, 30.0)
    }

    #[test]
    fn sampling_straight_boundary() {
        let mut map = GlobalMap::new("t");
        map.insert(1, line(MapClass::Boundary, &[(-200.0, 3.0), (200.0, 3.0)]), None);
        map.insert(2, line(MapClass::Boundary, &[(0.0, 100.0), (10.0, 100.0)]), None);
        let h = sample_history(&map, &patch(), 20.0, &[1, 2, 99], 20);
        let pts = h.samples[0].as_ref().unwrap();
        assert_eq!(pts.len(), 20);
        assert_eq!(pts[0], Point2::new(-50.0, 3.0));
        assert_eq!(pts[19], Point2::new(50.0, 3.0));
        for w in pts.windows(2) {
            assert!((w[1].x - w[0].x - 100.0 / 19.0).abs() < 1e-9);
            assert_eq!(w[0].y, 3.0);
        }
        assert!(h.samples[1].is_none());
        assert!(h.samples[2].is_none());
    }

    #[test]
    fn sampling_takes_longest_piece() {
        // a U dipping into the expanded patch twice, right leg longer
        let mut map = GlobalMap::new("t");
        map.insert(
            1,
            line(MapClass::Divider, &[(-45.0, 60.0), (-45.0, 30.0), (-40.0, 60.0), (40.0, 60.0), (40.0, 0.0), (45.0, 60.0)]),
            None,
        );
        let h = sample_history(&map, &patch(), 20.0, &[1], 5);
        let pts = h.samples[0].as_ref().unwrap();
        assert!(pts.iter().all(|p| p.x >= 40.0));
    }

    #[test]
    fn polygon_sampling_stays_on_boundary() {
        let mut map = GlobalMap::new("t");
        map.insert(7, quad(-2.0, -2.0, 2.0, 2.0), None);
        let h = sample_history(&map, &patch(), 20.0, &[7], 8);
        let pts = h.samples[0].as_ref().unwrap();
        assert_eq!(pts.len(), 8);
        for p in pts {
            assert!((p.x.abs() - 2.0).abs() < 1e-9 || (p.y.abs() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fusion_examples() {
        let det = line(MapClass::Divider, &[(0.0, 0.4), (5.0, 3.0)]);
        let hist = [Point2::new(0.0, 0.0)];
        assert_eq!(fuse_with_history(&det, &hist, 1.0, 0.0), det);
        let out = fuse_with_history(&det, &hist, 1.0, 0.5);
        assert!((out.points()[0].y - 0.2).abs() < 1e-15 && out.points()[0].x == 0.0);
        assert_eq!(out.points()[1], Point2::new(5.0, 3.0));

        let det = line(MapClass::Divider, &[(0.0, 0.3), (1.0, -0.2), (2.0, 0.1)]);
        let hist: Vec<Point2> = (0..3).map(|i| Point2::new(i as f64, 0.0)).collect();
        let out = fuse_with_history(&det, &hist, 1.0, 1.0);
        assert_eq!(out.points(), &hist[..]);
    }

    #[test]
    fn merge_dispatch() {
        let params = SmoothingFitParams::default();
        let mut map = GlobalMap::new("t");
        let a = line(MapClass::Divider, &[(0.0, 0.0), (30.0, 0.0)]).with_id(4);
        assert_eq!(merge_instance(&mut map, &a, &params, Some(0)).unwrap(), MergeKind::Inserted);
        assert_eq!(map.len(), 1);
        let b = line(MapClass::Divider, &[(20.0, 0.0), (50.0, 0.0)]).with_id(4);
        assert_eq!(merge_instance(&mut map, &b, &params, Some(1)).unwrap(), MergeKind::Fitted);
        let merged = map.get(4).unwrap().shape.as_polyline().unwrap().clone();
        assert!((merged.length() - 50.0).abs() <= 0.5);
        assert_eq!(map.entry(4).unwrap().last_update, Some(1));

        let bad = line(MapClass::Boundary, &[(0.0, 0.0), (1.0, 0.0)]).with_id(4);
        assert!(matches!(merge_instance(&mut map, &bad, &params, None), Err(MapStoreError::ClassConflict { id: 4, .. })));
        assert!(matches!(merge_instance(&mut map, &quad(0.0, 0.0, 1.0, 1.0), &params, None), Err(MapStoreError::MissingId)));
    }

    #[test]
    fn self_merge_and_idempotence() {
        let params = SmoothingFitParams::default();
        let pts: Vec<(f64, f64)> = (0..=40).map(|i| (i as f64, 3.0 * (i as f64 / 8.0).sin())).collect();
        let d = line(MapClass::Boundary, &pts).with_id(1);
        let mut map = GlobalMap::new("t");
        merge_instance(&mut map, &d, &params, None).unwrap();
        merge_instance(&mut map, &d, &params, None).unwrap();
        let once = map.get(1).unwrap().points().to_vec();
        let cd = chamfer_distance(&densify(&once, 0.1), &densify(d.points(), 0.1)).unwrap();
        assert!(cd < 0.05, "{cd}");
        merge_instance(&mut map, &d, &params, None).unwrap();
        let twice = map.get(1).unwrap().points().to_vec();
        let cd = chamfer_distance(&densify(&once, 0.1), &densify(&twice, 0.1)).unwrap();
        assert!(cd < 0.05, "{cd}");
    }

    #[test]
    fn polygon_merge_union_and_disjoint_replacement() {
        let params = SmoothingFitParams::default();
        let mut map = GlobalMap::new("t");
        merge_instance(&mut map, &quad(0.0, 0.0, 4.0, 3.0).with_id(2), &params, None).unwrap();
        merge_instance(&mut map, &quad(2.0, 0.0, 6.0, 3.0).with_id(2), &params, None).unwrap();
        assert!((map.get(2).unwrap().shape.as_polygon().unwrap().area() - 18.0).abs() < 1e-9);
        let far = quad(100.0, 0.0, 101.0, 1.0).with_id(2);
        assert_eq!(merge_instance(&mut map, &far, &params, None).unwrap(), MergeKind::Replaced);
        assert_eq!(map.get(2).unwrap().points(), far.points());
    }

    #[test]
    fn untouched_ids_are_stable() {
        let params = SmoothingFitParams::default();
        let mut map = GlobalMap::new("t");
        map.insert(1, line(MapClass::Divider, &[(0.0, 0.0), (10.0, 0.0)]), None);
        map.insert(2, line(MapClass::Divider, &[(0.0, 5.0), (10.0, 5.0)]), None);
        let before = map.get(2).unwrap().clone();
        merge_instance(&mut map, &line(MapClass::Divider, &[(5.0, 0.0), (20.0, 0.0)]).with_id(1), &params, None).unwrap();
        assert_eq!(map.get(2).unwrap(), &before);
        assert_eq!(map.ids().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn empty_map_round_trip() {
        let map = GlobalMap::new("empty");
        assert_eq!(GlobalMap::from_json(&map.to_json()).unwrap(), map);
    }

    #[test]
    fn random_map_round_trip_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut map = GlobalMap::new("rand");
        for id in 0..100u64 {
            let class = MapClass::ALL[rng.random_range(0..3)];
            let inst = if class == MapClass::PedCrossing {
                let (x, y) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
                let (w, h) = (rng.random_range(0.5..10.0), rng.random_range(0.5..10.0));
                quad(x, y, x + w, y + h)
            } else {
                let n = rng.random_range(2..30);
                let pts: Vec<(f64, f64)> =
                    (0..n).map(|i| (i as f64 + rng.random::<f64>() * 0.5, rng.random_range(-1e4..1e4))).collect();
                line(class, &pts)
            };
            map.insert(id * 3 + 1, inst, (id % 2 == 0).then_some(id));
        }
        let text = map.to_json();
        let back = GlobalMap::from_json(&text).unwrap();
        assert_eq!(back, map);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn unknown_class_is_reported() {
        let text = r#"{"format_version": 1, "scene_id": "x", "instances": [
            {"id": 1, "class": "divider", "points": [[0, 0], [1, 0]]},
            {"id": 2, "class": "lane_marking", "points": [[0, 0], [1, 0]]}
        ]}"#;
        let err = GlobalMap::from_json(text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, MapFormatError::Syntax { line: 3, .. }), "{msg}");
        assert!(msg.contains("lane_marking") && msg.contains("instances[1].class"), "{msg}");
    }

    #[test]
    fn other_format_errors() {
        assert!(matches!(
            GlobalMap::from_json(r#"{"format_version": 9, "scene_id": "x", "instances": []}"#),
            Err(MapFormatError::UnsupportedVersion(9))
        ));
        let dup = r#"{"format_version": 1, "scene_id": "x", "instances": [
            {"id": 1, "class": "divider", "points": [[0, 0], [1, 0]]},
            {"id": 1, "class": "divider", "points": [[0, 0], [1, 0]]}]}"#;
        assert!(matches!(GlobalMap::from_json(dup), Err(MapFormatError::DuplicateId(1))));
        let degenerate = r#"{"format_version": 1, "scene_id": "x", "instances": [
            {"id": 5, "class": "divider", "points": [[0, 0]]}]}"#;
        assert!(matches!(GlobalMap::from_json(degenerate), Err(MapFormatError::Invalid { index: 0, id: 5, .. })));
    }
}
