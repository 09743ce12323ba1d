//! JSON scene files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Frame, PerceptionRange, Scene, SceneConfig};
use crate::geometry::{Point2, Pose2};
use crate::instance::{Embedding, MapClass, MapInstance};
use crate::mapstore::GlobalMap;

pub const SCENE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneFormatError {
    #[error("scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene file: unsupported format_version {found} (expected {SCENE_FORMAT_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("scene file frame {frame}: missing field `{field}`")]
    MissingFrameField { frame: usize, field: &'static str },
    #[error("scene file line {line}, column {column}, at `{path}`: {message}")]
    Syntax { line: usize, column: usize, path: String, message: String },
    #[error("scene file at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtRecord {
    id: u64,
    class: MapClass,
    points: Vec<Point2>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetRecord {
    class: MapClass,
    score: f64,
    points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t: u64,
    ego_pose: Pose2,
    gt_local: Vec<GtRecord>,
    detections: Vec<DetRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtBlock {
    instances: Vec<GtRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    format_version: u32,
    scene_id: String,
    range: PerceptionRange,
    classes: Vec<MapClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<SceneConfig>,
    gt: GtBlock,
    frames: Vec<FrameRecord>,
}

fn gt_record(inst: &MapInstance) -> GtRecord {
    GtRecord { id: inst.id.unwrap_or_default(), class: inst.class, points: inst.points().to_vec() }
}

impl Scene {
    pub fn to_json(&self) -> String {
        let file = SceneFile {
            format_version: SCENE_FORMAT_VERSION,
            scene_id: self.scene_id.clone(),
            range: self.range,
            classes: self.classes.clone(),
            config: self.config,
            gt: GtBlock { instances: self.gt.instances().map(gt_record).collect() },
            frames: self
                .frames
                .iter()
                .map(|f| FrameRecord {
                    t: f.t,
                    ego_pose: f.ego_pose,
                    gt_local: f.gt_local.iter().map(gt_record).collect(),
                    detections: f
                        .detections
                        .iter()
                        .map(|d| DetRecord {
                            class: d.class,
                            score: d.score,
                            points: d.points().to_vec(),
                            embedding: d.embedding.as_ref().map(|e| e.values().to_vec()),
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string(&file).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneFormatError> {
        let value: Value = serde_json::from_str(text).map_err(|e| syntax(e, String::new()))?;
        match value.get("format_version") {
            Some(v) if v.as_u64() == Some(u64::from(SCENE_FORMAT_VERSION)) => {}
            Some(v) => return Err(SceneFormatError::UnsupportedVersion { found: v.to_string() }),
            None => return Err(SceneFormatError::UnsupportedVersion { found: "<missing>".into() }),
        }
        if let Some(frames) = value.get("frames").and_then(Value::as_array) {
            for (i, f) in frames.iter().enumerate() {
                if f.get("ego_pose").is_none() {
                    return Err(SceneFormatError::MissingFrameField { frame: i, field: "ego_pose" });
                }
            }
        }
        let mut de = serde_json::Deserializer::from_str(text);
        let file: SceneFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            syntax(e.into_inner(), path)
        })?;

        let instance = |path: String, class: MapClass, points: Vec<Point2>| {
            MapInstance::new(class, points).map_err(|e| SceneFormatError::Invalid { path, message: e.to_string() })
        };
        let mut gt = GlobalMap::new(file.scene_id.clone());
        for (k, r) in file.gt.instances.into_iter().enumerate() {
            if gt.get(r.id).is_some() {
                return Err(SceneFormatError::Invalid {
                    path: format!("gt.instances[{k}]"),
                    message: format!("duplicate id {}", r.id),
                });
            }
            gt.insert(r.id, instance(format!("gt.instances[{k}]"), r.class, r.points)?, None);
        }
        let mut frames = Vec::with_capacity(file.frames.len());
        for (i, f) in file.frames.into_iter().enumerate() {
            let gt_local = f
                .gt_local
                .into_iter()
                .enumerate()
                .map(|(k, r)| Ok(instance(format!("frames[{i}].gt_local[{k}]"), r.class, r.points)?.with_id(r.id)))
                .collect::<Result<Vec<_>, SceneFormatError>>()?;
            let detections = f
                .detections
                .into_iter()
                .enumerate()
                .map(|(k, d)| {
                    let path = format!("frames[{i}].detections[{k}]");
                    let mut inst = instance(path.clone(), d.class, d.points)?.with_score(d.score);
                    if let Some(e) = d.embedding {
                        let e = Embedding::new(e)
                            .map_err(|err| SceneFormatError::Invalid { path, message: err.to_string() })?;
                        inst = inst.with_embedding(e);
                    }
                    Ok(inst)
                })
                .collect::<Result<Vec<_>, SceneFormatError>>()?;
            frames.push(Frame { t: f.t, ego_pose: f.ego_pose, gt_local, detections });
        }
        Ok(Scene { scene_id: file.scene_id, range: file.range, classes: file.classes, config: file.config, gt, frames })
    }
}

fn syntax(e: serde_json::Error, path: String) -> SceneFormatError {
    SceneFormatError::Syntax { line: e.line(), column: e.column(), path, message: e.to_string() }
}

pub fn write_scene(scene: &Scene, path: &Path) -> Result<(), SceneFormatError> {
    fs::write(path, scene.to_json())?;
    Ok(())
}

pub fn read_scene(path: &Path) -> Result<Scene, SceneFormatError> {
    Scene::from_json(&fs::read_to_string(path)?)
}
