//! Per-scene online mapping loop and the evaluation glue around it.
//!
//! Every frame: score-gate the detections, associate them with the tracking
//! buffer, sample history from the global map around the patch, blend the
//! detections with that history, and merge them into the map.

use std::collections::BTreeMap;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{associate_frame, AssociationConfig, AssociationError, GeometricMetric, MatchRecord, TrackBuffer};
use crate::curvefit::{SmoothingFitParams, SweepRow};
use crate::geometry::{FrameDirection, Point2};
use crate::instance::{MapClass, MapInstance};
use crate::mapstore::{fuse_with_history, merge_instance, sample_history, GlobalMap, MapStoreError, MergeKind};
use crate::metrics::{clear_mot_counts, global_map_cd, instance_ap, EvalConfig, EvalReport, MotCounts, MotReport};
use crate::synth::Scene;

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame ordering: {0}")]
    Ordering(AssociationError),
    #[error(transparent)]
    Association(AssociationError),
    #[error("frame {frame}: {source}")]
    Merge { frame: u64, source: MapStoreError },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("class `{0}` is not in the scene's class list")]
    ClassVocabulary(MapClass),
    #[error("trace has {trace} frames but the scene has {scene}")]
    FrameCount { trace: usize, scene: usize },
}

impl From<AssociationError> for PipelineError {
    fn from(e: AssociationError) -> Self {
        match e {
            AssociationError::OutOfOrder { .. } => PipelineError::Ordering(e),
            other => PipelineError::Association(other),
        }
    }
}

/// Every tunable of the mapping loop, flat so it maps onto `key = value` files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau: f64,
    pub theta: f64,
    pub w_geo: f64,
    pub w_feat: f64,
    pub max_age: u32,
    pub metric: GeometricMetric,
    /// Densification before affinity distances, meters; 0 disables.
    pub affinity_densify: f64,
    /// Detections scoring below this are discarded before association.
    pub min_score: f64,
    pub expand: f64,
    pub n_sample: usize,
    pub fusion: bool,
    pub fusion_radius: f64,
    pub fusion_weight: f64,
    pub s: f64,
    pub degree: usize,
    pub out_spacing: f64,
    pub min_points: usize,
    pub control_spacing: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let a = AssociationConfig::default();
        let f = SmoothingFitParams::default();
        Self {
            tau: a.tau,
            theta: a.theta,
            w_geo: a.w_geo,
            w_feat: a.w_feat,
            max_age: a.max_age,
            metric: a.metric,
            affinity_densify: a.densify,
            min_score: 0.5,
            expand: 20.0,
            n_sample: 20,
            fusion: true,
            fusion_radius: 1.0,
            fusion_weight: 0.5,
            s: f.s,
            degree: f.degree,
            out_spacing: f.out_spacing,
            min_points: f.min_points,
            control_spacing: f.control_spacing,
        }
    }
}

impl PipelineConfig {
    pub fn association(&self) -> AssociationConfig {
        AssociationConfig {
            tau: self.tau,
            theta: self.theta,
            w_geo: self.w_geo,
            w_feat: self.w_feat,
            max_age: self.max_age,
            metric: self.metric,
            densify: self.affinity_densify,
        }
    }

    pub fn fit(&self) -> SmoothingFitParams {
        SmoothingFitParams {
            s: self.s,
            degree: self.degree,
            out_spacing: self.out_spacing,
            min_points: self.min_points,
            control_spacing: self.control_spacing,
            n_control: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.association().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.fit().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.expand >= 0.0) || self.n_sample < 2 {
            return Err(PipelineError::Config("expand must be >= 0 and n_sample >= 2".into()));
        }
        if !(self.fusion_radius >= 0.0) || !(0.0..=1.0).contains(&self.fusion_weight) {
            return Err(PipelineError::Config("fusion_radius must be >= 0 and fusion_weight in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceInstance {
    pub id: u64,
    pub class: MapClass,
    pub score: f64,
    /// Ego frame.
    pub points: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub t: u64,
    /// Detections that passed the score gate.
    pub detections: usize,
    pub matches: Vec<MatchRecord>,
    pub issued_ids: Vec<u64>,
    pub merges: Vec<MergeKind>,
    pub instances: Vec<TraceInstance>,
}

/// Per-frame record of a run, with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub format_version: u32,
    pub scene_id: String,
    pub config: PipelineConfig,
    pub frames: Vec<TraceFrame>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Trace, String> {
        let mut de = serde_json::Deserializer::from_str(text);
        let trace: Trace = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            format!("trace line {}, column {}, at `{path}`: {inner}", inner.line(), inner.column())
        })?;
        if trace.format_version != TRACE_FORMAT_VERSION {
            return Err(format!("trace: unsupported format_version {}", trace.format_version));
        }
        Ok(trace)
    }

    /// Tracked instances per frame, ego frame.
    pub fn predictions(&self) -> Result<Vec<Vec<MapInstance>>, String> {
        self.frames
            .iter()
            .map(|f| {
                f.instances
                    .iter()
                    .map(|i| {
                        MapInstance::new(i.class, i.points.clone())
                            .map(|m| m.with_id(i.id).with_score(i.score))
                            .map_err(|e| format!("trace frame {}: {e}", f.t))
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub map: GlobalMap,
    pub trace: Trace,
}

/// Runs the online mapping loop over every frame of `scene`.
pub fn run_scene(scene: &Scene, config: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let assoc_cfg = config.association();
    let fit = config.fit();
    let mut buffer = TrackBuffer::new();
    let mut map = GlobalMap::new(scene.scene_id.clone());
    let mut frames = Vec::with_capacity(scene.frames.len());

    for frame in &scene.frames {
        let pose = frame.ego_pose;
        let dets: Vec<MapInstance> = frame.detections.iter().filter(|d| d.score >= config.min_score).cloned().collect();
        let n_dets = dets.len();
        let assoc = associate_frame(buffer, dets, &pose, frame.t, &assoc_cfg)?;
        buffer = assoc.buffer;

        let ids: Vec<u64> = assoc.detections.iter().map(|d| d.id.expect("ids allocated")).collect();
        let patch = scene.range.rect(pose);
        let history = sample_history(&map, &patch, config.expand, &ids, config.n_sample);

        let mut merges = Vec::with_capacity(ids.len());
        let mut instances = Vec::with_capacity(ids.len());
        for (det, hist) in assoc.detections.iter().zip(&history.samples) {
            let mut world = det.transformed(&pose, FrameDirection::EgoToWorld);
            if config.fusion {
                if let Some(h) = hist {
                    world = fuse_with_history(&world, h, config.fusion_radius, config.fusion_weight);
                }
            }
            let kind = merge_instance(&mut map, &world, &fit, Some(frame.t))
                .map_err(|source| PipelineError::Merge { frame: frame.t, source })?;
            merges.push(kind);
            let ego = world.transformed(&pose, FrameDirection::WorldToEgo);
            instances.push(TraceInstance {
                id: ego.id.expect("ids allocated"),
                class: ego.class,
                score: ego.score,
                points: ego.points().to_vec(),
            });
        }
        debug!(
            "frame {}: {} detections, {} matched, {} new ids, map size {}",
            frame.t,
            n_dets,
            assoc.matches.len(),
            assoc.issued_ids.len(),
            map.len()
        );
        frames.push(TraceFrame {
            t: frame.t,
            detections: n_dets,
            matches: assoc.matches,
            issued_ids: assoc.issued_ids,
            merges,
            instances,
        });
    }
    info!("scene {}: {} frames, {} map instances", scene.scene_id, frames.len(), map.len());
    let trace = Trace { format_version: TRACE_FORMAT_VERSION, scene_id: scene.scene_id.clone(), config: *config, frames };
    Ok(RunOutput { map, trace })
}

/// Merges the scene's clipped ground truth frame by frame under the true IDs.
pub fn reconstruct_from_clips(scene: &Scene, fit: &SmoothingFitParams) -> Result<GlobalMap, PipelineError> {
    let mut map = GlobalMap::new(scene.scene_id.clone());
    for frame in &scene.frames {
        for clip in &frame.gt_local {
            let world = clip.transformed(&frame.ego_pose, FrameDirection::EgoToWorld);
            merge_instance(&mut map, &world, fit, Some(frame.t)).map_err(|source| PipelineError::Merge { frame: frame.t, source })?;
        }
    }
    Ok(map)
}

/// What a run produced for one scene; either part may be absent.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub scene: &'a Scene,
    pub map: Option<&'a GlobalMap>,
    pub trace: Option<&'a Trace>,
}

fn check_vocabulary<'a>(scene: &Scene, classes: impl Iterator<Item = &'a MapClass>) -> Result<(), PipelineError> {
    for c in classes {
        if !scene.classes.contains(c) {
            return Err(PipelineError::ClassVocabulary(*c));
        }
    }
    Ok(())
}

fn trace_predictions(input: &EvalInput<'_>) -> Result<Option<Vec<Vec<MapInstance>>>, PipelineError> {
    let Some(trace) = input.trace else { return Ok(None) };
    if trace.frames.len() != input.scene.frames.len() {
        return Err(PipelineError::FrameCount { trace: trace.frames.len(), scene: input.scene.frames.len() });
    }
    check_vocabulary(input.scene, trace.frames.iter().flat_map(|f| f.instances.iter().map(|i| &i.class)))?;
    trace.predictions().map(Some).map_err(PipelineError::Config)
}

/// Evaluates one or more scenes. AP pools all frames of all scenes, MOT sums
/// counts per class across scenes, and per-class CD is averaged over the
/// scenes whose ground truth has that class.
pub fn evaluate(inputs: &[EvalInput<'_>], config: &EvalConfig) -> Result<EvalReport, PipelineError> {
    let mut all_pred = Vec::new();
    let mut all_gt = Vec::new();
    let mut mot: BTreeMap<MapClass, MotCounts> = BTreeMap::new();
    let mut any_trace = false;
    let mut cd_sum: BTreeMap<MapClass, (f64, usize)> = BTreeMap::new();
    let mut any_map = false;

    for input in inputs {
        let gt_frames = input.scene.gt_frames();
        if let Some(pred) = trace_predictions(input)? {
            any_trace = true;
            for (class, c) in clear_mot_counts(&pred, &gt_frames, config) {
                mot.entry(class).or_default().add(&c);
            }
            all_pred.extend(pred);
            all_gt.extend(gt_frames);
        }
        if let Some(map) = input.map {
            check_vocabulary(input.scene, map.instances().map(|i| &i.class))?;
            any_map = true;
            for (class, cd) in global_map_cd(map, &input.scene.gt, config.densify).per_class {
                let slot = cd_sum.entry(class).or_default();
                slot.0 += cd;
                slot.1 += 1;
            }
        }
    }

    let ap = any_trace.then(|| instance_ap(&all_pred, &all_gt, config));
    let mot = any_trace.then(|| MotReport::from_counts(config.mot_threshold, mot));
    let cd = any_map.then(|| {
        let per_class: BTreeMap<MapClass, f64> = cd_sum.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect();
        let mcd = if per_class.is_empty() { 0.0 } else { per_class.values().sum::<f64>() / per_class.len() as f64 };
        crate::metrics::CdReport { per_class, mcd }
    });
    Ok(EvalReport { config: config.clone(), ap, mot, cd })
}

/// Runs the whole scene once per `s` and reports the pooled map CD of the
/// polyline classes against the scene's ground truth.
pub fn sweep_scene(scene: &Scene, grid: &[f64], config: &PipelineConfig, densify: f64) -> Result<Vec<SweepRow>, PipelineError> {
    grid.iter()
        .map(|&s| {
            let cfg = PipelineConfig { s, ..*config };
            let out = run_scene(scene, &cfg)?;
            let cd = global_map_cd(&out.map, &scene.gt, densify);
            let error = cd.per_class.into_iter().filter(|(c, _)| c.is_polyline()).collect();
            Ok(SweepRow { s, error })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_scene, Curvature, NoiseConfig, SceneConfig};

    fn zero_scene(curvature: Curvature) -> Scene {
        build_scene(&SceneConfig { curvature, noise: NoiseConfig::zero(), frames: 12, seed: 3, ..SceneConfig::default() })
            .unwrap()
    }

    #[test]
    fn zero_noise_run_is_exact() {
        let scene = zero_scene(Curvature::Straight);
        let out = run_scene(&scene, &PipelineConfig::default()).unwrap();
        let report = evaluate(
            &[EvalInput { scene: &scene, map: Some(&out.map), trace: Some(&out.trace) }],
            &EvalConfig::default(),
        )
        .unwrap();
        assert!(report.cd.unwrap().mcd < 0.1);
        assert_eq!(report.ap.unwrap().map, 1.0);
        let mot = report.mot.unwrap();
        assert_eq!(mot.total.mota, 1.0);
        assert_eq!(mot.total.counts.id_switches, 0);
        let issued: usize = out.trace.frames.iter().map(|f| f.issued_ids.len()).sum();
        let identities: std::collections::BTreeSet<u64> =
            scene.frames.iter().flat_map(|f| f.gt_local.iter().map(|g| g.id.unwrap())).collect();
        assert_eq!(issued, identities.len());
    }

    #[test]
    fn no_fusion_still_completes() {
        let scene = zero_scene(Curvature::Arc);
        let out = run_scene(&scene, &PipelineConfig { fusion: false, ..PipelineConfig::default() }).unwrap();
        assert_eq!(out.trace.frames.len(), scene.frames.len());
        assert!(!out.map.is_empty());
    }

    #[test]
    fn empty_scene_gives_empty_map() {
        let mut scene = zero_scene(Curvature::Straight);
        scene.frames.clear();
        let out = run_scene(&scene, &PipelineConfig::default()).unwrap();
        assert!(out.map.is_empty());
        assert!(out.trace.frames.is_empty());
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let mut scene = zero_scene(Curvature::Straight);
        scene.frames.swap(2, 3);
        assert!(matches!(run_scene(&scene, &PipelineConfig::default()), Err(PipelineError::Ordering(_))));
    }

    #[test]
    fn trace_round_trip() {
        let scene = zero_scene(Curvature::SCurve);
        let out = run_scene(&scene, &PipelineConfig::default()).unwrap();
        let text = out.trace.to_json();
        let back = Trace::from_json(&text).unwrap();
        assert_eq!(back, out.trace);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn clip_reconstruction_matches_gt() {
        let scene = zero_scene(Curvature::Arc);
        let map = reconstruct_from_clips(&scene, &SmoothingFitParams::default()).unwrap();
        let cd = global_map_cd(&map, &scene.gt, 0.5);
        assert!(cd.mcd < 0.1, "{cd:?}");
    }

    #[test]
    fn vocabulary_mismatch_is_an_error() {
        let mut scene = zero_scene(Curvature::Straight);
        let out = run_scene(&scene, &PipelineConfig::default()).unwrap();
        scene.classes = vec![MapClass::Divider];
        let err = evaluate(&[EvalInput { scene: &scene, map: Some(&out.map), trace: None }], &EvalConfig::default());
        assert!(matches!(err, Err(PipelineError::ClassVocabulary(_))));
    }
}
