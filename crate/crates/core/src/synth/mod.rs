//! Synthetic single-corridor road scenes: ground-truth map, ego trajectory,
//! per-frame clipped ground truth and noisy detections with embeddings.

mod scene_io;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    clip_polygon_to_rect, clip_polyline_to_rect, path_length, resample_points, FrameDirection,
    Point2, Polygon, Polyline, Pose2, Rect, MIN_CLIP_LENGTH,
};
use crate::instance::{Embedding, MapClass, MapInstance, Shape};
use crate::mapstore::GlobalMap;

pub use scene_io::{read_scene, write_scene, SceneFormatError, SCENE_FORMAT_VERSION};

/// Clipped crossings smaller than this (m²) are dropped from a frame.
pub const MIN_CLIP_AREA: f64 = 1.0;
const CROSSING_DEPTH: f64 = 4.0;
const OBSERVED_STEP: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("infeasible scene: {0}")]
    InfeasibleScene(String),
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionRange {
    pub length: f64,
    pub width: f64,
}

impl PerceptionRange {
    pub const LARGE: PerceptionRange = PerceptionRange { length: 100.0, width: 50.0 };
    pub const SMALL: PerceptionRange = PerceptionRange { length: 60.0, width: 30.0 };

    pub fn rect(&self, pose: Pose2) -> Rect {
        Rect::from_range(pose, self.length, self.width)
    }
}

impl fmt::Display for PerceptionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.length, self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("range must look like LxW with positive numbers, e.g. 100x50 (got `{0}`)")]
pub struct RangeParseError(pub String);

impl FromStr for PerceptionRange {
    type Err = RangeParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || RangeParseError(s.to_string());
        let (l, w) = s.split_once(['x', 'X']).ok_or_else(err)?;
        let length: f64 = l.trim().parse().map_err(|_| err())?;
        let width: f64 = w.trim().parse().map_err(|_| err())?;
        if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
            return Err(err());
        }
        Ok(Self { length, width })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Straight,
    /// Constant left turn of `radius`.
    Arc,
    /// Left turn for the first half of the road, right turn for the second.
    SCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-coordinate Gaussian jitter, meters.
    pub jitter: f64,
    pub dropout: f64,
    /// Mean number of false positives per frame (Poisson).
    pub fp_rate: f64,
    pub split: f64,
    pub embedding_sigma: f64,
    pub tp_score_mean: f64,
    pub tp_score_std: f64,
    pub fp_score_mean: f64,
    pub fp_score_std: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            jitter: 0.1,
            dropout: 0.02,
            fp_rate: 0.2,
            split: 0.0,
            embedding_sigma: 0.05,
            tp_score_mean: 0.8,
            tp_score_std: 0.1,
            fp_score_mean: 0.4,
            fp_score_std: 0.15,
        }
    }
}

impl NoiseConfig {
    /// Detections equal the clipped ground truth; scores are constant.
    pub fn zero() -> Self {
        Self { jitter: 0.0, dropout: 0.0, fp_rate: 0.0, split: 0.0, embedding_sigma: 0.0, tp_score_std: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, p) in [("dropout", self.dropout), ("split", self.split)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::InvalidConfig(format!("{name} must be a probability, got {p}")));
            }
        }
        let sigmas = [
            ("jitter", self.jitter),
            ("fp_rate", self.fp_rate),
            ("embedding_sigma", self.embedding_sigma),
            ("tp_score_std", self.tp_score_std),
            ("fp_score_std", self.fp_score_std),
        ];
        for (name, v) in sigmas {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub road_length: f64,
    pub lanes: usize,
    pub lane_width: f64,
    pub curvature: Curvature,
    /// Turn radius for `arc` and `s_curve`, meters.
    pub radius: f64,
    pub crossings: usize,
    pub frames: usize,
    /// Ego travel between frames, meters.
    pub frame_spacing: f64,
    pub range: PerceptionRange,
    /// Vertex spacing of ground-truth polylines, meters.
    pub gt_spacing: f64,
    /// Points per detected polyline.
    pub detection_points: usize,
    pub embedding_dim: usize,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            road_length: 150.0,
            lanes: 3,
            lane_width: 3.5,
            curvature: Curvature::Straight,
            radius: 100.0,
            crossings: 2,
            frames: 20,
            frame_spacing: 5.0,
            range: PerceptionRange::LARGE,
            gt_spacing: 1.0,
            detection_points: 20,
            embedding_dim: 16,
            noise: NoiseConfig::default(),
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [
            ("road_length", self.road_length),
            ("lane_width", self.lane_width),
            ("frame_spacing", self.frame_spacing),
            ("gt_spacing", self.gt_spacing),
            ("radius", self.radius),
            ("range length", self.range.length),
            ("range width", self.range.width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.lanes == 0 {
            return Err(SynthError::InvalidConfig("lanes must be at least 1".into()));
        }
        if self.detection_points < 2 || self.embedding_dim == 0 {
            return Err(SynthError::InvalidConfig("detection_points >= 2 and embedding_dim >= 1 required".into()));
        }
        self.noise.validate()?;
        let half_road = self.half_road_width();
        if self.curvature != Curvature::Straight && half_road >= self.radius {
            return Err(SynthError::InfeasibleScene(format!(
                "road half width {half_road} m does not fit inside turn radius {} m",
                self.radius
            )));
        }
        let travel = self.frames.saturating_sub(1) as f64 * self.frame_spacing;
        if travel > self.road_length {
            return Err(SynthError::InfeasibleScene(format!(
                "ego travel {travel} m exceeds road length {} m",
                self.road_length
            )));
        }
        Ok(())
    }

    pub fn half_road_width(&self) -> f64 {
        self.lanes as f64 * self.lane_width / 2.0
    }

    pub fn scene_id(&self) -> String {
        let kind = match self.curvature {
            Curvature::Straight => "straight",
            Curvature::Arc => "arc",
            Curvature::SCurve => "s_curve",
        };
        format!("{kind}-{}-seed{}", self.range, self.seed)
    }
}

/// Centerline of piecewise-constant curvature, evaluated exactly.
#[derive(Debug, Clone, Copy)]
struct Centerline {
    curvature: Curvature,
    radius: f64,
    length: f64,
}

impl Centerline {
    fn kappa(&self, s: f64) -> f64 {
        match self.curvature {
            Curvature::Straight => 0.0,
            Curvature::Arc => 1.0 / self.radius,
            Curvature::SCurve if s <= self.length / 2.0 => 1.0 / self.radius,
            Curvature::SCurve => -1.0 / self.radius,
        }
    }

    /// Pose at arc length `s` (position and heading).
    fn pose(&self, s: f64) -> Pose2 {
        let advance = |p: Pose2, k: f64, ds: f64| -> Pose2 {
            if k == 0.0 {
                Pose2 { x: p.x + ds * p.theta.cos(), y: p.y + ds * p.theta.sin(), theta: p.theta }
            } else {
                let h = p.theta + k * ds;
                Pose2 { x: p.x + (h.sin() - p.theta.sin()) / k, y: p.y - (h.cos() - p.theta.cos()) / k, theta: h }
            }
        };
        let start = Pose2 { x: 0.0, y: 0.0, theta: 0.0 };
        let p = match self.curvature {
            Curvature::SCurve if s > self.length / 2.0 => {
                let mid = advance(start, self.kappa(0.0), self.length / 2.0);
                advance(mid, self.kappa(s), s - self.length / 2.0)
            }
            _ => advance(start, self.kappa(s), s),
        };
        Pose2::new(p.x, p.y, p.theta)
    }

    fn offset_point(&self, s: f64, d: f64) -> Point2 {
        let p = self.pose(s);
        Point2::new(p.x - d * p.theta.sin(), p.y + d * p.theta.cos())
    }
}

/// Ground-truth map and ego trajectory of a generated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScene {
    pub gt: GlobalMap,
    pub poses: Vec<Pose2>,
}

/// Builds the road map and ego poses. Lines run parallel to the centerline at
/// offsets `−W/2 + k·lane_width`; the outermost two are boundaries. Crossings
/// span the road perpendicular to it, spread over the stretch the ego sees.
pub fn generate_scene(config: &SceneConfig) -> Result<GeneratedScene, SynthError> {
    config.validate()?;
    let center = Centerline { curvature: config.curvature, radius: config.radius, length: config.road_length };
    let half = config.half_road_width();
    let n_steps = (config.road_length / config.gt_spacing).ceil() as usize;
    let stations: Vec<f64> = (0..=n_steps).map(|i| config.road_length * i as f64 / n_steps as f64).collect();

    let mut gt = GlobalMap::new(config.scene_id());
    let mut next_id = 1u64;
    for k in 0..=config.lanes {
        let d = -half + k as f64 * config.lane_width;
        let class = if k == 0 || k == config.lanes { MapClass::Boundary } else { MapClass::Divider };
        let pts: Vec<Point2> = stations.iter().map(|&s| center.offset_point(s, d)).collect();
        let inst = MapInstance::from_shape(class, Shape::Line(Polyline::new(pts).expect("distinct stations")));
        gt.insert(next_id, inst, None);
        next_id += 1;
    }

    let travel = config.frames.saturating_sub(1) as f64 * config.frame_spacing;
    let lo = CROSSING_DEPTH;
    let hi = (travel + config.range.length / 4.0).min(config.road_length - CROSSING_DEPTH);
    if config.crossings > 0 && hi <= lo {
        return Err(SynthError::InfeasibleScene("road too short to place crossings".into()));
    }
    for i in 0..config.crossings {
        let sc = lo + (hi - lo) * (i as f64 + 0.5) / config.crossings as f64;
        let (s0, s1) = (sc - CROSSING_DEPTH / 2.0, sc + CROSSING_DEPTH / 2.0);
        let ring = vec![
            center.offset_point(s0, -half),
            center.offset_point(s1, -half),
            center.offset_point(s1, half),
            center.offset_point(s0, half),
        ];
        let poly = Polygon::new(ring).map_err(|e| SynthError::InfeasibleScene(format!("crossing {i}: {e}")))?;
        gt.insert(next_id, MapInstance::from_shape(MapClass::PedCrossing, Shape::Area(poly)), None);
        next_id += 1;
    }

    let poses = (0..config.frames).map(|f| center.pose(f as f64 * config.frame_spacing)).collect();
    Ok(GeneratedScene { gt, poses })
}

/// Ground truth visible from `pose`: each instance clipped to the perception
/// rectangle and moved to the ego frame, keeping its ID.
pub fn clip_gt_frame(gt: &GlobalMap, pose: &Pose2, range: &PerceptionRange) -> Vec<MapInstance> {
    let rect = range.rect(*pose);
    let mut out = Vec::new();
    for inst in gt.instances() {
        let shapes: Vec<Shape> = match &inst.shape {
            Shape::Line(l) => clip_polyline_to_rect(l, &rect).into_iter().map(Shape::Line).collect(),
            Shape::Area(p) => clip_polygon_to_rect(p, &rect)
                .into_iter()
                .filter(|c| c.area() >= MIN_CLIP_AREA)
                .map(Shape::Area)
                .collect(),
        };
        for shape in shapes {
            let local = shape.transformed(pose, FrameDirection::WorldToEgo);
            out.push(MapInstance { shape: local, score: 1.0, embedding: None, ..inst.clone() });
        }
    }
    out
}

/// The part of the ground truth seen by at least one frame. Polylines are
/// cut to the covered arc-length intervals (resolved to 1 cm); crossings are
/// kept whole when any frame sees them.
pub fn observed_gt(gt: &GlobalMap, poses: &[Pose2], range: &PerceptionRange) -> GlobalMap {
    let rects: Vec<Rect> = poses.iter().map(|p| range.rect(*p)).collect();
    let seen = |p: Point2| rects.iter().any(|r| r.contains(p));
    let mut out = GlobalMap::new(gt.scene_id.clone());
    let mut next_free = gt.ids().max().map_or(1, |m| m + 1);
    for id in gt.ids().collect::<Vec<_>>() {
        let inst = gt.get(id).expect("listed id");
        match &inst.shape {
            Shape::Area(p) => {
                if rects.iter().any(|r| !clip_polygon_to_rect(p, r).is_empty()) {
                    out.insert(id, inst.clone(), None);
                }
            }
            Shape::Line(l) => {
                let runs = covered_runs(l.points(), &seen);
                for (k, run) in runs.into_iter().enumerate() {
                    let piece_id = if k == 0 { id } else { (next_free, next_free += 1).0 };
                    let piece = MapInstance::from_shape(inst.class, Shape::Line(run));
                    out.insert(piece_id, piece, None);
                }
            }
        }
    }
    out
}

/// Maximal sub-paths whose points satisfy `seen`, at least
/// [`MIN_CLIP_LENGTH`] long. Original vertices inside a run are kept.
fn covered_runs(points: &[Point2], seen: &dyn Fn(Point2) -> bool) -> Vec<Polyline> {
    let mut runs = Vec::new();
    let mut cur: Vec<Point2> = Vec::new();
    let mut flush = |cur: &mut Vec<Point2>| {
        let run = std::mem::take(cur);
        if run.len() >= 2 && path_length(&run) >= MIN_CLIP_LENGTH {
            if let Ok(l) = Polyline::from_points_dedup(run) {
                runs.push(l);
            }
        }
    };
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = ((a.dist(b) / OBSERVED_STEP).ceil() as usize).max(1);
        for k in 0..steps {
            let p = a.lerp(b, k as f64 / steps as f64);
            if seen(p) {
                cur.push(p);
            } else {
                flush(&mut cur);
            }
        }
    }
    let end = *points.last().expect("non-empty path");
    if seen(end) {
        cur.push(end);
    }
    flush(&mut cur);
    // drop the interpolated samples, keeping run ends and original vertices
    runs.into_iter()
        .map(|r| {
            let pts = r.points();
            let mut kept = vec![pts[0]];
            kept.extend(pts[1..pts.len() - 1].iter().filter(|p| points.contains(p)));
            kept.push(pts[pts.len() - 1]);
            Polyline::from_points_dedup(kept).expect("run has positive length")
        })
        .collect()
}

fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        if let Ok(e) = Embedding::normalized(v) {
            return e;
        }
    }
}

/// Fixed per-identity appearance vector.
pub fn identity_embedding(seed: u64, id: u64, dim: usize) -> Embedding {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, id.wrapping_add(1 << 40)));
    random_unit(&mut rng, dim)
}

fn noisy_embedding(base: &Embedding, sigma: f64, rng: &mut ChaCha8Rng) -> Embedding {
    if sigma == 0.0 {
        return base.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let v: Vec<f64> = base.values().iter().map(|x| x + normal.sample(rng)).collect();
    Embedding::normalized(v).unwrap_or_else(|_| base.clone())
}

fn clipped_score(mean: f64, std: f64, rng: &mut ChaCha8Rng) -> f64 {
    if std == 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    Normal::new(mean, std).expect("finite score model").sample(rng).clamp(0.0, 1.0)
}

fn jitter_points(points: &[Point2], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Point2> {
    if sigma == 0.0 {
        return points.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    points.iter().map(|p| Point2::new(p.x + normal.sample(rng), p.y + normal.sample(rng))).collect()
}

/// Detector stand-in for one frame of ego-frame ground truth. Detections
/// carry scores and embeddings but no IDs. The output is a pure function of
/// the inputs and `seed`.
pub fn corrupt_frame(gt_frame: &[MapInstance], config: &SceneConfig, seed: u64) -> Vec<MapInstance> {
    let noise = &config.noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for inst in gt_frame {
        if rng.random::<f64>() < noise.dropout {
            continue;
        }
        let id = inst.id.unwrap_or(0);
        let base = identity_embedding(config.seed, id, config.embedding_dim);
        let shapes: Vec<Shape> = match &inst.shape {
            Shape::Line(l) => {
                let pieces = if rng.random::<f64>() < noise.split {
                    split_polyline(l, rng.random_range(0.3..0.7))
                } else {
                    vec![l.points().to_vec()]
                };
                pieces
                    .into_iter()
                    .filter_map(|p| {
                        let resampled = resample_points(&p, config.detection_points);
                        Polyline::from_points_dedup(jitter_points(&resampled, noise.jitter, &mut rng)).ok()
                    })
                    .map(Shape::Line)
                    .collect()
            }
            Shape::Area(p) => {
                let mut shape = Shape::Area(p.clone());
                for _ in 0..8 {
                    if let Ok(q) = Polygon::new(jitter_points(p.ring(), noise.jitter, &mut rng)) {
                        shape = Shape::Area(q);
                        break;
                    }
                }
                vec![shape]
            }
        };
        for shape in shapes {
            out.push(MapInstance {
                class: inst.class,
                shape,
                score: clipped_score(noise.tp_score_mean, noise.tp_score_std, &mut rng),
                id: None,
                embedding: Some(noisy_embedding(&base, noise.embedding_sigma, &mut rng)),
            });
        }
    }
    let n_fp = if noise.fp_rate > 0.0 {
        Poisson::new(noise.fp_rate).expect("positive rate").sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..n_fp {
        out.push(false_positive(config, &mut rng));
    }
    out
}

fn split_polyline(line: &Polyline, frac: f64) -> Vec<Vec<Point2>> {
    let pts = line.points();
    let target = line.length() * frac;
    let mut acc = 0.0;
    for i in 0..pts.len() - 1 {
        let seg = pts[i].dist(pts[i + 1]);
        if acc + seg >= target {
            let cut = pts[i].lerp(pts[i + 1], (target - acc) / seg);
            let mut first = pts[..=i].to_vec();
            first.push(cut);
            let mut second = vec![cut];
            second.extend_from_slice(&pts[i + 1..]);
            return [first, second]
                .into_iter()
                .map(crate::geometry::dedup_consecutive)
                .filter(|p| p.len() >= 2)
                .collect();
        }
        acc += seg;
    }
    vec![pts.to_vec()]
}

fn false_positive(config: &SceneConfig, rng: &mut ChaCha8Rng) -> MapInstance {
    let (hl, hw) = (config.range.length / 2.0, config.range.width / 2.0);
    let center = Point2::new(rng.random_range(-hl..hl), rng.random_range(-hw..hw));
    let heading = rng.random_range(-PI..PI);
    let dir = Point2::new(heading.cos(), heading.sin());
    let normal = Point2::new(-dir.y, dir.x);
    let class = MapClass::ALL[rng.random_range(0..MapClass::ALL.len())];
    let shape = if class.is_polyline() {
        let len = rng.random_range(5.0..20.0);
        let bend = rng.random_range(-1.0..1.0);
        let n = config.detection_points;
        let pts: Vec<Point2> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64 - 0.5;
                center + dir * (t * len) + normal * (bend * (1.0 - 4.0 * t * t))
            })
            .collect();
        Shape::Line(Polyline::from_points_dedup(jitter_points(&pts, config.noise.jitter, rng)).expect("spread points"))
    } else {
        let (a, b) = (rng.random_range(2.0..4.0), rng.random_range(4.0..10.0));
        let ring = vec![
            center - dir * (a / 2.0) - normal * (b / 2.0),
            center + dir * (a / 2.0) - normal * (b / 2.0),
            center + dir * (a / 2.0) + normal * (b / 2.0),
            center - dir * (a / 2.0) + normal * (b / 2.0),
        ];
        Shape::Area(Polygon::new(ring).expect("rectangle"))
    };
    MapInstance {
        class,
        shape,
        score: clipped_score(config.noise.fp_score_mean, config.noise.fp_score_std, rng),
        id: None,
        embedding: Some(random_unit(rng, config.embedding_dim)),
    }
}

/// One time step of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: u64,
    pub ego_pose: Pose2,
    /// Clipped ground truth with IDs, ego frame.
    pub gt_local: Vec<MapInstance>,
    /// Noisy detections without IDs, ego frame.
    pub detections: Vec<MapInstance>,
}

/// A complete synthetic scene as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub range: PerceptionRange,
    pub classes: Vec<MapClass>,
    pub config: Option<SceneConfig>,
    /// Observed ground truth, world frame.
    pub gt: GlobalMap,
    pub frames: Vec<Frame>,
}

/// Generates the map, clips every frame, and corrupts each clip with a
/// frame-specific seed derived from `config.seed`.
pub fn build_scene(config: &SceneConfig) -> Result<Scene, SynthError> {
    let generated = generate_scene(config)?;
    let frames = generated
        .poses
        .iter()
        .enumerate()
        .map(|(f, pose)| {
            let gt_local = clip_gt_frame(&generated.gt, pose, &config.range);
            let detections = corrupt_frame(&gt_local, config, mix_seed(config.seed, f as u64));
            Frame { t: f as u64, ego_pose: *pose, gt_local, detections }
        })
        .collect();
    let gt = observed_gt(&generated.gt, &generated.poses, &config.range);
    Ok(Scene {
        scene_id: config.scene_id(),
        range: config.range,
        classes: MapClass::ALL.to_vec(),
        config: Some(*config),
        gt,
        frames,
    })
}

impl Scene {
    pub fn poses(&self) -> Vec<Pose2> {
        self.frames.iter().map(|f| f.ego_pose).collect()
    }

    pub fn gt_frames(&self) -> Vec<Vec<MapInstance>> {
        self.frames.iter().map(|f| f.gt_local.clone()).collect()
    }
}
