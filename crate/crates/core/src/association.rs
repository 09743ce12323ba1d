//! Instance-level temporal association.
//!
//! Each frame, tracked instances from the buffer are moved into the current
//! ego frame and scored against the detections along two branches: a
//! geometric similarity `exp(-d/τ)` over a point-set distance, and a feature
//! similarity `(1 + cos)/2` over embeddings. The fused matrix is thresholded
//! (strictly, `h > θ`), solved for the maximum-total-score one-to-one
//! matching, and IDs are inherited or freshly issued. Finally the buffer is
//! refreshed with the detections in world frame and stale tracks are pruned.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_matching;
use crate::geometry::{chamfer_distance, resample_points, FrameDirection, Pose2};
pub use crate::instance::{Embedding, MapClass, MapInstance, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error("instance {index} of the {side} set has no embedding")]
    MissingEmbedding { side: &'static str, index: usize },
    #[error("embedding dimensions differ ({0} vs {1})")]
    EmbeddingDim(usize, usize),
    #[error("affinity shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("duplicate instance id {0} in one frame")]
    DuplicateId(u64),
    #[error("detection {0} carries no id")]
    MissingId(usize),
    #[error("frame {frame} does not come after frame {last}")]
    OutOfOrder { frame: u64, last: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `N × M` detection-by-track scores, row-major, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
}

impl AffinityMatrix {
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self, AssociationError> {
        if scores.len() != rows * cols {
            return Err(AssociationError::InvalidParameter(format!(
                "{} scores for a {rows}x{cols} matrix",
                scores.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(AssociationError::InvalidParameter(format!("score {bad} outside [0, 1]")));
        }
        Ok(Self { rows, cols, scores })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssociationError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AssociationError::InvalidParameter("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, det: usize, track: usize) -> f64 {
        self.scores[det * self.cols + track]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Affinity with the entries that passed the threshold marked eligible.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredAffinity {
    pub matrix: AffinityMatrix,
    pub eligible: Vec<bool>,
}

impl FilteredAffinity {
    /// Every entry eligible; used when no threshold applies.
    pub fn all_eligible(matrix: AffinityMatrix) -> Self {
        let eligible = vec![true; matrix.scores.len()];
        Self { matrix, eligible }
    }

    pub fn is_eligible(&self, det: usize, track: usize) -> bool {
        self.eligible[det * self.matrix.cols + track]
    }

    pub fn eligible_count(&self) -> usize {
        self.eligible.iter().filter(|&&e| e).count()
    }
}

/// Point-set distance feeding the geometric branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricMetric {
    /// Symmetric Chamfer; insensitive to point order and direction.
    Chamfer,
    /// Mean distance between corresponding points after resampling both
    /// shapes to the same count.
    OrderedMean,
}

/// Computes one branch of the affinity matrix.
pub trait AffinityScorer {
    fn score(&self, dets: &[MapInstance], tracks: &[MapInstance]) -> Result<AffinityMatrix, AssociationError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricScorer {
    /// Distance scale τ in meters.
    pub tau: f64,
    pub metric: GeometricMetric,
    /// Shapes are densified to this spacing before Chamfer; `None` uses raw vertices.
    pub densify: Option<f64>,
}

const ORDERED_SAMPLES: usize = 20;

impl GeometricScorer {
    pub fn distance(&self, a: &Shape, b: &Shape) -> f64 {
        match self.metric {
            GeometricMetric::Chamfer => {
                let (pa, pb) = match self.densify {
                    Some(s) => (a.dense_points(s), b.dense_points(s)),
                    None => (a.points().to_vec(), b.points().to_vec()),
                };
                chamfer_distance(&pa, &pb).expect("shapes are never empty")
            }
            GeometricMetric::OrderedMean => {
                let pa = resample_points(&a.boundary_path(), ORDERED_SAMPLES);
                let pb = resample_points(&b.boundary_path(), ORDERED_SAMPLES);
                pa.iter().zip(&pb).map(|(p, q)| p.dist(*q)).sum::<f64>() / ORDERED_SAMPLES as f64
            }
        }
    }
}

impl AffinityScorer for GeometricScorer {
    fn score(&self, dets: &[MapInstance], tracks: &[MapInstance]) -> Result<AffinityMatrix, AssociationError> {
        if !(self.tau > 0.0) {
            return Err(AssociationError::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        let mut scores = Vec::with_capacity(dets.len() * tracks.len());
        for d in dets {
            for t in tracks {
                let s = if d.class == t.class { (-self.distance(&d.shape, &t.shape) / self.tau).exp() } else { 0.0 };
                scores.push(s);
            }
        }
        AffinityMatrix::new(dets.len(), tracks.len(), scores)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureScorer;

impl AffinityScorer for FeatureScorer {
    fn score(&self, dets: &[MapInstance], tracks: &[MapInstance]) -> Result<AffinityMatrix, AssociationError> {
        let de = embeddings(dets, "detection")?;
        let te = embeddings(tracks, "track")?;
        let mut scores = Vec::with_capacity(de.len() * te.len());
        for a in &de {
            for b in &te {
                if a.dim() != b.dim() {
                    return Err(AssociationError::EmbeddingDim(a.dim(), b.dim()));
                }
                scores.push(((1.0 + a.cosine(b)) / 2.0).clamp(0.0, 1.0));
            }
        }
        AffinityMatrix::new(de.len(), te.len(), scores)
    }
}

fn embeddings<'a>(set: &'a [MapInstance], side: &'static str) -> Result<Vec<&'a Embedding>, AssociationError> {
    set.iter()
        .enumerate()
        .map(|(index, inst)| inst.embedding.as_ref().ok_or(AssociationError::MissingEmbedding { side, index }))
        .collect()
}

/// `exp(-chamfer/τ)` on raw vertices, gated to zero across classes.
pub fn geometric_affinity(dets: &[MapInstance], tracks: &[MapInstance], tau: f64) -> Result<AffinityMatrix, AssociationError> {
    GeometricScorer { tau, metric: GeometricMetric::Chamfer, densify: None }.score(dets, tracks)
}

pub fn feature_affinity(dets: &[MapInstance], tracks: &[MapInstance]) -> Result<AffinityMatrix, AssociationError> {
    FeatureScorer.score(dets, tracks)
}

/// Element-wise convex combination `w_geo·geo + w_feat·feat`.
pub fn fuse_affinity(geo: &AffinityMatrix, feat: &AffinityMatrix, w_geo: f64, w_feat: f64) -> Result<AffinityMatrix, AssociationError> {
    if geo.shape() != feat.shape() {
        return Err(AssociationError::ShapeMismatch(geo.shape(), feat.shape()));
    }
    if w_geo < 0.0 || w_feat < 0.0 || ((w_geo + w_feat) - 1.0).abs() > 1e-9 {
        return Err(AssociationError::InvalidParameter(format!(
            "weights must be non-negative and sum to 1, got {w_geo} + {w_feat}"
        )));
    }
    let scores = geo
        .scores
        .iter()
        .zip(&feat.scores)
        // g + w_feat·(f − g) equals the convex combination and returns g exactly when f == g
        .map(|(&g, &f)| (g + w_feat * (f - g)).clamp(0.0, 1.0))
        .collect();
    AffinityMatrix::new(geo.rows, geo.cols, scores)
}

/// Marks entries with `h > θ` as eligible.
pub fn threshold_filter(h: &AffinityMatrix, theta: f64) -> FilteredAffinity {
    let eligible = h.scores.iter().map(|&s| s > theta).collect();
    FilteredAffinity { matrix: h.clone(), eligible }
}

/// One-to-one matching over eligible entries maximizing total score.
/// Returns `(det, track)` pairs sorted by detection index.
pub fn optimal_match(h: &FilteredAffinity) -> Vec<(usize, usize)> {
    let (rows, cols) = h.matrix.shape();
    max_weight_matching(&h.matrix.scores, &h.eligible, rows, cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// World-frame instance; always carries an id.
    pub instance: MapInstance,
    pub last_seen: u64,
    pub age_missed: u32,
}

impl Track {
    pub fn id(&self) -> u64 {
        self.instance.id.expect("tracks always carry an id")
    }
}

/// Live tracked instances carried between frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackBuffer {
    pub tracks: Vec<Track>,
    pub next_id: u64,
    pub last_frame: Option<u64>,
}

impl TrackBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(next_id: u64) -> Self {
        Self { next_id, ..Self::default() }
    }

    pub fn ids(&self) -> Vec<u64> {
        self.tracks.iter().map(Track::id).collect()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    fn issue_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

/// Matched detections inherit the track id; the rest get fresh ids in
/// detection order.
pub fn allocate_ids(mut dets: Vec<MapInstance>, matching: &[(usize, usize)], buffer: &mut TrackBuffer) -> Vec<MapInstance> {
    let mut assigned: Vec<Option<u64>> = vec![None; dets.len()];
    for &(d, t) in matching {
        assigned[d] = Some(buffer.tracks[t].id());
    }
    for (det, id) in dets.iter_mut().zip(assigned) {
        det.id = Some(id.unwrap_or_else(|| buffer.issue_id()));
    }
    dets
}

/// Refreshes tracks with this frame's world-frame detections. Tracks not seen
/// for more than `max_age` consecutive frames are dropped.
pub fn update_buffer(mut buffer: TrackBuffer, dets: &[MapInstance], frame: u64, max_age: u32) -> Result<TrackBuffer, AssociationError> {
    let mut ids = Vec::with_capacity(dets.len());
    for (i, d) in dets.iter().enumerate() {
        let id = d.id.ok_or(AssociationError::MissingId(i))?;
        if ids.contains(&id) {
            return Err(AssociationError::DuplicateId(id));
        }
        ids.push(id);
    }

    let mut seen = vec![false; dets.len()];
    let mut tracks = Vec::with_capacity(buffer.tracks.len() + dets.len());
    for mut track in buffer.tracks.drain(..) {
        match ids.iter().position(|&id| id == track.id()) {
            Some(k) => {
                seen[k] = true;
                track.instance = dets[k].clone();
                track.last_seen = frame;
                track.age_missed = 0;
                tracks.push(track);
            }
            None => {
                track.age_missed += 1;
                if track.age_missed <= max_age {
                    tracks.push(track);
                }
            }
        }
    }
    for (k, det) in dets.iter().enumerate() {
        if !seen[k] {
            tracks.push(Track { instance: det.clone(), last_seen: frame, age_missed: 0 });
        }
    }
    if let Some(&max) = ids.iter().max() {
        buffer.next_id = buffer.next_id.max(max + 1);
    }
    buffer.tracks = tracks;
    buffer.last_frame = Some(frame);
    Ok(buffer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationConfig {
    pub tau: f64,
    pub theta: f64,
    pub w_geo: f64,
    pub w_feat: f64,
    pub max_age: u32,
    pub metric: GeometricMetric,
    /// Densification applied before Chamfer; `0` disables it.
    pub densify: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self { tau: 2.0, theta: 0.5, w_geo: 0.7, w_feat: 0.3, max_age: 0, metric: GeometricMetric::Chamfer, densify: 0.5 }
    }
}

impl AssociationConfig {
    pub fn geometric_scorer(&self) -> GeometricScorer {
        GeometricScorer { tau: self.tau, metric: self.metric, densify: (self.densify > 0.0).then_some(self.densify) }
    }

    pub fn validate(&self) -> Result<(), AssociationError> {
        if !(self.tau > 0.0) {
            return Err(AssociationError::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.theta) {
            return Err(AssociationError::InvalidParameter(format!("theta must lie in [0, 1), got {}", self.theta)));
        }
        if self.w_geo < 0.0 || self.w_feat < 0.0 || ((self.w_geo + self.w_feat) - 1.0).abs() > 1e-9 {
            return Err(AssociationError::InvalidParameter(format!(
                "weights must be non-negative and sum to 1, got {} + {}",
                self.w_geo, self.w_feat
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub det: usize,
    pub track_id: u64,
    pub affinity: f64,
}

/// Result of associating one frame.
#[derive(Debug, Clone)]
pub struct FrameAssociation {
    /// Detections in ego frame, each with its assigned id.
    pub detections: Vec<MapInstance>,
    pub buffer: TrackBuffer,
    pub matches: Vec<MatchRecord>,
    pub issued_ids: Vec<u64>,
    /// Whether the feature branch contributed.
    pub used_features: bool,
}

/// Runs the full per-frame association: tracks to ego frame, affinities,
/// fusion, threshold, matching, id allocation, and buffer update.
pub fn associate_frame(
    buffer: TrackBuffer,
    dets: Vec<MapInstance>,
    pose: &Pose2,
    frame: u64,
    config: &AssociationConfig,
) -> Result<FrameAssociation, AssociationError> {
    config.validate()?;
    if let Some(last) = buffer.last_frame {
        if frame <= last {
            return Err(AssociationError::OutOfOrder { frame, last });
        }
    }

    let tracks_ego: Vec<MapInstance> =
        buffer.tracks.iter().map(|t| t.instance.transformed(pose, FrameDirection::WorldToEgo)).collect();
    let geo = config.geometric_scorer().score(&dets, &tracks_ego)?;
    let have_features = config.w_feat > 0.0
        && dets.iter().chain(&tracks_ego).all(|i| i.embedding.is_some())
        && !dets.is_empty()
        && !tracks_ego.is_empty();
    let fused = if have_features {
        let feat = FeatureScorer.score(&dets, &tracks_ego)?;
        // class gate applies to the fused score too
        let mut f = fuse_affinity(&geo, &feat, config.w_geo, config.w_feat)?;
        for (k, g) in geo.scores.iter().enumerate() {
            if *g == 0.0 && class_differs(&dets, &tracks_ego, k, geo.cols) {
                f.scores[k] = 0.0;
            }
        }
        f
    } else {
        geo
    };

    let filtered = threshold_filter(&fused, config.theta);
    let matching = optimal_match(&filtered);
    let matches: Vec<MatchRecord> = matching
        .iter()
        .map(|&(d, t)| MatchRecord { det: d, track_id: buffer.tracks[t].id(), affinity: fused.get(d, t) })
        .collect();

    let mut buffer = buffer;
    let first_new = buffer.next_id;
    let dets = allocate_ids(dets, &matching, &mut buffer);
    let issued_ids = (first_new..buffer.next_id).collect();
    let world: Vec<MapInstance> = dets.iter().map(|d| d.transformed(pose, FrameDirection::EgoToWorld)).collect();
    let buffer = update_buffer(buffer, &world, frame, config.max_age)?;
    Ok(FrameAssociation { detections: dets, buffer, matches, issued_ids, used_features: have_features })
}

fn class_differs(dets: &[MapInstance], tracks: &[MapInstance], k: usize, cols: usize) -> bool {
    dets[k / cols].class != tracks[k % cols].class
}

/// Greedy baseline tracker: same-class pairs sorted by Chamfer distance (world
/// frame) are accepted while both sides are free and the distance is below
/// `dist_threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostTrackConfig {
    pub dist_threshold: f64,
    pub max_age: u32,
    pub densify: f64,
}

impl Default for PostTrackConfig {
    fn default() -> Self {
        Self { dist_threshold: 1.5, max_age: 0, densify: 0.5 }
    }
}

/// Tracks a stream of ego-frame detections; returns them with ids.
pub fn post_track_baseline(frames: &[Vec<MapInstance>], poses: &[Pose2], config: &PostTrackConfig) -> Vec<Vec<MapInstance>> {
    assert_eq!(frames.len(), poses.len(), "one pose per frame");
    let mut buffer = TrackBuffer::new();
    let mut out = Vec::with_capacity(frames.len());
    for (f, (dets, pose)) in frames.iter().zip(poses).enumerate() {
        let world: Vec<MapInstance> = dets.iter().map(|d| d.transformed(pose, FrameDirection::EgoToWorld)).collect();
        let dense = |i: &MapInstance| i.shape.dense_points(config.densify);
        let det_pts: Vec<_> = world.iter().map(dense).collect();
        let trk_pts: Vec<_> = buffer.tracks.iter().map(|t| dense(&t.instance)).collect();
        let mut candidates = Vec::new();
        for (i, d) in world.iter().enumerate() {
            for (j, t) in buffer.tracks.iter().enumerate() {
                if d.class != t.instance.class {
                    continue;
                }
                let dist = chamfer_distance(&det_pts[i], &trk_pts[j]).expect("non-empty shapes");
                if dist < config.dist_threshold {
                    candidates.push((dist, i, j));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut det_used = vec![false; world.len()];
        let mut trk_used = vec![false; buffer.tracks.len()];
        let mut matching = Vec::new();
        for (_, i, j) in candidates {
            if !det_used[i] && !trk_used[j] {
                det_used[i] = true;
                trk_used[j] = true;
                matching.push((i, j));
            }
        }
        let world = allocate_ids(world, &matching, &mut buffer);
        buffer = update_buffer(buffer, &world, f as u64, config.max_age).expect("ids are unique by construction");
        out.push(
            world
                .into_iter()
                .zip(dets)
                .map(|(w, d)| MapInstance { id: w.id, ..d.clone() })
                .collect(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn line(class: MapClass, pts: &[(f64, f64)]) -> MapInstance {
        MapInstance::new(class, pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn emb(v: &[f64]) -> Embedding {
        Embedding::normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn geometric_examples() {
        let a = line(MapClass::Divider, &[(0.0, 0.0), (10.0, 0.0)]);
        let b = line(MapClass::Boundary, &[(0.0, 0.0), (10.0, 0.0)]);
        let c = line(MapClass::Divider, &[(0.0, 2.0), (10.0, 2.0)]);
        let h = geometric_affinity(std::slice::from_ref(&a), &[a.clone(), b, c], 2.0).unwrap();
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 1), 0.0);
        assert!((h.get(0, 2) - (-1.0f64).exp()).abs() < 1e-12);
        assert!((h.get(0, 2) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn feature_examples() {
        let mk = |v: &[f64]| line(MapClass::Divider, &[(0.0, 0.0), (1.0, 0.0)]).with_embedding(emb(v));
        let d = [mk(&[1.0, 0.0])];
        let t = [mk(&[1.0, 0.0]), mk(&[-1.0, 0.0]), mk(&[0.0, 1.0])];
        let h = feature_affinity(&d, &t).unwrap();
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 1), 0.0);
        assert!((h.get(0, 2) - 0.5).abs() < 1e-15);

        let bare = [line(MapClass::Divider, &[(0.0, 0.0), (1.0, 0.0)])];
        assert_eq!(
            feature_affinity(&bare, &t),
            Err(AssociationError::MissingEmbedding { side: "detection", index: 0 })
        );
    }

    #[test]
    fn fuse_examples() {
        let g = AffinityMatrix::from_rows(&[vec![0.8, 0.1]]).unwrap();
        let f = AffinityMatrix::from_rows(&[vec![0.4, 0.9]]).unwrap();
        assert_eq!(fuse_affinity(&g, &f, 1.0, 0.0).unwrap(), g);
        assert!((fuse_affinity(&g, &f, 0.5, 0.5).unwrap().get(0, 0) - 0.6).abs() < 1e-15);
        assert_eq!(fuse_affinity(&g, &g, 0.7, 0.3).unwrap().scores(), g.scores());
        let wrong = AffinityMatrix::from_rows(&[vec![0.4]]).unwrap();
        assert_eq!(fuse_affinity(&g, &wrong, 0.5, 0.5), Err(AssociationError::ShapeMismatch((1, 2), (1, 1))));
    }

    #[test]
    fn threshold_examples() {
        let h = AffinityMatrix::from_rows(&[vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        let f = threshold_filter(&h, 0.5);
        assert_eq!(f.eligible, vec![true, false, false, true]);
        let z = AffinityMatrix::from_rows(&[vec![0.0, 0.2]]).unwrap();
        assert_eq!(threshold_filter(&z, 0.0).eligible, vec![false, true]);
        assert_eq!(threshold_filter(&h, 0.95).eligible_count(), 0);
        assert!(optimal_match(&threshold_filter(&h, 0.95)).is_empty());
    }

    #[test]
    fn match_examples() {
        let h = AffinityMatrix::from_rows(&[vec![0.9, 0.2], vec![0.3, 0.8]]).unwrap();
        let m = optimal_match(&FilteredAffinity::all_eligible(h.clone()));
        assert_eq!(m, vec![(0, 0), (1, 1)]);
        let total: f64 = m.iter().map(|&(i, j)| h.get(i, j)).sum();
        assert!((total - 1.7).abs() < 1e-12);
        let empty = AffinityMatrix::new(0, 3, vec![]).unwrap();
        assert!(optimal_match(&FilteredAffinity::all_eligible(empty)).is_empty());
    }

    fn buffer_with(ids: &[u64], next_id: u64) -> TrackBuffer {
        TrackBuffer {
            tracks: ids
                .iter()
                .map(|&id| Track {
                    instance: line(MapClass::Divider, &[(0.0, id as f64), (1.0, id as f64)]).with_id(id),
                    last_seen: 0,
                    age_missed: 0,
                })
                .collect(),
            next_id,
            last_frame: Some(0),
        }
    }

    #[test]
    fn allocation_examples() {
        let dets = || vec![line(MapClass::Divider, &[(0.0, 0.0), (1.0, 0.0)]); 3];
        let mut empty = TrackBuffer::starting_at(7);
        let out = allocate_ids(dets(), &[], &mut empty);
        assert_eq!(out.iter().map(|d| d.id.unwrap()).collect::<Vec<_>>(), vec![7, 8, 9]);
        assert_eq!(empty.next_id, 10);

        let mut buf = buffer_with(&[3, 5, 6], 10);
        let out = allocate_ids(dets(), &[(0, 2), (1, 0), (2, 1)], &mut buf);
        assert_eq!(out.iter().map(|d| d.id.unwrap()).collect::<Vec<_>>(), vec![6, 3, 5]);
        assert_eq!(buf.next_id, 10);

        let mut buf = buffer_with(&[3, 5], 10);
        let out = allocate_ids(dets(), &[(0, 1), (2, 0)], &mut buf);
        assert_eq!(out.iter().map(|d| d.id.unwrap()).collect::<Vec<_>>(), vec![5, 10, 3]);
        assert_eq!(buf.next_id, 11);
    }

    #[test]
    fn update_removes_unmatched_immediately_at_max_age_zero() {
        let buf = buffer_with(&[1, 2], 3);
        let det = line(MapClass::Divider, &[(0.0, 1.0), (1.0, 1.0)]).with_id(1);
        let out = update_buffer(buf, &[det], 1, 0).unwrap();
        assert_eq!(out.ids(), vec![1]);
    }

    #[test]
    fn update_all_matched_keeps_size() {
        let buf = buffer_with(&[1, 2], 3);
        let dets: Vec<_> = [1, 2].iter().map(|&id| line(MapClass::Divider, &[(0.0, 0.0), (2.0, 0.0)]).with_id(id)).collect();
        let out = update_buffer(buf, &dets, 1, 0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.tracks[0].instance.points()[1], Point2::new(2.0, 0.0));
    }

    #[test]
    fn update_rejects_duplicates() {
        let d = line(MapClass::Divider, &[(0.0, 0.0), (1.0, 0.0)]).with_id(4);
        assert_eq!(update_buffer(TrackBuffer::new(), &[d.clone(), d], 0, 0), Err(AssociationError::DuplicateId(4)));
    }

    #[test]
    fn track_survives_two_misses_with_max_age_two() {
        let config = AssociationConfig { max_age: 2, ..Default::default() };
        let seg = line(MapClass::Boundary, &[(0.0, 0.0), (20.0, 0.0)]);
        let pose = Pose2::identity();
        let r0 = associate_frame(TrackBuffer::new(), vec![seg.clone()], &pose, 0, &config).unwrap();
        let id = r0.detections[0].id.unwrap();
        let r1 = associate_frame(r0.buffer, vec![], &pose, 1, &config).unwrap();
        let r2 = associate_frame(r1.buffer, vec![], &pose, 2, &config).unwrap();
        assert_eq!(r2.buffer.tracks[0].age_missed, 2);
        let r3 = associate_frame(r2.buffer, vec![seg], &pose, 3, &config).unwrap();
        assert_eq!(r3.detections[0].id, Some(id));
        assert!(r3.issued_ids.is_empty());
    }

    #[test]
    fn empty_frame_only_ages() {
        let seg = line(MapClass::Boundary, &[(0.0, 0.0), (20.0, 0.0)]);
        let config = AssociationConfig::default();
        let r0 = associate_frame(TrackBuffer::new(), vec![seg], &Pose2::identity(), 0, &config).unwrap();
        let r1 = associate_frame(r0.buffer, vec![], &Pose2::identity(), 1, &config).unwrap();
        assert!(r1.buffer.is_empty());
        assert_eq!(r1.buffer.next_id, 1);
    }

    #[test]
    fn static_scene_keeps_ids() {
        let dets = vec![
            line(MapClass::Divider, &[(-20.0, 0.0), (20.0, 0.0)]),
            line(MapClass::Boundary, &[(-20.0, 3.5), (20.0, 3.5)]),
            line(MapClass::Boundary, &[(-20.0, -3.5), (20.0, -3.5)]),
        ];
        let config = AssociationConfig::default();
        let r0 = associate_frame(TrackBuffer::new(), dets.clone(), &Pose2::identity(), 0, &config).unwrap();
        let r1 = associate_frame(r0.buffer, dets, &Pose2::identity(), 1, &config).unwrap();
        let ids0: Vec<_> = r0.detections.iter().map(|d| d.id).collect();
        let ids1: Vec<_> = r1.detections.iter().map(|d| d.id).collect();
        assert_eq!(ids0, ids1);
        assert!(r1.issued_ids.is_empty());
    }

    #[test]
    fn out_of_order_frames_rejected() {
        let config = AssociationConfig::default();
        let r = associate_frame(TrackBuffer::new(), vec![], &Pose2::identity(), 5, &config).unwrap();
        let err = associate_frame(r.buffer, vec![], &Pose2::identity(), 5, &config).unwrap_err();
        assert_eq!(err, AssociationError::OutOfOrder { frame: 5, last: 5 });
    }

    #[test]
    fn post_track_identical_frames_and_gap() {
        let d = line(MapClass::Divider, &[(0.0, 0.0), (10.0, 0.0)]);
        let poses = vec![Pose2::identity(); 3];
        let cfg = PostTrackConfig::default();
        let out = post_track_baseline(&[vec![d.clone()], vec![d.clone()], vec![d.clone()]], &poses, &cfg);
        assert!(out.iter().all(|f| f[0].id == Some(0)));

        let out = post_track_baseline(&[vec![d.clone()], vec![], vec![d]], &poses, &cfg);
        assert_eq!(out[0][0].id, Some(0));
        assert_eq!(out[2][0].id, Some(1));
    }

    #[test]
    fn ordered_mean_sees_direction() {
        let a = line(MapClass::Divider, &[(0.0, 0.0), (10.0, 0.0)]);
        let b = line(MapClass::Divider, &[(10.0, 0.0), (0.0, 0.0)]);
        let chamfer = GeometricScorer { tau: 2.0, metric: GeometricMetric::Chamfer, densify: Some(0.5) };
        let ordered = GeometricScorer { metric: GeometricMetric::OrderedMean, ..chamfer };
        assert_eq!(chamfer.distance(&a.shape, &b.shape), 0.0);
        // 20 samples: Σ|2k − 19|·10/19 over k, averaged
        let expected = (0..20).map(|k| (2.0 * k as f64 - 19.0).abs() * 10.0 / 19.0).sum::<f64>() / 20.0;
        assert!((ordered.distance(&a.shape, &b.shape) - expected).abs() < 1e-9);
    }
}
