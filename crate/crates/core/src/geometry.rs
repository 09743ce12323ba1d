//! Planar primitives shared by every stage: points, SE(2) poses, polylines,
//! simple polygons, oriented rectangles, Chamfer distance, clipping and
//! arc-length resampling.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separation below which two consecutive vertices count as the same point.
pub const POINT_EPS: f64 = 1e-9;

/// Clip fragments shorter than this are dropped as border slivers.
pub const MIN_CLIP_LENGTH: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("invalid sample count {0}, need at least 2")]
    InvalidSampleCount(usize),
    #[error("degenerate polyline: {0}")]
    DegeneratePolyline(&'static str),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A 2D point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2π for tiny negative inputs
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Rigid SE(2) pose mapping the ego frame into the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub const fn identity() -> Self {
        Self { x: 0.0, y: 0.0, theta: 0.0 }
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let t = self.to_world(other.translation());
        Pose2::new(t.x, t.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    pub fn to_world(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    pub fn to_ego(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    EgoToWorld,
    WorldToEgo,
}

pub fn transform_points(pose: &Pose2, points: &[Point2], direction: FrameDirection) -> Vec<Point2> {
    match direction {
        FrameDirection::EgoToWorld => points.iter().map(|&p| pose.to_world(p)).collect(),
        FrameDirection::WorldToEgo => points.iter().map(|&p| pose.to_ego(p)).collect(),
    }
}

/// Ordered open curve with at least two distinct points.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polyline {
    points: Vec<Point2>,
}

impl Polyline {
    /// Validates the points as given; consecutive duplicates are an error.
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if points.len() < 2 {
            return Err(GeometryError::DegeneratePolyline("fewer than 2 points"));
        }
        if points.windows(2).any(|w| w[0].dist(w[1]) <= POINT_EPS) {
            return Err(GeometryError::DegeneratePolyline("repeated consecutive point"));
        }
        Ok(Self { points })
    }

    /// Drops consecutive duplicates before validating.
    pub fn from_points_dedup(points: Vec<Point2>) -> Result<Self, GeometryError> {
        Self::new(dedup_consecutive(points))
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        path_length(&self.points)
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    pub fn transformed(&self, pose: &Pose2, direction: FrameDirection) -> Polyline {
        Polyline { points: transform_points(pose, &self.points, direction) }
    }
}

impl<'de> Deserialize<'de> for Polyline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let points = Vec::<Point2>::deserialize(d)?;
        Polyline::new(points).map_err(serde::de::Error::custom)
    }
}

/// Simple polygon stored counter-clockwise, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polygon {
    ring: Vec<Point2>,
}

impl Polygon {
    /// Accepts either orientation and stores the ring CCW. A trailing point
    /// equal to the first is removed.
    pub fn new(mut ring: Vec<Point2>) -> Result<Self, GeometryError> {
        if ring.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        ring = dedup_consecutive(ring);
        while ring.len() > 1 && ring[0].dist(ring[ring.len() - 1]) <= POINT_EPS {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::InvalidPolygon("fewer than 3 vertices"));
        }
        let area = signed_area(&ring);
        if area.abs() <= POINT_EPS {
            return Err(GeometryError::InvalidPolygon("zero area"));
        }
        if !ring_is_simple(&ring) {
            return Err(GeometryError::InvalidPolygon("self-intersecting ring"));
        }
        if area < 0.0 {
            ring.reverse();
        }
        Ok(Self { ring })
    }

    pub fn ring(&self) -> &[Point2] {
        &self.ring
    }

    pub fn into_ring(self) -> Vec<Point2> {
        self.ring
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.ring)
    }

    /// Ring with the first vertex appended, as an open path.
    pub fn closed_path(&self) -> Vec<Point2> {
        let mut pts = self.ring.clone();
        pts.push(self.ring[0]);
        pts
    }

    pub fn transformed(&self, pose: &Pose2, direction: FrameDirection) -> Polygon {
        // rigid motions keep orientation and simplicity
        Polygon { ring: transform_points(pose, &self.ring, direction) }
    }

    /// Boundary counts as inside.
    pub fn contains(&self, p: Point2) -> bool {
        point_in_ring(&self.ring, p) != Containment::Outside
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ring = Vec::<Point2>::deserialize(d)?;
        Polygon::new(ring).map_err(serde::de::Error::custom)
    }
}

/// Oriented rectangle; `half_length` runs along the center heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Pose2,
    pub half_length: f64,
    pub half_width: f64,
}

impl Rect {
    pub fn new(center: Pose2, half_length: f64, half_width: f64) -> Self {
        assert!(half_length > 0.0 && half_width > 0.0, "rect extents must be positive");
        Self { center, half_length, half_width }
    }

    /// Rectangle of `length × width` meters centered on `pose`.
    pub fn from_range(pose: Pose2, length: f64, width: f64) -> Self {
        Self::new(pose, length / 2.0, width / 2.0)
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect::new(self.center, self.half_length + margin, self.half_width + margin)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.contains_local(self.center.to_ego(p), 0.0)
    }

    fn contains_local(&self, q: Point2, tol: f64) -> bool {
        q.x.abs() <= self.half_length + tol && q.y.abs() <= self.half_width + tol
    }

    /// Corners in world frame, counter-clockwise.
    pub fn corners(&self) -> [Point2; 4] {
        let (l, w) = (self.half_length, self.half_width);
        [
            self.center.to_world(Point2::new(-l, -w)),
            self.center.to_world(Point2::new(l, -w)),
            self.center.to_world(Point2::new(l, w)),
            self.center.to_world(Point2::new(-l, w)),
        ]
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_length * self.half_width
    }
}

pub fn dedup_consecutive(points: Vec<Point2>) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|q| q.dist(p) > POINT_EPS) {
            out.push(p);
        }
    }
    out
}

pub fn path_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Shoelace area, positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.cross(b);
    }
    acc / 2.0
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2, eps: f64) -> bool {
    point_segment_distance(p, a, b) <= eps
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Closed-segment intersection test with tolerance for touching cases.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(c, d, a, POINT_EPS)
        || on_segment(c, d, b, POINT_EPS)
        || on_segment(a, b, c, POINT_EPS)
        || on_segment(a, b, d, POINT_EPS)
}

/// True when no two non-adjacent edges of the closed ring touch.
pub fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if adjacent {
                // adjacent edges may only share their common vertex; reject folds
                let shared = if j == i + 1 { b } else { a };
                let (other_a, other_b) = if j == i + 1 { (a, d) } else { (b, c) };
                let e1 = (other_a - shared).norm();
                let e2 = (other_b - shared).norm();
                let u = other_a - shared;
                let v = other_b - shared;
                if u.cross(v).abs() <= POINT_EPS * e1 * e2 && u.dot(v) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// True when no two non-adjacent segments of the open path touch.
pub fn polyline_is_simple(points: &[Point2]) -> bool {
    let n = points.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i + 2)..n.saturating_sub(1) {
            if segments_intersect(points[i], points[i + 1], points[j], points[j + 1]) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

pub fn point_in_ring(ring: &[Point2], p: Point2) -> Containment {
    let n = ring.len();
    for i in 0..n {
        if on_segment(ring[i], ring[(i + 1) % n], p, POINT_EPS) {
            return Containment::Boundary;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    if inside {
        Containment::Inside
    } else {
        Containment::Outside
    }
}

fn directed_mean_nn(from: &[Point2], to: &[Point2]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&a| to.iter().map(|&b| a.dist_sq(b)).fold(f64::INFINITY, f64::min).sqrt())
        .sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance: the average of the two directed mean
/// nearest-neighbor distances.
pub fn chamfer_distance(p: &[Point2], q: &[Point2]) -> Result<f64, GeometryError> {
    if p.is_empty() || q.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    Ok((directed_mean_nn(p, q) + directed_mean_nn(q, p)) / 2.0)
}

/// Inserts points so that no segment is longer than `spacing`. Original
/// vertices are kept.
pub fn densify(points: &[Point2], spacing: f64) -> Vec<Point2> {
    assert!(spacing > 0.0);
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        out.push(w[0]);
        let len = w[0].dist(w[1]);
        let steps = (len / spacing).ceil() as usize;
        for k in 1..steps {
            out.push(w[0].lerp(w[1], k as f64 / steps as f64));
        }
    }
    if let Some(&last) = points.last() {
        out.push(last);
    }
    out
}

/// `n` points at equal arc-length spacing along the path; endpoints kept exactly.
pub fn resample_even(line: &Polyline, n: usize) -> Result<Polyline, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidSampleCount(n));
    }
    Polyline::new(resample_points(line.points(), n))
}

/// Arc-length resampling on a raw path of positive length.
pub(crate) fn resample_points(pts: &[Point2], n: usize) -> Vec<Point2> {
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + w[0].dist(w[1]));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push(pts[seg].lerp(pts[seg + 1], t.clamp(0.0, 1.0)));
    }
    out.push(pts[pts.len() - 1]);
    out
}

/// Parameter interval of segment `a→b` inside the axis-aligned box
/// `|x| ≤ hx, |y| ≤ hy` (Liang–Barsky).
fn liang_barsky(a: Point2, b: Point2, hx: f64, hy: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let checks = [(-d.x, a.x + hx), (d.x, hx - a.x), (-d.y, a.y + hy), (d.y, hy - a.y)];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Pieces of a path inside and outside a rectangle.
#[derive(Debug, Clone, Default)]
pub struct PathSplit {
    pub inside: Vec<Vec<Point2>>,
    pub outside: Vec<Vec<Point2>>,
}

/// Splits a path at every rectangle boundary crossing. Crossing points are
/// interpolated in the input frame; interior vertices are copied unchanged.
pub fn split_path_by_rect(points: &[Point2], rect: &Rect) -> PathSplit {
    let local: Vec<Point2> = points.iter().map(|&p| rect.center.to_ego(p)).collect();
    let mut split = PathSplit::default();
    let mut inside_run: Vec<Point2> = Vec::new();
    let mut outside_run: Vec<Point2> = Vec::new();

    fn flush(run: &mut Vec<Point2>, out: &mut Vec<Vec<Point2>>) {
        let piece = dedup_consecutive(std::mem::take(run));
        if piece.len() >= 2 {
            out.push(piece);
        }
    }
    fn extend(run: &mut Vec<Point2>, a: Point2, b: Point2) {
        if run.last() != Some(&a) {
            run.push(a);
        }
        run.push(b);
    }

    for i in 0..points.len().saturating_sub(1) {
        let (a, b) = (points[i], points[i + 1]);
        let at = |t: f64| {
            if t <= 0.0 {
                a
            } else if t >= 1.0 {
                b
            } else {
                a.lerp(b, t)
            }
        };
        match liang_barsky(local[i], local[i + 1], rect.half_length, rect.half_width) {
            None => extend(&mut outside_run, a, b),
            Some((t0, t1)) => {
                if t0 > 0.0 {
                    extend(&mut outside_run, a, at(t0));
                    flush(&mut outside_run, &mut split.outside);
                    flush(&mut inside_run, &mut split.inside);
                }
                extend(&mut inside_run, at(t0), at(t1));
                if t1 < 1.0 {
                    flush(&mut inside_run, &mut split.inside);
                    extend(&mut outside_run, at(t1), b);
                } else {
                    flush(&mut outside_run, &mut split.outside);
                }
            }
        }
    }
    flush(&mut inside_run, &mut split.inside);
    flush(&mut outside_run, &mut split.outside);
    split
}

/// Maximal sub-polylines inside the rectangle, dropping pieces shorter than
/// [`MIN_CLIP_LENGTH`].
pub fn clip_polyline_to_rect(line: &Polyline, rect: &Rect) -> Vec<Polyline> {
    clip_polyline_to_rect_with(line, rect, MIN_CLIP_LENGTH)
}

pub fn clip_polyline_to_rect_with(line: &Polyline, rect: &Rect, min_length: f64) -> Vec<Polyline> {
    split_path_by_rect(line.points(), rect)
        .inside
        .into_iter()
        .filter(|piece| path_length(piece) >= min_length)
        .filter_map(|piece| Polyline::new(piece).ok())
        .collect()
}

/// Sutherland–Hodgman clip of a polygon against the (convex) rectangle.
pub fn clip_polygon_to_rect(poly: &Polygon, rect: &Rect) -> Vec<Polygon> {
    let (hl, hw) = (rect.half_length, rect.half_width);
    let local: Vec<Point2> = poly.ring().iter().map(|&p| rect.center.to_ego(p)).collect();
    if local.iter().all(|&q| rect.contains_local(q, 0.0)) {
        return vec![poly.clone()];
    }

    // (normal, offset): keep points with normal·q ≤ offset
    let planes = [
        (Point2::new(1.0, 0.0), hl),
        (Point2::new(-1.0, 0.0), hl),
        (Point2::new(0.0, 1.0), hw),
        (Point2::new(0.0, -1.0), hw),
    ];
    let mut ring = local;
    for (normal, offset) in planes {
        if ring.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(ring.len() + 2);
        let n = ring.len();
        for i in 0..n {
            let cur = ring[i];
            let nxt = ring[(i + 1) % n];
            let dc = normal.dot(cur) - offset;
            let dn = normal.dot(nxt) - offset;
            if dc <= 0.0 {
                next.push(cur);
            }
            if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
                let t = dc / (dc - dn);
                next.push(cur.lerp(nxt, t));
            }
        }
        ring = next;
    }
    let world: Vec<Point2> = ring.into_iter().map(|q| rect.center.to_world(q)).collect();
    match Polygon::new(world) {
        Ok(p) => vec![p],
        Err(_) => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn axis_rect(hl: f64, hw: f64) -> Rect {
        Rect::new(Pose2::identity(), hl, hw)
    }

    #[test]
    fn angle_normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-PI / 2.0) + PI / 2.0).abs() < 1e-15);
        let p = Pose2::new(0.0, 0.0, 7.0);
        assert!(p.theta > -PI && p.theta <= PI);
    }

    #[test]
    fn transform_identity_and_quarter_turn() {
        let out = transform_points(&Pose2::identity(), &pts(&[(1.0, 2.0)]), FrameDirection::EgoToWorld);
        assert_eq!(out, pts(&[(1.0, 2.0)]));

        let q = Pose2::new(0.0, 0.0, PI / 2.0);
        let out = transform_points(&q, &pts(&[(1.0, 0.0)]), FrameDirection::EgoToWorld);
        assert!(out[0].dist(Point2::new(0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn transform_matches_matrix_product() {
        // homogeneous matrix oracle [[c,-s,tx],[s,c,ty],[0,0,1]] · [x,y,1]
        let pose = Pose2::new(3.0, 4.0, PI);
        let m = [[PI.cos(), -PI.sin(), 3.0], [PI.sin(), PI.cos(), 4.0]];
        let v = [1.0, 0.0, 1.0];
        let expect = Point2::new(
            m[0].iter().zip(v).map(|(a, b)| a * b).sum(),
            m[1].iter().zip(v).map(|(a, b)| a * b).sum(),
        );
        let got = transform_points(&pose, &pts(&[(1.0, 0.0)]), FrameDirection::EgoToWorld)[0];
        assert!(got.dist(expect) < 1e-12);
        assert!(got.dist(Point2::new(2.0, 4.0)) < 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose2::new(12.5, -3.0, 2.3);
        let id = p.compose(&p.inverse());
        assert!(id.x.abs() < 1e-9 && id.y.abs() < 1e-9 && id.theta.abs() < 1e-9);
        let id2 = p.inverse().compose(&p);
        assert!(id2.x.abs() < 1e-9 && id2.y.abs() < 1e-9 && id2.theta.abs() < 1e-9);
    }

    #[test]
    fn chamfer_examples() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (5.0, 5.0)]);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(chamfer_distance(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)])).unwrap(), 5.0);
        let d = chamfer_distance(&pts(&[(0.0, 0.0), (1.0, 0.0)]), &pts(&[(0.0, 1.0)])).unwrap();
        // brute force: p→q = (1 + √2)/2, q→p = 1
        let oracle = ((1.0 + 2f64.sqrt()) / 2.0 + 1.0) / 2.0;
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 1.10355).abs() < 1e-5);
    }

    #[test]
    fn chamfer_empty_is_error() {
        assert_eq!(chamfer_distance(&[], &pts(&[(0.0, 0.0)])), Err(GeometryError::EmptyPointSet));
        assert_eq!(chamfer_distance(&pts(&[(0.0, 0.0)]), &[]), Err(GeometryError::EmptyPointSet));
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert!(Polyline::new(pts(&[(0.0, 0.0)])).is_err());
        assert!(Polyline::new(pts(&[(0.0, 0.0), (0.0, 0.0)])).is_err());
        assert!(Polyline::new(pts(&[(0.0, 0.0), (f64::NAN, 0.0)])).is_err());
        let ok = Polyline::from_points_dedup(pts(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])).unwrap();
        assert_eq!(ok.points().len(), 2);
    }

    #[test]
    fn polygon_is_stored_ccw() {
        let cw = Polygon::new(pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)])).unwrap();
        assert!((cw.area() - 1.0).abs() < 1e-12);
        let bowtie = Polygon::new(pts(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]));
        assert!(bowtie.is_err());
        let closed = Polygon::new(pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)])).unwrap();
        assert_eq!(closed.ring().len(), 3);
    }

    #[test]
    fn clip_fully_inside_is_unchanged() {
        let line = Polyline::new(pts(&[(-1.0, 0.5), (0.3, 0.2), (2.0, -1.0)])).unwrap();
        let out = clip_polyline_to_rect(&line, &axis_rect(5.0, 5.0));
        assert_eq!(out, vec![line]);
    }

    #[test]
    fn clip_symmetric_crossing() {
        let line = Polyline::new(pts(&[(-10.0, 0.0), (10.0, 0.0)])).unwrap();
        let out = clip_polyline_to_rect(&line, &axis_rect(5.0, 5.0));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].points(), &pts(&[(-5.0, 0.0), (5.0, 0.0)])[..]);
    }

    #[test]
    fn clip_fully_outside_is_empty() {
        let line = Polyline::new(pts(&[(10.0, 10.0), (20.0, 10.0)])).unwrap();
        assert!(clip_polyline_to_rect(&line, &axis_rect(5.0, 5.0)).is_empty());
    }

    #[test]
    fn clip_drops_short_slivers() {
        // clips a 0.2 m corner piece
        let line = Polyline::new(pts(&[(4.9, 6.0), (4.9, 4.8), (6.0, 4.8)])).unwrap();
        assert!(clip_polyline_to_rect(&line, &axis_rect(5.0, 5.0)).is_empty());
        assert_eq!(clip_polyline_to_rect_with(&line, &axis_rect(5.0, 5.0), 0.0).len(), 1);
    }

    fn u_shape() -> Polyline {
        // leaves the box through the top twice
        let mut v = Vec::new();
        for i in 0..=40 {
            let t = i as f64 / 40.0 * PI;
            v.push(Point2::new(-3.0 * t.cos(), 8.0 - 10.0 * t.sin()));
        }
        Polyline::new(v).unwrap()
    }

    #[test]
    fn clip_u_shape_matches_dense_sampling() {
        let rect = axis_rect(5.0, 5.0);
        let line = u_shape();
        let clipped = clip_polyline_to_rect_with(&line, &rect, 0.0);
        // dips out through the bottom edge, so two pieces remain inside
        let line2 = Polyline::new(
            (0..=60)
                .map(|i| {
                    let s = i as f64 / 60.0;
                    Point2::new(-4.5 + 9.0 * s, 6.0 * (2.0 * PI * s).cos())
                })
                .collect(),
        )
        .unwrap();
        let clipped2 = clip_polyline_to_rect_with(&line2, &rect, 0.0);
        assert_eq!(clipped.len(), 1);
        assert_eq!(clipped2.len(), 2);

        for (l, pieces) in [(&line, &clipped), (&line2, &clipped2)] {
            let total: f64 = pieces.iter().map(Polyline::length).sum();
            // oracle: 10^4 equal arc steps, count steps whose midpoint is inside
            let dense = resample_points(l.points(), 10_001);
            let step = l.length() / 10_000.0;
            let inside = dense
                .windows(2)
                .filter(|w| rect.contains(w[0].lerp(w[1], 0.5)))
                .count() as f64
                * step;
            assert!((total - inside).abs() / inside < 1e-3, "{total} vs {inside}");
        }
    }

    #[test]
    fn clip_conserves_length() {
        let rect = Rect::new(Pose2::new(1.0, -2.0, 0.4), 4.0, 3.0);
        let line = u_shape();
        let split = split_path_by_rect(line.points(), &rect);
        let inside: f64 = split.inside.iter().map(|p| path_length(p)).sum();
        let outside: f64 = split.outside.iter().map(|p| path_length(p)).sum();
        assert!(((inside + outside) - line.length()).abs() / line.length() < 1e-6);
    }

    #[test]
    fn resample_examples() {
        let seg = Polyline::new(pts(&[(0.0, 0.0), (10.0, 0.0)])).unwrap();
        let r = resample_even(&seg, 6).unwrap();
        let xs: Vec<f64> = r.points().iter().map(|p| p.x).collect();
        for (x, e) in xs.iter().zip([0.0, 2.0, 4.0, 6.0, 8.0, 10.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        let line = u_shape();
        let two = resample_even(&line, 2).unwrap();
        assert_eq!(two.points(), &[line.first(), line.last()]);
        assert_eq!(resample_even(&line, 1), Err(GeometryError::InvalidSampleCount(1)));
    }

    #[test]
    fn resample_quarter_circle_equal_chords() {
        let arc: Vec<Point2> = (0..100)
            .map(|i| {
                let t = i as f64 / 99.0 * PI / 2.0;
                Point2::new(10.0 * t.cos(), 10.0 * t.sin())
            })
            .collect();
        let arc = Polyline::new(arc).unwrap();
        let r = resample_even(&arc, 11).unwrap();
        let chords: Vec<f64> = r.points().windows(2).map(|w| w[0].dist(w[1])).collect();
        // arc-length oracle: each chord subtends π/20 of a radius-10 circle
        let expected = 2.0 * 10.0 * (PI / 40.0).sin();
        for c in &chords {
            assert!((c - expected).abs() / expected < 1e-3, "{c} vs {expected}");
        }
        for w in chords.windows(2) {
            assert!((w[0] - w[1]).abs() / w[0] < 1e-3);
        }
        let r = resample_even(&arc, 20).unwrap();
        assert!((r.length() - arc.length()).abs() / arc.length() < 0.01);
    }

    #[test]
    fn polygon_clip_examples() {
        let rect = axis_rect(5.0, 5.0);
        let inner = Polygon::new(pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])).unwrap();
        assert_eq!(clip_polygon_to_rect(&inner, &rect), vec![inner.clone()]);

        let corner = Polygon::new(pts(&[(4.5, 4.5), (5.5, 4.5), (5.5, 5.5), (4.5, 5.5)])).unwrap();
        let out = clip_polygon_to_rect(&corner, &rect);
        assert_eq!(out.len(), 1);
        assert!((out[0].area() - 0.25).abs() < 1e-12);

        let far = Polygon::new(pts(&[(20.0, 0.0), (21.0, 0.0), (21.0, 1.0)])).unwrap();
        assert!(clip_polygon_to_rect(&far, &rect).is_empty());
    }

    #[test]
    fn polygon_clip_matches_rasterization() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rect = Rect::new(Pose2::new(0.3, -0.2, 0.35), 2.0, 1.2);
        for _ in 0..5 {
            // convex quad from four sorted angles
            let mut angles: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            angles.sort_by(f64::total_cmp);
            let quad: Vec<Point2> = angles
                .iter()
                .map(|&a| {
                    let r = rng.random_range(1.5..3.0);
                    Point2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let Ok(poly) = Polygon::new(quad) else { continue };
            let area: f64 = clip_polygon_to_rect(&poly, &rect).iter().map(Polygon::area).sum();
            // 1000×1000 grid over [-3,3]²
            let n = 1000;
            let cell = 6.0 / n as f64;
            let mut count = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let p = Point2::new(-3.0 + (i as f64 + 0.5) * cell, -3.0 + (j as f64 + 0.5) * cell);
                    if rect.contains(p) && poly.contains(p) {
                        count += 1;
                    }
                }
            }
            let oracle = count as f64 * cell * cell;
            assert!((area - oracle).abs() / oracle < 0.01, "{area} vs {oracle}");
            assert!(area <= poly.area().min(rect.area()) + 1e-9);
        }
    }

    #[test]
    fn densify_bounds_spacing() {
        let d = densify(&pts(&[(0.0, 0.0), (2.2, 0.0), (2.2, 0.1)]), 0.5);
        assert!(d.windows(2).all(|w| w[0].dist(w[1]) <= 0.5 + 1e-12));
        assert_eq!(d.first(), Some(&Point2::new(0.0, 0.0)));
        assert_eq!(d.last(), Some(&Point2::new(2.2, 0.1)));
    }
}
