//! Map element representation shared by tracking, merging, metrics and I/O.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{densify, FrameDirection, GeometryError, Point2, Polygon, Polyline, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapClass {
    Divider,
    Boundary,
    PedCrossing,
}

impl MapClass {
    pub const ALL: [MapClass; 3] = [MapClass::Divider, MapClass::Boundary, MapClass::PedCrossing];

    pub fn as_str(self) -> &'static str {
        match self {
            MapClass::Divider => "divider",
            MapClass::Boundary => "boundary",
            MapClass::PedCrossing => "ped_crossing",
        }
    }

    pub fn is_polyline(self) -> bool {
        !matches!(self, MapClass::PedCrossing)
    }
}

impl fmt::Display for MapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown map class `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for MapClass {
    type Err = UnknownClass;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "divider" => Ok(MapClass::Divider),
            "boundary" => Ok(MapClass::Boundary),
            "ped_crossing" => Ok(MapClass::PedCrossing),
            other => Err(UnknownClass(other.to_string())),
        }
    }
}

/// Geometry of a map element: open curve for lines, closed ring for crossings.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Line(Polyline),
    Area(Polygon),
}

impl Shape {
    /// Builds the shape required by `class` from raw points.
    pub fn for_class(class: MapClass, points: Vec<Point2>) -> Result<Shape, GeometryError> {
        if class.is_polyline() {
            Polyline::new(points).map(Shape::Line)
        } else {
            Polygon::new(points).map(Shape::Area)
        }
    }

    /// Vertices (ring vertices for polygons, without the closing point).
    pub fn points(&self) -> &[Point2] {
        match self {
            Shape::Line(l) => l.points(),
            Shape::Area(p) => p.ring(),
        }
    }

    /// Boundary as an open path; polygons repeat their first vertex.
    pub fn boundary_path(&self) -> Vec<Point2> {
        match self {
            Shape::Line(l) => l.points().to_vec(),
            Shape::Area(p) => p.closed_path(),
        }
    }

    /// Boundary densified so consecutive samples are at most `spacing` apart.
    pub fn dense_points(&self, spacing: f64) -> Vec<Point2> {
        let mut pts = densify(&self.boundary_path(), spacing);
        if matches!(self, Shape::Area(_)) {
            pts.pop();
        }
        pts
    }

    pub fn transformed(&self, pose: &Pose2, direction: FrameDirection) -> Shape {
        match self {
            Shape::Line(l) => Shape::Line(l.transformed(pose, direction)),
            Shape::Area(p) => Shape::Area(p.transformed(pose, direction)),
        }
    }

    pub fn as_polyline(&self) -> Option<&Polyline> {
        match self {
            Shape::Line(l) => Some(l),
            Shape::Area(_) => None,
        }
    }

    pub fn as_polygon(&self) -> Option<&Polygon> {
        match self {
            Shape::Area(p) => Some(p),
            Shape::Line(_) => None,
        }
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        bounding_box(self.points())
    }
}

pub fn bounding_box(points: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Unit-norm appearance vector attached to a detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("embedding is empty or has zero norm")]
    ZeroNorm,
    #[error("embedding norm {0} is not 1")]
    NotUnit(f64),
}

pub const EMBEDDING_NORM_TOL: f64 = 1e-6;

impl Embedding {
    /// Accepts a vector whose norm is already 1 within [`EMBEDDING_NORM_TOL`].
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        let norm = l2(&values);
        if values.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroNorm);
        }
        if (norm - 1.0).abs() > EMBEDDING_NORM_TOL {
            return Err(EmbeddingError::NotUnit(norm));
        }
        Ok(Self(values))
    }

    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbeddingError> {
        let norm = l2(&values);
        if values.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(EmbeddingError::ZeroNorm);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        (dot / (l2(&self.0) * l2(&other.0))).clamp(-1.0, 1.0)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One vectorized map element. Frame (ego or world) depends on context.
#[derive(Debug, Clone, PartialEq)]
pub struct MapInstance {
    pub class: MapClass,
    pub shape: Shape,
    pub score: f64,
    pub id: Option<u64>,
    pub embedding: Option<Embedding>,
}

impl MapInstance {
    pub fn new(class: MapClass, points: Vec<Point2>) -> Result<Self, GeometryError> {
        Ok(Self { class, shape: Shape::for_class(class, points)?, score: 1.0, id: None, embedding: None })
    }

    pub fn from_shape(class: MapClass, shape: Shape) -> Self {
        debug_assert_eq!(class.is_polyline(), matches!(shape, Shape::Line(_)));
        Self { class, shape, score: 1.0, id: None, embedding: None }
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = Some(id);
        self
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn with_embedding(mut self, e: Embedding) -> Self {
        self.embedding = Some(e);
        self
    }

    pub fn points(&self) -> &[Point2] {
        self.shape.points()
    }

    pub fn transformed(&self, pose: &Pose2, direction: FrameDirection) -> MapInstance {
        MapInstance { shape: self.shape.transformed(pose, direction), ..self.clone() }
    }
}
