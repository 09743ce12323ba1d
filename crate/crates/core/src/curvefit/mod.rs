//! Polyline merging: orientation fix and nearest-neighbor chaining of the
//! combined points, followed by a penalized least-squares B-spline fit and
//! arc-length resampling.
//!
//! The fit minimizes `Σ|C(u_i) − p_i|² + s·Σ|Δ²c_k|²` over control points
//! `c_k`, with chord-length parameters `u_i`. Larger `s` trades residual for a
//! straighter control polygon.

pub mod bspline;
pub mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dedup_consecutive, path_length, resample_points, Point2, Polyline};

pub use sweep::{argmin, parse_grid, rows_to_tsv, sweep_smoothing, SweepCase, SweepFixture, SweepRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveFitError {
    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("invalid fit parameters: {0}")]
    InvalidParams(String),
    #[error("spline system could not be solved")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingFitParams {
    /// Weight of the second-difference penalty.
    pub s: f64,
    pub degree: usize,
    /// Arc length between output points, meters.
    pub out_spacing: f64,
    pub min_points: usize,
    /// Chord length per control point, meters.
    pub control_spacing: f64,
    /// Fixed control-point count; overrides `control_spacing` when set.
    pub n_control: Option<usize>,
}

impl Default for SmoothingFitParams {
    fn default() -> Self {
        Self { s: 0.5, degree: 3, out_spacing: 1.0, min_points: 20, control_spacing: 2.0, n_control: None }
    }
}

impl SmoothingFitParams {
    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }

    pub fn validate(&self) -> Result<(), CurveFitError> {
        if !(self.s >= 0.0) {
            return Err(CurveFitError::InvalidParams(format!("s must be >= 0, got {}", self.s)));
        }
        if !(2..=3).contains(&self.degree) {
            return Err(CurveFitError::InvalidParams(format!("degree must be 2 or 3, got {}", self.degree)));
        }
        if !(self.out_spacing > 0.0) || !(self.control_spacing > 0.0) {
            return Err(CurveFitError::InvalidParams("spacings must be positive".into()));
        }
        if self.min_points < 2 {
            return Err(CurveFitError::InvalidParams("min_points must be at least 2".into()));
        }
        Ok(())
    }
}

/// Orders the union of both point sets along the curve they describe.
///
/// The detection is reversed when its chord opposes the global chord. The
/// walk starts at whichever end of the farthest-apart pair lies further back
/// along the global chord, repeatedly steps to the nearest unvisited point,
/// and finally relocates single points wherever that shortens the path.
pub fn reorder_concat(global: &Polyline, det: &Polyline) -> Vec<Point2> {
    let g_chord = global.last() - global.first();
    let d_chord = det.last() - det.first();
    let mut points: Vec<Point2> = global.points().to_vec();
    if g_chord.dot(d_chord) < 0.0 {
        points.extend(det.points().iter().rev());
    } else {
        points.extend_from_slice(det.points());
    }
    let axis = if g_chord.norm() > 0.0 { g_chord } else { d_chord };
    let mut path = greedy_chain(&points, axis);
    relocate_points(&mut path);
    path
}

fn farthest_pair(points: &[Point2]) -> (usize, usize) {
    let mut best = (0, 0, -1.0);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].dist_sq(points[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    (best.0, best.1)
}

fn greedy_chain(points: &[Point2], axis: Point2) -> Vec<Point2> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let (a, b) = farthest_pair(points);
    let start = if points[a].dot(axis) <= points[b].dot(axis) { a } else { b };
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(points[cur]);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for (k, p) in points.iter().enumerate() {
            if !visited[k] {
                let d = points[cur].dist_sq(*p);
                if d < best {
                    best = d;
                    next = k;
                }
            }
        }
        visited[next] = true;
        order.push(points[next]);
        cur = next;
    }
    order
}

/// Or-opt style repair: moves single interior points to the cheapest
/// insertion slot while that strictly shortens the path. Endpoints stay put.
fn relocate_points(path: &mut Vec<Point2>) {
    const MAX_PASSES: usize = 4;
    let gain_eps = 1e-9;
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        let mut k = 1;
        while k + 1 < path.len() {
            let (prev, p, next) = (path[k - 1], path[k], path[k + 1]);
            let removal_gain = prev.dist(p) + p.dist(next) - prev.dist(next);
            if removal_gain <= gain_eps {
                k += 1;
                continue;
            }
            // best slot between consecutive points of the path without p
            let mut best: Option<(usize, f64)> = None;
            for s in 0..path.len() - 1 {
                if s == k - 1 || s == k {
                    continue;
                }
                let (a, b) = (path[s], path[s + 1]);
                let cost = a.dist(p) + p.dist(b) - a.dist(b);
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some((s, cost));
                }
            }
            match best {
                Some((s, cost)) if cost + gain_eps < removal_gain => {
                    let pt = path.remove(k);
                    let slot = if s > k { s } else { s + 1 };
                    path.insert(slot, pt);
                    improved = true;
                }
                _ => k += 1,
            }
        }
        if !improved {
            break;
        }
    }
}

/// Chord-length parameters starting at 0.
fn chord_params(points: &[Point2]) -> Vec<f64> {
    let mut u = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    u.push(0.0);
    for w in points.windows(2) {
        acc += w[0].dist(w[1]);
        u.push(acc);
    }
    u
}

/// Length of the path through the points kept at least `step` apart; small
/// back-and-forth steps between interleaved inputs do not add to it.
fn thinned_length(points: &[Point2], step: f64) -> f64 {
    let mut total = 0.0;
    let mut anchor = points[0];
    for &p in &points[1..] {
        let d = anchor.dist(p);
        if d >= step {
            total += d;
            anchor = p;
        }
    }
    total + anchor.dist(points[points.len() - 1])
}

/// Fits a smoothing spline through ordered points and resamples it at
/// `out_spacing` (never fewer than `min_points` points).
pub fn fit_smoothing_spline(points: &[Point2], params: &SmoothingFitParams) -> Result<Polyline, CurveFitError> {
    params.validate()?;
    let needed = params.degree + 1;
    let distinct = dedup_consecutive(points.to_vec()).len();
    if distinct < needed {
        return Err(CurveFitError::InsufficientPoints { needed, got: distinct });
    }
    let u = chord_params(points);
    let n_data = points.len();
    // derived counts keep about two samples per knot span
    let n_ctrl = match params.n_control {
        Some(k) => k.clamp(needed, n_data),
        None => ((thinned_length(points, params.control_spacing) / params.control_spacing).round() as usize + 1)
            .clamp(needed, n_data.div_ceil(2).max(needed)),
    };

    let spline = bspline::penalized_fit(points, &u, n_ctrl, params.degree, params.s).ok_or(CurveFitError::Singular)?;

    let (t0, t1) = spline.domain();
    let dense_n = (10 * n_ctrl).max(200);
    let dense: Vec<Point2> =
        (0..dense_n).map(|i| spline.eval(t0 + (t1 - t0) * i as f64 / (dense_n - 1) as f64)).collect();
    let dense = dedup_consecutive(dense);
    if dense.len() < 2 {
        return Err(CurveFitError::InsufficientPoints { needed, got: dense.len() });
    }
    let curve_len = path_length(&dense);
    let count = ((curve_len / params.out_spacing).round() as usize + 1).max(params.min_points);
    Polyline::from_points_dedup(resample_points(&dense, count)).map_err(|_| CurveFitError::Singular)
}

/// Merges a detected polyline into its global counterpart.
pub fn merge_polylines(global: &Polyline, det: &Polyline, params: &SmoothingFitParams) -> Result<Polyline, CurveFitError> {
    let ordered = reorder_concat(global, det);
    fit_smoothing_spline(&ordered, params)
}
