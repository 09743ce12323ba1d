//! Smoothing-parameter sweep over merge fixtures with known true curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{merge_polylines, SmoothingFitParams};
use crate::geometry::{chamfer_distance, densify, Point2, Polyline};
use crate::instance::MapClass;

/// Spacing used to densify both curves before measuring fit error.
pub const SWEEP_DENSIFY: f64 = 0.1;

/// One merge problem: a stored polyline and an overlapping detection of the
/// same true curve.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub class: MapClass,
    pub truth: Vec<Point2>,
    pub global: Polyline,
    pub det: Polyline,
}

impl SweepCase {
    pub fn error(&self, params: &SmoothingFitParams) -> Option<f64> {
        let merged = merge_polylines(&self.global, &self.det, params).ok()?;
        let fit = densify(merged.points(), SWEEP_DENSIFY);
        let truth = densify(&self.truth, SWEEP_DENSIFY);
        chamfer_distance(&fit, &truth).ok()
    }
}

#[derive(Debug, Clone)]
pub struct SweepFixture {
    pub cases: Vec<SweepCase>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: f64,
    /// Mean fit error per class over the fixture's cases, meters.
    pub error: BTreeMap<MapClass, f64>,
}

impl SweepRow {
    /// Mean over classes.
    pub fn mean_error(&self) -> f64 {
        if self.error.is_empty() {
            return f64::NAN;
        }
        self.error.values().sum::<f64>() / self.error.len() as f64
    }
}

fn sine_curve(x0: f64, x1: f64, step: f64, amp: f64, wavelength: f64) -> Vec<Point2> {
    let n = ((x1 - x0) / step).round() as usize;
    (0..=n)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / n as f64;
            Point2::new(x, amp * (std::f64::consts::TAU * x / wavelength).sin())
        })
        .collect()
}

fn jittered(points: &[Point2], noise: &Normal<f64>, rng: &mut ChaCha8Rng) -> Polyline {
    let pts = points.iter().map(|p| Point2::new(p.x + noise.sample(rng), p.y + noise.sample(rng))).collect();
    Polyline::from_points_dedup(pts).expect("jittered fixture stays non-degenerate")
}

impl SweepFixture {
    /// Sine-shaped dividers and boundaries observed twice with independent
    /// Gaussian jitter `sigma`: a stored part over x∈[0,40] and a detection
    /// over x∈[25,60], both sampled every meter. One case per class and seed.
    pub fn noisy_sine(sigma: f64, n_seeds: usize, base_seed: u64) -> Self {
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
        let shapes = [(MapClass::Divider, 1.5, 20.0), (MapClass::Boundary, 3.0, 40.0)];
        let mut cases = Vec::with_capacity(n_seeds * shapes.len());
        for k in 0..n_seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(k as u64));
            for &(class, amp, wavelength) in &shapes {
                let truth = sine_curve(0.0, 60.0, 0.05, amp, wavelength);
                let global = jittered(&sine_curve(0.0, 40.0, 1.0, amp, wavelength), &noise, &mut rng);
                let det = jittered(&sine_curve(25.0, 60.0, 1.0, amp, wavelength), &noise, &mut rng);
                cases.push(SweepCase { class, truth, global, det });
            }
        }
        Self { cases }
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Option<Vec<f64>> {
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    let [start, stop, step] = parts[..] else { return None };
    if !(start.is_finite() && stop.is_finite() && step > 0.0) || start < 0.0 || stop < start {
        return None;
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // snap to the decimal grid so 0:2:0.1 yields 0.3 rather than 0.30000000000000004
    Some((0..=n).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect())
}

/// Fit error per class for every `s` in the grid.
pub fn sweep_smoothing(cases: &[SweepCase], s_grid: &[f64], params: &SmoothingFitParams) -> Vec<SweepRow> {
    s_grid
        .iter()
        .map(|&s| {
            let p = params.with_s(s);
            let mut acc: BTreeMap<MapClass, (f64, usize)> = BTreeMap::new();
            for case in cases {
                if let Some(e) = case.error(&p) {
                    let slot = acc.entry(case.class).or_default();
                    slot.0 += e;
                    slot.1 += 1;
                }
            }
            let error = acc.into_iter().map(|(c, (sum, n))| (c, sum / n as f64)).collect();
            SweepRow { s, error }
        })
        .collect()
}

/// Row with the lowest mean error; ties keep the smaller `s`.
pub fn argmin(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().filter(|r| r.mean_error().is_finite()).min_by(|a, b| a.mean_error().total_cmp(&b.mean_error()))
}

/// Tab-separated table with columns `s`, `cd_divider`, `cd_boundary`, `cd_mean`.
pub fn rows_to_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("s\tcd_divider\tcd_boundary\tcd_mean\n");
    for r in rows {
        let cell = |c: MapClass| r.error.get(&c).map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}",
            r.s,
            cell(MapClass::Divider),
            cell(MapClass::Boundary),
            r.mean_error()
        );
    }
    out
}
