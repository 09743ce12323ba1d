//! Detection AP over Chamfer thresholds, CLEAR-MOT tracking scores, and the
//! pooled global-map Chamfer distance.
//!
//! All Chamfer distances here are taken between instance boundaries densified
//! to [`EvalConfig::densify`] meters, so they do not depend on how many
//! vertices a producer chose to emit.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_matching;
use crate::geometry::{chamfer_distance, Point2};
use crate::instance::{MapClass, MapInstance};
use crate::mapstore::GlobalMap;

/// Chamfer distance charged to a class that the prediction lacks entirely.
pub const MISSING_CLASS_CD: f64 = 10.0;
pub const LARGE_RANGE_THRESHOLDS: [f64; 3] = [1.0, 1.5, 2.0];
pub const SMALL_RANGE_THRESHOLDS: [f64; 3] = [0.5, 1.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ApMatching {
    /// Predictions claim the nearest free GT in descending score order.
    #[default]
    Greedy,
    /// Per-frame distance-optimal assignment within the threshold.
    Hungarian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub mot_threshold: f64,
    pub densify: f64,
    pub ap_matching: ApMatching,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { thresholds: LARGE_RANGE_THRESHOLDS.to_vec(), mot_threshold: 1.5, densify: 0.5, ap_matching: ApMatching::Greedy }
    }
}

fn dense(inst: &MapInstance, spacing: f64) -> Vec<Point2> {
    inst.shape.dense_points(spacing)
}

/// Same-class Chamfer distances between predictions and GT of one frame,
/// indexed `[pred][gt]`; cross-class pairs are infinite.
fn frame_distances(pred: &[MapInstance], gt: &[MapInstance], spacing: f64) -> Vec<Vec<f64>> {
    let pd: Vec<_> = pred.iter().map(|p| dense(p, spacing)).collect();
    let gd: Vec<_> = gt.iter().map(|g| dense(g, spacing)).collect();
    pred.iter()
        .enumerate()
        .map(|(i, p)| {
            gt.iter()
                .enumerate()
                .map(|(j, g)| {
                    if p.class == g.class {
                        chamfer_distance(&pd[i], &gd[j]).expect("non-empty shapes")
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub ap: f64,
    /// AP at each threshold, in the configured order.
    pub per_threshold: Vec<f64>,
    pub n_gt: usize,
    pub n_pred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub thresholds: Vec<f64>,
    pub per_class: BTreeMap<MapClass, ClassAp>,
    pub map: f64,
}

/// Area under the all-point interpolated precision/recall curve for
/// predictions already sorted by descending score.
pub fn average_precision(is_tp: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 || is_tp.is_empty() {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(is_tp.len());
    let mut precision = Vec::with_capacity(is_tp.len());
    let mut tp = 0usize;
    for (k, &hit) in is_tp.iter().enumerate() {
        tp += usize::from(hit);
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// Per-class AP over frame-aligned prediction and GT streams (both in the
/// same frame per index). Class AP is the mean over thresholds, mAP the mean
/// over classes that have GT.
pub fn instance_ap(pred: &[Vec<MapInstance>], gt: &[Vec<MapInstance>], config: &EvalConfig) -> ApReport {
    assert_eq!(pred.len(), gt.len(), "streams must be frame-aligned");
    let dists: Vec<Vec<Vec<f64>>> = pred.iter().zip(gt).map(|(p, g)| frame_distances(p, g, config.densify)).collect();

    let mut per_class = BTreeMap::new();
    for class in MapClass::ALL {
        let n_gt: usize = gt.iter().map(|f| f.iter().filter(|g| g.class == class).count()).sum();
        if n_gt == 0 {
            continue;
        }
        // (score, frame, index), best first; ties broken by position
        let mut order: Vec<(f64, usize, usize)> = pred
            .iter()
            .enumerate()
            .flat_map(|(f, frame)| {
                frame.iter().enumerate().filter(|(_, p)| p.class == class).map(move |(i, p)| (p.score, f, i))
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let per_threshold: Vec<f64> = config
            .thresholds
            .iter()
            .map(|&thr| {
                let hits = match config.ap_matching {
                    ApMatching::Greedy => greedy_hits(&order, &dists, gt, thr),
                    ApMatching::Hungarian => hungarian_hits(&order, &dists, pred, gt, class, thr),
                };
                average_precision(&hits, n_gt)
            })
            .collect();
        let ap = per_threshold.iter().sum::<f64>() / per_threshold.len().max(1) as f64;
        per_class.insert(class, ClassAp { ap, per_threshold, n_gt, n_pred: order.len() });
    }
    let map = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().map(|c| c.ap).sum::<f64>() / per_class.len() as f64
    };
    ApReport { thresholds: config.thresholds.clone(), per_class, map }
}

fn greedy_hits(order: &[(f64, usize, usize)], dists: &[Vec<Vec<f64>>], gt: &[Vec<MapInstance>], thr: f64) -> Vec<bool> {
    let mut taken: Vec<Vec<bool>> = gt.iter().map(|f| vec![false; f.len()]).collect();
    order
        .iter()
        .map(|&(_, f, i)| {
            let best = dists[f][i]
                .iter()
                .enumerate()
                .filter(|&(j, &d)| !taken[f][j] && d < thr)
                .min_by(|a, b| a.1.total_cmp(b.1));
            match best {
                Some((j, _)) => {
                    taken[f][j] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

fn hungarian_hits(
    order: &[(f64, usize, usize)],
    dists: &[Vec<Vec<f64>>],
    pred: &[Vec<MapInstance>],
    gt: &[Vec<MapInstance>],
    class: MapClass,
    thr: f64,
) -> Vec<bool> {
    let mut matched: Vec<Vec<bool>> = pred.iter().map(|f| vec![false; f.len()]).collect();
    for f in 0..pred.len() {
        let pi: Vec<usize> = (0..pred[f].len()).filter(|&i| pred[f][i].class == class).collect();
        let gj: Vec<usize> = (0..gt[f].len()).filter(|&j| gt[f][j].class == class).collect();
        for (r, _) in gated_assignment(&pi, &gj, |i, j| dists[f][i][j], thr) {
            matched[f][pi[r]] = true;
        }
    }
    order.iter().map(|&(_, f, i)| matched[f][i]).collect()
}

/// Optimal one-to-one matching of `rows × cols` under `dist < gate`, returning
/// local index pairs. Each accepted pair is worth `gate − dist`, so more pairs
/// win first and smaller distances break ties.
fn gated_assignment(rows: &[usize], cols: &[usize], dist: impl Fn(usize, usize) -> f64, gate: f64) -> Vec<(usize, usize)> {
    let (n, m) = (rows.len(), cols.len());
    let mut weights = vec![0.0; n * m];
    let mut eligible = vec![false; n * m];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            let d = dist(i, j);
            if d < gate {
                weights[r * m + c] = gate - d;
                eligible[r * m + c] = true;
            }
        }
    }
    max_weight_matching(&weights, &eligible, n, m)
}

/// Additive CLEAR-MOT tallies; sum across scenes before taking ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MotCounts {
    pub gt: usize,
    pub matches: usize,
    pub false_positives: usize,
    pub misses: usize,
    pub id_switches: usize,
    pub distance_sum: f64,
}

impl MotCounts {
    pub fn add(&mut self, o: &MotCounts) {
        self.gt += o.gt;
        self.matches += o.matches;
        self.false_positives += o.false_positives;
        self.misses += o.misses;
        self.id_switches += o.id_switches;
        self.distance_sum += o.distance_sum;
    }

    pub fn mota(&self) -> f64 {
        if self.gt == 0 {
            return if self.false_positives == 0 { 1.0 } else { f64::NEG_INFINITY };
        }
        1.0 - (self.misses + self.false_positives + self.id_switches) as f64 / self.gt as f64
    }

    /// Mean Chamfer distance of matched pairs; 0 with no matches.
    pub fn motp(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.distance_sum / self.matches as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMot {
    pub counts: MotCounts,
    pub mota: f64,
    pub motp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    pub match_threshold: f64,
    pub per_class: BTreeMap<MapClass, ClassMot>,
    pub total: ClassMot,
}

impl MotReport {
    pub fn from_counts(match_threshold: f64, counts: BTreeMap<MapClass, MotCounts>) -> Self {
        let mut total = MotCounts::default();
        for c in counts.values() {
            total.add(c);
        }
        let wrap = |c: MotCounts| ClassMot { counts: c, mota: c.mota(), motp: c.motp() };
        MotReport {
            match_threshold,
            per_class: counts.into_iter().map(|(k, c)| (k, wrap(c))).collect(),
            total: wrap(total),
        }
    }
}

/// CLEAR-MOT tallies per class. GT instances must carry IDs; a prediction
/// without an ID never continues an identity.
pub fn clear_mot_counts(pred: &[Vec<MapInstance>], gt: &[Vec<MapInstance>], config: &EvalConfig) -> BTreeMap<MapClass, MotCounts> {
    assert_eq!(pred.len(), gt.len(), "streams must be frame-aligned");
    let thr = config.mot_threshold;
    let mut counts: BTreeMap<MapClass, MotCounts> = BTreeMap::new();
    // gt id -> prediction id it was last matched to
    let mut last_match: HashMap<(MapClass, u64), Option<u64>> = HashMap::new();

    for (pf, gf) in pred.iter().zip(gt) {
        let dists = frame_distances(pf, gf, config.densify);
        for class in MapClass::ALL {
            let pi: Vec<usize> = (0..pf.len()).filter(|&i| pf[i].class == class).collect();
            let gj: Vec<usize> = (0..gf.len()).filter(|&j| gf[j].class == class).collect();
            if pi.is_empty() && gj.is_empty() {
                continue;
            }
            let c = counts.entry(class).or_default();
            c.gt += gj.len();

            let mut pred_used = vec![false; pi.len()];
            let mut gt_used = vec![false; gj.len()];
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            // keep last frame's correspondences that are still within the gate
            for (c_idx, &j) in gj.iter().enumerate() {
                let Some(gid) = gf[j].id else { continue };
                let Some(Some(pid)) = last_match.get(&(class, gid)) else { continue };
                if let Some(r) = pi.iter().position(|&i| pf[i].id == Some(*pid) && dists[i][j] < thr) {
                    if !pred_used[r] {
                        pred_used[r] = true;
                        gt_used[c_idx] = true;
                        pairs.push((r, c_idx));
                    }
                }
            }
            let free_p: Vec<usize> = (0..pi.len()).filter(|&r| !pred_used[r]).collect();
            let free_g: Vec<usize> = (0..gj.len()).filter(|&k| !gt_used[k]).collect();
            for (a, b) in gated_assignment(&free_p, &free_g, |r, k| dists[pi[r]][gj[k]], thr) {
                pairs.push((free_p[a], free_g[b]));
            }

            for &(r, k) in &pairs {
                let (i, j) = (pi[r], gj[k]);
                c.matches += 1;
                c.distance_sum += dists[i][j];
                if let Some(gid) = gf[j].id {
                    let prev = last_match.insert((class, gid), pf[i].id);
                    if let Some(prev) = prev {
                        if prev.is_none() || prev != pf[i].id {
                            c.id_switches += 1;
                        }
                    }
                }
            }
            c.misses += gj.len() - pairs.len();
            c.false_positives += pi.len() - pairs.len();
        }
    }
    counts
}

pub fn clear_mot(pred: &[Vec<MapInstance>], gt: &[Vec<MapInstance>], config: &EvalConfig) -> MotReport {
    MotReport::from_counts(config.mot_threshold, clear_mot_counts(pred, gt, config))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdReport {
    pub per_class: BTreeMap<MapClass, f64>,
    pub mcd: f64,
}

/// Pooled per-class Chamfer distance between two maps. Classes missing from
/// the GT are skipped; a GT class with no predicted instance scores
/// [`MISSING_CLASS_CD`].
pub fn global_map_cd(pred: &GlobalMap, gt: &GlobalMap, spacing: f64) -> CdReport {
    let pool = |m: &GlobalMap, c: MapClass| -> Vec<Point2> { m.of_class(c).flat_map(|i| i.shape.dense_points(spacing)).collect() };
    let mut per_class = BTreeMap::new();
    for class in MapClass::ALL {
        let g = pool(gt, class);
        if g.is_empty() {
            continue;
        }
        let p = pool(pred, class);
        let cd = if p.is_empty() { MISSING_CLASS_CD } else { chamfer_distance(&p, &g).expect("non-empty pools") };
        per_class.insert(class, cd);
    }
    let mcd = if per_class.is_empty() { 0.0 } else { per_class.values().sum::<f64>() / per_class.len() as f64 };
    CdReport { per_class, mcd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ap: Option<ApReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mot: Option<MotReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cd: Option<CdReport>,
}

impl EvalReport {
    /// Fixed-width summary table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14}{:>10}{:>10}{:>10}{:>8}{:>10}", "class", "AP", "MOTA", "MOTP", "IDS", "CD");
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        for class in MapClass::ALL {
            let ap = self.ap.as_ref().and_then(|r| r.per_class.get(&class)).map(|c| c.ap);
            let mot = self.mot.as_ref().and_then(|r| r.per_class.get(&class));
            let cd = self.cd.as_ref().and_then(|r| r.per_class.get(&class)).copied();
            if ap.is_none() && mot.is_none() && cd.is_none() {
                continue;
            }
            let _ = writeln!(
                out,
                "{:<14}{:>10}{:>10}{:>10}{:>8}{:>10}",
                class.as_str(),
                fmt(ap),
                fmt(mot.map(|m| m.mota)),
                fmt(mot.map(|m| m.motp)),
                mot.map_or_else(|| "-".to_string(), |m| m.counts.id_switches.to_string()),
                fmt(cd)
            );
        }
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10}{:>8}{:>10}",
            "overall",
            fmt(self.ap.as_ref().map(|r| r.map)),
            fmt(self.mot.as_ref().map(|r| r.total.mota)),
            fmt(self.mot.as_ref().map(|r| r.total.motp)),
            self.mot.as_ref().map_or_else(|| "-".to_string(), |r| r.total.counts.id_switches.to_string()),
            fmt(self.cd.as_ref().map(|r| r.mcd))
        );
        out
    }
}
