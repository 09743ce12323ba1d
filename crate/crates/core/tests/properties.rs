use ic_mapper::assignment::max_weight_matching;
use ic_mapper::association::{associate_frame, geometric_affinity, optimal_match, threshold_filter, AffinityMatrix, AssociationConfig, TrackBuffer};
use ic_mapper::curvefit::{fit_smoothing_spline, merge_polylines, SmoothingFitParams};
use ic_mapper::geometry::{chamfer_distance, FrameDirection, Point2, Polygon, Polyline, Pose2};
use ic_mapper::instance::{MapClass, MapInstance};
use ic_mapper::polygon::{polygon_union, UnionResult};
use proptest::prelude::*;

fn matrix(max: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(0.0..1.0f64, r * c)))
}

fn brute(w: &[f64], ok: &[bool], rows: usize, cols: usize, r: usize, used: &mut [bool]) -> f64 {
    if r == rows {
        return 0.0;
    }
    let mut best = brute(w, ok, rows, cols, r + 1, used);
    for c in 0..cols {
        if !used[c] && ok[r * cols + c] {
            used[c] = true;
            best = best.max(w[r * cols + c] + brute(w, ok, rows, cols, r + 1, used));
            used[c] = false;
        }
    }
    best
}

/// x-monotone wiggly polyline.
fn polyline() -> impl Strategy<Value = Vec<Point2>> {
    (4usize..25, -20.0..20.0f64, 0.0..2.0f64, 0.1..1.0f64)
        .prop_map(|(n, y0, amp, freq)| (0..n).map(|i| Point2::new(i as f64 * 1.5, y0 + amp * (i as f64 * freq).sin())).collect())
}

fn pose() -> impl Strategy<Value = Pose2> {
    (-500.0..500.0f64, -500.0..500.0f64, -3.1..3.1f64).prop_map(|(x, y, t)| Pose2::new(x, y, t))
}

fn quad(cx: f64, cy: f64) -> impl Strategy<Value = Polygon> {
    (prop::collection::vec(0.0..std::f64::consts::TAU, 4), 1.0..3.0f64, 1.0..3.0f64).prop_filter_map(
        "degenerate quad",
        move |(mut ang, a, b)| {
            ang.sort_by(f64::total_cmp);
            let ring = ang.iter().map(|t| Point2::new(cx + a * t.cos(), cy + b * t.sin())).collect();
            Polygon::new(ring).ok()
        },
    )
}

fn same_ring(a: &[Point2], b: &[Point2]) -> bool {
    a.len() == b.len() && (0..a.len()).any(|k| (0..a.len()).all(|i| a[(i + k) % a.len()] == b[i]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn matching_equals_brute_force((rows, cols, w) in matrix(5), mask in prop::collection::vec(any::<bool>(), 25)) {
        let ok: Vec<bool> = (0..rows * cols).map(|k| mask[k]).collect();
        let pairs = max_weight_matching(&w, &ok, rows, cols);
        let total: f64 = pairs.iter().map(|&(i, j)| w[i * cols + j]).sum();
        let best = brute(&w, &ok, rows, cols, 0, &mut vec![false; cols]);
        prop_assert!((total - best).abs() < 1e-9, "{total} vs {best}");
        prop_assert!(pairs.iter().all(|&(i, j)| ok[i * cols + j]));
    }

    #[test]
    fn raising_theta_never_adds_matches((rows, cols, w) in matrix(6), t1 in 0.0..0.9f64, dt in 0.0..0.5f64) {
        let h = AffinityMatrix::new(rows, cols, w).unwrap();
        let lo = optimal_match(&threshold_filter(&h, t1)).len();
        let hi = optimal_match(&threshold_filter(&h, (t1 + dt).min(0.99))).len();
        prop_assert!(hi <= lo);
    }

    #[test]
    fn ids_are_conserved(frames in prop::collection::vec(prop::collection::vec((0usize..3, -20.0..20.0f64), 0..6), 1..6)) {
        let mut buffer = TrackBuffer::new();
        let mut seen = std::collections::BTreeSet::new();
        let config = AssociationConfig { w_feat: 0.0, w_geo: 1.0, ..AssociationConfig::default() };
        for (t, dets) in frames.iter().enumerate() {
            let dets: Vec<MapInstance> = dets
                .iter()
                .map(|&(c, y)| {
                    let class = [MapClass::Divider, MapClass::Boundary, MapClass::Divider][c];
                    MapInstance::new(class, vec![Point2::new(0.0, y), Point2::new(10.0, y)]).unwrap()
                })
                .collect();
            let n = dets.len();
            let before = buffer.next_id;
            let out = associate_frame(buffer, dets, &Pose2::default(), t as u64, &config).unwrap();
            prop_assert_eq!(out.issued_ids.len(), n - out.matches.len());
            prop_assert_eq!(out.buffer.next_id, before + out.issued_ids.len() as u64);
            for id in &out.issued_ids {
                prop_assert!(seen.insert(*id), "id {} reused", id);
            }
            buffer = out.buffer;
        }
    }

    #[test]
    fn affinity_is_rigid_invariant(a in polyline(), b in polyline(), p in pose()) {
        let da = MapInstance::new(MapClass::Divider, a).unwrap();
        let db = MapInstance::new(MapClass::Divider, b).unwrap();
        let h = geometric_affinity(std::slice::from_ref(&da), std::slice::from_ref(&db), 2.0).unwrap();
        let moved = |i: &MapInstance| i.transformed(&p, FrameDirection::EgoToWorld);
        let g = geometric_affinity(&[moved(&da)], &[moved(&db)], 2.0).unwrap();
        prop_assert!((h.get(0, 0) - g.get(0, 0)).abs() < 1e-9);
    }

    #[test]
    fn chamfer_symmetric_and_rigid(a in polyline(), b in polyline(), p in pose()) {
        let ab = chamfer_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, chamfer_distance(&b, &a).unwrap());
        let ta: Vec<Point2> = a.iter().map(|&q| p.to_world(q)).collect();
        let tb: Vec<Point2> = b.iter().map(|&q| p.to_world(q)).collect();
        prop_assert!((chamfer_distance(&ta, &tb).unwrap() - ab).abs() < 1e-9);
    }

    #[test]
    fn merge_commutes_with_rigid_motion(a in polyline(), dy in -0.5..0.5f64, p in pose()) {
        let g = Polyline::new(a.clone()).unwrap();
        let d = Polyline::new(a.iter().map(|q| Point2::new(q.x + 7.0, q.y + dy)).collect()).unwrap();
        let params = SmoothingFitParams::default();
        let local = merge_polylines(&g, &d, &params).unwrap();
        let world = merge_polylines(
            &g.transformed(&p, FrameDirection::EgoToWorld),
            &d.transformed(&p, FrameDirection::EgoToWorld),
            &params,
        )
        .unwrap();
        let back = world.transformed(&p, FrameDirection::WorldToEgo);
        prop_assert!(chamfer_distance(local.points(), back.points()).unwrap() < 1e-6);
    }

    #[test]
    fn union_commutes(a in quad(0.0, 0.0), b in quad(1.0, 0.5)) {
        match (polygon_union(&a, &b).unwrap(), polygon_union(&b, &a).unwrap()) {
            (UnionResult::Merged(u), UnionResult::Merged(v)) => {
                prop_assert!(same_ring(u.ring(), v.ring()));
                prop_assert!(u.area() >= a.area().max(b.area()) - 1e-9);
            }
            (UnionResult::Disjoint, UnionResult::Disjoint) => {}
            _ => prop_assert!(false, "asymmetric union outcome"),
        }
    }

    #[test]
    fn transform_round_trip(points in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1000), p in pose()) {
        for (x, y) in points {
            let q = Point2::new(x, y);
            prop_assert!(p.to_ego(p.to_world(q)).dist(q) < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fit_is_continuous_in_s(a in polyline(), s in 0.05..3.0f64) {
        let params = SmoothingFitParams::default();
        let lo = fit_smoothing_spline(&a, &params.with_s(s)).unwrap();
        let hi = fit_smoothing_spline(&a, &params.with_s(s + 1e-4)).unwrap();
        prop_assert!(chamfer_distance(lo.points(), hi.points()).unwrap() < 1e-3);
    }
}
