//! Boolean union of two simple polygons.
//!
//! Both boundaries are split at every mutual intersection, sub-edges that lie
//! inside the other polygon are discarded, and the outer boundary is traced
//! counter-clockwise from the lowest vertex, always taking the right-most
//! outgoing edge at junctions.

use thiserror::Error;

use crate::geometry::{point_in_ring, ring_is_simple, signed_area, Containment, Point2, Polygon};

/// Tolerance for on-boundary classification and vertex snapping.
pub const UNION_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolygonError {
    #[error("polygon is not simple")]
    NonSimplePolygon,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnionResult {
    Merged(Polygon),
    /// The interiors do not overlap; no single simple outline exists.
    Disjoint,
}

pub fn polygon_area(p: &Polygon) -> f64 {
    signed_area(p.ring())
}

/// Outer boundary of `a ∪ b`, or [`UnionResult::Disjoint`] when the two only
/// touch or do not meet at all.
pub fn polygon_union(a: &Polygon, b: &Polygon) -> Result<UnionResult, PolygonError> {
    if !ring_is_simple(a.ring()) || !ring_is_simple(b.ring()) {
        return Err(PolygonError::NonSimplePolygon);
    }
    // fixed operand order makes the floating-point path independent of argument order
    let (first, second) = if canonical_key(a) <= canonical_key(b) { (a, b) } else { (b, a) };
    Ok(union_ordered(first, second))
}

fn canonical_key(p: &Polygon) -> Vec<(u64, u64)> {
    let ring = rotate_to_lowest(p.ring());
    ring.iter().map(|q| (q.x.to_bits(), q.y.to_bits())).collect()
}

/// Rotation of the ring starting at the lowest (then left-most) vertex.
fn rotate_to_lowest(ring: &[Point2]) -> Vec<Point2> {
    let start = lowest_index(ring);
    ring[start..].iter().chain(ring[..start].iter()).copied().collect()
}

fn lowest_index(points: &[Point2]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        let b = points[best];
        if p.y < b.y || (p.y == b.y && p.x < b.x) {
            best = i;
        }
    }
    best
}

struct VertexPool {
    points: Vec<Point2>,
}

impl VertexPool {
    fn id(&mut self, p: Point2) -> usize {
        if let Some(i) = self.points.iter().position(|q| q.dist(p) <= UNION_EPS) {
            return i;
        }
        self.points.push(p);
        self.points.len() - 1
    }
}

#[derive(Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
}

/// Points (as pool ids) where edge `a0→a1` meets edge `b0→b1`.
fn edge_hits(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> Vec<Point2> {
    let r = a1 - a0;
    let s = b1 - b0;
    let denom = r.cross(s);
    let rl = r.norm();
    let sl = s.norm();
    let mut hits = Vec::new();
    if denom.abs() > UNION_EPS * rl * sl {
        let t = (b0 - a0).cross(s) / denom;
        let u = (b0 - a0).cross(r) / denom;
        let ta = UNION_EPS / rl;
        let tb = UNION_EPS / sl;
        if t >= -ta && t <= 1.0 + ta && u >= -tb && u <= 1.0 + tb {
            hits.push(a0.lerp(a1, t.clamp(0.0, 1.0)));
        }
        return hits;
    }
    // parallel: only collinear overlaps contribute
    if (b0 - a0).cross(r).abs() > UNION_EPS * rl {
        return hits;
    }
    for p in [b0, b1] {
        let t = (p - a0).dot(r) / (rl * rl);
        if t >= -UNION_EPS / rl && t <= 1.0 + UNION_EPS / rl {
            hits.push(p);
        }
    }
    for p in [a0, a1] {
        let u = (p - b0).dot(s) / (sl * sl);
        if u >= -UNION_EPS / sl && u <= 1.0 + UNION_EPS / sl {
            hits.push(p);
        }
    }
    hits
}

/// Splits every edge of `ring` at the given points lying on it.
fn split_ring(ring: &[Point2], cuts: &[Vec<Point2>], pool: &mut VertexPool) -> Vec<Edge> {
    let n = ring.len();
    let mut edges = Vec::new();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let d = b - a;
        let len_sq = d.dot(d);
        let mut params: Vec<(f64, Point2)> =
            cuts[i].iter().map(|&p| ((p - a).dot(d) / len_sq, p)).collect();
        params.push((0.0, a));
        params.push((1.0, b));
        params.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut ids: Vec<usize> = Vec::with_capacity(params.len());
        for (_, p) in params {
            let id = pool.id(p);
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        for w in ids.windows(2) {
            edges.push(Edge { from: w[0], to: w[1] });
        }
    }
    edges
}

fn boundary_edge_direction(ring: &[Point2], p: Point2) -> Option<Point2> {
    let n = ring.len();
    (0..n).find_map(|i| {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        (crate::geometry::point_segment_distance(p, a, b) <= UNION_EPS).then_some(b - a)
    })
}

/// Sub-edges of `own` that belong to the union boundary. Edges running along
/// the other boundary are kept only when `keep_shared` and both boundaries
/// travel the same way there.
fn keep_edges(edges: &[Edge], pool: &VertexPool, other: &[Point2], keep_shared: bool) -> Vec<Edge> {
    edges
        .iter()
        .copied()
        .filter(|e| {
            let a = pool.points[e.from];
            let b = pool.points[e.to];
            let mid = a.lerp(b, 0.5);
            match point_in_ring(other, mid) {
                Containment::Outside => true,
                Containment::Inside => false,
                Containment::Boundary => {
                    keep_shared
                        && boundary_edge_direction(other, mid).is_some_and(|d| d.dot(b - a) > 0.0)
                }
            }
        })
        .collect()
}

fn union_ordered(a: &Polygon, b: &Polygon) -> UnionResult {
    let (ra, rb) = (a.ring(), b.ring());
    let (na, nb) = (ra.len(), rb.len());
    let mut cuts_a = vec![Vec::new(); na];
    let mut cuts_b = vec![Vec::new(); nb];
    let mut touched = false;
    for i in 0..na {
        for j in 0..nb {
            let hits = edge_hits(ra[i], ra[(i + 1) % na], rb[j], rb[(j + 1) % nb]);
            if !hits.is_empty() {
                touched = true;
                cuts_a[i].extend_from_slice(&hits);
                cuts_b[j].extend_from_slice(&hits);
            }
        }
    }

    if !touched {
        if point_in_ring(ra, rb[0]) == Containment::Inside {
            return UnionResult::Merged(a.clone());
        }
        if point_in_ring(rb, ra[0]) == Containment::Inside {
            return UnionResult::Merged(b.clone());
        }
        return UnionResult::Disjoint;
    }

    let mut pool = VertexPool { points: Vec::new() };
    let edges_a = split_ring(ra, &cuts_a, &mut pool);
    let edges_b = split_ring(rb, &cuts_b, &mut pool);
    let mut kept = keep_edges(&edges_a, &pool, rb, true);
    kept.extend(keep_edges(&edges_b, &pool, ra, false));

    match trace_outer(&kept, &pool) {
        Some(ring) => {
            let area = signed_area(&ring);
            let max_input = a.area().max(b.area());
            // a pinched outline (touching at a point) revisits a vertex
            match Polygon::new(ring) {
                Ok(poly) if area + UNION_EPS >= max_input => UnionResult::Merged(poly),
                _ => UnionResult::Disjoint,
            }
        }
        None => UnionResult::Disjoint,
    }
}

fn trace_outer(edges: &[Edge], pool: &VertexPool) -> Option<Vec<Point2>> {
    if edges.is_empty() {
        return None;
    }
    let pts = &pool.points;
    let used_vertices: Vec<usize> = {
        let mut v: Vec<usize> = edges.iter().map(|e| e.from).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let start = *used_vertices.iter().min_by(|&&i, &&j| {
        let (p, q) = (pts[i], pts[j]);
        p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x))
    })?;

    let mut used = vec![false; edges.len()];
    let mut ring_ids = vec![start];
    // arriving at the lowest vertex as if from the right, heading left
    let mut incoming = Point2::new(-1.0, 0.0);
    let mut current = start;
    for _ in 0..=edges.len() {
        let candidates = edges.iter().enumerate().filter(|(k, e)| !used[*k] && e.from == current);
        let back = incoming * -1.0;
        // right-most turn: smallest CCW angle measured from the reversed incoming direction
        let (k, e) = candidates.min_by(|(_, e1), (_, e2)| {
            let a1 = ccw_angle(back, pts[e1.to] - pts[current]);
            let a2 = ccw_angle(back, pts[e2.to] - pts[current]);
            a1.total_cmp(&a2)
        })?;
        used[k] = true;
        incoming = pts[e.to] - pts[current];
        current = e.to;
        if current == start {
            return Some(drop_collinear(ring_ids.iter().map(|&i| pts[i]).collect()));
        }
        ring_ids.push(current);
    }
    None
}

/// Angle in (0, 2π] from `from` counter-clockwise to `to`.
fn ccw_angle(from: Point2, to: Point2) -> f64 {
    let a = from.cross(to).atan2(from.dot(to));
    if a <= 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

fn drop_collinear(ring: Vec<Point2>) -> Vec<Point2> {
    let n = ring.len();
    if n <= 3 {
        return ring;
    }
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let prev = ring[(i + n - 1) % n];
            let next = ring[(i + 1) % n];
            let u = ring[i] - prev;
            let v = next - ring[i];
            u.cross(v).abs() > UNION_EPS * u.norm() * v.norm() || u.dot(v) < 0.0
        })
        .collect();
    ring.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

/// Occupancy count of grid-cell centers inside any of `polys` over the
/// square window `[min, min + size]²` at `resolution × resolution` cells.
/// Intended as an independent area oracle.
pub fn rasterize_oracle(polys: &[&Polygon], min: Point2, size: f64, resolution: usize) -> usize {
    assert!(resolution >= 100, "resolution must be at least 100");
    let cell = size / resolution as f64;
    let mut count = 0;
    for i in 0..resolution {
        let x = min.x + (i as f64 + 0.5) * cell;
        for j in 0..resolution {
            let p = Point2::new(x, min.y + (j as f64 + 0.5) * cell);
            if polys.iter().any(|poly| raster_inside(poly.ring(), p)) {
                count += 1;
            }
        }
    }
    count
}

/// Even-odd crossing test with no boundary tolerance.
fn raster_inside(ring: &[Point2], p: Point2) -> bool {
    let n = ring.len();
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
    inside
}

/// Union of two raw rings; rings that do not form simple polygons are rejected.
pub fn union_rings(a: &[Point2], b: &[Point2]) -> Result<UnionResult, PolygonError> {
    let a = Polygon::new(a.to_vec()).map_err(|_| PolygonError::NonSimplePolygon)?;
    let b = Polygon::new(b.to_vec()).map_err(|_| PolygonError::NonSimplePolygon)?;
    polygon_union(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn square(x: f64, y: f64, s: f64) -> Polygon {
        poly(&[(x, y), (x + s, y), (x + s, y + s), (x, y + s)])
    }

    fn merged(r: UnionResult) -> Polygon {
        match r {
            UnionResult::Merged(p) => p,
            UnionResult::Disjoint => panic!("expected merged polygon"),
        }
    }

    #[test]
    fn area_examples() {
        assert_eq!(polygon_area(&square(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(polygon_area(&poly(&[(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)])), 2.0);
    }

    #[test]
    fn union_with_self_is_identity() {
        let a = poly(&[(0.0, 0.0), (3.0, 0.5), (2.5, 2.0), (0.5, 1.5)]);
        let u = merged(polygon_union(&a, &a).unwrap());
        assert_eq!(rotate_to_lowest(u.ring()), rotate_to_lowest(a.ring()));
    }

    #[test]
    fn offset_unit_squares() {
        let u = merged(polygon_union(&square(0.0, 0.0, 1.0), &square(0.5, 0.5, 1.0)).unwrap());
        assert!((u.area() - 1.75).abs() < 1e-12);
        assert_eq!(u.ring().len(), 8);
    }

    #[test]
    fn containment_returns_outer() {
        let outer = square(0.0, 0.0, 4.0);
        let inner = square(1.0, 1.0, 1.0);
        assert_eq!(merged(polygon_union(&outer, &inner).unwrap()), outer);
        assert_eq!(merged(polygon_union(&inner, &outer).unwrap()), outer);
    }

    #[test]
    fn disjoint_and_touching() {
        assert_eq!(polygon_union(&square(0.0, 0.0, 1.0), &square(3.0, 0.0, 1.0)).unwrap(), UnionResult::Disjoint);
        // corner contact only
        assert_eq!(polygon_union(&square(0.0, 0.0, 1.0), &square(1.0, 1.0, 1.0)).unwrap(), UnionResult::Disjoint);
    }

    #[test]
    fn shared_edge_merges_into_rectangle() {
        let u = merged(polygon_union(&square(0.0, 0.0, 1.0), &square(1.0, 0.0, 1.0)).unwrap());
        assert!((u.area() - 2.0).abs() < 1e-12);
        assert_eq!(u.ring().len(), 4);
    }

    #[test]
    fn vertex_on_edge() {
        let a = square(0.0, 0.0, 2.0);
        // two vertices land exactly on a's bottom and top edges
        let tri = poly(&[(1.0, 0.0), (3.0, 1.0), (1.0, 2.0)]);
        let u = merged(polygon_union(&a, &tri).unwrap());
        assert!((u.area() - 4.5).abs() < 1e-12, "{}", u.area());
        // a single shared vertex is not an overlap
        let apex = poly(&[(1.0, 2.0), (2.0, 3.0), (0.0, 3.0)]);
        assert_eq!(polygon_union(&a, &apex).unwrap(), UnionResult::Disjoint);
    }

    #[test]
    fn concave_union() {
        let c = poly(&[(0.0, 0.0), (3.0, 0.0), (3.0, 1.0), (1.0, 1.0), (1.0, 2.0), (3.0, 2.0), (3.0, 3.0), (0.0, 3.0)]);
        let bar = poly(&[(2.0, -1.0), (2.5, -1.0), (2.5, 4.0), (2.0, 4.0)]);
        let u = merged(polygon_union(&c, &bar).unwrap());
        // c area 7, bar 2.5, overlap 1.0; the pocket between becomes a hole and is dropped
        let hole = 1.0;
        assert!((u.area() - (7.0 + 2.5 - 1.0 + hole)).abs() < 1e-9, "{}", u.area());
    }

    #[test]
    fn non_simple_rejected() {
        let bow: Vec<Point2> = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| Point2::new(x, y))
            .collect();
        let sq = square(0.0, 0.0, 1.0);
        assert_eq!(union_rings(&bow, sq.ring()), Err(PolygonError::NonSimplePolygon));
        assert_eq!(union_rings(sq.ring(), &bow), Err(PolygonError::NonSimplePolygon));
    }

    #[test]
    fn raster_examples() {
        let unit = square(0.0, 0.0, 1.0);
        let n = rasterize_oracle(&[&unit], Point2::new(0.0, 0.0), 1.0, 1000);
        assert_eq!(n, 1_000_000);
        let half = poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let frac = rasterize_oracle(&[&half], Point2::new(0.0, 0.0), 1.0, 1000) as f64 / 1e6;
        assert!((frac - 0.5).abs() <= 0.002);
    }
}
