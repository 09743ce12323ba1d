//! Clamped B-spline machinery: knot placement, basis evaluation, and a
//! penalized least-squares solve on the banded normal equations.

use crate::geometry::Point2;

/// Clamped knot vector for `n_ctrl` control points of degree `p` over the
/// (non-decreasing) data parameters `u`. With as many control points as data
/// sites the interior knots average `p` consecutive parameters, otherwise
/// they are spread so every knot span receives data.
pub fn place_knots(u: &[f64], n_ctrl: usize, p: usize) -> Vec<f64> {
    let n_data = u.len();
    let start = u[0];
    let end = u[n_data - 1];
    let mut knots = Vec::with_capacity(n_ctrl + p + 1);
    knots.extend(std::iter::repeat_n(start, p + 1));
    let interior = n_ctrl - p - 1;
    if n_ctrl == n_data {
        for j in 1..=interior {
            let avg = u[j..j + p].iter().sum::<f64>() / p as f64;
            knots.push(avg);
        }
    } else {
        let d = n_data as f64 / (n_ctrl - p) as f64;
        for j in 1..=interior {
            let jd = j as f64 * d;
            let i = jd.floor() as usize;
            let alpha = jd - i as f64;
            let i = i.clamp(1, n_data - 1);
            knots.push((1.0 - alpha) * u[i - 1] + alpha * u[i]);
        }
    }
    knots.extend(std::iter::repeat_n(end, p + 1));
    knots
}

/// Knot span index `k` with `knots[k] <= t < knots[k+1]`, clamped to the last
/// non-empty span at the right end.
pub fn find_span(knots: &[f64], n_ctrl: usize, p: usize, t: f64) -> usize {
    if t >= knots[n_ctrl] {
        // last span with positive width
        let mut k = n_ctrl - 1;
        while k > p && knots[k] >= knots[k + 1] {
            k -= 1;
        }
        return k;
    }
    if t <= knots[p] {
        let mut k = p;
        while k + 1 < n_ctrl && knots[k + 1] <= t {
            k += 1;
        }
        return k;
    }
    let (mut lo, mut hi) = (p, n_ctrl);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// The `p + 1` non-vanishing basis values at `t` for span `k`; entry `r`
/// belongs to control point `k - p + r`.
pub fn basis_funs(knots: &[f64], k: usize, p: usize, t: f64) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = t - knots[k + 1 - j];
        right[j] = knots[k + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

#[derive(Debug, Clone)]
pub struct BSpline {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub ctrl: Vec<Point2>,
}

impl BSpline {
    pub fn eval(&self, t: f64) -> Point2 {
        let n = self.ctrl.len();
        let k = find_span(&self.knots, n, self.degree, t);
        let b = basis_funs(&self.knots, k, self.degree, t);
        let mut acc = Point2::new(0.0, 0.0);
        for (r, w) in b.iter().enumerate() {
            acc = acc + self.ctrl[k - self.degree + r] * *w;
        }
        acc
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.ctrl.len()])
    }
}

/// Symmetric positive (semi-)definite band matrix, lower band stored row-wise.
struct BandMatrix {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + (j + bw - i)] holds A[i][j] for i - bw <= j <= i
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// In-place Cholesky `A = L Lᵀ`; `false` if a pivot is not positive.
    fn cholesky(&mut self) -> bool {
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.bw);
            for j in j_lo..=i {
                let mut sum = self.get(i, j);
                let k_lo = j_lo.max(j.saturating_sub(self.bw));
                for k in k_lo..j {
                    sum -= self.get(i, k) * self.get(j, k);
                }
                let slot = self.idx(i, j);
                if i == j {
                    if !(sum > 0.0) {
                        return false;
                    }
                    self.data[slot] = sum.sqrt();
                } else {
                    self.data[slot] = sum / self.get(j, j);
                }
            }
        }
        true
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let mut sum = b[i];
            for k in i.saturating_sub(self.bw)..i {
                sum -= self.get(i, k) * b[k];
            }
            b[i] = sum / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let mut sum = b[i];
            for k in (i + 1)..self.n.min(i + self.bw + 1) {
                sum -= self.get(k, i) * b[k];
            }
            b[i] = sum / self.get(i, i);
        }
    }
}

/// Rows of the second-difference operator on the control points, taken as
/// divided differences over the Greville abscissae and scaled so that evenly
/// spaced abscissae give (1, -2, 1). Control points of a straight line sit on
/// their abscissae, so lines carry zero penalty.
fn second_difference_rows(knots: &[f64], n_ctrl: usize, degree: usize) -> Vec<[f64; 3]> {
    let greville: Vec<f64> =
        (0..n_ctrl).map(|i| knots[i + 1..=i + degree].iter().sum::<f64>() / degree as f64).collect();
    let h = (greville[n_ctrl - 1] - greville[0]) / (n_ctrl - 1) as f64;
    (0..n_ctrl - 2)
        .map(|k| {
            let (a, b) = (greville[k + 1] - greville[k], greville[k + 2] - greville[k + 1]);
            if a <= 1e-12 * h || b <= 1e-12 * h {
                return [1.0, -2.0, 1.0];
            }
            let h2 = 2.0 * h * h;
            [h2 / (a * (a + b)), -h2 / (a * b), h2 / (b * (a + b))]
        })
        .collect()
}

/// Least-squares B-spline through `points` at parameters `u`, minimizing
/// `Σ|C(u_i) − p_i|² + lambda · Σ|Δ²c_k|²`.
pub fn penalized_fit(points: &[Point2], u: &[f64], n_ctrl: usize, degree: usize, lambda: f64) -> Option<BSpline> {
    let knots = place_knots(u, n_ctrl, degree);
    let bw = degree.max(2);
    let mut normal = BandMatrix::zeros(n_ctrl, bw);
    let mut rhs_x = vec![0.0; n_ctrl];
    let mut rhs_y = vec![0.0; n_ctrl];

    for (p, &t) in points.iter().zip(u) {
        let k = find_span(&knots, n_ctrl, degree, t);
        let b = basis_funs(&knots, k, degree, t);
        let base = k - degree;
        for r in 0..=degree {
            rhs_x[base + r] += b[r] * p.x;
            rhs_y[base + r] += b[r] * p.y;
            for c in 0..=r {
                normal.add(base + r, base + c, b[r] * b[c]);
            }
        }
    }
    if lambda > 0.0 && n_ctrl >= 3 {
        let stencils = second_difference_rows(&knots, n_ctrl, degree);
        for (k, stencil) in stencils.iter().enumerate() {
            for r in 0..3 {
                for c in 0..=r {
                    normal.add(k + r, k + c, lambda * stencil[r] * stencil[c]);
                }
            }
        }
    }

    let mut factor = BandMatrix { n: normal.n, bw: normal.bw, data: normal.data.clone() };
    if !factor.cholesky() {
        // tiny ridge for rank-deficient designs
        let trace: f64 = (0..n_ctrl).map(|i| normal.get(i, i)).sum();
        let ridge = 1e-12 * trace.max(1.0) / n_ctrl as f64;
        factor = BandMatrix { n: normal.n, bw: normal.bw, data: normal.data };
        for i in 0..n_ctrl {
            factor.add(i, i, ridge);
        }
        if !factor.cholesky() {
            return None;
        }
    }
    factor.solve_in_place(&mut rhs_x);
    factor.solve_in_place(&mut rhs_y);
    let ctrl = rhs_x.into_iter().zip(rhs_y).map(|(x, y)| Point2::new(x, y)).collect();
    Some(BSpline { degree, knots, ctrl })
}
