//! Points, small symmetric matrices and the closed-form eigensolvers used by
//! the curvature operator. Everything here is fixed-size (dimension 2 or 3),
//! so no iterative linear algebra is needed.

use serde::{Deserialize, Serialize};

/// Spatial point / vector. Coordinates beyond the run dimension stay zero, so
/// dot products and norms are valid in both 2D and 3D.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn zero() -> Self {
        Point([0.0; 3])
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut p = [0.0; 3];
        p[..c.len().min(3)].copy_from_slice(&c[..c.len().min(3)]);
        Point(p)
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn add(&self, o: &Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn scale(&self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.sub(o).norm()
    }

    pub fn normalized(&self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn cross(&self, o: &Point) -> Point {
        Point([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// Distance from `x` to the closed segment [a, b].
pub fn dist_to_segment(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b.sub(a);
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return x.dist(a);
    }
    let t = (x.sub(a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    x.dist(&a.add(&ab.scale(t)))
}

/// Orthonormal basis of the hyperplane orthogonal to `p` (`p` nonzero),
/// built from the Householder reflector that maps `p/|p|` onto a coordinate
/// axis. Returns `dim - 1` unit vectors.
pub fn tangent_basis(p: &Point, dim: usize) -> Vec<Point> {
    let (a, b) = tangent_pair(p);
    if dim == 2 {
        vec![a]
    } else {
        vec![a, b]
    }
}

/// Allocation-free tangent basis for hot loops: the one (2D) or two (3D)
/// Householder columns orthogonal to `p`. In 2D the second entry is zero.
#[inline]
pub fn tangent_pair(p: &Point) -> (Point, Point) {
    let u = p.normalized();
    // Reflector through w = u + sign(u_x) e_1 avoids cancellation.
    let s = if u.0[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u;
    w.0[0] += s;
    let wn = w.norm_sq();
    let col = |k: usize| {
        let mut c = [0.0; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            let delta = if i == k { 1.0 } else { 0.0 };
            *ci = delta - 2.0 * w.0[i] * w.0[k] / wn;
        }
        Point(c)
    };
    (col(1), col(2))
}

/// Symmetric matrix of the run dimension. Entries are symmetrized on
/// construction so stored off-diagonal pairs are bit-identical.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat {
    pub dim: usize,
    m: [[f64; 3]; 3],
}

impl SymMat {
    pub fn new(dim: usize, entries: [[f64; 3]; 3]) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = 0.5 * (entries[i][j] + entries[j][i]);
            }
        }
        SymMat { dim, m }
    }

    pub fn zero(dim: usize) -> Self {
        SymMat::new(dim, [[0.0; 3]; 3])
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        SymMat { dim, m }
    }

    pub fn diag(dim: usize, d: &[f64]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            m[i][i] = d[i];
        }
        SymMat { dim, m }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    pub fn apply(&self, v: &Point) -> Point {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            for j in 0..self.dim {
                *o += self.m[i][j] * v.0[j];
            }
        }
        Point(out)
    }

    pub fn quad_form(&self, v: &Point) -> f64 {
        self.apply(v).dot(v)
    }

    pub fn add(&self, o: &SymMat) -> SymMat {
        let mut m = self.m;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] += o.m[i][j];
            }
        }
        SymMat { dim: self.dim, m }
    }

    pub fn scale(&self, s: f64) -> SymMat {
        let mut m = self.m;
        for row in m.iter_mut().take(self.dim) {
            for e in row.iter_mut().take(self.dim) {
                *e *= s;
            }
        }
        SymMat { dim: self.dim, m }
    }

    pub fn neg(&self) -> SymMat {
        self.scale(-1.0)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn outer(dim: usize, p: &Point) -> SymMat {
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = p.0[i] * p.0[j];
            }
        }
        SymMat { dim, m }
    }

    pub fn max_abs_entry(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s = s.max(self.m[i][j].abs());
            }
        }
        s
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.dim {
            2 => {
                let (lo, hi) = eig2(self.m[0][0], self.m[0][1], self.m[1][1]);
                vec![lo, hi]
            }
            3 => eig3(&self.m).to_vec(),
            _ => unreachable!(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Unit eigenvector for the largest eigenvalue.
    pub fn max_eigenvector(&self) -> Point {
        let lam = self.max_eigenvalue();
        match self.dim {
            2 => {
                let v = eigvec2(self.m[0][0], self.m[0][1], self.m[1][1], lam);
                Point([v[0], v[1], 0.0])
            }
            3 => eigvec3(&self.m, lam),
            _ => unreachable!(),
        }
    }
}

/// Eigenvalues of [[a, b], [b, c]], ascending.
pub fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let half_tr = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    (half_tr - disc, half_tr + disc)
}

fn eigvec2(a: f64, b: f64, c: f64, lam: f64) -> [f64; 2] {
    // (A - lam I) v = 0; pick the better conditioned row.
    let r1 = [a - lam, b];
    let r2 = [b, c - lam];
    let (rx, ry) = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) {
        (r1[0], r1[1])
    } else {
        (r2[0], r2[1])
    };
    let n = rx.hypot(ry);
    if n < 1e-300 {
        return [1.0, 0.0]; // multiple of identity, any direction works
    }
    [-ry / n, rx / n]
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric
/// closed form (Smith's method).
fn eig3(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

fn eigvec3(m: &[[f64; 3]; 3], lam: f64) -> Point {
    // Rows of (A - lam I); the eigenvector is orthogonal to all of them, so
    // the largest cross product of two rows is a robust choice.
    let rows: Vec<Point> = (0..3)
        .map(|i| {
            let mut r = [m[i][0], m[i][1], m[i][2]];
            r[i] -= lam;
            Point(r)
        })
        .collect();
    let mut best = Point::zero();
    let mut best_n = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let c = rows[i].cross(&rows[j]);
            let n = c.norm();
            if n > best_n {
                best_n = n;
                best = c;
            }
        }
    }
    if best_n < 1e-12 * (1.0 + lam.abs()) {
        // Degenerate eigenvalue: any unit vector of the eigenspace works.
        // Pick the coordinate direction least represented in the rows.
        let mut v = Point::xyz(1.0, 0.0, 0.0);
        for cand in [
            Point::xyz(1.0, 0.0, 0.0),
            Point::xyz(0.0, 1.0, 0.0),
            Point::xyz(0.0, 0.0, 1.0),
        ] {
            let resid: f64 = rows.iter().map(|r| r.dot(&cand).abs()).sum();
            let cur: f64 = rows.iter().map(|r| r.dot(&v).abs()).sum();
            if resid < cur {
                v = cand;
            }
        }
        return v.normalized();
    }
    best.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_sym(rng: &mut SplitMix64, dim: usize, scale: f64) -> SymMat {
        let mut e = [[0.0; 3]; 3];
        for row in e.iter_mut().take(dim) {
            for v in row.iter_mut().take(dim) {
                *v = rng.uniform(-scale, scale);
            }
        }
        SymMat::new(dim, e)
    }

    #[test]
    fn tangent_basis_is_orthonormal_to_p() {
        let mut rng = SplitMix64::new(7);
        for dim in [2usize, 3] {
            for _ in 0..200 {
                let p = Point([
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    if dim == 3 {
                        rng.uniform(-1.0, 1.0)
                    } else {
                        0.0
                    },
                ]);
                if p.norm() < 1e-3 {
                    continue;
                }
                let basis = tangent_basis(&p, dim);
                assert_eq!(basis.len(), dim - 1);
                for (i, b) in basis.iter().enumerate() {
                    assert!((b.norm() - 1.0).abs() < 1e-12);
                    assert!(b.dot(&p.normalized()).abs() < 1e-12);
                    for b2 in basis.iter().skip(i + 1) {
                        assert!(b.dot(b2).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn eig2_matches_trace_det() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..500 {
            let a = rng.uniform(-5.0, 5.0);
            let b = rng.uniform(-5.0, 5.0);
            let c = rng.uniform(-5.0, 5.0);
            let (lo, hi) = eig2(a, b, c);
            assert!(lo <= hi);
            assert!((lo + hi - (a + c)).abs() < 1e-10);
            assert!((lo * hi - (a * c - b * b)).abs() < 1e-9);
        }
    }

    #[test]
    fn eig3_brackets_rayleigh_quotients() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..300 {
            let x = random_sym(&mut rng, 3, 3.0);
            let eigs = x.eigenvalues();
            assert!(eigs[0] <= eigs[1] && eigs[1] <= eigs[2]);
            // characteristic invariants
            assert!((eigs.iter().sum::<f64>() - x.trace()).abs() < 1e-9);
            // Rayleigh quotients stay inside [min, max]
            for _ in 0..20 {
                let v = Point([
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                    rng.uniform(-1.0, 1.0),
                ])
                .normalized();
                if v.norm() == 0.0 {
                    continue;
                }
                let q = x.quad_form(&v);
                assert!(q >= eigs[0] - 1e-9 && q <= eigs[2] + 1e-9);
            }
        }
    }

    #[test]
    fn max_eigenvector_attains_max_eigenvalue() {
        let mut rng = SplitMix64::new(19);
        for dim in [2usize, 3] {
            for _ in 0..300 {
                let x = random_sym(&mut rng, dim, 2.0);
                let lam = x.max_eigenvalue();
                let v = x.max_eigenvector();
                assert!((v.norm() - 1.0).abs() < 1e-10);
                assert!(
                    (x.quad_form(&v) - lam).abs() < 1e-7 * (1.0 + lam.abs()),
                    "quad form {} vs eigenvalue {}",
                    x.quad_form(&v),
                    lam
                );
            }
        }
    }

    #[test]
    fn dist_to_segment_basics() {
        let a = Point::xy(0.0, 0.0);
        let b = Point::xy(2.0, 0.0);
        assert!((dist_to_segment(&Point::xy(1.0, 1.0), &a, &b) - 1.0).abs() < 1e-15);
        assert!((dist_to_segment(&Point::xy(-1.0, 0.0), &a, &b) - 1.0).abs() < 1e-15);
        assert!((dist_to_segment(&Point::xy(3.0, 0.0), &a, &b) - 1.0).abs() < 1e-15);
        assert_eq!(dist_to_segment(&Point::xy(1.5, 0.0), &a, &b), 0.0);
    }
}
