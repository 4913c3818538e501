//! Analytic obstacles, their enlargement by a ball of radius N*eps, and the
//! regularized shape function used as the game obstacle.
//!
//! The base shape function psi is the max over primitives of a 1-Lipschitz
//! inside function, so K = {psi > 0}. The enlarged set carries a blended
//! shape function that is positive exactly on the interior of the enlarged
//! set, sits above psi there, below psi outside, and converges uniformly to
//! psi as eps -> 0. The blend needs the envelope
//!
//!   inside:  min over boundary y of  psi(y) + 2 omega(|x - y|)
//!   outside: max over boundary y of  psi(y) - 2 omega(|x - y|)
//!
//! which is computed from an analytic sampling of the enlarged boundary.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::grid::{GridField, GridSpec};
use serde::{Deserialize, Serialize};

/// Shape-function value reported where there is no obstacle at all.
pub const NO_OBSTACLE: f64 = -1.0e9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Primitive {
    Ball {
        center: Point,
        radius: f64,
    },
    Box {
        center: Point,
        half_extents: [f64; 3],
    },
}

impl Primitive {
    /// 1-Lipschitz inside function: positive inside, zero on the boundary.
    fn inside_fn(&self, x: &Point, dim: usize) -> f64 {
        match self {
            Primitive::Ball { center, radius } => radius - x.dist(center),
            Primitive::Box {
                center,
                half_extents,
            } => {
                let mut m = f64::INFINITY;
                for a in 0..dim {
                    m = m.min(half_extents[a] - (x.0[a] - center.0[a]).abs());
                }
                m
            }
        }
    }

    /// Exact Euclidean signed distance (negative inside).
    fn signed_distance(&self, x: &Point, dim: usize) -> f64 {
        match self {
            Primitive::Ball { center, radius } => x.dist(center) - radius,
            Primitive::Box {
                center,
                half_extents,
            } => {
                let mut q = [0.0; 3];
                for a in 0..dim {
                    q[a] = (x.0[a] - center.0[a]).abs() - half_extents[a];
                }
                let outside = Point([
                    q[0].max(0.0),
                    q[1].max(0.0),
                    if dim == 3 { q[2].max(0.0) } else { 0.0 },
                ]);
                let inside = q[..dim]
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max)
                    .min(0.0);
                outside.norm() + inside
            }
        }
    }

    fn bbox(&self, dim: usize) -> (Point, Point) {
        match self {
            Primitive::Ball { center, radius } => {
                let r = Point([*radius, *radius, if dim == 3 { *radius } else { 0.0 }]);
                (center.sub(&r), center.add(&r))
            }
            Primitive::Box {
                center,
                half_extents,
            } => {
                let r = Point([
                    half_extents[0],
                    half_extents[1],
                    if dim == 3 { half_extents[2] } else { 0.0 },
                ]);
                (center.sub(&r), center.add(&r))
            }
        }
    }

    fn overlaps(&self, other: &Primitive, dim: usize) -> bool {
        match (self, other) {
            (
                Primitive::Ball {
                    center: c1,
                    radius: r1,
                },
                Primitive::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => c1.dist(c2) < r1 + r2,
            (Primitive::Ball { center, radius }, b @ Primitive::Box { .. })
            | (b @ Primitive::Box { .. }, Primitive::Ball { center, radius }) => {
                b.signed_distance(center, dim) < *radius
            }
            (
                Primitive::Box {
                    center: c1,
                    half_extents: h1,
                },
                Primitive::Box {
                    center: c2,
                    half_extents: h2,
                },
            ) => (0..dim).all(|a| (c1.0[a] - c2.0[a]).abs() < h1[a] + h2[a]),
        }
    }
}

/// Obstacle K described as a union of primitives, with modulus of
/// continuity omega(s) = L s for the shape function.
#[derive(Clone, Debug)]
pub struct ObstacleSpec {
    pub dim: usize,
    pub primitives: Vec<Primitive>,
    pub modulus_constant: f64,
}

impl ObstacleSpec {
    pub fn new(dim: usize, primitives: Vec<Primitive>, modulus_constant: f64) -> Self {
        assert!(dim == 2 || dim == 3);
        assert!(
            modulus_constant >= 1.0,
            "omega must dominate the 1-Lipschitz shape function"
        );
        ObstacleSpec {
            dim,
            primitives,
            modulus_constant,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Shape function psi with K = {psi > 0}.
    pub fn shape(&self, x: &Point) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.inside_fn(x, self.dim))
            .fold(NO_OBSTACLE, f64::max)
    }

    pub fn omega(&self, s: f64) -> f64 {
        self.modulus_constant * s
    }

    /// Euclidean signed distance to K (negative inside).
    pub fn signed_distance(&self, x: &Point) -> f64 {
        self.primitives
            .iter()
            .map(|p| p.signed_distance(x, self.dim))
            .fold(f64::INFINITY, f64::min)
    }

    /// Union-find partition of primitives into connected components.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.primitives.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.primitives[i].overlaps(&self.primitives[j], self.dim) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }
}

/// K enlarged by a ball of radius dim * eps, with the blended shape function.
#[derive(Clone, Debug)]
pub struct EnlargedObstacle {
    pub base: ObstacleSpec,
    pub eps: f64,
    /// enlargement radius, exactly dim * eps
    pub enlarge_radius: f64,
    /// clip constant for the blend; tends to zero with eps
    pub c_eps: f64,
    /// analytic samples of the enlarged boundary with their psi values
    boundary: Vec<(Point, f64)>,
}

impl EnlargedObstacle {
    /// Build with boundary mesh width at most eps/4 and at least
    /// `min_samples` points per primitive.
    pub fn new(base: ObstacleSpec, eps: f64) -> Result<Self> {
        Self::with_min_samples(base, eps, 100)
    }

    pub fn with_min_samples(base: ObstacleSpec, eps: f64, min_samples: usize) -> Result<Self> {
        assert!(eps > 0.0);
        let enlarge_radius = base.dim as f64 * eps;
        let c_eps = 2.0 * base.omega(2.0 * enlarge_radius);
        let mut out = EnlargedObstacle {
            base,
            eps,
            enlarge_radius,
            c_eps,
            boundary: Vec::new(),
        };
        if !out.base.is_empty() {
            out.boundary = out.sample_boundary(min_samples)?;
        }
        Ok(out)
    }

    /// Point is in the open enlarged set.
    pub fn contains(&self, x: &Point) -> bool {
        !self.base.is_empty() && self.base.signed_distance(x) < self.enlarge_radius
    }

    fn mesh_width(&self, min_samples: usize) -> f64 {
        // design target eps/4; min_samples forces at least that many points
        // around the largest primitive cross-section
        let mut w = self.eps / 4.0;
        let largest = self
            .base
            .primitives
            .iter()
            .map(|p| match p {
                Primitive::Ball { radius, .. } => radius + self.enlarge_radius,
                Primitive::Box { half_extents, .. } => {
                    half_extents.iter().cloned().fold(0.0, f64::max) + self.enlarge_radius
                }
            })
            .fold(0.0, f64::max);
        let circumference = 2.0 * std::f64::consts::PI * largest;
        w = w.min(circumference / min_samples as f64);
        w
    }

    /// Analytic sampling of the boundary of the enlarged union: offset
    /// surfaces of each primitive, filtered to points that are not interior
    /// to any other enlarged primitive.
    fn sample_boundary(&self, min_samples: usize) -> Result<Vec<(Point, f64)>> {
        if self.base.is_empty() {
            return Err(Error::EmptyObstacle);
        }
        let width = self.mesh_width(min_samples);
        let mut pts: Vec<Point> = Vec::new();
        for prim in &self.base.primitives {
            match prim {
                Primitive::Ball { center, radius } => {
                    let r = radius + self.enlarge_radius;
                    if self.base.dim == 2 {
                        let n = ((2.0 * std::f64::consts::PI * r / width).ceil() as usize).max(8);
                        for s in 0..n {
                            let a = 2.0 * std::f64::consts::PI * s as f64 / n as f64;
                            pts.push(center.add(&Point::xy(r * a.cos(), r * a.sin())));
                        }
                    } else {
                        let n = ((4.0 * std::f64::consts::PI * r * r / (width * width)).ceil()
                            as usize)
                            .max(32);
                        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
                        for s in 0..n {
                            let z = 1.0 - 2.0 * (s as f64 + 0.5) / n as f64;
                            let rho = (1.0 - z * z).sqrt();
                            let phi = 2.0 * std::f64::consts::PI * s as f64 / golden;
                            pts.push(center.add(&Point::xyz(
                                r * rho * phi.cos(),
                                r * rho * phi.sin(),
                                r * z,
                            )));
                        }
                    }
                }
                Primitive::Box { .. } => {
                    pts.extend(self.sample_box_offset(prim, width));
                }
            }
        }
        // keep only true boundary points of the union
        let tol = 1e-9 * (1.0 + self.enlarge_radius);
        let kept: Vec<(Point, f64)> = pts
            .into_iter()
            .filter(|p| self.base.signed_distance(p) >= self.enlarge_radius - tol)
            .map(|p| (p, self.base.shape(&p)))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyObstacle);
        }
        Ok(kept)
    }

    /// Offset surface of a box: faces pushed outward, edges rounded by
    /// cylinder arcs, corners by sphere patches.
    fn sample_box_offset(&self, prim: &Primitive, width: f64) -> Vec<Point> {
        let (center, half) = match prim {
            Primitive::Box {
                center,
                half_extents,
            } => (*center, *half_extents),
            _ => unreachable!(),
        };
        let r = self.enlarge_radius;
        let dim = self.base.dim;
        let mut pts = Vec::new();
        let steps = |len: f64| ((len / width).ceil() as usize).max(2);
        if dim == 2 {
            let (hx, hy) = (half[0], half[1]);
            // straight edges
            for s in 0..steps(2.0 * hx) {
                let x = -hx + 2.0 * hx * s as f64 / (steps(2.0 * hx) - 1) as f64;
                pts.push(center.add(&Point::xy(x, hy + r)));
                pts.push(center.add(&Point::xy(x, -hy - r)));
            }
            for s in 0..steps(2.0 * hy) {
                let y = -hy + 2.0 * hy * s as f64 / (steps(2.0 * hy) - 1) as f64;
                pts.push(center.add(&Point::xy(hx + r, y)));
                pts.push(center.add(&Point::xy(-hx - r, y)));
            }
            // quarter circles at the corners
            let arc = steps(std::f64::consts::FRAC_PI_2 * r);
            for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                for s in 0..arc {
                    let a = std::f64::consts::FRAC_PI_2 * s as f64 / (arc - 1) as f64;
                    pts.push(
                        center.add(&Point::xy(sx * (hx + r * a.cos()), sy * (hy + r * a.sin()))),
                    );
                }
            }
        } else {
            let h = half;
            // six faces, offset outward
            for axis in 0..3 {
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let (nu, nv) = (steps(2.0 * h[u]), steps(2.0 * h[v]));
                for sign in [-1.0f64, 1.0] {
                    for su in 0..nu {
                        for sv in 0..nv {
                            let mut c = [0.0; 3];
                            c[axis] = sign * (h[axis] + r);
                            c[u] = -h[u] + 2.0 * h[u] * su as f64 / (nu - 1) as f64;
                            c[v] = -h[v] + 2.0 * h[v] * sv as f64 / (nv - 1) as f64;
                            pts.push(center.add(&Point(c)));
                        }
                    }
                }
            }
            // twelve quarter-cylinder edges
            let arc = steps(std::f64::consts::FRAC_PI_2 * r);
            for axis in 0..3 {
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let n_ax = steps(2.0 * h[axis]);
                for su in [-1.0f64, 1.0] {
                    for sv in [-1.0f64, 1.0] {
                        for sa in 0..n_ax {
                            for s in 0..arc {
                                let a = std::f64::consts::FRAC_PI_2 * s as f64 / (arc - 1) as f64;
                                let mut c = [0.0; 3];
                                c[axis] = -h[axis] + 2.0 * h[axis] * sa as f64 / (n_ax - 1) as f64;
                                c[u] = su * (h[u] + r * a.cos());
                                c[v] = sv * (h[v] + r * a.sin());
                                pts.push(center.add(&Point(c)));
                            }
                        }
                    }
                }
            }
            // eight sphere-octant corners
            let n =
                ((2.0 * std::f64::consts::PI * r * r / (width * width)).ceil() as usize).max(16);
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for sx in [-1.0f64, 1.0] {
                for sy in [-1.0f64, 1.0] {
                    for sz in [-1.0f64, 1.0] {
                        for s in 0..n {
                            let z = (s as f64 + 0.5) / n as f64;
                            let rho = (1.0 - z * z).sqrt();
                            let phi = std::f64::consts::FRAC_PI_2 * (s as f64 / golden).fract();
                            let d = Point::xyz(rho * phi.cos(), rho * phi.sin(), z);
                            pts.push(center.add(&Point::xyz(
                                sx * (half[0] + r * d.0[0]),
                                sy * (half[1] + r * d.0[1]),
                                sz * (half[2] + r * d.0[2]),
                            )));
                        }
                    }
                }
            }
        }
        pts
    }

    /// Envelope built from the modulus of continuity over the sampled
    /// enlarged boundary; uniformly continuous, equal to psi on the boundary
    /// up to sampling error.
    pub fn modulus_envelope(&self, x: &Point) -> Result<f64> {
        if self.boundary.is_empty() {
            return Err(Error::EmptyObstacle);
        }
        let l = self.base.modulus_constant;
        if self.contains(x) {
            let mut best = f64::INFINITY;
            for (y, psi_y) in &self.boundary {
                best = best.min(psi_y + 2.0 * l * x.dist(y));
            }
            Ok(best)
        } else {
            let mut best = f64::NEG_INFINITY;
            for (y, psi_y) in &self.boundary {
                best = best.max(psi_y - 2.0 * l * x.dist(y));
            }
            Ok(best)
        }
    }

    /// Closed form of the envelope, valid when every primitive is a ball
    /// and the enlarged balls are pairwise disjoint: the boundary value of
    /// psi is then the constant -enlarge_radius and the minimization runs
    /// over the distance to the enlarged boundary alone.
    pub fn exact_envelope(&self, x: &Point) -> Option<f64> {
        if self.base.is_empty() {
            return None;
        }
        let mut balls = Vec::with_capacity(self.base.primitives.len());
        for p in &self.base.primitives {
            match p {
                Primitive::Ball { center, radius } => balls.push((center, radius)),
                _ => return None,
            }
        }
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                if balls[i].0.dist(balls[j].0) < balls[i].1 + balls[j].1 + 2.0 * self.enlarge_radius
                {
                    return None;
                }
            }
        }
        let l = self.base.modulus_constant;
        // distance to the nearest enlarged sphere, not to the union surface
        // through the signed distance: a point deep in one enlarged ball can
        // still be closest to another ball's sphere
        let d = balls
            .iter()
            .map(|(c, r)| ((x.dist(c) - **r) - self.enlarge_radius).abs())
            .fold(f64::INFINITY, f64::min);
        if self.contains(x) {
            Some(-self.enlarge_radius + 2.0 * l * d)
        } else {
            Some(-self.enlarge_radius - 2.0 * l * d)
        }
    }

    /// Blended shape function: positive exactly on the interior of the
    /// enlarged set, above psi there, below psi outside, and within
    /// c_eps + sampling error of psi everywhere.
    pub fn enlarged_shape(&self, x: &Point) -> f64 {
        if self.base.is_empty() {
            return NO_OBSTACLE;
        }
        let psi = self.base.shape(x);
        let h = match self.exact_envelope(x) {
            Some(v) => v,
            None => self
                .modulus_envelope(x)
                .expect("nonempty obstacle has boundary samples"),
        };
        if self.contains(x) {
            psi.max((h - psi).min(self.c_eps))
        } else {
            psi.min((h - psi).max(-self.c_eps))
        }
    }

    /// Sample the blended shape function at every grid node. The grid must
    /// cover the enlarged set.
    pub fn shape_field(&self, spec: GridSpec) -> Result<GridField> {
        assert_eq!(spec.dim, self.base.dim);
        if self.base.is_empty() {
            return Ok(GridField::constant(spec, NO_OBSTACLE, NO_OBSTACLE));
        }
        let (mut lo, mut hi) = (Point([f64::INFINITY; 3]), Point([f64::NEG_INFINITY; 3]));
        for p in &self.base.primitives {
            let (plo, phi) = p.bbox(self.base.dim);
            for a in 0..self.base.dim {
                lo.0[a] = lo.0[a].min(plo.0[a] - self.enlarge_radius);
                hi.0[a] = hi.0[a].max(phi.0[a] + self.enlarge_radius);
            }
        }
        for a in self.base.dim..3 {
            lo.0[a] = 0.0;
            hi.0[a] = 0.0;
        }
        if !spec.covers_box(&lo, &hi) {
            return Err(Error::GridCoverage {
                need_lo: lo.0,
                need_hi: hi.0,
            });
        }
        Ok(GridField::from_fn(spec, NO_OBSTACLE, |x| {
            self.enlarged_shape(x)
        }))
    }
}
