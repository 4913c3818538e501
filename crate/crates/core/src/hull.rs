//! Finite point sets and the classical convex hull, used as the oracle the
//! discrete-geometry operators are checked against. Monotone chain in 2D,
//! incremental face hull in 3D; plain floating point with an orientation
//! tolerance, which is ample for desk-scale, well-conditioned inputs.

use crate::error::{Error, Result};
use crate::geom::Point;
use std::collections::HashMap;

/// Tolerance below which two points are considered the same sample.
pub const SNAP_TOL: f64 = 1e-9;

/// Orientation tolerance for hull predicates.
pub const ORIENT_TOL: f64 = 1e-12;

/// Finite set of points, deduplicated at `SNAP_TOL`. Lookup goes through a
/// hash over snapped cells with a neighbor probe, so arithmetically equal
/// points produced by different expressions collapse to one entry.
#[derive(Clone, Debug, Default)]
pub struct PointSet {
    points: Vec<Point>,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl PointSet {
    pub fn new() -> Self {
        PointSet::default()
    }

    pub fn from_points(pts: impl IntoIterator<Item = Point>) -> Self {
        let mut set = PointSet::new();
        for p in pts {
            set.insert(p);
        }
        set
    }

    fn cell_of(p: &Point) -> [i64; 3] {
        let c = |v: f64| (v / SNAP_TOL).round() as i64;
        [c(p.0[0]), c(p.0[1]), c(p.0[2])]
    }

    /// Insert a point; returns true if it was new at snap tolerance.
    pub fn insert(&mut self, p: Point) -> bool {
        debug_assert!(p.is_finite());
        let cell = Self::cell_of(&p);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let key = [cell[0] + dx, cell[1] + dy, cell[2] + dz];
                    if let Some(ids) = self.cells.get(&key) {
                        for &id in ids {
                            if self.points[id].dist(&p) <= SNAP_TOL {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry(cell).or_default().push(id);
        true
    }

    pub fn contains(&self, p: &Point) -> bool {
        let cell = Self::cell_of(p);
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let key = [cell[0] + dx, cell[1] + dy, cell[2] + dz];
                    if let Some(ids) = self.cells.get(&key) {
                        if ids.iter().any(|&id| self.points[id].dist(p) <= SNAP_TOL) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

/// Convex hull with combinatorial facets. In 2D facets are the edges of the
/// boundary polygon (vertices in counterclockwise order); in 3D they are
/// outward-oriented triangles.
#[derive(Clone, Debug)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub facets: Vec<Vec<usize>>,
    /// Affine dimension of the input when it is lower than `dim`.
    pub degenerate_dim: Option<usize>,
}

impl Polytope {
    /// Signed distance from `x` to the farthest-violated facet plane;
    /// <= 0 means inside. Degenerate hulls measure distance to the affine
    /// hull instead.
    pub fn excess(&self, x: &Point) -> f64 {
        if self.degenerate_dim.is_some() {
            return match self.vertices.len() {
                0 => f64::INFINITY,
                1 => x.dist(&self.vertices[0]),
                _ => {
                    // distance to the hull of a (near) collinear/coplanar set:
                    // fall back to min distance over segments between vertices
                    let mut best = f64::INFINITY;
                    for i in 0..self.vertices.len() {
                        for j in (i + 1)..self.vertices.len() {
                            best = best.min(crate::geom::dist_to_segment(
                                x,
                                &self.vertices[i],
                                &self.vertices[j],
                            ));
                        }
                    }
                    best
                }
            };
        }
        let centroid = self.centroid();
        let mut worst = f64::NEG_INFINITY;
        for facet in &self.facets {
            let (n, d) = self.facet_plane(facet, &centroid);
            worst = worst.max(n.dot(x) - d);
        }
        worst
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        self.excess(x) <= tol
    }

    fn centroid(&self) -> Point {
        let mut c = Point::zero();
        for v in &self.vertices {
            c = c.add(v);
        }
        c.scale(1.0 / self.vertices.len() as f64)
    }

    /// Outward unit normal and offset of a facet plane.
    fn facet_plane(&self, facet: &[usize], interior: &Point) -> (Point, f64) {
        let n = if self.dim == 2 {
            let a = self.vertices[facet[0]];
            let b = self.vertices[facet[1]];
            let e = b.sub(&a);
            Point::xy(e.0[1], -e.0[0]).normalized()
        } else {
            let a = self.vertices[facet[0]];
            let b = self.vertices[facet[1]];
            let c = self.vertices[facet[2]];
            b.sub(&a).cross(&c.sub(&a)).normalized()
        };
        let a = self.vertices[facet[0]];
        let mut n = n;
        if n.dot(interior) - n.dot(&a) > 0.0 {
            n = n.scale(-1.0);
        }
        (n, n.dot(&a))
    }
}

/// Exact-arithmetic-free convex hull of a finite point set.
///
/// Degenerate (lower-dimensional) inputs are not an error: the result is
/// flagged with the affine dimension found.
pub fn convex_hull(pts: &PointSet, dim: usize) -> Result<Polytope> {
    if pts.is_empty() {
        return Err(Error::EmptyInput("convex hull of an empty set"));
    }
    let affine = affine_dim(pts.points(), dim);
    if affine < dim {
        let mut vertices = pts.points().to_vec();
        if affine == 1 {
            // keep only the two extremes along the span direction
            let d = span_direction(pts.points());
            let mut lo = vertices[0];
            let mut hi = vertices[0];
            for p in pts.iter() {
                if p.dot(&d) < lo.dot(&d) {
                    lo = *p;
                }
                if p.dot(&d) > hi.dot(&d) {
                    hi = *p;
                }
            }
            vertices = vec![lo, hi];
        } else if affine == 0 {
            vertices = vec![vertices[0]];
        }
        return Ok(Polytope {
            dim,
            vertices,
            facets: Vec::new(),
            degenerate_dim: Some(affine),
        });
    }
    if dim == 2 {
        Ok(hull_2d(pts.points()))
    } else {
        Ok(hull_3d(pts.points()))
    }
}

fn scale_of(pts: &[Point]) -> f64 {
    pts.iter().fold(1.0f64, |m, p| {
        m.max(p.0[0].abs()).max(p.0[1].abs()).max(p.0[2].abs())
    })
}

fn affine_dim(pts: &[Point], dim: usize) -> usize {
    let s = scale_of(pts);
    let tol = ORIENT_TOL * s;
    let p0 = pts[0];
    // greedy search for independent directions
    let mut basis: Vec<Point> = Vec::new();
    for p in pts.iter().skip(1) {
        let mut v = p.sub(&p0);
        for b in &basis {
            v = v.sub(&b.scale(v.dot(b)));
        }
        if v.norm() > tol {
            basis.push(v.normalized());
            if basis.len() == dim {
                break;
            }
        }
    }
    basis.len()
}

fn span_direction(pts: &[Point]) -> Point {
    let p0 = pts[0];
    for p in pts.iter().skip(1) {
        let v = p.sub(&p0);
        if v.norm() > 0.0 {
            return v.normalized();
        }
    }
    Point::xy(1.0, 0.0)
}

fn cross2(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.0[0] - o.0[0]) * (b.0[1] - o.0[1]) - (a.0[1] - o.0[1]) * (b.0[0] - o.0[0])
}

/// Andrew's monotone chain, counterclockwise boundary.
fn hull_2d(pts: &[Point]) -> Polytope {
    let tol = ORIENT_TOL * scale_of(pts) * scale_of(pts);
    let mut sorted: Vec<Point> = pts.to_vec();
    sorted.sort_by(|a, b| {
        a.0[0]
            .partial_cmp(&b.0[0])
            .unwrap()
            .then(a.0[1].partial_cmp(&b.0[1]).unwrap())
    });
    let build = |iter: &mut dyn Iterator<Item = &Point>| {
        let mut chain: Vec<Point> = Vec::new();
        for p in iter {
            while chain.len() >= 2
                && cross2(&chain[chain.len() - 2], &chain[chain.len() - 1], p) <= tol
            {
                chain.pop();
            }
            chain.push(*p);
        }
        chain
    };
    let lower = build(&mut sorted.iter());
    let upper = build(&mut sorted.iter().rev());
    let mut vertices = lower;
    vertices.pop();
    vertices.extend(upper);
    vertices.pop();
    let n = vertices.len();
    let facets = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    Polytope {
        dim: 2,
        vertices,
        facets,
        degenerate_dim: None,
    }
}

/// Incremental 3D hull with triangle facets.
fn hull_3d(pts: &[Point]) -> Polytope {
    let s = scale_of(pts);
    let tol = ORIENT_TOL * s * s * s;

    // initial non-degenerate tetrahedron
    let i0 = 0;
    let mut i1 = 1;
    let mut best = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let d = p.dist(&pts[i0]);
        if d > best {
            best = d;
            i1 = i;
        }
    }
    let mut i2 = 0;
    best = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let a = p.sub(&pts[i0]).cross(&p.sub(&pts[i1])).norm();
        if a > best {
            best = a;
            i2 = i;
        }
    }
    let mut i3 = 0;
    best = 0.0;
    let n0 = pts[i1].sub(&pts[i0]).cross(&pts[i2].sub(&pts[i0]));
    for (i, p) in pts.iter().enumerate() {
        let v = p.sub(&pts[i0]).dot(&n0).abs();
        if v > best {
            best = v;
            i3 = i;
        }
    }
    let mut faces: Vec<[usize; 3]> = vec![[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]];
    let interior = pts[i0]
        .add(&pts[i1])
        .add(&pts[i2])
        .add(&pts[i3])
        .scale(0.25);
    // orient all faces outward
    for f in &mut faces {
        if signed_vol(&pts[f[0]], &pts[f[1]], &pts[f[2]], &interior) > 0.0 {
            f.swap(1, 2);
        }
    }
    for (idx, p) in pts.iter().enumerate() {
        if idx == i0 || idx == i1 || idx == i2 || idx == i3 {
            continue;
        }
        // faces visible from p
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&fi| {
                let f = faces[fi];
                signed_vol(&pts[f[0]], &pts[f[1]], &pts[f[2]], p) > tol
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        // horizon = edges shared by exactly one visible face
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for &fi in &visible {
            let f = faces[fi];
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *edge_count.entry((e.0.min(e.1), e.0.max(e.1))).or_insert(0) += 1;
            }
        }
        let horizon: Vec<(usize, usize)> = {
            let mut h = Vec::new();
            for &fi in &visible {
                let f = faces[fi];
                for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                    if edge_count[&(e.0.min(e.1), e.0.max(e.1))] == 1 {
                        h.push(e);
                    }
                }
            }
            h
        };
        let mut keep: Vec<[usize; 3]> = faces
            .iter()
            .enumerate()
            .filter(|(fi, _)| !visible.contains(fi))
            .map(|(_, f)| *f)
            .collect();
        for (a, b) in horizon {
            // visible face had (a, b) in its boundary orientation; the new
            // face (a, b, idx) inherits the opposite winding
            let mut f = [b, a, idx];
            if signed_vol(&pts[f[0]], &pts[f[1]], &pts[f[2]], &interior) > 0.0 {
                f.swap(1, 2);
            }
            keep.push(f);
        }
        faces = keep;
    }
    // compress vertex list to those used by facets
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut facets = Vec::new();
    for f in &faces {
        let mut tri = Vec::with_capacity(3);
        for &vi in f {
            let id = *remap.entry(vi).or_insert_with(|| {
                vertices.push(pts[vi]);
                vertices.len() - 1
            });
            tri.push(id);
        }
        facets.push(tri);
    }
    Polytope {
        dim: 3,
        vertices,
        facets,
        degenerate_dim: None,
    }
}

/// Signed volume of the tetrahedron (a, b, c, d); positive when d is on the
/// normal side of triangle (a, b, c).
fn signed_vol(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    b.sub(a).cross(&c.sub(a)).dot(&d.sub(a))
}
