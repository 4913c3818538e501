//! Uniform grids, sampled scalar fields, positivity masks and set distances.
//!
//! Fields are immutable once built: every evolution step reads one field and
//! writes a fresh one, so concurrent readers are always safe.

use crate::error::{Error, Result};
use crate::geom::{Point, SymMat};

/// Geometry of a uniform node-centered grid. `dims[2] == 1` in 2D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub origin: Point,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(dim: usize, origin: Point, spacing: f64, dims: [usize; 3]) -> Self {
        assert!(dim == 2 || dim == 3);
        assert!(spacing > 0.0 && spacing.is_finite());
        assert!(dims[0] >= 2 && dims[1] >= 2);
        assert!(if dim == 2 { dims[2] == 1 } else { dims[2] >= 2 });
        GridSpec {
            dim,
            origin,
            spacing,
            dims,
        }
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn node_pos(&self, i: usize, j: usize, k: usize) -> Point {
        Point([
            self.origin.0[0] + self.spacing * i as f64,
            self.origin.0[1] + self.spacing * j as f64,
            self.origin.0[2] + self.spacing * k as f64,
        ])
    }

    /// Upper corner of the grid box.
    pub fn max_corner(&self) -> Point {
        self.node_pos(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)
    }

    pub fn box_diameter(&self) -> f64 {
        self.max_corner().dist(&self.origin)
    }

    /// True if the axis-aligned box [lo, hi] lies inside the grid box.
    pub fn covers_box(&self, lo: &Point, hi: &Point) -> bool {
        let top = self.max_corner();
        (0..self.dim).all(|a| lo.0[a] >= self.origin.0[a] && hi.0[a] <= top.0[a])
    }
}

/// Sampled scalar field on a uniform grid. Reads outside the box return
/// `far_value`, the limit of the initial datum at infinity.
#[derive(Clone, Debug)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub far_value: f64,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>, far_value: f64) -> Self {
        assert_eq!(values.len(), spec.node_count());
        GridField {
            spec,
            values,
            far_value,
        }
    }

    pub fn constant(spec: GridSpec, value: f64, far_value: f64) -> Self {
        let n = spec.node_count();
        GridField::new(spec, vec![value; n], far_value)
    }

    /// Sample a function at every node.
    pub fn from_fn(spec: GridSpec, far_value: f64, f: impl Fn(&Point) -> f64) -> Self {
        let mut values = vec![0.0; spec.node_count()];
        for k in 0..spec.dims[2] {
            for j in 0..spec.dims[1] {
                for i in 0..spec.dims[0] {
                    values[spec.flat(i, j, k)] = f(&spec.node_pos(i, j, k));
                }
            }
        }
        GridField::new(spec, values, far_value)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.spec.flat(i, j, k)]
    }

    /// Nodal value with ghost reads: outside the index range the field is
    /// extended by `far_value`.
    pub fn value_or_far(&self, i: isize, j: isize, k: isize) -> f64 {
        let d = &self.spec.dims;
        if i < 0 || j < 0 || k < 0 || i >= d[0] as isize || j >= d[1] as isize || k >= d[2] as isize
        {
            self.far_value
        } else {
            self.values[self.spec.flat(i as usize, j as usize, k as usize)]
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Multilinear interpolation of nodal values; outside the grid box the
/// field's `far_value` is returned.
pub fn interpolate(field: &GridField, x: &Point) -> f64 {
    let spec = &field.spec;
    let h = spec.spacing;
    let mut u = [0.0f64; 3];
    for a in 0..spec.dim {
        u[a] = (x.0[a] - spec.origin.0[a]) / h;
        if !(0.0..=(spec.dims[a] - 1) as f64).contains(&u[a]) {
            return field.far_value;
        }
    }
    let mut base = [0usize; 3];
    let mut fr = [0.0f64; 3];
    for a in 0..spec.dim {
        let mut b = u[a].floor() as usize;
        // exact hit on the upper face: step back one cell, fraction becomes 1
        if b >= spec.dims[a] - 1 {
            b = spec.dims[a] - 2;
        }
        base[a] = b;
        fr[a] = u[a] - b as f64;
    }
    if spec.dim == 2 {
        let (i, j) = (base[0], base[1]);
        let (fx, fy) = (fr[0], fr[1]);
        let w00 = (1.0 - fx) * (1.0 - fy);
        let w10 = fx * (1.0 - fy);
        let w01 = (1.0 - fx) * fy;
        let w11 = fx * fy;
        w00 * field.value(i, j, 0)
            + w10 * field.value(i + 1, j, 0)
            + w01 * field.value(i, j + 1, 0)
            + w11 * field.value(i + 1, j + 1, 0)
    } else {
        let (i, j, k) = (base[0], base[1], base[2]);
        let (fx, fy, fz) = (fr[0], fr[1], fr[2]);
        let mut acc = 0.0;
        for (dz, wz) in [(0usize, 1.0 - fz), (1, fz)] {
            for (dy, wy) in [(0usize, 1.0 - fy), (1, fy)] {
                for (dx, wx) in [(0usize, 1.0 - fx), (1, fx)] {
                    acc += wz * wy * wx * field.value(i + dx, j + dy, k + dz);
                }
            }
        }
        acc
    }
}

/// Quadratic (three-point Lagrange per axis) sampling of nodal values;
/// exact for quadratics, so a curved front is read without the O(h^2)
/// underestimate of the multilinear form. Outside the grid box the
/// `far_value` is returned. Not monotone: the quadratic weights change sign.
pub fn sample_quadratic(field: &GridField, x: &Point) -> f64 {
    let spec = &field.spec;
    let h = spec.spacing;
    let mut center = [0usize; 3];
    let mut w = [[0.0f64; 3]; 3];
    for a in 0..spec.dim {
        let u = (x.0[a] - spec.origin.0[a]) / h;
        if !(0.0..=(spec.dims[a] - 1) as f64).contains(&u) {
            return field.far_value;
        }
        let c = (u.round() as usize).clamp(1, spec.dims[a] - 2);
        let xi = u - c as f64;
        center[a] = c;
        w[a] = [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)];
    }
    let mut acc = 0.0;
    if spec.dim == 2 {
        for (dj, wj) in w[1].iter().enumerate() {
            for (di, wi) in w[0].iter().enumerate() {
                acc += wi * wj * field.value(center[0] + di - 1, center[1] + dj - 1, 0);
            }
        }
    } else {
        for (dk, wk) in w[2].iter().enumerate() {
            for (dj, wj) in w[1].iter().enumerate() {
                for (di, wi) in w[0].iter().enumerate() {
                    acc += wi
                        * wj
                        * wk
                        * field.value(center[0] + di - 1, center[1] + dj - 1, center[2] + dk - 1);
                }
            }
        }
    }
    acc
}

/// Central second-order gradient and Hessian at a node, with `far_value`
/// ghosts past the boundary.
pub fn grad_hess(field: &GridField, node: [usize; 3]) -> (Point, SymMat) {
    let spec = &field.spec;
    let h = spec.spacing;
    let (i, j, k) = (node[0] as isize, node[1] as isize, node[2] as isize);
    let v = |di: isize, dj: isize, dk: isize| field.value_or_far(i + di, j + dj, k + dk);
    let c = v(0, 0, 0);
    let mut grad = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    let offsets: [[isize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    for a in 0..spec.dim {
        let o = offsets[a];
        let plus = v(o[0], o[1], o[2]);
        let minus = v(-o[0], -o[1], -o[2]);
        grad[a] = (plus - minus) / (2.0 * h);
        hess[a][a] = (plus - 2.0 * c + minus) / (h * h);
    }
    for a in 0..spec.dim {
        for b in (a + 1)..spec.dim {
            let (oa, ob) = (offsets[a], offsets[b]);
            let pp = v(oa[0] + ob[0], oa[1] + ob[1], oa[2] + ob[2]);
            let pm = v(oa[0] - ob[0], oa[1] - ob[1], oa[2] - ob[2]);
            let mp = v(ob[0] - oa[0], ob[1] - oa[1], ob[2] - oa[2]);
            let mm = v(-oa[0] - ob[0], -oa[1] - ob[1], -oa[2] - ob[2]);
            let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[a][b] = mixed;
            hess[b][a] = mixed;
        }
    }
    (Point(grad), SymMat::new(spec.dim, hess))
}

/// Node mask over a grid.
#[derive(Clone, Debug)]
pub struct BoolMask {
    pub spec: GridSpec,
    pub bits: Vec<bool>,
}

impl BoolMask {
    pub fn new(spec: GridSpec, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), spec.node_count());
        BoolMask { spec, bits }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&Point) -> bool) -> Self {
        let mut bits = vec![false; spec.node_count()];
        for k in 0..spec.dims[2] {
            for j in 0..spec.dims[1] {
                for i in 0..spec.dims[0] {
                    bits[spec.flat(i, j, k)] = f(&spec.node_pos(i, j, k));
                }
            }
        }
        BoolMask::new(spec, bits)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Measure of the set: node count times cell volume.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.spec.spacing.powi(self.spec.dim as i32)
    }

    pub fn is_subset_of(&self, other: &BoolMask) -> bool {
        assert_eq!(self.spec.dims, other.spec.dims);
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    /// Nodes within distance `r` of the set (closed dilation).
    pub fn dilate(&self, r: f64) -> BoolMask {
        let d2 = squared_distance_field(self);
        let r2 = r * r * (1.0 + 1e-12);
        let bits = d2.iter().map(|d| *d <= r2).collect();
        BoolMask::new(self.spec, bits)
    }
}

/// Nodes where the field is strictly positive.
pub fn positivity_set(field: &GridField) -> BoolMask {
    let bits = field.values.iter().map(|v| *v > 0.0).collect();
    BoolMask::new(field.spec, bits)
}

/// Squared Euclidean distance (in spatial units) from every node to the
/// nearest set node, by the separable parabola-envelope transform. Exact up
/// to floating point.
pub fn squared_distance_field(mask: &BoolMask) -> Vec<f64> {
    const INF: f64 = 1e30;
    let d = mask.spec.dims;
    let mut field: Vec<f64> = mask
        .bits
        .iter()
        .map(|b| if *b { 0.0 } else { INF })
        .collect();

    // transform along axis 0 (contiguous), then 1, then 2
    let mut scratch = vec![0.0f64; d[0].max(d[1]).max(d[2])];
    for k in 0..d[2] {
        for j in 0..d[1] {
            let start = mask.spec.flat(0, j, k);
            let row: Vec<f64> = (0..d[0]).map(|i| field[start + i]).collect();
            dt_1d(&row, &mut scratch);
            field[start..start + d[0]].copy_from_slice(&scratch[..d[0]]);
        }
    }
    for k in 0..d[2] {
        for i in 0..d[0] {
            let col: Vec<f64> = (0..d[1]).map(|j| field[mask.spec.flat(i, j, k)]).collect();
            dt_1d(&col, &mut scratch);
            for j in 0..d[1] {
                field[mask.spec.flat(i, j, k)] = scratch[j];
            }
        }
    }
    if d[2] > 1 {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let col: Vec<f64> = (0..d[2]).map(|k| field[mask.spec.flat(i, j, k)]).collect();
                dt_1d(&col, &mut scratch);
                for k in 0..d[2] {
                    field[mask.spec.flat(i, j, k)] = scratch[k];
                }
            }
        }
    }
    let h2 = mask.spec.spacing * mask.spec.spacing;
    for v in &mut field {
        *v *= h2;
    }
    field
}

/// 1D squared distance transform (Felzenszwalb-Huttenlocher), grid units.
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n]; // parabola sites
    let mut z = vec![0.0f64; n + 1]; // boundaries
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *o = dq * dq + f[p];
    }
}

/// Directed Hausdorff distance from `a` to `b` in spatial units.
pub fn directed_hausdorff(a: &BoolMask, b: &BoolMask) -> Result<f64> {
    if a.spec.dims != b.spec.dims {
        return Err(Error::DimMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask);
    }
    let d2b = squared_distance_field(b);
    let mut worst = 0.0f64;
    for (bit, d2) in a.bits.iter().zip(&d2b) {
        if *bit && *d2 > worst {
            worst = *d2;
        }
    }
    Ok(worst.sqrt())
}

/// Symmetric Hausdorff distance between two node sets.
pub fn hausdorff_distance(a: &BoolMask, b: &BoolMask) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
