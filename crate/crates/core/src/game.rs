//! Value iteration for the two-player game behind the flow.
//!
//! One round from position x: the direction player picks a unit vector v,
//! the sign player picks b = +-1, the position moves to x + b v eps and the
//! clock decreases by eps^2 / 2. The direction player may also stop and
//! collect the obstacle value. One value-iteration round is therefore
//!
//!   new(x) = max{ psi_eps(x), max_v min_b interp(prev, x + b v eps) }.
//!
//! Each round reads an immutable previous field and writes a fresh one, so
//! node updates are data-parallel and any scheduling gives identical output.

use crate::error::{Error, Result};
use crate::geom::{tangent_basis, Point};
use crate::grid::{interpolate, GridField};
use crate::hull::SNAP_TOL;
use crate::obstacle::EnlargedObstacle;
use rayon::prelude::*;

/// Parameters of one game run. The time step is eps^2 / 2 by construction.
#[derive(Clone, Copy, Debug)]
pub struct GameParams {
    pub dim: usize,
    pub eps: f64,
    pub n_rounds: usize,
    pub direction_count: usize,
    /// Opt-in local refinement of the winning direction by a 1D line search.
    /// Off by default: the fixed direction set keeps the round map exactly
    /// monotone, which the refined path only satisfies empirically.
    pub direction_polish: bool,
    /// Opt-in second-order sampling for long fine-step runs: the multilinear
    /// read of a curved front underestimates it by an O(h^2 kappa) term each
    /// round, which over the 2 t / eps^2 rounds integrates to a visible
    /// radius deficit. The refined path reads the field with a quadratic
    /// stencil and solves for the optimal direction (gradient tangent plus a
    /// secant corner solve), at the cost of the exact monotonicity of the
    /// default map.
    pub quadratic_sampling: bool,
}

impl GameParams {
    pub fn new(dim: usize, eps: f64, t_end: f64, direction_count: usize) -> Self {
        assert!(eps > 0.0 && t_end >= 0.0);
        let min_dirs = if dim == 2 { 8 } else { 64 };
        assert!(
            direction_count >= min_dirs,
            "need at least {min_dirs} directions"
        );
        GameParams {
            dim,
            eps,
            n_rounds: rounds_for(t_end, eps),
            direction_count,
            direction_polish: false,
            quadratic_sampling: false,
        }
    }

    pub fn dt(&self) -> f64 {
        0.5 * self.eps * self.eps
    }

    pub fn time_of_round(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }
}

/// ceil(2 t / eps^2) with a guard against spurious round-up when the ratio
/// is an integer up to floating-point noise.
pub fn rounds_for(t_end: f64, eps: f64) -> usize {
    let r = 2.0 * t_end / (eps * eps);
    let guarded = r - r.abs() * 1e-12;
    guarded.ceil().max(0.0) as usize
}

/// Unit directions covering a hemisphere; v and -v play the same role
/// because of the sign minimization.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    pub dim: usize,
    pub dirs: Vec<Point>,
}

impl DirectionSet {
    pub fn for_dim(dim: usize, count: usize) -> Self {
        match dim {
            2 => Self::half_circle(count),
            3 => Self::fibonacci_hemisphere(count),
            _ => panic!("dimension must be 2 or 3"),
        }
    }

    /// `count` equally spaced angles on [0, pi).
    pub fn half_circle(count: usize) -> Self {
        let dirs = (0..count)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / count as f64;
                Point::xy(a.cos(), a.sin())
            })
            .collect();
        DirectionSet { dim: 2, dirs }
    }

    /// Fibonacci lattice on the upper hemisphere (z > 0), deterministic and
    /// seedless.
    pub fn fibonacci_hemisphere(count: usize) -> Self {
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        let dirs = (0..count)
            .map(|k| {
                let z = (k as f64 + 0.5) / count as f64; // in (0, 1)
                let r = (1.0 - z * z).sqrt();
                let phi = 2.0 * std::f64::consts::PI * k as f64 / golden;
                Point::xyz(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        DirectionSet { dim: 3, dirs }
    }

    /// Worst-case defect sup_p min_v |<p, v>| over unit p, estimated on a
    /// dense probe set. Bounds the direction-discretization error of the
    /// sup in the round map.
    pub fn angular_defect(&self) -> f64 {
        if self.dim == 2 {
            // equally spaced angles: the defect is attained halfway between
            // consecutive tangents
            return (std::f64::consts::FRAC_PI_2 / self.dirs.len() as f64).sin();
        }
        let probes = DirectionSet::fibonacci_hemisphere(4096);
        let mut worst = 0.0f64;
        for p in &probes.dirs {
            let mut best = f64::INFINITY;
            for v in &self.dirs {
                best = best.min(p.dot(v).abs());
            }
            worst = worst.max(best);
        }
        worst
    }
}

/// Precomputed interpolation stencil for a fixed displacement.
struct Stencil {
    /// flat offsets of the interpolation corners
    corners: [isize; 8],
    weights: [f64; 8],
    n: usize,
    /// the displacement itself, for the general fallback path
    delta: Point,
}

fn build_stencil(field: &GridField, delta: Point) -> Stencil {
    let spec = &field.spec;
    let h = spec.spacing;
    let mut base = [0isize; 3];
    let mut fr = [0.0f64; 3];
    for a in 0..spec.dim {
        let d = delta.0[a] / h;
        let b = d.floor();
        base[a] = b as isize;
        fr[a] = d - b;
    }
    let nx = spec.dims[0] as isize;
    let nxy = (spec.dims[0] * spec.dims[1]) as isize;
    let mut corners = [0isize; 8];
    let mut weights = [0.0f64; 8];
    let mut n = 0;
    let axes = if spec.dim == 2 { 2 } else { 3 };
    let count = 1usize << axes;
    for c in 0..count {
        let dx = (c & 1) as isize;
        let dy = ((c >> 1) & 1) as isize;
        let dz = ((c >> 2) & 1) as isize;
        let w = (if dx == 1 { fr[0] } else { 1.0 - fr[0] })
            * (if dy == 1 { fr[1] } else { 1.0 - fr[1] })
            * (if axes == 3 {
                if dz == 1 {
                    fr[2]
                } else {
                    1.0 - fr[2]
                }
            } else {
                1.0
            });
        corners[n] = (base[0] + dx) + nx * (base[1] + dy) + nxy * (base[2] + dz);
        weights[n] = w;
        n += 1;
    }
    Stencil {
        corners,
        weights,
        n,
        delta,
    }
}

impl Stencil {
    #[inline]
    fn eval(&self, values: &[f64], idx: usize) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.n {
            acc += self.weights[c] * values[(idx as isize + self.corners[c]) as usize];
        }
        acc
    }
}

/// Cell margin inside which every stencil window of displacement length
/// <= eps is guaranteed in bounds.
fn interior_margin(eps: f64, h: f64) -> usize {
    (eps / h).ceil() as usize + 1
}

/// One round of value iteration for the standard game.
pub fn dpp_step(
    prev: &GridField,
    psi: &GridField,
    params: &GameParams,
    dirs: &DirectionSet,
) -> GridField {
    assert_eq!(
        prev.spec, psi.spec,
        "value and obstacle fields must share the grid"
    );
    assert_eq!(params.dim, prev.spec.dim);
    assert!(
        params.eps < prev.spec.box_diameter() / 4.0,
        "step length too large for the grid box"
    );
    let spec = prev.spec;
    let eps = params.eps;
    let stencils: Vec<(Stencil, Stencil)> = dirs
        .dirs
        .iter()
        .map(|v| {
            (
                build_stencil(prev, v.scale(eps)),
                build_stencil(prev, v.scale(-eps)),
            )
        })
        .collect();
    let margin = if params.quadratic_sampling {
        interior_margin(eps, spec.spacing) + 1
    } else {
        interior_margin(eps, spec.spacing)
    };
    let polish = params.direction_polish;
    let refine = params.quadratic_sampling;

    let nx = spec.dims[0];
    let mut out = vec![0.0f64; spec.node_count()];
    out.par_chunks_mut(nx)
        .enumerate()
        .for_each(|(row, out_row)| {
            let j = row % spec.dims[1];
            let k = row / spec.dims[1];
            let row_interior = j >= margin
                && j + margin < spec.dims[1]
                && (spec.dim == 2 || (k >= margin && k + margin < spec.dims[2]));
            for (i, out_v) in out_row.iter_mut().enumerate() {
                let idx = spec.flat(i, j, k);
                let interior = row_interior && i >= margin && i + margin < nx;
                let mut best = f64::NEG_INFINITY;
                let mut best_dir = 0usize;
                if interior {
                    for (d, (sp, sm)) in stencils.iter().enumerate() {
                        let a = sp.eval(&prev.values, idx);
                        let b = sm.eval(&prev.values, idx);
                        let m = a.min(b);
                        if m > best {
                            best = m;
                            best_dir = d;
                        }
                    }
                } else {
                    let x = spec.node_pos(i, j, k);
                    for (d, (sp, sm)) in stencils.iter().enumerate() {
                        let a = interpolate(prev, &x.add(&sp.delta));
                        let b = interpolate(prev, &x.add(&sm.delta));
                        let m = a.min(b);
                        if m > best {
                            best = m;
                            best_dir = d;
                        }
                    }
                }
                if refine && interior {
                    // the multilinear scan only seeds the direction; the value
                    // comes from the quadratic read
                    let x = spec.node_pos(i, j, k);
                    best = refine_quadratic(prev, &x, [i, j, k], eps, &dirs.dirs[best_dir]);
                } else if polish {
                    let x = spec.node_pos(i, j, k);
                    best = best.max(polish_direction(prev, &x, eps, dirs, best_dir));
                }
                *out_v = psi.values[idx].max(best);
            }
        });
    GridField::new(spec, out, prev.far_value)
}

/// Quadratic-sampling refinement of one node update: evaluate the scan's
/// winning direction with the quadratic read as a floor, then solve for the
/// true optimum. In 2D the optimal direction sits at the kink where the two
/// sign branches meet, found by a secant iteration on their difference
/// around the gradient tangent; in 3D the tangent-plane optimum is the
/// minimizing direction of the projected-Hessian eigenproblem.
fn refine_quadratic(
    prev: &GridField,
    x: &Point,
    node: [usize; 3],
    eps: f64,
    seed_dir: &Point,
) -> f64 {
    use crate::grid::sample_quadratic;
    let pair = |v: &Point| {
        let a = sample_quadratic(prev, &x.add(&v.scale(eps)));
        let b = sample_quadratic(prev, &x.add(&v.scale(-eps)));
        (a, b)
    };
    let (fa, fb) = pair(seed_dir);
    let mut best = fa.min(fb);
    let (grad, hess) = crate::grid::grad_hess(prev, node);
    let gn = grad.norm();
    if gn < 1e-12 {
        return best;
    }
    if prev.spec.dim == 2 {
        // tangent angle, then the corner of theta -> min(A, B): the two
        // branches cross where D = A - B = 0, and D is close to linear
        let theta_g = grad.0[1].atan2(grad.0[0]) + std::f64::consts::FRAC_PI_2;
        let diff = |theta: f64| {
            let v = Point::xy(theta.cos(), theta.sin());
            let (a, b) = pair(&v);
            (a - b, a.min(b))
        };
        let delta = 0.02;
        let (mut t0, mut t1) = (theta_g - delta, theta_g + delta);
        let (mut d0, g0) = diff(t0);
        let (mut d1, g1) = diff(t1);
        best = best.max(g0).max(g1);
        for _ in 0..5 {
            if (d1 - d0).abs() < 1e-300 {
                break;
            }
            let t2 = (t1 - d1 * (t1 - t0) / (d1 - d0)).clamp(theta_g - 0.1, theta_g + 0.1);
            let (d2, g2) = diff(t2);
            best = best.max(g2);
            if d2.abs() < 1e-14 {
                break;
            }
            t0 = t1;
            d0 = d1;
            t1 = t2;
            d1 = d2;
        }
        best
    } else {
        // tangent-plane optimum: direction of the largest tangential
        // Hessian quadratic form
        let r = crate::operator::eval_min_curvature(&grad, &hess, 1e-12 * (1.0 + gn));
        let (a, b) = pair(&r.argmin_direction);
        best.max(a.min(b))
    }
}

/// Local refinement of the winning direction: golden-section maximization
/// of min_b interp(prev, x + b eps v(theta)) over a bracket of one angular
/// spacing around the discrete winner. Never returns less than the value at
/// the bracket interior start.
fn polish_direction(
    prev: &GridField,
    x: &Point,
    eps: f64,
    dirs: &DirectionSet,
    best_dir: usize,
) -> f64 {
    let objective = |v: &Point| -> f64 {
        let a = interpolate(prev, &x.add(&v.scale(eps)));
        let b = interpolate(prev, &x.add(&v.scale(-eps)));
        a.min(b)
    };
    let v0 = dirs.dirs[best_dir];
    if prev.spec.dim == 2 {
        let theta0 = v0.0[1].atan2(v0.0[0]);
        let gap = std::f64::consts::PI / dirs.dirs.len() as f64;
        golden_max(
            |t| objective(&Point::xy((theta0 + t).cos(), (theta0 + t).sin())),
            -gap,
            gap,
            16,
        )
    } else {
        // two coordinate-descent passes over orthogonal great circles
        let gap = (2.0 * std::f64::consts::PI / dirs.dirs.len() as f64).sqrt();
        let basis = tangent_basis(&v0, 3);
        let circle = |center: Point, axis: Point| {
            move |t: f64| {
                let v = center.scale(t.cos()).add(&axis.scale(t.sin()));
                v.normalized()
            }
        };
        let c1 = circle(v0, basis[0]);
        let t1 = golden_argmax(|t| objective(&c1(t)), -gap, gap, 14);
        let v1 = c1(t1);
        let b2 = basis[1].sub(&v1.scale(basis[1].dot(&v1))).normalized();
        let c2 = circle(v1, b2);
        let t2 = golden_argmax(|t| objective(&c2(t)), -gap, gap, 14);
        objective(&c2(t2))
    }
}

fn golden_argmax(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc > fd {
        c
    } else {
        d
    }
}

fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> f64 {
    let t = golden_argmax(&f, lo, hi, iters);
    f(t)
}

/// Iterate the round map `n_rounds` times and collect snapshots. The entry
/// at round 0 is the initial field; the final round is always included.
pub fn run_game(
    u0: &GridField,
    psi: &GridField,
    params: &GameParams,
    dirs: &DirectionSet,
    snapshot_every: usize,
) -> Vec<(usize, GridField)> {
    let mut snaps = vec![(0usize, u0.clone())];
    let mut current = u0.clone();
    for round in 1..=params.n_rounds {
        current = dpp_step(&current, psi, params, dirs);
        let due = snapshot_every > 0 && round.is_multiple_of(snapshot_every);
        if due || round == params.n_rounds {
            snaps.push((round, current.clone()));
        }
    }
    snaps
}

/// One round of the alternative game: the sign player commits to a
/// hyperplane (given by its normal), the direction player answers with the
/// best unit vector inside it, and the move has no sign choice.
pub fn alt_dpp_step(
    prev: &GridField,
    psi: &GridField,
    params: &GameParams,
    normals: &DirectionSet,
) -> GridField {
    assert_eq!(prev.spec, psi.spec);
    let spec = prev.spec;
    let eps = params.eps;
    // tangent sample directions per normal, both orientations included
    let tangents: Vec<Vec<Stencil>> = normals
        .dirs
        .iter()
        .map(|n| {
            let basis = tangent_basis(n, spec.dim);
            let mut list = Vec::new();
            if spec.dim == 2 {
                for s in [1.0, -1.0] {
                    list.push(build_stencil(prev, basis[0].scale(s * eps)));
                }
            } else {
                let m = params.direction_count;
                for t in 0..m {
                    let a = 2.0 * std::f64::consts::PI * t as f64 / m as f64;
                    let v = basis[0].scale(a.cos()).add(&basis[1].scale(a.sin()));
                    list.push(build_stencil(prev, v.scale(eps)));
                }
            }
            list
        })
        .collect();
    let margin = interior_margin(eps, spec.spacing);
    let polish = params.direction_polish && spec.dim == 2;
    let nx = spec.dims[0];
    let mut out = vec![0.0f64; spec.node_count()];
    out.par_chunks_mut(nx)
        .enumerate()
        .for_each(|(row, out_row)| {
            let j = row % spec.dims[1];
            let k = row / spec.dims[1];
            let row_interior = j >= margin
                && j + margin < spec.dims[1]
                && (spec.dim == 2 || (k >= margin && k + margin < spec.dims[2]));
            for (i, out_v) in out_row.iter_mut().enumerate() {
                let idx = spec.flat(i, j, k);
                let interior = row_interior && i >= margin && i + margin < nx;
                let x = spec.node_pos(i, j, k);
                let mut worst = f64::INFINITY;
                let mut worst_normal = 0usize;
                for (nidx, list) in tangents.iter().enumerate() {
                    let mut best = f64::NEG_INFINITY;
                    for st in list {
                        let v = if interior {
                            st.eval(&prev.values, idx)
                        } else {
                            interpolate(prev, &x.add(&st.delta))
                        };
                        best = best.max(v);
                    }
                    if best < worst {
                        worst = best;
                        worst_normal = nidx;
                    }
                }
                if polish {
                    // refine the hyperplane choice: in 2D the inner max over the
                    // line through t(theta) is exact (two evaluations)
                    let n0 = normals.dirs[worst_normal];
                    let theta0 = (-n0.0[0]).atan2(n0.0[1]); // tangent angle
                    let gap = std::f64::consts::PI / normals.dirs.len() as f64;
                    let refined = -golden_max(
                        |t| {
                            let v = Point::xy((theta0 + t).cos(), (theta0 + t).sin());
                            let a = interpolate(prev, &x.add(&v.scale(eps)));
                            let b = interpolate(prev, &x.add(&v.scale(-eps)));
                            -a.max(b)
                        },
                        -gap,
                        gap,
                        16,
                    );
                    worst = worst.min(refined);
                }
                *out_v = psi.values[idx].max(worst);
            }
        });
    GridField::new(spec, out, prev.far_value)
}

/// Per-round record of a strategy rollout.
#[derive(Clone, Copy, Debug)]
pub struct Choice {
    pub direction: Point,
    pub sign: f64,
    pub stopped: bool,
}

/// Sequence of game positions with the choices that produced them.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start_time: f64,
    pub positions: Vec<Point>,
    pub choices: Vec<Choice>,
}

impl Trajectory {
    pub fn last(&self) -> &Point {
        self.positions.last().unwrap()
    }

    pub fn stopped(&self) -> bool {
        self.choices.last().map(|c| c.stopped).unwrap_or(false)
    }
}

/// Direction player's concentric strategy around `z`: always move
/// orthogonally to the current radius, so the squared distance to `z`
/// grows by exactly eps^2 per round whatever the signs are.
pub fn concentric_direction_strategy(
    x0: &Point,
    z: &Point,
    params: &GameParams,
    signs: &[f64],
) -> Result<Trajectory> {
    if x0.dist(z) <= SNAP_TOL {
        return Err(Error::DegenerateCenter);
    }
    let mut traj = Trajectory {
        start_time: params.time_of_round(signs.len()),
        positions: vec![*x0],
        choices: Vec::new(),
    };
    let mut x = *x0;
    for &sign in signs {
        let radius = x.sub(z);
        let v = tangent_basis(&radius, params.dim)[0];
        x = x.add(&v.scale(sign * params.eps));
        traj.positions.push(x);
        traj.choices.push(Choice {
            direction: v,
            sign,
            stopped: false,
        });
    }
    Ok(traj)
}

/// Sign player's concentric strategy around `z`: pick the sign that does
/// not decrease the distance to `z`, giving squared growth of at least
/// eps^2 per round whatever the directions are.
pub fn concentric_sign_strategy(
    x0: &Point,
    z: &Point,
    params: &GameParams,
    directions: &[Point],
) -> Result<Trajectory> {
    if x0.dist(z) <= SNAP_TOL {
        return Err(Error::DegenerateCenter);
    }
    let mut traj = Trajectory {
        start_time: params.time_of_round(directions.len()),
        positions: vec![*x0],
        choices: Vec::new(),
    };
    let mut x = *x0;
    for v in directions {
        let sign = if x.sub(z).dot(v) >= 0.0 { 1.0 } else { -1.0 };
        x = x.add(&v.scale(sign * params.eps));
        traj.positions.push(x);
        traj.choices.push(Choice {
            direction: *v,
            sign,
            stopped: false,
        });
    }
    Ok(traj)
}

/// Direction player's segment strategy: always play the direction of the
/// segment through `a` and `b`, stop as soon as the enlarged obstacle value
/// is positive. All positions stay on the line through a and b, and with
/// enlargement radius >= 2 eps a step can never jump across the enlarged
/// set.
pub fn segment_strategy(
    x0: &Point,
    a: &Point,
    b: &Point,
    enlarged: &EnlargedObstacle,
    params: &GameParams,
    signs: &[f64],
) -> Result<Trajectory> {
    let dist = crate::geom::dist_to_segment(x0, a, b);
    let tol = SNAP_TOL * (1.0 + a.norm().max(b.norm()).max(x0.norm()));
    if dist > tol {
        return Err(Error::OffSegment { dist });
    }
    let v = b.sub(a).normalized();
    let mut traj = Trajectory {
        start_time: params.time_of_round(signs.len()),
        positions: vec![*x0],
        choices: Vec::new(),
    };
    let mut x = *x0;
    for &sign in signs {
        if enlarged.enlarged_shape(&x) > 0.0 {
            traj.choices.push(Choice {
                direction: v,
                sign: 0.0,
                stopped: true,
            });
            return Ok(traj);
        }
        x = x.add(&v.scale(sign * params.eps));
        traj.positions.push(x);
        traj.choices.push(Choice {
            direction: v,
            sign,
            stopped: false,
        });
    }
    if enlarged.enlarged_shape(&x) > 0.0 {
        traj.choices.push(Choice {
            direction: v,
            sign: 0.0,
            stopped: true,
        });
    }
    Ok(traj)
}
