//! The degenerate elliptic operator driving the flow: the infimum over unit
//! tangents v (v orthogonal to the gradient) of -<X v, v>, i.e. minus the
//! largest eigenvalue of the Hessian restricted to the tangent hyperplane.
//! When the gradient vanishes the infimum runs over all unit vectors, the
//! conservative (lower semicontinuous) convention.
//!
//! The restriction has size (N-1) x (N-1), so for N <= 3 everything is in
//! closed form: a scalar in 2D, a 2x2 eigenproblem in 3D.

use crate::geom::{tangent_basis, Point, SymMat};

/// Result of evaluating the operator at (p, X).
#[derive(Clone, Copy, Debug)]
pub struct OperatorResult {
    /// inf over admissible unit v of -<X v, v>
    pub value: f64,
    /// unit direction attaining the infimum
    pub argmin_direction: Point,
    /// gradient was at or below the threshold, so all directions competed
    pub degenerate_p: bool,
}

/// Default gradient threshold, scaled by the Hessian magnitude.
pub fn default_grad_threshold(x: &SymMat) -> f64 {
    1e-8 * (1.0 + x.max_abs_entry())
}

/// Evaluate the minimal-curvature operator at gradient `p` and Hessian `x`.
pub fn eval_min_curvature(p: &Point, x: &SymMat, grad_threshold: f64) -> OperatorResult {
    assert!(grad_threshold > 0.0);
    let dim = x.dim;
    if p.norm() <= grad_threshold {
        let lam = x.max_eigenvalue();
        return OperatorResult {
            value: -lam,
            argmin_direction: x.max_eigenvector(),
            degenerate_p: true,
        };
    }
    match dim {
        2 => {
            // single tangent direction
            let basis = tangent_basis(p, 2);
            let v = basis[0];
            OperatorResult {
                value: -x.quad_form(&v),
                argmin_direction: v,
                degenerate_p: false,
            }
        }
        3 => {
            let basis = tangent_basis(p, 3);
            let (b1, b2) = (basis[0], basis[1]);
            let r11 = x.quad_form(&b1);
            let r12 = x.apply(&b1).dot(&b2);
            let r22 = x.quad_form(&b2);
            let (_, hi) = crate::geom::eig2(r11, r12, r22);
            // eigenvector of the 2x2 restriction, lifted back to R^3
            let (c1, c2) = eigvec2_for(r11, r12, r22, hi);
            let v = b1.scale(c1).add(&b2.scale(c2)).normalized();
            OperatorResult {
                value: -hi,
                argmin_direction: v,
                degenerate_p: false,
            }
        }
        _ => unreachable!(),
    }
}

fn eigvec2_for(a: f64, b: f64, c: f64, lam: f64) -> (f64, f64) {
    let r1 = (a - lam, b);
    let r2 = (b, c - lam);
    let (rx, ry) = if r1.0.hypot(r1.1) >= r2.0.hypot(r2.1) {
        r1
    } else {
        r2
    };
    let n = rx.hypot(ry);
    if n < 1e-300 {
        (1.0, 0.0)
    } else {
        (-ry / n, rx / n)
    }
}

/// Mean-curvature comparison operator: -trace of the Hessian restricted to
/// the tangent hyperplane (all of R^N when the gradient degenerates). Used
/// only to contrast the two flows; in 2D it coincides with the minimal
/// curvature operator.
pub fn mean_curvature(p: &Point, x: &SymMat, grad_threshold: f64) -> f64 {
    if p.norm() <= grad_threshold {
        return -x.trace();
    }
    let u = p.normalized();
    -(x.trace() - x.quad_form(&u))
}

/// Scaling identity: L(alpha p, alpha X + sigma p (x) p) = alpha L(p, X).
pub fn check_geometric(p: &Point, x: &SymMat, alpha: f64, sigma: f64, grad_threshold: f64) -> bool {
    assert!(alpha > 0.0);
    let lhs_arg = x.scale(alpha).add(&SymMat::outer(x.dim, p).scale(sigma));
    let lhs = eval_min_curvature(&p.scale(alpha), &lhs_arg, grad_threshold).value;
    let rhs = alpha * eval_min_curvature(p, x, grad_threshold).value;
    (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs())
}

/// Degenerate ellipticity: X <= Y implies L(p, Y) <= L(p, X).
pub fn check_elliptic(p: &Point, x: &SymMat, y: &SymMat, grad_threshold: f64) -> bool {
    let lx = eval_min_curvature(p, x, grad_threshold).value;
    let ly = eval_min_curvature(p, y, grad_threshold).value;
    ly <= lx + 1e-12
}

/// Eigenvalue bounds: lambda_min(-X) <= L(p, X) <= lambda_max(-X).
pub fn check_bounds(p: &Point, x: &SymMat, grad_threshold: f64) -> bool {
    let v = eval_min_curvature(p, x, grad_threshold).value;
    let neg = x.neg();
    let lo = neg.min_eigenvalue();
    let hi = neg.max_eigenvalue();
    lo - 1e-12 <= v && v <= hi + 1e-12
}
