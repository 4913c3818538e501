//! Level-set simulator and discrete-geometry toolkit for the minimal
//! curvature flow of hypersurfaces with an obstacle.
//!
//! Two solvers evolve the positivity set of a scalar field: value iteration
//! on the dynamic programming principle of a deterministic two-player game,
//! and a direct explicit finite-difference scheme for the obstacle problem.
//! The discrete-geometry side provides eps-segments, eps-convex hulls, the
//! obstacle connectivity graph and segment-complex closures used to study
//! how the positivity set approaches the convex hull of the obstacle.

// index loops over the runtime dimension of fixed-size arrays read better
// than iterator chains in the numerical kernels
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod epshull;
pub mod error;
pub mod experiments;
pub mod game;
pub mod geom;
pub mod grid;
pub mod hull;
pub mod io;
pub mod obstacle;
pub mod operator;
pub mod pde;
pub mod rng;

pub use error::{Error, Result};
