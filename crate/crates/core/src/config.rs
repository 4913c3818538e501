//! Run configuration: TOML schema, validation, and construction of the
//! initial field and obstacle fields it describes.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::grid::{GridField, GridSpec};
use crate::obstacle::{EnlargedObstacle, ObstacleSpec, Primitive};
use crate::pde::CurvatureMode;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dimension: usize,
    grid: RawGrid,
    #[serde(default)]
    obstacle: Option<RawObstacle>,
    initial: RawInitial,
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    origin: Vec<f64>,
    spacing: f64,
    dims: Vec<usize>,
    far_value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    #[serde(default = "default_modulus")]
    modulus_constant: f64,
    #[serde(default)]
    eps: Vec<f64>,
    #[serde(default)]
    balls: Vec<RawBall>,
    #[serde(default)]
    boxes: Vec<RawBox>,
}

fn default_modulus() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBall {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    center: Vec<f64>,
    half_extents: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: String,
    #[serde(default)]
    center: Option<Vec<f64>>,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    a: Option<Vec<f64>>,
    #[serde(default)]
    b: Option<Vec<f64>>,
    #[serde(default)]
    balls: Vec<RawBall>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    kind: String,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default = "default_directions")]
    directions: usize,
    #[serde(default)]
    direction_polish: bool,
    #[serde(default)]
    quadratic_sampling: bool,
    #[serde(default)]
    curvature: Option<String>,
    t_end: f64,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default = "default_cfl")]
    cfl_safety: f64,
    #[serde(default = "default_grad_threshold")]
    grad_threshold: f64,
    #[serde(default)]
    snapshot_every: usize,
}

fn default_directions() -> usize {
    0 // resolved per dimension below
}

fn default_cfl() -> f64 {
    0.9
}

fn default_grad_threshold() -> f64 {
    1e-8
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    dir: Option<String>,
    #[serde(default = "default_true")]
    write_vtk: bool,
}

fn default_true() -> bool {
    true
}

/// Analytic description of the initial positivity set; the initial field is
/// `max(radius - distance to the core, far_value)`, a Lipschitz-1 profile.
#[derive(Clone, Debug)]
pub enum InitialSet {
    Ball { center: Point, radius: f64 },
    Capsule { a: Point, b: Point, radius: f64 },
    Balls(Vec<(Point, f64)>),
}

impl InitialSet {
    pub fn profile(&self, x: &Point) -> f64 {
        match self {
            InitialSet::Ball { center, radius } => radius - x.dist(center),
            InitialSet::Capsule { a, b, radius } => radius - crate::geom::dist_to_segment(x, a, b),
            InitialSet::Balls(balls) => balls
                .iter()
                .map(|(c, r)| r - x.dist(c))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Game,
    AltGame,
    Pde,
}

#[derive(Clone, Debug)]
pub struct SolverChoice {
    pub kind: SolverKind,
    /// game step length; also the obstacle enlargement parameter of the run
    pub eps: f64,
    pub directions: usize,
    pub direction_polish: bool,
    pub quadratic_sampling: bool,
    pub curvature: CurvatureMode,
    pub t_end: f64,
    /// explicit time step for the direct scheme; picked from the stability
    /// bound when absent
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub grad_threshold: f64,
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dim: usize,
    pub grid: GridSpec,
    pub far_value: f64,
    pub obstacle: ObstacleSpec,
    /// enlargement values requested for refinement studies; the solver's
    /// own eps is `solver.eps`
    pub eps_list: Vec<f64>,
    pub initial: InitialSet,
    pub solver: SolverChoice,
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    pub write_vtk: bool,
}

fn point_from(v: &[f64], dim: usize, what: &str) -> Result<Point> {
    if v.len() != dim {
        return Err(Error::Config(format!(
            "{what}: expected {dim} coordinates, got {}",
            v.len()
        )));
    }
    Ok(Point::from_slice(v))
}

/// Parse and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
    let dim = raw.dimension;
    if dim != 2 && dim != 3 {
        return Err(Error::Config("dimension must be 2 or 3".into()));
    }
    if raw.grid.spacing <= 0.0 {
        return Err(Error::Config("grid.spacing must be positive".into()));
    }
    if raw.grid.dims.len() != dim {
        return Err(Error::Config(format!("grid.dims must have {dim} entries")));
    }
    if raw.grid.far_value >= 0.0 {
        return Err(Error::ConfigInvariant(
            "far_value must be negative (the initial datum tends to a negative limit)".into(),
        ));
    }
    let origin = point_from(&raw.grid.origin, dim, "grid.origin")?;
    let mut dims = [1usize; 3];
    dims[..dim].copy_from_slice(&raw.grid.dims);
    let grid = GridSpec::new(dim, origin, raw.grid.spacing, dims);

    let (obstacle, eps_list) = match &raw.obstacle {
        None => (ObstacleSpec::new(dim, Vec::new(), 1.0), Vec::new()),
        Some(o) => {
            let mut prims = Vec::new();
            for b in &o.balls {
                if b.radius <= 0.0 {
                    return Err(Error::Config("ball radius must be positive".into()));
                }
                prims.push(Primitive::Ball {
                    center: point_from(&b.center, dim, "ball center")?,
                    radius: b.radius,
                });
            }
            for b in &o.boxes {
                if b.half_extents.len() != dim {
                    return Err(Error::Config(format!(
                        "box half_extents must have {dim} entries"
                    )));
                }
                let mut half = [0.0; 3];
                half[..dim].copy_from_slice(&b.half_extents);
                prims.push(Primitive::Box {
                    center: point_from(&b.center, dim, "box center")?,
                    half_extents: half,
                });
            }
            if !prims.is_empty() && o.eps.is_empty() {
                return Err(Error::Config("obstacle.eps list must not be empty".into()));
            }
            (
                ObstacleSpec::new(dim, prims, o.modulus_constant),
                o.eps.clone(),
            )
        }
    };

    let initial = match raw.initial.kind.as_str() {
        "ball" => InitialSet::Ball {
            center: point_from(
                raw.initial
                    .center
                    .as_deref()
                    .ok_or(Error::Config("initial.center missing".into()))?,
                dim,
                "initial.center",
            )?,
            radius: raw
                .initial
                .radius
                .ok_or(Error::Config("initial.radius missing".into()))?,
        },
        "capsule" => InitialSet::Capsule {
            a: point_from(
                raw.initial
                    .a
                    .as_deref()
                    .ok_or(Error::Config("initial.a missing".into()))?,
                dim,
                "initial.a",
            )?,
            b: point_from(
                raw.initial
                    .b
                    .as_deref()
                    .ok_or(Error::Config("initial.b missing".into()))?,
                dim,
                "initial.b",
            )?,
            radius: raw
                .initial
                .radius
                .ok_or(Error::Config("initial.radius missing".into()))?,
        },
        "balls" => {
            let mut balls = Vec::new();
            for b in &raw.initial.balls {
                balls.push((point_from(&b.center, dim, "initial ball center")?, b.radius));
            }
            if balls.is_empty() {
                return Err(Error::Config("initial.balls must not be empty".into()));
            }
            InitialSet::Balls(balls)
        }
        other => return Err(Error::Config(format!("unknown initial kind {other:?}"))),
    };

    let kind = match raw.solver.kind.as_str() {
        "game" => SolverKind::Game,
        "alt-game" => SolverKind::AltGame,
        "pde" => SolverKind::Pde,
        other => return Err(Error::Config(format!("unknown solver kind {other:?}"))),
    };
    let curvature = match raw.solver.curvature.as_deref() {
        None | Some("min") => CurvatureMode::Min,
        Some("mean") => CurvatureMode::Mean,
        Some(other) => return Err(Error::Config(format!("unknown curvature {other:?}"))),
    };
    let eps = match raw.solver.eps {
        Some(e) if e > 0.0 => e,
        Some(_) => return Err(Error::Config("solver.eps must be positive".into())),
        None => *eps_list.first().ok_or(Error::Config(
            "solver.eps missing and no obstacle.eps to default to".into(),
        ))?,
    };
    let directions = if raw.solver.directions == 0 {
        if dim == 2 {
            32
        } else {
            256
        }
    } else {
        raw.solver.directions
    };
    let min_dirs = if dim == 2 { 8 } else { 64 };
    if matches!(kind, SolverKind::Game | SolverKind::AltGame) {
        if directions < min_dirs {
            return Err(Error::ConfigInvariant(format!(
                "solver.directions = {directions} below the minimum {min_dirs} for dimension {dim}"
            )));
        }
        if eps >= grid.box_diameter() / 4.0 {
            return Err(Error::ConfigInvariant(format!(
                "solver.eps = {eps} must stay below a quarter of the grid box diameter {}",
                grid.box_diameter()
            )));
        }
    }
    if raw.solver.t_end < 0.0 {
        return Err(Error::Config("solver.t_end must be nonnegative".into()));
    }

    let cfg = RunConfig {
        dim,
        grid,
        far_value: raw.grid.far_value,
        obstacle,
        eps_list,
        initial,
        solver: SolverChoice {
            kind,
            eps,
            directions,
            direction_polish: raw.solver.direction_polish,
            quadratic_sampling: raw.solver.quadratic_sampling,
            curvature,
            t_end: raw.solver.t_end,
            dt: raw.solver.dt.filter(|d| *d > 0.0),
            cfl_safety: raw.solver.cfl_safety,
            grad_threshold: raw.solver.grad_threshold,
        },
        snapshot_every: raw.solver.snapshot_every,
        output_dir: PathBuf::from(raw.output.dir.unwrap_or_else(|| "out".into())),
        write_vtk: raw.output.write_vtk,
    };
    validate(&cfg)?;
    Ok(cfg)
}

impl RunConfig {
    /// Initial field: Lipschitz profile of the initial set clipped below at
    /// the far value, so it attains that limit near the box boundary.
    pub fn u0_field(&self) -> GridField {
        let far = self.far_value;
        let init = self.initial.clone();
        GridField::from_fn(self.grid, far, move |x| init.profile(x).max(far))
    }

    /// Enlarged obstacle for a given eps.
    pub fn enlarged_obstacle(&self, eps: f64) -> Result<EnlargedObstacle> {
        EnlargedObstacle::new(self.obstacle.clone(), eps)
    }

    /// Obstacle field at the solver's eps (sentinel field when K is empty).
    pub fn obstacle_field(&self, eps: f64) -> Result<GridField> {
        self.enlarged_obstacle(eps)?.shape_field(self.grid)
    }
}

/// Cross-field invariants that need the sampled fields: the enlarged
/// obstacle must fit in the grid, and wherever the obstacle value is
/// positive the initial datum must be positive as well.
fn validate(cfg: &RunConfig) -> Result<()> {
    let u0 = cfg.u0_field();
    let mut eps_values = cfg.eps_list.clone();
    if !cfg.obstacle.is_empty() && !eps_values.contains(&cfg.solver.eps) {
        eps_values.push(cfg.solver.eps);
    }
    for &eps in &eps_values {
        if eps <= 0.0 {
            return Err(Error::Config("obstacle eps values must be positive".into()));
        }
        if cfg.obstacle.is_empty() {
            continue;
        }
        let psi = cfg.obstacle_field(eps)?;
        for (idx, (pv, uv)) in psi.values.iter().zip(&u0.values).enumerate() {
            if *pv > 0.0 && *uv <= 0.0 {
                let [i, j, k] = cfg.grid.unflat(idx);
                let x = cfg.grid.node_pos(i, j, k);
                return Err(Error::ConfigInvariant(format!(
                    "initial set does not cover the enlarged obstacle at eps = {eps}: \
                     node ({}, {}, {}) at ({:.4}, {:.4}, {:.4}) has obstacle value {pv:.4} \
                     but initial value {uv:.4}",
                    i, j, k, x.0[0], x.0[1], x.0[2]
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
dimension = 2

[grid]
origin = [-1.5, -1.5]
spacing = 0.05
dims = [61, 61]
far_value = -0.5

[initial]
kind = "ball"
center = [0.0, 0.0]
radius = 1.0

[solver]
kind = "game"
eps = 0.1
t_end = 0.1
"#;

    #[test]
    fn minimal_shrinking_disc_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.dim, 2);
        assert_eq!(cfg.solver.kind, SolverKind::Game);
        assert_eq!(cfg.solver.directions, 32);
        assert!(cfg.obstacle.is_empty());
        let u0 = cfg.u0_field();
        assert!(u0.value(30, 30, 0) > 0.99);
    }

    #[test]
    fn two_ball_config_valid() {
        let text = r#"
dimension = 2

[grid]
origin = [-4.0, -2.0]
spacing = 0.05
dims = [161, 81]
far_value = -0.5

[obstacle]
modulus_constant = 1.0
eps = [0.1]

[[obstacle.balls]]
center = [2.0, 0.0]
radius = 1.0

[[obstacle.balls]]
center = [-2.0, 0.0]
radius = 1.0

[initial]
kind = "capsule"
a = [-2.0, 0.0]
b = [2.0, 0.0]
radius = 1.6

[solver]
kind = "game"
eps = 0.1
t_end = 0.5
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.obstacle.primitives.len(), 2);
        assert_eq!(cfg.eps_list, vec![0.1]);
    }

    #[test]
    fn rejects_initial_set_not_covering_obstacle() {
        let text = r#"
dimension = 2

[grid]
origin = [-4.0, -4.0]
spacing = 0.1
dims = [81, 81]
far_value = -0.5

[obstacle]
eps = [0.1]

[[obstacle.balls]]
center = [2.0, 0.0]
radius = 1.0

[initial]
kind = "ball"
center = [-2.0, 0.0]
radius = 1.0

[solver]
kind = "game"
eps = 0.1
t_end = 0.1
"#;
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("does not cover"), "unexpected error {msg}");
        assert!(
            msg.contains("node ("),
            "diagnostic should name the node: {msg}"
        );
    }

    #[test]
    fn alt_game_solver_parses() {
        let text = MINIMAL.replace("kind = \"game\"", "kind = \"alt-game\"");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.solver.kind, SolverKind::AltGame);
    }

    #[test]
    fn rejects_positive_far_value() {
        let text = MINIMAL.replace("far_value = -0.5", "far_value = 0.5");
        assert!(matches!(
            parse_config(&text),
            Err(Error::ConfigInvariant(_))
        ));
    }

    #[test]
    fn rejects_unknown_solver() {
        let text = MINIMAL.replace("kind = \"game\"", "kind = \"magic\"");
        assert!(parse_config(&text).is_err());
    }
}
