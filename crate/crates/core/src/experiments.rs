//! Experiment orchestration: solver dispatch from a config, metric
//! extraction (volume, radius, distances to the reference hulls), plateau
//! detection, and the named studies the command line exposes.

use crate::config::{RunConfig, SolverKind};
use crate::error::{Error, Result};
use crate::game::{alt_dpp_step, dpp_step, DirectionSet, GameParams};
use crate::geom::{dist_to_segment, Point};
use crate::grid::{hausdorff_distance, positivity_set, BoolMask, GridField};
use crate::obstacle::Primitive;
use crate::pde::{pde_step, PdeParams};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// One metrics row; distance columns are NaN when there is no reference.
#[derive(Clone, Copy, Debug)]
pub struct MetricRow {
    pub time: f64,
    pub volume: f64,
    pub radius: f64,
    pub dist_co_k: f64,
    pub dist_co_k_eps: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MetricSeries {
    pub rows: Vec<MetricRow>,
}

impl MetricSeries {
    pub fn push(&mut self, row: MetricRow) {
        if let Some(last) = self.rows.last() {
            assert!(
                row.time > last.time,
                "metric times must be strictly increasing"
            );
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,volume,radius,dist_coK,dist_coKeps\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.time, r.volume, r.radius, r.dist_co_k, r.dist_co_k_eps
            );
        }
        out
    }
}

/// Volume-based radius estimate of the positivity set.
pub fn radius_estimate(mask: &BoolMask) -> f64 {
    let v = mask.volume();
    if mask.spec.dim == 2 {
        (v / std::f64::consts::PI).sqrt()
    } else {
        (v / (4.0 / 3.0 * std::f64::consts::PI)).powf(1.0 / 3.0)
    }
}

/// Time-stamped snapshots of a run.
pub type Snapshots = Vec<(f64, GridField)>;

/// Control flow for the streaming runner.
pub enum Flow {
    Continue,
    Stop,
}

/// March the configured solver, handing each due snapshot (including the
/// initial and final states) to `visit` without retaining it. `cadence` is
/// in rounds or steps; zero keeps only the first and last states.
pub fn stream_solver(
    cfg: &RunConfig,
    cadence: usize,
    mut visit: impl FnMut(f64, &GridField) -> Result<Flow>,
) -> Result<()> {
    let u0 = cfg.u0_field();
    let psi = cfg.obstacle_field(cfg.solver.eps)?;
    match cfg.solver.kind {
        SolverKind::Game | SolverKind::AltGame => {
            let mut params = GameParams::new(
                cfg.dim,
                cfg.solver.eps,
                cfg.solver.t_end,
                cfg.solver.directions,
            );
            params.direction_polish = cfg.solver.direction_polish;
            params.quadratic_sampling = cfg.solver.quadratic_sampling;
            let dirs = DirectionSet::for_dim(cfg.dim, cfg.solver.directions);
            let alt = cfg.solver.kind == SolverKind::AltGame;
            if let Flow::Stop = visit(0.0, &u0)? {
                return Ok(());
            }
            let mut current = u0;
            for round in 1..=params.n_rounds {
                current = if alt {
                    alt_dpp_step(&current, &psi, &params, &dirs)
                } else {
                    dpp_step(&current, &psi, &params, &dirs)
                };
                let due = cadence > 0 && round % cadence == 0;
                if due || round == params.n_rounds {
                    if let Flow::Stop = visit(params.time_of_round(round), &current)? {
                        return Ok(());
                    }
                }
            }
            Ok(())
        }
        SolverKind::Pde => {
            let mut params = PdeParams::new(
                cfg.dim,
                cfg.grid.spacing,
                cfg.solver.t_end,
                cfg.solver.cfl_safety,
            );
            if let Some(dt) = cfg.solver.dt {
                params.dt = dt;
            }
            params.grad_threshold = cfg.solver.grad_threshold;
            params.mode = cfg.solver.curvature;
            let n_steps = (params.t_end / params.dt).ceil() as usize;
            if let Flow::Stop = visit(0.0, &u0)? {
                return Ok(());
            }
            let mut current = u0;
            for step in 1..=n_steps {
                current = pde_step(&current, &psi, &params)?;
                let due = cadence > 0 && step % cadence == 0;
                if due || step == n_steps {
                    if let Flow::Stop = visit(step as f64 * params.dt, &current)? {
                        return Ok(());
                    }
                }
            }
            Ok(())
        }
    }
}

/// Run the configured solver and return time-stamped snapshots. A zero
/// `snapshot_every` in the config keeps only the initial and final states.
pub fn run_solver(cfg: &RunConfig) -> Result<Snapshots> {
    run_solver_with_cadence(cfg, cfg.snapshot_every)
}

/// As `run_solver` with an explicit snapshot cadence (rounds or steps).
pub fn run_solver_with_cadence(cfg: &RunConfig, cadence: usize) -> Result<Snapshots> {
    let mut snaps: Snapshots = Vec::new();
    stream_solver(cfg, cadence, |t, field| {
        snaps.push((t, field.clone()));
        Ok(Flow::Continue)
    })?;
    Ok(snaps)
}

/// Distance from a point to the convex hull of the obstacle, available in
/// closed form when the obstacle is one or two equal balls: the hull is a
/// ball or the capsule around the center segment.
pub fn analytic_hull_distance(obstacle: &crate::obstacle::ObstacleSpec, x: &Point) -> Result<f64> {
    let mut balls = Vec::new();
    for p in &obstacle.primitives {
        match p {
            Primitive::Ball { center, radius } => balls.push((*center, *radius)),
            _ => {
                return Err(Error::Config(
                    "no closed-form hull reference for box obstacles".into(),
                ))
            }
        }
    }
    match balls.len() {
        0 => Err(Error::EmptyObstacle),
        1 => Ok(x.dist(&balls[0].0) - balls[0].1),
        2 => {
            if (balls[0].1 - balls[1].1).abs() > 1e-12 {
                return Err(Error::Config(
                    "closed-form hull reference needs equal ball radii".into(),
                ));
            }
            Ok(dist_to_segment(x, &balls[0].0, &balls[1].0) - balls[0].1)
        }
        _ => Err(Error::Config(
            "closed-form hull reference limited to at most two balls".into(),
        )),
    }
}

/// Node mask of the convex hull of the obstacle, fattened by `margin`.
pub fn reference_hull_mask(cfg: &RunConfig, margin: f64) -> Result<BoolMask> {
    let obstacle = cfg.obstacle.clone();
    let mut bits = vec![false; cfg.grid.node_count()];
    for (idx, b) in bits.iter_mut().enumerate() {
        let [i, j, k] = cfg.grid.unflat(idx);
        let x = cfg.grid.node_pos(i, j, k);
        *b = analytic_hull_distance(&obstacle, &x)? <= margin;
    }
    Ok(BoolMask::new(cfg.grid, bits))
}

/// Shrinking-ball study: no obstacle, radius series against the square-root
/// law R(t) = sqrt(R0^2 - 2 t).
#[derive(Clone, Debug)]
pub struct ShrinkReport {
    pub series: MetricSeries,
    /// sup over snapshots in [t_lo, t_hi] of the relative radius error
    pub max_rel_err: f64,
    pub extinction_time: Option<f64>,
}

pub fn experiment_shrinking_ball(cfg: &RunConfig, t_lo: f64, t_hi: f64) -> Result<ShrinkReport> {
    if !cfg.obstacle.is_empty() {
        return Err(Error::Config(
            "shrinking-ball study needs an empty obstacle".into(),
        ));
    }
    let r0 = match cfg.initial {
        crate::config::InitialSet::Ball { radius, .. } => radius,
        _ => {
            return Err(Error::Config(
                "shrinking-ball study needs a ball initial set".into(),
            ))
        }
    };
    let mut series = MetricSeries::default();
    let mut max_rel_err = 0.0f64;
    let mut extinction = None;
    stream_solver(cfg, cfg.snapshot_every, |t, field| {
        if t == 0.0 {
            return Ok(Flow::Continue);
        }
        let mask = positivity_set(field);
        let volume = mask.volume();
        let radius = radius_estimate(&mask);
        if mask.is_empty() && extinction.is_none() {
            extinction = Some(t);
        }
        if t >= t_lo && t <= t_hi {
            let expected = (r0 * r0 - 2.0 * t).max(0.0).sqrt();
            if expected > 0.0 {
                max_rel_err = max_rel_err.max((radius - expected).abs() / expected);
            }
        }
        series.push(MetricRow {
            time: t,
            volume,
            radius,
            dist_co_k: f64::NAN,
            dist_co_k_eps: f64::NAN,
        });
        // once the set has vanished nothing changes any more
        Ok(if extinction.is_some() {
            Flow::Stop
        } else {
            Flow::Continue
        })
    })?;
    Ok(ShrinkReport {
        series,
        max_rel_err,
        extinction_time: extinction,
    })
}

/// March the configured solver until the positivity set stops moving:
/// plateau at the first time where consecutive states separated by about
/// `delta_t` differ by at most h in Hausdorff distance.
#[derive(Clone, Debug)]
pub struct HullReport {
    pub series: MetricSeries,
    pub graph_connected: bool,
    pub plateau_time: Option<f64>,
    pub plateau_mask: Option<BoolMask>,
    /// hull mask contained in the plateau mask
    pub lower_inclusion: bool,
    /// plateau contained in the hull fattened by N eps + 3 h
    pub upper_inclusion: bool,
}

pub fn experiment_convex_hull(cfg: &RunConfig) -> Result<HullReport> {
    let graph = crate::epshull::build_obstacle_graph(&cfg.obstacle, &cfg.u0_field(), 200)?;
    if !graph.connected {
        eprintln!(
            "warning: obstacle connectivity graph is disconnected; \
             the positivity set need not approach the convex hull"
        );
    }
    let delta_t = 0.1;
    let cadence = cadence_for(cfg, delta_t);
    let h = cfg.grid.spacing;
    let n_eps = cfg.dim as f64 * cfg.solver.eps;

    let hull_mask = reference_hull_mask(cfg, 0.0)?;
    let hull_eps_mask = reference_hull_mask(cfg, n_eps)?;

    let mut series = MetricSeries::default();
    let mut prev: Option<(f64, BoolMask)> = None;
    let mut plateau: Option<(f64, BoolMask)> = None;
    stream_solver(cfg, cadence, |t, field| {
        let mask = positivity_set(field);
        if t > 0.0 {
            let dist_co_k = hausdorff_distance(&mask, &hull_mask).unwrap_or(f64::NAN);
            let dist_co_k_eps = hausdorff_distance(&mask, &hull_eps_mask).unwrap_or(f64::NAN);
            series.push(MetricRow {
                time: t,
                volume: mask.volume(),
                radius: radius_estimate(&mask),
                dist_co_k,
                dist_co_k_eps,
            });
        }
        if plateau.is_none() {
            if let Some((t0, m0)) = &prev {
                if let Ok(d) = hausdorff_distance(m0, &mask) {
                    if d <= h {
                        plateau = Some((*t0, m0.clone()));
                    }
                }
            }
        }
        prev = Some((t, mask));
        Ok(Flow::Continue)
    })?;
    let (plateau_time, plateau_mask) = match plateau {
        Some((t, m)) => (Some(t), Some(m)),
        None => (None, None),
    };
    let (lower, upper) = match &plateau_mask {
        Some(m) => {
            let fat = reference_hull_mask(cfg, n_eps + 3.0 * h)?;
            (hull_mask.is_subset_of(m), m.is_subset_of(&fat))
        }
        None => (false, false),
    };
    Ok(HullReport {
        series,
        graph_connected: graph.connected,
        plateau_time,
        plateau_mask,
        lower_inclusion: lower,
        upper_inclusion: upper,
    })
}

fn cadence_for(cfg: &RunConfig, delta_t: f64) -> usize {
    let dt = match cfg.solver.kind {
        SolverKind::Game | SolverKind::AltGame => 0.5 * cfg.solver.eps * cfg.solver.eps,
        SolverKind::Pde => cfg.solver.dt.unwrap_or_else(|| {
            PdeParams::stable_dt(cfg.dim, cfg.grid.spacing, cfg.solver.cfl_safety)
        }),
    };
    ((delta_t / dt).round() as usize).max(1)
}

/// Neck width study contrasting the two curvature speeds on a two-ball
/// obstacle: the minimal-curvature neck settles at the hull radius while
/// the mean-curvature neck keeps pinching.
#[derive(Clone, Debug)]
pub struct NeckReport {
    /// (time, neck radius) for the minimal-curvature run
    pub min_series: Vec<(f64, f64)>,
    /// (time, neck radius) for the mean-curvature run
    pub mean_series: Vec<(f64, f64)>,
}

pub fn experiment_mean_vs_min(cfg: &RunConfig) -> Result<NeckReport> {
    if cfg.solver.kind != SolverKind::Pde {
        return Err(Error::Config("neck study runs on the direct solver".into()));
    }
    let cadence = cadence_for(cfg, 0.05);
    let mut min_cfg = cfg.clone();
    min_cfg.solver.curvature = crate::pde::CurvatureMode::Min;
    let mut mean_cfg = cfg.clone();
    mean_cfg.solver.curvature = crate::pde::CurvatureMode::Mean;
    let neck = |snaps: &Snapshots| -> Vec<(f64, f64)> {
        snaps.iter().map(|(t, f)| (*t, neck_radius(f))).collect()
    };
    let min_snaps = run_solver_with_cadence(&min_cfg, cadence)?;
    let mean_snaps = run_solver_with_cadence(&mean_cfg, cadence)?;
    Ok(NeckReport {
        min_series: neck(&min_snaps),
        mean_series: neck(&mean_snaps),
    })
}

/// Positivity radius in the mid-plane orthogonal to the first axis (the
/// plane through x1 = 0 when the grid is symmetric).
pub fn neck_radius(field: &GridField) -> f64 {
    let spec = field.spec;
    // node column closest to x1 = 0
    let i_mid = ((0.0 - spec.origin.0[0]) / spec.spacing)
        .round()
        .clamp(0.0, (spec.dims[0] - 1) as f64) as usize;
    let mut count = 0usize;
    for k in 0..spec.dims[2] {
        for j in 0..spec.dims[1] {
            if field.value(i_mid, j, k) > 0.0 {
                count += 1;
            }
        }
    }
    let h = spec.spacing;
    if spec.dim == 2 {
        // half-width of the positive column
        0.5 * count as f64 * h
    } else {
        (count as f64 * h * h / std::f64::consts::PI).sqrt()
    }
}

/// Solve per the config and write snapshots, metrics and metadata into the
/// output directory.
pub fn run_to_disk(cfg: &RunConfig) -> Result<MetricSeries> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let started = Instant::now();
    let snaps = run_solver(cfg)?;
    let solve_ms = started.elapsed().as_millis();

    let hull_masks = if cfg.obstacle.is_empty() {
        None
    } else {
        match (
            reference_hull_mask(cfg, 0.0),
            reference_hull_mask(cfg, cfg.dim as f64 * cfg.solver.eps),
        ) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        }
    };

    let mut series = MetricSeries::default();
    for (idx, (t, field)) in snaps.iter().enumerate() {
        if cfg.write_vtk {
            let name = match cfg.solver.kind {
                SolverKind::Game | SolverKind::AltGame => {
                    let round = (t / (0.5 * cfg.solver.eps * cfg.solver.eps)).round() as usize;
                    format!("game_round_{round}.vtk")
                }
                SolverKind::Pde => format!("pde_t_{t:.4}.vtk"),
            };
            crate::io::write_field_vtk(field, "u", &cfg.output_dir.join(name))?;
        }
        if idx == 0 {
            continue;
        }
        let mask = positivity_set(field);
        let (dk, dke) = match &hull_masks {
            Some((hm, hem)) => (
                hausdorff_distance(&mask, hm).unwrap_or(f64::NAN),
                hausdorff_distance(&mask, hem).unwrap_or(f64::NAN),
            ),
            None => (f64::NAN, f64::NAN),
        };
        series.push(MetricRow {
            time: *t,
            volume: mask.volume(),
            radius: radius_estimate(&mask),
            dist_co_k: dk,
            dist_co_k_eps: dke,
        });
    }
    std::fs::write(cfg.output_dir.join("metrics.csv"), series.to_csv())?;

    let meta = serde_json::json!({
        "dimension": cfg.dim,
        "spacing": cfg.grid.spacing,
        "dims": cfg.grid.dims,
        "far_value": cfg.far_value,
        "solver": match cfg.solver.kind {
            SolverKind::Game => "game",
            SolverKind::AltGame => "alt-game",
            SolverKind::Pde => "pde",
        },
        "eps": cfg.solver.eps,
        "directions": cfg.solver.directions,
        "direction_polish": cfg.solver.direction_polish,
        "quadratic_sampling": cfg.solver.quadratic_sampling,
        "dt": match cfg.solver.kind {
            SolverKind::Pde => cfg.solver.dt.unwrap_or_else(|| PdeParams::stable_dt(
                cfg.dim, cfg.grid.spacing, cfg.solver.cfl_safety)),
            _ => 0.5 * cfg.solver.eps * cfg.solver.eps,
        },
        "cfl_safety": cfg.solver.cfl_safety,
        "t_end": cfg.solver.t_end,
        "rounds_or_steps": match cfg.solver.kind {
            SolverKind::Game | SolverKind::AltGame =>
                crate::game::rounds_for(cfg.solver.t_end, cfg.solver.eps),
            SolverKind::Pde => {
                let dt = cfg.solver.dt.unwrap_or_else(|| PdeParams::stable_dt(
                    cfg.dim, cfg.grid.spacing, cfg.solver.cfl_safety));
                (cfg.solver.t_end / dt).ceil() as usize
            }
        },
        "snapshots": snaps.len(),
        "solve_ms": solve_ms,
    });
    std::fs::write(
        cfg.output_dir.join("run.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(series)
}

/// Convenience wrapper for tests and the command line: load, solve, write.
pub fn run_config_file(path: &Path) -> Result<MetricSeries> {
    let cfg = crate::config::load_config(path)?;
    run_to_disk(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn radius_estimate_of_disc() {
        let spec = crate::grid::GridSpec::new(2, Point::xy(-1.5, -1.5), 0.01, [301, 301, 1]);
        let mask = BoolMask::from_fn(spec, |p| p.norm() <= 1.0);
        let r = radius_estimate(&mask);
        assert!((r - 1.0).abs() < 0.01, "radius {r}");
    }

    #[test]
    fn shrinking_disc_game_coarse() {
        // coarse, fast sanity run of the full pipeline; the acceptance
        // suite runs the tight-tolerance version
        let cfg = parse_config(
            r#"
dimension = 2

[grid]
origin = [-1.5, -1.5]
spacing = 0.02
dims = [151, 151]
far_value = -0.5

[initial]
kind = "ball"
center = [0.0, 0.0]
radius = 1.0

[solver]
kind = "game"
eps = 0.05
directions = 64
direction_polish = true
t_end = 0.2
snapshot_every = 40
"#,
        )
        .unwrap();
        let report = experiment_shrinking_ball(&cfg, 0.05, 0.2).unwrap();
        assert!(!report.series.rows.is_empty());
        assert!(
            report.max_rel_err < 0.10,
            "relative radius error {}",
            report.max_rel_err
        );
    }

    #[test]
    fn metrics_csv_layout() {
        let mut s = MetricSeries::default();
        s.push(MetricRow {
            time: 0.1,
            volume: 1.0,
            radius: 0.5,
            dist_co_k: f64::NAN,
            dist_co_k_eps: f64::NAN,
        });
        let csv = s.to_csv();
        assert!(csv.starts_with("time,volume,radius,dist_coK,dist_coKeps\n"));
        assert!(csv.contains("0.1,1,0.5,NaN,NaN"));
    }

    #[test]
    #[should_panic(expected = "strictly increasing")]
    fn metric_times_must_increase() {
        let mut s = MetricSeries::default();
        s.push(MetricRow {
            time: 0.2,
            volume: 1.0,
            radius: 0.5,
            dist_co_k: 0.0,
            dist_co_k_eps: 0.0,
        });
        s.push(MetricRow {
            time: 0.1,
            volume: 1.0,
            radius: 0.5,
            dist_co_k: 0.0,
            dist_co_k_eps: 0.0,
        });
    }
}
