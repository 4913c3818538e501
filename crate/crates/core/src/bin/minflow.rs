//! Command-line front end: config-driven solves, the eps-hull of a point
//! file, strategy rollouts, obstacle-graph reports, property sweeps and the
//! named experiments.

use minflow::config::load_config;
use minflow::epshull::{build_obstacle_graph, eps_convex_hull, is_eps_convex};
use minflow::error::Error;
use minflow::experiments::{
    experiment_convex_hull, experiment_mean_vs_min, experiment_shrinking_ball, run_to_disk,
};
use minflow::game::{
    concentric_direction_strategy, concentric_sign_strategy, rounds_for, segment_strategy,
    GameParams, Trajectory,
};
use minflow::geom::{Point, SymMat};
use minflow::hull::PointSet;
use minflow::io::{points_from_csv, points_to_csv};
use minflow::obstacle::{EnlargedObstacle, ObstacleSpec, Primitive};
use minflow::operator::{
    check_bounds, check_elliptic, check_geometric, eval_min_curvature, mean_curvature,
};
use minflow::rng::SplitMix64;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: &str = "\
minflow - minimal-curvature flow with an obstacle

USAGE:
  minflow run --config <file.toml>
  minflow eps-hull --eps <eps> [--max-iter <n>] [--output <file.csv>] <points.csv>
  minflow strategy concentric-direction --x0 <x,y[,z]> --center <x,y[,z]> --eps <e> --rounds <n> [--seed <s>]
  minflow strategy concentric-sign      --x0 <x,y[,z]> --center <x,y[,z]> --eps <e> --rounds <n> [--seed <s>]
  minflow strategy segment --x0 <pt> --a <pt> --b <pt> --ball-radius <r> --eps <e> --rounds <n> [--signs push|alternate|random] [--seed <s>]
  minflow graph-g --config <file.toml> [--dot <file.dot>]
  minflow props [--trials <n>] [--seed <s>]
  minflow experiment <shrinking-ball|convex-hull|mean-vs-min> --config <file.toml>

Exit codes: 0 success, 1 runtime error, 2 validation failure, 64 usage.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::ConfigInvariant(_) | Error::Toml(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(args: &[String]) -> Result<ExitCode, Error> {
    let Some(cmd) = args.first() else {
        eprint!("{USAGE}");
        return Ok(ExitCode::from(64));
    };
    match cmd.as_str() {
        "run" => cmd_run(&args[1..]),
        "eps-hull" => cmd_eps_hull(&args[1..]),
        "strategy" => cmd_strategy(&args[1..]),
        "graph-g" => cmd_graph(&args[1..]),
        "props" => cmd_props(&args[1..]),
        "experiment" => cmd_experiment(&args[1..]),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            Ok(ExitCode::SUCCESS)
        }
        other => {
            eprintln!("unknown subcommand {other:?}");
            eprint!("{USAGE}");
            Ok(ExitCode::from(64))
        }
    }
}

/// Collect `--flag value` pairs and positional arguments.
fn parse_flags(args: &[String]) -> Result<(HashMap<String, String>, Vec<String>), Error> {
    let mut flags = HashMap::new();
    let mut positional = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if let Some(name) = a.strip_prefix("--") {
            let value = it
                .next()
                .ok_or_else(|| Error::Config(format!("flag --{name} needs a value")))?;
            flags.insert(name.to_string(), value.clone());
        } else {
            positional.push(a.clone());
        }
    }
    Ok((flags, positional))
}

fn flag<'a>(flags: &'a HashMap<String, String>, name: &str) -> Result<&'a str, Error> {
    flags
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| Error::Config(format!("missing required flag --{name}")))
}

fn parse_point(s: &str) -> Result<(Point, usize), Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Error::Config(format!("expected x,y or x,y,z, got {s:?}")));
    }
    let mut c = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        c[i] = p
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("bad coordinate {p:?}: {e}")))?;
    }
    Ok((Point(c), parts.len()))
}

fn cmd_run(args: &[String]) -> Result<ExitCode, Error> {
    let (flags, _) = parse_flags(args)?;
    let cfg = load_config(Path::new(flag(&flags, "config")?))?;
    let series = run_to_disk(&cfg)?;
    println!(
        "wrote {} snapshots and metrics.csv to {}",
        series.rows.len() + 1,
        cfg.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eps_hull(args: &[String]) -> Result<ExitCode, Error> {
    let (flags, positional) = parse_flags(args)?;
    let eps: f64 = flag(&flags, "eps")?
        .parse()
        .map_err(|e| Error::Config(format!("bad --eps: {e}")))?;
    let max_iter: usize = flags
        .get("max-iter")
        .map(|v| v.parse())
        .transpose()
        .map_err(|e| Error::Config(format!("bad --max-iter: {e}")))?
        .unwrap_or(50);
    let input = positional
        .first()
        .ok_or_else(|| Error::Config("eps-hull needs a points.csv argument".into()))?;
    let pts = points_from_csv(&std::fs::read_to_string(input)?)?;
    let dim = if pts.iter().all(|p| p.0[2] == 0.0) {
        2
    } else {
        3
    };
    let set = PointSet::from_points(pts);
    let hull = eps_convex_hull(&set, eps, max_iter);
    let csv = points_to_csv(hull.points.points(), dim);
    let header = format!(
        "# eps = {eps}, converged = {}, iterations = {}, eps_convex = {}\n",
        hull.converged,
        hull.iterations,
        is_eps_convex(&hull.points, eps)
    );
    let out = format!("{header}{csv}");
    match flags.get("output") {
        Some(path) => std::fs::write(PathBuf::from(path), out)?,
        None => print!("{out}"),
    }
    eprintln!(
        "{} points, converged = {} after {} iterations",
        hull.points.len(),
        hull.converged,
        hull.iterations
    );
    Ok(ExitCode::SUCCESS)
}

fn print_trajectory(traj: &Trajectory) {
    println!("round,x,y,z,sign,stopped");
    for (i, p) in traj.positions.iter().enumerate() {
        let (sign, stopped) = if i == 0 {
            (0.0, false)
        } else {
            let c = &traj.choices[i - 1];
            (c.sign, c.stopped)
        };
        println!(
            "{},{},{},{},{},{}",
            i, p.0[0], p.0[1], p.0[2], sign, stopped
        );
    }
    if traj.stopped() {
        println!("# stopped inside the enlarged obstacle");
    }
}

fn cmd_strategy(args: &[String]) -> Result<ExitCode, Error> {
    let Some(kind) = args.first() else {
        return Err(Error::Config("strategy needs a kind".into()));
    };
    let (flags, _) = parse_flags(&args[1..])?;
    let (x0, dim) = parse_point(flag(&flags, "x0")?)?;
    let eps: f64 = flag(&flags, "eps")?
        .parse()
        .map_err(|e| Error::Config(format!("bad --eps: {e}")))?;
    let rounds: usize = flag(&flags, "rounds")?
        .parse()
        .map_err(|e| Error::Config(format!("bad --rounds: {e}")))?;
    let seed: u64 = flags
        .get("seed")
        .map(|v| v.parse())
        .transpose()
        .map_err(|e| Error::Config(format!("bad --seed: {e}")))?
        .unwrap_or(0);
    let mut rng = SplitMix64::new(seed);
    let params = GameParams {
        dim,
        eps,
        n_rounds: rounds,
        direction_count: if dim == 2 { 32 } else { 256 },
        direction_polish: false,
        quadratic_sampling: false,
    };
    let traj = match kind.as_str() {
        "concentric-direction" => {
            let (z, _) = parse_point(flag(&flags, "center")?)?;
            let signs: Vec<f64> = (0..rounds).map(|_| rng.pick_sign()).collect();
            concentric_direction_strategy(&x0, &z, &params, &signs)?
        }
        "concentric-sign" => {
            let (z, _) = parse_point(flag(&flags, "center")?)?;
            let dirs: Vec<Point> = (0..rounds)
                .map(|_| loop {
                    let v = Point([
                        rng.uniform(-1.0, 1.0),
                        rng.uniform(-1.0, 1.0),
                        if dim == 3 {
                            rng.uniform(-1.0, 1.0)
                        } else {
                            0.0
                        },
                    ]);
                    if v.norm() > 0.1 {
                        return v.normalized();
                    }
                })
                .collect();
            concentric_sign_strategy(&x0, &z, &params, &dirs)?
        }
        "segment" => {
            let (a, _) = parse_point(flag(&flags, "a")?)?;
            let (b, _) = parse_point(flag(&flags, "b")?)?;
            let radius: f64 = flag(&flags, "ball-radius")?
                .parse()
                .map_err(|e| Error::Config(format!("bad --ball-radius: {e}")))?;
            let spec = ObstacleSpec::new(
                dim,
                vec![
                    Primitive::Ball { center: a, radius },
                    Primitive::Ball { center: b, radius },
                ],
                1.0,
            );
            let enlarged = EnlargedObstacle::new(spec, eps)?;
            let signs: Vec<f64> = match flags.get("signs").map(String::as_str) {
                None | Some("push") => vec![1.0; rounds],
                Some("alternate") => (0..rounds)
                    .map(|i| if i.is_multiple_of(2) { 1.0 } else { -1.0 })
                    .collect(),
                Some("random") => (0..rounds).map(|_| rng.pick_sign()).collect(),
                Some(other) => {
                    return Err(Error::Config(format!("unknown --signs policy {other:?}")))
                }
            };
            segment_strategy(&x0, &a, &b, &enlarged, &params, &signs)?
        }
        other => return Err(Error::Config(format!("unknown strategy kind {other:?}"))),
    };
    print_trajectory(&traj);
    Ok(ExitCode::SUCCESS)
}

fn cmd_graph(args: &[String]) -> Result<ExitCode, Error> {
    let (flags, _) = parse_flags(args)?;
    let cfg = load_config(Path::new(flag(&flags, "config")?))?;
    let graph = build_obstacle_graph(&cfg.obstacle, &cfg.u0_field(), 200)?;
    println!(
        "components: {}, edges: {}, connected: {}",
        graph.components.len(),
        graph.edges.len(),
        graph.connected
    );
    for (a, b, seg) in &graph.edges {
        println!(
            "  {} -- {} via ({:.3}, {:.3}, {:.3}) - ({:.3}, {:.3}, {:.3})",
            a, b, seg.a.0[0], seg.a.0[1], seg.a.0[2], seg.b.0[0], seg.b.0[1], seg.b.0[2]
        );
    }
    if let Some(path) = flags.get("dot") {
        std::fs::write(path, graph.to_dot())?;
        println!("wrote {path}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: &[String]) -> Result<ExitCode, Error> {
    let Some(name) = args.first() else {
        return Err(Error::Config("experiment needs a name".into()));
    };
    let (flags, _) = parse_flags(&args[1..])?;
    let cfg = load_config(Path::new(flag(&flags, "config")?))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    match name.as_str() {
        "shrinking-ball" => {
            let report = experiment_shrinking_ball(&cfg, 0.05, cfg.solver.t_end)?;
            std::fs::write(cfg.output_dir.join("metrics.csv"), report.series.to_csv())?;
            println!("max relative radius error: {:.4}", report.max_rel_err);
            if let Some(t) = report.extinction_time {
                println!("extinction time: {t:.4}");
            }
        }
        "convex-hull" => {
            let report = experiment_convex_hull(&cfg)?;
            std::fs::write(cfg.output_dir.join("metrics.csv"), report.series.to_csv())?;
            println!("graph connected: {}", report.graph_connected);
            match report.plateau_time {
                Some(t) => println!(
                    "plateau at t = {t:.3}; hull contained: {}, within fattened hull: {}",
                    report.lower_inclusion, report.upper_inclusion
                ),
                None => println!("no plateau reached by t_end"),
            }
        }
        "mean-vs-min" => {
            let report = experiment_mean_vs_min(&cfg)?;
            let mut csv = String::from("time,neck_min,neck_mean\n");
            for ((t, a), (_, b)) in report.min_series.iter().zip(&report.mean_series) {
                csv.push_str(&format!("{t},{a},{b}\n"));
            }
            std::fs::write(cfg.output_dir.join("neck.csv"), csv)?;
            let last = report.min_series.len() - 1;
            println!(
                "final neck radius: min-curvature {:.3}, mean-curvature {:.3}",
                report.min_series[last].1, report.mean_series[last].1
            );
        }
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
    run_json_stub(&cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn run_json_stub(cfg: &minflow::config::RunConfig) -> Result<(), Error> {
    let meta = serde_json::json!({
        "eps": cfg.solver.eps,
        "directions": cfg.solver.directions,
        "t_end": cfg.solver.t_end,
        "rounds": rounds_for(cfg.solver.t_end, cfg.solver.eps),
        "spacing": cfg.grid.spacing,
    });
    std::fs::write(
        cfg.output_dir.join("run.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

fn cmd_props(args: &[String]) -> Result<ExitCode, Error> {
    let (flags, _) = parse_flags(args)?;
    let trials: usize = flags
        .get("trials")
        .map(|v| v.parse())
        .transpose()
        .map_err(|e| Error::Config(format!("bad --trials: {e}")))?
        .unwrap_or(1000);
    let seed: u64 = flags
        .get("seed")
        .map(|v| v.parse())
        .transpose()
        .map_err(|e| Error::Config(format!("bad --seed: {e}")))?
        .unwrap_or(7);
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    let mut rng = SplitMix64::new(seed);
    let random_sym = |rng: &mut SplitMix64, dim: usize| {
        let mut e = [[0.0; 3]; 3];
        for row in e.iter_mut().take(dim) {
            for v in row.iter_mut().take(dim) {
                *v = rng.uniform(-2.0, 2.0);
            }
        }
        SymMat::new(dim, e)
    };
    let random_dir = |rng: &mut SplitMix64, dim: usize| loop {
        let p = Point([
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            if dim == 3 {
                rng.uniform(-1.0, 1.0)
            } else {
                0.0
            },
        ]);
        if p.norm() > 0.1 {
            return p.normalized();
        }
    };

    // operator sweeps
    let mut ok_bounds = true;
    let mut ok_elliptic = true;
    let mut ok_geometric = true;
    for _ in 0..trials {
        let dim = if rng.next_u64().is_multiple_of(2) {
            2
        } else {
            3
        };
        let x = random_sym(&mut rng, dim);
        let p = random_dir(&mut rng, dim).scale(rng.uniform(0.2, 3.0));
        ok_bounds &= check_bounds(&p, &x, 1e-8);
        ok_geometric &=
            check_geometric(&p, &x, rng.uniform(0.1, 3.0), rng.uniform(-5.0, 5.0), 1e-8);
        let a = random_sym(&mut rng, dim);
        let mut m = SymMat::zero(dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += a.get(k, i) * a.get(k, j);
                }
                m.set_sym(i, j, acc);
            }
        }
        ok_elliptic &= check_elliptic(&p, &x, &x.add(&m), 1e-8);
    }
    check("operator eigenvalue bounds", ok_bounds);
    check("operator degenerate ellipticity", ok_elliptic);
    check("operator geometric scaling", ok_geometric);

    // two-dimensional equality of the two curvature speeds
    let mut ok_eq = true;
    for _ in 0..trials.min(500) {
        let x = random_sym(&mut rng, 2);
        let p = random_dir(&mut rng, 2).scale(rng.uniform(0.1, 2.0));
        let a = eval_min_curvature(&p, &x, 1e-8).value;
        let b = mean_curvature(&p, &x, 1e-8);
        ok_eq &= (a - b).abs() <= 1e-12;
    }
    check("2D minimal = mean curvature", ok_eq);

    // concentric strategy sweeps
    let mut ok_direction = true;
    let mut ok_sign = true;
    for _ in 0..trials {
        let dim = if rng.next_u64().is_multiple_of(2) {
            2
        } else {
            3
        };
        let params = GameParams {
            dim,
            eps: rng.uniform(0.01, 0.2),
            n_rounds: 0,
            direction_count: if dim == 2 { 32 } else { 256 },
            direction_polish: false,
            quadratic_sampling: false,
        };
        let z = random_dir(&mut rng, dim).scale(rng.uniform(0.0, 1.0));
        let x0 = z.add(&random_dir(&mut rng, dim).scale(rng.uniform(0.3, 2.0)));
        let n = 1 + rng.index(30);
        let signs: Vec<f64> = (0..n).map(|_| rng.pick_sign()).collect();
        if let Ok(traj) = concentric_direction_strategy(&x0, &z, &params, &signs) {
            let want = x0.dist(&z).powi(2) + n as f64 * params.eps * params.eps;
            ok_direction &= (traj.last().dist(&z).powi(2) - want).abs() <= 1e-12 * (1.0 + want);
        } else {
            ok_direction = false;
        }
        let dirs: Vec<Point> = (0..n).map(|_| random_dir(&mut rng, dim)).collect();
        if let Ok(traj) = concentric_sign_strategy(&x0, &z, &params, &dirs) {
            let want = x0.dist(&z).powi(2) + n as f64 * params.eps * params.eps;
            ok_sign &= traj.last().dist(&z).powi(2) >= want - 1e-12 * (1.0 + want);
        } else {
            ok_sign = false;
        }
    }
    check("concentric equality (direction player)", ok_direction);
    check("concentric lower bound (sign player)", ok_sign);

    if all_ok {
        println!("all property sweeps passed ({trials} trials, seed {seed})");
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Error::Config("property sweep failure".into()))
    }
}
