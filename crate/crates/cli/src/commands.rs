//! The five subcommands. Each writes its CSVs into the run directory and
//! returns named suites of checks; the run passes iff every check passes.
//!
//! # Files
//!
//! * `verify`: `verify.csv` with `test_name,status,max_residual,tolerance`.
//! * `kinematics`: `kinematics.csv`, one row per sampled pair and `c`.
//! * `xsec`: `catalog.csv` (`c,g,theta,value,status`), `envelope.csv`,
//!   `cutoff_measure.csv` (`tuple,c,measure`) and `c_star.csv`.
//! * `limit`: `limit_<KIND>.csv` with `c,error,trunc_floor,included`, then the
//!   line `slope,intercept,r2` and one row of fit values; `cutoff_measure.csv`
//!   for the cut-off component. Component sweeps run over `sweep_c_list`, the
//!   solution study (`limit.kind=solution`) over `c_list`.
//! * `solve`: one trajectory per `c` (`trajectory_c<c>.txt` or `.bin`),
//!   `norm_trace.csv` (`c,iteration,norm,gap`) and, when a solve fails,
//!   `divergence.csv` (`c,iterations,last_gap,message`).
//!
//! Text trajectories hold a header `t x1 x2 p1 p2 value` followed by one
//! whitespace-separated row per time, momentum node and position node, in that
//! nesting order. Binary trajectories are little-endian: the magic `RBTRAJ01`,
//! four `u32` (dimension, time nodes, position nodes per axis, momentum nodes
//! per axis), two `f64` extents (position, momentum), the `f64` times, then the
//! `f64` field values indexed `[time][momentum][position]`.

use relboltz_core::checks::{self, CheckOutcome};
use relboltz_core::collision_op::QuadratureSpec;
use relboltz_core::cross_sections::{c_star_search, cutoff_measure, envelope_check, evaluate};
use relboltz_core::frames::{Frame, ScatteringEvent};
use relboltz_core::kinematics::{check_conservation, invariants_with_angle, moller_velocity};
use relboltz_core::limit_harness::{
    component_sweep, convergence_from_trajectories, solution_convergence_study, ComponentKind, ConvergenceStudy,
    RateFit, SampleSpec,
};
use relboltz_core::solver::{
    calibrate_b, ks_bracket_solve, picard_solve, weighted_data, write_trajectory, SolveConfig, Trajectory,
    TrajectoryFormat,
};
use relboltz_core::Error;

use crate::config::{Command, LimitKind, RunConfig};
use crate::error::CliError;
use crate::output::{sci, Csv, OutputDir};

/// A named group of checks reported as one line of `summary.csv`.
#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub outcomes: Vec<CheckOutcome>,
}

impl Suite {
    fn new(name: impl Into<String>, outcomes: Vec<CheckOutcome>) -> Self {
        Self { name: name.into(), outcomes }
    }

    pub fn passed(&self) -> bool {
        !self.outcomes.is_empty() && checks::all_passed(&self.outcomes)
    }
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs `cmd` and writes its files into `out`.
pub fn run(cmd: Command, cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    match cmd {
        Command::Verify => verify(cfg, out),
        Command::Kinematics => kinematics(cfg, out),
        Command::Xsec => xsec(cfg, out),
        Command::Limit => limit(cfg, out),
        Command::Solve => solve(cfg, out),
    }
}

/// `summary.csv`: one row per suite.
pub fn summary(suites: &[Suite]) -> Csv {
    let mut csv = Csv::new(&["suite", "status", "checks", "failed", "worst_check"]);
    for s in suites {
        let failed: Vec<&CheckOutcome> = s.outcomes.iter().filter(|o| !o.passed).collect();
        let worst = failed.first().map_or(String::new(), |o| o.name.clone());
        csv.row([s.name.clone(), status(s.passed()).to_string(), s.outcomes.len().to_string(), failed.len().to_string(), worst]);
    }
    csv
}

fn outcome_rows(csv: &mut Csv, outcomes: &[CheckOutcome]) {
    for o in outcomes {
        csv.row([o.name.clone(), status(o.passed).to_string(), sci(o.max_residual), sci(o.tolerance)]);
    }
}

fn dyadic_4_256() -> Vec<f64> {
    (2..=8).map(|k| 2f64.powi(k)).collect()
}

fn verify(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    let seed = cfg.seed;
    let dyadic = dyadic_4_256();
    let mut suites = vec![
        Suite::new("conservation", checks::conservation_suite(100_000, &[1.0, 2.0, 10.0, 100.0], seed)?),
        Suite::new("gs_jacobian", checks::jacobian_suite(100, seed)?),
        Suite::new("lorentz", checks::lorentz_suite(1000, seed)?),
        Suite::new("weight_identity", checks::weight_identity_suite(10_000, seed)?),
        Suite::new("juttner", checks::juttner_suite(seed)?),
        Suite::new("component_slopes", checks::slope_suite(&dyadic, &SampleSpec { seed, ..SampleSpec::default() })?),
        Suite::new("cutoff", checks::cutoff_suite(&dyadic, 20, seed)?),
        Suite::new(
            "moments",
            checks::moment_suite(&QuadratureSpec::grid(2, cfg.p_extent, cfg.n_p, cfg.n_omega), &[1.0, 10.0])?,
        ),
    ];
    if cfg.verify_solver {
        suites.extend(verify_solver(cfg)?);
    }
    let mut csv = Csv::new(&["test_name", "status", "max_residual", "tolerance"]);
    for s in &suites {
        outcome_rows(&mut csv, &s.outcomes);
    }
    out.csv("verify.csv", &csv)?;
    Ok(suites)
}

fn verify_solver(cfg: &RunConfig) -> Result<Vec<Suite>, CliError> {
    let base = cfg.solve_config(1.0);
    let (b, trajs) = calibrate_b(&base, &[1.0, 2.0, 4.0, 8.0, 16.0], 4)?;
    let calibrated = SolveConfig { b, ..base.clone() };
    let mut uniform = checks::uniformity_checks(&calibrated, &trajs);
    let bracket = ks_bracket_solve(&weighted_data(&calibrated), &calibrated)?;
    uniform.extend(checks::ks_checks(&bracket, &trajs[0]));

    let finite: Vec<f64> = cfg.c_list.iter().copied().filter(|c| c.is_finite()).collect();
    let mut rel = Vec::new();
    for &c in &finite {
        match trajs.iter().find(|t| t.c == c && b == base.b) {
            Some(t) => rel.push(t.clone()),
            None => {
                let run = SolveConfig { c, ..base.clone() };
                rel.push(picard_solve(&weighted_data(&run), &run)?);
            }
        }
    }
    let newton_cfg = SolveConfig { c: f64::INFINITY, ..base.clone() };
    let newton = picard_solve(&weighted_data(&newton_cfg), &newton_cfg)?;
    let study = convergence_from_trajectories(&base, &newton, &rel)?;
    Ok(vec![Suite::new("solver_uniformity", uniform), Suite::new("newtonian_limit", checks::limit_checks(&study))])
}

fn kinematics(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    const CONSERVATION_TOL: f64 = 1e-9;
    const JACOBIAN_TOL: f64 = 1e-5;
    let spec = SampleSpec { dim: cfg.dim, n_samples: cfg.kinematics_samples, radius: 3.0, seed: cfg.seed, ..SampleSpec::default() };
    let tuples = spec.tuples();
    let mut csv = Csv::new(&[
        "c",
        "sample",
        "s",
        "g",
        "theta",
        "moller_velocity",
        "gs_jacobian",
        "gs_jacobian_fd_rel_err",
        "conservation_gs",
        "conservation_cm",
    ]);
    let (mut worst_cons, mut worst_jac) = (0.0_f64, 0.0_f64);
    for &c in &cfg.c_list {
        for (i, s) in tuples.iter().enumerate() {
            let gs = ScatteringEvent::new(Frame::Gs, s.p, s.q, s.omega, c)?;
            let cm = ScatteringEvent::new(Frame::Cm, s.p, s.q, s.omega, c)?;
            let inv = invariants_with_angle(&s.p, &s.q, &cm.p_out, &cm.q_out, c)?;
            let jac = relboltz_core::frames::gs_jacobian(&s.p, &s.q, &s.omega, c)?;
            let fd = checks::gs_jacobian_fd(&s.p, &s.q, &s.omega, c, 1e-5);
            let jac_err = ((jac - fd) / jac).abs();
            let cons_gs = check_conservation(&gs, CONSERVATION_TOL).residual;
            let cons_cm = check_conservation(&cm, CONSERVATION_TOL).residual;
            worst_cons = worst_cons.max(cons_gs).max(cons_cm);
            worst_jac = worst_jac.max(jac_err);
            csv.row([
                sci(c),
                i.to_string(),
                sci(inv.s),
                sci(inv.g),
                sci(inv.theta.unwrap_or(f64::NAN)),
                sci(moller_velocity(&s.p, &s.q, c)),
                sci(jac),
                sci(jac_err),
                sci(cons_gs),
                sci(cons_cm),
            ]);
        }
    }
    out.csv("kinematics.csv", &csv)?;
    Ok(vec![Suite::new(
        "kinematics",
        vec![
            CheckOutcome::within("conservation", worst_cons, CONSERVATION_TOL),
            CheckOutcome::within("gs_jacobian_fd", worst_jac, JACOBIAN_TOL),
        ],
    )])
}

const CATALOG_G: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const CATALOG_ANGLES: usize = 8;

fn catalog_points(c_list: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for &c in c_list {
        for &g in &CATALOG_G {
            for k in 0..CATALOG_ANGLES {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / CATALOG_ANGLES as f64;
                pts.push((g, theta, c));
            }
        }
    }
    pts
}

fn xsec(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    let sigma = cfg.cross_section()?;
    let points = catalog_points(&cfg.c_list);
    let mut catalog = Csv::new(&["c", "g", "theta", "value", "status"]);
    for &(g, theta, c) in &points {
        let (value, note) = match evaluate(&sigma, g, theta, c) {
            Ok(v) => (v, "ok".to_string()),
            Err(e) => (f64::NAN, format!("\"{e}\"")),
        };
        catalog.row([sci(c), sci(g), sci(theta), sci(value), note]);
    }
    out.csv("catalog.csv", &catalog)?;

    let env = envelope_check(&sigma, &cfg.envelope(), &points)?;
    let mut envelope = Csv::new(&["worst_ratio", "g", "theta", "c", "evaluated", "skipped", "status"]);
    let (g, theta, c) = env.worst_at;
    envelope.row([
        sci(env.worst_ratio),
        sci(g),
        sci(theta),
        sci(c),
        env.evaluated.to_string(),
        env.skipped.to_string(),
        status(env.passed).to_string(),
    ]);
    out.csv("envelope.csv", &envelope)?;

    let spec = SampleSpec {
        dim: cfg.dim,
        n_samples: cfg.xsec_tuples,
        radius: 3.0,
        x_radius: 2.0,
        t_final: cfg.t_final,
        cutoff: cfg.cutoff(),
        measure_samples: cfg.measure_samples,
        seed: cfg.seed,
    };
    spec.validate()?;
    let finite: Vec<f64> = cfg.c_list.iter().copied().filter(|c| c.is_finite()).collect();
    let grid = checks::c_star_grid();
    let mut measures = Csv::new(&["tuple", "c", "measure"]);
    let mut c_star = Csv::new(&["tuple", "empirical", "analytic_sufficient"]);
    let (mut full_gap, mut bound_excess, mut resolved) = (0.0_f64, 0.0_f64, true);
    for (i, s) in spec.tuples().iter().enumerate() {
        let report = c_star_search(&s.p, &s.q, spec.t_final, &spec.cutoff, &grid)?;
        let bound = report.analytic_sufficient.max(grid[0]);
        for &c in &finite {
            let m = cutoff_measure(&s.x, &s.p, &s.q, s.t, c, &spec.cutoff, spec.measure_samples, cfg.seed.wrapping_add(i as u64))?;
            if c >= bound {
                full_gap = full_gap.max(1.0 - m);
            }
            measures.row([i.to_string(), sci(c), sci(m)]);
        }
        match report.empirical {
            Some(found) => bound_excess = bound_excess.max(found - bound),
            None => resolved = false,
        }
        c_star.row([i.to_string(), sci(report.empirical.unwrap_or(f64::NAN)), sci(report.analytic_sufficient)]);
    }
    out.csv("cutoff_measure.csv", &measures)?;
    out.csv("c_star.csv", &c_star)?;

    Ok(vec![
        Suite::new(
            "envelope",
            vec![CheckOutcome::with_status("envelope_dominates", env.passed, env.worst_ratio, 1.0)],
        ),
        Suite::new(
            "cutoff",
            vec![
                CheckOutcome::within("cutoff_full_beyond_analytic_bound", full_gap, 0.0),
                CheckOutcome::with_status("c_star_below_analytic_bound", resolved && bound_excess <= 0.0, bound_excess, 0.0),
            ],
        ),
    ])
}

fn fit_rows(csv: &mut Csv, fit: Option<&RateFit>) {
    csv.row(["slope", "intercept", "r2"]);
    match fit {
        Some(f) => csv.row([sci(f.slope), sci(f.intercept), sci(f.r2)]),
        None => csv.row([sci(f64::NAN), sci(f64::NAN), sci(f64::NAN)]),
    }
}

fn limit_component(kind: ComponentKind, cfg: &RunConfig, out: &OutputDir) -> Result<Suite, CliError> {
    let sweep = component_sweep(kind, &cfg.sweep_c_list, &cfg.sample_spec())?;
    let name = format!("limit_{}", kind.name());
    let mut csv = Csv::new(&["c", "error", "trunc_floor", "included"]);
    let kept = |c: f64| sweep.fit.as_ref().is_none_or(|f| f.pairs.iter().any(|(pc, _)| *pc == c));
    for (&c, &v) in sweep.c_list.iter().zip(&sweep.values) {
        csv.row([sci(c), sci(v), sci(0.0), kept(c).to_string()]);
    }
    if kind == ComponentKind::CutoffMeasure {
        let mut table = Csv::new(&["tuple", "c", "measure"]);
        for (i, row) in sweep.table.iter().enumerate() {
            for (&c, &m) in sweep.c_list.iter().zip(row) {
                table.row([i.to_string(), sci(c), sci(m)]);
            }
        }
        out.csv("cutoff_measure.csv", &table)?;
        out.csv(&format!("{name}.csv"), &csv)?;
        let spec = cfg.sample_spec();
        let mut gap = 0.0_f64;
        for (s, row) in spec.tuples().iter().zip(&sweep.table) {
            let bound = spec.t_final * (s.p + s.q).norm() * (s.p - s.q).norm() / (2.0 * spec.cutoff.b.sqrt());
            for (&c, &m) in sweep.c_list.iter().zip(row) {
                if c >= bound {
                    gap = gap.max(1.0 - m);
                }
            }
        }
        return Ok(Suite::new(name, vec![CheckOutcome::within("cutoff_full_beyond_analytic_bound", gap, 0.0)]));
    }
    fit_rows(&mut csv, sweep.fit.as_ref());
    out.csv(&format!("{name}.csv"), &csv)?;
    let slope = sweep.fit.as_ref().map_or(f64::NAN, |f| f.slope);
    Ok(Suite::new(
        name,
        vec![CheckOutcome::within(format!("slope_{}", kind.name().to_lowercase()), (slope - 2.0).abs(), checks::slope_bracket(kind))],
    ))
}

fn write_study(study: &ConvergenceStudy, out: &OutputDir) -> Result<(), CliError> {
    let mut csv = Csv::new(&["c", "error", "trunc_floor", "included"]);
    for p in &study.points {
        csv.row([sci(p.c), sci(p.error), sci(p.trunc_floor), p.included.to_string()]);
    }
    fit_rows(&mut csv, Some(&study.fit));
    out.csv("limit_solution.csv", &csv)
}

fn limit(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    match cfg.limit_kind {
        LimitKind::One(kind) => Ok(vec![limit_component(kind, cfg, out)?]),
        LimitKind::Components => ComponentKind::ALL.into_iter().map(|k| limit_component(k, cfg, out)).collect(),
        LimitKind::Solution => {
            let base = cfg.solve_config(cfg.c_list[0]);
            let study = solution_convergence_study(&base, &cfg.c_list, weighted_data)?;
            write_study(&study, out)?;
            Ok(vec![Suite::new("limit_solution", checks::limit_checks(&study))])
        }
    }
}

fn trajectory_name(c: f64, format: TrajectoryFormat) -> String {
    let ext = match format {
        TrajectoryFormat::Text => "txt",
        TrajectoryFormat::Binary => "bin",
    };
    format!("trajectory_c{c}.{ext}")
}

fn solve(cfg: &RunConfig, out: &OutputDir) -> Result<Vec<Suite>, CliError> {
    let mut norms = Csv::new(&["c", "iteration", "norm", "gap"]);
    let mut divergence = Csv::new(&["c", "iterations", "last_gap", "message"]);
    let mut diverged = false;
    let mut outcomes = Vec::new();
    for &c in &cfg.c_list {
        let run = cfg.solve_config(c);
        let result: Result<Trajectory, Error> = picard_solve(&weighted_data(&run), &run);
        match result {
            Ok(traj) => {
                let path = out.file(&trajectory_name(c, cfg.solve_format));
                write_trajectory(&traj, &path, cfg.solve_format).map_err(|e| CliError::Io { path, source: e })?;
                for (k, (n, g)) in traj.norm_trace.iter().zip(&traj.gap_trace).enumerate() {
                    norms.row([sci(c), (k + 1).to_string(), sci(*n), sci(*g)]);
                }
                outcomes.push(CheckOutcome::within(format!("picard_converged_c{c}"), traj.final_gap, run.picard_tol));
                if cfg.solve_ks {
                    let bracket = ks_bracket_solve(&weighted_data(&run), &run)?;
                    outcomes.extend(checks::ks_checks(&bracket, &traj).into_iter().map(|mut o| {
                        o.name = format!("{}_c{c}", o.name);
                        o
                    }));
                }
            }
            Err(Error::Divergence { c, iterations, last_gap }) => {
                diverged = true;
                let message = format!("\"Picard iteration diverged after {iterations} iterations; reduce the amplitude b\"");
                divergence.row([sci(c), iterations.to_string(), sci(last_gap), message]);
                outcomes.push(CheckOutcome::with_status(format!("picard_converged_c{c}"), false, last_gap, run.picard_tol));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.csv("norm_trace.csv", &norms)?;
    if diverged {
        out.csv("divergence.csv", &divergence)?;
    }
    Ok(vec![Suite::new("solve", outcomes)])
}
