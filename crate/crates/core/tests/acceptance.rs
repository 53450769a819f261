//! Acceptance suite: one PASS/FAIL line per criterion, with the individual
//! checks and wall-clock times underneath. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use relboltz_core::checks::{self, CheckOutcome};
use relboltz_core::collision_op::QuadratureSpec;
use relboltz_core::limit_harness::{convergence_from_trajectories, SampleSpec};
use relboltz_core::solver::{calibrate_b, ks_bracket_solve, picard_solve, weighted_data, SolveConfig, Trajectory};
use relboltz_core::Result;

const SEED: u64 = 42;

struct Criterion {
    id: usize,
    title: &'static str,
    outcomes: Vec<CheckOutcome>,
    elapsed: Duration,
    limit: Option<Duration>,
    error: Option<String>,
}

impl Criterion {
    fn passed(&self) -> bool {
        self.error.is_none() && checks::all_passed(&self.outcomes) && self.limit.is_none_or(|l| self.elapsed <= l)
    }

    fn report(&self) {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let limit = self.limit.map_or(String::new(), |l| format!(" (limit {:.0} s)", l.as_secs_f64()));
        println!("criterion {}: {} {} [{:.1} s{}]", self.id, status, self.title, self.elapsed.as_secs_f64(), limit);
        for o in &self.outcomes {
            let s = if o.passed { "ok  " } else { "FAIL" };
            println!("    {s} {:<36} residual {:.3e}  tolerance {:.3e}", o.name, o.max_residual, o.tolerance);
        }
        if let Some(e) = &self.error {
            println!("    error: {e}");
        }
    }
}

fn run(
    id: usize,
    title: &'static str,
    limit: Option<Duration>,
    body: impl FnOnce() -> Result<Vec<CheckOutcome>>,
) -> Criterion {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let (outcomes, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let c = Criterion { id, title, outcomes, elapsed, limit, error };
    c.report();
    c
}

fn mins(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

fn main() -> ExitCode {
    let mut all = Vec::new();

    all.push(run(1, "conservation and invariance, 1e5 events per frame and c", mins(1), || {
        checks::conservation_suite(100_000, &[1.0, 2.0, 10.0, 100.0], SEED)
    }));
    all.push(run(2, "Glassey-Strauss Jacobian against finite differences", None, || checks::jacobian_suite(100, SEED)));
    all.push(run(3, "Lorentz constructors and boost-based post-collision map", None, || checks::lorentz_suite(1000, SEED)));
    all.push(run(4, "collision-invariant weight identity", None, || checks::weight_identity_suite(10_000, SEED)));
    all.push(run(5, "Juttner normalisation, envelope and Gaussian bound", None, || checks::juttner_suite(SEED)));

    let dyadic: Vec<f64> = (2..=8).map(|k| 2f64.powi(k)).collect();
    all.push(run(6, "component decay slopes over c = 4..256", mins(2), || {
        checks::slope_suite(&dyadic, &SampleSpec::default())
    }));
    all.push(run(7, "cut-off measure and threshold bound", None, || checks::cutoff_suite(&dyadic, 20, SEED)));

    let base = SolveConfig::desk(1.0);
    let uniform_cs = [1.0, 2.0, 4.0, 8.0, 16.0];
    let mut calibration: Option<(f64, Vec<Trajectory>, Duration)> = None;
    all.push(run(8, "solver uniformity in c with a Kaniel-Shinbrot certificate", mins(10), || {
        let start = Instant::now();
        let (b, trajs) = calibrate_b(&base, &uniform_cs, 4)?;
        let calibrated = SolveConfig { b, ..base.clone() };
        println!("    calibrated b = {b:.3e}");
        let mut out = checks::uniformity_checks(&calibrated, &trajs);
        let bracket = ks_bracket_solve(&weighted_data(&calibrated), &calibrated)?;
        out.extend(checks::ks_checks(&bracket, &trajs[0]));
        calibration = Some((b, trajs, start.elapsed()));
        Ok(out)
    }));

    let limit_cs = [2.0, 4.0, 8.0, 16.0, 32.0];
    all.push(run(9, "Newtonian limit of the solution, c = 2..32", mins(30), || {
        let start = Instant::now();
        let mut charged = Duration::ZERO;
        let mut reuse: Vec<Trajectory> = Vec::new();
        if let Some((b, trajs, spent)) = &calibration {
            if *b == base.b {
                reuse = trajs.iter().filter(|t| limit_cs.contains(&t.c)).cloned().collect();
                charged = *spent;
            }
        }
        let mut rel = Vec::new();
        for &c in &limit_cs {
            match reuse.iter().find(|t| t.c == c) {
                Some(t) => rel.push(t.clone()),
                None => {
                    let cfg = SolveConfig { c, ..base.clone() };
                    rel.push(picard_solve(&weighted_data(&cfg), &cfg)?);
                }
            }
        }
        let ncfg = SolveConfig { c: f64::INFINITY, ..base.clone() };
        let newton = picard_solve(&weighted_data(&ncfg), &ncfg)?;
        let study = convergence_from_trajectories(&base, &newton, &rel)?;
        for p in &study.points {
            println!(
                "    c = {:>4}  error {:.4e}  floor {:.3e}  {}",
                p.c,
                p.error,
                p.trunc_floor,
                if p.included { "included" } else { "excluded" }
            );
        }
        let total = charged + start.elapsed();
        println!("    slope {:.4}  r2 {:.5}  solve time charged {:.1} s", study.fit.slope, study.fit.r2, total.as_secs_f64());
        let mut out = checks::limit_checks(&study);
        out.push(CheckOutcome::within("limit_runtime_s", total.as_secs_f64(), 1800.0));
        Ok(out)
    }));

    all.push(run(10, "discrete moment conservation and refinement", None, || {
        checks::moment_suite(&QuadratureSpec::grid(2, 6.0, 24, 16), &[1.0, 10.0])
    }));

    let failed: Vec<usize> = all.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    println!();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", all.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria failed: {:?}", failed.len(), all.len(), failed);
        ExitCode::FAILURE
    }
}
