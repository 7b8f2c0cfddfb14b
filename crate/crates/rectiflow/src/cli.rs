//! Command line interface.
//!
//! Every subcommand reads one problem file and writes deterministic
//! artifacts into an output directory: a report.json plus CSV tables where
//! tabular data exists. Exit codes separate four situations: 0 when the
//! requested check passed, 1 when it ran but the verified property failed
//! (a rectification probe escaping, a symmetry verdict coming back false, a
//! hypothesis probe finding a violation), 2 when numerics broke down, and 3
//! when the inputs were unusable.

use crate::diagnostics::{
    estimate_lipschitz, lipschitz_region_trend, probe_invariance, probe_uniqueness,
    CandidateCurve, EscapeKind, LipschitzConfig,
};
use crate::domain::{diagonal_points, linspace, space_time_grid, SpatialBox};
use crate::integrate::{integrate, BoundaryFace, Termination};
use crate::problem::{CompiledProblem, ProblemFile};
use crate::rectify::{build_rectification, verify_rectification, Rectification};
use crate::report::{self, float};
use crate::symmetry::{conjugate_symmetry, is_symmetry, WreathElement};
use crate::{Error, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_NUMERICAL_FAILURE: i32 = 2;
pub const EXIT_INPUT_ERROR: i32 = 3;

/// Residual ceilings a verified rectification must clear.
pub const PUSHFORWARD_THRESHOLD: f64 = 1e-5;
pub const ROUNDTRIP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "rectiflow",
    version,
    about = "Straighten first order ODE systems and work with their symmetries"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonOpts {
    /// problem description file (TOML)
    #[arg(long, value_name = "FILE")]
    problem: PathBuf,
    /// output directory for report.json and tables
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// override the relative integration tolerance
    #[arg(long)]
    rtol: Option<f64>,
    /// override the absolute integration tolerance
    #[arg(long)]
    atol: Option<f64>,
    /// override the per-curve sample count
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the checked initial conditions across the window
    Solve(CommonOpts),
    /// Build the straightening coordinates and verify them on a probe grid
    Rectify(CommonOpts),
    /// Compose, conjugate, or check symmetry elements
    Symmetry {
        #[command(subcommand)]
        action: SymmetryAction,
    },
    /// Probe the hypotheses behind the construction
    Diagnose(CommonOpts),
}

#[derive(Debug, Subcommand)]
enum SymmetryAction {
    /// Compose two named elements and measure the group axioms
    Compose {
        #[command(flatten)]
        opts: CommonOpts,
        /// outer element name
        #[arg(long)]
        left: String,
        /// inner element name
        #[arg(long)]
        right: String,
    },
    /// Conjugate a named element through the rectification
    Conjugate {
        #[command(flatten)]
        opts: CommonOpts,
        /// element name
        #[arg(long)]
        element: String,
    },
    /// Decide whether an element maps solutions to solutions
    Check {
        #[command(flatten)]
        opts: CommonOpts,
        /// element name
        #[arg(long)]
        element: String,
        /// conjugate the element through the rectification first
        #[arg(long)]
        conjugated: bool,
    },
}

/// Parse arguments and run. Returns the process exit code; never panics on
/// user input.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. }
        | Error::Dimension { .. }
        | Error::InvalidInput(_)
        | Error::MissingInverse(_) => EXIT_INPUT_ERROR,
        Error::ProbeFailed(_) | Error::NotTrivialForm { .. } => EXIT_VERIFICATION_FAILED,
        Error::Eval(_)
        | Error::OutOfRange { .. }
        | Error::TrajectoryEscaped { .. }
        | Error::TrajectoryBlowUp { .. }
        | Error::StepBudget { .. } => EXIT_NUMERICAL_FAILURE,
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(opts) => cmd_solve(&opts),
        Command::Rectify(opts) => cmd_rectify(&opts),
        Command::Symmetry { action } => match action {
            SymmetryAction::Compose { opts, left, right } => cmd_compose(&opts, &left, &right),
            SymmetryAction::Conjugate { opts, element } => cmd_conjugate(&opts, &element),
            SymmetryAction::Check { opts, element, conjugated } => {
                cmd_check(&opts, &element, conjugated)
            }
        },
        Command::Diagnose(opts) => cmd_diagnose(&opts),
    }
}

fn load_problem(opts: &CommonOpts) -> Result<CompiledProblem> {
    let mut problem = ProblemFile::load(&opts.problem)?.compile()?;
    if let Some(r) = opts.rtol {
        problem.tol.rtol = r;
    }
    if let Some(a) = opts.atol {
        problem.tol.atol = a;
    }
    problem.tol.validate()?;
    if let Some(s) = opts.samples {
        if s < 4 {
            return Err(Error::InvalidInput("--samples must be at least 4".into()));
        }
        if let Some(check) = &mut problem.check {
            check.config.samples = s;
        }
    }
    if let Some(check) = &mut problem.check {
        check.config.tol = problem.tol.clone();
    }
    Ok(problem)
}

fn build_problem_rectification(p: &CompiledProblem) -> Result<Rectification> {
    build_rectification(&p.field, p.base_time, p.window, p.demand_probe_box()?, &p.tol)
}

fn float_row(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(report::fmt_float).collect()
}

fn state_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("{prefix}{i}")).collect()
}

fn termination_json(t: Termination) -> Value {
    match t {
        Termination::ReachedTarget => json!({"kind": "reached_target"}),
        Termination::DomainEscape { t, face } => {
            let (axis, upper) = match face {
                BoundaryFace::Lower(a) => (a, false),
                BoundaryFace::Upper(a) => (a, true),
            };
            json!({"kind": "left_domain", "axis": axis, "upper": upper, "t_event": float(t)})
        }
        Termination::BlowUp { t } => json!({"kind": "blow_up", "t_event": float(t)}),
        Termination::StepUnderflow { t } => {
            json!({"kind": "step_underflow", "t_event": float(t)})
        }
    }
}

fn demand_check(p: &CompiledProblem) -> Result<&crate::problem::CheckSettings> {
    p.check.as_ref().ok_or_else(|| {
        Error::InvalidInput(
            "this command needs a [check] section with initial_conditions".into(),
        )
    })
}

fn cmd_solve(opts: &CommonOpts) -> Result<i32> {
    let p = load_problem(opts)?;
    let check = demand_check(&p)?;
    let samples = opts.samples.unwrap_or(201).max(2);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut traj_reports = Vec::new();
    let mut all_reached = true;
    for (idx, x0) in check.initial_conditions.iter().enumerate() {
        let forward = integrate(&p.field, p.base_time, x0, p.window.hi, &p.tol)?;
        let backward = integrate(&p.field, p.base_time, x0, p.window.lo, &p.tol)?;
        all_reached &=
            forward.termination().reached_target() && backward.termination().reached_target();

        let (lo, _) = backward.covered();
        let (_, hi) = forward.covered();
        if hi > lo {
            for t in linspace(lo, hi, samples) {
                let x = if t < p.base_time { backward.sample(t)? } else { forward.sample(t)? };
                let mut row = vec![idx.to_string(), report::fmt_float(t)];
                row.extend(float_row(x));
                rows.push(row);
            }
        }
        traj_reports.push(json!({
            "index": idx,
            "initial_state": Value::Array(x0.iter().map(|&v| float(v)).collect()),
            "covered": [float(lo), float(hi)],
            "forward": termination_json(forward.termination()),
            "backward": termination_json(backward.termination()),
            "steps": forward.accepted_steps() + backward.accepted_steps(),
        }));
    }

    let mut header = vec!["trajectory".to_string(), "t".to_string()];
    header.extend(state_header("x", p.field.dim()));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    report::write_csv(&opts.out.join("trajectory.csv"), &header_refs, &rows)?;

    let doc = json!({
        "command": "solve",
        "window": [float(p.window.lo), float(p.window.hi)],
        "base_time": float(p.base_time),
        "samples": samples,
        "trajectories": traj_reports,
        "all_reached_window_ends": all_reached,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if all_reached { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn cmd_rectify(opts: &CommonOpts) -> Result<i32> {
    let p = load_problem(opts)?;
    let r = build_problem_rectification(&p)?;
    let grid = space_time_grid(
        p.window,
        p.demand_probe_box()?,
        p.probe_time_samples,
        p.probe_space_samples,
    );
    let rep = verify_rectification(&r, &grid)?;

    let n = p.field.dim();
    let mut fwd_rows = Vec::new();
    let mut inv_rows = Vec::new();
    for (t, x) in &grid {
        if let Ok((tau, xi)) = r.apply(*t, x) {
            let mut row = vec![report::fmt_float(tau)];
            row.extend(float_row(x.iter().copied()));
            row.extend(float_row(xi));
            fwd_rows.push(row);
        }
        if let Ok((tau, back)) = r.apply_inverse(*t, x) {
            let mut row = vec![report::fmt_float(tau)];
            row.extend(float_row(x.iter().copied()));
            row.extend(float_row(back));
            inv_rows.push(row);
        }
    }
    let mut fwd_header = vec!["t".to_string()];
    fwd_header.extend(state_header("x", n));
    fwd_header.extend(state_header("phi", n));
    let refs: Vec<&str> = fwd_header.iter().map(|s| s.as_str()).collect();
    report::write_csv(&opts.out.join("grid_forward.csv"), &refs, &fwd_rows)?;

    let mut inv_header = vec!["t".to_string()];
    inv_header.extend(state_header("xi", n));
    inv_header.extend(state_header("back", n));
    let refs: Vec<&str> = inv_header.iter().map(|s| s.as_str()).collect();
    report::write_csv(&opts.out.join("grid_inverse.csv"), &refs, &inv_rows)?;

    let mut res_rows = Vec::new();
    for row in &rep.rows {
        let mut r = vec![report::fmt_float(row.t)];
        r.extend(float_row(row.x.iter().copied()));
        r.push(report::fmt_float(row.pushforward));
        r.push(report::fmt_float(row.roundtrip));
        res_rows.push(r);
    }
    let mut res_header = vec!["t".to_string()];
    res_header.extend(state_header("x", n));
    res_header.push("pushforward_residual".into());
    res_header.push("roundtrip_residual".into());
    let refs: Vec<&str> = res_header.iter().map(|s| s.as_str()).collect();
    report::write_csv(&opts.out.join("residuals.csv"), &refs, &res_rows)?;

    let passes = rep.passes(PUSHFORWARD_THRESHOLD, ROUNDTRIP_THRESHOLD);
    let doc = json!({
        "command": "rectify",
        "base_time": float(p.base_time),
        "window": [float(p.window.lo), float(p.window.hi)],
        "grid_points": grid.len(),
        "checked": rep.checked,
        "max_pushforward_residual": float(rep.max_pushforward_residual),
        "max_roundtrip_residual": float(rep.max_roundtrip_residual),
        "pushforward_threshold": float(PUSHFORWARD_THRESHOLD),
        "roundtrip_threshold": float(ROUNDTRIP_THRESHOLD),
        "failures": rep.failures.iter().map(|(t, x, why)| json!({
            "t": float(*t),
            "x": Value::Array(x.iter().map(|&v| float(v)).collect()),
            "reason": why,
        })).collect::<Vec<_>>(),
        "passes": passes,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if passes { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn element_json(e: &WreathElement) -> Value {
    let mut m = Map::new();
    m.insert("f".into(), Value::String(e.time_warp().to_string()));
    m.insert(
        "g".into(),
        Value::Array(e.space_part().iter().map(|c| Value::String(c.to_string())).collect()),
    );
    m.insert("has_inverse".into(), Value::Bool(e.has_inverse()));
    Value::Object(m)
}

fn cmd_compose(opts: &CommonOpts, left: &str, right: &str) -> Result<i32> {
    let p = load_problem(opts)?;
    let a = p.demand_element(left)?;
    let b = p.demand_element(right)?;
    let c = WreathElement::compose(a, b)?;

    let grid = space_time_grid(p.window, p.demand_probe_box()?, 4, 4);
    let mut composition_defect: f64 = 0.0;
    for (t, x) in &grid {
        let (tb, xb) = b.act(*t, x)?;
        let (ta, xa) = a.act(tb, &xb)?;
        let (tc, xc) = c.act(*t, x)?;
        let mut d = (ta - tc) * (ta - tc);
        for (u, v) in xa.iter().zip(&xc) {
            d += (u - v) * (u - v);
        }
        composition_defect = composition_defect.max(d.sqrt());
    }
    let round_trip = if c.has_inverse() {
        Some(c.validate_on_grid(&grid)?)
    } else {
        None
    };

    let ok = composition_defect <= 1e-9 && round_trip.is_none_or(|d| d <= 1e-9);
    let doc = json!({
        "command": "symmetry compose",
        "left": left,
        "right": right,
        "left_element": element_json(a),
        "right_element": element_json(b),
        "composed": element_json(&c),
        "grid_points": grid.len(),
        "composition_defect": float(composition_defect),
        "round_trip_defect": round_trip.map(float).unwrap_or(Value::Null),
        "passes": ok,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn cmd_conjugate(opts: &CommonOpts, element: &str) -> Result<i32> {
    let p = load_problem(opts)?;
    let elem = p.demand_element(element)?;
    let r = build_problem_rectification(&p)?;
    let conj = conjugate_symmetry(&r, &elem.to_map()?)?;

    let n = p.field.dim();
    let grid = space_time_grid(
        p.window,
        p.demand_probe_box()?,
        p.probe_time_samples,
        p.probe_space_samples,
    );
    let mut rows = Vec::new();
    let mut undefined = 0usize;
    let mut round_trip: f64 = 0.0;
    for (t, x) in &grid {
        match conj.apply(*t, x) {
            Ok((ti, xi)) => {
                let mut row = vec![report::fmt_float(*t)];
                row.extend(float_row(x.iter().copied()));
                row.push(report::fmt_float(ti));
                row.extend(float_row(xi.iter().copied()));
                rows.push(row);
                let (tb, xb) = conj.apply_inverse(ti, &xi)?;
                let mut d = (tb - t) * (tb - t);
                for (u, v) in xb.iter().zip(x) {
                    d += (u - v) * (u - v);
                }
                round_trip = round_trip.max(d.sqrt());
            }
            Err(Error::TrajectoryEscaped { .. } | Error::TrajectoryBlowUp { .. }) => {
                undefined += 1;
            }
            Err(other) => return Err(other),
        }
    }
    let mut header = vec!["t".to_string()];
    header.extend(state_header("x", n));
    header.push("t_image".into());
    header.extend(state_header("ximage", n));
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    report::write_csv(&opts.out.join("conjugate.csv"), &refs, &rows)?;

    let ok = undefined == 0 && round_trip <= 1e-6;
    let doc = json!({
        "command": "symmetry conjugate",
        "element": element,
        "element_definition": element_json(elem),
        "grid_points": grid.len(),
        "rows_written": rows.len(),
        "undefined_points": undefined,
        "round_trip_defect": float(round_trip),
        "passes": ok,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn cmd_check(opts: &CommonOpts, element: &str, conjugated: bool) -> Result<i32> {
    let p = load_problem(opts)?;
    let elem = p.demand_element(element)?;
    let check = demand_check(&p)?;

    let map = if conjugated {
        let r = build_problem_rectification(&p)?;
        conjugate_symmetry(&r, &elem.to_map()?)?
    } else {
        elem.to_map()?
    };

    let rep = is_symmetry(
        &map,
        &p.field,
        p.base_time,
        &check.initial_conditions,
        p.window,
        &check.config,
    )?;

    let doc = json!({
        "command": "symmetry check",
        "element": element,
        "element_definition": element_json(elem),
        "conjugated": conjugated,
        "tested_solutions": rep.tested_solutions,
        "max_residual": float(rep.max_residual),
        "threshold": float(check.config.threshold),
        "samples": check.config.samples,
        "undefined_transforms": rep.undefined_transforms,
        "notes": rep.notes,
        "verdict": rep.verdict,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if rep.verdict { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn cmd_diagnose(opts: &CommonOpts) -> Result<i32> {
    let p = load_problem(opts)?;
    let region: SpatialBox = match &p.diagnose.region {
        Some(r) => r.clone(),
        None => p
            .probe_box
            .clone()
            .ok_or_else(|| Error::InvalidInput(
                "diagnose needs a bounded region: set diagnose.region, a probe box, or a \
                 bounded domain"
                    .into(),
            ))?,
    };
    let config = LipschitzConfig { radii: p.diagnose.radii.clone(), ..Default::default() };

    let lip = estimate_lipschitz(&p.field, p.window, &region, &config)?;
    let trend = lipschitz_region_trend(&p.field, p.window, &region, &p.diagnose.scales, &config)?;

    let ics: Vec<Vec<f64>> = match &p.check {
        Some(c) => c.initial_conditions.clone(),
        None => diagonal_points(&region, 5),
    };
    let inv = probe_invariance(&p.field, p.base_time, p.window, &ics, &p.tol)?;

    let uniq = match &p.diagnose.point {
        None => None,
        Some(point) => {
            let mut candidates =
                vec![CandidateCurve::stationary(point, p.field.dim())];
            candidates.extend(p.diagnose.candidates.iter().cloned());
            Some(probe_uniqueness(
                &p.field,
                p.base_time,
                point,
                p.window,
                &p.diagnose.radii,
                &candidates,
                1e-9,
            )?)
        }
    };

    let lip_rows: Vec<Vec<String>> = lip
        .times
        .iter()
        .zip(&lip.slice_constants)
        .map(|(t, c)| vec![report::fmt_float(*t), report::fmt_float(*c)])
        .collect();
    report::write_csv(&opts.out.join("lipschitz.csv"), &["t", "slice_constant"], &lip_rows)?;

    let quot_rows: Vec<Vec<String>> = lip
        .refinement
        .iter()
        .map(|e| vec![report::fmt_float(e.radius), report::fmt_float(e.quotient)])
        .collect();
    report::write_csv(&opts.out.join("quotients.csv"), &["radius", "quotient"], &quot_rows)?;

    let uniqueness_failed = uniq
        .as_ref()
        .map(|u| u.lipschitz_suspect || u.counterexample)
        .unwrap_or(false);
    let hypotheses_hold = !lip.suspect_unbounded && inv.invariant && !uniqueness_failed;

    let doc = json!({
        "command": "diagnose",
        "window": [float(p.window.lo), float(p.window.hi)],
        "lipschitz": {
            "overall": float(lip.overall),
            "suspect_unbounded": lip.suspect_unbounded,
            "worst_point": {
                "t": float(lip.worst_point.0),
                "x": Value::Array(lip.worst_point.1.iter().map(|&v| float(v)).collect()),
            },
            "skipped_points": lip.skipped.len(),
            "quotients": lip.refinement.iter().map(|e| json!({
                "radius": float(e.radius),
                "quotient": float(e.quotient),
            })).collect::<Vec<_>>(),
        },
        "region_trend": {
            "scales": p.diagnose.scales.iter().map(|&s| float(s)).collect::<Vec<_>>(),
            "constants": trend.constants.iter().map(|&c| float(c)).collect::<Vec<_>>(),
            "growing": trend.growing,
        },
        "invariance": {
            "tested": inv.tested,
            "invariant": inv.invariant,
            "escapes": inv.escapes.iter().map(|e| json!({
                "x0": Value::Array(e.x0.iter().map(|&v| float(v)).collect()),
                "forward": e.forward,
                "t_event": float(e.t_event),
                "kind": match e.kind {
                    EscapeKind::BlowUp => "blow_up".to_string(),
                    EscapeKind::LeftDomain { axis, upper } => format!(
                        "left_domain_axis{}_{}", axis + 1, if upper { "upper" } else { "lower" }
                    ),
                },
            })).collect::<Vec<_>>(),
        },
        "uniqueness": uniq.as_ref().map(|u| json!({
            "lipschitz_suspect": u.lipschitz_suspect,
            "max_separation": float(u.max_separation),
            "counterexample": u.counterexample,
            "candidates": u.candidates.iter().map(|c| json!({
                "label": c.label,
                "through_point": c.through_point,
                "max_residual": float(c.max_residual),
                "satisfied": c.satisfied,
            })).collect::<Vec<_>>(),
            "quotients": u.radii.iter().map(|e| json!({
                "radius": float(e.radius),
                "quotient": float(e.quotient),
            })).collect::<Vec<_>>(),
        })).unwrap_or(Value::Null),
        "hypotheses_hold": hypotheses_hold,
    });
    report::write_to(&opts.out.join("report.json"), &doc)?;
    Ok(if hypotheses_hold { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

/// Convenience for tests: run against a prepared argv.
pub fn run_args(args: &[&str]) -> i32 {
    main_entry(args.iter().map(|s| s.to_string()))
}
