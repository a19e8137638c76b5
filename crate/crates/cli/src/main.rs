//! Command-line front-end: feasibility analysis, solving, simulation, and
//! plot-data emission for fusion problems with overlapping covariance
//! bounds.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 infeasible,
//! 3 numerical trouble.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use oci_cli::files::{matrix_to_rows, ProblemFile, ScenarioFile};
use oci_core::error::OciError;
use oci_core::linalg::Tolerances;
use oci_core::sim::{self, Method};
use oci_core::solver::{self, Objective};
use oci_core::{feasibility, info, oracle};

const EXIT_OK: i32 = 0;
const EXIT_PARSE: i32 = 1;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "oci",
    about = "Worst-case-optimal fusion under overlapping covariance bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the boundedness and feasibility tests on a problem file.
    Feas { file: PathBuf },
    /// Solve a problem file and print the gain, bound, and certificates.
    Solve {
        file: PathBuf,
        /// Optimality criterion; overrides the file's "objective" field.
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        /// Verify the solution against this many sampled admissible
        /// correlations.
        #[arg(long)]
        check: Option<usize>,
        /// Seed for the verification sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the cooperative-localization simulation and write CSV metrics.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Output directory for metrics.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit ellipsoid boundary points for 2-D or 3-D problems.
    Plotdata {
        file: PathBuf,
        /// Output directory for points.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Boundary points per ellipsoid (squared for 3-D grids).
        #[arg(long, default_value_t = 128)]
        resolution: usize,
        /// Seed for the admissible-set samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of sampled admissible-set ellipsoids to emit.
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Trace,
    Logdet,
}

impl From<ObjectiveArg> for Objective {
    fn from(a: ObjectiveArg) -> Self {
        match a {
            ObjectiveArg::Trace => Objective::Trace,
            ObjectiveArg::Logdet => Objective::LogDet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Oci,
    Sci,
    Naive,
}

impl From<MethodArg> for Method {
    fn from(a: MethodArg) -> Self {
        match a {
            MethodArg::Oci => Method::Oci,
            MethodArg::Sci => Method::Sci,
            MethodArg::Naive => Method::Naive,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Feas { file } => cmd_feas(&file),
        Command::Solve {
            file,
            objective,
            check,
            seed,
        } => cmd_solve(&file, objective, check, seed),
        Command::Simulate { file, method, out } => cmd_simulate(&file, method.into(), &out),
        Command::Plotdata {
            file,
            out,
            resolution,
            seed,
            samples,
        } => cmd_plotdata(&file, &out, resolution, seed, samples),
    };
    std::process::exit(code);
}

fn parse_fail(message: &str) -> i32 {
    eprintln!("error: {message}");
    EXIT_PARSE
}

fn solver_error_code(err: &OciError) -> i32 {
    match err {
        OciError::Infeasible { .. } | OciError::HRankDeficient { .. } => EXIT_INFEASIBLE,
        OciError::NumericalTrouble { .. } => EXIT_NUMERICAL,
        OciError::Simulation { source, .. } => solver_error_code(source),
        _ => EXIT_PARSE,
    }
}

fn cmd_feas(path: &PathBuf) -> i32 {
    let tol = Tolerances::default();
    let file = match ProblemFile::load(path) {
        Ok(f) => f,
        Err(e) => return parse_fail(&e),
    };
    let problem = match file.to_problem(&tol) {
        Ok(p) => p,
        Err(e) => return parse_fail(&e),
    };
    let report = match feasibility::analyze(&problem, &tol) {
        Ok(r) => r,
        Err(e) => return parse_fail(&e.to_string()),
    };
    let out = json!({
        "p_bounded": report.p_bounded,
        "cpc_bounded": report.cpc_bounded,
        "h_full_rank": report.h_full_rank,
        "sufficient_feasible": report.sufficient_feasible,
        "oci_feasible": report.oci_feasible,
        "borderline": report.borderline(),
        "margins": {
            "w": {"rank": report.margins.w.rank, "margin": report.margins.w.margin},
            "wc": {"rank": report.margins.wc.rank, "margin": report.margins.wc.margin},
            "h": {"rank": report.margins.h.rank, "margin": report.margins.h.margin},
            "condition": {
                "rank": report.margins.condition.rank,
                "margin": report.margins.condition.margin,
            },
        },
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    if report.oci_feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    }
}

fn cmd_solve(path: &PathBuf, objective: Option<ObjectiveArg>, check: Option<usize>, seed: u64) -> i32 {
    let tol = Tolerances::default();
    let file = match ProblemFile::load(path) {
        Ok(f) => f,
        Err(e) => return parse_fail(&e),
    };
    let problem = match file.to_problem(&tol) {
        Ok(p) => p,
        Err(e) => return parse_fail(&e),
    };
    let obj = match objective {
        Some(o) => o.into(),
        None => match file.file_objective() {
            Ok(o) => o,
            Err(e) => return parse_fail(&e),
        },
    };
    let projection = match file.to_projection(&tol) {
        Ok(p) => p,
        Err(e) => return parse_fail(&e),
    };
    let solved = match &projection {
        Some(req) => solver::solve_with_projection_bound(&problem, obj, req, &tol),
        None => solver::solve_kahan_oci(&problem, obj, &tol),
    };
    let solution = match solved {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return solver_error_code(&e);
        }
    };
    let mut out = json!({
        "K": matrix_to_rows(&solution.gain),
        "B": matrix_to_rows(solution.fused_bound.as_matrix()),
        "omega": solution.weights.as_vector().iter().copied().collect::<Vec<f64>>(),
        "Y": matrix_to_rows(solution.kahan_bound.as_matrix()),
        "U": matrix_to_rows(solution.certificate.as_matrix()),
        "objective_value": solution.objective_value,
        "status": "optimal",
    });
    if let Some(proj) = &solution.projection {
        out["M"] = json!(matrix_to_rows(proj.bound.as_matrix()));
        out["gamma"] = json!(proj.gamma);
    }
    if let Some(samples) = check {
        match oracle::check_consistency(
            &problem,
            &solution.gain,
            &solution.fused_bound,
            samples,
            seed,
            &tol,
        ) {
            Ok(verdict) => {
                out["check"] = json!({
                    "max_violation": verdict.max_violation,
                    "samples": verdict.samples_checked,
                    "pass": verdict.pass,
                });
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_NUMERICAL;
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    EXIT_OK
}

fn cmd_simulate(path: &PathBuf, method: Method, out_dir: &PathBuf) -> i32 {
    let tol = Tolerances::default();
    let file = match ScenarioFile::load(path) {
        Ok(f) => f,
        Err(e) => return parse_fail(&e),
    };
    let scenario = match file.to_scenario() {
        Ok(s) => s,
        Err(e) => return parse_fail(&e),
    };
    let metrics = match sim::run(&scenario, method, &tol) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return solver_error_code(&e);
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return parse_fail(&format!("cannot create {}: {e}", out_dir.display()));
    }
    let method_name = match method {
        Method::Oci => "oci",
        Method::Sci => "sci",
        Method::Naive => "naive",
    };
    let mut csv = String::from("run,step,vehicle,sq_error,bound,method\n");
    for run_idx in 0..metrics.runs {
        for step in 0..metrics.steps {
            for vehicle in 0..metrics.vehicles {
                csv.push_str(&format!(
                    "{run_idx},{step},{vehicle},{},{},{method_name}\n",
                    metrics.sq_error(run_idx, step, vehicle),
                    metrics.bound(step, vehicle),
                ));
            }
        }
    }
    let csv_path = out_dir.join("metrics.csv");
    if let Err(e) = std::fs::write(&csv_path, csv) {
        return parse_fail(&format!("cannot write {}: {e}", csv_path.display()));
    }
    let mut violation_cells = 0usize;
    let mut cells = 0usize;
    for step in 0..metrics.steps {
        for vehicle in 0..metrics.vehicles {
            cells += 1;
            if metrics.violation_count(step, vehicle) > 0 {
                violation_cells += 1;
            }
        }
    }
    let summary = json!({
        "method": method_name,
        "runs": metrics.runs,
        "steps": metrics.steps,
        "vehicles": metrics.vehicles,
        "time_avg_bound": metrics.time_avg_bound(),
        "violation_multiplier": metrics.violation_multiplier,
        "cells": cells,
        "cells_with_violations": violation_cells,
    });
    let summary_path = out_dir.join("summary.json");
    if let Err(e) = std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("json"),
    ) {
        return parse_fail(&format!("cannot write {}: {e}", summary_path.display()));
    }
    EXIT_OK
}

fn cmd_plotdata(path: &PathBuf, out_dir: &PathBuf, resolution: usize, seed: u64, samples: usize) -> i32 {
    let tol = Tolerances::default();
    let file = match ProblemFile::load(path) {
        Ok(f) => f,
        Err(e) => return parse_fail(&e),
    };
    let problem = match file.to_problem(&tol) {
        Ok(p) => p,
        Err(e) => return parse_fail(&e),
    };
    let m = problem.corr_dim();
    if m != 2 && m != 3 {
        return parse_fail(&format!(
            "plot data supports correlation dimension 2 or 3, got {m}"
        ));
    }
    let solution = match solver::solve_kahan_oci(&problem, Objective::Trace, &tol) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return solver_error_code(&e);
        }
    };
    let mut sets: Vec<(String, info::EllipsoidBoundary)> = Vec::new();
    let ys = match problem.info().inverse_bounds(&tol) {
        Ok(ys) => ys,
        Err(e) => return parse_fail(&e.to_string()),
    };
    for (b, y) in ys.iter().enumerate() {
        match info::ellipsoid_boundary_points(y, resolution, &tol) {
            Ok(pts) => sets.push((format!("bound{}", b + 1), pts)),
            Err(e) => return parse_fail(&e.to_string()),
        }
    }
    match info::ellipsoid_boundary_points(&solution.kahan_bound, resolution, &tol) {
        Ok(pts) => sets.push(("kahan".into(), pts)),
        Err(e) => return parse_fail(&e.to_string()),
    }
    let sampled = match info::sample_admissible(problem.info(), samples, seed, &tol) {
        Ok(ps) => ps,
        Err(e) => return parse_fail(&e.to_string()),
    };
    for (j, p) in sampled.iter().enumerate() {
        // An admissible correlation is drawn as the ellipsoid of its
        // inverse, the same geometry as the bounds.
        let inv = match p.inverse() {
            Ok(i) => i,
            Err(e) => return parse_fail(&e.to_string()),
        };
        let y = match oci_core::linalg::PsdMatrix::semidefinite(inv, &tol) {
            Ok(y) => info::InverseBound::new(y),
            Err(e) => return parse_fail(&e.to_string()),
        };
        match info::ellipsoid_boundary_points(&y, resolution, &tol) {
            Ok(pts) => sets.push((format!("sample{}", j + 1), pts)),
            Err(e) => return parse_fail(&e.to_string()),
        }
    }

    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return parse_fail(&format!("cannot create {}: {e}", out_dir.display()));
    }
    let header = if m == 2 {
        "set,index,x1,x2,degenerate\n"
    } else {
        "set,index,x1,x2,x3,degenerate\n"
    };
    let mut csv = String::from(header);
    for (name, boundary) in &sets {
        for (idx, p) in boundary.points.iter().enumerate() {
            if m == 2 {
                csv.push_str(&format!(
                    "{name},{idx},{},{},{}\n",
                    p[0], p[1], boundary.degenerate
                ));
            } else {
                csv.push_str(&format!(
                    "{name},{idx},{},{},{},{}\n",
                    p[0], p[1], p[2], boundary.degenerate
                ));
            }
        }
    }
    let csv_path = out_dir.join("points.csv");
    if let Err(e) = std::fs::write(&csv_path, csv) {
        return parse_fail(&format!("cannot write {}: {e}", csv_path.display()));
    }
    let summary = json!({
        "dimension": m,
        "resolution": resolution,
        "sets": sets.iter().map(|(name, b)| json!({
            "name": name,
            "points": b.points.len(),
            "degenerate": b.degenerate,
            "clip_radius": b.clip_radius,
        })).collect::<Vec<_>>(),
        "omega": solution.weights.as_vector().iter().copied().collect::<Vec<f64>>(),
    });
    let summary_path = out_dir.join("summary.json");
    if let Err(e) = std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("json"),
    ) {
        return parse_fail(&format!("cannot write {}: {e}", summary_path.display()));
    }
    EXIT_OK
}
