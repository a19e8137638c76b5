//! On-disk formats: fusion problems and simulation scenarios as JSON with
//! row-major nested arrays, plus conversion into the core types.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use oci_core::baselines;
use oci_core::info::{ComponentBound, InfoStructure};
use oci_core::linalg::{PsdMatrix, SymMatrix, Tolerances};
use oci_core::sim::NetworkScenario;
use oci_core::solver::{FusionProblem, Objective, ProjectionBoundRequest};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundEntry {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionEntry {
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub gamma: f64,
    #[serde(default)]
    pub kind: Option<String>,
}

/// One fusion instance on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub bounds: Vec<BoundEntry>,
    #[serde(default)]
    pub projection: Option<ProjectionEntry>,
    #[serde(default)]
    pub objective: Option<String>,
}

/// One simulation scenario on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub vehicles: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "R_meas")]
    pub r_meas: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    pub monte_carlo_runs: usize,
    #[serde(default)]
    pub initial_truth: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_bounds: Option<Vec<f64>>,
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, String> {
    if rows.is_empty() {
        return Err(format!("{what}: matrix must have at least one row"));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(format!("{what}: matrix must have at least one column"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(format!(
                "{what}: row {i} has {} entries, expected {cols}",
                r.len()
            ));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn parse_objective(name: Option<&str>) -> Result<Objective, String> {
    match name {
        None | Some("trace") => Ok(Objective::Trace),
        Some("logdet") => Ok(Objective::LogDet),
        Some(other) => Err(format!(
            "objective: expected \"trace\" or \"logdet\", got \"{other}\""
        )),
    }
}

impl ProblemFile {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_problem(&self, tol: &Tolerances) -> Result<FusionProblem, String> {
        let h = matrix_from_rows(&self.h, "H")?;
        let r = matrix_from_rows(&self.r, "R")?;
        let c = matrix_from_rows(&self.c, "C")?;
        let r = SymMatrix::new(r).map_err(|e| format!("R: {e}"))?;
        let r = PsdMatrix::definite(r, tol).map_err(|e| format!("R: {e}"))?;
        if self.bounds.is_empty() {
            return Err("bounds: at least one entry required".into());
        }
        let m = c.ncols();
        let mut parts = Vec::with_capacity(self.bounds.len());
        for (i, b) in self.bounds.iter().enumerate() {
            let w = matrix_from_rows(&b.w, &format!("bounds[{i}].W"))?;
            let x = matrix_from_rows(&b.x, &format!("bounds[{i}].X"))?;
            let x = SymMatrix::new(x).map_err(|e| format!("bounds[{i}].X: {e}"))?;
            let x = PsdMatrix::definite(x, tol).map_err(|e| format!("bounds[{i}].X: {e}"))?;
            parts.push(
                ComponentBound::new(w, x, tol).map_err(|e| format!("bounds[{i}]: {e}"))?,
            );
        }
        let info = InfoStructure::new(m, parts).map_err(|e| format!("bounds: {e}"))?;
        FusionProblem::new(h, r, c, info, tol).map_err(|e| format!("problem: {e}"))
    }

    pub fn to_projection(&self, tol: &Tolerances) -> Result<Option<ProjectionBoundRequest>, String> {
        let _ = tol;
        match &self.projection {
            None => Ok(None),
            Some(p) => {
                let d = matrix_from_rows(&p.d, "projection.D")?;
                let kind = parse_objective(p.kind.as_deref())
                    .map_err(|e| format!("projection.{e}"))?;
                ProjectionBoundRequest::new(d, p.gamma, kind)
                    .map(Some)
                    .map_err(|e| format!("projection: {e}"))
            }
        }
    }

    pub fn file_objective(&self) -> Result<Objective, String> {
        parse_objective(self.objective.as_deref())
    }
}

impl ScenarioFile {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_scenario(&self) -> Result<NetworkScenario, String> {
        let v = self.vehicles;
        let scenario = NetworkScenario {
            vehicle_count: v,
            edges: self.edges.clone(),
            drift_var: self.q.clone(),
            meas_var: self.r_meas.clone(),
            initial_truth: self.initial_truth.clone().unwrap_or_else(|| vec![0.0; v]),
            initial_bound: self.initial_bounds.clone().unwrap_or_else(|| vec![1.0; v]),
            steps: self.steps,
            seed: self.seed,
            monte_carlo_runs: self.monte_carlo_runs,
        };
        scenario.validate().map_err(|e| format!("scenario: {e}"))?;
        Ok(scenario)
    }
}

/// Round-trips a parsed problem back into its file form.
pub fn problem_to_file(problem: &FusionProblem, original: &ProblemFile) -> ProblemFile {
    ProblemFile {
        h: matrix_to_rows(problem.observation()),
        r: matrix_to_rows(problem.noise_cov().as_matrix()),
        c: matrix_to_rows(problem.correlation_map()),
        bounds: problem
            .info()
            .bounds()
            .iter()
            .map(|b| BoundEntry {
                w: matrix_to_rows(b.selector()),
                x: matrix_to_rows(b.bound().as_matrix()),
            })
            .collect(),
        projection: original.projection.clone(),
        objective: original.objective.clone(),
    }
}

/// Convenience constructor used by tests: a basic two-estimate
/// covariance-intersection instance as a problem file.
pub fn basic_ci_problem_file(x1: f64, x2: f64, epsilon_r: f64) -> Result<ProblemFile, String> {
    let tol = Tolerances::default();
    let spec = baselines::TwoEstimateCI {
        bound1: scalar_pd(x1, &tol)?,
        bound2: scalar_pd(x2, &tol)?,
        obs1: DMatrix::identity(1, 1),
        obs2: DMatrix::identity(1, 1),
        independent1: None,
        independent2: None,
    };
    let cast = baselines::cast_basic_ci(&spec, epsilon_r, &tol).map_err(|e| e.to_string())?;
    Ok(ProblemFile {
        h: matrix_to_rows(cast.problem.observation()),
        r: matrix_to_rows(cast.problem.noise_cov().as_matrix()),
        c: matrix_to_rows(cast.problem.correlation_map()),
        bounds: cast
            .problem
            .info()
            .bounds()
            .iter()
            .map(|b| BoundEntry {
                w: matrix_to_rows(b.selector()),
                x: matrix_to_rows(b.bound().as_matrix()),
            })
            .collect(),
        projection: None,
        objective: None,
    })
}

fn scalar_pd(v: f64, tol: &Tolerances) -> Result<PsdMatrix, String> {
    let m = SymMatrix::new(DMatrix::from_element(1, 1, v)).map_err(|e| e.to_string())?;
    PsdMatrix::definite(m, tol).map_err(|e| e.to_string())
}
