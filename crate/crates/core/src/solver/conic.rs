//! Standard-form conic program representation and the solver backend.
//!
//! A program is `min q^T x` subject to `b - A x` lying in a product of
//! cones. Symmetric matrix data uses scaled vectorization (`svec`): the
//! upper triangle stacked column-major with off-diagonal entries scaled by
//! sqrt(2), so Euclidean inner products of vectorized data equal trace
//! inner products of the matrices.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, ExponentialConeT, IPSolver, NonnegativeConeT,
    PSDTriangleConeT, SolverStatus as ClarabelStatus, SupportedConeT, ZeroConeT,
};
use nalgebra::DMatrix;

use crate::error::{OciError, Result};
use crate::linalg::{SymMatrix, Tolerances};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Length of the scaled vectorization of a `side x side` symmetric matrix.
pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Index of entry `(i, j)` with `i <= j` in column-major upper-triangle order.
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Rebuilds a symmetric matrix from a scaled-vectorization slice.
pub fn unsvec(x: &[f64], side: usize) -> SymMatrix {
    let mut m = DMatrix::zeros(side, side);
    for j in 0..side {
        for i in 0..=j {
            let v = x[svec_index(i, j)];
            if i == j {
                m[(i, i)] = v;
            } else {
                m[(i, j)] = v / SQRT2;
                m[(j, i)] = v / SQRT2;
            }
        }
    }
    SymMatrix::new(m).expect("unsvec produces a square matrix")
}

/// One cone block, in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSpec {
    /// Equality rows.
    Zero(usize),
    /// Componentwise nonnegative rows.
    Nonneg(usize),
    /// PSD cone of a `side x side` symmetric matrix in svec form.
    PsdTriangle(usize),
    /// Exponential cone `{(x, y, z) : y e^{x/y} <= z, y > 0}`, three rows.
    Exp,
}

impl ConeSpec {
    pub fn rows(&self) -> usize {
        match self {
            ConeSpec::Zero(n) | ConeSpec::Nonneg(n) => *n,
            ConeSpec::PsdTriangle(side) => svec_len(*side),
            ConeSpec::Exp => 3,
        }
    }
}

/// Where each semantic variable group lives inside the flat variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    pub state_dim: usize,
    pub corr_dim: usize,
    /// svec of the certificate matrix U.
    pub u: std::ops::Range<usize>,
    /// svec of the fused bound B (trace objective only), stored in units
    /// of `fused_scale`: the solved matrix is `fused_scale * unsvec(...)`.
    pub fused: Option<std::ops::Range<usize>>,
    /// Variable scaling applied to the fused bound so its certificate
    /// block stays balanced when the optimal bound is large.
    pub fused_scale: f64,
    /// Kahan weights.
    pub omega: std::ops::Range<usize>,
    /// svec of the projection bound M (trace kind) or its inverse N
    /// (log-det kind).
    pub projection: Option<std::ops::Range<usize>>,
    /// Log-det hypograph auxiliaries for the main objective:
    /// lower-triangular factor entries, then the per-row hypograph scalars.
    pub logdet_obj: Option<LogDetAux>,
    /// Same auxiliaries for a log-det projection regularizer.
    pub logdet_proj: Option<LogDetAux>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogDetAux {
    /// Free entries of the lower-triangular factor, indexed by
    /// `svec_index(j, i)` for entry `(i, j)`, `i >= j`.
    pub factor: std::ops::Range<usize>,
    /// Hypograph scalars, one per dimension.
    pub hypo: std::ops::Range<usize>,
}

/// Deterministic standard-form conic program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub num_vars: usize,
    /// Linear objective, length `num_vars`.
    pub objective: Vec<f64>,
    pub cones: Vec<ConeSpec>,
    /// Triplets of the constraint map, sorted by (column, row).
    pub entries: Vec<(usize, usize, f64)>,
    /// Right-hand side, one entry per cone row.
    pub rhs: Vec<f64>,
    pub layout: VariableLayout,
}

impl ConicProgram {
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendStatus {
    Solved,
    AlmostSolved,
    PrimalInfeasible,
    AlmostPrimalInfeasible,
    DualInfeasible,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: BackendStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: u32,
}

/// Abstract solver so the math core stays testable against any backend.
pub trait ConicBackend {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances) -> Result<ConicSolution>;
}

/// The shipped interior-point backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

impl ConicBackend for ClarabelBackend {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances) -> Result<ConicSolution> {
        let rows = program.rows();
        let a = triplets_to_csc(rows, program.num_vars, &program.entries);
        let p = CscMatrix::<f64>::zeros((program.num_vars, program.num_vars));
        let cones: Vec<SupportedConeT<f64>> = program
            .cones
            .iter()
            .map(|c| match c {
                ConeSpec::Zero(n) => ZeroConeT(*n),
                ConeSpec::Nonneg(n) => NonnegativeConeT(*n),
                ConeSpec::PsdTriangle(side) => PSDTriangleConeT(*side),
                ConeSpec::Exp => ExponentialConeT(),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(200)
            .tol_gap_abs(tol.tol_solve)
            .tol_gap_rel(tol.tol_solve)
            .tol_feas(tol.tol_solve)
            .build()
            .map_err(|e| OciError::NumericalTrouble {
                details: format!("solver settings rejected: {e}"),
            })?;
        let mut solver = DefaultSolver::new(&p, &program.objective, &a, &program.rhs, &cones, settings)
            .map_err(|e| OciError::NumericalTrouble {
                details: format!("solver setup failed: {e:?}"),
            })?;
        solver.solve();
        let status = match solver.solution.status {
            ClarabelStatus::Solved => BackendStatus::Solved,
            ClarabelStatus::AlmostSolved => BackendStatus::AlmostSolved,
            ClarabelStatus::PrimalInfeasible => BackendStatus::PrimalInfeasible,
            ClarabelStatus::AlmostPrimalInfeasible => BackendStatus::AlmostPrimalInfeasible,
            ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => {
                BackendStatus::DualInfeasible
            }
            other => BackendStatus::Failed(format!("{other:?}")),
        };
        Ok(ConicSolution {
            status,
            x: solver.solution.x.clone(),
            objective_value: solver.solution.obj_val,
            iterations: solver.solution.iterations,
        })
    }
}

fn triplets_to_csc(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
    sorted.sort_by_key(|&(r, c, _)| (c, r));
    // Merge duplicates defensively; the encoder emits each cell once.
    let mut counts = vec![0usize; cols];
    let mut rowval: Vec<usize> = Vec::with_capacity(sorted.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut prev: Option<(usize, usize)> = None;
    for &(r, c, v) in &sorted {
        debug_assert!(r < rows && c < cols);
        if prev == Some((r, c)) {
            *nzval.last_mut().expect("previous entry exists") += v;
        } else {
            rowval.push(r);
            nzval.push(v);
            counts[c] += 1;
            prev = Some((r, c));
        }
    }
    let mut colptr = vec![0usize; cols + 1];
    for c in 0..cols {
        colptr[c + 1] = colptr[c] + counts[c];
    }
    CscMatrix::new(rows, cols, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_round_trip() {
        let m = SymMatrix::from_rows(3, &[2.0, 0.5, 0.1, 0.5, 3.0, -0.2, 0.1, -0.2, 1.0]).unwrap();
        let mut x = vec![0.0; svec_len(3)];
        for j in 0..3 {
            for i in 0..=j {
                let scale = if i == j { 1.0 } else { SQRT2 };
                x[svec_index(i, j)] = scale * m.as_matrix()[(i, j)];
            }
        }
        let back = unsvec(&x, 3);
        assert!(crate::linalg::frob_norm(&(back.as_matrix() - m.as_matrix())) < 1e-14);
    }

    #[test]
    fn backend_solves_tiny_psd_program() {
        // min x s.t. [x 1; 1 x] PSD; optimum x = 1.
        let layout = VariableLayout {
            state_dim: 1,
            corr_dim: 1,
            u: 0..1,
            fused: None,
            fused_scale: 1.0,
            omega: 0..0,
            projection: None,
            logdet_obj: None,
            logdet_proj: None,
        };
        let program = ConicProgram {
            num_vars: 1,
            objective: vec![1.0],
            cones: vec![ConeSpec::PsdTriangle(2)],
            entries: vec![(0, 0, -1.0), (2, 0, -1.0)],
            rhs: vec![0.0, SQRT2, 0.0],
            layout,
        };
        let sol = ClarabelBackend
            .solve(&program, &Tolerances::default())
            .unwrap();
        assert_eq!(sol.status, BackendStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn backend_detects_infeasible() {
        // x >= 1 and -x >= 0 cannot hold together.
        let layout = VariableLayout {
            state_dim: 1,
            corr_dim: 1,
            u: 0..1,
            fused: None,
            fused_scale: 1.0,
            omega: 0..0,
            projection: None,
            logdet_obj: None,
            logdet_proj: None,
        };
        let program = ConicProgram {
            num_vars: 1,
            objective: vec![0.0],
            cones: vec![ConeSpec::Nonneg(2)],
            entries: vec![(0, 0, -1.0), (1, 0, 1.0)],
            rhs: vec![-1.0, 0.0],
            layout,
        };
        let sol = ClarabelBackend
            .solve(&program, &Tolerances::default())
            .unwrap();
        assert!(matches!(
            sol.status,
            BackendStatus::PrimalInfeasible | BackendStatus::AlmostPrimalInfeasible
        ));
    }
}
