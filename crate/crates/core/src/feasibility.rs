//! Boundedness and feasibility tests for the fusion problem: the two rank
//! conditions for bounded admissible sets, the sufficient condition built
//! from them, and the exact rank test that characterizes solvability.

use nalgebra::DMatrix;

use crate::error::{OciError, Result};
use crate::info::{stacked_w, InfoStructure};
use crate::linalg::{self, RankReport, SymMatrix, Tolerances};
use crate::solver::FusionProblem;

/// Rank margins behind each boolean verdict; see [`RankReport`].
#[derive(Debug, Clone, Copy)]
pub struct RankMargins {
    /// Stacked selector `W`.
    pub w: RankReport,
    /// Vertical stack `[W; C]`.
    pub wc: RankReport,
    /// Observation matrix `H`.
    pub h: RankReport,
    /// The exact feasibility test matrix.
    pub condition: RankReport,
}

/// Outcome of the full feasibility analysis.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// Admissible correlations are bounded (stacked `W` full column rank).
    pub p_bounded: bool,
    /// `C P C^T` stays bounded over the admissible set
    /// (`rank W = rank [W; C]`).
    pub cpc_bounded: bool,
    /// `H` is full column rank; reported separately because it is a
    /// distinct necessary condition, not folded into the others.
    pub h_full_rank: bool,
    /// Sufficient condition: `h_full_rank` and `cpc_bounded`.
    pub sufficient_feasible: bool,
    /// Exact condition: `h_full_rank` and the feasibility matrix full rank.
    pub oci_feasible: bool,
    pub margins: RankMargins,
}

impl FeasibilityReport {
    /// True when any underlying rank verdict sits within a factor of 10 of
    /// the cutoff, i.e. the booleans are numerically fragile.
    pub fn borderline(&self) -> bool {
        self.margins.w.is_borderline()
            || self.margins.wc.is_borderline()
            || self.margins.h.is_borderline()
            || self.margins.condition.is_borderline()
    }
}

/// Admissible correlations are bounded iff the stacked selector has full
/// column rank.
pub fn p_bounded(info: &InfoStructure, tol: &Tolerances) -> bool {
    linalg::rank_tol(&stacked_w(info), tol) == info.dim()
}

/// `C P C^T` is bounded over the admissible set iff stacking `C` under `W`
/// does not raise the rank.
pub fn cpc_bounded(info: &InfoStructure, c: &DMatrix<f64>, tol: &Tolerances) -> Result<bool> {
    if c.ncols() != info.dim() {
        return Err(OciError::DimensionMismatch {
            context: "cpc_bounded: C columns vs info dimension",
            expected: info.dim(),
            found: c.ncols(),
        });
    }
    let w = stacked_w(info);
    let stacked = vstack(&w, c);
    Ok(linalg::rank_tol(&w, tol) == linalg::rank_tol(&stacked, tol))
}

/// The exact feasibility test matrix
/// `H'R^-1H - H'R^-1C (W'W + C'R^-1C)^+ C'R^-1H`.
pub fn condition_matrix(problem: &FusionProblem, tol: &Tolerances) -> Result<SymMatrix> {
    let w = stacked_w(problem.info());
    let wtw_crc = SymMatrix::new(w.transpose() * &w + problem.crc())?;
    let pinv = linalg::pinv(&wtw_crc, tol);
    let correction = problem.hrc() * pinv.as_matrix() * problem.hrc().transpose();
    SymMatrix::new(problem.hrh() - correction)
}

/// Exact feasibility: `H` full column rank and the test matrix full rank.
///
/// A rank-deficient `H` is reported as a dedicated error so callers can
/// distinguish "not enough observations" from "not enough correlation
/// knowledge".
pub fn oci_feasible(problem: &FusionProblem, tol: &Tolerances) -> Result<bool> {
    let h_report = linalg::rank_with_margin(problem.observation(), tol);
    if h_report.rank < problem.state_dim() {
        return Err(OciError::HRankDeficient {
            rank: h_report.rank,
            cols: problem.state_dim(),
        });
    }
    Ok(condition_rank(problem, tol)?.rank == problem.state_dim())
}

/// Rank of the feasibility test matrix. The cutoff is referenced to the
/// scale of `H'R^-1H`: the test matrix is a difference of terms of that
/// size, so an exactly-singular result appears as round-off at that scale.
fn condition_rank(problem: &FusionProblem, tol: &Tolerances) -> Result<RankReport> {
    let cond = condition_matrix(problem, tol)?;
    let scale = SymMatrix::new(problem.hrh().clone())?.max_abs_eigenvalue();
    Ok(linalg::rank_with_margin_scaled(
        cond.as_matrix(),
        scale,
        tol,
    ))
}

/// Runs every test and bundles the verdicts with their rank margins.
pub fn analyze(problem: &FusionProblem, tol: &Tolerances) -> Result<FeasibilityReport> {
    let info = problem.info();
    let w = stacked_w(info);
    let w_report = linalg::rank_with_margin(&w, tol);
    let stacked = vstack(&w, problem.correlation_map());
    let wc_report = linalg::rank_with_margin(&stacked, tol);
    let h_report = linalg::rank_with_margin(problem.observation(), tol);
    let cond_report = condition_rank(problem, tol)?;

    let p_bounded = w_report.rank == info.dim();
    let cpc_bounded = w_report.rank == wc_report.rank;
    let h_full_rank = h_report.rank == problem.state_dim();
    Ok(FeasibilityReport {
        p_bounded,
        cpc_bounded,
        h_full_rank,
        sufficient_feasible: h_full_rank && cpc_bounded,
        oci_feasible: h_full_rank && cond_report.rank == problem.state_dim(),
        margins: RankMargins {
            w: w_report,
            wc: wc_report,
            h: h_report,
            condition: cond_report,
        },
    })
}

fn vstack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
        .copy_from(bottom);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::ComponentBound;
    use crate::linalg::PsdMatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pd(m: DMatrix<f64>) -> PsdMatrix {
        PsdMatrix::definite(SymMatrix::new(m).unwrap(), &tol()).unwrap()
    }

    fn full_bound(m: usize) -> InfoStructure {
        InfoStructure::new(
            m,
            vec![ComponentBound::new(
                DMatrix::identity(m, m),
                pd(DMatrix::identity(m, m)),
                &tol(),
            )
            .unwrap()],
        )
        .unwrap()
    }

    fn partial_bound_first_coord(m: usize) -> InfoStructure {
        let mut w = DMatrix::zeros(1, m);
        w[(0, 0)] = 1.0;
        InfoStructure::new(
            m,
            vec![ComponentBound::new(w, pd(DMatrix::identity(1, 1)), &tol()).unwrap()],
        )
        .unwrap()
    }

    fn example1_info() -> InfoStructure {
        let t = tol();
        InfoStructure::new(
            3,
            vec![
                ComponentBound::new(DMatrix::identity(3, 3), pd(DMatrix::identity(3, 3)), &t)
                    .unwrap(),
                ComponentBound::new(
                    DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
                    pd(DMatrix::identity(2, 2)),
                    &t,
                )
                .unwrap(),
                ComponentBound::new(
                    DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
                    pd(DMatrix::identity(2, 2)),
                    &t,
                )
                .unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn p_bounded_examples() {
        let t = tol();
        assert!(p_bounded(&full_bound(3), &t));
        assert!(!p_bounded(&partial_bound_first_coord(2), &t));
        assert!(p_bounded(&example1_info(), &t));
    }

    #[test]
    fn cpc_bounded_examples() {
        let t = tol();
        let info = partial_bound_first_coord(2);
        // C = 0 never raises the rank.
        assert!(cpc_bounded(&info, &DMatrix::zeros(2, 2), &t).unwrap());
        // C = I probes the unbounded coordinate.
        assert!(!cpc_bounded(&info, &DMatrix::identity(2, 2), &t).unwrap());
        // C inside the row space of W.
        let c = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        assert!(cpc_bounded(&info, &c, &t).unwrap());
        // Column mismatch is an error.
        assert!(cpc_bounded(&info, &DMatrix::identity(3, 3), &t).is_err());
    }

    #[test]
    fn condition_hand_computed_scalar_case() {
        // H = [1;1], R = I2, C = I2, single full bound on m = 2:
        // H'R^-1H = 2, correction = 1, so the test matrix is [1].
        let t = tol();
        let problem = FusionProblem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            pd(DMatrix::identity(2, 2)),
            DMatrix::identity(2, 2),
            full_bound(2),
            &t,
        )
        .unwrap();
        let cond = condition_matrix(&problem, &t).unwrap();
        assert!((cond.as_matrix()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(oci_feasible(&problem, &t).unwrap());
    }

    #[test]
    fn zero_c_always_feasible() {
        let t = tol();
        let problem = FusionProblem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            pd(DMatrix::identity(2, 2)),
            DMatrix::zeros(2, 2),
            full_bound(2),
            &t,
        )
        .unwrap();
        assert!(oci_feasible(&problem, &t).unwrap());
    }

    #[test]
    fn difference_only_bound_is_infeasible() {
        // W bounds only the difference coordinate while C = I needs both:
        // no left inverse of H can null the unbounded direction.
        let t = tol();
        let w = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let info = InfoStructure::new(
            2,
            vec![ComponentBound::new(w, pd(DMatrix::identity(1, 1)), &t).unwrap()],
        )
        .unwrap();
        let problem = FusionProblem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            pd(DMatrix::identity(2, 2)),
            DMatrix::identity(2, 2),
            info,
            &t,
        )
        .unwrap();
        assert!(!oci_feasible(&problem, &t).unwrap());
        let report = analyze(&problem, &t).unwrap();
        assert!(!report.oci_feasible);
        assert!(!report.sufficient_feasible);
        assert!(!report.p_bounded);
        assert!(!report.cpc_bounded);
    }

    #[test]
    fn analyze_example1_all_true() {
        let t = tol();
        let problem = FusionProblem::new(
            DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]),
            pd(DMatrix::identity(3, 3)),
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            example1_info(),
            &t,
        )
        .unwrap();
        let report = analyze(&problem, &t).unwrap();
        assert!(report.p_bounded);
        assert!(report.cpc_bounded);
        assert!(report.h_full_rank);
        assert!(report.sufficient_feasible);
        assert!(report.oci_feasible);
        assert!(!report.borderline());
    }

    #[test]
    fn partial_w_with_matching_c_is_sufficient() {
        let t = tol();
        let info = partial_bound_first_coord(2);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.0]);
        let problem = FusionProblem::new(
            DMatrix::identity(2, 2),
            pd(DMatrix::identity(2, 2)),
            c,
            info,
            &t,
        )
        .unwrap();
        let report = analyze(&problem, &t).unwrap();
        assert!(!report.p_bounded);
        assert!(report.cpc_bounded);
        assert!(report.sufficient_feasible);
        assert!(report.oci_feasible);
    }

    #[test]
    fn rank_deficient_h_is_a_dedicated_error() {
        let t = tol();
        let problem = FusionProblem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            pd(DMatrix::identity(2, 2)),
            DMatrix::zeros(2, 2),
            full_bound(2),
            &t,
        )
        .unwrap();
        assert!(matches!(
            oci_feasible(&problem, &t),
            Err(OciError::HRankDeficient { rank: 1, cols: 2 })
        ));
        let report = analyze(&problem, &t).unwrap();
        assert!(!report.h_full_rank);
        assert!(!report.oci_feasible);
    }

    #[test]
    fn scale_invariance_of_flags() {
        let t = tol();
        for scale in [1e-3, 1.0, 1e3] {
            let problem = FusionProblem::new(
                DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
                pd(DMatrix::identity(2, 2) * scale),
                DMatrix::identity(2, 2),
                full_bound(2),
                &t,
            )
            .unwrap();
            assert!(oci_feasible(&problem, &t).unwrap());
            let report = analyze(&problem, &t).unwrap();
            assert!(report.oci_feasible && report.sufficient_feasible);
        }
    }
}
