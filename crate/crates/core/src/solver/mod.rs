//! Worst-case-optimal fusion over the Kahan family of bounding ellipsoids.
//!
//! The fusion problem `z = Hx + e`, `E[ee^T] = R + C P C^T` with `P` known
//! only through component bounds is restricted to inverse bounds of the
//! form `Y = sum_b omega_b Y_b` and solved as a semidefinite program over
//! `(U, B, omega)`. The optimal gain is then recovered in closed form, and
//! a reconstruction map turns any consistent `(K, B)` pair back into
//! certificate variables without increasing the objective.

mod conic;
mod encode;

pub use conic::{
    svec_index, svec_len, unsvec, BackendStatus, ClarabelBackend, ConeSpec, ConicBackend,
    ConicProgram, ConicSolution, LogDetAux, VariableLayout,
};
pub use encode::encode_sdp;

use nalgebra::DMatrix;

use crate::error::{OciError, Result};
use crate::feasibility;
use crate::info::{
    kahan_combine_precomputed, InfoStructure, InverseBound, SimplexWeights,
};
use crate::linalg::{self, PsdMatrix, SymMatrix, Tolerances};

/// Floor for the weight-cleaning cutoff; see [`omega_zero_cutoff`].
const OMEGA_ZERO_FLOOR: f64 = 1e-12;

/// Weights below this fraction of the largest weight are treated as
/// exactly zero before forming the optimal Kahan ellipsoid. Residual
/// weights left by the interior point sit at the solver tolerance and
/// create spurious near-null eigenvalues that destabilize the
/// pseudo-inverse in the gain formula, so the cutoff must sit above the
/// solver noise.
pub(crate) fn omega_zero_cutoff(tol: &Tolerances) -> f64 {
    (100.0 * tol.tol_solve).max(OMEGA_ZERO_FLOOR)
}

/// One fusion instance: observation stack, known noise, correlation map,
/// and the partial-knowledge structure on the unknown correlation.
#[derive(Debug, Clone)]
pub struct FusionProblem {
    h: DMatrix<f64>,
    r: PsdMatrix,
    c: DMatrix<f64>,
    info: InfoStructure,
    // Cached products used by every downstream formula.
    r_inv: SymMatrix,
    hrh: SymMatrix,
    hrc: DMatrix<f64>,
    crc: SymMatrix,
}

impl FusionProblem {
    /// `h` is `o x n`, `r` the positive definite `o x o` noise covariance,
    /// `c` the `o x m` correlation map, `info` the bound structure over the
    /// `m x m` unknown correlation.
    ///
    /// Column rank of `h` is not enforced here; the feasibility analysis
    /// and the solver report a rank-deficient `h` as a dedicated error.
    pub fn new(
        h: DMatrix<f64>,
        r: PsdMatrix,
        c: DMatrix<f64>,
        info: InfoStructure,
        tol: &Tolerances,
    ) -> Result<Self> {
        let o = h.nrows();
        if h.ncols() == 0 || o == 0 {
            return Err(OciError::EmptyMatrix);
        }
        if h.ncols() > o {
            return Err(OciError::HRankDeficient {
                rank: o,
                cols: h.ncols(),
            });
        }
        if r.dim() != o {
            return Err(OciError::DimensionMismatch {
                context: "FusionProblem: R dimension vs H rows",
                expected: o,
                found: r.dim(),
            });
        }
        let min_eig = r.base().min_eigenvalue();
        if min_eig < tol.tol_pd {
            return Err(OciError::NotPositiveDefinite {
                context: "FusionProblem: R must be positive definite",
                min_eig,
            });
        }
        if c.nrows() != o {
            return Err(OciError::DimensionMismatch {
                context: "FusionProblem: C rows vs H rows",
                expected: o,
                found: c.nrows(),
            });
        }
        if c.ncols() != info.dim() {
            return Err(OciError::DimensionMismatch {
                context: "FusionProblem: C columns vs info dimension",
                expected: info.dim(),
                found: c.ncols(),
            });
        }
        let r_inv = r.inverse()?;
        let hrh = SymMatrix::new(h.transpose() * r_inv.as_matrix() * &h)?;
        let hrc = h.transpose() * r_inv.as_matrix() * &c;
        let crc = SymMatrix::new(c.transpose() * r_inv.as_matrix() * &c)?;
        Ok(Self {
            h,
            r,
            c,
            info,
            r_inv,
            hrh,
            hrc,
            crc,
        })
    }

    pub fn observation(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn noise_cov(&self) -> &PsdMatrix {
        &self.r
    }

    pub fn correlation_map(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn info(&self) -> &InfoStructure {
        &self.info
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn corr_dim(&self) -> usize {
        self.info.dim()
    }

    /// `R^{-1}`.
    pub fn r_inv(&self) -> &SymMatrix {
        &self.r_inv
    }

    /// `H^T R^{-1} H`.
    pub fn hrh(&self) -> &DMatrix<f64> {
        self.hrh.as_matrix()
    }

    /// `H^T R^{-1} C`.
    pub fn hrc(&self) -> &DMatrix<f64> {
        &self.hrc
    }

    /// `C^T R^{-1} C`.
    pub fn crc(&self) -> &DMatrix<f64> {
        self.crc.as_matrix()
    }

    fn require_full_rank_h(&self, tol: &Tolerances) -> Result<()> {
        let report = linalg::rank_with_margin(&self.h, tol);
        if report.rank < self.state_dim() {
            return Err(OciError::HRankDeficient {
                rank: report.rank,
                cols: self.state_dim(),
            });
        }
        Ok(())
    }
}

/// Optimality criterion; both are strictly increasing in the Loewner order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Trace,
    LogDet,
}

/// Request for an additional propagatable bound `M` on `D P D^T`.
#[derive(Debug, Clone)]
pub struct ProjectionBoundRequest {
    pub selector: DMatrix<f64>,
    pub gamma: f64,
    pub kind: Objective,
}

impl ProjectionBoundRequest {
    pub fn new(selector: DMatrix<f64>, gamma: f64, kind: Objective) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(OciError::PreconditionViolated {
                reason: format!("projection weight gamma must be positive, got {gamma}"),
            });
        }
        if selector.nrows() == 0 {
            return Err(OciError::EmptyMatrix);
        }
        for row in 0..selector.nrows() {
            if selector.row(row).iter().all(|v| *v == 0.0) {
                return Err(OciError::ZeroSelectorRow { row });
            }
        }
        Ok(Self {
            selector,
            gamma,
            kind,
        })
    }
}

/// Projection bound attached to a solution: `D P D^T <= bound` for every
/// admissible `P`.
#[derive(Debug, Clone)]
pub struct ProjectionBound {
    pub selector: DMatrix<f64>,
    pub gamma: f64,
    pub kind: Objective,
    pub bound: PsdMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

/// A solved fusion instance: the gain, the fused bound, and the
/// certificate variables that prove worst-case consistency.
#[derive(Debug, Clone)]
pub struct FusionSolution {
    /// Fusion gain `K` with `K H = I`.
    pub gain: DMatrix<f64>,
    /// Worst-case bound `B` on the fused error second moment.
    pub fused_bound: PsdMatrix,
    /// Optimal Kahan weights.
    pub weights: SimplexWeights,
    /// Optimal Kahan ellipsoid `Y = sum_b omega_b Y_b`.
    pub kahan_bound: InverseBound,
    /// Certificate matrix `U` from the solved program.
    pub certificate: SymMatrix,
    /// Optional propagatable bound on `D P D^T`.
    pub projection: Option<ProjectionBound>,
    /// Solved objective `J(B) (+ gamma G(M))`, recomputed from the
    /// returned matrices.
    pub objective_value: f64,
    pub status: SolverStatus,
}

/// Certificate triple produced by the reconstruction map.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub kahan_bound: InverseBound,
    pub certificate: SymMatrix,
    pub fused_bound: PsdMatrix,
}

/// Solves the Kahan-family fusion problem for the given objective.
pub fn solve_kahan_oci(
    problem: &FusionProblem,
    objective: Objective,
    tol: &Tolerances,
) -> Result<FusionSolution> {
    solve_with_backend(problem, objective, None, tol, &ClarabelBackend)
}

/// Solves with an additional regularized projection bound on `D P D^T`.
pub fn solve_with_projection_bound(
    problem: &FusionProblem,
    objective: Objective,
    request: &ProjectionBoundRequest,
    tol: &Tolerances,
) -> Result<FusionSolution> {
    solve_with_backend(problem, objective, Some(request), tol, &ClarabelBackend)
}

/// Backend-parametric entry point used by the other `solve_*` functions
/// and by tests that need raw solver access.
pub fn solve_with_backend(
    problem: &FusionProblem,
    objective: Objective,
    projection: Option<&ProjectionBoundRequest>,
    tol: &Tolerances,
    backend: &dyn ConicBackend,
) -> Result<FusionSolution> {
    tol.validate()?;
    problem.require_full_rank_h(tol)?;
    if let Some(req) = projection {
        if req.selector.ncols() != problem.corr_dim() {
            return Err(OciError::DimensionMismatch {
                context: "projection selector columns vs info dimension",
                expected: problem.corr_dim(),
                found: req.selector.ncols(),
            });
        }
        // The bound M exists iff the rows of D lie in the row space of W.
        let w = crate::info::stacked_w(problem.info());
        let rank_w = linalg::rank_tol(&w, tol);
        let stacked = stack_rows(&w, &req.selector);
        let rank_wd = linalg::rank_tol(&stacked, tol);
        if rank_w != rank_wd {
            return Err(OciError::NoProjectionBound { rank_w, rank_wd });
        }
    }
    // Gate on the exact rank test. Infeasible instances of this program
    // are only weakly infeasible (the fused bound diverges along a
    // direction that is feasible in closure), so interior-point runs on
    // them stall without producing a certificate; the rank test decides
    // exactly and cheaply.
    if !feasibility::oci_feasible(problem, tol)? {
        return Err(OciError::Infeasible {
            reason: "feasibility rank test fails".into(),
        });
    }

    let program = encode_sdp(problem, objective, projection, tol)?;
    let conic = backend.solve(&program, tol)?;
    match conic.status {
        BackendStatus::Solved | BackendStatus::AlmostSolved => {
            unpack_solution(problem, objective, projection, &program, &conic, tol)
        }
        BackendStatus::PrimalInfeasible | BackendStatus::AlmostPrimalInfeasible => {
            // The rank test already passed, so a solver infeasibility claim
            // is a disagreement with the exact condition: never trust it
            // silently.
            Err(OciError::NumericalTrouble {
                details: "solver reports infeasible but the feasibility rank test passes".into(),
            })
        }
        BackendStatus::DualInfeasible => Err(OciError::NumericalTrouble {
            details: "solver reports dual infeasibility (unbounded objective)".into(),
        }),
        BackendStatus::Failed(s) => Err(OciError::NumericalTrouble {
            details: format!("solver did not converge: {s}"),
        }),
    }
}

fn unpack_solution(
    problem: &FusionProblem,
    objective: Objective,
    projection: Option<&ProjectionBoundRequest>,
    program: &ConicProgram,
    conic: &ConicSolution,
    tol: &Tolerances,
) -> Result<FusionSolution> {
    let layout = &program.layout;
    let n = problem.state_dim();
    let x = &conic.x;

    // Solver iterates satisfy the cones only to solver tolerance, so
    // returned matrices are accepted as PSD within the verification slack.
    let loose = Tolerances {
        tol_psd: tol.tol_check,
        ..*tol
    };
    let weights = SimplexWeights::from_solver(&x[layout.omega.clone()], omega_zero_cutoff(tol))?;
    let ys = problem.info().inverse_bounds(tol)?;
    let kahan_bound = kahan_combine_precomputed(&ys, &weights, problem.corr_dim(), tol)?;

    // Polish: for fixed weights the certificate triple has a closed form,
    // and near the optimum the objective is only quadratically sensitive
    // to the weight error, so rebuilding (U, B) from the cleaned weights
    // gives machine-accurate certificates at a negligible objective cost.
    // The raw solver variables for U and B are only consulted as a
    // fallback sanity value through the residual check below.
    let ycrc = SymMatrix::new(kahan_bound.as_matrix() + problem.crc())?;
    let ycrc_pinv = linalg::pinv(&ycrc, tol);
    let certificate =
        SymMatrix::new(problem.hrc() * ycrc_pinv.as_matrix() * problem.hrc().transpose())?;
    let z = SymMatrix::new(problem.hrh() - certificate.as_matrix())?;
    let scale = SymMatrix::new(problem.hrh().clone())?.max_abs_eigenvalue();
    if linalg::rank_with_margin_scaled(z.as_matrix(), scale, tol).rank < n {
        return Err(OciError::NumericalTrouble {
            details: "solved weights leave H'R^-1H - U singular".into(),
        });
    }
    let fused_bound = PsdMatrix::semidefinite(linalg::pinv(&z, tol), &loose)?;

    let gain = recover_gain_from_kahan(problem, &kahan_bound, tol)?;

    let projection_bound = match (projection, &layout.projection) {
        (Some(req), Some(range)) => {
            let d = req.selector.nrows();
            let mat = unsvec(&x[range.clone()], d);
            let bound = match req.kind {
                Objective::Trace => {
                    PsdMatrix::semidefinite(mat, &loose).map_err(|_| OciError::NumericalTrouble {
                        details: "solver returned an indefinite projection bound".into(),
                    })?
                }
                Objective::LogDet => {
                    // Variable is N = M^{-1}; invert to report M.
                    let n_mat =
                        PsdMatrix::definite(mat, tol).map_err(|_| OciError::NumericalTrouble {
                            details: "log-det projection left N singular".into(),
                        })?;
                    PsdMatrix::semidefinite(n_mat.inverse()?, &loose)?
                }
            };
            Some(ProjectionBound {
                selector: req.selector.clone(),
                gamma: req.gamma,
                kind: req.kind,
                bound,
            })
        }
        _ => None,
    };

    // Surface tolerance trouble instead of returning a silently invalid
    // certificate: the gain must be unbiased and both LMIs must hold.
    let kh = &gain * problem.observation();
    let bias = linalg::frob_norm(&(kh - DMatrix::identity(n, n)));
    if bias > tol.tol_check {
        return Err(OciError::NumericalTrouble {
            details: format!("recovered gain violates unbiasedness by {bias:.3e}"),
        });
    }
    let lmi_residual = certificate_residual(problem, &certificate, &fused_bound, &kahan_bound)?;
    if lmi_residual > tol.tol_check {
        return Err(OciError::NumericalTrouble {
            details: format!("solution violates its own certificates by {lmi_residual:.3e}"),
        });
    }

    let mut objective_value = match objective {
        Objective::Trace => fused_bound.trace(),
        Objective::LogDet => {
            let z = SymMatrix::new(problem.hrh() - certificate.as_matrix())?;
            -log_determinant(&z)
        }
    };
    if let Some(p) = &projection_bound {
        objective_value += match p.kind {
            Objective::Trace => p.gamma * p.bound.trace(),
            Objective::LogDet => p.gamma * log_determinant(p.bound.base()),
        };
    }

    Ok(FusionSolution {
        gain,
        fused_bound,
        weights,
        kahan_bound,
        certificate,
        projection: projection_bound,
        objective_value,
        status: SolverStatus::Optimal,
    })
}

/// Largest violation (most negative eigenvalue, sign flipped) across the
/// two certificate LMIs assembled at the solution values.
pub(crate) fn certificate_residual(
    problem: &FusionProblem,
    certificate: &SymMatrix,
    fused_bound: &PsdMatrix,
    kahan_bound: &InverseBound,
) -> Result<f64> {
    let n = problem.state_dim();
    let m = problem.corr_dim();
    let mut worst: f64 = 0.0;

    let mut first = DMatrix::zeros(2 * n, 2 * n);
    first
        .view_mut((0, 0), (n, n))
        .copy_from(fused_bound.as_matrix());
    first
        .view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    first
        .view_mut((n, 0), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    first
        .view_mut((n, n), (n, n))
        .copy_from(&(problem.hrh() - certificate.as_matrix()));
    worst = worst.max(-SymMatrix::new(first)?.min_eigenvalue());

    let mut second = DMatrix::zeros(n + m, n + m);
    second
        .view_mut((0, 0), (n, n))
        .copy_from(certificate.as_matrix());
    second.view_mut((0, n), (n, m)).copy_from(problem.hrc());
    second
        .view_mut((n, 0), (m, n))
        .copy_from(&problem.hrc().transpose());
    second
        .view_mut((n, n), (m, m))
        .copy_from(&(kahan_bound.as_matrix() + problem.crc()));
    worst = worst.max(-SymMatrix::new(second)?.min_eigenvalue());

    Ok(worst)
}

/// Closed-form optimal gain for a given inverse bound `Y`:
/// `K = (H' Psi H)^{-1} H' Psi` with
/// `Psi = R^{-1} (R - C (Y + C'R^{-1}C)^+ C') R^{-1}`.
pub fn recover_gain(
    problem: &FusionProblem,
    kahan_bound: &InverseBound,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    problem.require_full_rank_h(tol)?;
    recover_gain_from_kahan(problem, kahan_bound, tol)
}

fn recover_gain_from_kahan(
    problem: &FusionProblem,
    kahan_bound: &InverseBound,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    if kahan_bound.dim() != problem.corr_dim() {
        return Err(OciError::DimensionMismatch {
            context: "recover_gain: Y dimension",
            expected: problem.corr_dim(),
            found: kahan_bound.dim(),
        });
    }
    let ycrc = SymMatrix::new(kahan_bound.as_matrix() + problem.crc())?;
    let psi = information_weight_from(problem, &ycrc, tol);
    let inner = SymMatrix::new(problem.observation().transpose() * &psi * problem.observation())?;
    let n = problem.state_dim();
    let scale = SymMatrix::new(problem.hrh().clone())?.max_abs_eigenvalue();
    // The inner matrix is computed through the pseudo-inverse of
    // Y + C'R^-1C, so its entries carry round-off on the order of machine
    // epsilon times that matrix's retained condition number. Rank cannot
    // be certified below this floor.
    let (yvals, _) = ycrc.eigen();
    let y_cutoff = tol.tol_rank * yvals[0].abs().max(f64::MIN_POSITIVE);
    let smallest_retained = yvals
        .iter()
        .copied()
        .filter(|v| v.abs() > y_cutoff)
        .fold(f64::INFINITY, f64::min);
    let kappa = if smallest_retained.is_finite() && smallest_retained > 0.0 {
        yvals[0] / smallest_retained
    } else {
        1.0
    };
    let noise_floor = 100.0 * f64::EPSILON * kappa;
    let gate = Tolerances {
        tol_rank: tol.tol_rank.max(noise_floor),
        ..*tol
    };
    if linalg::rank_with_margin_scaled(inner.as_matrix(), scale, &gate).rank < n {
        return Err(OciError::Infeasible {
            reason: "gain not recoverable: H'(R^-1 - ...)H is rank deficient for this Y".into(),
        });
    }
    // Full rank was just established, so the pseudo-inverse is the inverse;
    // it also stays scale-free where a Cholesky would not.
    let inner_inv = linalg::pinv(&inner, tol);
    Ok(inner_inv.as_matrix() * problem.observation().transpose() * &psi)
}

/// Scale of the fused bound at uniform Kahan weights, used to balance the
/// fused-bound LMI before solving. `None` when the uniform-weight bound
/// does not exist (the instance is infeasible).
pub(crate) fn uniform_weight_bound_scale(problem: &FusionProblem, tol: &Tolerances) -> Option<f64> {
    let ys = problem.info().inverse_bounds(tol).ok()?;
    let weights = SimplexWeights::uniform(ys.len());
    let y = kahan_combine_precomputed(&ys, &weights, problem.corr_dim(), tol).ok()?;
    let psi = information_weight(problem, &y, tol).ok()?;
    let inner =
        SymMatrix::new(problem.observation().transpose() * &psi * problem.observation()).ok()?;
    let scale_ref = SymMatrix::new(problem.hrh().clone()).ok()?.max_abs_eigenvalue();
    let report = linalg::rank_with_margin_scaled(inner.as_matrix(), scale_ref, tol);
    if report.rank < problem.state_dim() {
        return None;
    }
    let cutoff = tol.tol_rank * scale_ref.max(f64::MIN_POSITIVE);
    let (vals, _) = inner.eigen();
    let trace_inv: f64 = vals.iter().map(|v| 1.0 / v.max(cutoff)).sum();
    Some((trace_inv / problem.state_dim() as f64).clamp(1e-9, 1e12))
}

/// `Psi = R^{-1} - R^{-1} C (Y + C'R^{-1}C)^+ C' R^{-1}` (PSD).
fn information_weight(
    problem: &FusionProblem,
    kahan_bound: &InverseBound,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let ycrc = SymMatrix::new(kahan_bound.as_matrix() + problem.crc())?;
    Ok(information_weight_from(problem, &ycrc, tol))
}

fn information_weight_from(
    problem: &FusionProblem,
    ycrc: &SymMatrix,
    tol: &Tolerances,
) -> DMatrix<f64> {
    let pinv = linalg::pinv(ycrc, tol);
    let r_inv = problem.r_inv().as_matrix();
    let c = problem.correlation_map();
    let correction = r_inv * c * pinv.as_matrix() * c.transpose() * r_inv;
    r_inv - correction
}

/// The reconstruction map from any consistent `(K, B)` pair to certificate
/// variables `(Y, U, B)`; never increases the objective.
pub fn reconstruct_from_gain(
    problem: &FusionProblem,
    gain: &DMatrix<f64>,
    fused_bound: &PsdMatrix,
    tol: &Tolerances,
) -> Result<Reconstruction> {
    let n = problem.state_dim();
    if gain.nrows() != n || gain.ncols() != problem.output_dim() {
        return Err(OciError::DimensionMismatch {
            context: "reconstruct_from_gain: gain shape",
            expected: n * problem.output_dim(),
            found: gain.nrows() * gain.ncols(),
        });
    }
    let kh = gain * problem.observation();
    let bias = linalg::frob_norm(&(kh - DMatrix::identity(n, n)));
    if bias > tol.tol_check {
        return Err(OciError::PreconditionViolated {
            reason: format!("reconstruct_from_gain: K H - I has norm {bias:.3e}"),
        });
    }
    // B - K R K^T must be PSD; it dominates K C P C' K^T for admissible P.
    let slack = SymMatrix::new(
        fused_bound.as_matrix() - gain * problem.noise_cov().as_matrix() * gain.transpose(),
    )?;
    if slack.min_eigenvalue() < -tol.tol_check {
        return Err(OciError::PreconditionViolated {
            reason: format!(
                "reconstruct_from_gain: B - K R K' has eigenvalue {:.3e}",
                slack.min_eigenvalue()
            ),
        });
    }
    let slack_pinv = linalg::pinv(&slack, tol);
    let kc = gain * problem.correlation_map();
    let y = SymMatrix::new(kc.transpose() * slack_pinv.as_matrix() * &kc)?;
    let loose = Tolerances {
        tol_psd: tol.tol_check,
        ..*tol
    };
    let y = InverseBound::new(PsdMatrix::semidefinite(y, &loose)?);

    let ycrc = SymMatrix::new(y.as_matrix() + problem.crc())?;
    let ycrc_pinv = linalg::pinv(&ycrc, tol);
    let u = SymMatrix::new(problem.hrc() * ycrc_pinv.as_matrix() * problem.hrc().transpose())?;

    let z = SymMatrix::new(problem.hrh() - u.as_matrix())?;
    let z = PsdMatrix::definite(z, tol).map_err(|_| OciError::NumericalTrouble {
        details: "reconstruction left H'R^-1H - U singular".into(),
    })?;
    let b = PsdMatrix::semidefinite(z.inverse()?, tol)?;

    Ok(Reconstruction {
        kahan_bound: y,
        certificate: u,
        fused_bound: b,
    })
}

/// `log det` of a symmetric positive definite matrix via eigenvalues.
pub fn log_determinant(a: &SymMatrix) -> f64 {
    let (vals, _) = a.eigen();
    vals.iter().map(|v| v.ln()).sum()
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
        .copy_from(bottom);
    out
}
