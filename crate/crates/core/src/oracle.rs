//! Independent brute-force checks: worst-case covariance sampling over the
//! admissible set, certificate validation, a grid-search optimum for the
//! scalar two-estimate fusion, and randomized verification of the block
//! matrix identities the solver's algebra depends on.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{OciError, Result};
use crate::info::sample_admissible;
use crate::linalg::{self, PsdMatrix, SymMatrix, Tolerances};
use crate::solver::{FusionProblem, FusionSolution};
use crate::synth;

/// Result of sampling worst-case fused covariances against a bound.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyVerdict {
    /// Largest eigenvalue of `K (R + C P C^T) K^T - B` over the samples.
    pub max_violation: f64,
    pub worst_sample_index: usize,
    pub samples_checked: usize,
    pub pass: bool,
}

/// Evaluates the fused covariance at sampled admissible correlations
/// (boundary-active samples included) and reports the worst violation of
/// `B >= K (R + C P C^T) K^T`.
pub fn check_consistency(
    problem: &FusionProblem,
    gain: &DMatrix<f64>,
    fused_bound: &PsdMatrix,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ConsistencyVerdict> {
    let n = problem.state_dim();
    let kh = gain * problem.observation();
    let bias = linalg::frob_norm(&(kh - DMatrix::identity(n, n)));
    if bias > tol.tol_check {
        return Err(OciError::PreconditionViolated {
            reason: format!("check_consistency: gain is biased, |KH - I| = {bias:.3e}"),
        });
    }
    let krk = gain * problem.noise_cov().as_matrix() * gain.transpose();
    let kc = gain * problem.correlation_map();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = 0;
    let ps = sample_admissible(problem.info(), samples, seed, tol)?;
    for (idx, p) in ps.iter().enumerate() {
        let fused = &krk + &kc * p.as_matrix() * kc.transpose();
        let diff = SymMatrix::new(fused - fused_bound.as_matrix())?;
        let (vals, _) = diff.eigen();
        if vals[0] > max_violation {
            max_violation = vals[0];
            worst = idx;
        }
    }
    if ps.is_empty() {
        max_violation = 0.0;
    }
    Ok(ConsistencyVerdict {
        max_violation,
        worst_sample_index: worst,
        samples_checked: ps.len(),
        pass: max_violation <= tol.tol_check,
    })
}

/// Reassembles the solution's LMI blocks (including the projection block
/// when present) and checks every one for positive semidefiniteness
/// within `tol_check`. Weight-simplex validity is the weight type's job,
/// not this check's.
pub fn check_lmi_certificates(
    problem: &FusionProblem,
    solution: &FusionSolution,
    tol: &Tolerances,
) -> Result<bool> {
    let residual = crate::solver::certificate_residual(
        problem,
        &solution.certificate,
        &solution.fused_bound,
        &solution.kahan_bound,
    )?;
    let mut worst = residual;
    if let Some(proj) = &solution.projection {
        let d = proj.selector.nrows();
        let m = problem.corr_dim();
        let mut block = DMatrix::zeros(d + m, d + m);
        block
            .view_mut((0, 0), (d, d))
            .copy_from(proj.bound.as_matrix());
        block.view_mut((0, d), (d, m)).copy_from(&proj.selector);
        block
            .view_mut((d, 0), (m, d))
            .copy_from(&proj.selector.transpose());
        block
            .view_mut((d, d), (m, m))
            .copy_from(solution.kahan_bound.as_matrix());
        worst = worst.max(-SymMatrix::new(block)?.min_eigenvalue());
    }
    Ok(worst <= tol.tol_check)
}

/// Frobenius residual of the pseudo-inverse identity
/// `R^{-1} - R^{-1}C (Y + C'R^{-1}C)^+ C'R^{-1}
///    = S (S'(R + C Y^+ C')S)^{-1} S'`,
/// with `S` an orthonormal basis of the complement of `col(C V_perp)` and
/// `V_perp` spanning the kernel of `Y`.
pub fn check_prop2_identity(
    r: &PsdMatrix,
    c: &DMatrix<f64>,
    y: &PsdMatrix,
    tol: &Tolerances,
) -> Result<f64> {
    let o = r.dim();
    if c.nrows() != o {
        return Err(OciError::DimensionMismatch {
            context: "check_prop2_identity: C rows vs R",
            expected: o,
            found: c.nrows(),
        });
    }
    if c.ncols() != y.dim() {
        return Err(OciError::DimensionMismatch {
            context: "check_prop2_identity: C columns vs Y",
            expected: y.dim(),
            found: c.ncols(),
        });
    }
    let r_inv = r.inverse()?;
    let ycrc = SymMatrix::new(y.as_matrix() + c.transpose() * r_inv.as_matrix() * c)?;
    let lhs = r_inv.as_matrix()
        - r_inv.as_matrix()
            * c
            * linalg::pinv(&ycrc, tol).as_matrix()
            * c.transpose()
            * r_inv.as_matrix();

    // S spans the orthogonal complement of col(C V_perp).
    let split_y = linalg::spectral_split(y, tol)?;
    let cv = c * &split_y.null_basis;
    let s = if cv.ncols() == 0 {
        DMatrix::identity(o, o)
    } else {
        let gram = SymMatrix::new(&cv * cv.transpose())?;
        linalg::spectral_split_sym(&gram, tol)?.null_basis
    };
    // S can be empty when col(C V_perp) spans the whole output space; the
    // right-hand side is then the zero matrix.
    let rhs = if s.ncols() == 0 {
        DMatrix::zeros(o, o)
    } else {
        let y_pinv = linalg::pinv(y.base(), tol);
        let middle = SymMatrix::new(
            s.transpose() * (r.as_matrix() + c * y_pinv.as_matrix() * c.transpose()) * &s,
        )?;
        let middle_pd = PsdMatrix::definite(middle, tol)?;
        &s * middle_pd.inverse()?.as_matrix() * s.transpose()
    };

    Ok(linalg::frob_norm(&(lhs - rhs)))
}

/// Outcome of the randomized block-matrix identity checks.
#[derive(Debug, Clone)]
pub struct SchurReport {
    pub trials: usize,
    /// Failure count per statement (five statements).
    pub failures: [usize; 5],
    pub max_violation: f64,
}

impl SchurReport {
    pub fn all_passed(&self) -> bool {
        self.failures.iter().all(|f| *f == 0)
    }
}

/// Randomized verification of the five positive-semidefinite block-matrix
/// statements used throughout the solver algebra, on matrices of dimension
/// up to five per block.
pub fn check_prop1_schur(trials: usize, seed: u64, tol: &Tolerances) -> SchurReport {
    let mut rng = synth::rng_from_seed(seed);
    let mut failures = [0usize; 5];
    let mut max_violation: f64 = 0.0;

    for _ in 0..trials {
        let p = 1 + (rng.random_range(0..4u32) as usize);
        let q = 1 + (rng.random_range(0..4u32) as usize);

        // (i) A PD: [A B; B' C] PSD iff C - B'A^{-1}B PSD. Plant the Schur
        // complement directly so both directions of the equivalence occur.
        {
            let a = synth::random_pd(p, &mut rng, tol);
            let b = synth::gaussian_matrix(p, q, &mut rng);
            let shift = SymMatrix::new(synth::gaussian_matrix(q, q, &mut rng)).unwrap();
            let a_inv = a.inverse().unwrap();
            let c =
                SymMatrix::new(b.transpose() * a_inv.as_matrix() * &b + shift.as_matrix()).unwrap();
            let x = assemble_block(a.as_matrix(), &b, c.as_matrix());
            let x_min = SymMatrix::new(x).unwrap().min_eigenvalue();
            let shift_min = shift.min_eigenvalue();
            // Skip razor-edge draws where either verdict is within slack.
            if x_min.abs() > tol.tol_check && shift_min.abs() > tol.tol_check {
                if (x_min >= 0.0) != (shift_min >= 0.0) {
                    failures[0] += 1;
                    max_violation = max_violation.max(x_min.abs().min(shift_min.abs()));
                }
            }
        }

        // (ii) A PSD with col(B) in col(A) and C - B'A^+B PSD implies X PSD;
        // also the degenerate B = 0 reduction.
        {
            let rank = rng.random_range(0..=p as u32) as usize;
            let a = synth::random_psd_rank(p, rank, &mut rng, tol);
            let g = synth::gaussian_matrix(p, q, &mut rng);
            let b = a.as_matrix() * &g;
            let tail = synth::random_psd_rank(q, q, &mut rng, tol);
            let a_pinv = linalg::pinv(a.base(), tol);
            let c = SymMatrix::new(b.transpose() * a_pinv.as_matrix() * &b + tail.as_matrix())
                .unwrap();
            let x = assemble_block(a.as_matrix(), &b, c.as_matrix());
            let min_eig = SymMatrix::new(x).unwrap().min_eigenvalue();
            if min_eig < -tol.tol_check {
                failures[1] += 1;
                max_violation = max_violation.max(-min_eig);
            }
            let x0 = assemble_block(a.as_matrix(), &DMatrix::zeros(p, q), tail.as_matrix());
            let min0 = SymMatrix::new(x0).unwrap().min_eigenvalue();
            if min0 < -tol.tol_check {
                failures[1] += 1;
                max_violation = max_violation.max(-min0);
            }
        }

        // (iii)/(iv) B = I: [A I; I C] PSD iff A, C PD with A >= C^{-1}.
        {
            let c = synth::random_pd(p, &mut rng, tol);
            let bump = synth::random_psd_rank(p, p.min(2), &mut rng, tol);
            let a = SymMatrix::new(c.inverse().unwrap().as_matrix() + bump.as_matrix()).unwrap();
            let x = assemble_block(a.as_matrix(), &DMatrix::identity(p, p), c.as_matrix());
            let min_eig = SymMatrix::new(x).unwrap().min_eigenvalue();
            // (iv): A >= C^{-1} => X PSD.
            if min_eig < -tol.tol_check {
                failures[3] += 1;
                max_violation = max_violation.max(-min_eig);
            }
            // (iii): X PSD => A, C PD and both orderings hold.
            if min_eig >= -tol.tol_check {
                let order_ok = PsdMatrix::definite(a.clone(), tol)
                    .ok()
                    .map(|a_pd| {
                        let a_inv = a_pd.inverse().unwrap();
                        let c_inv = c.inverse().unwrap();
                        linalg::check_psd_order(&a, &c_inv, tol).unwrap()
                            && linalg::check_psd_order(c.base(), &a_inv, tol).unwrap()
                    })
                    .unwrap_or(false);
                if !order_ok {
                    failures[2] += 1;
                }
            }
        }

        // (v) X PD, X^{-1} >= blockdiag(Q, 0) => A^{-1} >= Q.
        {
            let x = synth::random_pd(p + q, &mut rng, tol);
            let a = SymMatrix::new(x.as_matrix().view((0, 0), (p, p)).into_owned()).unwrap();
            let a_inv = PsdMatrix::definite(a, tol).unwrap().inverse().unwrap();
            let scale: f64 = rng.random::<f64>();
            let qmat = SymMatrix::new(a_inv.as_matrix() * scale).unwrap();
            let x_inv = x.inverse().unwrap();
            let mut padded = DMatrix::zeros(p + q, p + q);
            padded.view_mut((0, 0), (p, p)).copy_from(qmat.as_matrix());
            let premise =
                linalg::check_psd_order(&x_inv, &SymMatrix::new(padded).unwrap(), tol).unwrap();
            if premise && !linalg::check_psd_order(&a_inv, &qmat, tol).unwrap() {
                failures[4] += 1;
            }
        }
    }

    SchurReport {
        trials,
        failures,
        max_violation,
    }
}

/// Classical scalar two-estimate covariance-intersection optimum by grid
/// search: minimizes `1 / (w/x1 + (1-w)/x2)` over the weight grid.
pub fn scalar_ci_grid_optimum(x1: f64, x2: f64, step: f64) -> (f64, f64) {
    assert!(x1 > 0.0 && x2 > 0.0 && step > 0.0 && step < 1.0);
    let mut best = f64::INFINITY;
    let mut best_w = 0.0;
    let count = (1.0 / step).round() as usize;
    for k in 0..=count {
        let w = (k as f64 * step).min(1.0);
        let information = w / x1 + (1.0 - w) / x2;
        if information <= 0.0 {
            continue;
        }
        let fused = 1.0 / information;
        if fused < best {
            best = fused;
            best_w = w;
        }
    }
    (best, best_w)
}

fn assemble_block(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a.nrows();
    let q = c.nrows();
    let mut x = DMatrix::zeros(p + q, p + q);
    x.view_mut((0, 0), (p, p)).copy_from(a);
    x.view_mut((0, p), (p, q)).copy_from(b);
    x.view_mut((p, 0), (q, p)).copy_from(&b.transpose());
    x.view_mut((p, p), (q, q)).copy_from(c);
    x
}
