//! Casts classic two-estimate covariance intersection (basic and split)
//! as fusion instances of this library, so both baselines run through the
//! same solver and can be compared against richer bound structures.

use nalgebra::DMatrix;

use crate::error::{OciError, Result};
use crate::info::{ComponentBound, InfoStructure};
use crate::linalg::{PsdMatrix, SymMatrix, Tolerances};
use crate::solver::FusionProblem;

/// Two estimates of a common state with per-estimate covariance bounds,
/// optional independent components for the split variant.
#[derive(Debug, Clone)]
pub struct TwoEstimateCI {
    pub bound1: PsdMatrix,
    pub bound2: PsdMatrix,
    pub obs1: DMatrix<f64>,
    pub obs2: DMatrix<f64>,
    pub independent1: Option<PsdMatrix>,
    pub independent2: Option<PsdMatrix>,
}

impl TwoEstimateCI {
    fn validate(&self) -> Result<()> {
        if self.obs1.nrows() != self.bound1.dim() {
            return Err(OciError::DimensionMismatch {
                context: "TwoEstimateCI: first bound vs observation rows",
                expected: self.obs1.nrows(),
                found: self.bound1.dim(),
            });
        }
        if self.obs2.nrows() != self.bound2.dim() {
            return Err(OciError::DimensionMismatch {
                context: "TwoEstimateCI: second bound vs observation rows",
                expected: self.obs2.nrows(),
                found: self.bound2.dim(),
            });
        }
        if self.obs1.ncols() != self.obs2.ncols() {
            return Err(OciError::DimensionMismatch {
                context: "TwoEstimateCI: observation maps state dimension",
                expected: self.obs1.ncols(),
                found: self.obs2.ncols(),
            });
        }
        Ok(())
    }

    fn block_selectors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let o1 = self.bound1.dim();
        let o2 = self.bound2.dim();
        let m = o1 + o2;
        let mut w1 = DMatrix::zeros(o1, m);
        w1.view_mut((0, 0), (o1, o1))
            .copy_from(&DMatrix::identity(o1, o1));
        let mut w2 = DMatrix::zeros(o2, m);
        w2.view_mut((0, o1), (o2, o2))
            .copy_from(&DMatrix::identity(o2, o2));
        (w1, w2)
    }

    fn stacked_obs(&self) -> DMatrix<f64> {
        let o1 = self.obs1.nrows();
        let o2 = self.obs2.nrows();
        let n = self.obs1.ncols();
        let mut h = DMatrix::zeros(o1 + o2, n);
        h.view_mut((0, 0), (o1, n)).copy_from(&self.obs1);
        h.view_mut((o1, 0), (o2, n)).copy_from(&self.obs2);
        h
    }
}

/// A casting together with the bookkeeping that produced it.
#[derive(Debug, Clone)]
pub struct CiCast {
    pub problem: FusionProblem,
    /// The substituted regularization of the exactly-zero noise term, when
    /// one was needed (basic CI only).
    pub epsilon_r: Option<f64>,
}

/// Default regularization for the zero noise term of basic CI:
/// `1e-8 * trace(X1 + X2) / (o1 + o2)`.
pub fn default_epsilon_r(spec: &TwoEstimateCI) -> f64 {
    let dim = (spec.bound1.dim() + spec.bound2.dim()) as f64;
    1e-8 * (spec.bound1.trace() + spec.bound2.trace()) / dim
}

/// Basic covariance intersection: correlation between the two estimates is
/// completely unknown; only the per-estimate bounds hold. The exact
/// casting has a zero noise term, which this library's positive definite
/// noise scope does not cover, so `epsilon_r * I` is substituted and
/// recorded in the returned casting.
pub fn cast_basic_ci(spec: &TwoEstimateCI, epsilon_r: f64, tol: &Tolerances) -> Result<CiCast> {
    spec.validate()?;
    if !(epsilon_r > 0.0) {
        return Err(OciError::PreconditionViolated {
            reason: format!("epsilon_r must be positive, got {epsilon_r}"),
        });
    }
    let o = spec.bound1.dim() + spec.bound2.dim();
    let r = PsdMatrix::definite(
        SymMatrix::new(DMatrix::identity(o, o) * epsilon_r)?,
        &Tolerances {
            tol_pd: epsilon_r * 0.5,
            ..*tol
        },
    )?;
    let (w1, w2) = spec.block_selectors();
    let info = InfoStructure::new(
        o,
        vec![
            ComponentBound::new(w1, spec.bound1.clone(), tol)?,
            ComponentBound::new(w2, spec.bound2.clone(), tol)?,
        ],
    )?;
    let problem = FusionProblem::new(
        spec.stacked_obs(),
        r,
        DMatrix::identity(o, o),
        info,
        &Tolerances {
            tol_pd: epsilon_r * 0.5,
            ..*tol
        },
    )?;
    Ok(CiCast {
        problem,
        epsilon_r: Some(epsilon_r),
    })
}

/// Split covariance intersection: each estimate carries an independent
/// component with a known bound plus a correlated component with an
/// autocorrelation bound only. The independent parts form a genuinely
/// positive definite noise term, so no substitution is needed.
pub fn cast_sci(spec: &TwoEstimateCI, tol: &Tolerances) -> Result<CiCast> {
    spec.validate()?;
    let (ind1, ind2) = match (&spec.independent1, &spec.independent2) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(OciError::PreconditionViolated {
                reason: "split casting needs both independent components".into(),
            })
        }
    };
    let o1 = spec.bound1.dim();
    let o2 = spec.bound2.dim();
    if ind1.dim() != o1 || ind2.dim() != o2 {
        return Err(OciError::DimensionMismatch {
            context: "cast_sci: independent component dimensions",
            expected: o1 + o2,
            found: ind1.dim() + ind2.dim(),
        });
    }
    let o = o1 + o2;
    let mut r = DMatrix::zeros(o, o);
    r.view_mut((0, 0), (o1, o1)).copy_from(ind1.as_matrix());
    r.view_mut((o1, o1), (o2, o2)).copy_from(ind2.as_matrix());
    let r = PsdMatrix::definite(SymMatrix::new(r)?, tol)?;
    let (w1, w2) = spec.block_selectors();
    let info = InfoStructure::new(
        o,
        vec![
            ComponentBound::new(w1, spec.bound1.clone(), tol)?,
            ComponentBound::new(w2, spec.bound2.clone(), tol)?,
        ],
    )?;
    let problem = FusionProblem::new(spec.stacked_obs(), r, DMatrix::identity(o, o), info, tol)?;
    Ok(CiCast {
        problem,
        epsilon_r: None,
    })
}
