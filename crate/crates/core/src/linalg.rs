//! Tolerance-aware dense symmetric linear algebra: definiteness tests,
//! numerical rank, pseudo-inverse, and spectral range/null factorizations.
//!
//! Every other module builds on the semantics fixed here: symmetric inputs
//! are symmetrized once at construction, rank decisions use a relative
//! singular-value cutoff, and all verdicts carry an explicit margin so
//! borderline cases can be flagged by callers instead of silently decided.

use nalgebra::{DMatrix, DVector};

use crate::error::{OciError, Result};

/// Numerical tolerances used throughout the library.
///
/// `tol_psd` and `tol_pd` are absolute eigenvalue floors for accepting a
/// matrix as positive semidefinite / definite. `tol_rank` is a relative
/// singular-value cutoff. `tol_solve` is handed to the conic solver and
/// `tol_check` is the post-hoc verification slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol_psd: f64,
    pub tol_pd: f64,
    pub tol_rank: f64,
    pub tol_solve: f64,
    pub tol_check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_psd: 1e-9,
            tol_pd: 1e-9,
            tol_rank: 1e-9,
            tol_solve: 1e-8,
            tol_check: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tol_psd,
            self.tol_pd,
            self.tol_rank,
            self.tol_solve,
            self.tol_check,
        ];
        if all.iter().any(|t| !(*t > 0.0)) {
            return Err(OciError::InvalidTolerances {
                reason: "all tolerances must be strictly positive".into(),
            });
        }
        if self.tol_check < self.tol_solve {
            return Err(OciError::InvalidTolerances {
                reason: format!(
                    "tol_check ({:.3e}) must be >= tol_solve ({:.3e})",
                    self.tol_check, self.tol_solve
                ),
            });
        }
        Ok(())
    }
}

/// Dense real symmetric matrix. Construction replaces the input by
/// `(A + A^T)/2` so eigensolvers downstream see exact symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    mat: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(OciError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(OciError::EmptyMatrix);
        }
        Ok(Self {
            mat: symmetrize(&mat),
        })
    }

    pub fn from_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    /// Eigendecomposition with eigenvalues sorted in descending order.
    pub fn eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        sym_eigen(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = self.eigen();
        vals[vals.len() - 1]
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        let (vals, _) = self.eigen();
        vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Definiteness class recorded on a validated [`PsdMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
}

/// Symmetric matrix validated as positive (semi)definite at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    base: SymMatrix,
    definiteness: Definiteness,
}

impl PsdMatrix {
    /// Accepts matrices with smallest eigenvalue >= -tol_psd.
    pub fn semidefinite(base: SymMatrix, tol: &Tolerances) -> Result<Self> {
        let min_eig = base.min_eigenvalue();
        if min_eig < -tol.tol_psd {
            return Err(OciError::NotPositiveSemidefinite {
                context: "PsdMatrix::semidefinite",
                min_eig,
            });
        }
        Ok(Self {
            base,
            definiteness: Definiteness::PositiveSemidefinite,
        })
    }

    /// Accepts matrices with smallest eigenvalue >= +tol_pd.
    pub fn definite(base: SymMatrix, tol: &Tolerances) -> Result<Self> {
        let min_eig = base.min_eigenvalue();
        if min_eig < tol.tol_pd {
            return Err(OciError::NotPositiveDefinite {
                context: "PsdMatrix::definite",
                min_eig,
            });
        }
        Ok(Self {
            base,
            definiteness: Definiteness::PositiveDefinite,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.base.as_matrix()
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn trace(&self) -> f64 {
        self.base.trace()
    }

    /// Inverse through Cholesky; fails if the matrix is numerically singular.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let chol = nalgebra::Cholesky::new(self.base.mat.clone()).ok_or(OciError::Singular {
            context: "PsdMatrix::inverse",
        })?;
        SymMatrix::new(chol.inverse())
    }

    /// Symmetric inverse square root `A^{-1/2}`, eigenvalue based.
    pub fn inv_sqrt(&self, tol: &Tolerances) -> Result<SymMatrix> {
        let (vals, vecs) = self.base.eigen();
        let cutoff = tol.tol_rank * vals[0].abs().max(f64::MIN_POSITIVE);
        if vals[vals.len() - 1] <= cutoff {
            return Err(OciError::Singular {
                context: "PsdMatrix::inv_sqrt",
            });
        }
        let d = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()));
        let m = &vecs * DMatrix::from_diagonal(&d) * vecs.transpose();
        SymMatrix::new(m)
    }
}

/// Range/null-space factorization of a PSD matrix: `A = V diag(D) V^T`
/// with `[V V_perp]` orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralFactorization {
    /// Orthonormal columns spanning the column space.
    pub range_basis: DMatrix<f64>,
    /// Orthonormal columns spanning the kernel (may have zero columns).
    pub null_basis: DMatrix<f64>,
    /// Positive eigenvalues matching `range_basis` columns, descending.
    pub diag_values: DVector<f64>,
}

impl SpectralFactorization {
    pub fn rank(&self) -> usize {
        self.range_basis.ncols()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.range_basis * DMatrix::from_diagonal(&self.diag_values) * self.range_basis.transpose()
    }
}

/// Numerical rank together with how far the decision sits from the cutoff.
#[derive(Debug, Clone, Copy)]
pub struct RankReport {
    pub rank: usize,
    /// min(smallest retained sv / cutoff, cutoff / largest discarded sv);
    /// infinite when a side of the cutoff is empty. Values close to 1 mean
    /// the rank decision is numerically fragile.
    pub margin: f64,
}

impl RankReport {
    /// A rank verdict within a factor of 10 of the cutoff is fragile.
    pub fn is_borderline(&self) -> bool {
        self.margin < 10.0
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude below `tol_rank * max |eigenvalue|` are treated as zero, which
/// keeps the result exactly symmetric.
pub fn pinv(a: &SymMatrix, tol: &Tolerances) -> SymMatrix {
    let (vals, vecs) = a.eigen();
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = tol.tol_rank * max_abs;
    let inv = DVector::from_iterator(
        vals.len(),
        vals.iter()
            .map(|&v| if v.abs() > cutoff { 1.0 / v } else { 0.0 }),
    );
    let m = &vecs * DMatrix::from_diagonal(&inv) * vecs.transpose();
    SymMatrix {
        mat: symmetrize(&m),
    }
}

/// Splits a PSD symmetric matrix into orthonormal range and null bases.
///
/// Fails when the input has an eigenvalue below `-tol_psd`.
pub fn spectral_split_sym(a: &SymMatrix, tol: &Tolerances) -> Result<SpectralFactorization> {
    let (vals, vecs) = a.eigen();
    let n = vals.len();
    let min_eig = vals[n - 1];
    if min_eig < -tol.tol_psd {
        return Err(OciError::NotPositiveSemidefinite {
            context: "spectral_split",
            min_eig,
        });
    }
    let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = tol.tol_rank * max_abs;
    let rank = vals.iter().take_while(|&&v| v > cutoff).count();
    let range_basis = vecs.columns(0, rank).into_owned();
    let null_basis = vecs.columns(rank, n - rank).into_owned();
    let diag_values = DVector::from_iterator(rank, vals.iter().take(rank).copied());
    Ok(SpectralFactorization {
        range_basis,
        null_basis,
        diag_values,
    })
}

pub fn spectral_split(a: &PsdMatrix, tol: &Tolerances) -> Result<SpectralFactorization> {
    spectral_split_sym(a.base(), tol)
}

/// Numerical rank: singular values above `tol_rank * sigma_max`.
pub fn rank_tol(a: &DMatrix<f64>, tol: &Tolerances) -> usize {
    rank_with_margin(a, tol).rank
}

pub fn rank_with_margin(a: &DMatrix<f64>, tol: &Tolerances) -> RankReport {
    rank_with_margin_scaled(a, 0.0, tol)
}

/// Numerical rank with the cutoff referenced to an external scale:
/// `cutoff = tol_rank * max(sigma_max, reference)`. Needed when the matrix
/// under test is a difference of same-scale terms, where an exact zero
/// shows up as round-off that a purely relative cutoff would keep.
pub fn rank_with_margin_scaled(
    a: &DMatrix<f64>,
    reference: f64,
    tol: &Tolerances,
) -> RankReport {
    if a.nrows() == 0 || a.ncols() == 0 {
        return RankReport {
            rank: 0,
            margin: f64::INFINITY,
        };
    }
    let mut svals: Vec<f64> = a.singular_values().iter().copied().collect();
    svals.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    let smax = svals[0].max(reference);
    if smax <= 0.0 {
        return RankReport {
            rank: 0,
            margin: f64::INFINITY,
        };
    }
    let cutoff = tol.tol_rank * smax;
    let rank = svals.iter().take_while(|&&s| s > cutoff).count();
    let retained = if rank > 0 {
        svals[rank - 1] / cutoff
    } else {
        f64::INFINITY
    };
    let discarded = if rank < svals.len() && svals[rank] > 0.0 {
        cutoff / svals[rank]
    } else {
        f64::INFINITY
    };
    RankReport {
        rank,
        margin: retained.min(discarded),
    }
}

/// True iff `A - B` has smallest eigenvalue >= -tol_check, i.e. `A >= B`
/// in the Loewner order up to verification slack.
pub fn check_psd_order(a: &SymMatrix, b: &SymMatrix, tol: &Tolerances) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(OciError::DimensionMismatch {
            context: "check_psd_order",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let diff = SymMatrix::new(a.as_matrix() - b.as_matrix())?;
    Ok(diff.min_eigenvalue() >= -tol.tol_check)
}

/// Frobenius norm helper used by tests and the verification oracle.
pub fn frob_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn symmetrization_at_construction() {
        let a = SymMatrix::new(dmatrix![1.0, 2.0; 0.0, 3.0]).unwrap();
        assert_eq!(a.as_matrix()[(0, 1)], 1.0);
        assert_eq!(a.as_matrix()[(1, 0)], 1.0);
    }

    #[test]
    fn rejects_non_square_and_empty() {
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
        assert!(SymMatrix::new(DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn pinv_identity_is_identity() {
        let a = SymMatrix::identity(3);
        let p = pinv(&a, &tol());
        assert!(frob_norm(&(p.as_matrix() - a.as_matrix())) < 1e-12);
    }

    #[test]
    fn pinv_zero_eigenvalue_maps_to_zero() {
        let a = SymMatrix::new(dmatrix![2.0, 0.0; 0.0, 0.0]).unwrap();
        let p = pinv(&a, &tol());
        let expect = dmatrix![0.5, 0.0; 0.0, 0.0];
        assert!(frob_norm(&(p.as_matrix() - expect)) < 1e-12);
    }

    #[test]
    fn pinv_rank_one_outer_product() {
        // A = vv^T with v = [1,1]^T; A^+ = vv^T / 4. Oracle: A A^+ A = A.
        let a = SymMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        let p = pinv(&a, &tol());
        let expect = dmatrix![0.25, 0.25; 0.25, 0.25];
        assert!(frob_norm(&(p.as_matrix() - expect)) < 1e-12);
        let round_trip = a.as_matrix() * p.as_matrix() * a.as_matrix();
        assert!(frob_norm(&(round_trip - a.as_matrix())) < 1e-12);
    }

    #[test]
    fn spectral_split_rank_one() {
        let a = PsdMatrix::semidefinite(
            SymMatrix::new(dmatrix![3.0, 0.0; 0.0, 0.0]).unwrap(),
            &tol(),
        )
        .unwrap();
        let f = spectral_split(&a, &tol()).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.diag_values[0], 3.0);
        assert!((f.range_basis[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((f.null_basis[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_split_full_rank_has_empty_null() {
        let a = PsdMatrix::definite(SymMatrix::identity(2), &tol()).unwrap();
        let f = spectral_split(&a, &tol()).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.null_basis.ncols(), 0);
        assert!(frob_norm(&(f.reconstruct() - a.as_matrix())) < 1e-12);
    }

    #[test]
    fn spectral_split_ones_matrix() {
        let a = PsdMatrix::semidefinite(
            SymMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap(),
            &tol(),
        )
        .unwrap();
        let f = spectral_split(&a, &tol()).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.diag_values[0] - 2.0).abs() < 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((f.range_basis[(0, 0)].abs() - s).abs() < 1e-12);
        assert!((f.range_basis[(1, 0)].abs() - s).abs() < 1e-12);
        // null basis proportional to [1, -1]
        assert!((f.null_basis[(0, 0)] + f.null_basis[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn spectral_split_rejects_indefinite() {
        let a = SymMatrix::new(dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
        assert!(matches!(
            spectral_split_sym(&a, &tol()),
            Err(OciError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn rank_tol_examples() {
        assert_eq!(rank_tol(&DMatrix::zeros(2, 3), &tol()), 0);
        assert_eq!(rank_tol(&DMatrix::identity(4, 4), &tol()), 4);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(rank_tol(&a, &tol()), 1);
    }

    #[test]
    fn rank_margin_flags_borderline() {
        let t = tol();
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 5.0 * t.tol_rank]));
        let r = rank_with_margin(&a, &t);
        assert_eq!(r.rank, 2);
        assert!(r.is_borderline());
        let clear = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        assert!(!rank_with_margin(&clear, &t).is_borderline());
    }

    #[test]
    fn psd_order_examples() {
        let t = tol();
        let two_i = SymMatrix::new(DMatrix::identity(2, 2) * 2.0).unwrap();
        let i = SymMatrix::identity(2);
        assert!(check_psd_order(&two_i, &i, &t).unwrap());
        assert!(!check_psd_order(&i, &two_i, &t).unwrap());
        let a = SymMatrix::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
        assert!(check_psd_order(&a, &i, &t).unwrap());
        let bad = SymMatrix::identity(3);
        assert!(check_psd_order(&a, &bad, &t).is_err());
    }

    #[test]
    fn definite_constructor_rejects_singular() {
        let t = tol();
        let a = SymMatrix::new(dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap();
        assert!(PsdMatrix::definite(a.clone(), &t).is_err());
        assert!(PsdMatrix::semidefinite(a, &t).is_ok());
    }

    #[test]
    fn tolerances_validation() {
        let mut t = tol();
        assert!(t.validate().is_ok());
        t.tol_check = t.tol_solve / 10.0;
        assert!(t.validate().is_err());
        t = tol();
        t.tol_rank = 0.0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn inv_sqrt_squares_back() {
        let a = PsdMatrix::definite(
            SymMatrix::new(dmatrix![4.0, 1.0; 1.0, 3.0]).unwrap(),
            &tol(),
        )
        .unwrap();
        let s = a.inv_sqrt(&tol()).unwrap();
        let prod = s.as_matrix() * a.as_matrix() * s.as_matrix();
        assert!(frob_norm(&(prod - DMatrix::identity(2, 2))) < 1e-10);
    }
}
