//! The partial-knowledge structure: a set of possibly-overlapping bounds
//! `W_b P W_b^T <= X_b` on an unknown correlation matrix `P`, together with
//! the inverse-form view `P^{-1} >= Y_b` with `Y_b = W_b^T X_b^{-1} W_b`,
//! convex (Kahan) combination of inverse bounds, membership tests, and a
//! deterministic sampler of admissible matrices for brute-force checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{OciError, Result};
use crate::linalg::{self, PsdMatrix, SymMatrix, Tolerances};

/// One bound `W P W^T <= X` on a component of the unknown correlation.
#[derive(Debug, Clone)]
pub struct ComponentBound {
    w: DMatrix<f64>,
    x: PsdMatrix,
}

impl ComponentBound {
    /// `w` is the `o_b x m` component selector, `x` the positive definite
    /// bound. Selector rows that are identically zero are rejected: such a
    /// row constrains nothing and almost certainly indicates a caller bug.
    pub fn new(w: DMatrix<f64>, x: PsdMatrix, tol: &Tolerances) -> Result<Self> {
        if w.nrows() != x.dim() {
            return Err(OciError::DimensionMismatch {
                context: "ComponentBound selector rows vs bound dim",
                expected: x.dim(),
                found: w.nrows(),
            });
        }
        let min_eig = x.base().min_eigenvalue();
        if min_eig < tol.tol_pd {
            return Err(OciError::NotPositiveDefinite {
                context: "ComponentBound::new (X must be positive definite)",
                min_eig,
            });
        }
        for r in 0..w.nrows() {
            if w.row(r).iter().all(|v| *v == 0.0) {
                return Err(OciError::ZeroSelectorRow { row: r });
            }
        }
        Ok(Self { w, x })
    }

    pub fn selector(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn bound(&self) -> &PsdMatrix {
        &self.x
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// Ordered collection of component bounds over an `m x m` correlation.
#[derive(Debug, Clone)]
pub struct InfoStructure {
    m: usize,
    bounds: Vec<ComponentBound>,
}

impl InfoStructure {
    pub fn new(m: usize, bounds: Vec<ComponentBound>) -> Result<Self> {
        if m == 0 {
            return Err(OciError::EmptyMatrix);
        }
        if bounds.is_empty() {
            return Err(OciError::PreconditionViolated {
                reason: "information structure needs at least one bound".into(),
            });
        }
        for b in &bounds {
            if b.state_dim() != m {
                return Err(OciError::DimensionMismatch {
                    context: "InfoStructure bound selector columns",
                    expected: m,
                    found: b.state_dim(),
                });
            }
        }
        Ok(Self { m, bounds })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn bounds(&self) -> &[ComponentBound] {
        &self.bounds
    }

    pub fn with_bound(&self, extra: ComponentBound) -> Result<Self> {
        let mut bounds = self.bounds.clone();
        bounds.push(extra);
        Self::new(self.m, bounds)
    }

    /// All per-bound inverse bounds `Y_b`, in order.
    pub fn inverse_bounds(&self, tol: &Tolerances) -> Result<Vec<InverseBound>> {
        self.bounds.iter().map(|b| to_inverse_bound(b, tol)).collect()
    }
}

/// Inverse-form bound `P^{-1} >= Y` (PSD, possibly singular).
#[derive(Debug, Clone)]
pub struct InverseBound {
    y: PsdMatrix,
}

impl InverseBound {
    pub fn new(y: PsdMatrix) -> Self {
        Self { y }
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.y.as_matrix()
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.y
    }
}

/// Nonnegative weights on the bounds, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    omega: DVector<f64>,
}

impl SimplexWeights {
    pub fn new(omega: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        if omega.is_empty() {
            return Err(OciError::InvalidWeights {
                reason: "weight vector is empty".into(),
            });
        }
        if omega.iter().any(|w| *w < 0.0) {
            return Err(OciError::InvalidWeights {
                reason: "weights must be nonnegative".into(),
            });
        }
        let sum: f64 = omega.sum();
        if (sum - 1.0).abs() > tol.tol_check {
            return Err(OciError::InvalidWeights {
                reason: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(Self { omega })
    }

    /// Cleans raw solver output: entries below `zero_cutoff` (and small
    /// negative round-off) are zeroed, then the vector is renormalized.
    pub fn from_solver(raw: &[f64], zero_cutoff: f64) -> Result<Self> {
        let mut v: Vec<f64> = raw
            .iter()
            .map(|&w| if w < zero_cutoff { 0.0 } else { w })
            .collect();
        let sum: f64 = v.iter().sum();
        if sum <= 0.0 {
            return Err(OciError::InvalidWeights {
                reason: "all solver weights vanished after cleaning".into(),
            });
        }
        v.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            omega: DVector::from_vec(v),
        })
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            omega: DVector::from_element(len, 1.0 / len as f64),
        }
    }

    /// All weight on bound `b`.
    pub fn vertex(len: usize, b: usize) -> Self {
        let mut omega = DVector::zeros(len);
        omega[b] = 1.0;
        Self { omega }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.omega
    }
}

/// `Y_b := W_b^T X_b^{-1} W_b`.
pub fn to_inverse_bound(b: &ComponentBound, _tol: &Tolerances) -> Result<InverseBound> {
    let xinv = b.x.inverse()?;
    let y = b.w.transpose() * xinv.as_matrix() * &b.w;
    // Quadratic form of a PD matrix; PSD up to round-off by construction.
    let y = PsdMatrix::semidefinite(SymMatrix::new(y)?, &Tolerances::default())?;
    Ok(InverseBound::new(y))
}

/// Vertical stack `W = [W_1; ...; W_M]`.
pub fn stacked_w(info: &InfoStructure) -> DMatrix<f64> {
    let total_rows: usize = info.bounds.iter().map(|b| b.output_dim()).sum();
    let mut out = DMatrix::zeros(total_rows, info.m);
    let mut row = 0;
    for b in &info.bounds {
        out.view_mut((row, 0), (b.output_dim(), info.m))
            .copy_from(&b.w);
        row += b.output_dim();
    }
    out
}

/// `W^T blockdiag(X_1..X_M)^{-1} W / M`, the uniform aggregate bound on
/// `P^{-1}` valid for every admissible `P`.
pub fn aggregate_inverse_bound(info: &InfoStructure, tol: &Tolerances) -> Result<InverseBound> {
    let w = stacked_w(info);
    let total: usize = info.bounds.iter().map(|b| b.output_dim()).sum();
    let mut block = DMatrix::zeros(total, total);
    let mut at = 0;
    for b in &info.bounds {
        let o = b.output_dim();
        block
            .view_mut((at, at), (o, o))
            .copy_from(b.x.as_matrix());
        at += o;
    }
    let block = PsdMatrix::definite(SymMatrix::new(block)?, tol)?;
    let inv = block.inverse()?;
    let y = w.transpose() * inv.as_matrix() * &w / (info.len() as f64);
    let y = PsdMatrix::semidefinite(SymMatrix::new(y)?, tol)?;
    Ok(InverseBound::new(y))
}

/// Convex combination `Y = sum_b omega_b Y_b` of the inverse bounds.
pub fn kahan_combine(
    info: &InfoStructure,
    weights: &SimplexWeights,
    tol: &Tolerances,
) -> Result<InverseBound> {
    let ys = info.inverse_bounds(tol)?;
    kahan_combine_precomputed(&ys, weights, info.m, tol)
}

/// Same as [`kahan_combine`] but reusing precomputed `Y_b` matrices.
pub fn kahan_combine_precomputed(
    ys: &[InverseBound],
    weights: &SimplexWeights,
    m: usize,
    tol: &Tolerances,
) -> Result<InverseBound> {
    if weights.len() != ys.len() {
        return Err(OciError::WeightLengthMismatch {
            expected: ys.len(),
            found: weights.len(),
        });
    }
    let mut acc = DMatrix::zeros(m, m);
    for (w, y) in weights.as_vector().iter().zip(ys) {
        acc += y.as_matrix() * *w;
    }
    let y = PsdMatrix::semidefinite(SymMatrix::new(acc)?, tol)?;
    Ok(InverseBound::new(y))
}

/// True iff every primal bound holds for `P` within `tol_check`.
pub fn contains(info: &InfoStructure, p: &PsdMatrix, tol: &Tolerances) -> Result<bool> {
    if p.dim() != info.m {
        return Err(OciError::DimensionMismatch {
            context: "contains: P dimension",
            expected: info.m,
            found: p.dim(),
        });
    }
    for b in &info.bounds {
        let wpw = SymMatrix::new(&b.w * p.as_matrix() * b.w.transpose())?;
        if !linalg::check_psd_order(b.x.base(), &wpw, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Deterministic sampler of admissible correlation matrices.
///
/// Each draw generates a random positive definite `G`, computes the largest
/// `alpha` such that `alpha G` still satisfies every bound (the most binding
/// value of `lambda_max(X_b^{-1/2} W_b G W_b^T X_b^{-1/2})` across bounds),
/// and returns `alpha * t * G`. Even-indexed samples use `t = 1` so one
/// bound is active within round-off; odd samples shrink by a random factor.
pub fn sample_admissible(
    info: &InfoStructure,
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<PsdMatrix>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = info.m;
    // Precompute X_b^{-1/2} W_b for the active-bound scaling factor.
    let mut whitened: Vec<DMatrix<f64>> = Vec::with_capacity(info.len());
    for b in &info.bounds {
        let isq = b.x.inv_sqrt(tol)?;
        whitened.push(isq.as_matrix() * &b.w);
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let g = random_pd_matrix(m, &mut rng);
        let mut worst: f64 = 0.0;
        for w in &whitened {
            let t = SymMatrix::new(w * &g * w.transpose())?;
            let (vals, _) = t.eigen();
            worst = worst.max(vals[0]);
        }
        // worst > 0: G is PD and every selector has a nonzero row.
        let alpha = 1.0 / worst;
        let t = if k % 2 == 0 {
            1.0
        } else {
            0.05 + 0.95 * rng.random::<f64>()
        };
        let p = SymMatrix::new(g * (alpha * t))?;
        out.push(PsdMatrix::definite(p, tol)?);
    }
    Ok(out)
}

fn random_pd_matrix(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v
    });
    &a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.2
}

/// Boundary point set of the (possibly degenerate) ellipsoid
/// `{x : x^T Y x = 1}`, for 2-D and 3-D plotting.
#[derive(Debug, Clone)]
pub struct EllipsoidBoundary {
    pub points: Vec<DVector<f64>>,
    /// Set when `Y` is rank deficient and some directions were clipped.
    pub degenerate: bool,
    /// Radius at which unbounded directions are truncated: ten times the
    /// largest finite semi-axis.
    pub clip_radius: f64,
}

pub fn ellipsoid_boundary_points(
    y: &InverseBound,
    resolution: usize,
    tol: &Tolerances,
) -> Result<EllipsoidBoundary> {
    let m = y.dim();
    if m != 2 && m != 3 {
        return Err(OciError::UnsupportedDimension { dim: m });
    }
    let (vals, _) = y.psd().base().eigen();
    let max_eig = vals[0].max(0.0);
    let cutoff = tol.tol_rank * max_eig.max(f64::MIN_POSITIVE);
    let positive: Vec<f64> = vals.iter().copied().filter(|&v| v > cutoff).collect();
    let degenerate = positive.len() < m;
    let clip_radius = if positive.is_empty() {
        10.0
    } else {
        10.0 / positive[positive.len() - 1].sqrt()
    };

    let dirs: Vec<DVector<f64>> = if m == 2 {
        (0..resolution)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / resolution as f64;
                DVector::from_vec(vec![theta.cos(), theta.sin()])
            })
            .collect()
    } else {
        let mut d = Vec::with_capacity(resolution * resolution);
        for i in 0..resolution {
            let polar = std::f64::consts::PI * (i as f64 + 0.5) / resolution as f64;
            for j in 0..resolution {
                let azim = 2.0 * std::f64::consts::PI * j as f64 / resolution as f64;
                d.push(DVector::from_vec(vec![
                    polar.sin() * azim.cos(),
                    polar.sin() * azim.sin(),
                    polar.cos(),
                ]));
            }
        }
        d
    };

    let points = dirs
        .into_iter()
        .map(|u| {
            let q = (u.transpose() * y.as_matrix() * &u)[(0, 0)];
            let r = if q > cutoff {
                (1.0 / q.sqrt()).min(clip_radius)
            } else {
                clip_radius
            };
            u * r
        })
        .collect();

    Ok(EllipsoidBoundary {
        points,
        degenerate,
        clip_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_norm;
    use nalgebra::dmatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pd(m: DMatrix<f64>) -> PsdMatrix {
        PsdMatrix::definite(SymMatrix::new(m).unwrap(), &tol()).unwrap()
    }

    fn example1_structure(x1: DMatrix<f64>, x2: DMatrix<f64>, x3: DMatrix<f64>) -> InfoStructure {
        let t = tol();
        let w1 = DMatrix::identity(3, 3);
        let w2 = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let w3 = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        InfoStructure::new(
            3,
            vec![
                ComponentBound::new(w1, pd(x1), &t).unwrap(),
                ComponentBound::new(w2, pd(x2), &t).unwrap(),
                ComponentBound::new(w3, pd(x3), &t).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn zero_selector_row_rejected() {
        let t = tol();
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let x = pd(DMatrix::identity(2, 2));
        assert!(matches!(
            ComponentBound::new(w, x, &t),
            Err(OciError::ZeroSelectorRow { row: 1 })
        ));
    }

    #[test]
    fn inverse_bound_identity() {
        let t = tol();
        let b = ComponentBound::new(DMatrix::identity(2, 2), pd(DMatrix::identity(2, 2)), &t)
            .unwrap();
        let y = to_inverse_bound(&b, &t).unwrap();
        assert!(frob_norm(&(y.as_matrix() - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn inverse_bound_partial_selector() {
        let t = tol();
        let w = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let x = pd(DMatrix::from_element(1, 1, 4.0));
        let b = ComponentBound::new(w, x, &t).unwrap();
        let y = to_inverse_bound(&b, &t).unwrap();
        let expect = dmatrix![0.25, 0.0; 0.0, 0.0];
        assert!(frob_norm(&(y.as_matrix() - expect)) < 1e-12);
    }

    #[test]
    fn example1_inverse_bound_ranks() {
        let t = tol();
        let info = example1_structure(
            DMatrix::identity(3, 3) * 2.0,
            DMatrix::identity(2, 2) * 3.0,
            dmatrix![2.0, 0.5; 0.5, 1.0],
        );
        let ranks: Vec<usize> = info
            .inverse_bounds(&t)
            .unwrap()
            .iter()
            .map(|y| linalg::rank_tol(y.as_matrix(), &t))
            .collect();
        assert_eq!(ranks, vec![3, 2, 2]);
    }

    #[test]
    fn stacked_w_shapes() {
        let t = tol();
        let single = InfoStructure::new(
            2,
            vec![ComponentBound::new(
                DMatrix::identity(2, 2),
                pd(DMatrix::identity(2, 2)),
                &t,
            )
            .unwrap()],
        )
        .unwrap();
        assert_eq!(stacked_w(&single), DMatrix::identity(2, 2));

        let info = example1_structure(
            DMatrix::identity(3, 3),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let w = stacked_w(&info);
        assert_eq!((w.nrows(), w.ncols()), (7, 3));
        assert_eq!(linalg::rank_tol(&w, &t), 3);

        let dup = InfoStructure::new(
            2,
            vec![
                ComponentBound::new(
                    DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
                ComponentBound::new(
                    DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let w = stacked_w(&dup);
        assert_eq!((w.nrows(), w.ncols()), (2, 2));
        assert_eq!(linalg::rank_tol(&w, &t), 1);
    }

    #[test]
    fn aggregate_matches_hand_computation() {
        let t = tol();
        // Single full bound: aggregate is X^{-1} (division by M = 1).
        let single = InfoStructure::new(
            2,
            vec![ComponentBound::new(
                DMatrix::identity(2, 2),
                pd(DMatrix::identity(2, 2)),
                &t,
            )
            .unwrap()],
        )
        .unwrap();
        let y = aggregate_inverse_bound(&single, &t).unwrap();
        assert!(frob_norm(&(y.as_matrix() - DMatrix::identity(2, 2))) < 1e-12);

        // Two identical scalar bounds: (1 + 1)/2 = 1.
        let two = InfoStructure::new(
            1,
            vec![
                ComponentBound::new(
                    DMatrix::identity(1, 1),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
                ComponentBound::new(
                    DMatrix::identity(1, 1),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let y = aggregate_inverse_bound(&two, &t).unwrap();
        assert!((y.as_matrix()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_rank_matches_stack() {
        let t = tol();
        let info = example1_structure(
            DMatrix::identity(3, 3) * 1.5,
            dmatrix![2.0, 0.3; 0.3, 1.0],
            DMatrix::identity(2, 2),
        );
        let y = aggregate_inverse_bound(&info, &t).unwrap();
        assert_eq!(linalg::rank_tol(y.as_matrix(), &t), 3);
    }

    #[test]
    fn kahan_vertex_recovers_bound() {
        let t = tol();
        let info = example1_structure(
            DMatrix::identity(3, 3) * 2.0,
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * 3.0,
        );
        let ys = info.inverse_bounds(&t).unwrap();
        for b in 0..info.len() {
            let y = kahan_combine(&info, &SimplexWeights::vertex(info.len(), b), &t).unwrap();
            assert!(frob_norm(&(y.as_matrix() - ys[b].as_matrix())) < 1e-14);
        }
    }

    #[test]
    fn kahan_symmetric_half_weights() {
        let t = tol();
        let info = InfoStructure::new(
            2,
            vec![
                ComponentBound::new(
                    DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
                ComponentBound::new(
                    DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
                    pd(DMatrix::identity(1, 1)),
                    &t,
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let w = SimplexWeights::new(DVector::from_vec(vec![0.5, 0.5]), &t).unwrap();
        let y = kahan_combine(&info, &w, &t).unwrap();
        let expect = DMatrix::identity(2, 2) * 0.5;
        assert!(frob_norm(&(y.as_matrix() - expect)) < 1e-14);
    }

    #[test]
    fn kahan_weight_length_mismatch() {
        let t = tol();
        let info = example1_structure(
            DMatrix::identity(3, 3),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let w = SimplexWeights::uniform(2);
        assert!(matches!(
            kahan_combine(&info, &w, &t),
            Err(OciError::WeightLengthMismatch { .. })
        ));
    }

    #[test]
    fn uniform_kahan_equals_aggregate() {
        let t = tol();
        let info = example1_structure(
            dmatrix![2.0, 0.1, 0.0; 0.1, 1.5, 0.2; 0.0, 0.2, 1.0],
            dmatrix![1.0, 0.2; 0.2, 2.0],
            dmatrix![3.0, -0.4; -0.4, 1.0],
        );
        let agg = aggregate_inverse_bound(&info, &t).unwrap();
        let kah = kahan_combine(&info, &SimplexWeights::uniform(3), &t).unwrap();
        assert!(frob_norm(&(agg.as_matrix() - kah.as_matrix())) < 1e-10);
    }

    #[test]
    fn contains_examples() {
        let t = tol();
        let info = InfoStructure::new(
            2,
            vec![ComponentBound::new(
                DMatrix::identity(2, 2),
                pd(DMatrix::identity(2, 2)),
                &t,
            )
            .unwrap()],
        )
        .unwrap();
        let tiny = pd(DMatrix::identity(2, 2) * 1e-3);
        assert!(contains(&info, &tiny, &t).unwrap());
        let big = pd(DMatrix::identity(2, 2) * 2.0);
        assert!(!contains(&info, &big, &t).unwrap());

        let partial = InfoStructure::new(
            2,
            vec![ComponentBound::new(
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                pd(DMatrix::identity(1, 1)),
                &t,
            )
            .unwrap()],
        )
        .unwrap();
        let p = pd(dmatrix![0.5, 0.0; 0.0, 100.0]);
        assert!(contains(&partial, &p, &t).unwrap());

        let wrong_dim = pd(DMatrix::identity(3, 3));
        assert!(contains(&partial, &wrong_dim, &t).is_err());
    }

    #[test]
    fn sampler_produces_admissible_matrices() {
        let t = tol();
        let info = example1_structure(
            dmatrix![2.0, 0.1, 0.0; 0.1, 1.5, 0.2; 0.0, 0.2, 1.0],
            dmatrix![1.0, 0.2; 0.2, 2.0],
            dmatrix![3.0, -0.4; -0.4, 1.0],
        );
        assert!(sample_admissible(&info, 0, 7, &t).unwrap().is_empty());
        let ps = sample_admissible(&info, 40, 7, &t).unwrap();
        assert_eq!(ps.len(), 40);
        for p in &ps {
            assert!(contains(&info, p, &t).unwrap());
        }
    }

    #[test]
    fn sampler_boundary_reaches_unit_sphere() {
        let t = tol();
        let m = 3;
        let info = InfoStructure::new(
            m,
            vec![ComponentBound::new(
                DMatrix::identity(m, m),
                pd(DMatrix::identity(m, m)),
                &t,
            )
            .unwrap()],
        )
        .unwrap();
        let ps = sample_admissible(&info, 10, 3, &t).unwrap();
        for (k, p) in ps.iter().enumerate() {
            if k % 2 == 0 {
                let (vals, _) = p.base().eigen();
                assert!(vals[0] <= 1.0 + t.tol_check);
                assert!(vals[0] >= 1.0 - t.tol_check);
            }
        }
    }

    #[test]
    fn sampler_determinism() {
        let t = tol();
        let info = example1_structure(
            DMatrix::identity(3, 3),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let a = sample_admissible(&info, 5, 11, &t).unwrap();
        let b = sample_admissible(&info, 5, 11, &t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.as_matrix(), y.as_matrix());
        }
    }

    #[test]
    fn ellipsoid_unit_circle() {
        let t = tol();
        let y = InverseBound::new(pd(DMatrix::identity(2, 2)));
        let b = ellipsoid_boundary_points(&y, 4, &t).unwrap();
        assert!(!b.degenerate);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (ex, ey)) in b.points.iter().zip(expect) {
            assert!((p[0] - ex).abs() < 1e-12 && (p[1] - ey).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipsoid_semi_axes() {
        let t = tol();
        let y = InverseBound::new(pd(dmatrix![4.0, 0.0; 0.0, 1.0]));
        let b = ellipsoid_boundary_points(&y, 4, &t).unwrap();
        assert!((b.points[0][0] - 0.5).abs() < 1e-12);
        assert!((b.points[1][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_degenerate_clipped() {
        let t = tol();
        let y = InverseBound::new(
            PsdMatrix::semidefinite(
                SymMatrix::new(dmatrix![1.0, 0.0; 0.0, 0.0]).unwrap(),
                &t,
            )
            .unwrap(),
        );
        let b = ellipsoid_boundary_points(&y, 8, &t).unwrap();
        assert!(b.degenerate);
        assert!((b.clip_radius - 10.0).abs() < 1e-12);
        for p in &b.points {
            // Either on the lines x1 = +/-1 or clipped at the radius.
            let on_line = (p[0].abs() - 1.0).abs() < 1e-9;
            let clipped = p.norm() <= b.clip_radius + 1e-9;
            assert!(on_line || clipped);
            assert!(p[0].abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn ellipsoid_rejects_unsupported_dims() {
        let t = tol();
        let y = InverseBound::new(pd(DMatrix::identity(4, 4)));
        assert!(matches!(
            ellipsoid_boundary_points(&y, 4, &t),
            Err(OciError::UnsupportedDimension { dim: 4 })
        ));
    }

    #[test]
    fn simplex_weight_validation() {
        let t = tol();
        assert!(SimplexWeights::new(DVector::from_vec(vec![0.5, 0.5]), &t).is_ok());
        assert!(SimplexWeights::new(DVector::from_vec(vec![0.7, 0.5]), &t).is_err());
        assert!(SimplexWeights::new(DVector::from_vec(vec![-0.1, 1.1]), &t).is_err());
        let cleaned = SimplexWeights::from_solver(&[0.5, 1e-14, 0.5], 1e-12).unwrap();
        assert_eq!(cleaned.as_vector()[1], 0.0);
        assert!((cleaned.as_vector().sum() - 1.0).abs() < 1e-15);
    }
}
