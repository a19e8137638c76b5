//! Seeded generation of random matrices and fusion instances for the
//! verification oracle and the randomized test batteries.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::info::{ComponentBound, InfoStructure};
use crate::linalg::{self, PsdMatrix, SymMatrix, Tolerances};
use crate::solver::FusionProblem;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v
    })
}

/// Random positive definite matrix with eigenvalues well away from zero.
pub fn random_pd(dim: usize, rng: &mut ChaCha8Rng, tol: &Tolerances) -> PsdMatrix {
    let a = gaussian_matrix(dim, dim, rng);
    let m = &a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.3;
    PsdMatrix::definite(SymMatrix::new(m).expect("square"), tol).expect("construction is PD")
}

/// Random PSD matrix of the requested rank.
pub fn random_psd_rank(
    dim: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> PsdMatrix {
    let rank = rank.min(dim);
    if rank == 0 {
        return PsdMatrix::semidefinite(SymMatrix::zeros(dim), tol).expect("zero is PSD");
    }
    let f = gaussian_matrix(dim, rank, rng);
    let m = &f * f.transpose() / rank as f64;
    PsdMatrix::semidefinite(SymMatrix::new(m).expect("square"), tol).expect("Gramian is PSD")
}

/// Gaussian matrix resampled until it is full column rank with condition
/// number below about one hundred, so downstream formulas stay well away
/// from the rank cutoffs.
pub fn random_full_column_rank(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> DMatrix<f64> {
    // margin = sigma_min / (tol_rank * sigma_max), so the requirement is
    // kappa < 0.01 / tol_rank.
    let needed = 0.01 / tol.tol_rank;
    loop {
        let a = gaussian_matrix(rows, cols, rng);
        let report = linalg::rank_with_margin(&a, tol);
        if report.rank == cols && report.margin > needed {
            return a;
        }
    }
}

/// Shape limits for random fusion instances.
#[derive(Debug, Clone, Copy)]
pub struct InstanceDims {
    pub max_state: usize,
    pub max_outputs: usize,
    pub max_corr: usize,
    pub max_bounds: usize,
}

impl Default for InstanceDims {
    fn default() -> Self {
        Self {
            max_state: 4,
            max_outputs: 8,
            max_corr: 6,
            max_bounds: 4,
        }
    }
}

/// Draws one random fusion instance. With `ensure_feasible` the first
/// bound covers the full correlation (selector = identity), which makes
/// the admissible set bounded and the instance solvable; otherwise the
/// selector patterns are mixed (rows of the identity, Gaussian rows,
/// pairwise differences) so both feasible and infeasible instances occur.
pub fn random_problem(
    dims: &InstanceDims,
    ensure_feasible: bool,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<FusionProblem> {
    // Narrow draws keep every selector to a single row and pin the gain
    // with a square observation stack, so some correlation directions stay
    // unbounded and unavoidable: infeasible instances occur.
    let narrow = !ensure_feasible && rng.random_bool(0.5);
    let n = 1 + rng.random_range(0..dims.max_state);
    let o = if narrow {
        n
    } else {
        n + rng.random_range(0..=(dims.max_outputs - n).min(dims.max_outputs - 1))
    };
    let m = 1 + rng.random_range(0..dims.max_corr);
    let num_bounds = 1 + rng.random_range(0..dims.max_bounds);

    let h = random_full_column_rank(o, n, rng, tol);
    let r = random_pd(o, rng, tol);
    let c = match rng.random_range(0..8) {
        0 => DMatrix::zeros(o, m),
        1 => {
            // Rank-deficient correlation map.
            let k = 1 + rng.random_range(0..m.min(o));
            gaussian_matrix(o, k, rng) * gaussian_matrix(k, m, rng)
        }
        _ => gaussian_matrix(o, m, rng),
    };

    let mut bounds = Vec::with_capacity(num_bounds);
    for b in 0..num_bounds {
        let w = if b == 0 && ensure_feasible {
            DMatrix::identity(m, m)
        } else if narrow {
            random_single_row(m, rng)
        } else {
            random_selector(m, rng)
        };
        let x = random_pd(w.nrows(), rng, tol);
        bounds.push(ComponentBound::new(w, x, tol)?);
    }
    let info = InfoStructure::new(m, bounds)?;
    FusionProblem::new(h, r, c, info, tol)
}

/// Keeps drawing until the exact feasibility test passes.
pub fn random_feasible_problem(
    dims: &InstanceDims,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<FusionProblem> {
    loop {
        let problem = random_problem(dims, true, rng, tol)?;
        if crate::feasibility::oci_feasible(&problem, tol)? {
            return Ok(problem);
        }
    }
}

/// How much larger the certified worst-case bound may be than the
/// best-case bound before an instance is considered numerically
/// unresolvable; see [`random_well_posed_problem`].
pub const WELL_POSED_RATIO: f64 = 1e3;

/// Mixed feasible/infeasible draws with a well-posedness guard: feasible
/// instances whose certified optimal-bound scale exceeds the scale of the
/// problem data (noise and bound traces) by more than
/// [`WELL_POSED_RATIO`] are redrawn. Beyond that ratio the optimum sits
/// on a nearly singular face that double precision cannot resolve, so
/// such instances carry no information about solver agreement.
/// Infeasible instances are always kept.
pub fn random_well_posed_problem(
    dims: &InstanceDims,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<FusionProblem> {
    loop {
        let problem = random_problem(dims, false, rng, tol)?;
        match crate::solver::uniform_weight_bound_scale(&problem, tol) {
            // No uniform-weight bound means infeasible: keep.
            None => return Ok(problem),
            Some(scale) => {
                let noise = problem.noise_cov().trace() / problem.output_dim() as f64;
                let bounds = problem
                    .info()
                    .bounds()
                    .iter()
                    .map(|b| b.bound().trace() / b.output_dim() as f64)
                    .fold(0.0f64, f64::max);
                if scale <= WELL_POSED_RATIO * (noise + bounds) {
                    return Ok(problem);
                }
            }
        }
    }
}

fn random_single_row(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match rng.random_range(0..3) {
        0 => {
            let coord = rng.random_range(0..m);
            DMatrix::from_fn(1, m, |_, c| if c == coord { 1.0 } else { 0.0 })
        }
        1 if m >= 2 => {
            let a = rng.random_range(0..m);
            let b = (a + 1 + rng.random_range(0..m - 1)) % m;
            DMatrix::from_fn(1, m, |_, c| {
                if c == a {
                    1.0
                } else if c == b {
                    -1.0
                } else {
                    0.0
                }
            })
        }
        _ => loop {
            let w = gaussian_matrix(1, m, rng);
            if w.iter().any(|v| *v != 0.0) {
                break w;
            }
        },
    }
}

fn random_selector(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match rng.random_range(0..4) {
        0 => DMatrix::identity(m, m),
        1 => {
            // A random nonempty subset of identity rows.
            let count = 1 + rng.random_range(0..m);
            let start = rng.random_range(0..m);
            DMatrix::from_fn(count, m, |r, c| {
                if (start + r) % m == c {
                    1.0
                } else {
                    0.0
                }
            })
        }
        2 => {
            let rows = 1 + rng.random_range(0..m);
            loop {
                let w = gaussian_matrix(rows, m, rng);
                if (0..rows).all(|r| w.row(r).iter().any(|v| *v != 0.0)) {
                    break w;
                }
            }
        }
        _ => {
            // Difference rows: uninformative about the common mode.
            if m == 1 {
                DMatrix::from_element(1, 1, 1.0)
            } else {
                let count = 1 + rng.random_range(0..(m - 1));
                DMatrix::from_fn(count, m, |r, c| {
                    if c == r {
                        1.0
                    } else if c == r + 1 {
                        -1.0
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_problem_mix_contains_both_classes() {
        let t = Tolerances::default();
        let mut rng = rng_from_seed(42);
        let dims = InstanceDims::default();
        let mut feasible = 0;
        let mut infeasible = 0;
        for _ in 0..100 {
            let p = random_problem(&dims, false, &mut rng, &t).unwrap();
            if crate::feasibility::oci_feasible(&p, &t).unwrap() {
                feasible += 1;
            } else {
                infeasible += 1;
            }
        }
        assert!(feasible >= 10, "only {feasible} feasible instances");
        assert!(infeasible >= 10, "only {infeasible} infeasible instances");
    }

    #[test]
    fn feasible_generator_is_feasible() {
        let t = Tolerances::default();
        let mut rng = rng_from_seed(7);
        let dims = InstanceDims::default();
        for _ in 0..20 {
            let p = random_feasible_problem(&dims, &mut rng, &t).unwrap();
            assert!(crate::feasibility::oci_feasible(&p, &t).unwrap());
        }
    }
}
