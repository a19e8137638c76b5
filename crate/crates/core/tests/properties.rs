//! Property tests for the algebraic invariants: pseudo-inverse round
//! trips, spectral factorizations, block-matrix orderings, the primal vs
//! inverse view of component bounds, and soundness of the convex bound
//! combination. Matrices are generated from a seeded stream per case so
//! shrinking stays meaningful.

use nalgebra::DMatrix;
use proptest::prelude::*;

use oci_core::info::{
    aggregate_inverse_bound, contains, kahan_combine, sample_admissible, ComponentBound,
    InfoStructure, SimplexWeights,
};
use oci_core::linalg::{
    check_psd_order, frob_norm, pinv, spectral_split, PsdMatrix, SymMatrix, Tolerances,
};
use oci_core::synth;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn random_info(seed: u64, m: usize, bounds: usize) -> InfoStructure {
    let t = tol();
    let mut rng = synth::rng_from_seed(seed);
    let mut parts = vec![ComponentBound::new(
        DMatrix::identity(m, m),
        synth::random_pd(m, &mut rng, &t),
        &t,
    )
    .unwrap()];
    for _ in 1..bounds {
        let rows = 1 + (seed as usize % m.max(1)).min(m - 1);
        let w = synth::random_full_column_rank(m, rows, &mut rng, &t).transpose();
        let x = synth::random_pd(rows, &mut rng, &t);
        parts.push(ComponentBound::new(w, x, &t).unwrap());
    }
    InfoStructure::new(m, parts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pinv_round_trip(seed in 0u64..1_000_000, dim in 1usize..=8) {
        let t = tol();
        let mut rng = synth::rng_from_seed(seed);
        let rank = 1 + (seed as usize) % dim;
        let a = synth::random_psd_rank(dim, rank, &mut rng, &t);
        let p = pinv(a.base(), &t);
        let round = a.as_matrix() * p.as_matrix() * a.as_matrix();
        let denom = frob_norm(a.as_matrix()).max(1e-12);
        prop_assert!(frob_norm(&(round - a.as_matrix())) <= t.tol_check * denom);
        // The other three defining identities.
        let round2 = p.as_matrix() * a.as_matrix() * p.as_matrix();
        prop_assert!(frob_norm(&(round2 - p.as_matrix())) <= t.tol_check * frob_norm(p.as_matrix()).max(1e-12));
        let ap = a.as_matrix() * p.as_matrix();
        prop_assert!(frob_norm(&(&ap - ap.transpose())) <= t.tol_check);
    }

    #[test]
    fn spectral_split_reconstructs(seed in 0u64..1_000_000, dim in 1usize..=8) {
        let t = tol();
        let mut rng = synth::rng_from_seed(seed);
        let rank = (seed as usize) % (dim + 1);
        let a = synth::random_psd_rank(dim, rank, &mut rng, &t);
        let f = spectral_split(&a, &t).unwrap();
        let denom = frob_norm(a.as_matrix()).max(1e-12);
        prop_assert!(frob_norm(&(f.reconstruct() - a.as_matrix())) <= t.tol_check * denom);
        // [V V_perp] orthonormal and mutually orthogonal.
        let cross = f.range_basis.transpose() * &f.null_basis;
        prop_assert!(frob_norm(&cross) <= t.tol_check);
        let gram = f.range_basis.transpose() * &f.range_basis;
        prop_assert!(frob_norm(&(gram - DMatrix::identity(f.rank(), f.rank()))) <= t.tol_check);
    }

    #[test]
    fn schur_psd_equivalence_with_definite_corner(seed in 0u64..1_000_000, p in 1usize..=4, q in 1usize..=4) {
        // [A B; B' C] is accepted as PSD by a direct eigenvalue check iff
        // C - B'A^{-1}B is, whenever A is positive definite.
        let t = tol();
        let mut rng = synth::rng_from_seed(seed);
        let a = synth::random_pd(p, &mut rng, &t);
        let b = synth::gaussian_matrix(p, q, &mut rng);
        let shift = SymMatrix::new(synth::gaussian_matrix(q, q, &mut rng)).unwrap();
        let a_inv = a.inverse().unwrap();
        let c = SymMatrix::new(b.transpose() * a_inv.as_matrix() * &b + shift.as_matrix()).unwrap();
        let mut x = DMatrix::zeros(p + q, p + q);
        x.view_mut((0, 0), (p, p)).copy_from(a.as_matrix());
        x.view_mut((0, p), (p, q)).copy_from(&b);
        x.view_mut((p, 0), (q, p)).copy_from(&b.transpose());
        x.view_mut((p, p), (q, q)).copy_from(c.as_matrix());
        let x_min = SymMatrix::new(x).unwrap().min_eigenvalue();
        let schur_ok = check_psd_order(&c, &SymMatrix::new(b.transpose() * a_inv.as_matrix() * &b).unwrap(), &t).unwrap();
        // Skip draws whose verdict sits inside the tolerance band.
        if x_min.abs() > 10.0 * t.tol_check && shift.min_eigenvalue().abs() > 10.0 * t.tol_check {
            prop_assert_eq!(x_min >= 0.0, schur_ok);
        }
    }

    #[test]
    fn identity_coupled_block_orders_inverses(seed in 0u64..1_000_000, p in 1usize..=4) {
        // For PSD [A I; I C]: both corners are definite, A >= C^{-1} and
        // C >= A^{-1}.
        let t = tol();
        let mut rng = synth::rng_from_seed(seed);
        let c = synth::random_pd(p, &mut rng, &t);
        let bump = synth::random_psd_rank(p, 1 + (seed as usize) % p, &mut rng, &t);
        let a = SymMatrix::new(c.inverse().unwrap().as_matrix() + bump.as_matrix()).unwrap();
        let a_pd = PsdMatrix::definite(a.clone(), &t).unwrap();
        prop_assert!(check_psd_order(&a, &c.inverse().unwrap(), &t).unwrap());
        prop_assert!(check_psd_order(c.base(), &a_pd.inverse().unwrap(), &t).unwrap());
    }

    #[test]
    fn primal_and_inverse_bound_views_agree(seed in 0u64..1_000_000, m in 1usize..=5) {
        // W P W' <= X holds iff P^{-1} >= W' X^{-1} W, for definite P.
        let t = tol();
        let mut rng = synth::rng_from_seed(seed);
        let rows = 1 + (seed as usize) % m;
        let w = synth::random_full_column_rank(m, rows, &mut rng, &t).transpose();
        let x = synth::random_pd(rows, &mut rng, &t);
        let bound = ComponentBound::new(w.clone(), x.clone(), &t).unwrap();
        let info = InfoStructure::new(m, vec![bound.clone()]).unwrap();
        let y = oci_core::info::to_inverse_bound(&bound, &t).unwrap();
        let p = synth::random_pd(m, &mut rng, &t);
        let primal = contains(&info, &p, &t).unwrap();
        let p_inv = p.inverse().unwrap();
        let inverse = check_psd_order(&p_inv, &SymMatrix::new(y.as_matrix().clone()).unwrap(), &t).unwrap();
        // Borderline draws can legitimately disagree within tolerance;
        // verify agreement when the primal margin is clear.
        let wpw = SymMatrix::new(&w * p.as_matrix() * w.transpose()).unwrap();
        let margin = SymMatrix::new(x.as_matrix() - wpw.as_matrix()).unwrap().min_eigenvalue();
        if margin.abs() > 10.0 * t.tol_check {
            prop_assert_eq!(primal, inverse);
        }
    }

    #[test]
    fn kahan_combination_is_sound(seed in 0u64..1_000_000, m in 2usize..=4, bounds in 1usize..=3) {
        // Every admissible P satisfies P^{-1} >= sum_b w_b Y_b for every
        // weight vector on the simplex.
        let t = tol();
        let info = random_info(seed, m, bounds);
        let mut rng = synth::rng_from_seed(seed ^ 0xABCD);
        let raw: Vec<f64> = (0..info.len()).map(|_| {
            use rand::Rng;
            rng.random::<f64>() + 1e-3
        }).collect();
        let sum: f64 = raw.iter().sum();
        let w = SimplexWeights::new(
            nalgebra::DVector::from_iterator(raw.len(), raw.iter().map(|v| v / sum)),
            &t,
        ).unwrap();
        let y = kahan_combine(&info, &w, &t).unwrap();
        for p in sample_admissible(&info, 8, seed, &t).unwrap() {
            let p_inv = p.inverse().unwrap();
            prop_assert!(check_psd_order(
                &p_inv,
                &SymMatrix::new(y.as_matrix().clone()).unwrap(),
                &t
            ).unwrap());
        }
    }

    #[test]
    fn uniform_weights_match_aggregate(seed in 0u64..1_000_000, m in 1usize..=4, bounds in 1usize..=4) {
        let t = tol();
        let info = random_info(seed, m, bounds);
        let agg = aggregate_inverse_bound(&info, &t).unwrap();
        let kah = kahan_combine(&info, &SimplexWeights::uniform(info.len()), &t).unwrap();
        let denom = frob_norm(agg.as_matrix()).max(1.0);
        prop_assert!(frob_norm(&(agg.as_matrix() - kah.as_matrix())) <= t.tol_check * denom);
    }

    #[test]
    fn vertex_weights_recover_each_bound(seed in 0u64..1_000_000, m in 1usize..=4, bounds in 2usize..=4) {
        let t = tol();
        let info = random_info(seed, m, bounds);
        let ys = info.inverse_bounds(&t).unwrap();
        for b in 0..info.len() {
            let y = kahan_combine(&info, &SimplexWeights::vertex(info.len(), b), &t).unwrap();
            prop_assert!(frob_norm(&(y.as_matrix() - ys[b].as_matrix())) <= 1e-12);
        }
    }

    #[test]
    fn sampled_admissible_matrices_satisfy_all_bounds(seed in 0u64..1_000_000, m in 1usize..=4) {
        let t = tol();
        let info = random_info(seed, m, 3.min(m + 1));
        for p in sample_admissible(&info, 12, seed.wrapping_add(1), &t).unwrap() {
            prop_assert!(contains(&info, &p, &t).unwrap());
        }
    }
}
