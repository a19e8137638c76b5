use oci_core::info::{kahan_combine_precomputed, SimplexWeights};
use oci_core::linalg::Tolerances;
use oci_core::solver::*;
use oci_core::{feasibility, synth};

fn main() {
    let t = Tolerances::default();
    let dims = synth::InstanceDims::default();
    let mut total_bad = 0;
    for seed in [1u64, 7, 42, 20260809, 555, 91, 1234, 777, 31337, 2] {
        let mut rng = synth::rng_from_seed(seed);
        let mut disagreements = 0;
        for i in 0..200 {
            let problem = synth::random_well_posed_problem(&dims, &mut rng, &t).unwrap();
            let feas = feasibility::oci_feasible(&problem, &t).unwrap();
            let prog = encode_sdp(&problem, Objective::Trace, None, &t).unwrap();
            let raw = ClarabelBackend.solve(&prog, &t).unwrap();
            let mut solvable = matches!(raw.status, BackendStatus::Solved | BackendStatus::AlmostSolved);
            if solvable {
                let weights = SimplexWeights::from_solver(&raw.x[prog.layout.omega.clone()], 1e-6).unwrap();
                let ys = problem.info().inverse_bounds(&t).unwrap();
                let y = kahan_combine_precomputed(&ys, &weights, problem.corr_dim(), &t).unwrap();
                solvable = recover_gain(&problem, &y, &t).is_ok();
            }
            if solvable != feas {
                let report = feasibility::analyze(&problem, &t).unwrap();
                if !report.borderline() {
                    disagreements += 1;
                    println!("  seed {seed} inst {i}: feas={feas} status={:?}", raw.status);
                }
            }
        }
        total_bad += disagreements;
        println!("seed {seed}: non-borderline disagreements {disagreements}");
    }
    println!("total: {total_bad}");
}
