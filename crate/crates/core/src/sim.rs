//! Cooperative localization on a graph of scalar random-walk vehicles.
//!
//! Each vehicle fuses its own prediction with relative measurements to its
//! neighbors. The joint error correlation of the estimates entering a
//! fusion is unknown; each vehicle only holds a bound over its own
//! neighborhood plus the bounds its neighbors transmit, which is exactly
//! the overlapping-bound structure this library solves.
//!
//! Per step every vehicle runs two solves. The fusion solve returns the
//! gain, the fused variance bound, and (through a projection request over
//! the whole prior) a bound on the prior joint correlation. The
//! propagation solve then combines each neighborhood member's joint bound
//! on `[its fused error; its prior errors]` - overlapping bounds again -
//! and projects onto the post-fusion coordinates to produce the next
//! neighborhood bound. Gains and bounds do not depend on measurement
//! realizations, so Monte Carlo runs replay one precomputed schedule.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{OciError, Result};
use crate::info::{ComponentBound, InfoStructure};
use crate::linalg::{PsdMatrix, SymMatrix, Tolerances};
use crate::solver::{
    solve_kahan_oci, solve_with_projection_bound, FusionProblem, Objective,
    ProjectionBoundRequest,
};

/// Static description of one simulation: graph, noise levels, horizon.
#[derive(Debug, Clone)]
pub struct NetworkScenario {
    pub vehicle_count: usize,
    /// Undirected neighbor pairs.
    pub edges: Vec<(usize, usize)>,
    /// Random-walk drift variance per vehicle.
    pub drift_var: Vec<f64>,
    /// Relative-measurement noise variance per edge; the two directed
    /// measurements on an edge use independent noise of this variance.
    pub meas_var: Vec<f64>,
    pub initial_truth: Vec<f64>,
    /// Per-vehicle bound on the initial estimation error variance; initial
    /// errors are drawn independently across vehicles at exactly this
    /// variance.
    pub initial_bound: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    pub monte_carlo_runs: usize,
}

impl NetworkScenario {
    /// Chain topology 0-1-...-(v-1) with uniform parameters.
    pub fn line(
        vehicle_count: usize,
        drift_var: f64,
        meas_var: f64,
        initial_bound: f64,
        steps: usize,
        seed: u64,
        monte_carlo_runs: usize,
    ) -> Self {
        Self {
            vehicle_count,
            edges: (1..vehicle_count).map(|i| (i - 1, i)).collect(),
            drift_var: vec![drift_var; vehicle_count],
            meas_var: vec![meas_var; vehicle_count.saturating_sub(1)],
            initial_truth: vec![0.0; vehicle_count],
            initial_bound: vec![initial_bound; vehicle_count],
            steps,
            seed,
            monte_carlo_runs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.vehicle_count;
        if v == 0 {
            return Err(OciError::PreconditionViolated {
                reason: "scenario needs at least one vehicle".into(),
            });
        }
        if self.drift_var.len() != v
            || self.initial_truth.len() != v
            || self.initial_bound.len() != v
        {
            return Err(OciError::DimensionMismatch {
                context: "scenario per-vehicle arrays",
                expected: v,
                found: self.drift_var.len(),
            });
        }
        if self.meas_var.len() != self.edges.len() {
            return Err(OciError::DimensionMismatch {
                context: "scenario per-edge noise array",
                expected: self.edges.len(),
                found: self.meas_var.len(),
            });
        }
        if self.drift_var.iter().any(|q| !(*q > 0.0)) {
            return Err(OciError::PreconditionViolated {
                reason: "drift variances must be positive".into(),
            });
        }
        if self.meas_var.iter().any(|r| !(*r > 0.0)) {
            return Err(OciError::PreconditionViolated {
                reason: "measurement variances must be positive".into(),
            });
        }
        if self.initial_bound.iter().any(|b| !(*b > 0.0)) {
            return Err(OciError::PreconditionViolated {
                reason: "initial bounds must be positive".into(),
            });
        }
        for &(a, b) in &self.edges {
            if a == b {
                return Err(OciError::PreconditionViolated {
                    reason: format!("self loop on vehicle {a}"),
                });
            }
            if a >= v || b >= v {
                return Err(OciError::PreconditionViolated {
                    reason: format!("edge ({a},{b}) out of range"),
                });
            }
        }
        if self.monte_carlo_runs == 0 {
            return Err(OciError::PreconditionViolated {
                reason: "monte_carlo_runs must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Sorted neighbor ids of `i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted neighborhood of `i` (self included). This fixed order is the
    /// concatenation convention for all joint error vectors and selectors.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out = self.neighbors(i);
        out.push(i);
        out.sort_unstable();
        out
    }

    fn edge_var(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        self.edges
            .iter()
            .position(|&(x, y)| (x.min(y), x.max(y)) == key)
            .map(|idx| self.meas_var[idx])
            .expect("validated edge")
    }
}

/// Fusion method run by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full neighborhood-bound exchange and the overlapping-bound solver.
    Oci,
    /// Neighbors transmit only their own error-variance bound; the solver
    /// sees per-coordinate bounds with unknown cross-correlation.
    Sci,
    /// Ignores correlation entirely: inverse-variance fusion of the
    /// per-estimate variances as if independent. Double-counts shared
    /// information; kept as the cautionary baseline.
    Naive,
}

/// Per-vehicle simulation state: the estimate and the neighborhood bound.
#[derive(Debug, Clone)]
pub struct VehicleTracker {
    pub id: usize,
    pub estimate: f64,
    /// Sorted ids (self included) that `bound` ranges over.
    pub neighborhood: Vec<usize>,
    /// Bound on the joint second moment of the neighborhood errors.
    pub bound: PsdMatrix,
}

/// Bound state carried between steps; joint matrices for the overlapping
/// method, scalars for the baselines.
#[derive(Debug, Clone)]
enum BoundState {
    Joint(Vec<PsdMatrix>),
    Scalar(Vec<f64>),
}

fn initial_bound_state(
    scenario: &NetworkScenario,
    method: Method,
    tol: &Tolerances,
) -> Result<BoundState> {
    match method {
        Method::Oci => {
            let mut bounds = Vec::with_capacity(scenario.vehicle_count);
            for i in 0..scenario.vehicle_count {
                let nbhd = scenario.neighborhood(i);
                let diag =
                    DVector::from_iterator(nbhd.len(), nbhd.iter().map(|&j| scenario.initial_bound[j]));
                bounds.push(PsdMatrix::definite(
                    SymMatrix::new(DMatrix::from_diagonal(&diag))?,
                    tol,
                )?);
            }
            Ok(BoundState::Joint(bounds))
        }
        Method::Sci | Method::Naive => Ok(BoundState::Scalar(scenario.initial_bound.clone())),
    }
}

/// Builds vehicle `i`'s fusion problem from the current tracker bounds:
/// prediction plus one relative-measurement estimate per neighbor, with
/// the drift and measurement noise in the known part and the prior
/// neighborhood errors behind the correlation map.
pub fn build_fusion_problem(
    scenario: &NetworkScenario,
    vehicle: usize,
    trackers: &[VehicleTracker],
    tol: &Tolerances,
) -> Result<FusionProblem> {
    if trackers.len() != scenario.vehicle_count {
        return Err(OciError::DimensionMismatch {
            context: "build_fusion_problem: tracker count",
            expected: scenario.vehicle_count,
            found: trackers.len(),
        });
    }
    for t in trackers {
        if t.bound.dim() != t.neighborhood.len() {
            return Err(OciError::DimensionMismatch {
                context: "build_fusion_problem: tracker bound dimension",
                expected: t.neighborhood.len(),
                found: t.bound.dim(),
            });
        }
    }
    let bounds: Vec<PsdMatrix> = trackers.iter().map(|t| t.bound.clone()).collect();
    let info = oci_info_structure(scenario, vehicle, &bounds, tol)?;
    fusion_problem_with_info(scenario, vehicle, info, tol)
}

fn fusion_problem_with_info(
    scenario: &NetworkScenario,
    vehicle: usize,
    info: InfoStructure,
    tol: &Tolerances,
) -> Result<FusionProblem> {
    let neighbors = scenario.neighbors(vehicle);
    let nbhd = scenario.neighborhood(vehicle);
    let m = nbhd.len();
    let o = 1 + neighbors.len();
    let pos = |j: usize| nbhd.iter().position(|&x| x == j).expect("in neighborhood");

    let h = DMatrix::from_element(o, 1, 1.0);
    let mut r = DMatrix::zeros(o, o);
    r[(0, 0)] = scenario.drift_var[vehicle];
    let mut c = DMatrix::zeros(o, m);
    c[(0, pos(vehicle))] = 1.0;
    for (row, &p) in neighbors.iter().enumerate() {
        r[(1 + row, 1 + row)] = scenario.edge_var(vehicle, p) + scenario.drift_var[p];
        c[(1 + row, pos(p))] = 1.0;
    }
    FusionProblem::new(h, PsdMatrix::definite(SymMatrix::new(r)?, tol)?, c, info, tol)
}

/// Overlapping structure: the vehicle's own neighborhood bound covers all
/// prior coordinates; each neighbor contributes the principal sub-block of
/// its bound over the shared ids.
fn oci_info_structure(
    scenario: &NetworkScenario,
    vehicle: usize,
    bounds: &[PsdMatrix],
    tol: &Tolerances,
) -> Result<InfoStructure> {
    let nbhd = scenario.neighborhood(vehicle);
    let m = nbhd.len();
    let pos = |j: usize| nbhd.iter().position(|&x| x == j).expect("in neighborhood");
    let mut component_bounds = vec![ComponentBound::new(
        DMatrix::identity(m, m),
        bounds[vehicle].clone(),
        tol,
    )?];
    for &p in &scenario.neighbors(vehicle) {
        let p_nbhd = scenario.neighborhood(p);
        let shared: Vec<usize> = p_nbhd
            .iter()
            .copied()
            .filter(|j| nbhd.contains(j))
            .collect();
        let w = DMatrix::from_fn(shared.len(), m, |r_i, c_i| {
            if pos(shared[r_i]) == c_i {
                1.0
            } else {
                0.0
            }
        });
        let idx: Vec<usize> = shared
            .iter()
            .map(|j| p_nbhd.iter().position(|x| x == j).expect("shared id"))
            .collect();
        let sub = principal_submatrix(bounds[p].as_matrix(), &idx);
        component_bounds.push(ComponentBound::new(
            w,
            PsdMatrix::definite(SymMatrix::new(sub)?, tol)?,
            tol,
        )?);
    }
    InfoStructure::new(m, component_bounds)
}

/// Per-coordinate structure for the split baseline: each neighborhood
/// member contributes only its own error-variance bound.
fn sci_info_structure(
    scenario: &NetworkScenario,
    vehicle: usize,
    scalars: &[f64],
    tol: &Tolerances,
) -> Result<InfoStructure> {
    let nbhd = scenario.neighborhood(vehicle);
    let m = nbhd.len();
    let mut component_bounds = Vec::with_capacity(m);
    for (coord, &j) in nbhd.iter().enumerate() {
        let w = DMatrix::from_fn(1, m, |_, c_i| if c_i == coord { 1.0 } else { 0.0 });
        let x =
            PsdMatrix::definite(SymMatrix::new(DMatrix::from_element(1, 1, scalars[j]))?, tol)?;
        component_bounds.push(ComponentBound::new(w, x, tol)?);
    }
    InfoStructure::new(m, component_bounds)
}

/// One synchronous fusion sweep at step `k`: returns per-vehicle gains
/// (over `[prediction, sorted neighbor estimates]`) and reported variance
/// bounds, and advances the bound state.
fn fuse_all(
    scenario: &NetworkScenario,
    method: Method,
    state: &mut BoundState,
    k: usize,
    tol: &Tolerances,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let v = scenario.vehicle_count;
    let wrap = |vehicle: usize, e: OciError| OciError::Simulation {
        step: k,
        vehicle,
        source: Box::new(e),
    };
    match (method, state) {
        (Method::Oci, BoundState::Joint(bounds)) => {
            // Stage 1: fuse, and bound the whole prior joint through the
            // projection request (selector = identity over the current
            // neighborhood, which is also the next step's neighborhood).
            let mut gains = Vec::with_capacity(v);
            let mut reported = Vec::with_capacity(v);
            let mut joint_self: Vec<DMatrix<f64>> = Vec::with_capacity(v);
            for i in 0..v {
                let info = oci_info_structure(scenario, i, bounds, tol)?;
                let problem = fusion_problem_with_info(scenario, i, info, tol)?;
                let m = problem.corr_dim();
                let gamma = 1e-6 * bounds[i].trace().max(1.0);
                let req = ProjectionBoundRequest::new(
                    DMatrix::identity(m, m),
                    gamma,
                    Objective::Trace,
                )?;
                let sol = solve_with_projection_bound(&problem, Objective::Trace, &req, tol)
                    .map_err(|e| wrap(i, e))?;
                let prior_bound = sol.projection.expect("projection requested").bound;
                // Joint bound on [fused error; prior errors]: the fused
                // error is K(noise) + (KC) * prior, the noise part is
                // independent of the prior, and prior <= M in the Loewner
                // order, so congruence with [KC; I] keeps the bound valid.
                let kc = &sol.gain * problem.correlation_map();
                let krk =
                    (&sol.gain * problem.noise_cov().as_matrix() * sol.gain.transpose())[(0, 0)];
                let mb = prior_bound.as_matrix();
                let kc_m = &kc * mb;
                let mut joint = DMatrix::zeros(1 + m, 1 + m);
                joint[(0, 0)] = krk + (&kc_m * kc.transpose())[(0, 0)];
                joint.view_mut((0, 1), (1, m)).copy_from(&kc_m);
                joint.view_mut((1, 0), (m, 1)).copy_from(&kc_m.transpose());
                joint.view_mut((1, 1), (m, m)).copy_from(mb);
                joint_self.push(joint);
                gains.push(gain_vector(&sol.gain));
                reported.push(sol.fused_bound.as_matrix()[(0, 0)]);
            }

            // Stage 2: combine the neighborhood's joint bounds (posts and
            // priors overlap across members) and project onto the
            // post-fusion coordinates.
            let mut next = Vec::with_capacity(v);
            for i in 0..v {
                let nbhd = scenario.neighborhood(i);
                let m = nbhd.len();
                if m == 1 {
                    next.push(pd_floor(DMatrix::from_element(1, 1, reported[i]), tol)?);
                    continue;
                }
                let pos = |j: usize| nbhd.iter().position(|&x| x == j).expect("member");
                // Combined vector: post-fusion errors of the neighborhood
                // (coordinates 0..m), then prior errors (m..2m).
                let dim = 2 * m;
                let mut parts = Vec::with_capacity(m);
                for &j in &nbhd {
                    let j_nbhd = scenario.neighborhood(j);
                    let shared: Vec<usize> =
                        j_nbhd.iter().copied().filter(|x| nbhd.contains(x)).collect();
                    let rows = 1 + shared.len();
                    let mut w = DMatrix::zeros(rows, dim);
                    w[(0, pos(j))] = 1.0;
                    for (r_i, &s) in shared.iter().enumerate() {
                        w[(1 + r_i, m + pos(s))] = 1.0;
                    }
                    let mut idx = vec![0usize];
                    idx.extend(
                        shared
                            .iter()
                            .map(|s| 1 + j_nbhd.iter().position(|x| x == s).expect("shared id")),
                    );
                    let sub = principal_submatrix(&joint_self[j], &idx);
                    parts.push(ComponentBound::new(w, pd_floor(sub, tol)?, tol)?);
                }
                let info = InfoStructure::new(dim, parts)?;
                let mut d = DMatrix::zeros(m, dim);
                for r_i in 0..m {
                    d[(r_i, r_i)] = 1.0;
                }
                let projected =
                    tightest_projection_bound(&info, d, tol).map_err(|e| wrap(i, e))?;
                next.push(pd_floor(projected.as_matrix().clone(), tol)?);
            }
            *bounds = next;
            Ok((gains, reported))
        }
        (Method::Sci, BoundState::Scalar(scalars)) => {
            let mut gains = Vec::with_capacity(v);
            let mut reported = Vec::with_capacity(v);
            let mut next = scalars.clone();
            for i in 0..v {
                let info = sci_info_structure(scenario, i, scalars, tol)?;
                let problem = fusion_problem_with_info(scenario, i, info, tol)?;
                let sol =
                    solve_kahan_oci(&problem, Objective::Trace, tol).map_err(|e| wrap(i, e))?;
                gains.push(gain_vector(&sol.gain));
                let b = sol.fused_bound.as_matrix()[(0, 0)];
                reported.push(b);
                next[i] = b;
            }
            *scalars = next;
            Ok((gains, reported))
        }
        (Method::Naive, BoundState::Scalar(scalars)) => {
            // Inverse-variance fusion assuming independent estimates.
            let mut gains = Vec::with_capacity(v);
            let mut reported = Vec::with_capacity(v);
            let mut next = scalars.clone();
            for i in 0..v {
                let neighbors = scenario.neighbors(i);
                let mut variances = vec![scenario.drift_var[i] + scalars[i]];
                for &p in &neighbors {
                    variances.push(scenario.edge_var(i, p) + scenario.drift_var[p] + scalars[p]);
                }
                let information: f64 = variances.iter().map(|s| 1.0 / s).sum();
                let fused = 1.0 / information;
                gains.push(DVector::from_iterator(
                    variances.len(),
                    variances.iter().map(|s| fused / s),
                ));
                reported.push(fused);
                next[i] = fused;
            }
            *scalars = next;
            Ok((gains, reported))
        }
        _ => unreachable!("bound state always matches the method"),
    }
}

fn gain_vector(gain: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(gain.ncols(), gain.row(0).iter().copied())
}

/// Smallest valid bound on the selected coordinates of the combined vector,
/// computed through the solver with a trivial fusion part: one unit
/// observation with unit noise and no correlation coupling, so the
/// objective reduces to the projection trace alone.
fn tightest_projection_bound(
    info: &InfoStructure,
    selector: DMatrix<f64>,
    tol: &Tolerances,
) -> Result<PsdMatrix> {
    let dim = info.dim();
    let problem = FusionProblem::new(
        DMatrix::identity(1, 1),
        PsdMatrix::definite(SymMatrix::identity(1), tol)?,
        DMatrix::zeros(1, dim),
        info.clone(),
        tol,
    )?;
    let req = ProjectionBoundRequest::new(selector, 1.0, Objective::Trace)?;
    let sol = solve_with_projection_bound(&problem, Objective::Trace, &req, tol)?;
    Ok(sol.projection.expect("projection requested").bound)
}

/// Inflates by a hair when needed so the matrix stays acceptable as a
/// positive definite bound at the next step; inflating a bound keeps it
/// valid.
fn pd_floor(mat: DMatrix<f64>, tol: &Tolerances) -> Result<PsdMatrix> {
    let sym = SymMatrix::new(mat)?;
    let needed = tol.tol_pd * (1.0 + sym.trace().abs());
    let min_eig = sym.min_eigenvalue();
    let sym = if min_eig < needed {
        SymMatrix::new(sym.as_matrix() + DMatrix::identity(sym.dim(), sym.dim()) * (needed - min_eig))?
    } else {
        sym
    };
    PsdMatrix::definite(sym, tol)
}

fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

// ---- single-run stepping ----

/// Online single-run simulation state (truth, estimates, trackers).
#[derive(Debug, Clone)]
pub struct SimState {
    scenario: NetworkScenario,
    method: Method,
    bounds: BoundState,
    pub truth: Vec<f64>,
    pub estimates: Vec<f64>,
    pub step_index: usize,
    rngs: Vec<ChaCha8Rng>,
}

/// Outcome of one simulation step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Per-vehicle gains over `[prediction, sorted neighbor estimates]`.
    pub gains: Vec<DVector<f64>>,
    /// Per-vehicle reported error-variance bound.
    pub bounds: Vec<f64>,
    /// Per-vehicle signed estimation error after the fusion.
    pub errors: Vec<f64>,
}

impl SimState {
    pub fn new(scenario: NetworkScenario, method: Method, tol: &Tolerances) -> Result<Self> {
        Self::with_run_index(scenario, method, 0, tol)
    }

    /// A distinct `run_index` replays the same bound schedule under an
    /// independent noise realization.
    pub fn with_run_index(
        scenario: NetworkScenario,
        method: Method,
        run_index: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        scenario.validate()?;
        tol.validate()?;
        let bounds = initial_bound_state(&scenario, method, tol)?;
        let mut rngs: Vec<ChaCha8Rng> = (0..scenario.vehicle_count)
            .map(|i| ChaCha8Rng::seed_from_u64(stream_seed(scenario.seed, run_index as u64, i as u64)))
            .collect();
        let truth = scenario.initial_truth.clone();
        let estimates: Vec<f64> = truth
            .iter()
            .zip(scenario.initial_bound.iter())
            .zip(rngs.iter_mut())
            .map(|((x, b), rng)| {
                let e: f64 = StandardNormal.sample(rng);
                x + e * b.sqrt()
            })
            .collect();
        Ok(Self {
            scenario,
            method,
            bounds,
            truth,
            estimates,
            step_index: 0,
            rngs,
        })
    }

    /// Current per-vehicle trackers (estimate plus neighborhood bound).
    /// Scalar-bound methods report their variance as a 1x1 neighborhood
    /// bound on the vehicle itself.
    pub fn trackers(&self, tol: &Tolerances) -> Result<Vec<VehicleTracker>> {
        (0..self.scenario.vehicle_count)
            .map(|i| {
                let (neighborhood, bound) = match &self.bounds {
                    BoundState::Joint(bs) => (self.scenario.neighborhood(i), bs[i].clone()),
                    BoundState::Scalar(ss) => (
                        vec![i],
                        PsdMatrix::definite(
                            SymMatrix::new(DMatrix::from_element(1, 1, ss[i]))?,
                            tol,
                        )?,
                    ),
                };
                Ok(VehicleTracker {
                    id: i,
                    estimate: self.estimates[i],
                    neighborhood,
                    bound,
                })
            })
            .collect()
    }

    /// Advances truth by the random walk, fuses every vehicle from the
    /// previous estimates (synchronous sweep), and updates the bounds.
    pub fn step(&mut self, tol: &Tolerances) -> Result<StepRecord> {
        if self.step_index >= self.scenario.steps {
            return Err(OciError::PreconditionViolated {
                reason: format!("horizon of {} steps exhausted", self.scenario.steps),
            });
        }
        let (gains, bounds) =
            fuse_all(&self.scenario, self.method, &mut self.bounds, self.step_index, tol)?;
        let errors = advance_truth_and_estimates(
            &self.scenario,
            &mut self.rngs,
            &mut self.truth,
            &mut self.estimates,
            &gains,
        );
        self.step_index += 1;
        Ok(StepRecord {
            gains,
            bounds,
            errors,
        })
    }
}

fn stream_seed(seed: u64, run: u64, vehicle: u64) -> u64 {
    let mut z = seed
        ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ vehicle.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw order per vehicle stream: the drift first, then the measurement
/// noises toward sorted neighbors. Streams are per vehicle, so the sweep
/// order cannot affect results.
fn advance_truth_and_estimates(
    scenario: &NetworkScenario,
    rngs: &mut [ChaCha8Rng],
    truth: &mut [f64],
    estimates: &mut [f64],
    gains: &[DVector<f64>],
) -> Vec<f64> {
    let v = scenario.vehicle_count;
    for i in 0..v {
        let d: f64 = StandardNormal.sample(&mut rngs[i]);
        truth[i] += d * scenario.drift_var[i].sqrt();
    }
    let old = estimates.to_vec();
    let mut errors = vec![0.0; v];
    for i in 0..v {
        let mut z = vec![old[i]];
        for &p in &scenario.neighbors(i) {
            let e: f64 = StandardNormal.sample(&mut rngs[i]);
            let y = truth[p] - truth[i] + e * scenario.edge_var(i, p).sqrt();
            z.push(old[p] - y);
        }
        let fused: f64 = gains[i].iter().zip(&z).map(|(g, zi)| g * zi).sum();
        estimates[i] = fused;
        errors[i] = fused - truth[i];
    }
    errors
}

// ---- full Monte Carlo runs ----

/// Time series produced by [`run`]: signed errors per run, the reported
/// bounds (shared across runs), violation counts, and error statistics.
#[derive(Debug, Clone)]
pub struct SimMetrics {
    pub runs: usize,
    pub steps: usize,
    pub vehicles: usize,
    pub violation_multiplier: f64,
    errors: Vec<f64>,
    bounds: Vec<f64>,
    violations: Vec<usize>,
}

impl SimMetrics {
    pub fn error(&self, run: usize, step: usize, vehicle: usize) -> f64 {
        self.errors[(run * self.steps + step) * self.vehicles + vehicle]
    }

    pub fn sq_error(&self, run: usize, step: usize, vehicle: usize) -> f64 {
        let e = self.error(run, step, vehicle);
        e * e
    }

    /// Reported error-variance bound; identical across runs.
    pub fn bound(&self, step: usize, vehicle: usize) -> f64 {
        self.bounds[step * self.vehicles + vehicle]
    }

    /// Count of runs whose squared error exceeded
    /// `violation_multiplier * bound` in this cell.
    pub fn violation_count(&self, step: usize, vehicle: usize) -> usize {
        self.violations[step * self.vehicles + vehicle]
    }

    /// Sample mean of the squared error across runs.
    pub fn mean_sq_error(&self, step: usize, vehicle: usize) -> f64 {
        (0..self.runs)
            .map(|r| self.sq_error(r, step, vehicle))
            .sum::<f64>()
            / self.runs as f64
    }

    pub fn rmse(&self, step: usize, vehicle: usize) -> f64 {
        self.mean_sq_error(step, vehicle).sqrt()
    }

    /// Mean reported bound over all steps and vehicles.
    pub fn time_avg_bound(&self) -> f64 {
        if self.bounds.is_empty() {
            return 0.0;
        }
        self.bounds.iter().sum::<f64>() / self.bounds.len() as f64
    }
}

/// Runs the scenario under the given method with the default violation
/// multiplier of one.
pub fn run(scenario: &NetworkScenario, method: Method, tol: &Tolerances) -> Result<SimMetrics> {
    run_with_multiplier(scenario, method, 1.0, tol)
}

/// The gain/bound schedule does not depend on noise realizations, so it is
/// computed once and replayed over `monte_carlo_runs` noise streams.
pub fn run_with_multiplier(
    scenario: &NetworkScenario,
    method: Method,
    violation_multiplier: f64,
    tol: &Tolerances,
) -> Result<SimMetrics> {
    scenario.validate()?;
    tol.validate()?;
    let v = scenario.vehicle_count;
    let steps = scenario.steps;

    let mut bound_state = initial_bound_state(scenario, method, tol)?;
    let mut schedule_gains: Vec<Vec<DVector<f64>>> = Vec::with_capacity(steps);
    let mut bounds = Vec::with_capacity(steps * v);
    for k in 0..steps {
        let (gains, reported) = fuse_all(scenario, method, &mut bound_state, k, tol)?;
        bounds.extend_from_slice(&reported);
        schedule_gains.push(gains);
    }

    let runs = scenario.monte_carlo_runs;
    let mut errors = vec![0.0; runs * steps * v];
    let mut violations = vec![0usize; steps * v];
    for run_idx in 0..runs {
        let mut rngs: Vec<ChaCha8Rng> = (0..v)
            .map(|i| {
                ChaCha8Rng::seed_from_u64(stream_seed(scenario.seed, run_idx as u64, i as u64))
            })
            .collect();
        let mut truth = scenario.initial_truth.clone();
        let mut estimates: Vec<f64> = truth
            .iter()
            .zip(scenario.initial_bound.iter())
            .zip(rngs.iter_mut())
            .map(|((x, b), rng)| {
                let e: f64 = StandardNormal.sample(rng);
                x + e * b.sqrt()
            })
            .collect();
        for k in 0..steps {
            let step_errors = advance_truth_and_estimates(
                scenario,
                &mut rngs,
                &mut truth,
                &mut estimates,
                &schedule_gains[k],
            );
            for (i, e) in step_errors.iter().enumerate() {
                errors[(run_idx * steps + k) * v + i] = *e;
                if e * e > violation_multiplier * bounds[k * v + i] {
                    violations[k * v + i] += 1;
                }
            }
        }
    }

    Ok(SimMetrics {
        runs,
        steps,
        vehicles: v,
        violation_multiplier,
        errors,
        bounds,
        violations,
    })
}
