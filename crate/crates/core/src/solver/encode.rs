//! Deterministic standard-form encoding of the Kahan-family fusion SDP.
//!
//! Decision variables, in fixed order: svec(U), svec(B) (trace objective
//! only), the Kahan weights, the projection-bound variable (svec(M) for a
//! trace regularizer, svec(N) with N = M^{-1} for a log-det regularizer),
//! then hypograph auxiliaries for any log-det terms. Cone blocks, in fixed
//! order: the weight simplex (one equality row, then nonnegativity), the
//! fused-bound LMI (trace objective only), the certificate LMI, the
//! projection LMI, then log-det hypograph blocks. The encoding is a pure
//! function of the problem data, so re-encoding the same problem yields an
//! identical program.

use nalgebra::DMatrix;

use super::conic::{svec_index, svec_len, ConeSpec, ConicProgram, LogDetAux, VariableLayout, SQRT2};
use super::{FusionProblem, Objective, ProjectionBoundRequest};
use crate::error::Result;
use crate::info::InverseBound;
use crate::linalg::Tolerances;

/// Writes one PSD block's svec rows: `s = rhs - A x` must reproduce the
/// affine matrix expression entry by entry.
struct LmiBlock<'a> {
    row_offset: usize,
    rhs: &'a mut [f64],
    entries: &'a mut Vec<(usize, usize, f64)>,
}

impl LmiBlock<'_> {
    fn row(&self, i: usize, j: usize) -> usize {
        self.row_offset + svec_index(i, j)
    }

    fn scale(i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            SQRT2
        }
    }

    /// Adds `value` to the constant part of entry `(i, j)`, `i <= j`.
    fn constant(&mut self, i: usize, j: usize, value: f64) {
        self.rhs[self.row(i, j)] += Self::scale(i, j) * value;
    }

    /// Declares that entry `(i, j)` contains `coeff * x[var]`.
    fn variable(&mut self, i: usize, j: usize, var: usize, coeff: f64) {
        if coeff != 0.0 {
            let row = self.row(i, j);
            self.entries.push((row, var, -Self::scale(i, j) * coeff));
        }
    }

    /// Places a symmetric svec variable group as `sign * S` on the block
    /// diagonal starting at `(at, at)`. Both the variable group and the
    /// block rows use the same scaled vectorization, so the map is the
    /// identity on svec entries and no extra scaling applies.
    fn sym_variable(&mut self, at: usize, side: usize, vars: std::ops::Range<usize>, sign: f64) {
        for j in 0..side {
            for i in 0..=j {
                let row = self.row(at + i, at + j);
                self.entries
                    .push((row, vars.start + svec_index(i, j), -sign));
            }
        }
    }

    /// Places a constant symmetric matrix at `(at, at)`.
    fn sym_constant(&mut self, at: usize, mat: &DMatrix<f64>) {
        for j in 0..mat.ncols() {
            for i in 0..=j {
                self.constant(at + i, at + j, mat[(i, j)]);
            }
        }
    }
}

/// Appends the hypograph of `log det` of an affine symmetric expression:
/// a PSD block `[[Z, L], [L^T, diag(L)]]` with `L` lower triangular plus
/// one exponential cone per `t_i <= log L_ii`. `sum(t)` then lower-bounds
/// `log det Z`, tight at the optimum.
struct LogDetPlan {
    aux: LogDetAux,
    side: usize,
}

fn encode_logdet_block(
    plan: &LogDetPlan,
    block_offset: usize,
    exp_offset: usize,
    rhs: &mut [f64],
    entries: &mut Vec<(usize, usize, f64)>,
    mut z_writer: impl FnMut(&mut LmiBlock<'_>),
) {
    let s = plan.side;
    let mut block = LmiBlock {
        row_offset: block_offset,
        rhs,
        entries,
    };
    // Top-left: the affine expression Z.
    z_writer(&mut block);
    // Top-right: factor entry L[i][j] (i >= j) lives at cell (i, s+j).
    for i in 0..s {
        for j in 0..=i {
            let var = plan.aux.factor.start + svec_index(j, i);
            block.variable(i, s + j, var, 1.0);
        }
    }
    // Bottom-right: diag(L).
    for i in 0..s {
        let var = plan.aux.factor.start + svec_index(i, i);
        block.variable(s + i, s + i, var, 1.0);
    }
    // Exponential cones: (t_i, 1, L_ii).
    for i in 0..s {
        let base = exp_offset + 3 * i;
        entries.push((base, plan.aux.hypo.start + i, -1.0));
        rhs[base + 1] = 1.0;
        let lvar = plan.aux.factor.start + svec_index(i, i);
        entries.push((base + 2, lvar, -1.0));
    }
}

/// Standard-form encoding of the fusion SDP (with optional projection
/// bound). Pure and deterministic: stable variable ordering, stable cone
/// ordering, no randomization.
pub fn encode_sdp(
    problem: &FusionProblem,
    objective: Objective,
    projection: Option<&ProjectionBoundRequest>,
    tol: &Tolerances,
) -> Result<ConicProgram> {
    let n = problem.state_dim();
    let m = problem.corr_dim();
    let num_bounds = problem.info().len();
    let ys: Vec<InverseBound> = problem.info().inverse_bounds(tol)?;
    // The optimal fused bound can be orders of magnitude larger than the
    // other block entries on nearly-infeasible instances, which wrecks the
    // interior-point conditioning. The bound at uniform weights is a
    // computable over-estimate of its scale, so the fused variable is
    // stored in those units and the identity coupling shrinks accordingly.
    let fused_scale = match objective {
        Objective::Trace => super::uniform_weight_bound_scale(problem, tol).unwrap_or(1.0),
        Objective::LogDet => 1.0,
    };

    // ---- variable layout ----
    let sn = svec_len(n);
    let mut cursor = 0usize;
    let u_range = cursor..cursor + sn;
    cursor += sn;
    let fused = match objective {
        Objective::Trace => {
            let r = cursor..cursor + sn;
            cursor += sn;
            Some(r)
        }
        Objective::LogDet => None,
    };
    let omega = cursor..cursor + num_bounds;
    cursor += num_bounds;
    let proj_range = projection.map(|req| {
        let sd = svec_len(req.selector.nrows());
        let r = cursor..cursor + sd;
        cursor += sd;
        r
    });
    let logdet_obj = match objective {
        Objective::LogDet => {
            let factor = cursor..cursor + sn;
            cursor += sn;
            let hypo = cursor..cursor + n;
            cursor += n;
            Some(LogDetAux { factor, hypo })
        }
        Objective::Trace => None,
    };
    let logdet_proj = match projection {
        Some(req) if req.kind == Objective::LogDet => {
            let d = req.selector.nrows();
            let factor = cursor..cursor + svec_len(d);
            cursor += svec_len(d);
            let hypo = cursor..cursor + d;
            cursor += d;
            Some(LogDetAux { factor, hypo })
        }
        _ => None,
    };
    let num_vars = cursor;

    // ---- cone layout ----
    let mut cones = vec![ConeSpec::Zero(1), ConeSpec::Nonneg(num_bounds)];
    if objective == Objective::Trace {
        cones.push(ConeSpec::PsdTriangle(2 * n));
    }
    cones.push(ConeSpec::PsdTriangle(n + m));
    if let Some(req) = projection {
        let d = req.selector.nrows();
        match req.kind {
            Objective::Trace => cones.push(ConeSpec::PsdTriangle(d + m)),
            Objective::LogDet => cones.push(ConeSpec::PsdTriangle(m)),
        }
    }
    if objective == Objective::LogDet {
        cones.push(ConeSpec::PsdTriangle(2 * n));
        cones.extend(std::iter::repeat(ConeSpec::Exp).take(n));
    }
    if let Some(req) = projection {
        if req.kind == Objective::LogDet {
            let d = req.selector.nrows();
            cones.push(ConeSpec::PsdTriangle(2 * d));
            cones.extend(std::iter::repeat(ConeSpec::Exp).take(d));
        }
    }
    let total_rows: usize = cones.iter().map(ConeSpec::rows).sum();
    let mut rhs = vec![0.0; total_rows];
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();

    // ---- objective ----
    let mut q = vec![0.0; num_vars];
    match objective {
        Objective::Trace => {
            let fused = fused.as_ref().expect("trace objective carries B");
            for i in 0..n {
                q[fused.start + svec_index(i, i)] = fused_scale;
            }
        }
        Objective::LogDet => {
            let aux = logdet_obj.as_ref().expect("log-det objective carries aux");
            for i in 0..n {
                q[aux.hypo.start + i] = -1.0;
            }
        }
    }
    if let Some(req) = projection {
        let d = req.selector.nrows();
        match req.kind {
            Objective::Trace => {
                let r = proj_range.as_ref().expect("projection carries M");
                for i in 0..d {
                    q[r.start + svec_index(i, i)] = req.gamma;
                }
            }
            Objective::LogDet => {
                let aux = logdet_proj.as_ref().expect("log-det projection aux");
                for i in 0..d {
                    q[aux.hypo.start + i] = -req.gamma;
                }
            }
        }
    }

    // ---- rows ----
    let mut row = 0usize;

    // Simplex: sum omega = 1, omega >= 0.
    rhs[row] = 1.0;
    for b in 0..num_bounds {
        entries.push((row, omega.start + b, 1.0));
    }
    row += 1;
    for b in 0..num_bounds {
        entries.push((row + b, omega.start + b, -1.0));
    }
    row += num_bounds;

    // Fused-bound LMI, written for the scaled variable Bt = B/s as
    // [Bt  I/sqrt(s); I/sqrt(s)  H'R^-1H - U], a congruence of the
    // original block.
    if let Some(fused) = &fused {
        let mut block = LmiBlock {
            row_offset: row,
            rhs: &mut rhs,
            entries: &mut entries,
        };
        block.sym_variable(0, n, fused.clone(), 1.0);
        let coupling = 1.0 / fused_scale.sqrt();
        for i in 0..n {
            block.constant(i, n + i, coupling);
        }
        block.sym_constant(n, problem.hrh());
        block.sym_variable(n, n, u_range.clone(), -1.0);
        row += svec_len(2 * n);
    }

    // Certificate LMI [U G; G' sum omega_b Y_b + C'R^-1C].
    {
        let g = problem.hrc();
        let mut block = LmiBlock {
            row_offset: row,
            rhs: &mut rhs,
            entries: &mut entries,
        };
        block.sym_variable(0, n, u_range.clone(), 1.0);
        for i in 0..n {
            for j in 0..m {
                block.constant(i, n + j, g[(i, j)]);
            }
        }
        block.sym_constant(n, problem.crc());
        for (b, y) in ys.iter().enumerate() {
            let ym = y.as_matrix();
            for j in 0..m {
                for i in 0..=j {
                    block.variable(n + i, n + j, omega.start + b, ym[(i, j)]);
                }
            }
        }
        row += svec_len(n + m);
    }

    // Projection LMI.
    if let Some(req) = projection {
        let d = req.selector.nrows();
        match req.kind {
            Objective::Trace => {
                // [M D; D' sum omega_b Y_b]
                let proj = proj_range.as_ref().expect("projection carries M");
                let mut block = LmiBlock {
                    row_offset: row,
                    rhs: &mut rhs,
                    entries: &mut entries,
                };
                block.sym_variable(0, d, proj.clone(), 1.0);
                for i in 0..d {
                    for j in 0..m {
                        block.constant(i, d + j, req.selector[(i, j)]);
                    }
                }
                for (b, y) in ys.iter().enumerate() {
                    let ym = y.as_matrix();
                    for j in 0..m {
                        for i in 0..=j {
                            block.variable(d + i, d + j, omega.start + b, ym[(i, j)]);
                        }
                    }
                }
                row += svec_len(d + m);
            }
            Objective::LogDet => {
                // sum omega_b Y_b - D' N D >= 0, with N = M^{-1}.
                let proj = proj_range.as_ref().expect("projection carries N");
                let mut block = LmiBlock {
                    row_offset: row,
                    rhs: &mut rhs,
                    entries: &mut entries,
                };
                for (b, y) in ys.iter().enumerate() {
                    let ym = y.as_matrix();
                    for j in 0..m {
                        for i in 0..=j {
                            block.variable(i, j, omega.start + b, ym[(i, j)]);
                        }
                    }
                }
                // Coefficient of svec(N) entry (p, q) is -D' E_pq D with
                // E_pq the scaled symmetric basis matrix.
                let dm = &req.selector;
                for q_i in 0..d {
                    for p_i in 0..=q_i {
                        let var = proj.start + svec_index(p_i, q_i);
                        let unit = if p_i == q_i { 1.0 } else { 1.0 / SQRT2 };
                        for j in 0..m {
                            for i in 0..=j {
                                let mut coeff = dm[(p_i, i)] * dm[(q_i, j)];
                                if p_i != q_i {
                                    coeff += dm[(q_i, i)] * dm[(p_i, j)];
                                }
                                block.variable(i, j, var, -unit * coeff);
                            }
                        }
                    }
                }
                row += svec_len(m);
            }
        }
    }

    // Log-det hypograph for the main objective: Z = H'R^-1H - U.
    if let Some(aux) = &logdet_obj {
        let plan = LogDetPlan {
            aux: aux.clone(),
            side: n,
        };
        let block_rows = svec_len(2 * n);
        let exp_offset = row + block_rows;
        let hrh = problem.hrh().clone();
        let u_range_c = u_range.clone();
        encode_logdet_block(
            &plan,
            row,
            exp_offset,
            &mut rhs,
            &mut entries,
            move |block| {
                block.sym_constant(0, &hrh);
                block.sym_variable(0, n, u_range_c.clone(), -1.0);
            },
        );
        row = exp_offset + 3 * n;
    }

    // Log-det hypograph for the projection regularizer: Z = N.
    if let Some(aux) = &logdet_proj {
        let req = projection.expect("aux implies projection");
        let d = req.selector.nrows();
        let plan = LogDetPlan {
            aux: aux.clone(),
            side: d,
        };
        let block_rows = svec_len(2 * d);
        let exp_offset = row + block_rows;
        let proj = proj_range.clone().expect("projection carries N");
        encode_logdet_block(
            &plan,
            row,
            exp_offset,
            &mut rhs,
            &mut entries,
            move |block| {
                block.sym_variable(0, d, proj.clone(), 1.0);
            },
        );
        row = exp_offset + 3 * d;
    }

    debug_assert_eq!(row, total_rows);
    entries.sort_by_key(|&(r, c, _)| (c, r));

    Ok(ConicProgram {
        num_vars,
        objective: q,
        cones,
        entries,
        rhs,
        layout: VariableLayout {
            state_dim: n,
            corr_dim: m,
            u: u_range,
            fused,
            fused_scale,
            omega,
            projection: proj_range,
            logdet_obj,
            logdet_proj,
        },
    })
}
