//! Augmented-Lagrangian solvers for `min Σ f_j(u_j)  s.t.  Σ A_j u_j = c`.
//!
//! * [`admm_solve`]: Gauss–Seidel block minimization by fixed-step gradient
//!   descent, multiplier update `w += ρ r`, then `ρ *= β` with `β > 1`.
//! * [`alm_solve`]: the same outer loop with a joint minimization over all
//!   blocks.
//! * [`penalty_solve`]: one unconstrained minimization of the quadratic
//!   penalty, no multiplier.

use crate::error::{Error, Result};
use crate::model::{ConstraintSystem, DislocationState, GbModel};
use crate::numkit::{fd_hessian_2x2, norm2, sym_eig_max_2x2_entries, sym_eig_min_2x2_entries, Matrix};

/// Block-separable objective coupled by linear constraints.
pub trait ConstrainedModel {
    fn constraints(&self) -> &ConstraintSystem;
    fn block_value(&self, j: usize, u: [f64; 2]) -> f64;
    fn block_gradient(&self, j: usize, u: [f64; 2]) -> [f64; 2];

    /// Symmetrized FD Hessian of block `j`.
    fn block_hessian(&self, j: usize, u: [f64; 2]) -> Matrix {
        let h = 1e-5 * norm2(&u).max(1.0);
        fd_hessian_2x2(|v| self.block_gradient(j, v), u, h).0
    }

    fn num_blocks(&self) -> usize {
        self.constraints().num_blocks()
    }

    fn objective(&self, s: &DislocationState) -> f64 {
        (0..self.num_blocks()).map(|j| self.block_value(j, s.block(j))).sum()
    }
}

impl ConstrainedModel for GbModel {
    fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    fn block_value(&self, j: usize, u: [f64; 2]) -> f64 {
        self.block_energy(j, u)
    }

    fn block_gradient(&self, j: usize, u: [f64; 2]) -> [f64; 2] {
        GbModel::block_gradient(self, j, u)
    }
}

/// Surrogate with `f_j(u) = ‖u - v_j‖²`, useful for exercising the solvers
/// on problems with known minimizers.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub targets: Vec<[f64; 2]>,
    pub constraints: ConstraintSystem,
}

impl ConstrainedModel for QuadraticModel {
    fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    fn block_value(&self, j: usize, u: [f64; 2]) -> f64 {
        let v = self.targets[j];
        (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)
    }

    fn block_gradient(&self, j: usize, u: [f64; 2]) -> [f64; 2] {
        let v = self.targets[j];
        [2.0 * (u[0] - v[0]), 2.0 * (u[1] - v[1])]
    }

    fn block_hessian(&self, _j: usize, _u: [f64; 2]) -> Matrix {
        Matrix::identity(2).scale(2.0)
    }
}

/// Lagrange multiplier for the six constraint rows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MultiplierState(pub [f64; 6]);

impl MultiplierState {
    pub fn zeros() -> Self {
        Self([0.0; 6])
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugLagParams {
    pub rho0: f64,
    pub beta: f64,
    /// Fixed gradient-descent step.
    pub alpha: f64,
    /// Stop an inner minimization once its gradient norm is at most this.
    pub tol_inner: f64,
    /// Outer stopping tolerance on both the residual norm and `‖Δu‖`.
    pub tol_outer: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Consecutive outer iterations with an inner failure before giving up.
    pub inner_failure_patience: usize,
    /// Keep every iterate in the trace (needed by [`monotonicity_audit`]).
    pub store_iterates: bool,
}

impl Default for AugLagParams {
    fn default() -> Self {
        Self {
            rho0: 100.0,
            beta: 1.001,
            alpha: 5e-4,
            tol_inner: 1e-8,
            tol_outer: 1e-6,
            max_outer: 100_000,
            max_inner: 1_000_000,
            inner_failure_patience: 10,
            store_iterates: false,
        }
    }
}

impl AugLagParams {
    /// ALM settings: constant penalty `ρ = 100`.
    pub fn alm_default() -> Self {
        Self {
            beta: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.rho0, self.beta, self.alpha, self.tol_inner, self.tol_outer];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("solver parameters"));
        }
        if self.rho0 <= 0.0 {
            return Err(Error::invalid("rho0", "must be positive"));
        }
        if self.beta < 1.0 {
            return Err(Error::invalid("beta", "must be at least 1"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if self.tol_inner <= 0.0 || self.tol_outer <= 0.0 {
            return Err(Error::invalid("tol", "tolerances must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::invalid("max_outer", "iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    InnerFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iter",
            Termination::InnerFailure => "inner_failure",
        }
    }
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `Σ f_j` after the iteration.
    pub objective: f64,
    pub residual_norm: f64,
    pub u_norm: f64,
    pub w_norm: f64,
    /// Penalty used during the iteration.
    pub rho: f64,
    /// `‖u^(k+1) - u^(k)‖`.
    pub step_norm: f64,
    /// `‖w^(k+1) - w^(k)‖`.
    pub multiplier_step_norm: f64,
    /// Gradient steps taken by the inner minimizations.
    pub inner_steps: usize,
    /// Inner minimizations that hit `max_inner`.
    pub inner_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub u: DislocationState,
    pub w: MultiplierState,
    /// Penalty to be used by the next iteration.
    pub rho: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    /// `iterates[k]` is the state entering iteration `k`; present only when
    /// iterate storage was requested.
    pub iterates: Option<Vec<Iterate>>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_inner_steps(&self) -> usize {
        self.records.iter().map(|r| r.inner_steps).sum()
    }

    /// Number of sign changes between consecutive objective increments.
    pub fn objective_sign_changes(&self) -> usize {
        let d: Vec<f64> = self
            .records
            .windows(2)
            .map(|w| w[1].objective - w[0].objective)
            .collect();
        d.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: DislocationState,
    pub multiplier: MultiplierState,
    pub trace: SolverTrace,
    pub termination: Termination,
    /// Inner-loop exit gradient norm of each block in the last sweep
    /// (ADMM), or the joint exit gradient norm (ALM, penalty).
    pub final_inner_grad_norms: Vec<f64>,
    /// `‖∇_u Σ f_j‖` at the final state, reported as a diagnostic.
    pub objective_grad_norm: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn residual_norm(&self) -> f64 {
        self.trace.records.last().map_or(f64::NAN, |r| r.residual_norm)
    }
}

/// Outcome of one inner gradient-descent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOutcome {
    pub steps: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

fn residual_of<M: ConstrainedModel + ?Sized>(model: &M, u: &DislocationState) -> Result<[f64; 6]> {
    crate::model::residual(u, model.constraints())
}

fn check_dims<M: ConstrainedModel + ?Sized>(model: &M, u: &DislocationState) -> Result<()> {
    if u.blocks() != model.num_blocks() {
        return Err(Error::dims(format!("{} blocks", model.num_blocks()), u.blocks()));
    }
    Ok(())
}

/// `Σ f_j + wᵀr + (ρ/2)‖r‖²` with `r = Σ A_j u_j - c`.
pub fn auglag_eval<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &DislocationState,
    w: &MultiplierState,
    rho: f64,
) -> Result<f64> {
    let r = residual_of(model, u)?;
    let wr: f64 = w.0.iter().zip(&r).map(|(a, b)| a * b).sum();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    Ok(model.objective(u) + wr + 0.5 * rho * rr)
}

fn block_grad_with_residual<M: ConstrainedModel + ?Sized>(
    model: &M,
    uj: [f64; 2],
    r: &[f64; 6],
    w: &MultiplierState,
    rho: f64,
    j: usize,
) -> [f64; 2] {
    let g = model.block_gradient(j, uj);
    let mut v = [0.0; 6];
    for i in 0..6 {
        v[i] = w.0[i] + rho * r[i];
    }
    let a = model.constraints().block_transpose_apply(j, &v);
    [g[0] + a[0], g[1] + a[1]]
}

/// `∇_{u_j} L = ∇f_j(u_j) + A_jᵀ(w + ρ r)`.
pub fn block_grad<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &DislocationState,
    w: &MultiplierState,
    rho: f64,
    j: usize,
) -> Result<[f64; 2]> {
    check_dims(model, u)?;
    if j >= model.num_blocks() {
        return Err(Error::invalid("j", format!("block {j} out of range")));
    }
    let r = residual_of(model, u)?;
    Ok(block_grad_with_residual(model, u.block(j), &r, w, rho, j))
}

/// Gradient descent on block `j` of the augmented Lagrangian, keeping `r`
/// in sync with the block update.
fn descend_block<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &mut DislocationState,
    r: &mut [f64; 6],
    w: &MultiplierState,
    rho: f64,
    j: usize,
    params: &AugLagParams,
) -> InnerOutcome {
    let cs = model.constraints();
    let mut uj = u.block(j);
    let mut steps = 0;
    loop {
        let g = block_grad_with_residual(model, uj, r, w, rho, j);
        let gn = g[0].hypot(g[1]);
        if gn <= params.tol_inner || !gn.is_finite() || steps >= params.max_inner {
            u.set_block(j, uj);
            return InnerOutcome {
                steps,
                grad_norm: gn,
                converged: gn <= params.tol_inner,
            };
        }
        let delta = [-params.alpha * g[0], -params.alpha * g[1]];
        uj = [uj[0] + delta[0], uj[1] + delta[1]];
        cs.add_block_product(j, delta, r);
        steps += 1;
    }
}

/// Minimizes the augmented Lagrangian over block `j` in place by fixed-step
/// gradient descent.
pub fn minimize_block<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &mut DislocationState,
    w: &MultiplierState,
    rho: f64,
    j: usize,
    params: &AugLagParams,
) -> Result<InnerOutcome> {
    check_dims(model, u)?;
    if j >= model.num_blocks() {
        return Err(Error::invalid("j", format!("block {j} out of range")));
    }
    let mut r = residual_of(model, u)?;
    Ok(descend_block(model, u, &mut r, w, rho, j, params))
}

/// Full gradient of `L` with respect to all blocks; returns its norm.
fn joint_gradient<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &DislocationState,
    r: &[f64; 6],
    w: &MultiplierState,
    rho: f64,
    out: &mut [f64],
) -> f64 {
    for j in 0..model.num_blocks() {
        let g = block_grad_with_residual(model, u.block(j), r, w, rho, j);
        out[2 * j] = g[0];
        out[2 * j + 1] = g[1];
    }
    norm2(out)
}

fn descend_joint<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: &mut DislocationState,
    w: &MultiplierState,
    rho: f64,
    params: &AugLagParams,
    max_steps: usize,
) -> Result<InnerOutcome> {
    let mut g = vec![0.0; u.as_slice().len()];
    let mut steps = 0;
    loop {
        let r = residual_of(model, u)?;
        let gn = joint_gradient(model, u, &r, w, rho, &mut g);
        if gn <= params.tol_inner || !gn.is_finite() || steps >= max_steps {
            return Ok(InnerOutcome {
                steps,
                grad_norm: gn,
                converged: gn <= params.tol_inner,
            });
        }
        for (x, gi) in u.as_mut_slice().iter_mut().zip(&g) {
            *x -= params.alpha * gi;
        }
        steps += 1;
    }
}

fn objective_grad_norm<M: ConstrainedModel + ?Sized>(model: &M, u: &DislocationState) -> f64 {
    (0..model.num_blocks())
        .map(|j| {
            let g = model.block_gradient(j, u.block(j));
            g[0] * g[0] + g[1] * g[1]
        })
        .sum::<f64>()
        .sqrt()
}

fn step_norm(a: &DislocationState, b: &DislocationState) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy)]
enum InnerMode {
    GaussSeidel,
    Joint,
}

fn outer_loop<M: ConstrainedModel + ?Sized>(
    model: &M,
    params: &AugLagParams,
    u0: DislocationState,
    w0: MultiplierState,
    mode: InnerMode,
) -> Result<SolveResult> {
    params.validate()?;
    check_dims(model, &u0)?;
    if !u0.is_finite() || w0.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("initial point"));
    }
    let nblocks = model.num_blocks();
    let mut u = u0;
    let mut w = w0;
    let mut rho = params.rho0;
    let mut trace = SolverTrace {
        records: Vec::new(),
        iterates: params.store_iterates.then(Vec::new),
    };
    let mut failure_streak = 0;
    let mut exit_norms = vec![f64::NAN; nblocks];

    for k in 0..params.max_outer {
        if let Some(its) = trace.iterates.as_mut() {
            its.push(Iterate { u: u.clone(), w, rho });
        }
        let u_prev = u.clone();
        let mut inner_steps = 0;
        let mut inner_failures = 0;
        match mode {
            InnerMode::GaussSeidel => {
                let mut r = residual_of(model, &u)?;
                for (j, exit) in exit_norms.iter_mut().enumerate() {
                    let out = descend_block(model, &mut u, &mut r, &w, rho, j, params);
                    inner_steps += out.steps;
                    inner_failures += usize::from(!out.converged);
                    *exit = out.grad_norm;
                }
            }
            InnerMode::Joint => {
                let out = descend_joint(model, &mut u, &w, rho, params, params.max_inner)?;
                inner_steps += out.steps;
                inner_failures += usize::from(!out.converged);
                exit_norms = vec![out.grad_norm];
            }
        }
        let r = residual_of(model, &u)?;
        let w_prev = w;
        for i in 0..6 {
            w.0[i] += rho * r[i];
        }
        let residual_norm = norm2(&r);
        let du = step_norm(&u, &u_prev);
        let dw = norm2(&std::array::from_fn::<f64, 6, _>(|i| w.0[i] - w_prev.0[i]));
        let record = TraceRecord {
            k,
            objective: model.objective(&u),
            residual_norm,
            u_norm: u.norm(),
            w_norm: w.norm(),
            rho,
            step_norm: du,
            multiplier_step_norm: dw,
            inner_steps,
            inner_failures,
        };
        let finite = record.objective.is_finite() && u.is_finite() && w.norm().is_finite();
        trace.records.push(record);
        if !finite {
            return Err(Error::Diverged {
                iteration: k,
                trace: Box::new(trace),
            });
        }
        rho *= params.beta;
        failure_streak = if inner_failures > 0 { failure_streak + 1 } else { 0 };

        let done = residual_norm <= params.tol_outer && du <= params.tol_outer;
        let stalled = failure_streak >= params.inner_failure_patience.max(1);
        if done || stalled {
            if let Some(its) = trace.iterates.as_mut() {
                its.push(Iterate { u: u.clone(), w, rho });
            }
            let termination = if done { Termination::Converged } else { Termination::InnerFailure };
            return Ok(finish(model, u, w, trace, termination, exit_norms));
        }
    }
    if let Some(its) = trace.iterates.as_mut() {
        its.push(Iterate { u: u.clone(), w, rho });
    }
    Ok(finish(model, u, w, trace, Termination::MaxIterations, exit_norms))
}

fn finish<M: ConstrainedModel + ?Sized>(
    model: &M,
    u: DislocationState,
    w: MultiplierState,
    trace: SolverTrace,
    termination: Termination,
    final_inner_grad_norms: Vec<f64>,
) -> SolveResult {
    let objective_grad_norm = objective_grad_norm(model, &u);
    SolveResult {
        state: u,
        multiplier: w,
        trace,
        termination,
        final_inner_grad_norms,
        objective_grad_norm,
    }
}

/// Multi-block ADMM with geometrically increasing penalty (`β > 1`).
pub fn admm_solve<M: ConstrainedModel + ?Sized>(
    model: &M,
    params: &AugLagParams,
    u0: DislocationState,
    w0: MultiplierState,
) -> Result<SolveResult> {
    if !(params.beta > 1.0) {
        return Err(Error::invalid("beta", "ADMM with increasing penalty needs beta > 1"));
    }
    outer_loop(model, params, u0, w0, InnerMode::GaussSeidel)
}

/// Augmented Lagrangian method: joint gradient descent over all blocks per
/// multiplier update.
pub fn alm_solve<M: ConstrainedModel + ?Sized>(
    model: &M,
    params: &AugLagParams,
    u0: DislocationState,
    w0: MultiplierState,
) -> Result<SolveResult> {
    outer_loop(model, params, u0, w0, InnerMode::Joint)
}

/// Penalty-method settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub rho: f64,
    pub alpha: f64,
    pub tol_grad: f64,
    pub max_steps: usize,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            rho: 800.0,
            alpha: 5e-4,
            tol_grad: 1e-8,
            max_steps: 10_000_000,
        }
    }
}

/// Minimizes `Σ f_j + (ρ/2)‖r‖²` by fixed-step gradient descent. Every
/// gradient step is one trace record.
pub fn penalty_solve<M: ConstrainedModel + ?Sized>(
    model: &M,
    params: &PenaltyParams,
    u0: DislocationState,
) -> Result<SolveResult> {
    if !(params.rho > 0.0 && params.rho.is_finite()) {
        return Err(Error::invalid("rho", "must be positive"));
    }
    if !(params.alpha > 0.0) || !(params.tol_grad > 0.0) || params.max_steps == 0 {
        return Err(Error::invalid("alpha", "step, tolerance and step cap must be positive"));
    }
    check_dims(model, &u0)?;
    let w = MultiplierState::zeros();
    let mut u = u0;
    let mut g = vec![0.0; u.as_slice().len()];
    let mut trace = SolverTrace::default();
    let mut r = residual_of(model, &u)?;
    let mut gn = joint_gradient(model, &u, &r, &w, params.rho, &mut g);
    let mut k = 0;
    while gn > params.tol_grad && k < params.max_steps {
        let prev = u.clone();
        for (x, gi) in u.as_mut_slice().iter_mut().zip(&g) {
            *x -= params.alpha * gi;
        }
        r = residual_of(model, &u)?;
        let record = TraceRecord {
            k,
            objective: model.objective(&u),
            residual_norm: norm2(&r),
            u_norm: u.norm(),
            w_norm: 0.0,
            rho: params.rho,
            step_norm: step_norm(&u, &prev),
            multiplier_step_norm: 0.0,
            inner_steps: 1,
            inner_failures: 0,
        };
        trace.records.push(record);
        if !record.objective.is_finite() || !u.is_finite() {
            return Err(Error::Diverged {
                iteration: k,
                trace: Box::new(trace),
            });
        }
        gn = joint_gradient(model, &u, &r, &w, params.rho, &mut g);
        k += 1;
    }
    let termination = if gn <= params.tol_grad {
        Termination::Converged
    } else {
        Termination::MaxIterations
    };
    Ok(finish(model, u, w, trace, termination, vec![gn]))
}

/// Result of [`monotonicity_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// `2(β+1)·max‖Δw‖²/4`.
    pub delta_hat: f64,
    /// Largest sampled spectral norm of a block Hessian.
    pub hessian_bound: f64,
    /// First iteration with `ρ b²/2 - Ĉ ≥ 1`, if reached.
    pub threshold_k: Option<usize>,
    pub checked_past_threshold: usize,
    pub violations_past_threshold: usize,
    /// The same inequality checked at every recorded iteration.
    pub violations_all: usize,
    /// Partial sums of `‖Δu‖²`.
    pub step_sq_partial_sums: Vec<f64>,
    /// `Σ ‖Δu‖²` over the last 10% of iterations.
    pub tail_step_sq_sum: f64,
    pub max_multiplier_step_sq: f64,
    pub max_w_norm: f64,
    /// Whether `max‖Δw‖² ≤ 4 (max‖w‖)²` holds.
    pub multiplier_step_bounded: bool,
    /// Smallest `λ_min(∇²f_j) + ρ^(k) b²` seen at the sampled iterates past the
    /// threshold (positive means every block subproblem was strictly convex).
    pub min_block_curvature_past_threshold: Option<f64>,
}

/// Checks the sufficient-decrease inequality
/// `L^(k) - L^(k+1) ≥ ‖u^(k+1) - u^(k)‖² - δ̂/ρ^(k)` along a stored ADMM trace,
/// where `L^(k) = L_{ρ^(k)}(u^(k), w^(k))`.
pub fn monotonicity_audit<M: ConstrainedModel + ?Sized>(
    trace: &SolverTrace,
    model: &M,
    beta: f64,
) -> Result<AuditReport> {
    let its = trace
        .iterates
        .as_ref()
        .ok_or_else(|| Error::invalid("trace", "iterates were not stored (enable auditing)"))?;
    let n = trace.records.len();
    if its.len() != n + 1 {
        return Err(Error::dims(format!("{} iterates", n + 1), its.len()));
    }
    let b2 = model.constraints().min_block_gram();
    let max_dw2 = trace
        .records
        .iter()
        .map(|r| r.multiplier_step_norm.powi(2))
        .fold(0.0, f64::max);
    let delta_hat = 2.0 * (beta + 1.0) * max_dw2 / 4.0;

    let mut hessian_bound: f64 = 0.0;
    let mut min_eigs = Vec::with_capacity(its.len());
    for it in its {
        let mut lmin = f64::INFINITY;
        for j in 0..model.num_blocks() {
            let h = model.block_hessian(j, it.u.block(j));
            let (a, b, d) = (h[(0, 0)], h[(0, 1)], h[(1, 1)]);
            let lo = sym_eig_min_2x2_entries(a, b, d);
            let hi = sym_eig_max_2x2_entries(a, b, d);
            hessian_bound = hessian_bound.max(lo.abs()).max(hi.abs());
            lmin = lmin.min(lo);
        }
        min_eigs.push(lmin);
    }
    let threshold_k = trace
        .records
        .iter()
        .position(|r| r.rho * b2 / 2.0 - hessian_bound >= 1.0);

    let lag: Vec<f64> = its
        .iter()
        .map(|it| auglag_eval(model, &it.u, &it.w, it.rho))
        .collect::<Result<_>>()?;
    let mut violations_all = 0;
    let mut violations_past = 0;
    let mut checked_past = 0;
    let mut partial = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (k, rec) in trace.records.iter().enumerate() {
        let du2 = rec.step_norm.powi(2);
        acc += du2;
        partial.push(acc);
        let ok = lag[k] - lag[k + 1] >= du2 - delta_hat / rec.rho;
        violations_all += usize::from(!ok);
        if threshold_k.is_some_and(|t| k >= t) {
            checked_past += 1;
            violations_past += usize::from(!ok);
        }
    }
    let tail_start = n - n / 10;
    let tail = trace.records[tail_start..]
        .iter()
        .map(|r| r.step_norm.powi(2))
        .sum();
    let max_w = its.iter().map(|it| it.w.norm()).fold(0.0, f64::max);
    let min_curv = threshold_k.map(|t| {
        (t..n)
            .map(|k| min_eigs[k] + trace.records[k].rho * b2)
            .fold(f64::INFINITY, f64::min)
    });
    Ok(AuditReport {
        delta_hat,
        hessian_bound,
        threshold_k,
        checked_past_threshold: checked_past,
        violations_past_threshold: violations_past,
        violations_all,
        step_sq_partial_sums: partial,
        tail_step_sq_sum: tail,
        max_multiplier_step_sq: max_dw2,
        max_w_norm: max_w,
        multiplier_step_bounded: max_dw2 <= 4.0 * max_w * max_w,
        min_block_curvature_past_threshold: min_curv,
    })
}
