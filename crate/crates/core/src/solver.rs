//! Block coordinate descent over `W`, `T` and `(U, B)`.
//!
//! Each outer iteration solves the two least-squares problems in `W` and `T`
//! exactly, then runs a few accelerated projected-gradient steps on `(U, B)`.
//! The loop stops when `e(i) - e(i+1) <= rel_decrease_tol * e(i)` (plus a
//! rounding-level absolute floor), when the wall-clock budget would be
//! exceeded by another iteration, or after `max_outer_iters` iterations.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Tolerances};
use crate::param::{self, ParamState, ReducedData};
use crate::pencil::{self, AdmissibilityReport, MatrixPair};
use crate::Matrix;

/// Run controls for [`bcd_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    pub time_limit_seconds: f64,
    pub rel_decrease_tol: f64,
    pub inner_fgm_steps: usize,
    /// Ridge added to singular normal equations; `None` means `1e-12 * n`.
    pub ridge: Option<f64>,
    pub momentum_restart: bool,
    pub tolerances: Tolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 1_000_000,
            time_limit_seconds: 60.0,
            rel_decrease_tol: 1e-8,
            inner_fgm_steps: 20,
            ridge: None,
            momentum_restart: true,
            tolerances: Tolerances::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be positive".into());
        }
        if self.time_limit_seconds.is_nan() || self.time_limit_seconds <= 0.0 {
            return bad(format!(
                "time_limit_seconds must be positive, got {}",
                self.time_limit_seconds
            ));
        }
        if !(self.rel_decrease_tol > 0.0 && self.rel_decrease_tol < 1.0) {
            return bad(format!(
                "rel_decrease_tol must lie in (0, 1), got {}",
                self.rel_decrease_tol
            ));
        }
        if self.inner_fgm_steps == 0 {
            return bad("inner_fgm_steps must be positive".into());
        }
        if let Some(r) = self.ridge {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("ridge must be positive, got {r}"));
            }
        }
        self.tolerances.validate()
    }

    fn ridge_for(&self, n: usize) -> f64 {
        self.ridge.unwrap_or(1e-12 * n.max(1) as f64)
    }
}

/// One row of the error history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iter: usize,
    /// `e(i)`: objective after the full iteration.
    pub error: f64,
    pub elapsed_s: f64,
    pub err_after_w: f64,
    pub err_after_t: f64,
    pub err_after_ub: f64,
    /// A least-squares update needed the ridge fallback.
    pub ridge_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    TimeLimit,
    IterLimit,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::TimeLimit => "time_limit",
            Termination::IterLimit => "iter_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub state: ParamState,
    pub pair: MatrixPair,
    pub error: f64,
    pub delta_e: Matrix,
    pub delta_a: Matrix,
    /// Row 0 is the post-initialization objective `e(0)`.
    pub trace: Vec<IterationTrace>,
    pub termination: Termination,
    pub iterations: usize,
    pub elapsed_s: f64,
    pub report: AdmissibilityReport,
    pub warnings: Vec<String>,
}

/// Solves `X G = H` for symmetric PSD `G`, adding `ridge * I` (growing by
/// tenfold) when `G` is numerically singular. Returns whether a ridge was used.
fn solve_spd_right(g: &Matrix, h: &Matrix, ridge: f64) -> (Matrix, bool) {
    let singular = |c: &Cholesky<f64, Dyn>| {
        let d = c.l_dirty().diagonal();
        let (lo, hi) = (d.min(), d.max());
        lo * lo <= ridge * (1.0 + hi * hi)
    };
    if let Some(c) = Cholesky::new(g.clone()) {
        if !singular(&c) {
            return (c.solve(&h.transpose()).transpose(), false);
        }
    }
    let n = g.nrows();
    let mut lambda = ridge;
    loop {
        let shifted = g + DMatrix::<f64>::identity(n, n) * lambda;
        if let Some(c) = Cholesky::new(shifted) {
            return (c.solve(&h.transpose()).transpose(), true);
        }
        lambda *= 10.0;
    }
}

/// `diag(UB, I_{n-r}) T`
fn middle_times_t(state: &ParamState) -> Matrix {
    let r = state.r();
    let mut m = state.t.clone();
    let top = &state.u * &state.b * state.t.rows(0, r);
    m.rows_mut(0, r).copy_from(&top);
    m
}

/// `W diag(UB, I_{n-r})`
fn w_times_middle(state: &ParamState) -> Matrix {
    let r = state.r();
    let mut m = state.w.clone();
    let left = state.w.columns(0, r) * (&state.u * &state.b);
    m.columns_mut(0, r).copy_from(&left);
    m
}

fn w_step(state: &ParamState, target: &MatrixPair, ridge: f64) -> (ParamState, bool) {
    let (n, r) = (state.n(), state.r());
    let mut m_e = DMatrix::zeros(n, n);
    m_e.rows_mut(0, r).copy_from(&state.t.rows(0, r));
    let m_a = middle_times_t(state);
    let g = &m_e * m_e.transpose() + &m_a * m_a.transpose();
    let h = target.e() * m_e.transpose() + target.a() * m_a.transpose();
    let (w, used) = solve_spd_right(&g, &h, ridge);
    let mut next = state.clone();
    next.w = w;
    (next, used)
}

fn t_step(state: &ParamState, target: &MatrixPair, ridge: f64) -> (ParamState, bool) {
    let (n, r) = (state.n(), state.r());
    let mut n_e = DMatrix::zeros(n, n);
    n_e.columns_mut(0, r).copy_from(&state.w.columns(0, r));
    let n_a = w_times_middle(state);
    let k = n_e.transpose() * &n_e + n_a.transpose() * &n_a;
    let rhs = n_e.transpose() * target.e() + n_a.transpose() * target.a();
    // K T = rhs  <=>  T^T K = rhs^T
    let (t_t, used) = solve_spd_right(&k, &rhs.transpose(), ridge);
    let mut next = state.clone();
    next.t = t_t.transpose();
    (next, used)
}

/// Keeps the update unless it increased the objective, which happens when the
/// ridge perturbed the normal equations or through rounding at a fixed point.
fn guarded(
    before: &ParamState,
    before_err: f64,
    (after, ridge_used): (ParamState, bool),
    target: &MatrixPair,
) -> (ParamState, f64, bool) {
    let err = param::objective_unchecked(&after, target);
    if err.is_nan() || err > before_err {
        (before.clone(), before_err, ridge_used)
    } else {
        (after, err, ridge_used)
    }
}

fn check_inputs(state: &ParamState, target: &MatrixPair) -> Result<()> {
    if state.n() != target.n() {
        return Err(Error::Dimension(format!(
            "state has n = {} but target pair has n = {}",
            state.n(),
            target.n()
        )));
    }
    Ok(())
}

/// Replaces `W` by the least-squares minimizer of the objective for fixed
/// `T`, `U`, `B`: `W G = H` with `G = M_E M_E^T + M_A M_A^T`,
/// `H = E M_E^T + A M_A^T`, `M_E = diag(I_r, 0) T`, `M_A = diag(UB, I) T`.
pub fn update_w(state: &ParamState, target: &MatrixPair, cfg: &SolverConfig) -> Result<ParamState> {
    check_inputs(state, target)?;
    let before = param::objective_unchecked(state, target);
    let step = w_step(state, target, cfg.ridge_for(state.n()));
    Ok(guarded(state, before, step, target).0)
}

/// Column-wise mirror of [`update_w`]: `(N_E^T N_E + N_A^T N_A) T =
/// N_E^T E + N_A^T A` with `N_E = W diag(I_r, 0)`, `N_A = W diag(UB, I)`.
pub fn update_t(state: &ParamState, target: &MatrixPair, cfg: &SolverConfig) -> Result<ParamState> {
    check_inputs(state, target)?;
    let before = param::objective_unchecked(state, target);
    let step = t_step(state, target, cfg.ridge_for(state.n()));
    Ok(guarded(state, before, step, target).0)
}

/// Quantities of `g(U, B) = |R - P U B Q|_F^2` that stay fixed while `W`
/// and `T` are frozen.
struct UbProblem<'a> {
    data: &'a ReducedData,
    /// `P^T P`
    ptp: Matrix,
    /// `Q Q^T`
    qqt: Matrix,
    /// `P^T R Q^T`
    ptrqt: Matrix,
    ptp_norm: f64,
    qqt_norm: f64,
}

impl<'a> UbProblem<'a> {
    fn new(data: &'a ReducedData) -> Self {
        let ptp = data.p.transpose() * &data.p;
        let qqt = &data.q * data.q.transpose();
        let ptrqt = data.p.transpose() * &data.r * data.q.transpose();
        let ptp_norm = numerics::spectral_norm(&ptp);
        let qqt_norm = numerics::spectral_norm(&qqt);
        Self {
            data,
            ptp,
            qqt,
            ptrqt,
            ptp_norm,
            qqt_norm,
        }
    }

    fn value(&self, u: &Matrix, b: &Matrix) -> f64 {
        let resid = &self.data.r - &self.data.p * (u * b) * &self.data.q;
        numerics::frobenius_sq(&resid)
    }

    /// Gradient of `g` with respect to the product `M = UB`:
    /// `-2 P^T (R - P M Q) Q^T`.
    fn grad_product(&self, u: &Matrix, b: &Matrix) -> Matrix {
        let m = u * b;
        (&self.ptp * m * &self.qqt - &self.ptrqt) * 2.0
    }

    fn grad_u(&self, u: &Matrix, b: &Matrix) -> Matrix {
        self.grad_product(u, b) * b.transpose()
    }

    fn grad_b(&self, u: &Matrix, b: &Matrix) -> Matrix {
        u.transpose() * self.grad_product(u, b)
    }

    fn lipschitz_u(&self, b: &Matrix) -> f64 {
        2.0 * self.ptp_norm * numerics::spectral_norm(&(b * &self.qqt * b.transpose()))
    }

    fn lipschitz_b(&self) -> f64 {
        2.0 * self.ptp_norm * self.qqt_norm
    }
}

/// Gradients `(G_U, G_B)` of `|R - P U B Q|_F^2` at the current `(U, B)`:
/// `G_U = -2 P^T (R - PUBQ) Q^T B^T`, `G_B = -2 U^T P^T (R - PUBQ) Q^T`.
pub fn gradient_ub(state: &ParamState, target: &MatrixPair) -> Result<(Matrix, Matrix)> {
    let data = param::reduced_data(state, target)?;
    let prob = UbProblem::new(&data);
    Ok((
        prob.grad_u(&state.u, &state.b),
        prob.grad_b(&state.u, &state.b),
    ))
}

/// Accelerated projected gradient on `(U, B)` with `W`, `T` frozen.
///
/// Each step takes a `U` step of length `1/L_U` from the extrapolated point,
/// projects it onto the orthogonal group, then a `B` step of length `1/L_B`
/// at the new `U`, projected onto the PSD contractions. Momentum is reset
/// whenever the objective would increase; the best iterate is returned.
pub fn fgm_update_ub(
    state: &ParamState,
    target: &MatrixPair,
    cfg: &SolverConfig,
) -> Result<ParamState> {
    check_inputs(state, target)?;
    Ok(fgm_inner(state, target, cfg))
}

fn fgm_inner(state: &ParamState, target: &MatrixPair, cfg: &SolverConfig) -> ParamState {
    let data = param::reduced_unchecked(state, target);
    let prob = UbProblem::new(&data);
    let l_b = prob.lipschitz_b();

    let mut x_u = state.u.clone();
    let mut x_b = state.b.clone();
    let mut x_val = prob.value(&x_u, &x_b);
    let (mut best_u, mut best_b, mut best_val) = (x_u.clone(), x_b.clone(), x_val);
    let (mut y_u, mut y_b) = (x_u.clone(), x_b.clone());
    let mut t = 1.0f64;
    let mut momentum = false;

    for _ in 0..cfg.inner_fgm_steps {
        let l_u = prob.lipschitz_u(&y_b);
        let new_u = if l_u > 0.0 {
            let g = prob.grad_u(&y_u, &y_b);
            numerics::polar_unchecked(&(&y_u - g / l_u))
        } else {
            x_u.clone()
        };
        let new_b = if l_b > 0.0 {
            let g = prob.grad_b(&new_u, &y_b);
            numerics::psd_contraction_unchecked(&(&y_b - g / l_b))
        } else {
            x_b.clone()
        };
        let new_val = prob.value(&new_u, &new_b);

        if cfg.momentum_restart && new_val > x_val {
            if momentum {
                // Retry from the last accepted point without momentum.
                t = 1.0;
                momentum = false;
                y_u = x_u.clone();
                y_b = x_b.clone();
                continue;
            }
            // A plain projected step cannot make progress; stop here.
            break;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y_u = &new_u + (&new_u - &x_u) * beta;
        y_b = &new_b + (&new_b - &x_b) * beta;
        momentum = beta > 0.0;
        t = t_next;
        x_u = new_u;
        x_b = new_b;
        x_val = new_val;
        if x_val < best_val {
            best_u = x_u.clone();
            best_b = x_b.clone();
            best_val = x_val;
        }
    }

    let mut next = state.clone();
    next.u = best_u;
    next.b = best_b;
    next
}

/// Runs block coordinate descent from the standard initialization.
pub fn bcd_solve(target: &MatrixPair, r: usize, cfg: &SolverConfig) -> Result<SolveResult> {
    let init = param::initialize(target, r)?;
    bcd_solve_from(target, init, cfg)
}

/// Runs block coordinate descent from a caller-supplied starting point.
pub fn bcd_solve_from(
    target: &MatrixPair,
    init: ParamState,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_inputs(&init, target)?;
    let start = Instant::now();
    let ridge = cfg.ridge_for(target.n());

    let mut state = init;
    let mut err = param::objective_unchecked(&state, target);
    let mut trace = vec![IterationTrace {
        iter: 0,
        error: err,
        elapsed_s: start.elapsed().as_secs_f64(),
        err_after_w: err,
        err_after_t: err,
        err_after_ub: err,
        ridge_used: false,
    }];
    // Objective changes below this are rounding noise of an exact fit.
    let noise_floor = (10.0 * target.n() as f64 * f64::EPSILON).powi(2)
        * (numerics::frobenius_sq(target.e()) + numerics::frobenius_sq(target.a()));
    let mut ridge_count = 0usize;
    let mut termination = Termination::IterLimit;

    for iter in 1..=cfg.max_outer_iters {
        let (s, err_w, used_w) = guarded(&state, err, w_step(&state, target, ridge), target);
        let (s, err_t, used_t) = guarded(&s, err_w, t_step(&s, target, ridge), target);
        let moved = fgm_inner(&s, target, cfg);
        let err_moved = param::objective_unchecked(&moved, target);
        // The inner method is monotone on g; this only guards against
        // rounding in the full objective.
        let (s, err_ub) = if err_moved <= err_t {
            (moved, err_moved)
        } else {
            (s, err_t)
        };
        state = s;
        if used_w || used_t {
            ridge_count += 1;
        }
        trace.push(IterationTrace {
            iter,
            error: err_ub,
            elapsed_s: start.elapsed().as_secs_f64(),
            err_after_w: err_w,
            err_after_t: err_t,
            err_after_ub: err_ub,
            ridge_used: used_w || used_t,
        });
        let prev = err;
        err = err_ub;
        if prev - err <= cfg.rel_decrease_tol * prev + noise_floor {
            termination = Termination::Converged;
            break;
        }
        // Stop early if another iteration would likely overrun the budget.
        let now = start.elapsed().as_secs_f64();
        let last = now - trace[trace.len() - 2].elapsed_s;
        if now + 2.0 * last >= cfg.time_limit_seconds {
            termination = Termination::TimeLimit;
            break;
        }
    }
    let iterations = trace.len() - 1;
    log::debug!(
        "r = {}: {termination} after {iterations} iterations, error {err:.6e}",
        state.r()
    );
    let mut warnings = state.invariant_warnings(&cfg.tolerances);
    if ridge_count > 0 {
        warnings.push(format!(
            "ridge fallback used in {ridge_count} of {iterations} iterations"
        ));
    }
    let pair = param::assemble(&state)?;
    let delta_e = pair.e() - target.e();
    let delta_a = pair.a() - target.a();
    let error = numerics::frobenius_sq(&delta_e) + numerics::frobenius_sq(&delta_a);
    let report = pencil::analyze_admissibility(&pair, &cfg.tolerances);
    if !report.admissible {
        warnings.push("assembled pair failed the admissibility analysis".to_string());
    }
    Ok(SolveResult {
        state,
        pair,
        error,
        delta_e,
        delta_a,
        trace,
        termination,
        iterations,
        elapsed_s: start.elapsed().as_secs_f64(),
        report,
        warnings,
    })
}

/// Which ranks a sweep visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every `r = 1..=n`.
    Full,
    /// Start at the numerical rank of `E` and walk outwards in both
    /// directions while the error keeps decreasing.
    Adaptive,
    /// An explicit list of ranks.
    List(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: usize,
    pub error: f64,
    pub elapsed_s: f64,
    pub termination: Termination,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub best: SolveResult,
    /// Rows sorted by `r`.
    pub table: Vec<SweepRow>,
}

impl SweepOutcome {
    pub fn best_rank(&self) -> usize {
        self.best.state.r()
    }
}

fn row_of(res: &SolveResult) -> SweepRow {
    SweepRow {
        r: res.state.r(),
        error: res.error,
        elapsed_s: res.elapsed_s,
        termination: res.termination,
        iterations: res.iterations,
    }
}

/// Solves the rank-constrained problem over several ranks and keeps the best.
pub fn rank_sweep(
    target: &MatrixPair,
    cfg: &SolverConfig,
    mode: &SweepMode,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let n = target.n();
    if n == 0 {
        return Err(Error::Dimension("cannot sweep an empty pair".into()));
    }
    let mut results: Vec<SolveResult> = Vec::new();
    match mode {
        SweepMode::Full => {
            for r in 1..=n {
                results.push(bcd_solve(target, r, cfg)?);
            }
        }
        SweepMode::List(ranks) => {
            let mut ranks = ranks.clone();
            ranks.sort_unstable();
            ranks.dedup();
            if ranks.is_empty() {
                return Err(Error::InvalidConfig("rank list is empty".into()));
            }
            for r in ranks {
                results.push(bcd_solve(target, r, cfg)?);
            }
        }
        SweepMode::Adaptive => {
            let r0 = numerics::rank_unchecked(target.e(), cfg.tolerances.rank_rtol).clamp(1, n);
            let first = bcd_solve(target, r0, cfg)?;
            let mut anchor = first.error;
            results.push(first);
            for r in (r0 + 1)..=n {
                let res = bcd_solve(target, r, cfg)?;
                let better = res.error < anchor;
                anchor = anchor.min(res.error);
                results.push(res);
                if !better {
                    break;
                }
            }
            let mut anchor = results[0].error;
            for r in (1..r0).rev() {
                let res = bcd_solve(target, r, cfg)?;
                let better = res.error < anchor;
                anchor = anchor.min(res.error);
                results.push(res);
                if !better {
                    break;
                }
            }
            results.sort_by_key(|res| res.state.r());
        }
    }
    let table: Vec<SweepRow> = results.iter().map(row_of).collect();
    for row in &table {
        log::info!(
            "sweep r = {}: error {:.6e} in {:.2} s",
            row.r,
            row.error,
            row.elapsed_s
        );
    }
    let best_idx = results
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.error.total_cmp(&b.error))
        .map(|(i, _)| i)
        .expect("at least one rank solved");
    let best = results.swap_remove(best_idx);
    Ok(SweepOutcome { best, table })
}
