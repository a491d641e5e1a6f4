//! Solvers for `minimize ½ vᵀMv + qᵀv  subject to  v ≥ 0` with `M` symmetric
//! positive semidefinite.
//!
//! Two independent routes are provided:
//!
//! * [`solve_pg`]: projected gradient with step `1/trace(M)`, optional
//!   Nesterov momentum with function-value restart, and a final exact solve
//!   on the identified support.
//! * [`solve_active_set_bruteforce`]: enumerates all `2^m` supports and solves
//!   each reduced system by SVD least squares. Only meant as an oracle.
//!
//! Optimality is measured by [`kkt_residual`], `‖min(v, Mv + q)‖_∞`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{dot, norm_inf, solve_dropping_dependent, Matrix};
use crate::qp::SYMMETRY_TOL;

/// Largest `m` accepted by the exhaustive oracle.
pub const BRUTEFORCE_MAX_DIM: usize = 16;

/// Relative pivot threshold for treating a support row as dependent.
const POLISH_PIVOT_TOL: f64 = 1e-12;

/// Iterations between active-set refinement attempts.
const POLISH_EVERY: usize = 256;

/// `minimize ½ vᵀMv + qᵀv  s.t.  v ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegQP {
    m: Matrix,
    q: Vec<f64>,
}

impl NonnegQP {
    pub fn new(m: Matrix, q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Precondition("nonnegative QP needs at least one variable".into()));
        }
        check_len("M rows", q.len(), m.rows())?;
        check_len("M columns", q.len(), m.cols())?;
        check_finite("M", m.as_slice())?;
        check_finite("q", &q)?;
        let mut m = m;
        let asym = m.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        m.symmetrize();
        Ok(Self { m, q })
    }

    pub fn from_rows(m: &[Vec<f64>], q: Vec<f64>) -> Result<Self> {
        let n = q.len();
        Self::new(Matrix::from_rows(m, n)?, q)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        0.5 * self.m.quad_form(v) + dot(&self.q, v)
    }

    /// `Mv + q`
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = self.m.mul_vec(v);
        for (gi, qi) in g.iter_mut().zip(&self.q) {
            *gi += qi;
        }
        g
    }

    fn with_ridge(&self, ridge: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += ridge;
        }
        Self { m, q: self.q.clone() }
    }

    fn residual_unchecked(&self, v: &[f64]) -> f64 {
        let g = self.gradient(v);
        v.iter().zip(&g).fold(0.0_f64, |acc, (vi, gi)| acc.max(vi.min(*gi).abs()))
    }
}

/// `‖min(v, Mv + q)‖_∞`; zero exactly at KKT points.
pub fn kkt_residual(problem: &NonnegQP, v: &[f64]) -> Result<f64> {
    check_len("dual point v", problem.dim(), v.len())?;
    if let Some(i) = v.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::Precondition(format!("v[{i}] = {} is negative", v[i])));
    }
    Ok(problem.residual_unchecked(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Absolute tolerance on [`kkt_residual`].
    pub tol_kkt: f64,
    /// Solve with `M + ridge·I` instead of `M`.
    pub ridge: f64,
    /// Nesterov momentum with restart.
    pub acceleration: bool,
    /// Finish with an exact solve on the support found by the iterations.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 100_000, tol_kkt: 1e-10, ridge: 0.0, acceleration: true, polish: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.tol_kkt > 0.0) {
            return Err(Error::Parameter(format!("tol_kkt must be positive, got {}", self.tol_kkt)));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::Parameter(format!("ridge must be finite and >= 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxItersReached,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxItersReached => "max_iters_reached",
        }
    }
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub v_star: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub status: SolverStatus,
}

impl SolverResult {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

/// Which algorithm solves the dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualSolver {
    #[default]
    ProjectedGradient,
    ActiveSetBruteforce,
}

impl DualSolver {
    pub fn solve(self, problem: &NonnegQP, config: &SolverConfig) -> Result<SolverResult> {
        match self {
            DualSolver::ProjectedGradient => solve_pg(problem, config),
            DualSolver::ActiveSetBruteforce => solve_active_set_bruteforce(problem),
        }
    }
}

impl FromStr for DualSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pg" => Ok(DualSolver::ProjectedGradient),
            "bruteforce" => Ok(DualSolver::ActiveSetBruteforce),
            other => Err(Error::Parameter(format!("unknown solver {other:?} (expected pg or bruteforce)"))),
        }
    }
}

/// Projected gradient from `v₀ = 0`. See [`solve_pg_traced`] for the
/// objective history.
pub fn solve_pg(problem: &NonnegQP, config: &SolverConfig) -> Result<SolverResult> {
    run_pg(problem, config, None)
}

/// Like [`solve_pg`], also returning the objective value at `v₀` and after
/// every accepted iterate. The sequence is nonincreasing up to rounding.
pub fn solve_pg_traced(problem: &NonnegQP, config: &SolverConfig) -> Result<(SolverResult, Vec<f64>)> {
    let mut trace = Vec::new();
    let result = run_pg(problem, config, Some(&mut trace))?;
    Ok((result, trace))
}

fn project_step(problem: &NonnegQP, from: &[f64], inv_l: f64) -> Vec<f64> {
    let g = problem.gradient(from);
    from.iter().zip(&g).map(|(x, gi)| (x - inv_l * gi).max(0.0)).collect()
}

fn run_pg(problem: &NonnegQP, config: &SolverConfig, mut trace: Option<&mut Vec<f64>>) -> Result<SolverResult> {
    config.validate()?;
    let owned;
    let problem = if config.ridge > 0.0 {
        owned = problem.with_ridge(config.ridge);
        &owned
    } else {
        problem
    };
    let n = problem.dim();

    let mut v = vec![0.0; n];
    let mut f = 0.0;
    if let Some(t) = trace.as_deref_mut() {
        t.push(f);
    }
    let mut residual = problem.residual_unchecked(&v);
    if residual <= config.tol_kkt {
        return Ok(SolverResult { v_star: v, iterations: 0, kkt_residual: residual, status: SolverStatus::Converged });
    }

    // trace(M) bounds the largest eigenvalue of a PSD matrix.
    let lipschitz = problem.m().trace();
    let inv_l = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    let mut v_prev = v.clone();
    let mut momentum = 1.0_f64;
    let mut iterations = 0;
    let mut status = SolverStatus::MaxItersReached;
    while iterations < config.max_iters {
        iterations += 1;
        let (mut next, mut next_momentum) = if config.acceleration {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / t_next;
            let y: Vec<f64> = v.iter().zip(&v_prev).map(|(a, b)| a + beta * (a - b)).collect();
            (project_step(problem, &y, inv_l), t_next)
        } else {
            (project_step(problem, &v, inv_l), 1.0)
        };
        let mut f_next = problem.objective(&next);
        if f_next > f && config.acceleration {
            // Momentum overshoot: restart from a plain gradient step.
            next = project_step(problem, &v, inv_l);
            f_next = problem.objective(&next);
            next_momentum = 1.0;
        }
        v_prev = std::mem::replace(&mut v, next);
        f = f_next;
        momentum = next_momentum;
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }
        residual = problem.residual_unchecked(&v);
        if residual <= config.tol_kkt {
            status = SolverStatus::Converged;
            break;
        }
        if config.polish && iterations % POLISH_EVERY == 0 {
            if let Some((pv, pf, pr)) = polish(problem, &v, f, residual) {
                v_prev.clone_from(&pv);
                v = pv;
                f = pf;
                residual = pr;
                momentum = 1.0;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(f);
                }
                if residual <= config.tol_kkt {
                    status = SolverStatus::Converged;
                    break;
                }
            }
        }
    }

    if config.polish {
        if let Some((pv, pf, pr)) = polish(problem, &v, f, residual) {
            v = pv;
            residual = pr;
            if let Some(t) = trace {
                t.push(pf);
            }
            if residual <= config.tol_kkt {
                status = SolverStatus::Converged;
            }
        }
    }

    Ok(SolverResult { v_star: v, iterations, kkt_residual: residual, status })
}

/// Active-set refinement started from the support of a feasible `v`: solve
/// the stationarity equations on the free set, step back to the boundary when
/// that solution leaves the orthant, and free the most negative gradient
/// entry once it does not. Kept only if it is no worse in objective and
/// strictly better in KKT residual.
fn polish(problem: &NonnegQP, v: &[f64], f: f64, residual: f64) -> Option<(Vec<f64>, f64, f64)> {
    let n = v.len();
    let scale = problem.m().max_abs() * v.iter().fold(1.0_f64, |a, x| a.max(*x)) + norm_inf(problem.q());
    let add_tol = 64.0 * f64::EPSILON * scale;
    let mut cur = v.to_vec();
    let mut free: Vec<bool> = v.iter().map(|&x| x > 0.0).collect();
    let mut done = false;
    for _ in 0..4 * n + 4 {
        let support: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let rhs: Vec<f64> = support.iter().map(|&i| -problem.q[i]).collect();
        let xs = solve_dropping_dependent(problem.m(), &support, &rhs, POLISH_PIVOT_TOL)?;
        if xs.iter().any(|x| !x.is_finite()) {
            return None;
        }
        if xs.iter().all(|&x| x >= 0.0) {
            cur.iter_mut().for_each(|x| *x = 0.0);
            for (&i, &x) in support.iter().zip(&xs) {
                cur[i] = x;
            }
            let g = problem.gradient(&cur);
            let entering = (0..n)
                .filter(|&i| !free[i] && g[i] < -add_tol)
                .min_by(|&a, &b| g[a].total_cmp(&g[b]));
            match entering {
                Some(j) => free[j] = true,
                None => {
                    done = true;
                    break;
                }
            }
        } else {
            // Largest step from `cur` toward `xs` that stays in the orthant.
            let (mut alpha, mut blocking) = (1.0_f64, support[0]);
            for (&i, &x) in support.iter().zip(&xs) {
                if x < 0.0 {
                    let a = cur[i] / (cur[i] - x);
                    if a < alpha {
                        alpha = a;
                        blocking = i;
                    }
                }
            }
            for (&i, &x) in support.iter().zip(&xs) {
                cur[i] = (cur[i] + alpha * (x - cur[i])).max(0.0);
            }
            cur[blocking] = 0.0;
            for &i in &support {
                if cur[i] == 0.0 {
                    free[i] = false;
                }
            }
        }
    }
    if !done {
        return None;
    }
    let cf = problem.objective(&cur);
    let cr = problem.residual_unchecked(&cur);
    (cr < residual && cf <= f + 1e-12 * (1.0 + f.abs())).then_some((cur, cf, cr))
}

/// Exhaustive active-set oracle. For every support `S` it solves
/// `M_SS v_S = −q_S` by SVD least squares, keeps candidates that are primal
/// feasible (`v_S ≥ −1e-12`, then clipped) and dual feasible
/// (`(Mv + q)_i ≥ −1e-9` off the support), and returns the one with the
/// smallest objective.
pub fn solve_active_set_bruteforce(problem: &NonnegQP) -> Result<SolverResult> {
    let n = problem.dim();
    if n > BRUTEFORCE_MAX_DIM {
        return Err(Error::TooLarge { m: n, limit: BRUTEFORCE_MAX_DIM });
    }
    let full = DMatrix::from_row_slice(n, n, problem.m().as_slice());
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let supports = 1usize << n;
    for mask in 0..supports {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut v = vec![0.0; n];
        if !support.is_empty() {
            let k = support.len();
            let sub = DMatrix::from_fn(k, k, |r, c| full[(support[r], support[c])]);
            let rhs = DVector::from_iterator(k, support.iter().map(|&i| -problem.q[i]));
            let svd = sub.svd(true, true);
            let eps = 1e-12 * svd.singular_values.max().max(1.0);
            let Ok(x) = svd.solve(&rhs, eps) else { continue };
            if x.iter().any(|xi| !(*xi >= -1e-12)) {
                continue;
            }
            for (&i, xi) in support.iter().zip(x.iter()) {
                v[i] = xi.max(0.0);
            }
        }
        let g = problem.gradient(&v);
        if (0..n).any(|i| mask & (1 << i) == 0 && !(g[i] >= -1e-9)) {
            continue;
        }
        let obj = problem.objective(&v);
        let kkt = problem.residual_unchecked(&v);
        // Near the optimum the objective is flat to second order, so
        // candidates within rounding of each other are ranked by KKT residual.
        let better = best.as_ref().is_none_or(|(b, bk, _)| {
            let tie = 1e-12 * (1.0 + b.abs());
            obj < *b - tie || (obj <= *b + tie && kkt < *bk)
        });
        if better {
            best = Some((obj, kkt, v));
        }
    }
    let (_, kkt, v_star) = best.ok_or_else(|| Error::Internal("active-set enumeration accepted no candidate".into()))?;
    Ok(SolverResult { v_star, iterations: supports, kkt_residual: kkt, status: SolverStatus::Converged })
}
