//! Gradient episodic memory projection.
//!
//! Given a proposed update `g` and the loss gradients `g_k` of earlier tasks
//! (evaluated on their episodic memories), the update must satisfy
//! `⟨g, g_k⟩ ≥ 0` for every earlier task. When it does not, `g` is replaced
//! by its Euclidean projection `g̃` onto the cone `{z : ⟨z, g_k⟩ ≥ 0 ∀k}`.
//!
//! With `G = −(g_1, …, g_{t−1})` stacked as rows, the projection is the QP
//! `min ½ zᵀz − gᵀz  s.t.  Gz ≤ 0` (the generic form with `C = I`, `w = −g`,
//! `A = G`, `b = 0`). Its dual lives in `t − 1` variables:
//!
//! ```text
//! minimize_v  ½ vᵀGGᵀv − gᵀGᵀv   subject to  v ≥ 0
//! ```
//!
//! and the projection is recovered as `g̃ = −Gᵀv* + g`.

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{dot, norm2, norm_inf, Matrix};
use crate::nnq::{DualSolver, NonnegQP, SolverConfig, SolverStatus};

/// A recovered `g̃` this small relative to the magnitudes summed to produce
/// it is rounding noise around the origin, and is replaced by exact zero.
const ZERO_SNAP_RTOL: f64 = 1e-12;

/// Proposed update plus one memory gradient per earlier task, in task order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    g: Vec<f64>,
    memory_grads: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn new(g: Vec<f64>, memory_grads: Vec<Vec<f64>>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::Precondition("gradient must have at least one entry".into()));
        }
        check_finite("g", &g)?;
        for gk in &memory_grads {
            check_len("memory gradient", g.len(), gk.len())?;
            check_finite("memory gradient", gk)?;
        }
        Ok(Self { g, memory_grads })
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn memory_grads(&self) -> &[Vec<f64>] {
        &self.memory_grads
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Number of earlier tasks, `t − 1`.
    pub fn num_constraints(&self) -> usize {
        self.memory_grads.len()
    }

    /// Same memory gradients, different proposed update.
    pub fn with_g(&self, g: Vec<f64>) -> Result<Self> {
        Self::new(g, self.memory_grads.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionConfig {
    pub solver: DualSolver,
    pub solver_config: SolverConfig,
    /// Relative slack on `⟨g̃, g_k⟩ ≥ margin` accepted after recovery,
    /// scaled by `‖g‖₂‖g_k‖₂`.
    pub feas_tol: f64,
    /// Relative slack on the violation test, scaled by `‖g‖₂‖g_k‖₂`.
    pub violation_tol: f64,
    /// Requires `⟨g̃, g_k⟩ ≥ margin` instead of `≥ 0`.
    pub margin: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            solver: DualSolver::ProjectedGradient,
            solver_config: SolverConfig::default(),
            feas_tol: 1e-8,
            violation_tol: 1e-12,
            margin: 0.0,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver_config.validate()?;
        for (name, x) in [("feas_tol", self.feas_tol), ("violation_tol", self.violation_tol), ("margin", self.margin)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {x}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub g_tilde: Vec<f64>,
    /// Dual certificate, one multiplier per earlier task; zero when no
    /// projection was needed.
    pub v_star: Vec<f64>,
    /// Tasks whose constraint `g` violated, ascending.
    pub violated: Vec<usize>,
    pub kkt_residual: f64,
    /// True iff the dual solve ran.
    pub projected: bool,
    pub iterations: usize,
    pub status: SolverStatus,
}

fn violations(gs: &GradientSet, tol: f64, margin: f64) -> Vec<usize> {
    let gn = norm2(&gs.g);
    gs.memory_grads
        .iter()
        .enumerate()
        .filter(|(_, gk)| dot(&gs.g, gk) < margin - tol * gn * norm2(gk))
        .map(|(k, _)| k)
        .collect()
}

/// Indices `k` with `⟨g, g_k⟩ < −tol·‖g‖₂‖g_k‖₂`, ascending.
pub fn check_constraints(gs: &GradientSet, tol: f64) -> Vec<usize> {
    violations(gs, tol, 0.0)
}

/// `G` with row `k` equal to `−g_k`.
pub fn build_constraint_matrix(memory_grads: &[Vec<f64>]) -> Result<Matrix> {
    let first = memory_grads
        .first()
        .ok_or_else(|| Error::Precondition("constraint matrix needs at least one memory gradient".into()))?;
    let rows: Vec<Vec<f64>> = memory_grads.iter().map(|gk| gk.iter().map(|x| -x).collect()).collect();
    Matrix::from_rows(&rows, first.len())
}

/// Dual of the projection QP: `M = GGᵀ`, `q = −Gg`.
pub fn build_dual(g: &[f64], constraints: &Matrix) -> Result<NonnegQP> {
    build_dual_with_margin(g, constraints, 0.0)
}

/// As [`build_dual`] for the constraints `Gz ≤ −margin`, i.e. `q = −Gg − margin·1`.
pub fn build_dual_with_margin(g: &[f64], constraints: &Matrix, margin: f64) -> Result<NonnegQP> {
    check_len("gradient vs constraint columns", constraints.cols(), g.len())?;
    let q = constraints.mul_vec(g).into_iter().map(|x| -x - margin).collect();
    NonnegQP::new(constraints.gram(), q)
}

/// `g̃ = −Gᵀv + g`
pub fn recover(g: &[f64], constraints: &Matrix, v_star: &[f64]) -> Result<Vec<f64>> {
    check_len("gradient vs constraint columns", constraints.cols(), g.len())?;
    check_len("multipliers vs constraint rows", constraints.rows(), v_star.len())?;
    if let Some(i) = v_star.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::Precondition(format!("v_star[{i}] is negative")));
    }
    let gtv = constraints.tr_mul_vec(v_star);
    Ok(g.iter().zip(gtv).map(|(gi, si)| gi - si).collect())
}

/// Projects `g` onto the feasible cone when any constraint is violated.
///
/// Every memory gradient enters the QP, not just the violated ones. When
/// the solver stops at `max_iters` the partial result travels inside
/// [`Error::NotConverged`].
pub fn project(gs: &GradientSet, config: &ProjectionConfig) -> Result<ProjectionResult> {
    config.validate()?;
    let t = gs.num_constraints();
    let violated = violations(gs, config.violation_tol, config.margin);
    if violated.is_empty() {
        return Ok(ProjectionResult {
            g_tilde: gs.g.clone(),
            v_star: vec![0.0; t],
            violated,
            kkt_residual: 0.0,
            projected: false,
            iterations: 0,
            status: SolverStatus::Converged,
        });
    }
    if config.margin > 0.0 {
        if let Some(k) = gs.memory_grads.iter().position(|gk| gk.iter().all(|&x| x == 0.0)) {
            return Err(Error::Parameter(format!(
                "memory gradient {k} is zero, so a positive margin cannot be met"
            )));
        }
    }

    let constraints = build_constraint_matrix(&gs.memory_grads)?;
    let problem = build_dual_with_margin(&gs.g, &constraints, config.margin)?;
    let solved = config.solver.solve(&problem, &config.solver_config)?;
    let mut g_tilde = recover(&gs.g, &constraints, &solved.v_star)?;

    if config.margin == 0.0 {
        let scale = norm_inf(&gs.g)
            + gs.memory_grads.iter().zip(&solved.v_star).map(|(gk, v)| v * norm_inf(gk)).sum::<f64>();
        if norm_inf(&g_tilde) <= ZERO_SNAP_RTOL * scale {
            g_tilde.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    let result = ProjectionResult {
        g_tilde,
        v_star: solved.v_star,
        violated,
        kkt_residual: solved.kkt_residual,
        projected: true,
        iterations: solved.iterations,
        status: solved.status,
    };
    if result.status == SolverStatus::MaxItersReached {
        return Err(Error::NotConverged(Box::new(result)));
    }

    let gn = norm2(&gs.g);
    for (k, gk) in gs.memory_grads.iter().enumerate() {
        let ip = dot(&result.g_tilde, gk);
        if ip < config.margin - config.feas_tol * gn * norm2(gk) {
            return Err(Error::Internal(format!(
                "projected gradient violates constraint {k}: <g~, g_k> = {ip:e} (feas_tol {:e})",
                config.feas_tol
            )));
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs(g: &[f64], mem: &[&[f64]]) -> GradientSet {
        GradientSet::new(g.to_vec(), mem.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn check_constraints_examples() {
        assert!(check_constraints(&gs(&[1.0, 0.0], &[&[0.0, 1.0]]), 0.0).is_empty());
        assert_eq!(check_constraints(&gs(&[1.0, -1.0], &[&[0.0, 1.0]]), 0.0), vec![0]);
        assert!(check_constraints(&gs(&[1.0, -1.0], &[]), 0.0).is_empty());
        let many = gs(&[1.0, -1.0], &[&[0.0, 1.0], &[1.0, 0.0], &[-1.0, 0.0], &[1.0, 2.0]]);
        assert_eq!(check_constraints(&many, 0.0), vec![0, 2, 3]);
    }

    #[test]
    fn constraint_matrix_examples() {
        let rows = |m: &[&[f64]]| build_constraint_matrix(&m.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
        assert_eq!(rows(&[&[0.0, 1.0]]).unwrap().to_rows(), vec![vec![0.0, -1.0]]);
        assert_eq!(
            rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap().to_rows(),
            vec![vec![-1.0, 0.0], vec![0.0, -1.0]]
        );
        assert_eq!(
            rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap().to_rows(),
            vec![vec![-1.0, -2.0], vec![-3.0, -4.0]]
        );
        assert!(matches!(build_constraint_matrix(&[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn build_dual_examples() {
        let g1 = Matrix::from_rows(&[vec![0.0, -1.0]], 2).unwrap();
        let d = build_dual(&[1.0, -1.0], &g1).unwrap();
        assert_eq!((d.m().to_rows(), d.q().to_vec()), (vec![vec![1.0]], vec![-1.0]));
        let d = build_dual(&[0.0, 0.0], &g1).unwrap();
        assert!(d.q().iter().all(|&x| x == 0.0));
        let g2 = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]], 2).unwrap();
        let d = build_dual(&[-1.0, -1.0], &g2).unwrap();
        assert_eq!(d.m(), &Matrix::identity(2));
        assert_eq!(d.q(), &[-1.0, -1.0]);
    }

    #[test]
    fn recover_examples() {
        let g1 = Matrix::from_rows(&[vec![0.0, -1.0]], 2).unwrap();
        assert_eq!(recover(&[1.0, -1.0], &g1, &[0.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(recover(&[1.0, -1.0], &g1, &[1.0]).unwrap(), vec![1.0, 0.0]);
        let g2 = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]], 2).unwrap();
        assert_eq!(recover(&[-1.0, -1.0], &g2, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(recover(&[1.0, -1.0], &g1, &[-1.0]).is_err());
    }

    #[test]
    fn project_examples() {
        let cfg = ProjectionConfig::default();
        let r = project(&gs(&[1.0, -1.0], &[&[0.0, 1.0]]), &cfg).unwrap();
        assert!(r.projected);
        assert_eq!(r.violated, vec![0]);
        assert!((r.g_tilde[0] - 1.0).abs() < 1e-12 && r.g_tilde[1].abs() < 1e-12);
        assert!((r.v_star[0] - 1.0).abs() < 1e-12);

        let r = project(&gs(&[1.0, 0.0], &[&[0.0, 1.0]]), &cfg).unwrap();
        assert!(!r.projected);
        assert_eq!(r.g_tilde, vec![1.0, 0.0]);
        assert_eq!(r.v_star, vec![0.0]);

        let r = project(&gs(&[-1.0, -1.0], &[&[1.0, 0.0], &[0.0, 1.0]]), &cfg).unwrap();
        assert!(r.g_tilde.iter().all(|x| x.abs() < 1e-12));
        assert!((r.v_star[0] - 1.0).abs() < 1e-12 && (r.v_star[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_task_is_a_no_op() {
        let r = project(&gs(&[3.0, -2.0], &[]), &ProjectionConfig::default()).unwrap();
        assert!(!r.projected && r.v_star.is_empty());
        assert_eq!(r.g_tilde, vec![3.0, -2.0]);
    }

    #[test]
    fn zero_memory_gradient_is_vacuous() {
        let set = gs(&[1.0, -1.0], &[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(check_constraints(&set, 0.0), vec![1]);
        let r = project(&set, &ProjectionConfig::default()).unwrap();
        assert!((r.g_tilde[0] - 1.0).abs() < 1e-12 && r.g_tilde[1].abs() < 1e-12);
        let cfg = ProjectionConfig { margin: 0.1, ..Default::default() };
        assert!(matches!(project(&set, &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn margin_pushes_into_the_cone() {
        let cfg = ProjectionConfig { margin: 0.5, ..Default::default() };
        let r = project(&gs(&[1.0, -1.0], &[&[0.0, 1.0]]), &cfg).unwrap();
        assert!((r.g_tilde[0] - 1.0).abs() < 1e-12 && (r.g_tilde[1] - 0.5).abs() < 1e-12);
        // Satisfied with slack but not with margin.
        let r = project(&gs(&[1.0, 0.2], &[&[0.0, 1.0]]), &cfg).unwrap();
        assert!(r.projected && (r.g_tilde[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_carries_partial_result() {
        let mut cfg = ProjectionConfig::default();
        cfg.solver_config.max_iters = 1;
        cfg.solver_config.polish = false;
        let set = gs(&[-1.0, -0.3, 0.2], &[&[1.0, 0.1, 0.0], &[0.9, 0.3, 0.1], &[0.0, 1.0, 1.0]]);
        match project(&set, &cfg) {
            Err(Error::NotConverged(partial)) => {
                assert!(partial.projected);
                assert_eq!(partial.iterations, 1);
                assert_eq!(partial.status, SolverStatus::MaxItersReached);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn gradient_set_validation() {
        assert!(GradientSet::new(vec![], vec![]).is_err());
        assert!(matches!(
            GradientSet::new(vec![1.0], vec![vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(GradientSet::new(vec![f64::NAN], vec![]).is_err());
    }
}
