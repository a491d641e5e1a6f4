//! Inequality-constrained convex QPs and their Lagrangian duals.
//!
//! The primal is
//!
//! ```text
//! minimize_z  ½ zᵀCz + wᵀz   subject to  Az ≤ b
//! ```
//!
//! with `C` symmetric positive definite. Minimizing the Lagrangian
//! `L(z, v) = ½ zᵀCz + wᵀz + vᵀ(Az − b)` over `z` gives the stationary point
//! `z*(v) = −C⁻¹(Aᵀv + w)`, and substituting back gives the dual function
//! `−(½ vᵀMv + qᵀv) − ½ wᵀC⁻¹w` with `M = A C⁻¹ Aᵀ` and `q = A C⁻¹ w + b`.
//! The dual problem is therefore again a QP, over the nonnegative orthant.
//!
//! `C⁻¹` is never formed: every product goes through an LDLᵀ factorization
//! computed once at construction.

use std::sync::OnceLock;

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::{dot, Ldlt, Matrix};
use crate::nnq::{DualSolver, NonnegQP, SolverConfig, SolverStatus};

/// Asymmetry in `C` up to this magnitude is treated as rounding noise.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default absolute slack on `Az ≤ b` accepted by [`PrimalQP::duality_gap`].
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;

/// `minimize ½ zᵀCz + wᵀz  s.t.  Az ≤ b`.
#[derive(Debug)]
pub struct PrimalQP {
    c: Matrix,
    w: Vec<f64>,
    a: Matrix,
    b: Vec<f64>,
    factor: Ldlt,
    dual: OnceLock<DualQP>,
}

/// `minimize ½ vᵀMv + qᵀv  s.t.  v ≥ 0`, plus the constant `½ wᵀC⁻¹w` needed
/// to turn the objective into the exact dual function value.
#[derive(Debug, Clone, PartialEq)]
pub struct DualQP {
    pub m: Matrix,
    pub q: Vec<f64>,
    pub constant: f64,
}

impl DualQP {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `½ vᵀMv + qᵀv`
    pub fn objective(&self, v: &[f64]) -> f64 {
        0.5 * self.m.quad_form(v) + dot(&self.q, v)
    }

    /// The orthant problem handed to a solver; `None` when there are no constraints.
    pub fn to_nonneg(&self) -> Option<NonnegQP> {
        if self.dim() == 0 {
            return None;
        }
        Some(NonnegQP::new(self.m.clone(), self.q.clone()).expect("dual data is square and finite"))
    }
}

impl PrimalQP {
    /// Validates shapes, symmetrizes `C` and factors it.
    pub fn new(c: Matrix, w: Vec<f64>, a: Matrix, b: Vec<f64>) -> Result<Self> {
        let p = w.len();
        check_len("C rows", p, c.rows())?;
        check_len("C columns", p, c.cols())?;
        check_len("A columns", p, a.cols())?;
        check_len("b length", a.rows(), b.len())?;
        check_finite("C", c.as_slice())?;
        check_finite("w", &w)?;
        check_finite("A", a.as_slice())?;
        check_finite("b", &b)?;

        let mut c = c;
        let asym = c.max_asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry: asym });
        }
        c.symmetrize();
        let factor = Ldlt::factor(&c)?;
        Ok(Self { c, w, a, b, factor, dual: OnceLock::new() })
    }

    /// Builds the QP from nested row vectors (the JSON layout).
    pub fn from_rows(c: &[Vec<f64>], w: Vec<f64>, a: &[Vec<f64>], b: Vec<f64>) -> Result<Self> {
        let p = w.len();
        Self::new(Matrix::from_rows(c, p)?, w, Matrix::from_rows(a, p)?, b)
    }

    /// Number of primal variables `p`.
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Number of constraints `m`.
    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `½ zᵀCz + wᵀz`
    pub fn primal_objective(&self, z: &[f64]) -> Result<f64> {
        check_len("primal point z", self.dim(), z.len())?;
        Ok(self.objective_unchecked(z))
    }

    fn objective_unchecked(&self, z: &[f64]) -> f64 {
        0.5 * self.c.quad_form(z) + dot(&self.w, z)
    }

    /// `½ zᵀCz + wᵀz + vᵀ(Az − b)`
    pub fn lagrangian(&self, z: &[f64], v: &[f64]) -> Result<f64> {
        check_len("primal point z", self.dim(), z.len())?;
        check_len("multipliers v", self.num_constraints(), v.len())?;
        let slack: Vec<f64> = self.a.mul_vec(z).iter().zip(&self.b).map(|(az, b)| az - b).collect();
        Ok(self.objective_unchecked(z) + dot(v, &slack))
    }

    /// Minimizer of the Lagrangian in `z` for fixed multipliers:
    /// `z* = −C⁻¹(Aᵀv + w)`. Defined for any `v`, including negative entries.
    pub fn stationary_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("multipliers v", self.num_constraints(), v.len())?;
        let mut rhs = self.a.tr_mul_vec(v);
        for (r, w) in rhs.iter_mut().zip(&self.w) {
            *r = -(*r + w);
        }
        Ok(self.factor.solve(&rhs))
    }

    /// `∇_z L(z, v) = Cz + Aᵀv + w`
    pub fn lagrangian_gradient(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_len("primal point z", self.dim(), z.len())?;
        check_len("multipliers v", self.num_constraints(), v.len())?;
        let mut g = self.c.mul_vec(z);
        for ((gi, ai), wi) in g.iter_mut().zip(self.a.tr_mul_vec(v)).zip(&self.w) {
            *gi += ai + wi;
        }
        Ok(g)
    }

    /// The dual QP data `(M, q, constant)`. Computed once and cached.
    pub fn form_dual(&self) -> &DualQP {
        self.dual.get_or_init(|| self.compute_dual())
    }

    fn compute_dual(&self) -> DualQP {
        let m = self.num_constraints();
        // Columns of C⁻¹Aᵀ.
        let cinv_at: Vec<Vec<f64>> = (0..m).map(|i| self.factor.solve(self.a.row(i))).collect();
        let mut mm = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                mm[(i, j)] = dot(self.a.row(i), &cinv_at[j]);
            }
        }
        mm.symmetrize();
        let cinv_w = self.factor.solve(&self.w);
        let q = (0..m).map(|i| dot(self.a.row(i), &cinv_w) + self.b[i]).collect();
        let constant = 0.5 * dot(&self.w, &cinv_w);
        DualQP { m: mm, q, constant }
    }

    /// `g(v) = inf_z L(z, v) = −(½ vᵀMv + qᵀv) − ½ wᵀC⁻¹w`
    pub fn dual_function_value(&self, v: &[f64]) -> Result<f64> {
        check_len("multipliers v", self.num_constraints(), v.len())?;
        let dual = self.form_dual();
        Ok(-dual.objective(v) - dual.constant)
    }

    /// Primal objective minus dual function value, after checking that `z`
    /// is feasible within [`DEFAULT_FEAS_TOL`] and `v ≥ 0`.
    pub fn duality_gap(&self, z: &[f64], v: &[f64]) -> Result<f64> {
        self.duality_gap_with_tol(z, v, DEFAULT_FEAS_TOL)
    }

    pub fn duality_gap_with_tol(&self, z: &[f64], v: &[f64], feas_tol: f64) -> Result<f64> {
        check_len("primal point z", self.dim(), z.len())?;
        check_len("multipliers v", self.num_constraints(), v.len())?;
        if let Some(index) = v.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::Certificate { index, reason: "multiplier is negative" });
        }
        let az = self.a.mul_vec(z);
        if let Some(index) = az.iter().zip(&self.b).position(|(az, b)| !(*az <= b + feas_tol)) {
            return Err(Error::Certificate { index, reason: "primal constraint Az <= b violated" });
        }
        Ok(self.objective_unchecked(z) - self.dual_function_value(v)?)
    }

    /// Solves the dual, maps the multipliers back through the stationary
    /// point and reports objectives, gap and residuals.
    pub fn certify(&self, solver: DualSolver, config: &SolverConfig) -> Result<Certificate> {
        let dual = self.form_dual();
        let (v, iterations, kkt_residual, status) = match dual.to_nonneg() {
            None => (Vec::new(), 0, 0.0, SolverStatus::Converged),
            Some(problem) => {
                let r = solver.solve(&problem, config)?;
                (r.v_star, r.iterations, r.kkt_residual, r.status)
            }
        };
        let z = self.stationary_point(&v)?;
        let primal_objective = self.objective_unchecked(&z);
        let dual_value = self.dual_function_value(&v)?;
        let max_violation = self
            .a
            .mul_vec(&z)
            .iter()
            .zip(&self.b)
            .fold(0.0_f64, |acc, (az, b)| acc.max(az - b));
        let duality_gap = match status {
            SolverStatus::Converged => Some(self.duality_gap(&z, &v)?),
            SolverStatus::MaxItersReached => None,
        };
        Ok(Certificate {
            z,
            v,
            primal_objective,
            dual_value,
            duality_gap,
            max_violation,
            kkt_residual,
            iterations,
            status,
        })
    }
}

/// Output of [`PrimalQP::certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub primal_objective: f64,
    pub dual_value: f64,
    /// `None` when the dual solve did not converge.
    pub duality_gap: Option<f64>,
    /// `max_i (Az − b)_i`, or 0 without constraints.
    pub max_violation: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(c: &[Vec<f64>], w: &[f64], a: &[Vec<f64>], b: &[f64]) -> PrimalQP {
        PrimalQP::from_rows(c, w.to_vec(), a, b.to_vec()).unwrap()
    }

    fn eye(n: usize) -> Vec<Vec<f64>> {
        Matrix::identity(n).to_rows()
    }

    /// C = I₁, w = (−1), A = [[1]], b = (0).
    fn scalar_qp() -> PrimalQP {
        qp(&[vec![1.0]], &[-1.0], &[vec![1.0]], &[0.0])
    }

    #[test]
    fn primal_objective_examples() {
        let q = qp(&eye(2), &[0.0, 0.0], &[], &[]);
        assert_eq!(q.primal_objective(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(q.primal_objective(&[1.0, 0.0]).unwrap(), 0.5);
        let q = qp(&[vec![2.0, 0.0], vec![0.0, 2.0]], &[1.0, -1.0], &[], &[]);
        assert_eq!(q.primal_objective(&[1.0, 1.0]).unwrap(), 2.0);
        assert!(matches!(q.primal_objective(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lagrangian_examples() {
        let q = scalar_qp();
        assert_eq!(q.lagrangian(&[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(q.lagrangian(&[0.3], &[0.0]).unwrap(), q.primal_objective(&[0.3]).unwrap());
        assert!(q.lagrangian(&[1.0], &[]).is_err());
        let v = [0.7];
        let z = q.stationary_point(&v).unwrap();
        let lhs = q.lagrangian(&z, &v).unwrap();
        assert!((lhs - q.dual_function_value(&v).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn stationary_point_examples() {
        let q = qp(&eye(2), &[0.0, 0.0], &[vec![1.0, 0.0]], &[0.0]);
        assert_eq!(q.stationary_point(&[0.0]).unwrap(), vec![0.0, 0.0]);
        let q = qp(&eye(2), &[-1.0, 1.0], &[vec![0.0, -1.0]], &[0.0]);
        assert_eq!(q.stationary_point(&[1.0]).unwrap(), vec![1.0, 0.0]);
        let q = qp(&[vec![2.0]], &[0.0], &[vec![1.0]], &[0.0]);
        assert_eq!(q.stationary_point(&[2.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn form_dual_examples() {
        let d = qp(&eye(2), &[0.0, 0.0], &[vec![1.0, 0.0]], &[0.0]).form_dual().clone();
        assert_eq!((d.m.to_rows(), d.q, d.constant), (vec![vec![1.0]], vec![0.0], 0.0));
        let d = qp(&eye(2), &[-1.0, 1.0], &[vec![0.0, -1.0]], &[0.0]).form_dual().clone();
        assert_eq!((d.m.to_rows(), d.q, d.constant), (vec![vec![1.0]], vec![-1.0], 1.0));
        let d = qp(&[vec![2.0, 0.0], vec![0.0, 2.0]], &[2.0, 0.0], &[vec![1.0, 1.0]], &[1.0])
            .form_dual()
            .clone();
        assert_eq!((d.m.to_rows(), d.q, d.constant), (vec![vec![1.0]], vec![2.0], 1.0));
    }

    #[test]
    fn dual_function_value_examples() {
        let q = qp(&eye(2), &[0.0, 0.0], &[vec![1.0, 0.0]], &[0.0]);
        assert_eq!(q.dual_function_value(&[0.0]).unwrap(), 0.0);
        assert_eq!(scalar_qp().dual_function_value(&[1.0]).unwrap(), 0.0);
        // v = 0 gives the unconstrained minimum −½ wᵀC⁻¹w.
        let q = qp(&[vec![2.0, 0.0], vec![0.0, 4.0]], &[2.0, 4.0], &[vec![1.0, 0.0]], &[3.0]);
        assert!((q.dual_function_value(&[0.0]).unwrap() - (-0.5 * (4.0 / 2.0 + 16.0 / 4.0))).abs() < 1e-15);
    }

    #[test]
    fn duality_gap_examples() {
        let q = scalar_qp();
        assert_eq!(q.duality_gap(&[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(q.duality_gap(&[0.0], &[0.0]).unwrap(), 0.5);
        assert!(matches!(q.duality_gap(&[0.0], &[-1.0]), Err(Error::Certificate { index: 0, .. })));
        assert!(matches!(q.duality_gap(&[1.0], &[1.0]), Err(Error::Certificate { index: 0, .. })));
    }

    #[test]
    fn construction_checks() {
        let err = PrimalQP::from_rows(&[vec![0.0]], vec![0.0], &[], vec![]).unwrap_err();
        assert!(err.to_string().contains("C not positive definite"));
        let err = PrimalQP::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]], vec![0.0; 2], &[], vec![])
            .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
        // Rounding-level asymmetry is symmetrized away.
        let q = PrimalQP::from_rows(&[vec![1.0, 1e-13], vec![0.0, 1.0]], vec![0.0; 2], &[], vec![]).unwrap();
        assert_eq!(q.c()[(0, 1)], q.c()[(1, 0)]);
        assert!(PrimalQP::from_rows(&eye(2), vec![0.0; 2], &[vec![1.0]], vec![0.0]).is_err());
        assert!(PrimalQP::from_rows(&eye(1), vec![f64::NAN], &[], vec![]).is_err());
    }

    #[test]
    fn unconstrained_problem() {
        let q = qp(&[vec![2.0]], &[-4.0], &[], &[]);
        assert_eq!(q.stationary_point(&[]).unwrap(), vec![2.0]);
        let cert = q.certify(DualSolver::ProjectedGradient, &SolverConfig::default()).unwrap();
        assert_eq!(cert.z, vec![2.0]);
        assert_eq!(cert.duality_gap, Some(0.0));
        assert!(q.form_dual().to_nonneg().is_none());
    }

    #[test]
    fn certify_scalar_qp() {
        let cert = scalar_qp().certify(DualSolver::ProjectedGradient, &SolverConfig::default()).unwrap();
        assert!(cert.z[0].abs() < 1e-10);
        assert!((cert.v[0] - 1.0).abs() < 1e-10);
        assert!(cert.duality_gap.unwrap().abs() <= 1e-8);
        assert_eq!(cert.status, SolverStatus::Converged);
    }
}
