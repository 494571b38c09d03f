//! Dense feasibility solver for small systems of linear matrix inequalities.
//!
//! A problem is a list of affine symmetric matrix functions
//! `C(x) = F_0 + sum_j x_j F_j`, each required to be negative definite or
//! positive definite with a margin. The solver minimizes the worst
//! margin-adjusted violation
//!
//! ```text
//! v(x) = max_c  lambda_max( s_c C_c(x) ) + margin_c      (s_c = +1 for "< 0", -1 for "> 0")
//! ```
//!
//! over the ball `|x| <= variable_bound` with a primal log-barrier method on
//! the epigraph `s_c C_c(x) + margin_c I <= t I`. A point is reported feasible
//! once `v(x) < 0` holds under an eigenvalue re-evaluation that does not reuse
//! any solver state.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::model::RMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("total constraint dimension {dim} exceeds the cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("iteration limit reached after {iterations} Newton steps (best slack {best_slack:e})")]
    IterationLimit { iterations: usize, best_slack: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `C(x) <= -margin I`
    NegativeDefinite,
    /// `C(x) >= margin I`
    PositiveDefinite,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::NegativeDefinite => 1.0,
            Sense::PositiveDefinite => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub name: String,
    /// `F_0`.
    pub constant: RMatrix,
    /// Nonzero `F_j`, keyed by variable index. Absent indices contribute nothing.
    pub terms: Vec<(usize, RMatrix)>,
    pub sense: Sense,
    pub margin: f64,
}

impl LmiConstraint {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// `F_0 + sum_j x_j F_j`.
    pub fn evaluate(&self, x: &[f64]) -> RMatrix {
        let mut out = self.constant.clone();
        for (j, f) in &self.terms {
            out += f * x[*j];
        }
        out
    }

    /// Margin-adjusted violation: nonpositive iff the constraint holds.
    pub fn violation(&self, x: &[f64]) -> Result<f64, SdpError> {
        let (lo, hi) = eig_bounds(&self.evaluate(x))?;
        Ok(match self.sense {
            Sense::NegativeDefinite => hi + self.margin,
            Sense::PositiveDefinite => self.margin - lo,
        })
    }
}

/// Maps a named logical block (e.g. `U1`, `J`) to a run of scalar variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LmiFeasibilityProblem {
    pub num_vars: usize,
    pub constraints: Vec<LmiConstraint>,
    pub variable_metadata: Vec<VariableBlock>,
}

impl LmiFeasibilityProblem {
    pub fn total_dim(&self) -> usize {
        self.constraints.iter().map(LmiConstraint::dim).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        for c in &self.constraints {
            let n = c.constant.nrows();
            if c.constant.ncols() != n {
                return Err(SdpError::InvalidProblem(format!(
                    "`{}`: F_0 is not square",
                    c.name
                )));
            }
            if !(c.margin >= 0.0 && c.margin.is_finite()) {
                return Err(SdpError::InvalidProblem(format!(
                    "`{}`: bad margin",
                    c.name
                )));
            }
            check_symmetric(&c.constant, 1e-12).map_err(|_| {
                SdpError::InvalidProblem(format!("`{}`: F_0 not symmetric", c.name))
            })?;
            for (j, f) in &c.terms {
                if *j >= self.num_vars {
                    return Err(SdpError::InvalidProblem(format!(
                        "`{}`: variable index {j} >= num_vars {}",
                        c.name, self.num_vars
                    )));
                }
                if f.shape() != (n, n) {
                    return Err(SdpError::InvalidProblem(format!(
                        "`{}`: F_{} has the wrong shape",
                        c.name,
                        j + 1
                    )));
                }
                check_symmetric(f, 1e-12).map_err(|_| {
                    SdpError::InvalidProblem(format!("`{}`: F_{} not symmetric", c.name, j + 1))
                })?;
            }
        }
        Ok(())
    }

    /// Worst margin-adjusted violation over all constraints.
    pub fn worst_violation(&self, x: &[f64]) -> Result<f64, SdpError> {
        self.constraints
            .iter()
            .try_fold(f64::NEG_INFINITY, |acc, c| Ok(acc.max(c.violation(x)?)))
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Budget of Newton steps across all barrier stages.
    pub max_iterations: usize,
    /// Cap on the summed dimension of all constraint matrices.
    pub max_dim: usize,
    /// Radius of the ball the variables are confined to.
    pub variable_bound: f64,
    /// Stop as soon as the worst violation drops below `-headroom`.
    pub headroom: f64,
    /// Relative barrier gap at which the search is declared converged.
    pub gap_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            max_dim: 128,
            variable_bound: 1e4,
            headroom: 1e-9,
            gap_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Feasible {
        x: Vec<f64>,
        /// Worst violation at `x` (negative).
        slack: f64,
        iterations: usize,
    },
    Infeasible {
        /// Smallest worst violation seen (nonnegative).
        best_slack: f64,
        iterations: usize,
    },
}

impl Solution {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Solution::Feasible { .. })
    }
}

pub fn check_symmetric(s: &RMatrix, rel_tol: f64) -> Result<(), SdpError> {
    if !s.is_square() {
        return Err(SdpError::Asymmetric(f64::INFINITY));
    }
    let scale = s.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let n = s.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if worst > rel_tol * scale {
        return Err(SdpError::Asymmetric(worst));
    }
    Ok(())
}

/// Extremal eigenvalues `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn eig_bounds(s: &RMatrix) -> Result<(f64, f64), SdpError> {
    check_symmetric(s, 1e-10)?;
    if s.nrows() == 0 {
        return Ok((f64::INFINITY, f64::NEG_INFINITY));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok((eig.eigenvalues.min(), eig.eigenvalues.max()))
}

struct Barrier<'a> {
    problem: &'a LmiFeasibilityProblem,
    radius_sq: f64,
}

struct Evaluation {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Barrier<'_> {
    /// `t I - (s_c C_c(x) + margin_c I)` for every constraint.
    fn slacks(&self, x: &[f64], t: f64) -> Vec<RMatrix> {
        self.problem
            .constraints
            .iter()
            .map(|c| {
                let n = c.dim();
                let mut s = c.evaluate(x) * (-c.sense.sign());
                for i in 0..n {
                    s[(i, i)] += t - c.margin;
                }
                s
            })
            .collect()
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, x: &[f64], t: f64, tau: f64) -> Option<f64> {
        let q = self.radius_sq - x.iter().map(|v| v * v).sum::<f64>();
        if q <= 0.0 {
            return None;
        }
        let mut f = tau * t - q.ln();
        for s in self.slacks(x, t) {
            let chol = Cholesky::new(s)?;
            f -= 2.0
                * chol
                    .l_dirty()
                    .diagonal()
                    .iter()
                    .map(|d| d.ln())
                    .sum::<f64>();
        }
        f.is_finite().then_some(f)
    }

    fn evaluate(&self, x: &[f64], t: f64, tau: f64) -> Option<Evaluation> {
        let m = self.problem.num_vars;
        let dim = m + 1;
        let ti = m;
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        let q = self.radius_sq - x.iter().map(|v| v * v).sum::<f64>();
        if q <= 0.0 {
            return None;
        }
        let mut value = tau * t - q.ln();
        grad[ti] = tau;
        for j in 0..m {
            grad[j] += 2.0 * x[j] / q;
            hess[(j, j)] += 2.0 / q;
            for l in 0..m {
                hess[(j, l)] += 4.0 * x[j] * x[l] / (q * q);
            }
        }

        for (c, s) in self.problem.constraints.iter().zip(self.slacks(x, t)) {
            let n = c.dim();
            let chol = Cholesky::new(s)?;
            value -= 2.0
                * chol
                    .l_dirty()
                    .diagonal()
                    .iter()
                    .map(|d| d.ln())
                    .sum::<f64>();
            let sinv = chol.inverse();
            // W_a = S^{-1} dS/dz_a; dS/dx_j = -s_c F_j, dS/dt = I.
            let mut idx = Vec::with_capacity(c.terms.len() + 1);
            let mut ws = Vec::with_capacity(c.terms.len() + 1);
            for (j, f) in &c.terms {
                idx.push(*j);
                ws.push(&sinv * f * (-c.sense.sign()));
            }
            idx.push(ti);
            ws.push(sinv.clone());
            for (a, wa) in idx.iter().zip(&ws) {
                grad[*a] -= wa.trace();
            }
            for p in 0..ws.len() {
                let wpt = ws[p].transpose();
                for r in p..ws.len() {
                    let h = wpt.component_mul(&ws[r]).sum();
                    hess[(idx[p], idx[r])] += h;
                    if p != r {
                        hess[(idx[r], idx[p])] += h;
                    }
                }
            }
            debug_assert_eq!(sinv.nrows(), n);
        }
        value
            .is_finite()
            .then_some(Evaluation { value, grad, hess })
    }
}

/// Searches for `x` with every constraint satisfied at its margin.
///
/// Feasible answers are re-checked through [`eig_bounds`] before they are
/// returned. `Infeasible` means the barrier search converged (or its lower
/// bound proved) that no point in the variable ball reaches a negative worst
/// violation; the smallest violation seen is returned as evidence.
pub fn solve_feasibility(
    problem: &LmiFeasibilityProblem,
    opts: &SolverOptions,
) -> Result<Solution, SdpError> {
    problem.validate()?;
    let dim = problem.total_dim();
    if dim > opts.max_dim {
        return Err(SdpError::TooLarge {
            dim,
            cap: opts.max_dim,
        });
    }
    let m = problem.num_vars;
    let mut x = vec![0.0; m];
    let mut best_x = x.clone();
    let mut best_slack = problem.worst_violation(&x)?;
    if problem.constraints.is_empty() || best_slack < -opts.headroom {
        return finish(problem, best_x, 0);
    }

    let barrier = Barrier {
        problem,
        radius_sq: opts.variable_bound * opts.variable_bound,
    };
    let theta = dim as f64 + 1.0;
    let mut t = best_slack + 1.0;
    let mut tau = 1.0 / (1.0 + t.abs());
    let mut iterations = 0usize;

    loop {
        // centering
        let mut centered = false;
        for _ in 0..200 {
            if iterations >= opts.max_iterations {
                return Err(SdpError::IterationLimit {
                    iterations,
                    best_slack,
                });
            }
            iterations += 1;
            let ev = barrier.evaluate(&x, t, tau).ok_or_else(|| {
                SdpError::NumericalBreakdown("iterate left the barrier domain".into())
            })?;
            let step = newton_step(&ev.hess, &ev.grad)?;
            let decrement = -ev.grad.dot(&step);
            if !decrement.is_finite() {
                return Err(SdpError::NumericalBreakdown(
                    "non-finite Newton decrement".into(),
                ));
            }
            if decrement * 0.5 <= 1e-10 {
                centered = true;
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let xn: Vec<f64> = x
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                let tn = t + alpha * step[m];
                if let Some(f) = barrier.value(&xn, tn, tau) {
                    if f <= ev.value - 0.25 * alpha * decrement {
                        x = xn;
                        t = tn;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let v = problem.worst_violation(&x)?;
            if v < best_slack {
                best_slack = v;
                best_x.clone_from(&x);
            }
            if best_slack < -opts.headroom {
                return finish(problem, best_x, iterations);
            }
            if !moved {
                centered = true;
                break;
            }
        }

        let gap = theta / tau;
        if centered && t - gap > 0.0 {
            return Ok(Solution::Infeasible {
                best_slack: best_slack.max(0.0),
                iterations,
            });
        }
        if gap <= opts.gap_tol * (1.0 + t.abs()) {
            if best_slack < 0.0 {
                return finish(problem, best_x, iterations);
            }
            return Ok(Solution::Infeasible {
                best_slack,
                iterations,
            });
        }
        tau *= 8.0;
    }
}

fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>, SdpError> {
    if let Some(ch) = Cholesky::new(hess.clone()) {
        return Ok(-ch.solve(grad));
    }
    // Fall back to a lightly regularized system when round-off breaks definiteness.
    let n = hess.nrows();
    let shift = 1e-12 * hess.diagonal().amax().max(1.0);
    let reg = hess + DMatrix::identity(n, n) * shift;
    Cholesky::new(reg).map(|ch| -ch.solve(grad)).ok_or_else(|| {
        SdpError::NumericalBreakdown("Newton system is not positive definite".into())
    })
}

fn finish(
    problem: &LmiFeasibilityProblem,
    x: Vec<f64>,
    iterations: usize,
) -> Result<Solution, SdpError> {
    let slack = problem.worst_violation(&x)?;
    if slack < 0.0 {
        Ok(Solution::Feasible {
            x,
            slack,
            iterations,
        })
    } else {
        Ok(Solution::Infeasible {
            best_slack: slack,
            iterations,
        })
    }
}
