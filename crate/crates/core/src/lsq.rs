//! Levenberg–Marquardt for small dense nonlinear least-squares problems.
//!
//! Used by the exponential-sum fitter (on log decay rates) and by every
//! scaling fit. Step: `(JᵀJ + λ D) δ = −Jᵀr` with `D = diag(JᵀJ)` floored,
//! solved by Cholesky; λ shrinks on accepted steps and grows on rejections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A residual vector `r(p)` with Jacobian `∂r/∂p`.
pub trait LeastSquaresProblem {
    /// Residuals at `p`, or `None` if `p` is outside the model's domain.
    fn residuals(&mut self, p: &DVector<f64>) -> Option<DVector<f64>>;
    /// Jacobian at the point where `residuals` was last evaluated successfully.
    fn jacobian(&mut self, p: &DVector<f64>) -> DMatrix<f64>;
    /// Map a trial point back into the feasible box. Default: identity.
    fn project(&self, _p: &mut DVector<f64>) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of ‖r‖² in an accepted step falls below this.
    pub ftol: f64,
    /// Stop when ‖δ‖ ≤ xtol (‖p‖ + xtol).
    pub xtol: f64,
    /// Stop when the scaled gradient ‖Jᵀr‖∞ falls below this.
    pub gtol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, ftol: 1e-15, xtol: 1e-15, gtol: 1e-300, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    /// ‖r‖² at `params`.
    pub cost: f64,
    pub iterations: usize,
    /// True when a tolerance test (not the iteration cap) ended the run.
    pub converged: bool,
}

const LAMBDA_MAX: f64 = 1e16;

/// Minimise ‖r(p)‖² starting from `p0`.
///
/// Fails only if `p0` itself is infeasible.
pub fn levenberg_marquardt<P: LeastSquaresProblem>(
    problem: &mut P,
    p0: DVector<f64>,
    opts: &LmOptions,
) -> Result<LmOutcome> {
    let mut p = p0;
    problem.project(&mut p);
    let mut r = problem
        .residuals(&p)
        .ok_or_else(|| Error::domain("initial parameters outside the model domain"))?;
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let n = p.len();
    let mut iterations = 0;
    let mut converged = false;
    let mut jac = problem.jacobian(&p);

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.amax() <= opts.gtol || cost == 0.0 {
            converged = true;
            break;
        }
        let diag_floor = jtj.diagonal().amax().max(f64::MIN_POSITIVE) * 1e-14;
        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = -chol.solve(&grad);
            let mut trial = &p + &step;
            problem.project(&mut trial);
            let Some(r_trial) = problem.residuals(&trial) else {
                lambda *= 4.0;
                continue;
            };
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial < cost {
                let rel = (cost - cost_trial) / cost;
                let moved = (&trial - &p).norm();
                let scale = p.norm();
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if rel < opts.ftol || moved <= opts.xtol * (scale + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction at any damping: a (local) minimum to round-off.
            converged = true;
            // Restore the problem's cached state at the current point.
            let _ = problem.residuals(&p);
            break;
        }
        jac = problem.jacobian(&p);
        if converged {
            break;
        }
    }
    Ok(LmOutcome { params: p, residuals: r, cost, iterations, converged })
}

/// `(JᵀJ)⁻¹`, failing with `SingularFit` if J is numerically rank deficient.
pub fn normal_covariance(jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = jac.ncols();
    if jac.nrows() < n {
        return Err(Error::SingularFit);
    }
    // Column scaling so the rank test is not fooled by parameter units.
    let mut scaled = jac.clone();
    let mut scales = DVector::zeros(n);
    for j in 0..n {
        let s = scaled.column(j).norm();
        if s == 0.0 || !s.is_finite() {
            return Err(Error::SingularFit);
        }
        scales[j] = s;
        scaled.column_mut(j).unscale_mut(s);
    }
    let svd = scaled.svd(false, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(Error::SingularFit);
    }
    let v_t = svd.v_t.ok_or(Error::SingularFit)?;
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let s2 = svd.singular_values[k] * svd.singular_values[k];
        let row = v_t.row(k);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] += row[i] * row[j] / s2;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] /= scales[i] * scales[j];
        }
    }
    Ok(inv)
}

/// Weighted linear least squares `min ‖diag(√w)(A x − y)‖` via SVD.
///
/// Singular values below `rcond · σ_max` are dropped.
pub fn weighted_linear_lsq(a: &DMatrix<f64>, y: &DVector<f64>, sqrt_w: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let mut aw = a.clone();
    for (i, mut row) in aw.row_iter_mut().enumerate() {
        row *= sqrt_w[i];
    }
    let yw = y.component_mul(sqrt_w);
    let svd = aw.svd(true, true);
    let eps = rcond * svd.singular_values.max();
    svd.solve(&yw, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = c0 exp(c1 x), a textbook nonlinear fit.
    struct ExpModel {
        x: alloc::vec::Vec<f64>,
        y: alloc::vec::Vec<f64>,
    }

    impl LeastSquaresProblem for ExpModel {
        fn residuals(&mut self, p: &DVector<f64>) -> Option<DVector<f64>> {
            Some(DVector::from_iterator(
                self.x.len(),
                self.x.iter().zip(&self.y).map(|(x, y)| p[0] * (p[1] * x).exp() - y),
            ))
        }
        fn jacobian(&mut self, p: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_fn(self.x.len(), 2, |i, j| {
                let e = (p[1] * self.x[i]).exp();
                if j == 0 { e } else { p[0] * self.x[i] * e }
            })
        }
    }

    #[test]
    fn recovers_exponential() {
        let x: alloc::vec::Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|x| 2.5 * (-1.3 * x).exp()).collect();
        let mut m = ExpModel { x, y };
        let out = levenberg_marquardt(&mut m, DVector::from_vec(alloc::vec![1.0, 0.0]), &LmOptions::default()).unwrap();
        assert!((out.params[0] - 2.5).abs() < 1e-10);
        assert!((out.params[1] + 1.3).abs() < 1e-10);
        assert!(out.converged);
    }

    #[test]
    fn covariance_rejects_rank_deficiency() {
        let j = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(normal_covariance(&j), Err(Error::SingularFit)));
        let j = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let c = normal_covariance(&j).unwrap();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-14 && (c[(1, 1)] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn weighted_linear_solution() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let y = DVector::from_vec(alloc::vec![1.0, 2.0, 3.0]);
        let w = DVector::from_vec(alloc::vec![1.0, 0.0, 1.0]);
        let x = weighted_linear_lsq(&a, &y, &w, 1e-14);
        assert!((x[0] - 2.0).abs() < 1e-14);
    }
}
