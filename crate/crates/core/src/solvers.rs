//! Dense least-squares solvers for `A x ≈ b`.
//!
//! All solvers are deterministic and return a [`SolverResult`] whose
//! `residual_norm` is recomputed from the returned coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition estimate above which a warning is attached to the result.
pub const CONDITION_WARNING_THRESHOLD: f64 = 1e12;

const PIVOT_RTOL: f64 = 1e-12;
const DUAL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl RegressionProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidDimension("design matrix must have at least one row and column".into()));
        }
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("regression data must be finite".into()));
        }
        Ok(RegressionProblem { a, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidArgument("ragged design matrix".into()));
        }
        let a = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(a, DVector::from_column_slice(b))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        (&self.b - &self.a * DVector::from_column_slice(x)).norm()
    }

    /// Problem restricted to the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidArgument("no columns selected".into()));
        }
        Ok(RegressionProblem { a: self.a.select_columns(cols), b: self.b.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition estimate of the final system, present only above
    /// [`CONDITION_WARNING_THRESHOLD`].
    pub condition_warning: Option<f64>,
    /// Set by thresholding solvers when every coefficient was pruned.
    #[serde(default)]
    pub all_pruned: bool,
}

impl SolverResult {
    fn finish(p: &RegressionProblem, x: Vec<f64>, iterations: usize, converged: bool) -> Self {
        let residual_norm = p.residual_norm(&x);
        SolverResult { x, residual_norm, iterations, converged, condition_warning: None, all_pruned: false }
    }
}

/// Cholesky solve of a symmetric positive definite system, failing on a pivot
/// below `PIVOT_RTOL` times the largest diagonal entry.
fn cholesky_solve(g: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = g.nrows();
    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(g[(i, i)].abs()));
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_RTOL * max_diag) {
            return Err(Error::Singular { column: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = rhs.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    Ok(y)
}

/// Ordinary least squares through the normal equations `AᵀA x = Aᵀb`.
pub fn solve_normal_equations(p: &RegressionProblem) -> Result<SolverResult> {
    solve_ridge(p, 0.0)
}

/// Ridge regression `x = (AᵀA + kI)⁻¹ Aᵀb`.
pub fn solve_ridge(p: &RegressionProblem, k: f64) -> Result<SolverResult> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge parameter must be >= 0, got {k}")));
    }
    let at = p.a.transpose();
    let mut g = &at * &p.a;
    if k > 0.0 {
        for i in 0..g.nrows() {
            g[(i, i)] += k;
        }
    }
    let x = cholesky_solve(&g, &(&at * &p.b))?;
    Ok(SolverResult::finish(p, x.as_slice().to_vec(), 1, true))
}

/// LSQR (Paige & Saunders) on the rectangular system. Stops when
/// `‖r‖ ≤ tol·‖b‖` or `‖Aᵀr‖ ≤ tol·‖A‖·‖r‖`; otherwise returns the last
/// iterate with `converged = false`.
pub fn solve_lsqr(p: &RegressionProblem, max_iterations: usize, tolerance: f64) -> Result<SolverResult> {
    if max_iterations == 0 {
        return Err(Error::InvalidArgument("LSQR needs at least one iteration".into()));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidArgument("tolerance must be >= 0".into()));
    }
    let (a, b) = (&p.a, &p.b);
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(SolverResult::finish(p, x.as_slice().to_vec(), 0, true));
    }
    let mut u = b / bnorm;
    let mut v = a.tr_mul(&u);
    let mut alpha = v.norm();
    if alpha == 0.0 {
        // b is orthogonal to the range of A; x = 0 is optimal.
        return Ok(SolverResult::finish(p, x.as_slice().to_vec(), 0, true));
    }
    v /= alpha;
    let mut w = v.clone();
    let mut phibar = bnorm;
    let mut rhobar = alpha;
    let mut anorm2 = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    for itn in 1..=max_iterations {
        iterations = itn;
        u = a * &v - alpha * &u;
        let beta = u.norm();
        if beta > 0.0 {
            u /= beta;
        }
        anorm2 += alpha * alpha + beta * beta;
        v = a.tr_mul(&u) - beta * &v;
        alpha = v.norm();
        if alpha > 0.0 {
            v /= alpha;
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;
        x += (phi / rho) * &w;
        w = &v - (theta / rho) * &w;

        let rnorm = phibar;
        let arnorm = alpha * (s * phi).abs();
        let anorm = anorm2.sqrt();
        if rnorm <= tolerance * bnorm || arnorm <= tolerance * anorm * rnorm {
            converged = true;
            break;
        }
    }
    Ok(SolverResult::finish(p, x.as_slice().to_vec(), iterations, converged))
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `‖Ax − b‖₂² + λ‖x‖₁`.
pub fn lasso_objective(p: &RegressionProblem, x: &[f64], lambda: f64) -> f64 {
    let r = p.residual_norm(x);
    r * r + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Lasso by proximal gradient (ISTA) on `‖Ax − b‖₂² + λ‖x‖₁`, starting from
/// zero. The gradient `2Aᵀ(Ax − b)` has Lipschitz constant `2λ_max(AᵀA)`,
/// whose inverse is the step.
pub fn solve_lasso(p: &RegressionProblem, lambda: f64, max_iterations: usize, tolerance: f64) -> Result<SolverResult> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let at = p.a.transpose();
    let g = &at * &p.a;
    let atb = &at * &p.b;
    let lmax = g.clone().symmetric_eigenvalues().iter().fold(0.0_f64, |m, &e| m.max(e));
    let n = p.ncols();
    if lmax <= 0.0 {
        return Ok(SolverResult::finish(p, vec![0.0; n], 0, true));
    }
    let step = 1.0 / (2.0 * lmax);
    let mut x = DVector::<f64>::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    for itn in 1..=max_iterations {
        iterations = itn;
        let grad = 2.0 * (&g * &x - &atb);
        let next = (&x - step * grad).map(|v| soft_threshold(v, step * lambda));
        let delta = (&next - &x).amax();
        x = next;
        if delta < tolerance {
            converged = true;
            break;
        }
    }
    Ok(SolverResult::finish(p, x.as_slice().to_vec(), iterations, converged))
}

/// Sequentially thresholded ridge regression: ridge-solve on the active
/// columns, drop every coefficient with `|x_i| < threshold`, repeat until the
/// active set is stable.
pub fn solve_stlsq(p: &RegressionProblem, ridge_k: f64, threshold: f64, max_sweeps: usize) -> Result<SolverResult> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
    }
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument("STLSQ needs at least one sweep".into()));
    }
    let n = p.ncols();
    let mut active: Vec<usize> = (0..n).collect();
    let mut x = vec![0.0; n];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let sub = p.select_columns(&active)?;
        let fit = solve_ridge(&sub, ridge_k)?;
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut kept = Vec::with_capacity(active.len());
        for (&col, &v) in active.iter().zip(&fit.x) {
            if v.abs() >= threshold {
                x[col] = v;
                kept.push(col);
            }
        }
        if kept.is_empty() {
            let mut r = SolverResult::finish(p, vec![0.0; n], sweeps, true);
            r.all_pruned = true;
            return Ok(r);
        }
        if kept.len() == active.len() {
            converged = true;
            break;
        }
        active = kept;
    }
    Ok(SolverResult::finish(p, x, sweeps, converged))
}

struct QrSolve {
    x: Vec<f64>,
    condition: f64,
}

/// Least squares on the selected columns via thin QR. Returns `None` when the
/// triangular factor has a zero diagonal.
fn qr_least_squares(p: &RegressionProblem, cols: &[usize]) -> Option<QrSolve> {
    if cols.len() > p.nrows() {
        return None;
    }
    let qr = p.a.select_columns(cols).qr();
    let q = qr.q();
    let r = qr.r();
    let diag: Vec<f64> = (0..cols.len()).map(|i| r[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0_f64, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmin == 0.0 || !dmin.is_finite() {
        return None;
    }
    let qtb = q.tr_mul(&p.b);
    let x = r.solve_upper_triangular(&qtb)?;
    Some(QrSolve { x: x.as_slice().to_vec(), condition: dmax / dmin })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NnlsOptions {
    /// Outer-iteration cap; `None` means `3 · columns`.
    pub max_iterations: Option<usize>,
}

/// Non-negative least squares by the Lawson–Hanson active-set method.
pub fn solve_nnls(p: &RegressionProblem) -> Result<SolverResult> {
    solve_nnls_with(p, NnlsOptions::default())
}

pub fn solve_nnls_with(p: &RegressionProblem, opts: NnlsOptions) -> Result<SolverResult> {
    let n = p.ncols();
    let max_iter = opts.max_iterations.unwrap_or(3 * n);
    let at = p.a.transpose();
    let atb = &at * &p.b;
    let dual_tol = DUAL_RTOL * atb.amax();

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    // Columns rejected as entering candidates since the passive set last grew.
    let mut rejected = vec![false; n];
    let mut iterations = 0;
    let mut converged = true;
    let mut worst_condition = 0.0_f64;

    let dual = |x: &[f64]| -> DVector<f64> { &atb - &at * (&p.a * DVector::from_column_slice(x)) };
    let mut w = dual(&x);

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > dual_tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if w[b] >= w[j] => Some(b),
                _ => Some(j),
            });
        let Some(j) = candidate else { break };
        if iterations >= max_iter {
            converged = false;
            break;
        }
        iterations += 1;

        let mut cols: Vec<usize> = (0..n).filter(|&i| passive[i] || i == j).collect();
        let Some(trial) = qr_least_squares(p, &cols) else {
            rejected[j] = true;
            continue;
        };
        let pos = cols.iter().position(|&c| c == j).unwrap();
        if !(trial.x[pos] > 0.0) {
            rejected[j] = true;
            continue;
        }
        passive[j] = true;
        rejected.iter_mut().for_each(|r| *r = false);
        let mut z = trial.x;
        worst_condition = worst_condition.max(trial.condition);

        // Inner loop: step back toward feasibility until the passive solution
        // is strictly positive.
        loop {
            if z.iter().all(|&v| v > 0.0) {
                for (&c, &v) in cols.iter().zip(&z) {
                    x[c] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            let mut leaving = cols[0];
            for (&c, &v) in cols.iter().zip(&z) {
                if v <= 0.0 {
                    let t = x[c] / (x[c] - v);
                    if t < alpha {
                        alpha = t;
                        leaving = c;
                    }
                }
            }
            for (&c, &v) in cols.iter().zip(&z) {
                x[c] += alpha * (v - x[c]);
            }
            x[leaving] = 0.0;
            for &c in &cols {
                if x[c] <= 0.0 {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            cols.retain(|&c| passive[c]);
            if cols.is_empty() {
                break;
            }
            match qr_least_squares(p, &cols) {
                Some(s) => {
                    worst_condition = worst_condition.max(s.condition);
                    z = s.x;
                }
                None => break,
            }
        }
        w = dual(&x);
    }

    let active: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0).collect();
    let final_condition = if active.is_empty() {
        1.0
    } else {
        qr_least_squares(p, &active).map_or(f64::INFINITY, |s| s.condition)
    };
    let condition = worst_condition.max(final_condition);
    let mut res = SolverResult::finish(p, x, iterations, converged);
    if condition > CONDITION_WARNING_THRESHOLD {
        res.condition_warning = Some(condition);
    }
    Ok(res)
}

/// Solver selector with options, as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "lowercase")]
pub enum SolverChoice {
    Nnls { max_iterations: Option<usize> },
    Lsq,
    Ridge { k: f64 },
    Lsqr { max_iterations: Option<usize>, tolerance: f64 },
    Lasso { lambda: f64, max_iterations: usize, tolerance: f64 },
    Stlsq { ridge_k: f64, threshold: f64, max_sweeps: usize },
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Nnls { .. } => "nnls",
            SolverChoice::Lsq => "lsq",
            SolverChoice::Ridge { .. } => "ridge",
            SolverChoice::Lsqr { .. } => "lsqr",
            SolverChoice::Lasso { .. } => "lasso",
            SolverChoice::Stlsq { .. } => "stlsq",
        }
    }

    pub fn solve(&self, p: &RegressionProblem) -> Result<SolverResult> {
        match *self {
            SolverChoice::Nnls { max_iterations } => solve_nnls_with(p, NnlsOptions { max_iterations }),
            SolverChoice::Lsq => solve_normal_equations(p),
            SolverChoice::Ridge { k } => solve_ridge(p, k),
            SolverChoice::Lsqr { max_iterations, tolerance } => {
                let cap = max_iterations.unwrap_or(2 * p.nrows().max(p.ncols()));
                solve_lsqr(p, cap, tolerance)
            }
            SolverChoice::Lasso { lambda, max_iterations, tolerance } => solve_lasso(p, lambda, max_iterations, tolerance),
            SolverChoice::Stlsq { ridge_k, threshold, max_sweeps } => solve_stlsq(p, ridge_k, threshold, max_sweeps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn prob(rows: &[&[f64]], b: &[f64]) -> RegressionProblem {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        RegressionProblem::from_rows(&rows, b).unwrap()
    }

    #[test]
    fn problem_validation() {
        assert!(RegressionProblem::from_rows(&[], &[]).is_err());
        assert!(RegressionProblem::from_rows(&[vec![1.0]], &[1.0, 2.0]).is_err());
        assert!(RegressionProblem::from_rows(&[vec![f64::NAN]], &[1.0]).is_err());
    }

    #[test]
    fn normal_equations_identity_and_mean() {
        let r = solve_normal_equations(&prob(&[&[1.0, 0.0], &[0.0, 1.0]], &[3.0, 4.0])).unwrap();
        assert_eq!(r.x, vec![3.0, 4.0]);
        assert!(r.converged);
        let r = solve_normal_equations(&prob(&[&[1.0], &[1.0]], &[0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn normal_equations_singular_names_column() {
        let err = solve_normal_equations(&prob(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]], &[1.0, 2.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { column: 1, .. }), "{err:?}");
    }

    #[test]
    fn ridge_examples() {
        let p = prob(&[&[1.0]], &[1.0]);
        assert_abs_diff_eq!(solve_ridge(&p, 1.0).unwrap().x[0], 0.5, epsilon = 1e-15);
        assert!(solve_ridge(&p, -1.0).is_err());
        let p = prob(&[&[1.0, 2.0], &[3.0, 1.0], &[0.5, -1.0]], &[1.0, 2.0, 0.0]);
        assert_eq!(solve_ridge(&p, 0.0).unwrap(), solve_normal_equations(&p).unwrap());
    }

    #[test]
    fn ridge_tames_near_collinear_design() {
        let e = 1e-8;
        let p = prob(&[&[1.0, 1.0], &[1.0, 1.0 + e]], &[1.0, 1.0]);
        let k = 0.1;
        // Closed forms: A is invertible with A⁻¹b = (1, 0); the ridge solution
        // comes from the explicit 2x2 inverse of AᵀA + kI.
        let ls_norm = 1.0_f64;
        let (g11, g12, g22) = (2.0 + k, 2.0 + e, 1.0 + (1.0 + e) * (1.0 + e) + k);
        let (r1, r2) = (2.0, 2.0 + e);
        let det = g11 * g22 - g12 * g12;
        let expect = [(g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det];
        let r = solve_ridge(&p, k).unwrap();
        assert!(r.x.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(r.x[0], expect[0], epsilon = 1e-9);
        assert_abs_diff_eq!(r.x[1], expect[1], epsilon = 1e-9);
        let norm = r.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < ls_norm);
    }

    #[test]
    fn lsqr_square_consistent() {
        let r = solve_lsqr(&prob(&[&[2.0, 0.0], &[0.0, 4.0]], &[2.0, 4.0]), 10, 1e-12).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-12);
        assert!(solve_lsqr(&prob(&[&[1.0]], &[1.0]), 0, 1e-8).is_err());
    }

    #[test]
    fn lasso_soft_threshold_closed_forms() {
        let id = [&[1.0, 0.0][..], &[0.0, 1.0][..]];
        let r = solve_lasso(&prob(&id, &[2.0, 0.1]), 1.0, 10_000, 1e-14).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.5, epsilon = 1e-12);
        assert_eq!(r.x[1], 0.0);
        let r = solve_lasso(&prob(&id, &[0.4, -0.3]), 1.0, 10_000, 1e-14).unwrap();
        assert_eq!(r.x, vec![0.0, 0.0]);
        assert!(solve_lasso(&prob(&id, &[0.4, -0.3]), -1.0, 10, 1e-8).is_err());
    }

    #[test]
    fn stlsq_direct_thresholding() {
        let p = prob(&[&[1.0, 0.0], &[0.0, 1.0]], &[5.0, 0.01]);
        let r = solve_stlsq(&p, 0.0, 0.1, 10).unwrap();
        assert_eq!(r.x, vec![5.0, 0.0]);
        assert!(r.converged && !r.all_pruned);
        let r = solve_stlsq(&p, 0.0, 100.0, 10).unwrap();
        assert!(r.all_pruned);
        assert_eq!(r.x, vec![0.0, 0.0]);
    }

    #[test]
    fn nnls_small_examples() {
        let id = [&[1.0, 0.0][..], &[0.0, 1.0][..]];
        assert_eq!(solve_nnls(&prob(&id, &[1.0, -1.0])).unwrap().x, vec![1.0, 0.0]);
        assert_eq!(solve_nnls(&prob(&id, &[0.5, 2.0])).unwrap().x, vec![0.5, 2.0]);
        let r = solve_nnls(&prob(&[&[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]], &[2.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-12);
        assert!(r.residual_norm < 1e-12);
    }

    #[test]
    fn nnls_brute_force_grid() {
        // A = [[1,1],[0,1],[1,0]], b = (2,1,1): grid search over [0,2]² on a
        // 1e-3 lattice must not beat the solver.
        let p = prob(&[&[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]], &[2.0, 1.0, 1.0]);
        let r = solve_nnls(&p).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=200 {
            for j in 0..=200 {
                best = best.min(p.residual_norm(&[f64::from(i) * 0.01, f64::from(j) * 0.01]));
            }
        }
        assert!(r.residual_norm <= best + 1e-12);
    }

    #[test]
    fn nnls_parallel_columns_keep_one() {
        // Columns 1 and 2 are parallel (like X+X->0 and X+X->X).
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = f64::from(i) * 0.1;
                vec![t, -t * t, -0.5 * t * t]
            })
            .collect();
        let b: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 1.5 * r[1]).collect();
        let p = RegressionProblem::from_rows(&rows, &b).unwrap();
        let r = solve_nnls(&p).unwrap();
        assert!(r.x.iter().all(|&v| v >= 0.0));
        assert!(r.residual_norm < 1e-10);
        assert_eq!(r.x.iter().filter(|&&v| v > 0.0).count(), 2);
    }

    #[test]
    fn solver_choice_dispatch() {
        let p = prob(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, -1.0]);
        assert_eq!(SolverChoice::Nnls { max_iterations: None }.solve(&p).unwrap().x, vec![1.0, 0.0]);
        assert_eq!(SolverChoice::Lsq.solve(&p).unwrap().x, vec![1.0, -1.0]);
        let s = serde_json::to_string(&SolverChoice::Ridge { k: 0.5 }).unwrap();
        assert_eq!(s, r#"{"solver":"ridge","k":0.5}"#);
    }
}
