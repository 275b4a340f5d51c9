//! Equation learning: derivative estimation, design matrices, and the
//! coupled (reaction library, NNLS) and decoupled (monomial, per-component)
//! fits.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_steps, DEFAULT_BLOWUP_BOUND};
use crate::poly::{Monomial, PolynomialOde};
use crate::reactions::{RateVector, ReactionLibrary};
use crate::series::TimeSeries;
use crate::solvers::{solve_nnls, RegressionProblem, SolverChoice, SolverResult};

/// Time derivatives estimated on the grid of the source series, `N × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    dim: usize,
    data: Vec<f64>,
}

impl DerivativeEstimate {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.data.chunks_exact(self.dim).map(|r| r[i]).collect()
    }

    /// Components stacked end to end: all of component 0, then component 1, ...
    pub fn stacked(&self) -> Vec<f64> {
        (0..self.dim).flat_map(|i| self.component(i)).collect()
    }
}

/// Second-order finite differences: central in the interior, one-sided
/// three-point stencils at both ends. Exact for quadratics.
pub fn finite_difference(ts: &TimeSeries) -> Result<DerivativeEstimate> {
    let n = ts.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("finite differences need at least 3 points, got {n}")));
    }
    let d = ts.dim();
    let h = ts.h();
    let mut data = vec![0.0; n * d];
    for i in 0..d {
        let y = |k: usize| ts.row(k)[i];
        data[i] = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h);
        for k in 1..n - 1 {
            data[k * d + i] = (y(k + 1) - y(k - 1)) / (2.0 * h);
        }
        data[(n - 1) * d + i] = (3.0 * y(n - 1) - 4.0 * y(n - 2) + y(n - 3)) / (2.0 * h);
    }
    Ok(DerivativeEstimate { dim: d, data })
}

/// Optional smoothing applied to the data before differencing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Centred moving average over `2·half_width + 1` points, truncated at
    /// the ends.
    MovingAverage { half_width: usize },
}

impl Smoothing {
    pub fn apply(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        match *self {
            Smoothing::None => Ok(ts.clone()),
            Smoothing::MovingAverage { half_width } => {
                let (n, d) = (ts.len(), ts.dim());
                let mut data = vec![0.0; n * d];
                for k in 0..n {
                    let lo = k.saturating_sub(half_width);
                    let hi = (k + half_width).min(n - 1);
                    for i in 0..d {
                        let s: f64 = (lo..=hi).map(|j| ts.row(j)[i]).sum();
                        data[k * d + i] = s / (hi - lo + 1) as f64;
                    }
                }
                TimeSeries::new(ts.t0(), ts.h(), d, data)
            }
        }
    }
}

/// Keeps rows `0, stride, 2·stride, ...`; the step becomes `stride · h`.
pub fn subsample(ts: &TimeSeries, stride: usize) -> Result<TimeSeries> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    if stride == 1 {
        return Ok(ts.clone());
    }
    let n = (ts.len() - 1) / stride + 1;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("subsampling by {stride} leaves {n} points, need at least 3")));
    }
    let data: Vec<f64> = (0..n).flat_map(|k| ts.row(k * stride).to_vec()).collect();
    TimeSeries::new(ts.t0(), ts.h() * stride as f64, ts.dim(), data)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMeta {
    Reaction(usize),
    Monomial(Monomial),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `d·N` rows, component-major.
    Coupled,
    /// `N` rows, shared by every component.
    Decoupled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub entries: DMatrix<f64>,
    pub columns: Vec<ColumnMeta>,
    pub layout: Layout,
}

/// Row `i·N + n`, column `j` holds `ν_j[i] · a_j(Y(t_n))`.
pub fn coupled_design_matrix(ts: &TimeSeries, lib: &ReactionLibrary) -> Result<DesignMatrix> {
    if ts.dim() != lib.dim() {
        return Err(Error::DimensionMismatch { expected: lib.dim(), got: ts.dim() });
    }
    let (n, d) = (ts.len(), ts.dim());
    let mut entries = DMatrix::<f64>::zeros(d * n, lib.len());
    for (j, r) in lib.reactions().iter().enumerate() {
        for (k, y) in ts.rows().enumerate() {
            let a = r.propensity_unchecked(y);
            for (i, &nu) in r.stoich().iter().enumerate() {
                if nu != 0 {
                    entries[(i * n + k, j)] = f64::from(nu) * a;
                }
            }
        }
    }
    let columns = lib.reactions().iter().map(|r| ColumnMeta::Reaction(r.id())).collect();
    Ok(DesignMatrix { entries, columns, layout: Layout::Coupled })
}

/// Row `n` holds the monomials evaluated at `Y(t_n)`.
pub fn decoupled_design_matrix(ts: &TimeSeries, monomials: &[Monomial]) -> Result<DesignMatrix> {
    if monomials.is_empty() {
        return Err(Error::InvalidArgument("monomial list is empty".into()));
    }
    for m in monomials {
        if m.dim() != ts.dim() {
            return Err(Error::DimensionMismatch { expected: ts.dim(), got: m.dim() });
        }
        if !(1..=2).contains(&m.degree()) {
            return Err(Error::InvalidArgument(format!("monomial {:?} must have degree 1 or 2", m.0)));
        }
    }
    let entries = DMatrix::from_fn(ts.len(), monomials.len(), |k, j| monomials[j].eval(ts.row(k)));
    let columns = monomials.iter().cloned().map(ColumnMeta::Monomial).collect();
    Ok(DesignMatrix { entries, columns, layout: Layout::Decoupled })
}

/// The decoupled baseline library `(x, x², z, z², xz)` at d=2; in general all
/// linear terms followed by all squares and then the cross terms.
pub fn default_monomials(dim: usize) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = Vec::new();
    for i in 0..dim {
        out.push(Monomial::linear(dim, i));
        out.push(Monomial::quadratic(dim, i, i));
    }
    for i in 0..dim {
        for j in i + 1..dim {
            out.push(Monomial::quadratic(dim, i, j));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficients {
    Rates(RateVector),
    /// One coefficient vector per component, aligned with `monomials`.
    PerComponent { monomials: Vec<Monomial>, values: Vec<Vec<f64>> },
}

/// Mean squared errors of the re-integrated model against the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub trajectory: Vec<f64>,
    #[serde(rename = "final")]
    pub final_point: Vec<f64>,
    /// Smallest state value reached by the model trajectory; negative values
    /// are reported, never clamped.
    pub min_state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: PolynomialOde,
    pub coefficients: Coefficients,
    /// Reaction ids with a strictly positive rate (coupled fits only).
    pub active_reactions: Vec<usize>,
    /// Reaction ids removed from the library before fitting.
    pub excluded_reactions: Vec<usize>,
    pub residual_norm: f64,
    /// `None` when the re-integrated model blew up; see `instability_time`.
    pub mse: Option<MseReport>,
    pub instability_time: Option<f64>,
    /// One entry per regression solved.
    pub solver: Vec<SolverResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub smoothing: Smoothing,
}

/// Integrates `model` from `y0` on the grid of `ts` and compares to it.
pub fn trajectory_mse(model: &PolynomialOde, ts: &TimeSeries, y0: &[f64]) -> Result<MseReport> {
    if model.dim() != ts.dim() {
        return Err(Error::DimensionMismatch { expected: ts.dim(), got: model.dim() });
    }
    let sim = integrate_steps(model, y0, ts.t0(), ts.h(), ts.len() - 1, DEFAULT_BLOWUP_BOUND)?;
    let (n, d) = (ts.len(), ts.dim());
    let mut trajectory = vec![0.0; d];
    for (a, b) in sim.rows().zip(ts.rows()) {
        for i in 0..d {
            trajectory[i] += (a[i] - b[i]).powi(2);
        }
    }
    trajectory.iter_mut().for_each(|v| *v /= n as f64);
    let final_point = sim.last().iter().zip(ts.last()).map(|(a, b)| (a - b).powi(2)).collect();
    let min_state = sim.data().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MseReport { trajectory, final_point, min_state })
}

fn score(model: &PolynomialOde, ts: &TimeSeries) -> Result<(Option<MseReport>, Option<f64>)> {
    match trajectory_mse(model, ts, ts.row(0)) {
        Ok(m) => Ok((Some(m), None)),
        Err(Error::Instability { time }) => Ok((None, Some(time))),
        Err(e) => Err(e),
    }
}

fn prepare(ts: &TimeSeries, opts: &FitOptions) -> Result<(TimeSeries, DerivativeEstimate)> {
    if ts.len() < 3 {
        return Err(Error::InvalidArgument(format!("fitting needs at least 3 time points, got {}", ts.len())));
    }
    let smoothed = opts.smoothing.apply(ts)?;
    let deriv = finite_difference(&smoothed)?;
    Ok((smoothed, deriv))
}

/// Coupled fit: stacked derivatives regressed on the reaction design matrix
/// by NNLS.
pub fn fit_coupled(ts: &TimeSeries, lib: &ReactionLibrary) -> Result<FitResult> {
    fit_coupled_with(ts, lib, &BTreeSet::new(), &FitOptions::default())
}

/// [`fit_coupled`] with the reactions in `excluded` (0-based ids) removed.
/// Rates stay indexed by the original ids; excluded entries are zero and
/// listed in `excluded_reactions`.
pub fn prune_and_refit(ts: &TimeSeries, lib: &ReactionLibrary, excluded: &BTreeSet<usize>) -> Result<FitResult> {
    fit_coupled_with(ts, lib, excluded, &FitOptions::default())
}

pub fn fit_coupled_with(
    ts: &TimeSeries,
    lib: &ReactionLibrary,
    excluded: &BTreeSet<usize>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if ts.dim() != lib.dim() {
        return Err(Error::DimensionMismatch { expected: lib.dim(), got: ts.dim() });
    }
    if let Some(&bad) = excluded.iter().find(|&&j| j >= lib.len()) {
        return Err(Error::InvalidArgument(format!("reaction id {} is not in the library", bad + 1)));
    }
    let keep: Vec<usize> = (0..lib.len()).filter(|j| !excluded.contains(j)).collect();
    if keep.is_empty() {
        return Err(Error::InvalidArgument("every reaction was excluded".into()));
    }
    let (data, deriv) = prepare(ts, opts)?;
    let design = coupled_design_matrix(&data, lib)?;
    let a = design.entries.select_columns(&keep);
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("design matrix is identically zero".into()));
    }
    let problem = RegressionProblem::new(a, DVector::from_vec(deriv.stacked()))?;
    let sol = solve_nnls(&problem)?;

    let mut rates = vec![0.0; lib.len()];
    for (&j, &k) in keep.iter().zip(&sol.x) {
        rates[j] = k;
    }
    let rates = RateVector::new(rates)?;
    let model = lib.assemble(&rates)?;
    let active_reactions = (0..lib.len()).filter(|&j| rates.values()[j] > 0.0).collect();
    let (mse, instability_time) = score(&model, &data)?;
    Ok(FitResult {
        model,
        coefficients: Coefficients::Rates(rates),
        active_reactions,
        excluded_reactions: excluded.iter().copied().collect(),
        residual_norm: sol.residual_norm,
        mse,
        instability_time,
        solver: vec![sol],
    })
}

/// Decoupled baseline: one independent regression per component over a
/// shared monomial library. Coefficients may take either sign.
pub fn fit_decoupled(ts: &TimeSeries, monomials: &[Monomial], solver: &SolverChoice) -> Result<FitResult> {
    fit_decoupled_with(ts, monomials, solver, &FitOptions::default())
}

pub fn fit_decoupled_with(
    ts: &TimeSeries,
    monomials: &[Monomial],
    solver: &SolverChoice,
    opts: &FitOptions,
) -> Result<FitResult> {
    let (data, deriv) = prepare(ts, opts)?;
    let design = decoupled_design_matrix(&data, monomials)?;
    let mut model = PolynomialOde::zero(ts.dim());
    let mut values = Vec::with_capacity(ts.dim());
    let mut results = Vec::with_capacity(ts.dim());
    let mut sq = 0.0;
    for i in 0..ts.dim() {
        let problem = RegressionProblem::new(design.entries.clone(), DVector::from_vec(deriv.component(i)))?;
        let sol = solver.solve(&problem)?;
        for (m, &c) in monomials.iter().zip(&sol.x) {
            model.add_term(i, m, c)?;
        }
        sq += sol.residual_norm * sol.residual_norm;
        values.push(sol.x.clone());
        results.push(sol);
    }
    let (mse, instability_time) = score(&model, &data)?;
    Ok(FitResult {
        model,
        coefficients: Coefficients::PerComponent { monomials: monomials.to_vec(), values },
        active_reactions: Vec::new(),
        excluded_reactions: Vec::new(),
        residual_norm: sq.sqrt(),
        mse,
        instability_time,
        solver: results,
    })
}
