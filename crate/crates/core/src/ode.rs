//! Fixed-step integration of polynomial ODE systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::PolynomialOde;
use crate::series::TimeSeries;

pub const DEFAULT_BLOWUP_BOUND: f64 = 1e6;

/// Step used by [`find_equilibrium`].
pub const EQUILIBRIUM_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub t_end: f64,
    pub h: f64,
    pub blowup_bound: f64,
}

impl IntegrationConfig {
    pub fn new(t_end: f64, h: f64) -> Result<Self> {
        let cfg = IntegrationConfig { t_end, h, blowup_bound: DEFAULT_BLOWUP_BOUND };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !(self.t_end > 0.0) || self.h > self.t_end * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < h <= t_end, got h = {}, t_end = {}",
                self.h, self.t_end
            )));
        }
        if !(self.blowup_bound > 0.0) {
            return Err(Error::InvalidArgument("blow-up bound must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / h)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }
}

pub fn eval_rhs(model: &PolynomialOde, y: &[f64]) -> Result<Vec<f64>> {
    model.eval(y)
}

struct Rk4<'a> {
    model: &'a PolynomialOde,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    fn new(model: &'a PolynomialOde) -> Self {
        let d = model.dim();
        Rk4 { model, k: std::array::from_fn(|_| vec![0.0; d]), tmp: vec![0.0; d] }
    }

    fn step(&mut self, y: &mut [f64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        self.model.eval_into(y, k1);
        for ((t, &yi), &ki) in self.tmp.iter_mut().zip(y.iter()).zip(k1.iter()) {
            *t = yi + 0.5 * h * ki;
        }
        self.model.eval_into(&self.tmp, k2);
        for ((t, &yi), &ki) in self.tmp.iter_mut().zip(y.iter()).zip(k2.iter()) {
            *t = yi + 0.5 * h * ki;
        }
        self.model.eval_into(&self.tmp, k3);
        for ((t, &yi), &ki) in self.tmp.iter_mut().zip(y.iter()).zip(k3.iter()) {
            *t = yi + h * ki;
        }
        self.model.eval_into(&self.tmp, k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn check_start(model: &PolynomialOde, y0: &[f64]) -> Result<()> {
    if y0.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: y0.len() });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial state must be finite".into()));
    }
    Ok(())
}

/// Classical RK4 for `steps` steps of size `h` starting at `t0`; the result
/// has `steps + 1` rows including the initial state.
pub fn integrate_steps(
    model: &PolynomialOde,
    y0: &[f64],
    t0: f64,
    h: f64,
    steps: usize,
    blowup_bound: f64,
) -> Result<TimeSeries> {
    check_start(model, y0)?;
    let d = model.dim();
    let mut data = Vec::with_capacity((steps + 1) * d);
    data.extend_from_slice(y0);
    let mut y = y0.to_vec();
    let mut rk = Rk4::new(model);
    for n in 1..=steps {
        rk.step(&mut y, h);
        if y.iter().any(|v| !v.is_finite() || v.abs() > blowup_bound) {
            return Err(Error::Instability { time: t0 + n as f64 * h });
        }
        data.extend_from_slice(&y);
    }
    TimeSeries::new(t0, h, d, data)
}

pub fn integrate_rk4(model: &PolynomialOde, y0: &[f64], cfg: &IntegrationConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    integrate_steps(model, y0, 0.0, cfg.h, cfg.steps(), cfg.blowup_bound)
}

/// Integrates until `‖f(y)‖∞ < tol`, failing if the horizon is reached first.
pub fn find_equilibrium(model: &PolynomialOde, y0: &[f64], horizon: f64, tol: f64) -> Result<Vec<f64>> {
    check_start(model, y0)?;
    if !(horizon > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("horizon and tolerance must be positive".into()));
    }
    let mut y = y0.to_vec();
    let mut f = vec![0.0; y.len()];
    let mut rk = Rk4::new(model);
    let steps = (horizon / EQUILIBRIUM_STEP).ceil() as usize;
    let sup = |f: &[f64]| f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for n in 0..=steps {
        model.eval_into(&y, &mut f);
        if sup(&f) < tol {
            return Ok(y);
        }
        if n == steps {
            break;
        }
        rk.step(&mut y, EQUILIBRIUM_STEP);
        if y.iter().any(|v| !v.is_finite() || v.abs() > DEFAULT_BLOWUP_BOUND) {
            return Err(Error::Instability { time: (n + 1) as f64 * EQUILIBRIUM_STEP });
        }
    }
    Err(Error::NoEquilibrium { residual: sup(&f), state: y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    fn decay() -> PolynomialOde {
        let mut p = PolynomialOde::zero(1);
        p.add_term(0, &Monomial(vec![1]), -1.0).unwrap();
        p
    }

    fn logistic() -> PolynomialOde {
        let mut p = PolynomialOde::zero(1);
        p.add_term(0, &Monomial(vec![1]), 1.0).unwrap();
        p.add_term(0, &Monomial(vec![2]), -1.0).unwrap();
        p
    }

    #[test]
    fn zero_model_is_constant() {
        let ts = integrate_rk4(&PolynomialOde::zero(1), &[0.5], &IntegrationConfig::new(1.0, 0.1).unwrap()).unwrap();
        assert_eq!(ts.len(), 11);
        assert!(ts.data().iter().all(|&v| v == 0.5));
        assert_eq!(eval_rhs(&PolynomialOde::zero(2), &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn exponential_decay_accuracy() {
        let ts = integrate_rk4(&decay(), &[1.0], &IntegrationConfig::new(1.0, 0.01).unwrap()).unwrap();
        assert!((ts.last()[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let ts = integrate_rk4(&decay(), &[1.0], &IntegrationConfig::new(1.0, h).unwrap()).unwrap();
            (ts.last()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn blowup_reports_time() {
        let mut p = PolynomialOde::zero(1);
        p.add_term(0, &Monomial(vec![2]), 1.0).unwrap();
        // y' = y², y(0) = 1 blows up at t = 1.
        match integrate_rk4(&p, &[1.0], &IntegrationConfig::new(2.0, 0.001).unwrap()) {
            Err(Error::Instability { time }) => assert!(time > 0.9 && time < 1.01, "{time}"),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        assert!(IntegrationConfig::new(1.0, 2.0).is_err());
        assert!(IntegrationConfig::new(1.0, 0.0).is_err());
        assert!(integrate_rk4(&decay(), &[1.0, 2.0], &IntegrationConfig::new(1.0, 0.1).unwrap()).is_err());
    }

    #[test]
    fn equilibria() {
        let y = find_equilibrium(&decay(), &[1.0], 100.0, 1e-10).unwrap();
        assert!(y[0].abs() < 1e-10);
        let y = find_equilibrium(&logistic(), &[0.01], 100.0, 1e-9).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-6);
        let f = eval_rhs(&logistic(), &y).unwrap();
        assert!(f[0].abs() < 1e-9);
        assert!(matches!(find_equilibrium(&logistic(), &[0.01], 0.5, 1e-9), Err(Error::NoEquilibrium { .. })));
    }
}
