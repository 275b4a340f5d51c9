//! Degree-≤2 polynomial vector fields without constant term.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial in `d` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub Vec<u8>);

impl Monomial {
    pub fn linear(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Monomial(e)
    }

    pub fn quadratic(dim: usize, i: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] += 1;
        e[j] += 1;
        Monomial(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(y)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &v)| v.powi(i32::from(e)))
            .product()
    }

    /// Renders e.g. `x^2`, `x*z`, `x1*x3`.
    pub fn render(&self, symbols: &[String]) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(symbols[i].clone()),
                _ => parts.push(format!("{}^{}", symbols[i], e)),
            }
        }
        parts.join("*")
    }
}

/// Lower-case variable symbols used for a `dim`-dimensional state:
/// `x` at d=1, `x`/`z` at d=2, `x1..xd` otherwise.
pub fn variable_symbols(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "z".into()],
        _ => (1..=dim).map(|i| format!("x{i}")).collect(),
    }
}

/// All monomials of degree 1 and 2 in `dim` variables: linear terms first,
/// then `x_i x_j` for `i <= j` in lexicographic order.
pub fn canonical_basis(dim: usize) -> Vec<Monomial> {
    let mut basis: Vec<Monomial> = (0..dim).map(|i| Monomial::linear(dim, i)).collect();
    for i in 0..dim {
        for j in i..dim {
            basis.push(Monomial::quadratic(dim, i, j));
        }
    }
    basis
}

/// Polynomial right-hand side `y' = f(y)`, one coefficient row per component
/// over [`canonical_basis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRecord", into = "PolynomialRecord")]
pub struct PolynomialOde {
    dim: usize,
    basis: Vec<Monomial>,
    coeffs: Vec<Vec<f64>>,
}

impl PolynomialOde {
    pub fn zero(dim: usize) -> Self {
        let basis = canonical_basis(dim);
        let coeffs = vec![vec![0.0; basis.len()]; dim];
        PolynomialOde { dim, basis, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    /// Coefficient rows, `coeffs()[component][basis index]`.
    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    fn index_of(&self, m: &Monomial) -> Result<usize> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        self.basis
            .iter()
            .position(|b| b == m)
            .ok_or_else(|| Error::InvalidArgument(format!("monomial {:?} has degree outside 1..=2", m.0)))
    }

    pub fn coefficient(&self, component: usize, m: &Monomial) -> f64 {
        self.index_of(m).map(|k| self.coeffs[component][k]).unwrap_or(0.0)
    }

    pub fn add_term(&mut self, component: usize, m: &Monomial, value: f64) -> Result<()> {
        if component >= self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: component + 1 });
        }
        let k = self.index_of(m)?;
        self.coeffs[component][k] += value;
        Ok(())
    }

    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(y, &mut out);
        Ok(out)
    }

    /// Evaluation without length checks; `y` and `out` must have length `dim`.
    pub(crate) fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        let values: Vec<f64> = self.basis.iter().map(|m| m.eval(y)).collect();
        for (o, row) in out.iter_mut().zip(&self.coeffs) {
            *o = row.iter().zip(&values).map(|(c, v)| c * v).sum();
        }
    }

    /// Largest absolute coefficient difference divided by the largest
    /// absolute coefficient of `reference`, per component.
    pub fn relative_deviation(&self, reference: &PolynomialOde) -> Vec<f64> {
        self.coeffs
            .iter()
            .zip(&reference.coeffs)
            .map(|(a, b)| {
                let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let diff = a.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
                if scale == 0.0 {
                    diff
                } else {
                    diff / scale
                }
            })
            .collect()
    }

    /// Human-readable right-hand side of one component, e.g.
    /// `x' = 3.2039 x - 3.2491 x^2`.
    pub fn render_component(&self, component: usize, symbols: &[String]) -> String {
        let mut out = format!("{}' =", symbols[component]);
        let mut first = true;
        for (m, &c) in self.basis.iter().zip(&self.coeffs[component]) {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    out.push_str(" -");
                }
                out.push_str(&format!(" {:.4} {}", c.abs(), m.render(symbols)));
            } else {
                out.push_str(&format!(" {sign} {:.4} {}", c.abs(), m.render(symbols)));
            }
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        out
    }
}

impl fmt::Display for PolynomialOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbols = variable_symbols(self.dim);
        for i in 0..self.dim {
            writeln!(f, "{}", self.render_component(i, &symbols))?;
        }
        Ok(())
    }
}

/// Serialised form: per component, a list of `(exponents, coefficient)`
/// entries in canonical basis order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialRecord {
    pub dim: usize,
    pub components: Vec<Vec<TermRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRecord {
    pub exponents: Monomial,
    pub coefficient: f64,
}

impl From<PolynomialOde> for PolynomialRecord {
    fn from(p: PolynomialOde) -> Self {
        let components = p
            .coeffs
            .iter()
            .map(|row| {
                p.basis
                    .iter()
                    .zip(row)
                    .map(|(m, &c)| TermRecord { exponents: m.clone(), coefficient: c })
                    .collect()
            })
            .collect();
        PolynomialRecord { dim: p.dim, components }
    }
}

impl TryFrom<PolynomialRecord> for PolynomialOde {
    type Error = Error;

    fn try_from(r: PolynomialRecord) -> Result<Self> {
        if r.dim == 0 {
            return Err(Error::InvalidDimension("polynomial dimension must be positive".into()));
        }
        if r.components.len() != r.dim {
            return Err(Error::DimensionMismatch { expected: r.dim, got: r.components.len() });
        }
        let mut p = PolynomialOde::zero(r.dim);
        for (i, terms) in r.components.iter().enumerate() {
            for t in terms {
                if !t.coefficient.is_finite() {
                    return Err(Error::InvalidArgument("non-finite coefficient".into()));
                }
                p.add_term(i, &t.exponents, t.coefficient)?;
            }
        }
        Ok(p)
    }
}
