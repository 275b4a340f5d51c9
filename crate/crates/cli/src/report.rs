//! On-disk fit report.

use serde::{Deserialize, Serialize};

use rxnfit::eql::Coefficients;
use rxnfit::{Monomial, PolynomialOde, ReactionLibrary, SolverChoice, SolverResult};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Coupled,
    Decoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LibraryDescription {
    Reactions {
        library: ReactionLibrary,
        /// Human-readable form of each reaction, in id order.
        rendered: Vec<String>,
    },
    Monomials {
        species: Vec<String>,
        monomials: Vec<Monomial>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    /// Points actually fitted, after subsampling.
    pub n: usize,
    pub d: usize,
    pub t0: f64,
    /// Step of the fitted grid.
    pub h: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tool_version: String,
    pub method: Method,
    pub library: LibraryDescription,
    pub solver: SolverChoice,
    /// Full coefficient vector, zeros included.
    pub coefficients: Coefficients,
    /// 1-based reaction ids with positive rates (coupled), or the monomials
    /// with a nonzero coefficient in any component (decoupled).
    pub active_set: Vec<usize>,
    /// 1-based reaction ids removed before fitting.
    pub excluded: Vec<usize>,
    pub polynomial: PolynomialOde,
    /// Rendered equations, one per component.
    pub equations: Vec<String>,
    pub residual_norm: f64,
    pub mse_trajectory: Option<Vec<f64>>,
    pub mse_final: Option<Vec<f64>>,
    pub min_state: Option<f64>,
    /// Time at which the re-integrated model left the blow-up bound.
    pub instability_time: Option<f64>,
    pub provenance: Provenance,
    pub diagnostics: Vec<SolverResult>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
