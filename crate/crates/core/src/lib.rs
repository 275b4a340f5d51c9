//! Learning polynomial ODE systems from stochastic simulation data.
//!
//! The coupled method regresses finite-difference derivatives of
//! ensemble-averaged trajectories onto the complete library of uni- and
//! bimolecular mass-action reactions, solving for non-negative rate
//! constants with an active-set NNLS solver. A decoupled monomial regression
//! (one independent fit per component) is provided as the baseline, and a
//! lattice tumour agent-based model plus a Gillespie simulator generate data.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod eql;
pub mod error;
pub mod ode;
pub mod poly;
pub mod reactions;
pub mod series;
pub mod solvers;
pub mod ssa;

pub use error::{Error, Result};
pub use eql::{FitResult, MseReport};
pub use poly::{Monomial, PolynomialOde};
pub use reactions::{RateVector, Reaction, ReactionLibrary, Species};
pub use series::{Ensemble, TimeSeries};
pub use solvers::{RegressionProblem, SolverChoice, SolverResult};
