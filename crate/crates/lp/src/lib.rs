//! LP/MILP interface used by every decomposition and oracle path.
//!
//! Algorithms talk to a [`LpBackend`] and never to a concrete solver. Two backends
//! ship with the crate: [`HighsBackend`] (default) and [`ReferenceBackend`], a
//! dense simplex meant for small problems and for cross-checking the default.
//!
//! Dual sign convention: for the minimisation problem, `duals[i]` is the derivative
//! of the optimal objective with respect to `rhs[i]`. `Le` rows have nonpositive
//! duals, `Ge` rows nonnegative duals.
use std::str::FromStr;

use thiserror::Error;

mod highs_backend;
mod problem;
pub mod reference;

pub use highs_backend::HighsBackend;
pub use problem::{Constraint, LinearProgram, RowSense, SolveResult, SolveStatus};
pub use reference::ReferenceBackend;

/// Environment variable selecting the backend (`highs` or `reference`).
pub const BACKEND_ENV: &str = "CGA_LP_BACKEND";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid problem data: {0}")]
    InvalidData(String),
    #[error("solve_lp called on a problem with integrality flags")]
    IntegralityInLp,
    #[error("solve_milp called on a problem without integrality flags")]
    NoIntegrality,
    #[error("backend failure: {0}")]
    Backend(String),
}

/// A solver handle. Handles are owned by one worker and never shared.
pub trait LpBackend: Send {
    fn name(&self) -> &'static str;

    fn lp_impl(&mut self, lp: &LinearProgram, need_duals: bool) -> Result<SolveResult, LpError>;

    fn milp_impl(&mut self, lp: &LinearProgram) -> Result<SolveResult, LpError>;

    /// Solves a pure LP. Rejects problems carrying integrality flags.
    fn solve_lp(&mut self, lp: &LinearProgram, need_duals: bool) -> Result<SolveResult, LpError> {
        lp.validate()?;
        if lp.has_integrality() {
            return Err(LpError::IntegralityInLp);
        }
        self.lp_impl(lp, need_duals)
    }

    /// Solves a MILP to proven optimality. No duals are returned.
    fn solve_milp(&mut self, lp: &LinearProgram) -> Result<SolveResult, LpError> {
        lp.validate()?;
        if !lp.has_integrality() {
            return Err(LpError::NoIntegrality);
        }
        let mut res = self.milp_impl(lp)?;
        res.duals = None;
        Ok(res)
    }

    /// Dispatches on the integrality flags of `lp`.
    fn solve(&mut self, lp: &LinearProgram, need_duals: bool) -> Result<SolveResult, LpError> {
        if lp.has_integrality() {
            self.solve_milp(lp)
        } else {
            self.solve_lp(lp, need_duals)
        }
    }
}

/// Which backend implementation to instantiate. Cheap to copy into workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Highs,
    Reference,
}

impl BackendKind {
    /// Reads [`BACKEND_ENV`]; unset means [`BackendKind::Highs`].
    pub fn from_env() -> Result<Self, LpError> {
        match std::env::var(BACKEND_ENV) {
            Ok(v) => v.parse(),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn create(self) -> Box<dyn LpBackend> {
        match self {
            BackendKind::Highs => Box::new(HighsBackend::default()),
            BackendKind::Reference => Box::new(ReferenceBackend::default()),
        }
    }
}

impl FromStr for BackendKind {
    type Err = LpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highs" => Ok(Self::Highs),
            "reference" | "dense" => Ok(Self::Reference),
            other => Err(LpError::Backend(format!("unknown backend `{other}`"))),
        }
    }
}
