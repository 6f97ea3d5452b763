//! Difference-of-convex methods for split feasibility problems with nonconvex sets:
//! find `x` in `C` such that `A x` lies in `D`.
//!
//! The crate provides the projections onto the sets used in completely positive
//! factorization, sparse factorization and outlier detection ([`sets`]), the solvers
//! ([`solvers`]) and instance generators for those applications ([`problems`]).

pub mod error;
pub mod invariants;
pub mod numerics;
pub mod operator;
pub mod problems;
pub mod sets;
pub mod solvers;

pub use error::{Error, Result};
pub use numerics::DenseMatrix;
pub use operator::LinearOperator;
pub use sets::ProjectableSet;
pub use solvers::{
    cq_iteration, modified_alt_proj, spfeas_dc, spfeas_dc_ls, AltProjConfig, FixedStepConfig, LsConfig,
    RunRecord, RunStatus, SplitProblem, TerminationRule,
};
