//! Multi-response regression with a lasso penalty and a minimum-function
//! ridge fusion penalty that learns which responses share (or mirror)
//! coefficient vectors.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below fix the scalar type.

pub mod error;
pub mod linalg;
pub mod model;
pub mod relations;
pub mod scalar;

mod cd;
pub mod binom;
pub mod fit;
pub mod gauss;
pub mod inference;
pub mod io;
pub mod sim;
pub mod truncnorm;
pub mod tuning;

pub use cd::CdOutcome;
pub use error::{MinPenError, Result};
pub use fit::{fit, FitResult, Problem, SolverConfig, StopReason};
pub use gauss::{GraphObjective, OracleResult};
pub use model::{
    min_penalty, objective_gaussian, objective_minpen, CoefMatrix, Dataset, Family, Label, PenaltySpec,
    RelationGraph, Standardization,
};
pub use relations::{enumerate_graphs, laplacian, update_sets, GraphMask};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type CoefMatrix64 = CoefMatrix<f64>;
pub type CoefMatrix32 = CoefMatrix<f32>;
pub type PenaltySpec64 = PenaltySpec<f64>;
pub type PenaltySpec32 = PenaltySpec<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
