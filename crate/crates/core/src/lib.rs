//! Rank-1 inhomogeneous random graphs: the typical clique number, its
//! closed-form predictions, exact maximum cliques and Monte Carlo checks of
//! two-point concentration.
//!
//! The analytic modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`.

pub mod clique;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod predictors;
pub mod scalar;
pub mod typical;

pub use clique::{max_clique, CliqueResult, MaxCliqueSolver};
pub use error::{Error, Result};
pub use harness::{run_concentration_experiment, ExperimentConfig, ExperimentReport, ExportFormat};
pub use model::Graph;
pub use scalar::Scalar;

// f64 instantiations.
pub type WeightDistribution = crate::distributions::WeightDistribution<f64>;
pub type TruncatedWeight = crate::distributions::TruncatedWeight<f64>;
pub type ScalingSchedule = crate::model::ScalingSchedule<f64>;
pub type AssumptionReport = crate::model::AssumptionReport<f64>;
pub type GraphInstance = crate::model::GraphInstance<f64>;
pub type TypicalProblem = crate::typical::TypicalProblem<f64>;
pub type TypicalCliqueResult = crate::typical::TypicalCliqueResult<f64>;
pub type Prediction = crate::predictors::Prediction<f64>;
pub type TableRow = crate::predictors::TableRow<f64>;
