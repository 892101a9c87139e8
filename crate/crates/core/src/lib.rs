//! Cumulant mean-field equations, integration and spectra for superradiant
//! Raman scattering of three-level atoms in a driven cavity.

pub mod cumulant;
pub mod engine;
pub mod model;
pub mod observables;
pub mod opalgebra;
pub mod oracle;
pub mod runs;
pub mod scalar;
pub mod spectra;

pub use scalar::{ExactCoeff, Real};

/// Symbolic layer with exact rational coefficients.
pub type OperatorExpr = opalgebra::OperatorExpr<ExactCoeff>;
pub type MomentExpr = cumulant::MomentExpr<ExactCoeff>;
pub type MasterEquation = cumulant::MasterEquation<ExactCoeff>;
pub type MomentSystem = cumulant::MomentSystem<ExactCoeff>;

/// Numerical layer in double precision.
pub type CompiledSystem = cumulant::CompiledSystem<f64>;
pub type Trajectory = engine::Trajectory<f64>;
pub type SimConfig = engine::SimConfig<f64>;
pub type SteadyState = engine::SteadyState<f64>;
pub type CorrelationSystem = spectra::CorrelationSystem<f64>;
