//! Moment equations, second-order cumulant closure and compilation.

mod compiled;
mod complete;
mod master;
mod moments;
mod params;

pub use compiled::{CompiledSystem, ParamBinding};
pub use complete::{complete_and_compile, derive_closed, Closure, CompletionOptions, MomentRef, MomentSystem};
pub use master::{expand_atoms, static_frame, symmetry_reduce, sym, Dissipator, Ensemble, FrameShift, MasterEquation};
pub use moments::{cumulant_close, MomentExpr, MomentMonomial};
pub use params::{derive_effective, EffectiveParams, PhysicalParams, TWO_PI};

use num_complex::Complex64;

use crate::opalgebra::{AlgebraError, OpProduct};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CumulantError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Hamiltonian phases cannot be removed by diagonal frame shifts")]
    IrreduciblePhase,
    #[error("equations are time dependent; move to a static frame first")]
    TimeDependent,
    #[error("more than {cap} variables without closing; last added: {recent:?}")]
    VariableCap { cap: usize, recent: Vec<String> },
    #[error("no value bound for parameter {0}")]
    UnboundParameter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("elimination is singular for zero detuning and zero excited-state decay")]
    SingularElimination,
}

/// Moments of the product state with the cavity in vacuum and every atom
/// in `level`.
pub fn product_state_moment(level: u8) -> impl Fn(&OpProduct) -> Complex64 {
    move |p| {
        let atoms_ok = p.atoms().iter().all(|a| a.l == level && a.m == level);
        if p.creations() == 0 && p.annihilations() == 0 && atoms_ok {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}
