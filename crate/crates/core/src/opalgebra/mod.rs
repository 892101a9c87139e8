//! Normal-ordered algebra of one bosonic mode and many multi-level atoms.

mod expr;
mod product;
mod symbol;

pub use expr::{simplify, OperatorExpr, OperatorTerm, RawTerm, Space, TermKey};
pub use product::{AtomIndex, AtomOp, ElementaryOp, Level, OpKind, OpProduct, Subsystem, TEMPLATE_ATOM};
pub use symbol::{Frequency, Monomial, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("operands declare {left}-level and {right}-level atoms")]
    SpaceMismatch { left: Level, right: Level },
    #[error("level {level} outside 1..={levels}")]
    LevelOutOfRange { level: Level, levels: Level },
    #[error("malformed elementary operator {0:?}")]
    Malformed(ElementaryOp),
    #[error("atom relabeling is not injective")]
    NonInjectiveRelabel,
}
