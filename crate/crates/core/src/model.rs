//! Derived moment systems for the three-level and effective two-level
//! Raman models of a symmetric ensemble.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cumulant::{
    complete_and_compile, derive_effective, static_frame, CompiledSystem, CompletionOptions, CumulantError, Ensemble,
    MasterEquation, MomentSystem, ParamBinding, PhysicalParams,
};
use crate::opalgebra::{AtomOp, OpProduct};
use crate::scalar::{ExactCoeff, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Three-level atoms with the excited level kept.
    Full,
    /// Excited level adiabatically eliminated.
    Effective,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Effective => "effective",
        }
    }

    pub fn levels(self) -> u8 {
        match self {
            ModelKind::Full => 3,
            ModelKind::Effective => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ModelKind::Full),
            "effective" => Ok(ModelKind::Effective),
            _ => Err(format!("unknown model `{s}` (expected full or effective)")),
        }
    }
}

/// A closed symbolic moment system together with the master equation it
/// was derived from.
#[derive(Clone, Debug)]
pub struct Model {
    pub kind: ModelKind,
    pub master: MasterEquation<ExactCoeff>,
    pub system: MomentSystem<ExactCoeff>,
}

/// `<ad*a>`.
pub fn photon_number() -> OpProduct {
    OpProduct::boson(1, 1)
}

/// `<s_ll>` of one representative atom.
pub fn population(level: u8) -> OpProduct {
    OpProduct::transition(1, level, level)
}

/// Two-atom product `s_lm[1] s_pq[2]`.
pub fn pair(l: u8, m: u8, p: u8, q: u8) -> OpProduct {
    OpProduct::from_parts(0, 0, vec![AtomOp { atom: 1, l, m }, AtomOp { atom: 2, l: p, m: q }])
        .expect("valid pair product")
}

impl Model {
    /// Derives the closed system seeded by photon number, populations,
    /// the first-order coherences and the two-atom moments used for the
    /// collective spin.
    pub fn derive(kind: ModelKind) -> Result<Self, CumulantError> {
        let raw = match kind {
            ModelKind::Full => MasterEquation::full_model(Ensemble::Symmetric),
            ModelKind::Effective => MasterEquation::effective_model(Ensemble::Symmetric),
        };
        let master = static_frame(&raw)?;
        let mut seeds = vec![photon_number(), OpProduct::boson(0, 1)];
        for l in 2..=kind.levels() {
            seeds.push(population(l));
            seeds.push(OpProduct::transition(1, 1, l));
        }
        seeds.push(pair(2, 2, 2, 2));
        seeds.push(pair(1, 2, 2, 1));
        let system = complete_and_compile(&master, &seeds, &CompletionOptions::default())?;
        Ok(Model { kind, master, system })
    }

    pub fn binding(&self, p: &PhysicalParams) -> Result<ParamBinding, CumulantError> {
        p.validate()?;
        Ok(match self.kind {
            ModelKind::Full => ParamBinding::full(p),
            ModelKind::Effective => ParamBinding::effective(p, &derive_effective(p)?),
        })
    }

    pub fn compile<T: Real>(&self, p: &PhysicalParams) -> Result<CompiledSystem<T>, CumulantError> {
        self.system.compile(&self.binding(p)?)
    }
}

/// Product state with the cavity empty and all atoms in `level`.
pub fn product_state<T: Real>(sys: &CompiledSystem<T>, level: u8) -> Vec<T> {
    sys.state_from(crate::cumulant::product_state_moment(level))
}

/// Reads `<p>` from a state vector, `None` if `p` is not represented.
pub fn read<T: Real>(sys: &CompiledSystem<T>, y: &[T], p: &OpProduct) -> Option<Complex64> {
    sys.moment(y, p).map(|z| Complex64::new(z.re.to_f64(), z.im.to_f64()))
}
