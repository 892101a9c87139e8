use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::PhysicalParams;

/// Physical parameter varied by a sweep. Values are in Hz except `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    N,
    Omega,
    /// Raman detuning, moving drive and cavity together.
    Delta,
    #[serde(rename = "gamma12")]
    Gamma12,
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "g31")]
    G31,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] =
        [SweepAxis::N, SweepAxis::Omega, SweepAxis::Delta, SweepAxis::Gamma12, SweepAxis::Kappa, SweepAxis::G31];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "N",
            SweepAxis::Omega => "Omega",
            SweepAxis::Delta => "Delta",
            SweepAxis::Gamma12 => "gamma12",
            SweepAxis::Kappa => "kappa",
            SweepAxis::G31 => "g31",
        }
    }

    pub fn get(self, p: &PhysicalParams) -> f64 {
        match self {
            SweepAxis::N => p.n_atoms,
            SweepAxis::Omega => p.omega_hz,
            SweepAxis::Delta => p.delta_hz(),
            SweepAxis::Gamma12 => p.gamma12_hz,
            SweepAxis::Kappa => p.kappa_hz,
            SweepAxis::G31 => p.g31_hz,
        }
    }

    pub fn apply(self, p: &PhysicalParams, value: f64) -> PhysicalParams {
        let mut q = p.clone();
        match self {
            SweepAxis::N => q.n_atoms = value,
            SweepAxis::Omega => q.omega_hz = value,
            SweepAxis::Delta => q = p.with_raman_detuning(value),
            SweepAxis::Gamma12 => q.gamma12_hz = value,
            SweepAxis::Kappa => q.kappa_hz = value,
            SweepAxis::G31 => q.g31_hz = value,
        }
        q
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown sweep axis `{s}`"))
    }
}

/// One row of a sweep; failures are kept in place.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<R, E> {
    pub index: usize,
    pub value: f64,
    pub result: Result<R, E>,
}

/// Evaluates `f` at every value in parallel; rows keep the input order.
pub fn sweep<R, E, F>(values: &[f64], f: F) -> Vec<SweepPoint<R, E>>
where
    R: Send,
    E: Send,
    F: Fn(f64) -> Result<R, E> + Sync,
{
    values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| SweepPoint { index, value, result: f(value) })
        .collect()
}
