//! Collective spin of the two ground levels: Dicke coordinates and the
//! Bloch vector.

use num_complex::Complex64;
use serde::Serialize;

use crate::cumulant::CompiledSystem;
use crate::model::{pair, population, read};
use crate::opalgebra::OpProduct;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error("moment <{0}> is not available")]
    Missing(String),
    #[error("sum of <J_i^2> = {0:e} is negative")]
    NegativeSpin(f64),
}

/// Single-atom and two-atom moments of a symmetric ensemble that the
/// collective spin depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundMoments {
    pub n_atoms: f64,
    /// `<s22[1]>`.
    pub s22: f64,
    /// `<s12[1]>`.
    pub s12: Complex64,
    /// `<s22[1] s22[2]>`.
    pub s22_s22: f64,
    /// `<s12[1] s21[2]>`.
    pub s12_s21: Complex64,
    /// `<s12[1] s12[2]>`.
    pub s12_s12: Complex64,
}

impl GroundMoments {
    /// Reads the moments from a state vector; the charged pair `<s12 s12>`
    /// is taken as zero when it is not a variable.
    pub fn from_state<T: Real>(sys: &CompiledSystem<T>, y: &[T], n_atoms: f64) -> Result<Self, ObservableError> {
        let get = |p: &OpProduct| read(sys, y, p).ok_or_else(|| ObservableError::Missing(p.to_string()));
        let s12 = OpProduct::transition(1, 1, 2);
        Ok(GroundMoments {
            n_atoms,
            s22: get(&population(2))?.re,
            s12: get(&s12)?,
            s22_s22: get(&pair(2, 2, 2, 2))?.re,
            s12_s21: get(&pair(1, 2, 2, 1))?,
            s12_s12: read(sys, y, &pair(1, 2, 1, 2)).unwrap_or_default(),
        })
    }

    /// `(<Jx^2>, <Jy^2>, <Jz^2>)`.
    pub fn spin_squares(&self) -> (f64, f64, f64) {
        let n = self.n_atoms;
        let pairs = n * (n - 1.0) / 4.0;
        // <s21 s21> = <s12 s12>*, and <s21[1] s12[2]> = <s12[1] s21[2]> by symmetry.
        let same = 2.0 * self.s12_s12.re;
        let cross = 2.0 * self.s12_s21.re;
        let jx = n / 4.0 + pairs * (same + cross);
        let jy = n / 4.0 - pairs * (same - cross);
        let jz = n / 4.0 + pairs * (4.0 * self.s22_s22 - 4.0 * self.s22 + 1.0);
        (jx, jy, jz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DickeCoordinates {
    pub j: f64,
    pub m: f64,
}

/// `J(J+1) = sum <J_i^2>` solved for the positive root and clipped to
/// `[0, N/2]`; `M = <J_z>`.
pub fn dicke_coordinates(g: &GroundMoments) -> Result<DickeCoordinates, ObservableError> {
    let (jx, jy, jz) = g.spin_squares();
    let s = jx + jy + jz;
    let tol = 1e-6 * g.n_atoms;
    let disc = 1.0 + 4.0 * s;
    if disc < -tol {
        return Err(ObservableError::NegativeSpin(s));
    }
    let j = 0.5 * (-1.0 + disc.max(0.0).sqrt());
    let j = j.clamp(0.0, 0.5 * g.n_atoms);
    Ok(DickeCoordinates { j, m: 0.5 * g.n_atoms * (2.0 * g.s22 - 1.0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn bloch_vector(g: &GroundMoments) -> BlochVector {
    let n = g.n_atoms;
    BlochVector { x: n * g.s12.re, y: -n * g.s12.im, z: 0.5 * n * (2.0 * g.s22 - 1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(n: f64, p2: f64, c: Complex64) -> GroundMoments {
        GroundMoments { n_atoms: n, s22: p2, s12: c, s22_s22: p2 * p2, s12_s21: c * c.conj(), s12_s12: c * c }
    }

    #[test]
    fn top_and_bottom_states() {
        let n = 1e4;
        let d = dicke_coordinates(&product(n, 1.0, Complex64::new(0.0, 0.0))).unwrap();
        assert!((d.j - n / 2.0).abs() < 1e-9 * n && (d.m - n / 2.0).abs() < 1e-12);
        let d = dicke_coordinates(&product(n, 0.0, Complex64::new(0.0, 0.0))).unwrap();
        assert!((d.j - n / 2.0).abs() < 1e-9 * n && (d.m + n / 2.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_half_filling() {
        let n = 400.0;
        let d = dicke_coordinates(&product(n, 0.5, Complex64::new(0.0, 0.0))).unwrap();
        let expected = (-1.0 + (1.0 + 3.0 * n).sqrt()) / 2.0;
        assert!((d.j - expected).abs() < 1e-9);
        assert_eq!(d.m, 0.0);
    }

    #[test]
    fn coherent_superposition_is_maximal() {
        let n = 50.0;
        let g = product(n, 0.5, Complex64::new(0.5, 0.0));
        let b = bloch_vector(&g);
        assert!((b.x - n / 2.0).abs() < 1e-12 && b.y.abs() < 1e-12 && b.z.abs() < 1e-12);
        let d = dicke_coordinates(&g).unwrap();
        assert!((d.j - n / 2.0).abs() < 1e-9);
    }

    #[test]
    fn top_state_bloch() {
        let b = bloch_vector(&product(10.0, 1.0, Complex64::new(0.0, 0.0)));
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 5.0));
    }
}
