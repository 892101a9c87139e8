use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CumulantError;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Physical parameters of the three-level model.
///
/// Frequencies and rates are stored as ordinary frequencies in Hz (the
/// "2π × value" numbers); the accessors without the `_hz` suffix return
/// angular frequencies in rad/s. Keeping the optical frequencies in Hz lets
/// differences such as `wc - w31` cancel exactly in floating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n_atoms: f64,
    pub wc_hz: f64,
    pub w31_hz: f64,
    pub w32_hz: f64,
    pub w21_hz: f64,
    pub wd_hz: f64,
    pub g31_hz: f64,
    pub omega_hz: f64,
    pub kappa_hz: f64,
    pub gamma31_hz: f64,
    pub gamma12_hz: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl PhysicalParams {
    /// Rubidium reference parameters of the crossover regime (`N = 1e4`).
    pub fn reference() -> Self {
        let w32 = 3.77e14 - 2e9;
        let w21 = 6.8e9;
        PhysicalParams {
            n_atoms: 1e4,
            wc_hz: 3.77e14 + 6.8e9,
            w31_hz: w32 + w21,
            w32_hz: w32,
            w21_hz: w21,
            wd_hz: w32 + 2e9,
            g31_hz: 506e3,
            omega_hz: 5e6,
            kappa_hz: 11e6,
            gamma31_hz: 5.75e6,
            gamma12_hz: 0.0,
        }
    }

    /// Reference parameters with `N = 1e6`.
    pub fn strong_coupling() -> Self {
        PhysicalParams { n_atoms: 1e6, ..Self::reference() }
    }

    pub fn validate(&self) -> Result<(), CumulantError> {
        let rates = [
            ("g31", self.g31_hz),
            ("Omega", self.omega_hz),
            ("kappa", self.kappa_hz),
            ("gamma31", self.gamma31_hz),
            ("gamma12", self.gamma12_hz),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CumulantError::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.n_atoms >= 1.0 && self.n_atoms.is_finite()) {
            return Err(CumulantError::InvalidParameter(format!("N = {} must be >= 1", self.n_atoms)));
        }
        let mismatch = (self.w31_hz - self.w32_hz - self.w21_hz).abs();
        if mismatch > 1e-12 * self.w31_hz.abs().max(1.0) {
            return Err(CumulantError::InvalidParameter(format!(
                "w31 = {} Hz differs from w32 + w21 = {} Hz",
                self.w31_hz,
                self.w32_hz + self.w21_hz
            )));
        }
        Ok(())
    }

    /// Drive detuning `wd - w32` in Hz.
    pub fn delta_hz(&self) -> f64 {
        self.wd_hz - self.w32_hz
    }

    /// Cavity detuning `wc - w31` in Hz.
    pub fn cavity_detuning_hz(&self) -> f64 {
        self.wc_hz - self.w31_hz
    }

    /// Moves drive and cavity together so that `wd - w32 = wc - w31 = delta`,
    /// keeping the Raman two-photon resonance.
    pub fn with_raman_detuning(&self, delta_hz: f64) -> Self {
        PhysicalParams { wd_hz: self.w32_hz + delta_hz, wc_hz: self.w31_hz + delta_hz, ..self.clone() }
    }

    pub fn kappa(&self) -> f64 {
        TWO_PI * self.kappa_hz
    }
    pub fn g31(&self) -> f64 {
        TWO_PI * self.g31_hz
    }
    pub fn omega(&self) -> f64 {
        TWO_PI * self.omega_hz
    }
    pub fn gamma31(&self) -> f64 {
        TWO_PI * self.gamma31_hz
    }
    pub fn gamma12(&self) -> f64 {
        TWO_PI * self.gamma12_hz
    }
    pub fn delta(&self) -> f64 {
        TWO_PI * self.delta_hz()
    }
}

/// Parameters of the two-level model after eliminating level 3 (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub g21: Complex64,
    pub gamma21: f64,
    /// Purcell-enhanced single-atom rate `4|g21|^2/kappa`.
    pub purcell: f64,
    pub delta: f64,
}

impl EffectiveParams {
    pub fn g21_hz(&self) -> Complex64 {
        self.g21 / TWO_PI
    }
    pub fn gamma21_hz(&self) -> f64 {
        self.gamma21 / TWO_PI
    }
    pub fn purcell_hz(&self) -> f64 {
        self.purcell / TWO_PI
    }
}

/// Adiabatic elimination of the excited level:
/// `g21 = -g31 Omega / (w32 - wd - i gamma31/2)` and
/// `gamma21 = gamma31 Omega^2 / |w32 - wd - i gamma31/2|^2`.
pub fn derive_effective(p: &PhysicalParams) -> Result<EffectiveParams, CumulantError> {
    let delta_hz = p.delta_hz();
    if delta_hz == 0.0 && p.gamma31_hz == 0.0 {
        return Err(CumulantError::SingularElimination);
    }
    if p.omega_hz > 0.0 && delta_hz.abs() < 10.0 * p.omega_hz {
        log::warn!(
            "drive detuning {:.3e} Hz is less than 10x the drive strength {:.3e} Hz; elimination is poor",
            delta_hz,
            p.omega_hz
        );
    }
    // Work in Hz and rescale once, so that only the small detuning enters.
    let denom = Complex64::new(-delta_hz, -p.gamma31_hz / 2.0);
    let g21_hz = -(p.g31_hz * p.omega_hz) / denom;
    let gamma21_hz = p.gamma31_hz * p.omega_hz * p.omega_hz / denom.norm_sqr();
    let g21 = g21_hz * TWO_PI;
    let kappa = p.kappa();
    let purcell = if kappa > 0.0 { 4.0 * g21.norm_sqr() / kappa } else { f64::INFINITY };
    Ok(EffectiveParams { g21, gamma21: TWO_PI * gamma21_hz, purcell, delta: p.delta() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameters_are_consistent() {
        let p = PhysicalParams::reference();
        p.validate().unwrap();
        assert_eq!(p.delta_hz(), 2e9);
        assert_eq!(p.cavity_detuning_hz(), 2e9);
    }

    #[test]
    fn detuning_retune_keeps_raman_resonance() {
        let p = PhysicalParams::reference().with_raman_detuning(-1.5e9);
        assert_eq!(p.delta_hz(), -1.5e9);
        assert_eq!(p.cavity_detuning_hz(), -1.5e9);
        p.validate().unwrap();
    }

    #[test]
    fn singular_elimination_is_rejected() {
        let mut p = PhysicalParams::reference().with_raman_detuning(0.0);
        p.gamma31_hz = 0.0;
        assert!(matches!(derive_effective(&p), Err(CumulantError::SingularElimination)));
    }

    #[test]
    fn bad_rates_are_rejected() {
        let p = PhysicalParams { kappa_hz: -1.0, ..PhysicalParams::reference() };
        assert!(p.validate().is_err());
        let p = PhysicalParams { w31_hz: 1.0, ..PhysicalParams::reference() };
        assert!(p.validate().is_err());
    }
}
