//! Steady-state emission spectrum from the regression of first-order
//! moments, and Lorentzian line fits.

use nalgebra::{ComplexField, DMatrix, DVector, Matrix4, Vector4};
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cumulant::CompiledSystem;
use crate::opalgebra::OpProduct;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("correlation does not decay (slowest rate {rate:e} rad/s)")]
    NotDecaying { rate: f64 },
    #[error("no dominant peak in the spectrum")]
    NoPeak,
    #[error("Lorentzian fit failed; relative residual {residual:e}")]
    PoorFit { residual: f64 },
    #[error("detuning must be nonzero")]
    ZeroDetuning,
}

/// Linear regression system `dx/dtau = M x` for
/// `x_i(tau) = <o_i(tau) a(0)>`, with `x_0 = <ad(tau) a(0)>`.
#[derive(Clone, Debug)]
pub struct CorrelationSystem<T: Real> {
    /// Operators `o_i`; the first is `ad`.
    pub operators: Vec<OpProduct>,
    pub matrix: DMatrix<Complex<T>>,
    /// Steady-state values `<o_i a>`.
    pub initial: DVector<Complex<T>>,
    pub photon_number: T,
    /// Cavity loss rate (rad/s).
    pub kappa: T,
}

/// Builds the regression system at the steady state `ss`.
///
/// The first-order moments reachable from `<a>` through the linearised
/// equations form an invariant subspace; at the steady state they vanish,
/// so their equations are linear and their coefficients are steady-state
/// constants.
pub fn derive_correlation_system<T: Real>(
    sys: &CompiledSystem<T>,
    ss: &[T],
    kappa: T,
) -> Result<CorrelationSystem<T>, SpectrumError> {
    let a = OpProduct::boson(0, 1);
    let ia = sys
        .variable_index(&a)
        .ok_or_else(|| SpectrumError::Structure("the field amplitude <a> is not a variable".into()))?;
    let z = sys.moments(ss);
    let (dz, dzbar) = sys.wirtinger(&z);
    let n = z.len();
    let tiny = |c: Complex<T>| c.modulus() == T::zero();
    let mut set = vec![ia];
    let mut k = 0;
    while k < set.len() {
        let i = set[k];
        for j in 0..n {
            if !tiny(dz[(i, j)]) && !set.contains(&j) {
                set.push(j);
            }
        }
        k += 1;
    }
    for &i in &set {
        if !tiny(z[i]) {
            return Err(SpectrumError::Structure(format!("<{}> is nonzero at the steady state", sys.variables()[i])));
        }
        for &j in &set {
            if !tiny(dzbar[(i, j)]) {
                return Err(SpectrumError::Structure("regression equations are not holomorphic".into()));
            }
        }
    }
    let m = set.len();
    // Conjugate system: d<o_i^dag>/dt = conj(dz) <o^dag>.
    let matrix = DMatrix::from_fn(m, m, |r, c| dz[(set[r], set[c])].conj());
    let mut operators = Vec::with_capacity(m);
    let mut initial = DVector::from_element(m, Complex::new(T::zero(), T::zero()));
    for (r, &i) in set.iter().enumerate() {
        let o = sys.variables()[i].adjoint();
        let prod = OpProduct::from_parts(o.creations(), o.annihilations() + 1, o.atoms().to_vec())
            .ok_or_else(|| SpectrumError::Structure(format!("cannot form <{o} a>")))?;
        initial[r] = sys
            .moment(ss, &prod)
            .ok_or_else(|| SpectrumError::Structure(format!("steady-state moment <{prod}> is not available")))?;
        operators.push(o);
    }
    let photon_number = initial[0].re;
    Ok(CorrelationSystem { operators, matrix, initial, photon_number, kappa })
}

impl<T: Real> CorrelationSystem<T> {
    /// Eigenvalues of the regression matrix.
    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        self.matrix
            .clone()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().cloned().collect())
            .unwrap_or_default()
    }

    /// Eigenvalue with the largest real part.
    pub fn slowest_mode(&self) -> Complex<T> {
        self.eigenvalues()
            .into_iter()
            .fold(None, |best: Option<Complex<T>>, l| match best {
                Some(b) if b.re >= l.re => Some(b),
                _ => Some(l),
            })
            .unwrap_or(Complex::new(T::zero(), T::zero()))
    }

    /// `<ad(tau) a(0)>` sampled at `tau = k dt`, `k < len`.
    pub fn correlation(&self, dt: T, len: usize) -> Vec<Complex<T>> {
        let step = (&self.matrix * Complex::new(dt, T::zero())).exp();
        let mut x = self.initial.clone();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(x[0]);
            x = &step * x;
        }
        out
    }

    /// Closed-form spectrum `4 kappa Re[(i w - M)^-1 x(0)]_0` at `w` (rad/s).
    pub fn resolvent(&self, w: T) -> T {
        let m = self.matrix.nrows();
        let mut r = -self.matrix.clone();
        for i in 0..m {
            r[(i, i)] += Complex::new(T::zero(), w);
        }
        match r.lu().solve(&self.initial) {
            Some(x) => T::c(4.0) * self.kappa * x[0].re,
            None => T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumOptions {
    /// The correlation must fall below this fraction of its initial value.
    pub decay_threshold: f64,
    /// Multiplies the horizon set by `decay_threshold`.
    pub horizon_scale: f64,
    /// Grid spacing as a fraction of the estimated linewidth.
    pub resolution: f64,
    /// Half-width of the frequency window in linewidths, beyond the line
    /// centre.
    pub window_linewidths: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { decay_threshold: 1e-4, horizon_scale: 1.0, resolution: 1.0 / 20.0, window_linewidths: 40.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorentzianFit {
    /// Line centre relative to the cavity mode (rad/s).
    pub shift: f64,
    /// Full width at half maximum (rad/s).
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// RMS residual relative to the amplitude.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Frequencies relative to the cavity mode (rad/s), ascending.
    pub omega: Vec<f64>,
    /// `S(w)` (photons/s per rad/s).
    pub values: Vec<f64>,
    pub fit: LorentzianFit,
    pub dt: f64,
    /// Time over which the correlation decays to the threshold (s).
    pub horizon: f64,
    pub photon_number: f64,
    pub kappa: f64,
}

impl SpectrumResult {
    /// `sum S dw / 2 pi` over the grid.
    pub fn integrated(&self) -> f64 {
        let dw = self.omega[1] - self.omega[0];
        self.values.iter().sum::<f64>() * dw / std::f64::consts::TAU
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `S(w) = 2 kappa Re int e^{-i w tau} <ad(tau) a(0)> dtau` over the whole
/// line, using `C(-tau) = C(tau)*`.
///
/// The sampling step is set by the slowest regression mode so the window
/// covers the line; faster modes are aliased into a flat background. The
/// correlation is propagated exactly over the whole padded record, so no
/// truncation ripple appears.
pub fn spectrum<T: Real>(cs: &CorrelationSystem<T>, opts: &SpectrumOptions) -> Result<SpectrumResult, SpectrumError> {
    let slow = cs.slowest_mode();
    let rate = -slow.re.to_f64();
    let scale = cs.matrix.iter().map(|c| c.modulus().to_f64()).fold(0.0, f64::max);
    if !(rate > 1e-12 * scale.max(1.0)) {
        return Err(SpectrumError::NotDecaying { rate: -rate });
    }
    let width = 2.0 * rate;
    let w_max = slow.im.to_f64().abs() + opts.window_linewidths * width;
    let dt = std::f64::consts::PI / w_max;
    let horizon = opts.horizon_scale * (1.0 / opts.decay_threshold).ln() / rate;
    let record = (horizon / dt).ceil().max(2.0 / (opts.resolution * width * dt));
    let len = (record as usize).next_power_of_two();
    let c = cs.correlation(T::c(dt), len);
    let c0 = c[0].modulus().to_f64();
    let k_h = ((horizon / dt).ceil() as usize).min(len - 1);
    if c0 > 0.0 && c[k_h].modulus().to_f64() > opts.decay_threshold * c0 * 1.5 {
        return Err(SpectrumError::NotDecaying { rate: -rate });
    }
    let mut buf: Vec<Complex<T>> = c.clone();
    let fft = FftPlanner::<T>::new().plan_fft_forward(len);
    fft.process(&mut buf);
    let kappa = cs.kappa.to_f64();
    let dw = std::f64::consts::TAU / (len as f64 * dt);
    let mut omega = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for j in 0..len {
        let k = (j + len / 2) % len;
        let signed = if k >= len / 2 { k as f64 - len as f64 } else { k as f64 };
        let full = 2.0 * buf[k].re.to_f64() - c[0].re.to_f64();
        omega.push(signed * dw);
        values.push(2.0 * kappa * dt * full);
    }
    let fit = fit_lorentzian(&omega, &values)?;
    Ok(SpectrumResult {
        omega,
        values,
        fit,
        dt,
        horizon,
        photon_number: cs.photon_number.to_f64(),
        kappa,
    })
}

fn lorentz(p: &Vector4<f64>, w: f64) -> (f64, Vector4<f64>) {
    let (a, w0, g, b) = (p[0], p[1], p[2], p[3]);
    let h = 0.5 * g;
    let d = (w - w0) * (w - w0) + h * h;
    let f = a * h * h / d;
    let da = h * h / d;
    let dw0 = a * h * h * 2.0 * (w - w0) / (d * d);
    let dg = a * (h / d - h * h * h / (d * d));
    (f + b, Vector4::new(da, dw0, dg, 1.0))
}

/// Least-squares fit of `A (g/2)^2 / ((w - w0)^2 + (g/2)^2) + b` to the
/// points around the global maximum that exceed a twentieth of it.
pub fn fit_lorentzian(omega: &[f64], values: &[f64]) -> Result<LorentzianFit, SpectrumError> {
    let n = values.len();
    let k = (0..n)
        .max_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite spectrum"))
        .ok_or(SpectrumError::NoPeak)?;
    let peak = values[k];
    if !(peak > 0.0) {
        return Err(SpectrumError::NoPeak);
    }
    let floor = 0.05 * peak;
    let lo = (0..=k).rev().find(|&i| values[i] < floor).map_or(0, |i| i + 1);
    let hi = (k..n).find(|&i| values[i] < floor).unwrap_or(n);
    if hi - lo < 5 {
        return Err(SpectrumError::NoPeak);
    }
    let half = 0.5 * peak;
    let l = (lo..=k).rev().find(|&i| values[i] < half).unwrap_or(lo);
    let r = (k..hi).find(|&i| values[i] < half).unwrap_or(hi - 1);
    let g0 = (omega[r] - omega[l]).abs().max(omega[1] - omega[0]);
    let mut p = Vector4::new(peak, omega[k], g0, 0.0);
    let cost = |p: &Vector4<f64>| -> f64 { (lo..hi).map(|i| (lorentz(p, omega[i]).0 - values[i]).powi(2)).sum() };
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for i in lo..hi {
            let (f, j) = lorentz(&p, omega[i]);
            jtj += j * j.transpose();
            jtr += j * (values[i] - f);
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for d in 0..4 {
                m[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = m.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let q = p + step;
            let cq = cost(&q);
            if cq.is_finite() && cq < c && q[2] > 0.0 {
                let rel = (c - cq) / c.max(f64::MIN_POSITIVE);
                p = q;
                c = cq;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let residual = (c / (hi - lo) as f64).sqrt() / p[0].abs().max(f64::MIN_POSITIVE);
    if !(residual < 0.05) || !(p[2] > 0.0) {
        return Err(SpectrumError::PoorFit { residual });
    }
    Ok(LorentzianFit { shift: p[1], fwhm: p[2], amplitude: p[0], offset: p[3], residual })
}

/// AC Stark shift `Omega^2 / (4 Delta)` in the units of the arguments.
pub fn stark_shift_reference(omega: f64, delta: f64) -> Result<f64, SpectrumError> {
    if delta == 0.0 {
        return Err(SpectrumError::ZeroDetuning);
    }
    Ok(omega * omega / (4.0 * delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn stark_reference() {
        let s = stark_shift_reference(TAU * 5e6, TAU * 2e9).unwrap();
        assert!((s / TAU - 3125.0).abs() < 1e-9);
        assert_eq!(stark_shift_reference(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(stark_shift_reference(2.0, -3.0).unwrap(), -stark_shift_reference(2.0, 3.0).unwrap());
        assert_eq!(stark_shift_reference(1.0, 0.0), Err(SpectrumError::ZeroDetuning));
    }

    #[test]
    fn exact_lorentzian_recovered() {
        let (a, w0, g) = (3.0, 1.7, 0.4);
        let omega: Vec<f64> = (0..2001).map(|k| -10.0 + 0.01 * k as f64).collect();
        let values: Vec<f64> = omega.iter().map(|&w| a * (g / 2.0f64).powi(2) / ((w - w0).powi(2) + (g / 2.0f64).powi(2))).collect();
        let f = fit_lorentzian(&omega, &values).unwrap();
        assert!((f.amplitude / a - 1.0).abs() < 1e-3);
        assert!((f.shift - w0).abs() < 1e-3 * g);
        assert!((f.fwhm / g - 1.0).abs() < 1e-3);
    }

    #[test]
    fn flat_spectrum_rejected() {
        let omega: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert!(fit_lorentzian(&omega, &vec![0.0; 100]).is_err());
    }
}
