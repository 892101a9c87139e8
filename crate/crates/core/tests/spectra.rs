use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use raman_core::cumulant::{PhysicalParams, TWO_PI};
use raman_core::model::{Model, ModelKind};
use raman_core::runs::{collective_purcell_hz, run_steady, SteadyPoint};
use raman_core::spectra::*;

fn damped_mode(kappa: f64, detuning: f64, n: f64) -> CorrelationSystem<f64> {
    CorrelationSystem {
        operators: vec![raman_core::opalgebra::OpProduct::boson(1, 0)],
        matrix: DMatrix::from_element(1, 1, Complex64::new(-kappa / 2.0, detuning)),
        initial: DVector::from_element(1, Complex64::new(n, 0.0)),
        photon_number: n,
        kappa,
    }
}

#[test]
fn single_mode_is_lorentzian() {
    let (kappa, detuning, n) = (TWO_PI * 100.0, TWO_PI * 30.0, 2.5);
    let cs = damped_mode(kappa, detuning, n);
    let s = spectrum(&cs, &SpectrumOptions::default()).unwrap();
    assert!((s.fit.fwhm / kappa - 1.0).abs() < 1e-3, "{:?}", s.fit);
    assert!((s.fit.shift - detuning).abs() < 1e-3 * kappa);
    // Two-sided transform: peak 4 kappa n / kappa * 2 = 8 n.
    assert!((s.fit.amplitude / (8.0 * n) - 1.0).abs() < 1e-2);
    assert!((s.integrated() / (2.0 * kappa * n) - 1.0).abs() < 1e-2);
    for (&w, &v) in s.omega.iter().zip(&s.values).step_by(97) {
        let exact = cs.resolvent(w);
        assert!((v - exact).abs() < 1e-3 * s.max(), "{w}: {v} vs {exact}");
    }
}

#[test]
fn undamped_mode_is_rejected() {
    let cs = damped_mode(0.0, 1.0, 1.0);
    assert!(matches!(spectrum(&cs, &SpectrumOptions::default()), Err(SpectrumError::NotDecaying { .. })));
}

fn pumped(kind: ModelKind, fraction: f64) -> SteadyPoint {
    let mut p = PhysicalParams::reference();
    p.gamma12_hz = fraction * collective_purcell_hz(&p).unwrap();
    run_steady(&Model::derive(kind).unwrap(), &p, 1.0).unwrap()
}

#[test]
fn pumped_spectra_obey_sum_rule_and_positivity() {
    for kind in [ModelKind::Full, ModelKind::Effective] {
        let pt = pumped(kind, 0.5);
        let s = pt.spectrum(&SpectrumOptions::default()).unwrap();
        let rule = 2.0 * s.kappa * s.photon_number;
        assert!((s.integrated() / rule - 1.0).abs() < 1e-2, "{kind}: {} vs {rule}", s.integrated());
        let floor = -1e-6 * s.max();
        assert!(s.values.iter().all(|&v| v >= floor), "{kind}: negative spectral density");
        assert!((s.photon_number - pt.photon_number).abs() < 1e-12 * pt.photon_number);
    }
}

#[test]
fn longer_horizon_leaves_linewidth_unchanged() {
    let cs = pumped(ModelKind::Effective, 0.5).correlation().unwrap();
    let a = spectrum(&cs, &SpectrumOptions::default()).unwrap();
    let b = spectrum(&cs, &SpectrumOptions { horizon_scale: 2.0, ..SpectrumOptions::default() }).unwrap();
    assert!((a.fit.fwhm / b.fit.fwhm - 1.0).abs() < 1e-2);
    assert!((a.fit.shift - b.fit.shift).abs() < 1e-2 * a.fit.fwhm);
}

#[test]
fn linewidth_follows_slowest_mode() {
    let cs = pumped(ModelKind::Effective, 0.5).correlation().unwrap();
    let s = spectrum(&cs, &SpectrumOptions::default()).unwrap();
    let slow = cs.slowest_mode();
    assert!((s.fit.fwhm / (-2.0 * slow.re) - 1.0).abs() < 0.05, "{} vs {}", s.fit.fwhm, -2.0 * slow.re);
    assert!(cs.eigenvalues().iter().all(|l| l.re < 0.0));
    assert_eq!(cs.operators[0], raman_core::opalgebra::OpProduct::boson(1, 0));
}

#[test]
fn full_model_line_sits_at_the_light_shift() {
    let pt = pumped(ModelKind::Full, 0.5);
    let s = pt.spectrum(&SpectrumOptions::default()).unwrap();
    let p = &pt.params;
    let light = p.omega() * p.omega() / p.delta();
    assert!((s.fit.shift.abs() / light - 1.0).abs() < 0.05, "{} vs {}", s.fit.shift / TWO_PI, light / TWO_PI);
    let reference = stark_shift_reference(p.omega(), p.delta()).unwrap();
    assert!((light / reference - 4.0).abs() < 1e-12);
}

#[test]
fn full_linewidth_grows_with_pumping() {
    let widths: Vec<f64> = (2..=9)
        .map(|k| pumped(ModelKind::Full, k as f64 / 10.0).spectrum(&SpectrumOptions::default()).unwrap().fit.fwhm)
        .collect();
    assert!(widths.windows(2).all(|w| w[1] > w[0]), "{widths:?}");
}
