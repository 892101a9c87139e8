use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use raman_core::cumulant::PhysicalParams;
use raman_core::model::{Model, ModelKind};
use raman_core::opalgebra::OpProduct;
use raman_core::runs::{run_pulse, PulseOptions, PulseRun};

/// `Q = ad a + sum_l q_l s_ll` is conserved; `<p>` carries charge
/// `[Q, p] = c p`.
fn charge(p: &OpProduct, levels: &[i64]) -> i64 {
    let atoms: i64 = p.atoms().iter().map(|a| levels[a.l as usize - 1] - levels[a.m as usize - 1]).sum();
    p.creations() as i64 - p.annihilations() as i64 + atoms
}

#[test]
fn charged_equations_vanish_on_the_neutral_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [ModelKind::Full, ModelKind::Effective] {
        let model = Model::derive(kind).unwrap();
        let levels = model.master.level_charges.clone().unwrap();
        let sys = model.compile::<f64>(&PhysicalParams::reference()).unwrap();
        let charged: Vec<bool> = sys.variables().iter().map(|p| charge(p, &levels) != 0).collect();
        assert!(charged.iter().any(|&c| c) && charged.iter().any(|&c| !c));
        for _ in 0..10 {
            let mut y = vec![0.0; sys.dim()];
            for (i, &c) in charged.iter().enumerate() {
                if !c {
                    let o = sys.offset(i);
                    let width = if sys.is_real(i) { 1 } else { 2 };
                    for v in &mut y[o..o + width] {
                        *v = rng.random_range(-1.0..1.0);
                    }
                }
            }
            let mut dy = vec![0.0; sys.dim()];
            sys.eval(&y, &mut dy);
            for (i, &c) in charged.iter().enumerate() {
                if c {
                    let o = sys.offset(i);
                    let width = if sys.is_real(i) { 1 } else { 2 };
                    assert!(dy[o..o + width].iter().all(|&d| d == 0.0), "{kind}: d<{}>", sys.variables()[i]);
                }
            }
        }
    }
}

fn pulse(kind: ModelKind, n: f64, t_end: f64) -> PulseRun {
    let mut p = PhysicalParams::reference();
    p.n_atoms = n;
    run_pulse(&Model::derive(kind).unwrap(), &p, &PulseOptions::new(t_end)).unwrap()
}

/// Largest `(N/2 - J) / (N/2)` along the run.
fn max_depth(run: &PulseRun) -> f64 {
    let half = 0.5 * run.params.n_atoms;
    run.spin().unwrap().iter().map(|s| (half - s.dicke.j) / half).fold(0.0, f64::max)
}

fn check_spin(run: &PulseRun) {
    let n = run.params.n_atoms;
    let tol = 1e-6 * n;
    for s in run.spin().unwrap() {
        assert!(s.dicke.j >= 0.0 && s.dicke.j <= n / 2.0);
        assert!(s.dicke.m.abs() <= s.dicke.j + tol, "t = {:e}: {:?}", s.t, s.dicke);
        assert!(s.bloch.x == 0.0 && s.bloch.y == 0.0);
    }
}

#[test]
fn collective_spin_stays_in_the_dicke_ladder() {
    for run in [pulse(ModelKind::Full, 1e4, 1e-3), pulse(ModelKind::Full, 1e6, 2e-5), pulse(ModelKind::Effective, 1e6, 2e-5)] {
        check_spin(&run);
        let spin = run.spin().unwrap();
        let half = 0.5 * run.params.n_atoms;
        assert!((spin[0].dicke.m - half).abs() < 1e-9 * half && (spin[0].dicke.j - half).abs() < 1e-6 * half);
    }
}

#[test]
fn crossover_pulse_descends_the_ladder() {
    let run = pulse(ModelKind::Full, 1e4, 1e-3);
    let spin = run.spin().unwrap();
    let half = 0.5 * run.params.n_atoms;
    let end = spin.last().unwrap().dicke;
    assert!(end.m < -0.9 * half, "{end:?}");
    let k = run.metrics().unwrap().peak_time;
    let early: Vec<_> = spin.iter().filter(|s| s.t < 0.5 * k).collect();
    assert!(early.iter().all(|s| s.dicke.j >= 0.8 * half));
    // M decreases, up to the virtual excitation of level 3, which follows
    // the drive at the optical detuning with relative size (Omega/Delta)^2.
    let p = &run.params;
    let wobble = 4.0 * (p.omega_hz / p.delta_hz()).powi(2) * half;
    for w in spin.windows(2) {
        assert!(w[1].dicke.m <= w[0].dicke.m + wobble, "t = {:e}: {} -> {}", w[1].t, w[0].dicke.m, w[1].dicke.m);
    }
}

#[test]
fn crossover_leaves_the_boundary_further_than_strong_coupling() {
    let crossover = max_depth(&pulse(ModelKind::Full, 1e4, 1e-3));
    let strong = max_depth(&pulse(ModelKind::Full, 1e6, 2e-5));
    assert!(crossover > strong, "crossover {crossover:e}, strong {strong:e}");
}
