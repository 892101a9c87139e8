//! Shipped scenarios, one per figure panel.

use raman_core::engine::SweepAxis;
use raman_core::model::ModelKind;

use crate::config::{Metric, RunKind, ScenarioConfig, SweepSpec};

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub description: &'static str,
}

const CROSSOVER: f64 = 1e4;
const STRONG: f64 = 1e6;

fn base(name: &str, model: ModelKind, kind: RunKind, n: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(name, model, kind);
    c.params.n_atoms = n;
    c
}

fn pulse(name: &str, model: ModelKind, n: f64, t_end: f64) -> ScenarioConfig {
    let mut c = base(name, model, RunKind::Pulse, n);
    c.t_end = t_end;
    c
}

fn sweep(name: &str, n: f64, t_end: f64, axis: SweepAxis, values: &[f64], metric: Metric) -> ScenarioConfig {
    let mut c = base(name, ModelKind::Full, RunKind::Sweep, n);
    c.t_end = t_end;
    if metric == Metric::Pulse {
        c.stop_fraction = Some(0.01);
    }
    c.sweep = Some(SweepSpec { axis, values: values.to_vec(), metric, relative: false });
    c
}

fn pumped(mut c: ScenarioConfig) -> ScenarioConfig {
    c.pumping = Some(0.5);
    c
}

fn relative(mut c: ScenarioConfig) -> ScenarioConfig {
    if let Some(s) = &mut c.sweep {
        s.relative = true;
    }
    c
}

/// Geometric grid from `lo` to `hi` with `n` points.
fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn all() -> Vec<Scenario> {
    use Metric::*;
    use SweepAxis::*;
    let s = |config, description| Scenario { config, description };
    vec![
        s(pulse("fig2a", ModelKind::Full, CROSSOVER, 1e-3), "crossover pulse with its Dicke-space trajectory"),
        s(sweep("fig2b", CROSSOVER, 5e-3, N, &geometric(5e3, 5e4, 7), Pulse), "crossover pulse metrics against atom number"),
        s(sweep("fig2c", CROSSOVER, 5e-3, Omega, &geometric(3e6, 8e6, 6), Pulse), "crossover pulse metrics against drive strength"),
        s(sweep("fig2d", CROSSOVER, 5e-3, Delta, &geometric(1.5e9, 4e9, 6), Pulse), "crossover pulse metrics against drive detuning"),
        s(pulse("fig3a", ModelKind::Full, STRONG, 2e-5), "distorted strong-coupling pulse with its Dicke-space trajectory"),
        s(sweep("fig3b", STRONG, 5e-5, N, &geometric(5e5, 5e6, 6), Pulse), "strong-coupling pulse metrics against atom number"),
        s(sweep("fig3c", STRONG, 5e-5, Delta, &geometric(1.5e9, 4e9, 6), Pulse), "strong-coupling pulse metrics against drive detuning"),
        s(pulse("fig3d", ModelKind::Full, 5e7, 2e-6), "strong-coupling pulse with an oscillating tail"),
        s(pumped(pulse("fig4a", ModelKind::Full, CROSSOVER, 2e-2)), "pumped crossover evolution towards the steady state"),
        s(pumped(base("fig4b", ModelKind::Full, RunKind::Spectrum, CROSSOVER)), "steady-state emission spectrum"),
        s(
            relative(sweep("fig4c", CROSSOVER, 1e-3, Gamma12, &linear(0.1, 1.1, 11), Spectrum)),
            "steady photon number, line shift and linewidth against pumping (multiples of N Gamma)",
        ),
        s(
            pumped(sweep("fig4d", CROSSOVER, 1e-3, Omega, &geometric(2.5e6, 1e7, 7), Spectrum)),
            "steady photon number, line shift and linewidth against drive strength",
        ),
        s(pulse("figA1", ModelKind::Effective, STRONG, 2e-5), "effective-model pulse at strong coupling"),
        s(sweep("figA2", STRONG, 5e-5, Omega, &geometric(3e6, 8e6, 6), Pulse), "strong-coupling pulse metrics against drive strength"),
        s(
            pumped(sweep("figA3", CROSSOVER, 1e-3, Delta, &[-4e9, -3e9, -2e9, -1.5e9, 1.5e9, 2e9, 3e9, 4e9], Spectrum)),
            "line shift against drive detuning of either sign",
        ),
        s(
            relative(sweep("figA4", STRONG, 1e-3, Gamma12, &linear(0.1, 1.1, 11), Spectrum)),
            "pumped strong-coupling steady state against pumping",
        ),
    ]
}

pub fn find(name: &str) -> Option<Scenario> {
    all().into_iter().find(|s| s.config.name.eq_ignore_ascii_case(name))
}
