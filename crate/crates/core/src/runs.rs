//! Standard runs shared by tests and the command line: pulses from the
//! upper ground level, pumped steady states and their spectra.

use crate::cumulant::{derive_effective, CompiledSystem, CumulantError, PhysicalParams, TWO_PI};
use crate::engine::{
    find_steady_state, integrate, pulse_metrics, DenseOutput, EngineError, PulseMetrics, SimConfig, StopCondition,
    SteadyConfig, SteadyState, Trajectory,
};
use crate::model::{photon_number, population, product_state, read, Model};
use crate::observables::{bloch_vector, dicke_coordinates, BlochVector, DickeCoordinates, GroundMoments, ObservableError};
use crate::spectra::{derive_correlation_system, spectrum, CorrelationSystem, SpectrumError, SpectrumOptions, SpectrumResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

/// Time stepping for a pulse: defaults with dense output on the photon
/// number, optionally stopping once it has decayed to `stop_fraction` of
/// its maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseOptions {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub stop_fraction: Option<f64>,
}

impl PulseOptions {
    pub fn new(t_end: f64) -> Self {
        PulseOptions { t_end, rtol: 1e-8, atol: 1e-10, stop_fraction: None }
    }
}

pub struct PulseRun {
    pub params: PhysicalParams,
    pub system: CompiledSystem<f64>,
    pub trajectory: Trajectory<f64>,
    /// State offset of `<ad a>`.
    pub photon: usize,
}

/// Integrates from the cavity vacuum with every atom in level 2.
pub fn run_pulse(model: &Model, p: &PhysicalParams, opts: &PulseOptions) -> Result<PulseRun, RunError> {
    let system = model.compile::<f64>(p)?;
    let photon = photon_offset(&system)?;
    let mut cfg = SimConfig::new(opts.t_end);
    cfg.rtol = opts.rtol;
    cfg.atol = opts.atol;
    cfg.dense = DenseOutput::Components(vec![photon]);
    cfg.stop = opts.stop_fraction.map(|fraction| StopCondition::AfterPeakBelow { component: photon, fraction });
    let trajectory = integrate(&system, &product_state(&system, 2), &cfg)?;
    Ok(PulseRun { params: p.clone(), system, trajectory, photon })
}

fn photon_offset(sys: &CompiledSystem<f64>) -> Result<usize, RunError> {
    let i = sys
        .variable_index(&photon_number())
        .ok_or_else(|| CumulantError::Unsupported("photon number is not a variable".into()))?;
    Ok(sys.offset(i))
}

/// Collective spin along a trajectory at one stored step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinSample {
    pub t: f64,
    pub dicke: DickeCoordinates,
    pub bloch: BlochVector,
}

impl PulseRun {
    pub fn metrics(&self) -> Result<PulseMetrics, EngineError> {
        pulse_metrics(&self.trajectory, self.photon)
    }

    pub fn photon_series(&self) -> Vec<f64> {
        self.trajectory.component(self.photon)
    }

    /// `<s_ll[1]>` at every stored step; `None` if the level is absent.
    pub fn population_series(&self, level: u8) -> Option<Vec<f64>> {
        let i = self.system.variable_index(&population(level))?;
        Some(self.trajectory.component(self.system.offset(i)))
    }

    pub fn spin(&self) -> Result<Vec<SpinSample>, RunError> {
        let n = self.params.n_atoms;
        self.trajectory
            .times
            .iter()
            .zip(&self.trajectory.states)
            .map(|(&t, y)| {
                let g = GroundMoments::from_state(&self.system, y, n)?;
                Ok(SpinSample { t, dicke: dicke_coordinates(&g)?, bloch: bloch_vector(&g) })
            })
            .collect()
    }
}

/// Pumping rate `N Gamma` (Hz) with `Gamma` the Purcell rate of the
/// eliminated model.
pub fn collective_purcell_hz(p: &PhysicalParams) -> Result<f64, RunError> {
    Ok(p.n_atoms * derive_effective(p)?.purcell_hz())
}

pub struct SteadyPoint {
    pub params: PhysicalParams,
    pub system: CompiledSystem<f64>,
    pub steady: SteadyState<f64>,
    pub photon_number: f64,
}

/// Steady state reached from the initial pulse state, with the residual
/// normalised by `2 pi gamma12`.
pub fn run_steady(model: &Model, p: &PhysicalParams, t_max: f64) -> Result<SteadyPoint, RunError> {
    let system = model.compile::<f64>(p)?;
    let rate = if p.gamma12_hz > 0.0 { TWO_PI * p.gamma12_hz } else { p.kappa() };
    let steady = find_steady_state(&system, &product_state(&system, 2), &SteadyConfig::new(rate, t_max))?;
    let photon_number = read(&system, &steady.state, &photon_number()).map_or(0.0, |z| z.re);
    Ok(SteadyPoint { params: p.clone(), system, steady, photon_number })
}

impl SteadyPoint {
    pub fn correlation(&self) -> Result<CorrelationSystem<f64>, RunError> {
        Ok(derive_correlation_system(&self.system, &self.steady.state, self.params.kappa())?)
    }

    pub fn spectrum(&self, opts: &SpectrumOptions) -> Result<SpectrumResult, RunError> {
        Ok(spectrum(&self.correlation()?, opts)?)
    }
}
