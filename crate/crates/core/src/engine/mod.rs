//! Time integration, steady states, pulse metrics and sweeps.

mod dopri5;
mod metrics;
mod rosenbrock;
mod steady;
mod sweep;
mod trajectory;

pub use metrics::{count_local_maxima, loglog_slope, pulse_metrics, pulse_metrics_of, PulseMetrics};
pub use steady::{find_steady_state, relative_residual, SteadyConfig, SteadyState};
pub use sweep::{sweep, SweepAxis, SweepPoint};
pub use trajectory::{DenseKind, DenseSegment, Trajectory};

use nalgebra::DMatrix;

use crate::cumulant::CompiledSystem;
use crate::scalar::Real;

use dopri5::Dopri5;
use rosenbrock::Rosenbrock23;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("step size underflow at t = {t:e} (h = {h:e}); the problem is stiff here, use the implicit method or a tighter frame")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t:e}")]
    MaxSteps { t: f64 },
    #[error("singular iteration matrix at t = {t:e}")]
    SingularIteration { t: f64 },
    #[error("initial state has {got} components, system has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no steady state within t = {t:e}; relative residual {residual:e}")]
    NotConverged { t: f64, residual: f64, state: Vec<f64> },
    #[error("trajectory has no interior maximum")]
    NoPulse,
    #[error("signal does not fall below half maximum after the peak")]
    IncompletePulse,
    #[error("dense output missing for component {0}")]
    NoDenseOutput(usize),
}

/// Autonomous or explicitly time-dependent first-order system.
pub trait OdeSystem<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);

    fn is_autonomous(&self) -> bool {
        false
    }

    /// Jacobian `df/dy`; forward differences unless overridden.
    fn jacobian(&self, t: T, y: &[T], jac: &mut DMatrix<T>) {
        let n = self.dim();
        let mut f0 = vec![T::zero(); n];
        let mut f1 = vec![T::zero(); n];
        self.rhs(t, y, &mut f0);
        let mut yp = y.to_vec();
        for j in 0..n {
            let dy = T::eps().sqrt() * y[j].abs().max(T::one());
            yp[j] = y[j] + dy;
            self.rhs(t, &yp, &mut f1);
            for i in 0..n {
                jac[(i, j)] = (f1[i] - f0[i]) / dy;
            }
            yp[j] = y[j];
        }
    }
}

impl<T: Real> OdeSystem<T> for CompiledSystem<T> {
    fn dim(&self) -> usize {
        CompiledSystem::dim(self)
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        self.eval(y, dy)
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn jacobian(&self, _t: T, y: &[T], jac: &mut DMatrix<T>) {
        CompiledSystem::jacobian(self, y, jac)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dopri5,
    Rosenbrock23,
    /// Explicit until Hairer's stiffness test fires, implicit afterwards.
    Auto,
}

/// Which components get a continuous extension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DenseOutput {
    None,
    All,
    Components(Vec<usize>),
}

/// Early termination rule evaluated after every accepted step.
#[derive(Clone, Debug, PartialEq)]
pub enum StopCondition {
    /// Stop once `component` has peaked and fallen below `fraction` of
    /// its running maximum.
    AfterPeakBelow { component: usize, fraction: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<T> {
    pub t0: T,
    pub t_end: T,
    pub rtol: T,
    pub atol: T,
    pub max_step: Option<T>,
    pub initial_step: Option<T>,
    pub max_steps: usize,
    pub method: Method,
    pub dense: DenseOutput,
    pub stop: Option<StopCondition>,
    /// Keep every accepted state; otherwise only the initial and final
    /// states are stored and observers carry the record.
    pub store_states: bool,
}

impl<T: Real> SimConfig<T> {
    pub fn new(t_end: T) -> Self {
        SimConfig {
            t0: T::zero(),
            t_end,
            rtol: T::c(1e-8),
            atol: T::c(1e-10),
            max_step: None,
            initial_step: None,
            max_steps: 2_000_000,
            method: Method::Auto,
            dense: DenseOutput::All,
            stop: None,
            store_states: true,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.rtol > T::zero() && self.atol > T::zero()) {
            return Err(EngineError::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.t_end.is_finite() && self.t0.is_finite() && self.t_end > self.t0) {
            return Err(EngineError::InvalidConfig("time span must be finite and increasing".into()));
        }
        if !self.store_states && self.dense != DenseOutput::None {
            return Err(EngineError::InvalidConfig("dense output requires stored states".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > T::zero()) {
                return Err(EngineError::InvalidConfig("max step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// RMS of `err_i / (atol + rtol * max(|y0_i|, |y1_i|))`.
pub(crate) fn error_norm<T: Real>(n: usize, rtol: T, atol: T, f: impl Fn(usize) -> (T, T, T)) -> T {
    let mut acc = T::zero();
    for i in 0..n {
        let (e, y0, y1) = f(i);
        let sk = atol + rtol * y0.abs().max(y1.abs());
        acc += (e / sk) * (e / sk);
    }
    (acc / T::c(n.max(1) as f64)).sqrt()
}

fn initial_step<T: Real, S: OdeSystem<T> + ?Sized>(sys: &S, cfg: &SimConfig<T>, t: T, y: &[T], order: i32) -> T {
    let n = y.len();
    let mut f0 = vec![T::zero(); n];
    sys.rhs(t, y, &mut f0);
    let d0 = error_norm(n, cfg.rtol, cfg.atol, |i| (y[i], y[i], y[i]));
    let d1 = error_norm(n, cfg.rtol, cfg.atol, |i| (f0[i], y[i], y[i]));
    let h0 = if d0 < T::c(1e-5) || d1 < T::c(1e-5) { T::c(1e-6) } else { T::c(0.01) * d0 / d1 };
    let h0 = h0.min(cfg.t_end - cfg.t0);
    let y1: Vec<T> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![T::zero(); n];
    sys.rhs(t + h0, &y1, &mut f1);
    let d2 = error_norm(n, cfg.rtol, cfg.atol, |i| (f1[i] - f0[i], y[i], y[i])) / h0;
    let big = d1.max(d2);
    let h1 = if big <= T::c(1e-15) {
        (h0 * T::c(1e-3)).max(T::c(1e-6))
    } else {
        (T::c(0.01) / big).powf(T::one() / T::c((order + 1) as f64))
    };
    let h = (T::c(100.0) * h0).min(h1);
    match cfg.max_step {
        Some(m) => h.min(m),
        None => h,
    }
}

/// Outcome of an observer callback.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `sys` from `y0` over the configured span.
pub fn integrate<T: Real, S: OdeSystem<T> + ?Sized>(sys: &S, y0: &[T], cfg: &SimConfig<T>) -> Result<Trajectory<T>, EngineError> {
    integrate_observed(sys, y0, cfg, |_, _| Control::Continue)
}

/// Like [`integrate`], calling `observer(t, y)` after every accepted step.
pub fn integrate_observed<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    y0: &[T],
    cfg: &SimConfig<T>,
    mut observer: impl FnMut(T, &[T]) -> Control,
) -> Result<Trajectory<T>, EngineError> {
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(EngineError::DimensionMismatch { expected: n, got: y0.len() });
    }
    let dense_components: Vec<usize> = match &cfg.dense {
        DenseOutput::None => Vec::new(),
        DenseOutput::All => (0..n).collect(),
        DenseOutput::Components(c) => c.clone(),
    };
    let mut traj = Trajectory {
        times: vec![cfg.t0],
        states: vec![y0.to_vec()],
        dense_components: dense_components.clone(),
        segments: Vec::new(),
        rhs_evaluations: 0,
        switched_to_implicit: None,
    };
    let mut t = cfg.t0;
    let mut y = y0.to_vec();
    let mut implicit = matches!(cfg.method, Method::Rosenbrock23);
    let order = if implicit { 2 } else { 4 };
    let mut h = cfg.initial_step.unwrap_or_else(|| initial_step(sys, cfg, t, &y, order));
    let mut explicit = Dopri5::new(n);
    let mut stiff_solver = Rosenbrock23::new(n);
    let mut peak = f64::NEG_INFINITY;
    let mut steps = 0usize;
    while t < cfg.t_end {
        if steps >= cfg.max_steps {
            return Err(EngineError::MaxSteps { t: t.to_f64() });
        }
        steps += 1;
        let acc = if implicit {
            stiff_solver.step(sys, cfg, &mut t, &mut y, h, &dense_components, &mut traj.rhs_evaluations)?
        } else {
            explicit.step(sys, cfg, &mut t, &mut y, h, &dense_components, &mut traj.rhs_evaluations)?
        };
        h = acc.h_next;
        if !implicit && acc.stiff {
            if matches!(cfg.method, Method::Auto) {
                log::debug!("switching to Rosenbrock23 at t = {:e}", t.to_f64());
                implicit = true;
                traj.switched_to_implicit = Some(t);
            } else {
                log::warn!("problem appears stiff at t = {:e}", t.to_f64());
            }
        }
        if cfg.store_states {
            traj.times.push(t);
            traj.states.push(y.clone());
        }
        if let Some(seg) = acc.dense {
            traj.segments.push(seg);
        }
        if observer(t, &y) == Control::Stop {
            break;
        }
        if let Some(StopCondition::AfterPeakBelow { component, fraction }) = &cfg.stop {
            let v = y[*component].to_f64();
            if v > peak {
                peak = v;
            } else if peak > 0.0 && v < fraction * peak {
                break;
            }
        }
    }
    if !cfg.store_states {
        traj.times.push(t);
        traj.states.push(y);
    }
    Ok(traj)
}
