use crate::scalar::Real;

use super::{integrate_observed, Control, DenseOutput, EngineError, OdeSystem, SimConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyConfig<T> {
    /// Characteristic rate `nu` (rad/s) normalising the residual.
    pub rate: T,
    /// Threshold on `|f(y)| / (nu |y|)`.
    pub tolerance: T,
    /// The residual must stay below threshold for this many periods `2 pi / nu`.
    pub window_periods: T,
    /// Integration settings; `t_end` bounds the search.
    pub sim: SimConfig<T>,
}

impl<T: Real> SteadyConfig<T> {
    pub fn new(rate: T, t_max: T) -> Self {
        let mut sim = SimConfig::new(t_max);
        sim.dense = DenseOutput::None;
        SteadyConfig { rate, tolerance: T::c(1e-8), window_periods: T::c(10.0), sim }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState<T> {
    pub state: Vec<T>,
    pub t: T,
    pub residual: T,
}

/// `|f(y)| / (nu |y|)` in the Euclidean norm.
pub fn relative_residual<T: Real, S: OdeSystem<T> + ?Sized>(sys: &S, t: T, y: &[T], rate: T) -> T {
    let mut f = vec![T::zero(); y.len()];
    sys.rhs(t, y, &mut f);
    let nf = f.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    let ny = y.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if ny == T::zero() {
        return if nf == T::zero() { T::zero() } else { T::max_value().unwrap_or(T::c(f64::MAX)) };
    }
    nf / (rate * ny)
}

/// Integrates until the relative residual has stayed below tolerance for
/// the configured window.
pub fn find_steady_state<T: Real, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    y0: &[T],
    cfg: &SteadyConfig<T>,
) -> Result<SteadyState<T>, EngineError> {
    if !(cfg.rate > T::zero()) {
        return Err(EngineError::InvalidConfig("steady-state rate must be positive".into()));
    }
    let window = cfg.window_periods * T::two_pi() / cfg.rate;
    let mut below_since: Option<T> = None;
    let mut last = (cfg.sim.t0, T::max_value().unwrap_or(T::c(f64::MAX)));
    let mut done = false;
    let traj = integrate_observed(sys, y0, &cfg.sim, |t, y| {
        let r = relative_residual(sys, t, y, cfg.rate);
        last = (t, r);
        if r < cfg.tolerance {
            let start = *below_since.get_or_insert(t);
            if t - start >= window {
                done = true;
                return Control::Stop;
            }
        } else {
            below_since = None;
        }
        Control::Continue
    })?;
    let state = traj.last_state().to_vec();
    if done {
        Ok(SteadyState { state, t: last.0, residual: last.1 })
    } else {
        Err(EngineError::NotConverged {
            t: last.0.to_f64(),
            residual: last.1.to_f64(),
            state: state.iter().map(|x| x.to_f64()).collect(),
        })
    }
}
