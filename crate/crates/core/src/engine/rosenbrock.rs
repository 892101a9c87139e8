//! L-stable Rosenbrock 2(3) pair of Shampine and Reichelt (`ode23s`).

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

use super::dopri5::Accepted;
use super::trajectory::{DenseKind, DenseSegment};
use super::{error_norm, EngineError, OdeSystem, SimConfig};

pub(crate) struct Rosenbrock23<T: Real> {
    jac: DMatrix<T>,
    f0: Vec<T>,
    f1: Vec<T>,
    f2: Vec<T>,
    ytmp: Vec<T>,
    ynew: Vec<T>,
    fresh_f0: bool,
}

impl<T: Real> Rosenbrock23<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Rosenbrock23 {
            jac: DMatrix::zeros(dim, dim),
            f0: z.clone(),
            f1: z.clone(),
            f2: z.clone(),
            ytmp: z.clone(),
            ynew: z,
            fresh_f0: false,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn step<S: OdeSystem<T> + ?Sized>(
        &mut self,
        sys: &S,
        cfg: &SimConfig<T>,
        t: &mut T,
        y: &mut [T],
        mut h: T,
        dense_components: &[usize],
        evals: &mut usize,
    ) -> Result<Accepted<T>, EngineError> {
        let n = y.len();
        let d = T::one() / (T::c(2.0) + T::c(2.0).sqrt());
        let e32 = T::c(6.0) + T::c(2.0).sqrt();
        if !self.fresh_f0 {
            sys.rhs(*t, y, &mut self.f0);
            *evals += 1;
        }
        self.fresh_f0 = false;
        sys.jacobian(*t, y, &mut self.jac);
        // Time derivative of f, by finite differences for non-autonomous systems.
        let mut ft = vec![T::zero(); n];
        if !sys.is_autonomous() {
            let dt = T::eps().sqrt() * t.abs().max(T::one());
            sys.rhs(*t + dt, y, &mut ft);
            *evals += 1;
            for i in 0..n {
                ft[i] = (ft[i] - self.f0[i]) / dt;
            }
        }
        let hmax = cfg.max_step.unwrap_or(cfg.t_end - cfg.t0);
        loop {
            h = h.min(hmax).min(cfg.t_end - *t);
            if h <= T::c(10.0) * T::eps() * t.abs().max(T::eps()) {
                return Err(EngineError::StepUnderflow { t: t.to_f64(), h: h.to_f64() });
            }
            let w = DMatrix::<T>::identity(n, n) - &self.jac * (h * d);
            let lu = w.lu();
            let solve = |b: DVector<T>| -> Result<DVector<T>, EngineError> {
                lu.solve(&b).ok_or(EngineError::SingularIteration { t: t.to_f64() })
            };
            let b0 = DVector::from_iterator(n, (0..n).map(|i| self.f0[i] + h * d * ft[i]));
            let k1 = solve(b0)?;
            for i in 0..n {
                self.ytmp[i] = y[i] + T::c(0.5) * h * k1[i];
            }
            sys.rhs(*t + T::c(0.5) * h, &self.ytmp, &mut self.f1);
            *evals += 1;
            let b1 = DVector::from_iterator(n, (0..n).map(|i| self.f1[i] - k1[i]));
            let k2 = solve(b1)? + &k1;
            for i in 0..n {
                self.ynew[i] = y[i] + h * k2[i];
            }
            sys.rhs(*t + h, &self.ynew, &mut self.f2);
            *evals += 1;
            let b2 = DVector::from_iterator(
                n,
                (0..n).map(|i| {
                    self.f2[i] - e32 * (k2[i] - self.f1[i]) - T::c(2.0) * (k1[i] - self.f0[i]) + h * d * ft[i]
                }),
            );
            let k3 = solve(b2)?;
            let err = error_norm(n, cfg.rtol, cfg.atol, |i| {
                (h / T::c(6.0) * (k1[i] - T::c(2.0) * k2[i] + k3[i]), y[i], self.ynew[i])
            });
            if !err.is_finite() {
                h *= T::c(0.1);
                continue;
            }
            let fac = T::c(0.9) * err.max(T::c(1e-10)).powf(-T::one() / T::c(3.0));
            if err <= T::one() {
                let dense = if dense_components.is_empty() {
                    None
                } else {
                    let mut coeffs = Vec::with_capacity(dense_components.len() * 3);
                    for &i in dense_components {
                        coeffs.extend_from_slice(&[y[i], h * k1[i], h * k2[i]]);
                    }
                    Some(DenseSegment { t0: *t, h, kind: DenseKind::Rosenbrock23, coeffs })
                };
                y.copy_from_slice(&self.ynew);
                std::mem::swap(&mut self.f0, &mut self.f2);
                self.fresh_f0 = true;
                *t += h;
                return Ok(Accepted { dense, h_next: h * fac.min(T::c(5.0)).max(T::c(0.2)), stiff: true });
            }
            h *= fac.min(T::one()).max(T::c(0.2));
        }
    }
}
