use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseKind {
    /// Hairer's quartic continuous extension, 5 coefficients per component.
    Dopri5,
    /// `ode23s` interpolant, 3 coefficients per component.
    Rosenbrock23,
}

impl DenseKind {
    fn width(self) -> usize {
        match self {
            DenseKind::Dopri5 => 5,
            DenseKind::Rosenbrock23 => 3,
        }
    }
}

/// Continuous extension over one accepted step `[t0, t0 + h]`.
#[derive(Clone, Debug)]
pub struct DenseSegment<T> {
    pub t0: T,
    pub h: T,
    pub kind: DenseKind,
    pub coeffs: Vec<T>,
}

impl<T: Real> DenseSegment<T> {
    /// Value of the `slot`-th stored component at `t`.
    pub fn eval(&self, slot: usize, t: T) -> T {
        let s = (t - self.t0) / self.h;
        let w = self.kind.width();
        let c = &self.coeffs[slot * w..(slot + 1) * w];
        match self.kind {
            DenseKind::Dopri5 => {
                let s1 = T::one() - s;
                c[0] + s * (c[1] + s1 * (c[2] + s * (c[3] + s1 * c[4])))
            }
            DenseKind::Rosenbrock23 => {
                let d = T::one() / (T::c(2.0) + T::c(2.0).sqrt());
                let den = T::one() - T::c(2.0) * d;
                c[0] + c[1] * (s * (T::one() - s) / den) + c[2] * (s * (s - T::c(2.0) * d) / den)
            }
        }
    }
}

/// Accepted steps of one integration.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    /// Components with continuous extension, in slot order.
    pub dense_components: Vec<usize>,
    pub segments: Vec<DenseSegment<T>>,
    pub rhs_evaluations: usize,
    /// Time at which the integrator switched to the implicit method.
    pub switched_to_implicit: Option<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_dense(&self, component: usize) -> bool {
        self.dense_components.contains(&component)
    }

    pub fn last_state(&self) -> &[T] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn t_end(&self) -> T {
        *self.times.last().expect("trajectory holds the initial time")
    }

    pub fn component(&self, i: usize) -> Vec<T> {
        self.states.iter().map(|y| y[i]).collect()
    }

    /// Value of component `i` at `t`, from the continuous extension when
    /// stored and by linear interpolation otherwise.
    pub fn value_at(&self, i: usize, t: T) -> T {
        let k = match self.times.binary_search_by(|x| x.partial_cmp(&t).expect("finite time")) {
            Ok(k) => return self.states[k][i],
            Err(k) => k,
        };
        if k == 0 {
            return self.states[0][i];
        }
        if k >= self.times.len() {
            return self.last_state()[i];
        }
        if let Some(slot) = self.dense_components.iter().position(|&c| c == i) {
            if let Some(seg) = self.segments.get(k - 1) {
                return seg.eval(slot, t);
            }
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.states[k - 1][i] * (T::one() - w) + self.states[k][i] * w
    }
}
