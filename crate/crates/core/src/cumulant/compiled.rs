use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};

use crate::opalgebra::{OpProduct, Symbol};
use crate::scalar::{cx_from, Coefficient, Real};

use super::complete::{Closure, MomentRef, MomentSystem};
use super::master::sym;
use super::params::{EffectiveParams, PhysicalParams, TWO_PI};
use super::CumulantError;

/// Numeric values of the symbols. Rates and frequencies are in Hz; the
/// atom number is a plain count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamBinding {
    values: BTreeMap<Symbol, f64>,
}

impl ParamBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        self.values.insert(Symbol::new(name), value);
        self
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, f64)> {
        self.values.iter().map(|(s, v)| (s, *v))
    }

    fn frequencies(p: &PhysicalParams) -> Self {
        ParamBinding::new()
            .with(sym::N, p.n_atoms)
            .with(sym::KAPPA, p.kappa_hz)
            .with(sym::GAMMA12, p.gamma12_hz)
            .with(sym::WC, p.wc_hz)
            .with(sym::W31, p.w31_hz)
            .with(sym::W32, p.w32_hz)
            .with(sym::WD, p.wd_hz)
    }

    /// Binding for the three-level model.
    pub fn full(p: &PhysicalParams) -> Self {
        Self::frequencies(p)
            .with(sym::G31, p.g31_hz)
            .with(sym::OMEGA, p.omega_hz)
            .with(sym::GAMMA31, p.gamma31_hz)
    }

    /// Binding for the two-level model.
    pub fn effective(p: &PhysicalParams, e: &EffectiveParams) -> Self {
        let g = e.g21_hz();
        Self::frequencies(p)
            .with(sym::G21_RE, g.re)
            .with(sym::G21_IM, g.im)
            .with(sym::GAMMA21, e.gamma21_hz())
    }
}

fn is_count(s: &Symbol) -> bool {
    s.name() == sym::N
}

#[derive(Clone, Debug)]
struct FlatTerm<T> {
    target: usize,
    coeff: Complex<T>,
    refs: [MomentRef; 3],
    len: u8,
}

/// Moment system bound to numbers: `dy/dt = f(y)` over a real state
/// vector in which complex moments occupy two slots (re, im).
#[derive(Clone, Debug)]
pub struct CompiledSystem<T> {
    variables: Vec<OpProduct>,
    real: Vec<bool>,
    offsets: Vec<usize>,
    dim: usize,
    terms: Vec<FlatTerm<T>>,
    index: HashMap<OpProduct, usize>,
    closure: Closure,
}

impl<C: Coefficient> MomentSystem<C> {
    /// Binds parameters.
    ///
    /// Coefficients of each distinct moment product are summed in Hz before
    /// the single factor `2 pi` is applied, so that large frequencies such as
    /// `wc` and `w31` cancel exactly. Each coefficient must be linear in the
    /// rate symbols.
    pub fn compile<T: Real>(&self, binding: &ParamBinding) -> Result<CompiledSystem<T>, CumulantError> {
        let n = self.len();
        let mut offsets = Vec::with_capacity(n);
        let mut dim = 0;
        for i in 0..n {
            offsets.push(dim);
            dim += if self.is_real(i) { 1 } else { 2 };
        }
        let mut terms = Vec::new();
        for i in 0..n {
            let mut grouped: BTreeMap<Vec<MomentRef>, Complex64> = BTreeMap::new();
            for (k, c) in self.rhs(i).terms() {
                let degree = k.params.degree_in(|s| !is_count(s));
                if degree != 1 {
                    return Err(CumulantError::Structure(format!(
                        "coefficient {} of d<{}>/dt is not linear in the rates",
                        k.params,
                        self.variables()[i]
                    )));
                }
                let mut v = c.to_complex64();
                for (s, p) in k.params.powers() {
                    let x = binding.get(s).ok_or_else(|| CumulantError::UnboundParameter(s.name().to_string()))?;
                    v *= x.powi(p as i32);
                }
                let mut refs = Vec::with_capacity(k.moments.len());
                for m in &k.moments {
                    let r = self.resolve(m).ok_or_else(|| {
                        CumulantError::Structure(format!("moment <{m}> is not a variable"))
                    })?;
                    refs.push(r);
                }
                if refs.len() > 3 {
                    return Err(CumulantError::Unsupported("products of more than three moments".into()));
                }
                refs.sort();
                *grouped.entry(refs).or_insert(Complex64::new(0.0, 0.0)) += v;
            }
            for (refs, v) in grouped {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut arr = [MomentRef { index: 0, conj: false }; 3];
                arr[..refs.len()].copy_from_slice(&refs);
                terms.push(FlatTerm { target: i, coeff: cx_from(v * TWO_PI), refs: arr, len: refs.len() as u8 });
            }
        }
        Ok(CompiledSystem {
            variables: self.variables().to_vec(),
            real: self.real_flags().to_vec(),
            offsets,
            dim,
            terms,
            index: self.variables().iter().cloned().enumerate().map(|(i, p)| (p, i)).collect(),
            closure: self.closure().clone(),
        })
    }
}

impl<T: Real> CompiledSystem<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variables(&self) -> &[OpProduct] {
        &self.variables
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.real[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn variable_index(&self, p: &OpProduct) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Complex value of variable `i`.
    pub fn variable(&self, y: &[T], i: usize) -> Complex<T> {
        let o = self.offsets[i];
        if self.real[i] {
            Complex::new(y[o], T::zero())
        } else {
            Complex::new(y[o], y[o + 1])
        }
    }

    fn deref(&self, z: &[Complex<T>], r: MomentRef) -> Complex<T> {
        if r.conj {
            z[r.index].conj()
        } else {
            z[r.index]
        }
    }

    /// Value of `<p>` for any product equivalent to a variable or to the
    /// adjoint of one.
    pub fn moment(&self, y: &[T], p: &OpProduct) -> Option<Complex<T>> {
        let (rep, conj) = self.closure.representative(p);
        let z = self.variable(y, *self.index.get(&rep)?);
        Some(if conj { z.conj() } else { z })
    }

    pub fn moments(&self, y: &[T]) -> Vec<Complex<T>> {
        (0..self.variables.len()).map(|i| self.variable(y, i)).collect()
    }

    /// State vector with each variable set from `f`.
    pub fn state_from(&self, f: impl Fn(&OpProduct) -> Complex64) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        for (i, p) in self.variables.iter().enumerate() {
            let v = f(p);
            let o = self.offsets[i];
            y[o] = T::c(v.re);
            if !self.real[i] {
                y[o + 1] = T::c(v.im);
            }
        }
        y
    }

    /// Complex time derivatives of all variables.
    pub fn complex_rhs(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut f = vec![Complex::new(T::zero(), T::zero()); self.variables.len()];
        for t in &self.terms {
            let mut v = t.coeff;
            for r in &t.refs[..t.len as usize] {
                v *= self.deref(z, *r);
            }
            f[t.target] += v;
        }
        f
    }

    pub fn eval(&self, y: &[T], dy: &mut [T]) {
        let z = self.moments(y);
        let f = self.complex_rhs(&z);
        for (i, fi) in f.iter().enumerate() {
            let o = self.offsets[i];
            dy[o] = fi.re;
            if !self.real[i] {
                dy[o + 1] = fi.im;
            }
        }
    }

    /// Analytic Jacobian of [`Self::eval`].
    ///
    /// With `z = u + iv`, `dF/du = F_z + F_zbar` and `dF/dv = i(F_z - F_zbar)`.
    pub fn jacobian(&self, y: &[T], jac: &mut DMatrix<T>) {
        jac.fill(T::zero());
        let z = self.moments(y);
        let i_unit = Complex::new(T::zero(), T::one());
        for t in &self.terms {
            let refs = &t.refs[..t.len as usize];
            for (j, r) in refs.iter().enumerate() {
                let mut partial = t.coeff;
                for (l, q) in refs.iter().enumerate() {
                    if l != j {
                        partial *= self.deref(&z, *q);
                    }
                }
                let du = partial;
                let dv = if r.conj { -(partial * i_unit) } else { partial * i_unit };
                let row = self.offsets[t.target];
                let col = self.offsets[r.index];
                jac[(row, col)] += du.re;
                if !self.real[r.index] {
                    jac[(row, col + 1)] += dv.re;
                }
                if !self.real[t.target] {
                    jac[(row + 1, col)] += du.im;
                    if !self.real[r.index] {
                        jac[(row + 1, col + 1)] += dv.im;
                    }
                }
            }
        }
    }

    /// Wirtinger derivatives `(dF_i/dz_j, dF_i/dzbar_j)` of the complex
    /// right-hand side at `z`.
    pub fn wirtinger(&self, z: &[Complex<T>]) -> (DMatrix<Complex<T>>, DMatrix<Complex<T>>) {
        let n = self.variables.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut dz = DMatrix::from_element(n, n, zero);
        let mut dzbar = DMatrix::from_element(n, n, zero);
        for t in &self.terms {
            let refs = &t.refs[..t.len as usize];
            for (j, r) in refs.iter().enumerate() {
                let mut partial = t.coeff;
                for (l, q) in refs.iter().enumerate() {
                    if l != j {
                        partial *= self.deref(z, *q);
                    }
                }
                if r.conj {
                    dzbar[(t.target, r.index)] += partial;
                } else {
                    dz[(t.target, r.index)] += partial;
                }
            }
        }
        (dz, dzbar)
    }
}
