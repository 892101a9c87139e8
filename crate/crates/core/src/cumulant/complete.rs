use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::opalgebra::{OpProduct, Space, Symbol};
use crate::scalar::Coefficient;

use super::master::{sym, Ensemble, FrameShift, MasterEquation};
use super::moments::{cumulant_close, MomentExpr};
use super::CumulantError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionOptions {
    /// Cumulant order; only `2` is implemented.
    pub order: usize,
    pub max_variables: usize,
    /// Factorize second-order moments that carry a nonzero U(1) charge
    /// (their cumulant vanishes for charge-symmetric states).
    pub phase_filter: bool,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        CompletionOptions { order: 2, max_variables: 200, phase_filter: true }
    }
}

/// Reference to a variable or to the complex conjugate of one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentRef {
    pub index: usize,
    pub conj: bool,
}

/// Brings moments to canonical form and closes them.
#[derive(Clone, Debug)]
pub struct Closure {
    symmetric: bool,
    charges: Option<Vec<i64>>,
}

impl Closure {
    pub fn new<C: Coefficient>(me: &MasterEquation<C>, opts: &CompletionOptions) -> Self {
        Closure {
            symmetric: matches!(me.ensemble, Ensemble::Symmetric),
            charges: if opts.phase_filter { me.level_charges.clone() } else { None },
        }
    }

    pub fn canon(&self, p: &OpProduct) -> OpProduct {
        if self.symmetric {
            p.symmetric_canonical()
        } else {
            p.clone()
        }
    }

    /// Representative of `p` under conjugation.
    pub fn representative(&self, p: &OpProduct) -> (OpProduct, bool) {
        let c = self.canon(p);
        let d = self.canon(&c.adjoint());
        if d < c {
            (d, true)
        } else {
            (c, false)
        }
    }

    fn filtered<C: Coefficient>(&self, q: &OpProduct) -> MomentExpr<C> {
        if let Some(charges) = &self.charges {
            if q.order() >= 2 && q.charge(charges) != 0 {
                let mut acc = MomentExpr::constant(C::one());
                for j in 0..q.order() {
                    acc = acc.mul(&MomentExpr::moment(self.canon(&q.select(&[j]))));
                }
                return acc;
            }
        }
        MomentExpr::moment(self.canon(q))
    }

    /// Closed expression of `<p>` in moments of order at most two.
    pub fn reduce<C: Coefficient>(&self, p: &OpProduct) -> Result<MomentExpr<C>, CumulantError> {
        if p.order() >= 3 {
            let closed: MomentExpr<C> = cumulant_close(p, |q| self.canon(q))?;
            closed.substitute(|q| Ok(self.filtered(q)))
        } else {
            Ok(self.filtered(p))
        }
    }
}

/// Closed equation of motion of `<p>`.
pub fn derive_closed<C: Coefficient>(
    me: &MasterEquation<C>,
    closure: &Closure,
    p: &OpProduct,
) -> Result<MomentExpr<C>, CumulantError> {
    let raw = MomentExpr::from_operator(&me.derive_moment_eq(p)?, |q| closure.canon(q))?;
    raw.substitute(|m| closure.reduce(m))
}

/// Closed autonomous system of moment equations.
#[derive(Clone, Debug)]
pub struct MomentSystem<C> {
    pub space: Space,
    pub ensemble: Ensemble,
    pub frame: FrameShift,
    variables: Vec<OpProduct>,
    real: Vec<bool>,
    rhs: Vec<MomentExpr<C>>,
    params: BTreeSet<Symbol>,
    index: HashMap<OpProduct, usize>,
    closure: Closure,
}

/// Derives equations for the seeds and every moment they pull in, closing
/// at second order, until the set is closed.
pub fn complete_and_compile<C: Coefficient>(
    me: &MasterEquation<C>,
    seeds: &[OpProduct],
    opts: &CompletionOptions,
) -> Result<MomentSystem<C>, CumulantError> {
    if seeds.is_empty() {
        return Err(CumulantError::Structure("no seed observables".into()));
    }
    if opts.order != 2 {
        return Err(CumulantError::Unsupported(format!("cumulant order {}", opts.order)));
    }
    me.validate()?;
    if !me.is_static() {
        return Err(CumulantError::TimeDependent);
    }
    let closure = Closure::new(me, opts);
    let mut variables: Vec<OpProduct> = Vec::new();
    let mut index: HashMap<OpProduct, usize> = HashMap::new();
    let mut push = |p: OpProduct, variables: &mut Vec<OpProduct>| -> Result<(), CumulantError> {
        if p.is_identity() || index.contains_key(&p) {
            return Ok(());
        }
        if variables.len() >= opts.max_variables {
            return Err(CumulantError::VariableCap {
                cap: opts.max_variables,
                recent: variables.iter().rev().take(5).map(|v| v.to_string()).collect(),
            });
        }
        index.insert(p.clone(), variables.len());
        variables.push(p);
        Ok(())
    };
    for s in seeds {
        if s.is_identity() {
            return Err(CumulantError::Structure("seed is the identity".into()));
        }
        for m in closure.reduce::<C>(s)?.moments() {
            push(closure.representative(&m).0, &mut variables)?;
        }
    }
    let mut rhs = Vec::new();
    let mut i = 0;
    while i < variables.len() {
        let p = variables[i].clone();
        let closed = derive_closed(me, &closure, &p)?;
        for m in closed.moments() {
            push(closure.representative(&m).0, &mut variables)?;
        }
        rhs.push(closed);
        i += 1;
    }
    let index: HashMap<OpProduct, usize> = variables.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let real = variables.iter().map(|p| closure.canon(&p.adjoint()) == *p).collect();
    let mut params = me.symbols();
    if matches!(me.ensemble, Ensemble::Symmetric) {
        params.insert(Symbol::new(sym::N));
    }
    Ok(MomentSystem {
        space: me.space,
        ensemble: me.ensemble,
        frame: me.frame.clone(),
        variables,
        real,
        rhs,
        params,
        index,
        closure,
    })
}

impl<C: Coefficient> MomentSystem<C> {
    pub fn variables(&self) -> &[OpProduct] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.real[i]
    }

    pub fn real_flags(&self) -> &[bool] {
        &self.real
    }

    /// Number of real state components.
    pub fn real_dimension(&self) -> usize {
        self.real.iter().map(|&r| if r { 1 } else { 2 }).sum()
    }

    pub fn rhs(&self, i: usize) -> &MomentExpr<C> {
        &self.rhs[i]
    }

    pub fn params(&self) -> &BTreeSet<Symbol> {
        &self.params
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    /// Variable holding `<p>` directly or as a conjugate.
    pub fn resolve(&self, p: &OpProduct) -> Option<MomentRef> {
        let (rep, conj) = self.closure.representative(p);
        self.index.get(&rep).map(|&index| MomentRef { index, conj })
    }

    /// Right-hand side of the conjugate of variable `i`.
    pub fn conjugate_rhs(&self, i: usize) -> MomentExpr<C> {
        self.rhs[i].conj(|q| self.closure.canon(q))
    }

    /// Plain-text listing `d<p>/dt = ...`, one equation per line.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (p, r) in self.variables.iter().zip(&self.rhs) {
            let _ = writeln!(out, "d<{p}>/dt = {r}");
        }
        out
    }
}
