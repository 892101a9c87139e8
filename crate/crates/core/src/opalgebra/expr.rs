use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};


use super::product::{AtomIndex, ElementaryOp, Level, OpKind, OpProduct, Subsystem};
use super::symbol::{Frequency, Monomial, Symbol};
use super::AlgebraError;
use crate::scalar::Coefficient;

/// Subsystem declaration shared by every operand of an expression.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Space {
    pub levels: Level,
}

impl Space {
    pub const fn new(levels: Level) -> Self {
        Space { levels }
    }

    pub const fn three_level() -> Self {
        Space { levels: 3 }
    }

    pub const fn two_level() -> Self {
        Space { levels: 2 }
    }

    fn check(&self, op: &ElementaryOp) -> Result<(), AlgebraError> {
        if !op.is_well_formed() {
            return Err(AlgebraError::Malformed(*op));
        }
        if let OpKind::Transition(l, m) = op.kind {
            for lvl in [l, m] {
                if lvl == 0 || lvl > self.levels {
                    return Err(AlgebraError::LevelOutOfRange { level: lvl, levels: self.levels });
                }
            }
        }
        Ok(())
    }
}

/// Sort key of a canonical term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TermKey {
    pub product: OpProduct,
    pub phase: Frequency,
    pub params: Monomial,
}

/// One canonical term: `coefficient * params * exp(i*phase*t) * product`.
#[derive(Clone, PartialEq, Debug)]
pub struct OperatorTerm<C> {
    pub coefficient: C,
    pub params: Monomial,
    pub phase: Frequency,
    pub product: OpProduct,
}

/// A term whose factors are in arbitrary order.
#[derive(Clone, PartialEq, Debug)]
pub struct RawTerm<C> {
    pub coefficient: C,
    pub params: Monomial,
    pub phase: Frequency,
    pub factors: Vec<ElementaryOp>,
}

/// Canonical normal-ordered sum of terms.
#[derive(Clone, PartialEq)]
pub struct OperatorExpr<C> {
    space: Space,
    terms: BTreeMap<TermKey, C>,
}

impl<C: Coefficient> OperatorExpr<C> {
    pub fn zero(space: Space) -> Self {
        OperatorExpr { space, terms: BTreeMap::new() }
    }

    pub fn scalar(space: Space, c: C) -> Self {
        let mut e = Self::zero(space);
        e.accumulate(
            TermKey { product: OpProduct::identity(), phase: Frequency::zero(), params: Monomial::one() },
            c,
        );
        e
    }

    pub fn identity(space: Space) -> Self {
        Self::scalar(space, C::one())
    }

    pub fn from_product(space: Space, product: OpProduct) -> Result<Self, AlgebraError> {
        for op in product.factors() {
            space.check(&op)?;
        }
        let mut e = Self::zero(space);
        e.accumulate(TermKey { product, phase: Frequency::zero(), params: Monomial::one() }, C::one());
        Ok(e)
    }

    pub fn op(space: Space, op: ElementaryOp) -> Result<Self, AlgebraError> {
        space.check(&op)?;
        let product = match (op.kind, op.subsystem) {
            (OpKind::Create, _) => OpProduct::boson(1, 0),
            (OpKind::Annihilate, _) => OpProduct::boson(0, 1),
            (OpKind::Transition(l, m), Subsystem::Atom(k)) => OpProduct::transition(k, l, m),
            (OpKind::Transition(_, _), Subsystem::Cavity) => return Err(AlgebraError::Malformed(op)),
        };
        Self::from_product(space, product)
    }

    /// Cavity annihilation operator.
    pub fn a(space: Space) -> Self {
        Self::op(space, ElementaryOp::annihilate()).expect("well formed")
    }

    /// Cavity creation operator.
    pub fn ad(space: Space) -> Self {
        Self::op(space, ElementaryOp::create()).expect("well formed")
    }

    /// `|l><m|` on atom `k`.
    pub fn sigma(space: Space, k: AtomIndex, l: Level, m: Level) -> Result<Self, AlgebraError> {
        Self::op(space, ElementaryOp::transition(k, l, m))
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = OperatorTerm<C>> + '_ {
        self.terms.iter().map(|(k, c)| OperatorTerm {
            coefficient: c.clone(),
            params: k.params.clone(),
            phase: k.phase.clone(),
            product: k.product.clone(),
        })
    }

    pub fn keyed_terms(&self) -> impl Iterator<Item = (&TermKey, &C)> {
        self.terms.iter()
    }

    pub fn push_term(&mut self, term: OperatorTerm<C>) {
        self.accumulate(
            TermKey { product: term.product, phase: term.phase, params: term.params },
            term.coefficient,
        );
    }

    fn accumulate(&mut self, key: TermKey, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.space);
        for (k, v) in &self.terms {
            out.accumulate(k.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn times_monomial(&self, m: &Monomial) -> Self {
        let mut out = Self::zero(self.space);
        for (k, v) in &self.terms {
            out.accumulate(
                TermKey { params: k.params.mul(m), ..k.clone() },
                v.clone(),
            );
        }
        out
    }

    pub fn times_symbol(&self, s: &str) -> Self {
        self.times_monomial(&Monomial::symbol(Symbol::new(s)))
    }

    /// Multiplies every term by `exp(i*w*t)`.
    pub fn with_phase(&self, w: &Frequency) -> Self {
        let mut out = Self::zero(self.space);
        for (k, v) in &self.terms {
            out.accumulate(TermKey { phase: k.phase.add(w), ..k.clone() }, v.clone());
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.accumulate(k.clone(), v.clone());
        }
        Ok(out)
    }

    fn same_space(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.space != other.space {
            return Err(AlgebraError::SpaceMismatch { left: self.space.levels, right: other.space.levels });
        }
        Ok(())
    }

    /// Canonical normal-ordered product.
    pub fn multiply(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        self.same_space(rhs)?;
        let mut out = Self::zero(self.space);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &rhs.terms {
                let params = k1.params.mul(&k2.params);
                let phase = k1.phase.add(&k2.phase);
                let c = c1.clone() * c2.clone();
                for (w, product) in k1.product.multiply(&k2.product) {
                    out.accumulate(
                        TermKey { product, phase: phase.clone(), params: params.clone() },
                        c.clone() * C::from_int(w),
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        let ab = self.multiply(rhs)?;
        let ba = rhs.multiply(self)?;
        Ok(ab - ba)
    }

    /// Term-wise conjugate, with factor order reversed and re-canonicalized.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.space);
        for (k, c) in &self.terms {
            // Reversing and adjointing a canonical product: atomic factors on
            // distinct atoms commute, bosonic ad^p a^q becomes ad^q a^p.
            out.accumulate(
                TermKey { product: k.product.adjoint(), phase: k.phase.neg(), params: k.params.clone() },
                c.conj(),
            );
        }
        out
    }

    /// Set of atom labels appearing in any term.
    pub fn atoms(&self) -> BTreeSet<AtomIndex> {
        self.terms.keys().flat_map(|k| k.product.atom_labels().collect::<Vec<_>>()).collect()
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|k| k.product.order()).max().unwrap_or(0)
    }

    pub fn has_phases(&self) -> bool {
        self.terms.keys().any(|k| !k.phase.is_zero())
    }

    /// Relabels atoms; the map must be injective on the labels present.
    pub fn relabel_atoms(&self, map: impl Fn(AtomIndex) -> AtomIndex) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(self.space);
        for (k, c) in &self.terms {
            let product = k.product.relabel(&map).ok_or(AlgebraError::NonInjectiveRelabel)?;
            out.accumulate(TermKey { product, ..k.clone() }, c.clone());
        }
        Ok(out)
    }

    /// Applies `f` to every term, re-canonicalizing the results.
    pub fn map_terms(&self, mut f: impl FnMut(&TermKey, &C) -> Option<(TermKey, C)>) -> Self {
        let mut out = Self::zero(self.space);
        for (k, c) in &self.terms {
            if let Some((k2, c2)) = f(k, c) {
                out.accumulate(k2, c2);
            }
        }
        out
    }

    pub fn to_raw(&self) -> Vec<RawTerm<C>> {
        self.terms
            .iter()
            .map(|(k, c)| RawTerm {
                coefficient: c.clone(),
                params: k.params.clone(),
                phase: k.phase.clone(),
                factors: k.product.factors(),
            })
            .collect()
    }

    /// Maps coefficients into another ring.
    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> OperatorExpr<D> {
        let mut out = OperatorExpr::<D>::zero(self.space);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), f(c));
        }
        out
    }
}

/// Canonical form of an arbitrary list of terms.
pub fn simplify<C: Coefficient>(space: Space, raw: &[RawTerm<C>]) -> Result<OperatorExpr<C>, AlgebraError> {
    let mut out = OperatorExpr::zero(space);
    for t in raw {
        let mut acc = OperatorExpr::scalar(space, t.coefficient.clone())
            .times_monomial(&t.params)
            .with_phase(&t.phase);
        for op in &t.factors {
            acc = acc.multiply(&OperatorExpr::op(space, *op)?)?;
        }
        out = out.try_add(&acc)?;
    }
    Ok(out)
}

impl<C: Coefficient> Add for OperatorExpr<C> {
    type Output = OperatorExpr<C>;
    fn add(self, rhs: Self) -> Self {
        self.try_add(&rhs).expect("operands share a space")
    }
}

impl<C: Coefficient> Neg for OperatorExpr<C> {
    type Output = OperatorExpr<C>;
    fn neg(self) -> Self {
        self.scale(&-C::one())
    }
}

impl<C: Coefficient> Sub for OperatorExpr<C> {
    type Output = OperatorExpr<C>;
    fn sub(self, rhs: Self) -> Self {
        self.try_add(&(-rhs)).expect("operands share a space")
    }
}

impl<C: fmt::Debug> fmt::Debug for OperatorExpr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

fn render_term<C: Coefficient>(k: &TermKey, c: &C) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut sign = "";
    if *c == -C::one() {
        sign = "-";
    } else if !c.is_one() {
        parts.push(c.render());
    }
    if !k.params.is_one() {
        parts.push(k.params.to_string());
    }
    if !k.phase.is_zero() {
        parts.push(format!("exp(i*({})*t)", k.phase));
    }
    if !k.product.is_identity() || parts.is_empty() {
        parts.push(k.product.to_string());
    }
    format!("{sign}{}", parts.join("*"))
}

impl<C: Coefficient> fmt::Display for OperatorExpr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let rendered: Vec<String> = self.terms.iter().map(|(k, c)| render_term(k, c)).collect();
        f.write_str(&rendered.join(" + "))
    }
}
