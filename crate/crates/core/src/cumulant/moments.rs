use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::opalgebra::{Monomial, OpProduct, OperatorExpr, Symbol};
use crate::scalar::Coefficient;

use super::CumulantError;

/// Product of parameters and expectation values, e.g. `N*g31 <ad*a> <s22[1]>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MomentMonomial {
    pub params: Monomial,
    /// Sorted; an empty list is the constant `1`.
    pub moments: Vec<OpProduct>,
}

/// Polynomial in moments with parameter-monomial weights.
#[derive(Clone, PartialEq)]
pub struct MomentExpr<C> {
    terms: BTreeMap<MomentMonomial, C>,
}

impl<C: Coefficient> Default for MomentExpr<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coefficient> MomentExpr<C> {
    pub fn zero() -> Self {
        MomentExpr { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut e = Self::zero();
        e.add_term(MomentMonomial { params: Monomial::one(), moments: Vec::new() }, c);
        e
    }

    /// `<p>`, with `<1> = 1`.
    pub fn moment(p: OpProduct) -> Self {
        let moments = if p.is_identity() { Vec::new() } else { vec![p] };
        let mut e = Self::zero();
        e.add_term(MomentMonomial { params: Monomial::one(), moments }, C::one());
        e
    }

    pub fn add_term(&mut self, mut key: MomentMonomial, c: C) {
        if c.is_zero() {
            return;
        }
        key.moments.retain(|p| !p.is_identity());
        key.moments.sort();
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
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

    pub fn terms(&self) -> impl Iterator<Item = (&MomentMonomial, &C)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-C::one()))
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let mut moments = k1.moments.clone();
                moments.extend(k2.moments.iter().cloned());
                out.add_term(
                    MomentMonomial { params: k1.params.mul(&k2.params), moments },
                    c1.clone() * c2.clone(),
                );
            }
        }
        out
    }

    /// Reads every term of an operator expression as an expectation value,
    /// bringing products to canonical form with `canon`.
    pub fn from_operator(expr: &OperatorExpr<C>, canon: impl Fn(&OpProduct) -> OpProduct) -> Result<Self, CumulantError> {
        let mut out = Self::zero();
        for t in expr.terms() {
            if !t.phase.is_zero() {
                return Err(CumulantError::TimeDependent);
            }
            let moments = if t.product.is_identity() { Vec::new() } else { vec![canon(&t.product)] };
            out.add_term(MomentMonomial { params: t.params, moments }, t.coefficient);
        }
        Ok(out)
    }

    /// Replaces each moment by an expression.
    pub fn substitute(&self, mut f: impl FnMut(&OpProduct) -> Result<MomentExpr<C>, CumulantError>) -> Result<Self, CumulantError> {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let mut acc = MomentExpr::zero();
            acc.add_term(MomentMonomial { params: k.params.clone(), moments: Vec::new() }, c.clone());
            for m in &k.moments {
                acc = acc.mul(&f(m)?);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Complex conjugate: `<p>* = <p^dag>`.
    pub fn conj(&self, canon: impl Fn(&OpProduct) -> OpProduct) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            let moments = k.moments.iter().map(|p| canon(&p.adjoint())).collect();
            out.add_term(MomentMonomial { params: k.params.clone(), moments }, c.conj());
        }
        out
    }

    /// Highest moment order appearing in any term.
    pub fn max_order(&self) -> usize {
        self.terms.keys().flat_map(|k| k.moments.iter().map(OpProduct::order)).max().unwrap_or(0)
    }

    /// Distinct moments in order of first appearance.
    pub fn moments(&self) -> Vec<OpProduct> {
        let mut out: Vec<OpProduct> = Vec::new();
        for k in self.terms.keys() {
            for m in &k.moments {
                if !out.contains(m) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    pub fn evaluate(&self, param: &dyn Fn(&Symbol) -> f64, moment: &dyn Fn(&OpProduct) -> Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let mut v = c.to_complex64();
            for (s, p) in k.params.powers() {
                v *= param(s).powi(p as i32);
            }
            for m in &k.moments {
                v *= moment(m);
            }
            acc += v;
        }
        acc
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> MomentExpr<D> {
        let mut out = MomentExpr::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }
}

/// Second-order cumulant closure of a third-order moment:
/// `<opq> = <o><pq> + <p><oq> + <q><op> - 2<o><p><q>`.
///
/// Moments of order at most two are returned unchanged; the sub-products
/// keep the canonical factor order and are passed through `canon`.
pub fn cumulant_close<C: Coefficient>(
    p: &OpProduct,
    canon: impl Fn(&OpProduct) -> OpProduct,
) -> Result<MomentExpr<C>, CumulantError> {
    match p.order() {
        0..=2 => Ok(MomentExpr::moment(canon(p))),
        3 => {
            let f = |idx: &[usize]| MomentExpr::<C>::moment(canon(&p.select(idx)));
            let (o, q, r) = (f(&[0]), f(&[1]), f(&[2]));
            let sum = o
                .mul(&f(&[1, 2]))
                .add(&q.mul(&f(&[0, 2])))
                .add(&r.mul(&f(&[0, 1])))
                .sub(&o.mul(&q).mul(&r).scale(&C::from_int(2)));
            Ok(sum)
        }
        n => Err(CumulantError::Unsupported(format!("closure of order-{n} moment {p}"))),
    }
}

impl<C: Coefficient> fmt::Display for MomentExpr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            let mut parts: Vec<String> = Vec::new();
            let mut sign = if n > 0 { " + " } else { "" };
            if *c == -C::one() {
                sign = if n > 0 { " - " } else { "-" };
            } else if !c.is_one() {
                parts.push(c.render());
            }
            if !k.params.is_one() {
                parts.push(k.params.to_string());
            }
            for m in &k.moments {
                parts.push(format!("<{m}>"));
            }
            if parts.is_empty() {
                parts.push("1".into());
            }
            write!(f, "{sign}{}", parts.join("*"))?;
        }
        Ok(())
    }
}

impl<C: fmt::Debug> fmt::Debug for MomentExpr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalgebra::AtomOp;
    use crate::scalar::ExactCoeff;

    fn id(p: &OpProduct) -> OpProduct {
        p.clone()
    }

    #[test]
    fn closure_of_second_order_is_identity() {
        let p = OpProduct::boson(1, 1);
        let e: MomentExpr<ExactCoeff> = cumulant_close(&p, id).unwrap();
        assert_eq!(e.to_string(), "<ad*a>");
    }

    #[test]
    fn closure_matches_formula() {
        let p = OpProduct::from_parts(
            1,
            0,
            vec![AtomOp { atom: 1, l: 1, m: 2 }, AtomOp { atom: 2, l: 2, m: 1 }],
        )
        .unwrap();
        let e: MomentExpr<ExactCoeff> = cumulant_close(&p, id).unwrap();
        let ad = MomentExpr::moment(OpProduct::boson(1, 0));
        let s12 = MomentExpr::moment(OpProduct::transition(1, 1, 2));
        let s21 = MomentExpr::moment(OpProduct::transition(2, 2, 1));
        let pair = MomentExpr::moment(p.select(&[1, 2]));
        let ad12 = MomentExpr::moment(p.select(&[0, 1]));
        let ad21 = MomentExpr::moment(p.select(&[0, 2]));
        let expected = ad
            .mul(&pair)
            .add(&s12.mul(&ad21))
            .add(&s21.mul(&ad12))
            .sub(&ad.mul(&s12).mul(&s21).scale(&ExactCoeff::from_int(2)));
        assert_eq!(e, expected);
    }

    #[test]
    fn fourth_order_is_unsupported() {
        let p = OpProduct::boson(2, 2);
        assert!(cumulant_close::<ExactCoeff>(&p, id).is_err());
    }
}
