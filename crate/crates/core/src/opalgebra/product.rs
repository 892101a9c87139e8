use std::fmt;

/// Atomic level label, starting at 1.
pub type Level = u8;
/// Atom label. Index 0 is reserved for the template atom of collective sums.
pub type AtomIndex = u32;

pub const TEMPLATE_ATOM: AtomIndex = 0;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Subsystem {
    Cavity,
    Atom(AtomIndex),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OpKind {
    Create,
    Annihilate,
    /// `|l><m|`.
    Transition(Level, Level),
}

/// A single bosonic or atomic operator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ElementaryOp {
    pub kind: OpKind,
    pub subsystem: Subsystem,
}

impl ElementaryOp {
    pub fn create() -> Self {
        ElementaryOp { kind: OpKind::Create, subsystem: Subsystem::Cavity }
    }

    pub fn annihilate() -> Self {
        ElementaryOp { kind: OpKind::Annihilate, subsystem: Subsystem::Cavity }
    }

    pub fn transition(atom: AtomIndex, l: Level, m: Level) -> Self {
        ElementaryOp { kind: OpKind::Transition(l, m), subsystem: Subsystem::Atom(atom) }
    }

    pub fn adjoint(self) -> Self {
        let kind = match self.kind {
            OpKind::Create => OpKind::Annihilate,
            OpKind::Annihilate => OpKind::Create,
            OpKind::Transition(l, m) => OpKind::Transition(m, l),
        };
        ElementaryOp { kind, ..self }
    }

    pub fn is_well_formed(&self) -> bool {
        matches!(
            (self.kind, self.subsystem),
            (OpKind::Create | OpKind::Annihilate, Subsystem::Cavity)
                | (OpKind::Transition(_, _), Subsystem::Atom(_))
        )
    }
}

impl fmt::Display for ElementaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.subsystem) {
            (OpKind::Create, _) => f.write_str("ad"),
            (OpKind::Annihilate, _) => f.write_str("a"),
            (OpKind::Transition(l, m), Subsystem::Atom(k)) => write!(f, "s{l}{m}[{k}]"),
            (OpKind::Transition(l, m), Subsystem::Cavity) => write!(f, "s{l}{m}[?]"),
        }
    }
}

/// Transition `|l><m|` on one atom.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AtomOp {
    pub atom: AtomIndex,
    pub l: Level,
    pub m: Level,
}

/// Canonical normal-ordered product `ad^p a^q s[k1] s[k2] ...`.
///
/// Atoms are strictly increasing; each atom carries at most one transition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OpProduct {
    create: u32,
    annihilate: u32,
    atoms: Vec<AtomOp>,
}

fn binomial(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k as i64 {
        r = r * (n as i64 - i) / (i + 1);
    }
    r
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

impl OpProduct {
    pub fn identity() -> Self {
        OpProduct::default()
    }

    pub fn boson(create: u32, annihilate: u32) -> Self {
        OpProduct { create, annihilate, atoms: Vec::new() }
    }

    pub fn transition(atom: AtomIndex, l: Level, m: Level) -> Self {
        OpProduct { create: 0, annihilate: 0, atoms: vec![AtomOp { atom, l, m }] }
    }

    /// Builds a product from already canonical parts; atoms are sorted and
    /// must be distinct.
    pub fn from_parts(create: u32, annihilate: u32, mut atoms: Vec<AtomOp>) -> Option<Self> {
        atoms.sort();
        if atoms.windows(2).any(|w| w[0].atom == w[1].atom) {
            return None;
        }
        Some(OpProduct { create, annihilate, atoms })
    }

    pub fn creations(&self) -> u32 {
        self.create
    }

    pub fn annihilations(&self) -> u32 {
        self.annihilate
    }

    pub fn atoms(&self) -> &[AtomOp] {
        &self.atoms
    }

    pub fn is_identity(&self) -> bool {
        self.create == 0 && self.annihilate == 0 && self.atoms.is_empty()
    }

    /// Number of elementary factors.
    pub fn order(&self) -> usize {
        (self.create + self.annihilate) as usize + self.atoms.len()
    }

    pub fn max_level(&self) -> Level {
        self.atoms.iter().map(|a| a.l.max(a.m)).max().unwrap_or(0)
    }

    pub fn factors(&self) -> Vec<ElementaryOp> {
        let mut out = Vec::with_capacity(self.order());
        out.extend((0..self.create).map(|_| ElementaryOp::create()));
        out.extend((0..self.annihilate).map(|_| ElementaryOp::annihilate()));
        out.extend(self.atoms.iter().map(|a| ElementaryOp::transition(a.atom, a.l, a.m)));
        out
    }

    /// Sub-product of the factors selected by position (in canonical order).
    pub fn select(&self, positions: &[usize]) -> OpProduct {
        let mut create = 0;
        let mut annihilate = 0;
        let mut atoms = Vec::new();
        let nb = (self.create + self.annihilate) as usize;
        for &p in positions {
            if p < self.create as usize {
                create += 1;
            } else if p < nb {
                annihilate += 1;
            } else {
                atoms.push(self.atoms[p - nb]);
            }
        }
        atoms.sort();
        OpProduct { create, annihilate, atoms }
    }

    pub fn adjoint(&self) -> OpProduct {
        OpProduct {
            create: self.annihilate,
            annihilate: self.create,
            atoms: self.atoms.iter().map(|a| AtomOp { atom: a.atom, l: a.m, m: a.l }).collect(),
        }
    }

    pub fn atom_labels(&self) -> impl Iterator<Item = AtomIndex> + '_ {
        self.atoms.iter().map(|a| a.atom)
    }

    /// Relabels atoms through an injective map.
    pub fn relabel(&self, map: impl Fn(AtomIndex) -> AtomIndex) -> Option<OpProduct> {
        let atoms = self.atoms.iter().map(|a| AtomOp { atom: map(a.atom), ..*a }).collect();
        OpProduct::from_parts(self.create, self.annihilate, atoms)
    }

    /// Representative under permutations of identical atoms: transition
    /// pairs sorted and relabeled `1..=m`.
    pub fn symmetric_canonical(&self) -> OpProduct {
        let mut pairs: Vec<(Level, Level)> = self.atoms.iter().map(|a| (a.l, a.m)).collect();
        pairs.sort();
        OpProduct {
            create: self.create,
            annihilate: self.annihilate,
            atoms: pairs
                .into_iter()
                .enumerate()
                .map(|(i, (l, m))| AtomOp { atom: i as AtomIndex + 1, l, m })
                .collect(),
        }
    }

    /// U(1) charge: `+1` per creation, `-1` per annihilation and
    /// `q_l - q_m` per transition `|l><m|`.
    pub fn charge(&self, level_charges: &[i64]) -> i64 {
        let atomic: i64 = self
            .atoms
            .iter()
            .map(|a| level_charges[a.l as usize - 1] - level_charges[a.m as usize - 1])
            .sum();
        self.create as i64 - self.annihilate as i64 + atomic
    }

    /// Normal-ordered product `self * rhs` as integer-weighted products.
    pub fn multiply(&self, rhs: &OpProduct) -> Vec<(i64, OpProduct)> {
        let mut atoms = Vec::with_capacity(self.atoms.len() + rhs.atoms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < rhs.atoms.len() {
            if j >= rhs.atoms.len() || (i < self.atoms.len() && self.atoms[i].atom < rhs.atoms[j].atom) {
                atoms.push(self.atoms[i]);
                i += 1;
            } else if i >= self.atoms.len() || rhs.atoms[j].atom < self.atoms[i].atom {
                atoms.push(rhs.atoms[j]);
                j += 1;
            } else {
                let (x, y) = (self.atoms[i], rhs.atoms[j]);
                if x.m != y.l {
                    return Vec::new();
                }
                atoms.push(AtomOp { atom: x.atom, l: x.l, m: y.m });
                i += 1;
                j += 1;
            }
        }
        // a^q ad^p = sum_j j! C(q,j) C(p,j) ad^(p-j) a^(q-j)
        let q = self.annihilate;
        let p = rhs.create;
        (0..=q.min(p))
            .map(|k| {
                let w = factorial(k) * binomial(q, k) * binomial(p, k);
                (
                    w,
                    OpProduct {
                        create: self.create + p - k,
                        annihilate: q - k + rhs.annihilate,
                        atoms: atoms.clone(),
                    },
                )
            })
            .collect()
    }
}

impl fmt::Debug for OpProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for OpProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.factors().iter().map(|op| op.to_string()).collect();
        f.write_str(&parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boson_reordering_inserts_commutator() {
        let a = OpProduct::boson(0, 1);
        let ad = OpProduct::boson(1, 0);
        let prod = a.multiply(&ad);
        assert_eq!(prod, vec![(1, OpProduct::boson(1, 1)), (1, OpProduct::identity())]);
        // a^2 ad^2 = ad^2 a^2 + 4 ad a + 2
        let prod = OpProduct::boson(0, 2).multiply(&OpProduct::boson(2, 0));
        let weights: Vec<i64> = prod.iter().map(|(w, _)| *w).collect();
        assert_eq!(weights, vec![1, 4, 2]);
    }

    #[test]
    fn same_atom_transitions_contract() {
        let s12 = OpProduct::transition(1, 1, 2);
        let s21 = OpProduct::transition(1, 2, 1);
        assert_eq!(s12.multiply(&s21), vec![(1, OpProduct::transition(1, 1, 1))]);
        assert!(s12.multiply(&s12).is_empty());
        let other = OpProduct::transition(2, 2, 1);
        let p = s12.multiply(&other);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].1.to_string(), "s12[1]*s21[2]");
    }

    #[test]
    fn symmetric_canonical_sorts_pairs() {
        let p = OpProduct::from_parts(
            1,
            0,
            vec![AtomOp { atom: 4, l: 2, m: 1 }, AtomOp { atom: 7, l: 1, m: 3 }],
        )
        .unwrap();
        assert_eq!(p.symmetric_canonical().to_string(), "ad*s13[1]*s21[2]");
    }
}
