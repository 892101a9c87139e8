use std::collections::BTreeSet;
use std::fmt;

use crate::opalgebra::{
    AtomIndex, Frequency, Monomial, OpProduct, OperatorExpr, OperatorTerm, Space, Symbol, TermKey,
    TEMPLATE_ATOM,
};
use crate::scalar::Coefficient;

use super::CumulantError;

/// Parameter symbol names used by the model builders.
pub mod sym {
    pub const N: &str = "N";
    pub const G31: &str = "g31";
    pub const OMEGA: &str = "Omega";
    pub const KAPPA: &str = "kappa";
    pub const GAMMA31: &str = "gamma31";
    pub const GAMMA12: &str = "gamma12";
    pub const GAMMA21: &str = "gamma21";
    pub const G21_RE: &str = "g21_re";
    pub const G21_IM: &str = "g21_im";
    pub const WC: &str = "wc";
    pub const W31: &str = "w31";
    pub const W32: &str = "w32";
    pub const WD: &str = "wd";
}

/// How the atoms of a master equation are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// `N` identical atoms; `N` is the symbol [`sym::N`].
    Symmetric,
    /// Atoms labelled `1..=n`, each kept separately.
    Explicit(AtomIndex),
}

/// `rate * D[jump]`. A jump acting on the template atom stands for one
/// dissipator per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissipator<C> {
    pub rate: Monomial,
    pub jump: OperatorExpr<C>,
}

/// Diagonal frame shifts: cavity `eta_a` and atomic level energies
/// `eta_l` (level 1 is the reference and stays zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameShift {
    pub cavity: Frequency,
    pub levels: Vec<Frequency>,
}

impl FrameShift {
    pub fn identity(levels: usize) -> Self {
        FrameShift { cavity: Frequency::zero(), levels: vec![Frequency::zero(); levels] }
    }

    pub fn is_identity(&self) -> bool {
        self.cavity.is_zero() && self.levels.iter().all(Frequency::is_zero)
    }

    pub fn level(&self, l: u8) -> &Frequency {
        &self.levels[l as usize - 1]
    }
}

impl fmt::Display for FrameShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eta_a = {}", self.cavity)?;
        for (i, e) in self.levels.iter().enumerate() {
            write!(f, ", eta_{} = {}", i + 1, e)?;
        }
        Ok(())
    }
}

/// Master equation `d rho/dt = -i[H, rho] - sum_j rate_j D[c_j] rho` (hbar = 1).
///
/// Atomic operators on [`TEMPLATE_ATOM`] in the Hamiltonian stand for a sum
/// over all atoms; concrete labels `1..=n` are only meaningful for
/// [`Ensemble::Explicit`].
#[derive(Clone, Debug, PartialEq)]
pub struct MasterEquation<C> {
    pub space: Space,
    pub hamiltonian: OperatorExpr<C>,
    pub dissipators: Vec<Dissipator<C>>,
    pub ensemble: Ensemble,
    /// Per-level U(1) charges conserved by the dynamics, if any.
    pub level_charges: Option<Vec<i64>>,
    pub frame: FrameShift,
}

fn term<C: Coefficient>(
    space: Space,
    coeff: C,
    params: &[&str],
    phase: Frequency,
    product: OpProduct,
) -> OperatorExpr<C> {
    let mut e = OperatorExpr::zero(space);
    let params = params.iter().fold(Monomial::one(), |m, s| m.mul(&Monomial::symbol(*s)));
    e.push_term(OperatorTerm { coefficient: coeff, params, phase, product });
    e
}

fn ad_sigma(l: u8, m: u8) -> OpProduct {
    OpProduct::from_parts(1, 0, vec![crate::opalgebra::AtomOp { atom: TEMPLATE_ATOM, l, m }]).expect("one atom")
}

fn a_sigma(l: u8, m: u8) -> OpProduct {
    OpProduct::from_parts(0, 1, vec![crate::opalgebra::AtomOp { atom: TEMPLATE_ATOM, l, m }]).expect("one atom")
}

impl<C: Coefficient> MasterEquation<C> {
    pub fn new(space: Space, ensemble: Ensemble) -> Self {
        MasterEquation {
            space,
            hamiltonian: OperatorExpr::zero(space),
            dissipators: Vec::new(),
            ensemble,
            level_charges: None,
            frame: FrameShift::identity(space.levels as usize),
        }
    }

    /// Three-level model: cavity on 1-3, drive on 2-3, decay 3 -> 1 and
    /// incoherent pumping 1 -> 2.
    pub fn full_model(ensemble: Ensemble) -> Self {
        let s = Space::three_level();
        let one = C::one();
        let wcav = Frequency::from_terms([(sym::WC, 1), (sym::W31, -1)]);
        let wdrv = Frequency::from_terms([(sym::WD, 1), (sym::W32, -1)]);
        let h = term(s, one.clone(), &[sym::G31], wcav.clone(), ad_sigma(1, 3))
            + term(s, one.clone(), &[sym::G31], wcav.neg(), a_sigma(3, 1))
            + term(s, one.clone(), &[sym::OMEGA], wdrv.clone(), OpProduct::transition(TEMPLATE_ATOM, 2, 3))
            + term(s, one, &[sym::OMEGA], wdrv.neg(), OpProduct::transition(TEMPLATE_ATOM, 3, 2));
        let mut me = Self::new(s, ensemble);
        me.hamiltonian = h;
        me.dissipators = vec![
            Dissipator { rate: Monomial::symbol(sym::KAPPA), jump: OperatorExpr::a(s) },
            Dissipator {
                rate: Monomial::symbol(sym::GAMMA31),
                jump: OperatorExpr::sigma(s, TEMPLATE_ATOM, 1, 3).expect("level"),
            },
            Dissipator {
                rate: Monomial::symbol(sym::GAMMA12),
                jump: OperatorExpr::sigma(s, TEMPLATE_ATOM, 2, 1).expect("level"),
            },
        ];
        me.level_charges = Some(vec![0, 1, 1]);
        me
    }

    /// Two-level model with the complex coupling `g21 = g21_re + i g21_im`.
    pub fn effective_model(ensemble: Ensemble) -> Self {
        let s = Space::two_level();
        let one = C::one();
        let i = C::imag_unit();
        let w = Frequency::from_terms([(sym::WC, 1), (sym::W31, -1), (sym::WD, -1), (sym::W32, 1)]);
        let h = term(s, one.clone(), &[sym::G21_RE], w.clone(), ad_sigma(1, 2))
            + term(s, i.clone(), &[sym::G21_IM], w.clone(), ad_sigma(1, 2))
            + term(s, one, &[sym::G21_RE], w.neg(), a_sigma(2, 1))
            + term(s, -i, &[sym::G21_IM], w.neg(), a_sigma(2, 1));
        let mut me = Self::new(s, ensemble);
        me.hamiltonian = h;
        me.dissipators = vec![
            Dissipator { rate: Monomial::symbol(sym::KAPPA), jump: OperatorExpr::a(s) },
            Dissipator {
                rate: Monomial::symbol(sym::GAMMA21),
                jump: OperatorExpr::sigma(s, TEMPLATE_ATOM, 1, 2).expect("level"),
            },
            Dissipator {
                rate: Monomial::symbol(sym::GAMMA12),
                jump: OperatorExpr::sigma(s, TEMPLATE_ATOM, 2, 1).expect("level"),
            },
        ];
        me.level_charges = Some(vec![0, 1]);
        me
    }

    /// Damped empty cavity.
    pub fn damped_cavity(space: Space) -> Self {
        let mut me = Self::new(space, Ensemble::Explicit(0));
        me.dissipators.push(Dissipator { rate: Monomial::symbol(sym::KAPPA), jump: OperatorExpr::a(space) });
        me.level_charges = Some(vec![0; space.levels as usize]);
        me
    }

    pub fn is_hermitian(&self) -> bool {
        self.hamiltonian.adjoint() == self.hamiltonian
    }

    pub fn is_static(&self) -> bool {
        !self.hamiltonian.has_phases()
    }

    /// Symbols appearing in the Hamiltonian and the rates.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for t in self.hamiltonian.terms() {
            out.extend(t.params.powers().map(|(s, _)| s.clone()));
        }
        for d in &self.dissipators {
            out.extend(d.rate.powers().map(|(s, _)| s.clone()));
            for t in d.jump.terms() {
                out.extend(t.params.powers().map(|(s, _)| s.clone()));
            }
        }
        if matches!(self.ensemble, Ensemble::Symmetric) {
            out.insert(Symbol::new(sym::N));
        }
        out
    }

    fn uses_template(expr: &OperatorExpr<C>) -> bool {
        expr.atoms().contains(&TEMPLATE_ATOM)
    }

    pub fn validate(&self) -> Result<(), CumulantError> {
        if !self.is_hermitian() {
            return Err(CumulantError::Structure("Hamiltonian is not self-adjoint".into()));
        }
        for d in &self.dissipators {
            if d.jump.space() != self.space {
                return Err(CumulantError::Structure("dissipator space differs from the Hamiltonian's".into()));
            }
            for t in d.jump.terms() {
                if !t.phase.is_zero() {
                    return Err(CumulantError::Structure("jump operators must not oscillate".into()));
                }
                let has_template = t.product.atom_labels().any(|k| k == TEMPLATE_ATOM);
                if has_template && (t.product.creations() + t.product.annihilations() > 0) {
                    return Err(CumulantError::Unsupported("per-atom jump with cavity factors".into()));
                }
            }
        }
        if let Ensemble::Symmetric = self.ensemble {
            let concrete = |e: &OperatorExpr<C>| e.atoms().iter().any(|&k| k != TEMPLATE_ATOM);
            if concrete(&self.hamiltonian) || self.dissipators.iter().any(|d| concrete(&d.jump)) {
                return Err(CumulantError::Unsupported(
                    "concrete atom labels in a symmetric ensemble".into(),
                ));
            }
        }
        if let Some(q) = &self.level_charges {
            if q.len() != self.space.levels as usize {
                return Err(CumulantError::Structure("one charge per level is required".into()));
            }
            if self.hamiltonian.terms().any(|t| t.product.charge(q) != 0) {
                return Err(CumulantError::Structure("Hamiltonian does not conserve the declared charges".into()));
            }
        }
        Ok(())
    }

    /// Atom labels an operator is summed over when evaluating `sum_k h_k`
    /// against an observable on `atoms`. Returns `(label, weight)` pairs,
    /// where the weight is `1` or the polynomial `N - m`.
    fn template_targets(&self, atoms: &BTreeSet<AtomIndex>) -> Vec<(AtomIndex, Option<i64>)> {
        match self.ensemble {
            Ensemble::Explicit(n) => (1..=n).map(|k| (k, None)).collect(),
            Ensemble::Symmetric => {
                let mut out: Vec<(AtomIndex, Option<i64>)> = atoms.iter().map(|&k| (k, None)).collect();
                let fresh = atoms.iter().next_back().map_or(1, |k| k + 1);
                out.push((fresh, Some(atoms.len() as i64)));
                out
            }
        }
    }

    fn weighted(expr: OperatorExpr<C>, weight: Option<i64>) -> OperatorExpr<C> {
        match weight {
            None => expr,
            Some(m) => {
                let n = expr.times_symbol(sym::N);
                n - expr.scale(&C::from_int(m))
            }
        }
    }

    fn expand(&self, expr: &OperatorExpr<C>, targets: &[(AtomIndex, Option<i64>)]) -> OperatorExpr<C> {
        let mut global = OperatorExpr::zero(self.space);
        let mut template = OperatorExpr::zero(self.space);
        for t in expr.terms() {
            if t.product.atom_labels().any(|k| k == TEMPLATE_ATOM) {
                template.push_term(t);
            } else {
                global.push_term(t);
            }
        }
        let mut out = global;
        for &(k, w) in targets {
            let relabeled = template
                .relabel_atoms(|x| if x == TEMPLATE_ATOM { k } else { x })
                .expect("template atom is unique per term");
            out = out + Self::weighted(relabeled, w);
        }
        out
    }

    /// Adjoint Lindblad action `rate (c^dag o c - 1/2 c^dag c o - 1/2 o c^dag c)`.
    fn dissipator_action(rate: &Monomial, c: &OperatorExpr<C>, o: &OperatorExpr<C>) -> Result<OperatorExpr<C>, CumulantError> {
        let cd = c.adjoint();
        let cdc = cd.multiply(c)?;
        let jump = cd.multiply(o)?.multiply(c)?;
        let half = C::from_ratio(1, 2);
        let anti = cdc.multiply(o)? + o.multiply(&cdc)?;
        Ok((jump - anti.scale(&half)).times_monomial(rate))
    }

    /// Unclosed equation of motion `d<o>/dt` as an operator expression whose
    /// terms are to be read as expectation values.
    ///
    /// In a symmetric ensemble the result contains one fresh atom label
    /// standing for all atoms outside `o`; moments must then be brought to
    /// symmetric canonical form.
    pub fn derive_moment_eq(&self, o: &OpProduct) -> Result<OperatorExpr<C>, CumulantError> {
        if o.atom_labels().any(|k| k == TEMPLATE_ATOM) {
            return Err(CumulantError::Structure("observable uses the template atom label 0".into()));
        }
        if o.max_level() > self.space.levels {
            return Err(CumulantError::Structure(format!("observable {o} exceeds the level count")));
        }
        if let Ensemble::Explicit(n) = self.ensemble {
            if o.atom_labels().any(|k| k > n) {
                return Err(CumulantError::Structure(format!("observable {o} refers to atoms beyond {n}")));
            }
        }
        let oe = OperatorExpr::from_product(self.space, o.clone())?;
        let atoms: BTreeSet<AtomIndex> = o.atom_labels().collect();
        let targets = self.template_targets(&atoms);
        let h = self.expand(&self.hamiltonian, &targets);
        let mut rhs = h.commutator(&oe)?.scale(&C::imag_unit());
        for d in &self.dissipators {
            let per_atom = Self::uses_template(&d.jump);
            if per_atom {
                // Jumps on atoms outside `o` commute with it and drop out.
                for &k in &atoms {
                    let c = d.jump.relabel_atoms(|x| if x == TEMPLATE_ATOM { k } else { x })?;
                    rhs = rhs + Self::dissipator_action(&d.rate, &c, &oe)?;
                }
            } else {
                rhs = rhs + Self::dissipator_action(&d.rate, &d.jump, &oe)?;
            }
        }
        Ok(rhs)
    }

    /// Same as [`Self::derive_moment_eq`] for an expression that must be a
    /// single unit-weight product.
    pub fn derive_moment_eq_expr(&self, o: &OperatorExpr<C>) -> Result<OperatorExpr<C>, CumulantError> {
        let mut terms = o.terms();
        let t = terms.next().ok_or_else(|| CumulantError::Structure("observable is zero".into()))?;
        if terms.next().is_some() || !t.coefficient.is_one() || !t.params.is_one() || !t.phase.is_zero() {
            return Err(CumulantError::Structure(format!("observable {o} is not a bare product")));
        }
        self.derive_moment_eq(&t.product)
    }
}

/// Phase-shift vector of a product: coefficient of each unknown level
/// shift `eta_2..eta_L` acquired under `exp(-iKt)`.
fn shift_row(product: &OpProduct, levels: usize) -> Vec<i64> {
    let mut row = vec![0i64; levels - 1];
    for a in product.atoms() {
        if a.m > 1 {
            row[a.m as usize - 2] += 1;
        }
        if a.l > 1 {
            row[a.l as usize - 2] -= 1;
        }
    }
    row
}

/// Solves `rows * eta = rhs` over integer rows and symbolic right-hand
/// sides; unconstrained unknowns are set to zero.
fn solve_shifts(mut rows: Vec<Vec<i64>>, mut rhs: Vec<Frequency>, unknowns: usize) -> Option<Vec<Frequency>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..unknowns {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != 0) else { continue };
        rows.swap(r, p);
        rhs.swap(r, p);
        for i in 0..rows.len() {
            if i == r || rows[i][col] == 0 {
                continue;
            }
            let (a, b) = (rows[r][col], rows[i][col]);
            for c in 0..unknowns {
                rows[i][c] = rows[i][c] * a - rows[r][c] * b;
            }
            rhs[i] = rhs[i].scale(a).sub(&rhs[r].scale(b));
        }
        pivots.push((r, col));
        r += 1;
    }
    for i in r..rows.len() {
        if !rhs[i].is_zero() {
            return None;
        }
    }
    let mut eta = vec![Frequency::zero(); unknowns];
    for (row, col) in pivots {
        // Diagonal after full elimination, up to free columns set to zero.
        eta[col] = rhs[row].div_exact(rows[row][col])?;
    }
    Some(eta)
}

fn frequency_term<C: Coefficient>(space: Space, w: &Frequency, product: OpProduct) -> OperatorExpr<C> {
    let mut e = OperatorExpr::zero(space);
    for (s, c) in w.terms() {
        e.push_term(OperatorTerm {
            coefficient: C::from_int(c),
            params: Monomial::symbol(s.clone()),
            phase: Frequency::zero(),
            product: product.clone(),
        });
    }
    e
}

/// Moves to the rotating frame in which the Hamiltonian is static.
///
/// With `U = exp(-iKt)` and `K = sum_k sum_l eta_l s_ll[k]` (the cavity
/// shift is kept at zero so that frequencies stay relative to the cavity
/// mode), each `|l><m|` acquires `exp(i(eta_m - eta_l)t)` and the frame adds
/// `+K` to the Hamiltonian.
pub fn static_frame<C: Coefficient>(me: &MasterEquation<C>) -> Result<MasterEquation<C>, CumulantError> {
    if me.is_static() {
        return Ok(me.clone());
    }
    let levels = me.space.levels as usize;
    if me.hamiltonian.atoms().iter().any(|&k| k != TEMPLATE_ATOM) {
        return Err(CumulantError::Unsupported("static_frame requires Hamiltonians in template form".into()));
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, _) in me.hamiltonian.keyed_terms() {
        rows.push(shift_row(&k.product, levels));
        rhs.push(k.phase.neg());
    }
    let eta = solve_shifts(rows, rhs, levels - 1).ok_or(CumulantError::IrreduciblePhase)?;
    let mut frame = FrameShift::identity(levels);
    for (i, e) in eta.iter().enumerate() {
        frame.levels[i + 1] = me.frame.levels[i + 1].add(e);
    }
    let mut h = me.hamiltonian.map_terms(|k, c| {
        let shift = shift_row(&k.product, levels)
            .iter()
            .zip(&eta)
            .fold(Frequency::zero(), |acc, (n, e)| acc.add(&e.scale(*n)));
        Some((TermKey { phase: k.phase.add(&shift), ..k.clone() }, c.clone()))
    });
    if h.has_phases() {
        return Err(CumulantError::IrreduciblePhase);
    }
    for (i, e) in eta.iter().enumerate() {
        let l = (i + 2) as u8;
        h = h + frequency_term(me.space, e, OpProduct::transition(TEMPLATE_ATOM, l, l));
    }
    Ok(MasterEquation { hamiltonian: h, frame, ..me.clone() })
}

/// Replaces identical per-atom terms on atoms `1..=n` by the template sum
/// and switches to a symmetric ensemble.
pub fn symmetry_reduce<C: Coefficient>(me: &MasterEquation<C>) -> Result<MasterEquation<C>, CumulantError> {
    let n = match me.ensemble {
        Ensemble::Symmetric => return Ok(me.clone()),
        Ensemble::Explicit(n) => n,
    };
    let reduce = |expr: &OperatorExpr<C>| -> Result<OperatorExpr<C>, CumulantError> {
        let mut global = OperatorExpr::zero(me.space);
        let mut per_atom: Vec<OperatorExpr<C>> = vec![OperatorExpr::zero(me.space); n as usize + 1];
        for t in expr.terms() {
            let labels: Vec<AtomIndex> = t.product.atom_labels().collect();
            match labels.as_slice() {
                [] => global.push_term(t),
                [k] => {
                    let k = *k as usize;
                    let shifted = OperatorTerm {
                        product: t.product.relabel(|_| TEMPLATE_ATOM).expect("single atom"),
                        ..t
                    };
                    per_atom[k].push_term(shifted);
                }
                _ => return Err(CumulantError::Unsupported("multi-atom Hamiltonian terms".into())),
            }
        }
        let template = per_atom[0].clone();
        let reference = if n >= 1 { per_atom[1].clone() } else { OperatorExpr::zero(me.space) };
        for k in 2..=n as usize {
            if per_atom[k] != reference {
                return Err(CumulantError::Unsupported(format!("atom {k} has different parameters from atom 1")));
            }
        }
        Ok(global + template + reference)
    };
    let hamiltonian = reduce(&me.hamiltonian)?;
    let mut dissipators: Vec<Dissipator<C>> = Vec::new();
    let mut per_atom: Vec<Vec<Dissipator<C>>> = vec![Vec::new(); n as usize + 1];
    for d in &me.dissipators {
        let labels = d.jump.atoms();
        match labels.len() {
            0 => dissipators.push(d.clone()),
            1 => {
                let k = *labels.iter().next().expect("one label") as usize;
                let jump = d.jump.relabel_atoms(|_| TEMPLATE_ATOM)?;
                per_atom[k].push(Dissipator { rate: d.rate.clone(), jump });
            }
            _ => return Err(CumulantError::Unsupported("collective jump operators".into())),
        }
    }
    let reference = if n >= 1 { per_atom[1].clone() } else { Vec::new() };
    for (k, ds) in per_atom.iter().enumerate().skip(2) {
        if *ds != reference {
            return Err(CumulantError::Unsupported(format!("atom {k} has different dissipators from atom 1")));
        }
    }
    dissipators.extend(per_atom[0].iter().cloned());
    dissipators.extend(reference);
    Ok(MasterEquation { hamiltonian, dissipators, ensemble: Ensemble::Symmetric, ..me.clone() })
}

/// Writes out the template sums of a symmetric model on atoms `1..=n`.
pub fn expand_atoms<C: Coefficient>(me: &MasterEquation<C>, n: AtomIndex) -> MasterEquation<C> {
    let targets: Vec<(AtomIndex, Option<i64>)> = (1..=n).map(|k| (k, None)).collect();
    let hamiltonian = me.expand(&me.hamiltonian, &targets);
    let mut dissipators = Vec::new();
    for d in &me.dissipators {
        if d.jump.atoms().contains(&TEMPLATE_ATOM) {
            for k in 1..=n {
                let jump = d.jump.relabel_atoms(|x| if x == TEMPLATE_ATOM { k } else { x }).expect("single atom");
                dissipators.push(Dissipator { rate: d.rate.clone(), jump });
            }
        } else {
            dissipators.push(d.clone());
        }
    }
    MasterEquation { hamiltonian, dissipators, ensemble: Ensemble::Explicit(n), ..me.clone() }
}
