use num_complex::Complex;
use num_rational::Rational64;
use proptest::prelude::*;

use raman_core::cumulant::{expand_atoms, Ensemble, MasterEquation, ParamBinding};
use raman_core::opalgebra::*;
use raman_core::oracle::{Basis, CMatrix};
use raman_core::scalar::ExactCoeff;

const S3: Space = Space::three_level();

fn q(re: i64, im: i64) -> ExactCoeff {
    Complex::new(Rational64::from_integer(re), Rational64::from_integer(im))
}

fn a() -> OperatorExpr<ExactCoeff> {
    OperatorExpr::a(S3)
}

fn ad() -> OperatorExpr<ExactCoeff> {
    OperatorExpr::ad(S3)
}

fn s(k: AtomIndex, l: Level, m: Level) -> OperatorExpr<ExactCoeff> {
    OperatorExpr::sigma(S3, k, l, m).unwrap()
}

fn product(p: OpProduct) -> OperatorExpr<ExactCoeff> {
    OperatorExpr::from_product(S3, p).unwrap()
}

#[test]
fn annihilation_times_creation() {
    let lhs = a().multiply(&ad()).unwrap();
    assert_eq!(lhs, product(OpProduct::boson(1, 1)) + OperatorExpr::identity(S3));
}

#[test]
fn projector_contraction() {
    assert_eq!(s(1, 1, 2).multiply(&s(1, 2, 1)).unwrap(), s(1, 1, 1));
    assert!(s(1, 1, 2).multiply(&s(1, 1, 2)).unwrap().is_zero());
}

#[test]
fn disjoint_atoms_commute() {
    let x = s(1, 1, 2).multiply(&s(2, 2, 1)).unwrap();
    let y = s(2, 2, 1).multiply(&s(1, 1, 2)).unwrap();
    assert_eq!(x, y);
    assert_eq!(x.len(), 1);
    assert_eq!(x.max_order(), 2);
}

#[test]
fn mismatched_spaces_are_rejected() {
    let two = OperatorExpr::<ExactCoeff>::a(Space::two_level());
    assert!(matches!(a().multiply(&two), Err(AlgebraError::SpaceMismatch { .. })));
    assert!(OperatorExpr::<ExactCoeff>::sigma(Space::two_level(), 1, 1, 3).is_err());
}

#[test]
fn elementary_commutators() {
    let n = product(OpProduct::boson(1, 1));
    assert_eq!(a().commutator(&n).unwrap(), a());
    assert_eq!(s(1, 2, 2).commutator(&s(1, 1, 2)).unwrap(), -s(1, 1, 2));
    assert_eq!(a().commutator(&ad()).unwrap(), OperatorExpr::identity(S3));
}

#[test]
fn cavity_coupling_commutator() {
    let me = expand_atoms(&MasterEquation::<ExactCoeff>::full_model(Ensemble::Symmetric), 2);
    let coupling = me.hamiltonian.map_terms(|k, c| {
        k.params.powers().any(|(s, _)| s.name() == "g31").then(|| (k.clone(), *c))
    });
    let got = coupling.commutator(&a()).unwrap();
    let phase = Frequency::from_terms([("wc", 1), ("w31", -1)]);
    let expected = (s(1, 1, 3) + s(2, 1, 3)).times_symbol("g31").with_phase(&phase).scale(&q(-1, 0));
    assert_eq!(got, expected);

    // Same identity on matrices with the phase dropped, one atom, cutoff 3.
    let one = expand_atoms(&MasterEquation::<ExactCoeff>::full_model(Ensemble::Symmetric), 1);
    let stat = one.hamiltonian.map_terms(|k, c| {
        k.params.powers().any(|(s, _)| s.name() == "g31").then(|| (TermKey { phase: Frequency::zero(), ..k.clone() }, *c))
    });
    let basis = Basis::new(3, 1, 3);
    let b = ParamBinding::new().with("g31", 0.7);
    let h: CMatrix<f64> = basis.expression(&stat, &b, false).unwrap();
    let am: CMatrix<f64> = basis.expression(&a(), &b, false).unwrap();
    let lhs = &h * &am - &am * &h;
    let rhs: CMatrix<f64> = basis.expression(&s(1, 1, 3).scale(&q(-1, 0)).times_symbol("g31"), &b, false).unwrap();
    // The truncated `a` matrix is exact on columns with fewer than two photons.
    for j in 0..2 * 3 {
        for i in 0..basis.dim() {
            assert!((lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-12);
        }
    }
}

#[test]
fn adjoint_examples() {
    assert_eq!(a().adjoint(), ad());
    let n = product(OpProduct::boson(1, 1));
    assert_eq!(n.adjoint(), n);
    let w = Frequency::from_terms([("wd", 1), ("w32", -1)]);
    let x = s(1, 1, 3).scale(&q(2, 3)).with_phase(&w);
    assert_eq!(x.adjoint(), s(1, 3, 1).scale(&q(2, -3)).with_phase(&w.neg()));
}

#[test]
fn rendering() {
    let me = expand_atoms(&MasterEquation::<ExactCoeff>::full_model(Ensemble::Symmetric), 1);
    let text = me.hamiltonian.to_string();
    assert!(text.contains("g31*exp(i*(wc-w31)*t)*ad*s13[1]"), "{text}");
}

fn elementary() -> impl Strategy<Value = ElementaryOp> {
    prop_oneof![
        Just(ElementaryOp::create()),
        Just(ElementaryOp::annihilate()),
        (1u32..=2, 1u8..=3, 1u8..=3).prop_map(|(k, l, m)| ElementaryOp::transition(k, l, m)),
    ]
}

fn raw_term() -> impl Strategy<Value = RawTerm<ExactCoeff>> {
    (-3i64..=3, -3i64..=3, prop::collection::vec(elementary(), 0..=4)).prop_map(|(re, im, factors)| RawTerm {
        coefficient: q(re, im),
        params: Monomial::one(),
        phase: Frequency::zero(),
        factors,
    })
}

fn raw_expr() -> impl Strategy<Value = Vec<RawTerm<ExactCoeff>>> {
    prop::collection::vec(raw_term(), 1..=4)
}

fn symbolic_term() -> impl Strategy<Value = RawTerm<ExactCoeff>> {
    let params = prop::sample::select(vec!["g31", "Omega", "kappa"]);
    let phase = prop::sample::select(vec![("wc", 1), ("w31", -1), ("wd", 1)]);
    (raw_term(), params, phase, any::<bool>()).prop_map(|(mut t, p, w, with_phase)| {
        t.params = Monomial::symbol(p);
        if with_phase {
            t.phase = Frequency::from_terms([w]);
        }
        t
    })
}

fn bosons(raw: &[RawTerm<ExactCoeff>]) -> usize {
    raw.iter()
        .map(|t| t.factors.iter().filter(|f| f.subsystem == Subsystem::Cavity).count())
        .max()
        .unwrap_or(0)
}

fn op_matrix(basis: &Basis, op: &ElementaryOp) -> CMatrix<f64> {
    let p = match (op.kind, op.subsystem) {
        (OpKind::Create, _) => OpProduct::boson(1, 0),
        (OpKind::Annihilate, _) => OpProduct::boson(0, 1),
        (OpKind::Transition(l, m), Subsystem::Atom(k)) => OpProduct::transition(k, l, m),
        _ => unreachable!(),
    };
    basis.product(&p).unwrap()
}

fn raw_matrix(basis: &Basis, raw: &[RawTerm<ExactCoeff>]) -> CMatrix<f64> {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for t in raw {
        let c = Complex::new(
            *t.coefficient.re.numer() as f64 / *t.coefficient.re.denom() as f64,
            *t.coefficient.im.numer() as f64 / *t.coefficient.im.denom() as f64,
        );
        let w = t.factors.iter().fold(CMatrix::identity(d, d), |acc, f| acc * op_matrix(basis, f));
        m += w * c;
    }
    m
}

/// Basis with room for `ladder` raising steps above the vacuum column.
fn roomy(ladder: usize) -> Basis {
    Basis::new(ladder + 2, 2, 3)
}

/// Compares columns whose photon number leaves room for `ladder` raising
/// steps below the cutoff, where truncated matrices are exact.
fn agree_below(basis: &Basis, x: &CMatrix<f64>, y: &CMatrix<f64>, ladder: usize) -> bool {
    let cols = (basis.cutoff - ladder) * basis.atom_dim();
    (0..cols).all(|j| (0..basis.dim()).all(|i| (x[(i, j)] - y[(i, j)]).norm() < 1e-12))
}

fn matrix(basis: &Basis, e: &OperatorExpr<ExactCoeff>) -> CMatrix<f64> {
    basis.expression(e, &ParamBinding::new(), false).unwrap()
}

proptest! {
    #[test]
    fn simplify_is_idempotent(raw in prop::collection::vec(symbolic_term(), 1..=4)) {
        let x = simplify(S3, &raw).unwrap();
        prop_assert_eq!(simplify(S3, &x.to_raw()).unwrap(), x);
    }

    #[test]
    fn adjoint_is_an_involution(raw in prop::collection::vec(symbolic_term(), 1..=4)) {
        let x = simplify(S3, &raw).unwrap();
        prop_assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn normal_ordering_preserves_the_operator(raw in raw_expr()) {
        let basis = roomy(bosons(&raw));
        let x = simplify(S3, &raw).unwrap();
        prop_assert!(agree_below(&basis, &matrix(&basis, &x), &raw_matrix(&basis, &raw), bosons(&raw)));
    }

    #[test]
    fn multiplication_is_a_homomorphism(rx in raw_expr(), ry in raw_expr()) {
        let basis = roomy(bosons(&rx) + bosons(&ry));
        let (x, y) = (simplify(S3, &rx).unwrap(), simplify(S3, &ry).unwrap());
        let xy = matrix(&basis, &x.multiply(&y).unwrap());
        let prod = matrix(&basis, &x) * matrix(&basis, &y);
        prop_assert!(agree_below(&basis, &xy, &prod, bosons(&rx) + bosons(&ry)));
    }

    #[test]
    fn commutator_is_antisymmetric(rx in raw_expr(), ry in raw_expr()) {
        let (x, y) = (simplify(S3, &rx).unwrap(), simplify(S3, &ry).unwrap());
        prop_assert_eq!(x.commutator(&y).unwrap(), -y.commutator(&x).unwrap());
    }

    #[test]
    fn multiplication_is_associative(rx in raw_expr(), ry in raw_expr(), rz in raw_expr()) {
        let (x, y, z) = (simplify(S3, &rx).unwrap(), simplify(S3, &ry).unwrap(), simplify(S3, &rz).unwrap());
        let left = x.multiply(&y).unwrap().multiply(&z).unwrap();
        let right = x.multiply(&y.multiply(&z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }
}

#[test]
fn boson_commutator_matrix_is_identity() {
    let basis = Basis::new(5, 1, 3);
    let c = matrix(&basis, &a().commutator(&ad()).unwrap());
    assert!((c - CMatrix::<f64>::identity(basis.dim(), basis.dim())).iter().all(|z| z.norm() < 1e-12));
}
