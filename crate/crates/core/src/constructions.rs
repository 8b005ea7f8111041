//! General constructions of Gel'fand-Dorfman structures over concrete
//! super-commutative base algebras: the vector-field semidirect structure,
//! the twisted Lie-Poisson structure, the doubled-space construction and the
//! structures built from a pair of commuting derivations.

use crate::basis::{BasisId, Parity};
use crate::checks::{lie_jacobi_residual, CheckFailure, CheckReport, Report};
use crate::element::Element;
use crate::rule::{BilinearRule, GdStructure};
use crate::scalar::Scalar;
use crate::superalg::{Derivation, PoissonStructure, SuperCommAlg, SuperMono};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ConstructionError {
    #[error("the derivation must be even, got an odd one: {0}")]
    OddDerivation(String),
    #[error("xi must be an even element")]
    OddXi,
    #[error("twist mismatch: bracket twist law fails on ({u}, {v}) with residual {residual}")]
    TwistMismatch { u: SuperMono, v: SuperMono, residual: Element<SuperMono> },
    #[error("condition violated: doubling constraint has residual {residual}")]
    ConditionViolated { residual: Element<SuperMono> },
    #[error("derivations {d1} and {d2} do not commute: [d1,d2]({gen}) = {residual}")]
    NonCommutingDerivations {
        d1: String,
        d2: String,
        gen: SuperMono,
        residual: Element<SuperMono>,
    },
    #[error("this construction needs a commutative base algebra (no odd variables)")]
    NotCommutative,
}

// ---------------------------------------------------------------------------
// Novikov products from a derivation.
// ---------------------------------------------------------------------------

/// Novikov product `u o v = u d(v) + xi u v` for an even derivation `d` and
/// an even element `xi`.
pub fn novikov_from_derivation(
    alg: &SuperCommAlg,
    d: &Derivation,
    xi: &Element<SuperMono>,
) -> Result<BilinearRule<SuperMono>, ConstructionError> {
    if !d.is_even() {
        return Err(ConstructionError::OddDerivation(d.name.clone()));
    }
    if xi.parity() != Some(Parity::Even) {
        return Err(ConstructionError::OddXi);
    }
    let (alg, d, xi) = (*alg, d.clone(), xi.clone());
    Ok(BilinearRule::new(
        format!("u*({})(v) + xi*u*v", d.name),
        Arc::new(move |u: &SuperMono, v: &SuperMono| {
            let ue = Element::basis(u.clone());
            let main = alg.mul(&ue, &d.apply_mono(v));
            let uv = match alg.mul_mono(u, v) {
                Some((sign, m)) => Element::singleton(m, sign),
                None => Element::zero(),
            };
            &main + &alg.mul(&xi, &uv)
        }),
    ))
}

// ---------------------------------------------------------------------------
// Semidirect structure on vector fields plus functions.
// ---------------------------------------------------------------------------

/// Basis of the space "vector fields + functions": either a coefficient
/// monomial attached to a coordinate derivative, or a bare monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SdIndex {
    /// `mono * d/d(var)`.
    Field(SuperMono, usize),
    /// A function.
    Func(SuperMono),
}

impl fmt::Display for SdIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdIndex::Field(m, var) => write!(f, "({m})@d{var}"),
            SdIndex::Func(m) => write!(f, "{m}"),
        }
    }
}

impl SdIndex {
    fn parity_in(&self, alg: &SuperCommAlg) -> Parity {
        match self {
            SdIndex::Field(m, var) => {
                let dvar = if *var < alg.evens { Parity::Even } else { Parity::Odd };
                m.parity().add(dvar)
            }
            SdIndex::Func(m) => m.parity(),
        }
    }
}

/// [`SdIndex`] with the derivative parity resolved, so it can be graded on
/// its own.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemidirectIndex {
    pub index: SdIndex,
    parity: Parity,
}

impl SemidirectIndex {
    pub fn new(alg: &SuperCommAlg, index: SdIndex) -> Self {
        let parity = index.parity_in(alg);
        SemidirectIndex { index, parity }
    }

    pub fn field(alg: &SuperCommAlg, mono: SuperMono, var: usize) -> Self {
        SemidirectIndex::new(alg, SdIndex::Field(mono, var))
    }

    pub fn func(alg: &SuperCommAlg, mono: SuperMono) -> Self {
        SemidirectIndex::new(alg, SdIndex::Func(mono))
    }
}

impl fmt::Display for SemidirectIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index)
    }
}

impl BasisId for SemidirectIndex {
    fn parity(&self) -> Parity {
        self.parity
    }
}

fn lift_field(alg: &SuperCommAlg, e: &Element<SuperMono>, var: usize) -> Element<SemidirectIndex> {
    e.map_indices(|m| SemidirectIndex::field(alg, m.clone(), var))
}

fn lift_func(alg: &SuperCommAlg, e: &Element<SuperMono>) -> Element<SemidirectIndex> {
    e.map_indices(|m| SemidirectIndex::func(alg, m.clone()))
}

/// Semidirect structure on vector fields plus functions:
/// bracket `[d1+f1, d2+f2] = [d1,d2] + d1(f2) - (-1)^{ij} d2(f1)` and product
/// `(d1+f1) o (d2+f2) = (-1)^{ij} f2 d1 + f1 f2`.
pub fn gd_semidirect_w(alg: &SuperCommAlg) -> GdStructure<SemidirectIndex> {
    let alg = *alg;
    let partial_of = move |var: usize, m: &SuperMono| Derivation::partial(&alg, var, m);

    let bracket = BilinearRule::new(
        "semidirect-bracket",
        Arc::new(move |a: &SemidirectIndex, b: &SemidirectIndex| {
            let sign = a.parity().koszul(b.parity());
            match (&a.index, &b.index) {
                (SdIndex::Field(u, va), SdIndex::Field(v, vb)) => {
                    // u d_a(v) d_b - (-1)^{ij} v d_b(u) d_a
                    let fwd = alg.mul(&Element::basis(u.clone()), &partial_of(*va, v));
                    let bwd = alg.mul(&Element::basis(v.clone()), &partial_of(*vb, u));
                    &lift_field(&alg, &fwd, *vb) - &lift_field(&alg, &bwd, *va).scale(&sign)
                }
                (SdIndex::Field(u, va), SdIndex::Func(v)) => {
                    let d = alg.mul(&Element::basis(u.clone()), &partial_of(*va, v));
                    lift_func(&alg, &d)
                }
                (SdIndex::Func(u), SdIndex::Field(v, vb)) => {
                    let d = alg.mul(&Element::basis(v.clone()), &partial_of(*vb, u));
                    lift_func(&alg, &d).scale(&-&sign)
                }
                (SdIndex::Func(_), SdIndex::Func(_)) => Element::zero(),
            }
        }),
    );

    let circ = BilinearRule::new(
        "semidirect-circ",
        Arc::new(move |a: &SemidirectIndex, b: &SemidirectIndex| {
            let sign = a.parity().koszul(b.parity());
            match (&a.index, &b.index) {
                (SdIndex::Field(u, va), SdIndex::Func(v)) => {
                    // (-1)^{ij} (v u) d_a
                    let vu = alg.mul(&Element::basis(v.clone()), &Element::basis(u.clone()));
                    lift_field(&alg, &vu, *va).scale(&sign)
                }
                (SdIndex::Func(u), SdIndex::Func(v)) => {
                    let uv = alg.mul(&Element::basis(u.clone()), &Element::basis(v.clone()));
                    lift_func(&alg, &uv)
                }
                _ => Element::zero(),
            }
        }),
    );

    GdStructure { bracket, circ }
}

/// Embeds a derivation as a vector-field element `sum coeff * d/d(var)`.
pub fn derivation_as_element(alg: &SuperCommAlg, d: &Derivation) -> Element<SemidirectIndex> {
    let mut out = Element::zero();
    for (var, coeff) in d.coeffs.iter().enumerate() {
        out = &out + &lift_field(alg, coeff, var);
    }
    out
}

/// Embeds a function as an element of the semidirect space.
pub fn function_as_element(alg: &SuperCommAlg, e: &Element<SuperMono>) -> Element<SemidirectIndex> {
    lift_func(alg, e)
}

// ---------------------------------------------------------------------------
// Twisted Lie-Poisson structure.
// ---------------------------------------------------------------------------

/// Pairs a Poisson bracket with the product `u o v = u d(v) + xi u v`, after
/// validating the twist law `d[u,v] = [d(u),v] + [u,d(v)] + xi [u,v]` on
/// generator pairs (which pins it everywhere, both sides being
/// biderivations).
pub fn gd_lie_poisson(
    alg: &SuperCommAlg,
    poisson: &PoissonStructure,
    d: &Derivation,
    xi: &Scalar,
) -> Result<GdStructure<SuperMono>, ConstructionError> {
    if !d.is_even() {
        return Err(ConstructionError::OddDerivation(d.name.clone()));
    }
    let mut gens: Vec<SuperMono> = (0..alg.evens).map(|i| alg.var(i)).collect();
    for i in 0..alg.evens {
        let mut exps = vec![0; alg.evens];
        exps[i] = -1;
        gens.push(SuperMono { exps, odd: 0 });
    }
    gens.extend((0..alg.odds).map(|j| alg.odd_var(j)));
    for u in &gens {
        for v in &gens {
            let uv = poisson.bracket.apply(u, v);
            let lhs = d.apply(&uv);
            let r1 = poisson.bracket.evaluate(&d.apply_mono(u), &Element::basis(v.clone()));
            let r2 = poisson.bracket.evaluate_ie(u, &d.apply_mono(v));
            let residual = &(&(&lhs - &r1) - &r2) - &uv.scale(xi);
            if !residual.is_zero() {
                return Err(ConstructionError::TwistMismatch {
                    u: u.clone(),
                    v: v.clone(),
                    residual,
                });
            }
        }
    }
    let xi_elem = Element::singleton(alg.one(), xi.clone());
    let circ = novikov_from_derivation(alg, d, &xi_elem)?;
    Ok(GdStructure { bracket: poisson.bracket.clone(), circ })
}

// ---------------------------------------------------------------------------
// Doubled-space construction.
// ---------------------------------------------------------------------------

/// Basis of the doubled space `A x A`: a monomial living in the even or the
/// odd copy.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairIndex {
    pub mono: SuperMono,
    pub odd_copy: bool,
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}[{}]", self.odd_copy as u8, self.mono)
    }
}

impl BasisId for PairIndex {
    fn parity(&self) -> Parity {
        if self.odd_copy {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

fn lift_pair(e: &Element<SuperMono>, odd_copy: bool) -> Element<PairIndex> {
    e.map_indices(|m| PairIndex { mono: m.clone(), odd_copy })
}

/// Doubled-space structure on `A x A` with bracket `[(u0,u1),(v0,v1)] =
/// (xi u1 v1, 0)` and product threading `d + eta0` through the even copy and
/// `d + eta1` into the odd one. Requires `2 xi eta1 = xi eta0 + d(xi)`
/// exactly; on failure the residual element is reported.
pub fn gd_pair_construction(
    alg: &SuperCommAlg,
    d: &Derivation,
    xi: &Element<SuperMono>,
    eta0: &Element<SuperMono>,
    eta1: &Element<SuperMono>,
) -> Result<GdStructure<PairIndex>, ConstructionError> {
    if alg.odds != 0 {
        return Err(ConstructionError::NotCommutative);
    }
    let two = Scalar::from(2);
    let residual = &(&alg.mul(xi, eta1).scale(&two) - &alg.mul(xi, eta0)) - &d.apply(xi);
    if !residual.is_zero() {
        return Err(ConstructionError::ConditionViolated { residual });
    }

    let (alg_c, xi_c) = (*alg, xi.clone());
    let bracket = BilinearRule::new(
        "pair-bracket",
        Arc::new(move |a: &PairIndex, b: &PairIndex| {
            if a.odd_copy && b.odd_copy {
                let uv = alg_c.mul(&Element::basis(a.mono.clone()), &Element::basis(b.mono.clone()));
                lift_pair(&alg_c.mul(&xi_c, &uv), false)
            } else {
                Element::zero()
            }
        }),
    );

    let (alg_c, d_c, e0, e1) = (*alg, d.clone(), eta0.clone(), eta1.clone());
    let circ = BilinearRule::new(
        "pair-circ",
        Arc::new(move |a: &PairIndex, b: &PairIndex| {
            if a.odd_copy && b.odd_copy {
                return Element::zero();
            }
            let eta = if b.odd_copy { &e1 } else { &e0 };
            let dv = &d_c.apply_mono(&b.mono)
                + &alg_c.mul(eta, &Element::basis(b.mono.clone()));
            let prod = alg_c.mul(&Element::basis(a.mono.clone()), &dv);
            lift_pair(&prod, a.odd_copy || b.odd_copy)
        }),
    );

    Ok(GdStructure { bracket, circ })
}

// ---------------------------------------------------------------------------
// Structures from a pair of commuting derivations.
// ---------------------------------------------------------------------------

/// The products and brackets generated by two commuting even derivations:
/// `[u,v]_{1,2} = d1(u) d2(v) - d2(u) d1(v)`, `[u,v]_i = u d_i(v) - d_i(u) v`
/// and `u o_{i,b} v = u (d_i + b)(v)`.
pub struct DerivedOps {
    pub bracket12: BilinearRule<SuperMono>,
    pub bracket1: BilinearRule<SuperMono>,
    pub bracket2: BilinearRule<SuperMono>,
    pub circ1: BilinearRule<SuperMono>,
    pub circ2: BilinearRule<SuperMono>,
    pub b: Scalar,
}

fn check_commuting(d1: &Derivation, d2: &Derivation) -> Result<(), ConstructionError> {
    if let Some((gen, residual)) = d1.noncommuting_generator(d2) {
        return Err(ConstructionError::NonCommutingDerivations {
            d1: d1.name.clone(),
            d2: d2.name.clone(),
            gen,
            residual,
        });
    }
    Ok(())
}

/// Cross bracket `d_i(u) d_j(v) - d_j(u) d_i(v)` as a rule.
pub fn cross_bracket(alg: &SuperCommAlg, di: &Derivation, dj: &Derivation) -> BilinearRule<SuperMono> {
    let (alg, di, dj) = (*alg, di.clone(), dj.clone());
    BilinearRule::new(
        format!("[{},{}]", di.name, dj.name),
        Arc::new(move |u: &SuperMono, v: &SuperMono| {
            let fwd = alg.mul(&di.apply_mono(u), &dj.apply_mono(v));
            let bwd = alg.mul(&dj.apply_mono(u), &di.apply_mono(v));
            &fwd - &bwd
        }),
    )
}

/// Inner bracket `u d_i(v) - d_i(u) v` as a rule.
pub fn inner_bracket(alg: &SuperCommAlg, di: &Derivation) -> BilinearRule<SuperMono> {
    let (alg, di) = (*alg, di.clone());
    BilinearRule::new(
        format!("[.,{}]", di.name),
        Arc::new(move |u: &SuperMono, v: &SuperMono| {
            let fwd = alg.mul(&Element::basis(u.clone()), &di.apply_mono(v));
            let bwd = alg.mul(&di.apply_mono(u), &Element::basis(v.clone()));
            &fwd - &bwd
        }),
    )
}

/// Shifted product `u (d_i + b)(v)` as a rule.
pub fn shifted_circ(alg: &SuperCommAlg, di: &Derivation, b: &Scalar) -> BilinearRule<SuperMono> {
    let (alg, di, b) = (*alg, di.clone(), b.clone());
    BilinearRule::new(
        format!("o({},{b})", di.name),
        Arc::new(move |u: &SuperMono, v: &SuperMono| {
            let ue = Element::basis(u.clone());
            let dv = &di.apply_mono(v) + &Element::singleton(v.clone(), b.clone());
            alg.mul(&ue, &dv)
        }),
    )
}

/// Builds the whole record of derived operations, validating commutation.
pub fn two_derivation_ops(
    alg: &SuperCommAlg,
    d1: &Derivation,
    d2: &Derivation,
    b: &Scalar,
) -> Result<DerivedOps, ConstructionError> {
    if alg.odds != 0 {
        return Err(ConstructionError::NotCommutative);
    }
    if !d1.is_even() {
        return Err(ConstructionError::OddDerivation(d1.name.clone()));
    }
    if !d2.is_even() {
        return Err(ConstructionError::OddDerivation(d2.name.clone()));
    }
    check_commuting(d1, d2)?;
    Ok(DerivedOps {
        bracket12: cross_bracket(alg, d1, d2),
        bracket1: inner_bracket(alg, d1),
        bracket2: inner_bracket(alg, d2),
        circ1: shifted_circ(alg, d1, b),
        circ2: shifted_circ(alg, d2, b),
        b: b.clone(),
    })
}

/// The two Gel'fand-Dorfman structures generated by a commuting pair:
/// variant A pairs `[.,.]_{1,2} + [.,.]_2` with `o_{2,0}`; variant B pairs
/// `[.,.]_{2,1} + b [.,.]_1` with `o_{2,b}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdVariant {
    A,
    B,
}

pub fn gd_from_derivation_pair(
    alg: &SuperCommAlg,
    d1: &Derivation,
    d2: &Derivation,
    variant: GdVariant,
    b: &Scalar,
) -> Result<GdStructure<SuperMono>, ConstructionError> {
    let ops = two_derivation_ops(alg, d1, d2, b)?;
    let (bracket, circ) = match variant {
        GdVariant::A => (
            BilinearRule::sum("bracket12+bracket2", &ops.bracket12, &ops.bracket2),
            shifted_circ(alg, d2, &Scalar::zero()),
        ),
        GdVariant::B => {
            let b21 = BilinearRule::scaled("bracket21", &ops.bracket12, -Scalar::one());
            let b1 = BilinearRule::scaled("b*bracket1", &ops.bracket1, b.clone());
            (BilinearRule::sum("bracket21+b*bracket1", &b21, &b1), ops.circ2)
        }
    };
    Ok(GdStructure { bracket, circ })
}

/// Six-term combination of cross and inner brackets attached to three
/// derivation slots `(i, j, l)`.
fn six_term_sum(
    cross_ij: &BilinearRule<SuperMono>,
    inner_l: &BilinearRule<SuperMono>,
    u: &SuperMono,
    v: &SuperMono,
    w: &SuperMono,
) -> Element<SuperMono> {
    let mut out = Element::zero();
    let one = Scalar::one();
    // [[u,v]_{i,j}, w]_l + [[u,v]_l, w]_{i,j} and the two cyclic shifts.
    for (a, b, c) in [(u, v, w), (v, w, u), (w, u, v)] {
        out.add_assign_scaled(&inner_l.evaluate_ei(&cross_ij.apply(a, b), c), &one);
        out.add_assign_scaled(&cross_ij.evaluate_ei(&inner_l.apply(a, b), c), &one);
    }
    out
}

/// Closed product form for the six-term sum with three distinct derivations.
fn triple_closed_form(
    alg: &SuperCommAlg,
    ds: [&Derivation; 3],
    u: &SuperMono,
    v: &SuperMono,
    w: &SuperMono,
) -> Element<SuperMono> {
    let term = |a: usize, b: usize, c: usize| {
        alg.mul(&alg.mul(&ds[a].apply_mono(u), &ds[b].apply_mono(v)), &ds[c].apply_mono(w))
    };
    // d_i(u)d_l(v)d_j(w) + d_j(u)d_i(v)d_l(w) + d_l(u)d_j(v)d_i(w)
    // - d_i(u)d_j(v)d_l(w) - d_j(u)d_l(v)d_i(w) - d_l(u)d_i(v)d_j(w)
    let pos = &(&term(0, 2, 1) + &term(1, 0, 2)) + &term(2, 1, 0);
    let neg = &(&term(0, 1, 2) + &term(1, 2, 0)) + &term(2, 0, 1);
    &pos - &neg
}

/// Verifies that the six-term bracket sum matches its closed product form
/// for slots `(1,2,3)` and vanishes for the repeated slots `(1,2,2)`.
pub fn check_triple_bracket(
    alg: &SuperCommAlg,
    d1: &Derivation,
    d2: &Derivation,
    d3: &Derivation,
    triples: &[(SuperMono, SuperMono, SuperMono)],
    sample: &str,
) -> Result<CheckReport<SuperMono>, ConstructionError> {
    check_commuting(d1, d2)?;
    check_commuting(d1, d3)?;
    check_commuting(d2, d3)?;
    let cross12 = cross_bracket(alg, d1, d2);
    let inner3 = inner_bracket(alg, d3);
    let inner2 = inner_bracket(alg, d2);
    let mut failures: Vec<CheckFailure<SuperMono>> = Vec::new();
    for (u, v, w) in triples {
        let sum = six_term_sum(&cross12, &inner3, u, v, w);
        let closed = triple_closed_form(alg, [d1, d2, d3], u, v, w);
        let residual = &sum - &closed;
        if !residual.is_zero() {
            failures.push(CheckFailure {
                inputs: vec![u.clone(), v.clone(), w.clone()],
                residual,
            });
            continue;
        }
        let repeated = six_term_sum(&cross12, &inner2, u, v, w);
        if !repeated.is_zero() {
            failures.push(CheckFailure {
                inputs: vec![u.clone(), v.clone(), w.clone()],
                residual: repeated,
            });
        }
    }
    let samples = triples.len() * 2;
    Ok(Report::collect("triple-bracket", sample, samples, failures))
}

/// Jacobi residuals of `[.,.]_{1,2} + lambda [.,.]_1` on the given triples.
pub fn check_lie_combo(
    alg: &SuperCommAlg,
    d1: &Derivation,
    d2: &Derivation,
    lambda: &Scalar,
    triples: &[(SuperMono, SuperMono, SuperMono)],
    sample: &str,
) -> Result<CheckReport<SuperMono>, ConstructionError> {
    check_commuting(d1, d2)?;
    let combo = BilinearRule::sum(
        "bracket12+lambda*bracket1",
        &cross_bracket(alg, d1, d2),
        &BilinearRule::scaled("lambda*bracket1", &inner_bracket(alg, d1), lambda.clone()),
    );
    let mut failures = Vec::new();
    for (u, v, w) in triples {
        let r = lie_jacobi_residual(&combo, u, v, w);
        if !r.is_zero() {
            failures.push(CheckFailure { inputs: vec![u.clone(), v.clone(), w.clone()], residual: r });
        }
    }
    Ok(Report::collect("lie-combo", sample, triples.len(), failures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{check_gd_compat, check_lie_super, check_novikov_super, gd_compat_residual};

    fn laurent1() -> SuperCommAlg {
        SuperCommAlg::new(1, 0)
    }

    fn t_ddt(alg: &SuperCommAlg) -> Derivation {
        Derivation::even_field(*alg, 0, Element::basis(alg.var(0)))
    }

    fn tpow(alg: &SuperCommAlg, k: i64) -> SuperMono {
        let mut m = alg.one();
        m.exps[0] = k;
        m
    }

    #[test]
    fn derivation_product_examples() {
        let alg = laurent1();
        let d = t_ddt(&alg);
        // d = t d/dt, xi = 0: t^a o t^b = b t^{a+b}.
        let circ = novikov_from_derivation(&alg, &d, &Element::zero()).unwrap();
        let got = circ.apply(&tpow(&alg, 2), &tpow(&alg, 3));
        assert_eq!(got, Element::singleton(tpow(&alg, 5), Scalar::from(3)));
        // xi = t adds t^{a+b+1}.
        let circ =
            novikov_from_derivation(&alg, &d, &Element::basis(alg.var(0))).unwrap();
        let got = circ.apply(&tpow(&alg, 2), &tpow(&alg, 3));
        let want = Element::from_terms([
            (tpow(&alg, 5), Scalar::from(3)),
            (tpow(&alg, 6), Scalar::one()),
        ]);
        assert_eq!(got, want);
        let sample = alg.monomials(-2, 2, false);
        assert!(check_novikov_super(&circ, &sample, "box").passed());
    }

    #[test]
    fn derivation_product_rejects_odd_data() {
        let alg = SuperCommAlg::new(1, 1);
        let odd_d = Derivation::coordinate(alg, 1);
        assert!(matches!(
            novikov_from_derivation(&alg, &odd_d, &Element::zero()),
            Err(ConstructionError::OddDerivation(_))
        ));
        let d = t_ddt(&alg);
        let odd_xi = Element::basis(alg.odd_var(0));
        assert!(matches!(
            novikov_from_derivation(&alg, &d, &odd_xi),
            Err(ConstructionError::OddXi)
        ));
    }

    #[test]
    fn semidirect_small_laws() {
        let alg = SuperCommAlg::new(1, 1);
        let gd = gd_semidirect_w(&alg);
        let monos = alg.monomials(-1, 1, true);
        let mut idx: Vec<SemidirectIndex> = Vec::new();
        for m in &monos {
            for var in 0..2 {
                idx.push(SemidirectIndex::field(&alg, m.clone(), var));
            }
            idx.push(SemidirectIndex::func(&alg, m.clone()));
        }
        // Pure-function part multiplies like the algebra.
        let f1 = SemidirectIndex::func(&alg, tpow(&alg, 1));
        let f2 = SemidirectIndex::func(&alg, tpow(&alg, -1));
        assert_eq!(
            gd.circ.apply(&f1, &f2),
            Element::basis(SemidirectIndex::func(&alg, alg.one()))
        );
        // Field o function-free is zero.
        let d = SemidirectIndex::field(&alg, alg.one(), 0);
        assert!(gd.circ.apply(&d, &d).is_zero());

        let lie = check_lie_super(&gd.bracket, &idx, "semidirect small");
        assert!(lie.passed(), "{}", lie.summary());
        let nov = check_novikov_super(&gd.circ, &idx, "semidirect small");
        assert!(nov.passed(), "{}", nov.summary());
        let compat = check_gd_compat(&gd.bracket, &gd.circ, &idx, "semidirect small");
        assert!(compat.passed(), "{}", compat.summary());
    }

    #[test]
    fn lie_poisson_twist_detection() {
        let alg = SuperCommAlg::new(2, 0);
        let p = PoissonStructure::canonical(alg).unwrap();
        let euler = Derivation::euler(alg);
        // Euler scales the canonical bracket by -2, so xi must be -2.
        assert!(gd_lie_poisson(&alg, &p, &euler, &Scalar::from(-2)).is_ok());
        match gd_lie_poisson(&alg, &p, &euler, &Scalar::zero()) {
            Err(ConstructionError::TwistMismatch { residual, .. }) => {
                assert!(!residual.is_zero())
            }
            other => panic!("expected twist mismatch, got {other:?}"),
        }
    }

    #[test]
    fn lie_poisson_compat_on_polynomials() {
        let alg = SuperCommAlg::new(2, 0);
        let p = PoissonStructure::canonical(alg).unwrap();
        let euler = Derivation::euler(alg);
        let gd = gd_lie_poisson(&alg, &p, &euler, &Scalar::from(-2)).unwrap();
        let sample = alg.monomials(0, 2, false);
        let compat = check_gd_compat(&gd.bracket, &gd.circ, &sample, "poly box");
        assert!(compat.passed(), "{}", compat.summary());
    }

    #[test]
    fn pair_construction_condition() {
        let alg = laurent1();
        let d = t_ddt(&alg);
        let xi = Element::basis(tpow(&alg, 2));
        // 2 xi eta1 = xi eta0 + d(xi) with eta0 = 0, eta1 = 1: 2t^2 = 2t^2.
        let ok = gd_pair_construction(&alg, &d, &xi, &Element::zero(), &Element::basis(alg.one()));
        assert!(ok.is_ok());
        // eta1 = 0 leaves residual -d(xi) = -2t^2 (d = t d/dt).
        match gd_pair_construction(&alg, &d, &xi, &Element::zero(), &Element::zero()) {
            Err(ConstructionError::ConditionViolated { residual }) => {
                assert_eq!(residual, Element::singleton(tpow(&alg, 2), Scalar::from(-2)));
            }
            other => panic!("expected condition violation, got {other:?}"),
        }
    }

    #[test]
    fn pair_construction_laws() {
        let alg = laurent1();
        let d = t_ddt(&alg);
        let xi = Element::basis(tpow(&alg, 2));
        let gd = gd_pair_construction(&alg, &d, &xi, &Element::zero(), &Element::basis(alg.one()))
            .unwrap();
        let idx: Vec<PairIndex> = alg
            .monomials(-1, 1, false)
            .into_iter()
            .flat_map(|m| {
                [
                    PairIndex { mono: m.clone(), odd_copy: false },
                    PairIndex { mono: m, odd_copy: true },
                ]
            })
            .collect();
        assert!(check_lie_super(&gd.bracket, &idx, "pair").passed());
        assert!(check_novikov_super(&gd.circ, &idx, "pair").passed());
        assert!(check_gd_compat(&gd.bracket, &gd.circ, &idx, "pair").passed());
    }

    #[test]
    fn two_derivation_examples() {
        let alg = laurent1();
        let c = Scalar::ratio(5, 3);
        let d1 = Derivation::even_field(
            alg,
            0,
            Element::singleton(alg.var(0), c.clone()),
        );
        let d2 = t_ddt(&alg);
        let ops = two_derivation_ops(&alg, &d1, &d2, &Scalar::ratio(1, 2)).unwrap();
        let (a, b) = (tpow(&alg, 2), tpow(&alg, 3));
        // Proportional scalings have a vanishing cross bracket.
        assert!(ops.bracket12.apply(&a, &b).is_zero());
        // [t^a, t^b]_2 = (b - a) t^{a+b}.
        assert_eq!(
            ops.bracket2.apply(&a, &b),
            Element::singleton(tpow(&alg, 5), Scalar::from(1))
        );
        // o_{2,b}: t^a o t^b = (b + 1/2) t^{a+b}.
        assert_eq!(
            ops.circ2.apply(&a, &b),
            Element::singleton(tpow(&alg, 5), Scalar::ratio(7, 2))
        );
    }

    #[test]
    fn noncommuting_pair_is_rejected() {
        let alg = laurent1();
        let d1 = t_ddt(&alg);
        let d2 = Derivation::coordinate(alg, 0);
        assert!(matches!(
            two_derivation_ops(&alg, &d1, &d2, &Scalar::zero()),
            Err(ConstructionError::NonCommutingDerivations { .. })
        ));
    }

    #[test]
    fn triple_bracket_identities() {
        let alg = SuperCommAlg::new(3, 0);
        let d1 = Derivation::even_field(alg, 0, Element::basis(alg.var(0)));
        let d2 = Derivation::even_field(alg, 1, Element::basis(alg.var(1)));
        let d3 = Derivation::even_field(alg, 2, Element::basis(alg.var(2)));
        let monos = alg.monomials(0, 1, false);
        let mut triples = Vec::new();
        for u in &monos {
            for v in &monos {
                for w in &monos {
                    triples.push((u.clone(), v.clone(), w.clone()));
                }
            }
        }
        let report =
            check_triple_bracket(&alg, &d1, &d2, &d3, &triples, "monomial box").unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn derivation_pair_structures_pass_compat() {
        let alg = SuperCommAlg::new(2, 0);
        let d1 = Derivation::even_field(alg, 0, Element::basis(alg.var(0)));
        let d2 = Derivation::even_field(alg, 1, Element::basis(alg.var(1)));
        let sample = alg.monomials(-1, 1, false);
        for (variant, b) in [(GdVariant::A, Scalar::zero()), (GdVariant::B, Scalar::from(3))] {
            let gd = gd_from_derivation_pair(&alg, &d1, &d2, variant, &b).unwrap();
            let lie = check_lie_super(&gd.bracket, &sample, "box");
            assert!(lie.passed(), "{variant:?}: {}", lie.summary());
            let compat = check_gd_compat(&gd.bracket, &gd.circ, &sample, "box");
            assert!(compat.passed(), "{variant:?}: {}", compat.summary());
        }
    }

    #[test]
    fn compat_residual_identities_for_derived_ops() {
        // The five-term residual of ([.,.]_{1,2}, o_{3,b}) collapses to
        // b * w * [u,v]_{1,2}, and of ([.,.]_1, o_{2,b}) to w * [u,v]_{1,2}.
        let alg = SuperCommAlg::new(3, 0);
        let d1 = Derivation::even_field(alg, 0, Element::basis(alg.var(0)));
        let d2 = Derivation::even_field(alg, 1, Element::basis(alg.var(1)));
        let d3 = Derivation::even_field(alg, 2, Element::basis(alg.var(2)));
        let b = Scalar::ratio(2, 5);
        let cross12 = cross_bracket(&alg, &d1, &d2);
        let circ3 = shifted_circ(&alg, &d3, &b);
        let inner1 = inner_bracket(&alg, &d1);
        let circ2 = shifted_circ(&alg, &d2, &b);
        let monos = alg.monomials(0, 1, false);
        for u in &monos {
            for v in &monos {
                for w in &monos {
                    let r1 = gd_compat_residual(&cross12, &circ3, u, v, w);
                    let expect1 = alg
                        .mul(&Element::basis(w.clone()), &cross12.apply(u, v))
                        .scale(&b);
                    assert_eq!(r1, expect1);
                    let r2 = gd_compat_residual(&inner1, &circ2, u, v, w);
                    let expect2 = alg.mul(&Element::basis(w.clone()), &cross12.apply(u, v));
                    assert_eq!(r2, expect2);
                }
            }
        }
    }
}
