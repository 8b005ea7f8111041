//! Super-commutative base algebras: Laurent polynomials in even variables
//! tensored with a Grassmann algebra in odd variables, plus derivations and
//! Poisson brackets on them.

use crate::basis::{BasisId, Parity};
use crate::checks::LinOp;
use crate::element::Element;
use crate::rule::BilinearRule;
use crate::scalar::Scalar;
use std::fmt;
use std::sync::Arc;

/// Monomial `t1^e1 ... tp^ep * th_{j1} ... th_{jk}` with integer (Laurent)
/// exponents and a set of odd generators encoded as a bitmask.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SuperMono {
    pub exps: Vec<i64>,
    pub odd: u32,
}

impl SuperMono {
    pub fn one(evens: usize) -> Self {
        SuperMono { exps: vec![0; evens], odd: 0 }
    }

    pub fn degree(&self) -> i64 {
        self.exps.iter().sum()
    }
}

impl fmt::Display for SuperMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (i, e) in self.exps.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("t{}", i + 1)),
                _ => parts.push(format!("t{}^{}", i + 1, e)),
            }
        }
        for j in 0..32 {
            if self.odd & (1 << j) != 0 {
                parts.push(format!("th{}", j + 1));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

impl BasisId for SuperMono {
    fn parity(&self) -> Parity {
        if self.odd.count_ones() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Shape of a super-commutative algebra: `evens` Laurent variables and
/// `odds` Grassmann variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuperCommAlg {
    pub evens: usize,
    pub odds: usize,
}

impl SuperCommAlg {
    pub fn new(evens: usize, odds: usize) -> Self {
        assert!(odds <= 32, "at most 32 odd variables");
        SuperCommAlg { evens, odds }
    }

    pub fn one(&self) -> SuperMono {
        SuperMono::one(self.evens)
    }

    /// The even variable `t_{i+1}` as a monomial.
    pub fn var(&self, i: usize) -> SuperMono {
        assert!(i < self.evens);
        let mut exps = vec![0; self.evens];
        exps[i] = 1;
        SuperMono { exps, odd: 0 }
    }

    /// The odd variable `th_{j+1}` as a monomial.
    pub fn odd_var(&self, j: usize) -> SuperMono {
        assert!(j < self.odds);
        SuperMono { exps: vec![0; self.evens], odd: 1 << j }
    }

    /// Monomial product with the Grassmann reordering sign; `None` when a
    /// repeated odd variable kills the product.
    pub fn mul_mono(&self, a: &SuperMono, b: &SuperMono) -> Option<(Scalar, SuperMono)> {
        if a.odd & b.odd != 0 {
            return None;
        }
        let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
        // Sign from interleaving the two sorted generator lists: each
        // generator of `b` passes the generators of `a` above it.
        let mut inversions = 0u32;
        for j in 0..self.odds {
            if b.odd & (1 << j) != 0 {
                inversions += (a.odd >> (j + 1)).count_ones();
            }
        }
        let sign = if inversions % 2 == 0 { Scalar::one() } else { -Scalar::one() };
        Some((sign, SuperMono { exps, odd: a.odd | b.odd }))
    }

    /// The algebra product as a bilinear rule.
    pub fn product(&self) -> BilinearRule<SuperMono> {
        let alg = *self;
        BilinearRule::new(
            "super-product",
            Arc::new(move |a: &SuperMono, b: &SuperMono| match alg.mul_mono(a, b) {
                Some((sign, mono)) => Element::singleton(mono, sign),
                None => Element::zero(),
            }),
        )
    }

    pub fn mul(&self, a: &Element<SuperMono>, b: &Element<SuperMono>) -> Element<SuperMono> {
        let mut out = Element::zero();
        for (ma, ca) in a.iter() {
            for (mb, cb) in b.iter() {
                if let Some((sign, mono)) = self.mul_mono(ma, mb) {
                    out.add_assign_scaled(&Element::singleton(mono, sign), &(ca * cb));
                }
            }
        }
        out
    }

    /// All monomials with exponents in `[lo, hi]`, including every odd subset
    /// when `with_odds` is set. Deterministic order.
    pub fn monomials(&self, lo: i64, hi: i64, with_odds: bool) -> Vec<SuperMono> {
        assert!(lo <= hi);
        let odd_masks: Vec<u32> =
            if with_odds { (0..(1u32 << self.odds)).collect() } else { vec![0] };
        let mut out = Vec::new();
        if self.evens == 0 {
            for &odd in &odd_masks {
                out.push(SuperMono { exps: Vec::new(), odd });
            }
            out.sort();
            return out;
        }
        let mut exps = vec![lo; self.evens];
        loop {
            for &odd in &odd_masks {
                out.push(SuperMono { exps: exps.clone(), odd });
            }
            let mut k = 0;
            loop {
                if k == self.evens {
                    out.sort();
                    return out;
                }
                exps[k] += 1;
                if exps[k] <= hi {
                    break;
                }
                exps[k] = lo;
                k += 1;
            }
        }
    }
}

/// Derivation `sum_i f_i d/dt_i + sum_j g_j d/dth_j` with element coefficients.
#[derive(Clone)]
pub struct Derivation {
    pub name: String,
    pub alg: SuperCommAlg,
    /// One coefficient per variable: even variables first, then odd ones.
    pub coeffs: Vec<Element<SuperMono>>,
    pub parity: Parity,
}

impl Derivation {
    pub fn new(
        name: impl Into<String>,
        alg: SuperCommAlg,
        coeffs: Vec<Element<SuperMono>>,
        parity: Parity,
    ) -> Self {
        assert_eq!(coeffs.len(), alg.evens + alg.odds);
        Derivation { name: name.into(), alg, coeffs, parity }
    }

    pub fn zero(alg: SuperCommAlg) -> Self {
        let coeffs = vec![Element::zero(); alg.evens + alg.odds];
        Derivation::new("0", alg, coeffs, Parity::Even)
    }

    /// Euler derivation `sum_i t_i d/dt_i`.
    pub fn euler(alg: SuperCommAlg) -> Self {
        let mut coeffs = vec![Element::zero(); alg.evens + alg.odds];
        for (i, c) in coeffs.iter_mut().enumerate().take(alg.evens) {
            *c = Element::basis(alg.var(i));
        }
        Derivation::new("euler", alg, coeffs, Parity::Even)
    }

    /// `f * d/dt_i` for an even variable.
    pub fn even_field(alg: SuperCommAlg, i: usize, f: Element<SuperMono>) -> Self {
        let mut coeffs = vec![Element::zero(); alg.evens + alg.odds];
        let parity = f.parity().expect("homogeneous coefficient");
        let name = format!("({f})*d/dt{}", i + 1);
        coeffs[i] = f;
        Derivation::new(name, alg, coeffs, parity)
    }

    /// `g * d/dth_j` for an odd variable.
    pub fn odd_field(alg: SuperCommAlg, j: usize, g: Element<SuperMono>) -> Self {
        let mut coeffs = vec![Element::zero(); alg.evens + alg.odds];
        let parity = g.parity().expect("homogeneous coefficient").flip();
        let name = format!("({g})*d/dth{}", j + 1);
        coeffs[alg.evens + j] = g;
        Derivation::new(name, alg, coeffs, parity)
    }

    /// Bare coordinate derivative; odd for odd variables.
    pub fn coordinate(alg: SuperCommAlg, var: usize) -> Self {
        let mut coeffs = vec![Element::zero(); alg.evens + alg.odds];
        coeffs[var] = Element::basis(alg.one());
        let parity = if var < alg.evens { Parity::Even } else { Parity::Odd };
        let name = if var < alg.evens {
            format!("d/dt{}", var + 1)
        } else {
            format!("d/dth{}", var + 1 - alg.evens)
        };
        Derivation::new(name, alg, coeffs, parity)
    }

    /// Coordinate derivative of a monomial (no coefficient applied).
    pub fn partial(alg: &SuperCommAlg, var: usize, m: &SuperMono) -> Element<SuperMono> {
        if var < alg.evens {
            let e = m.exps[var];
            if e == 0 {
                return Element::zero();
            }
            let mut exps = m.exps.clone();
            exps[var] -= 1;
            Element::singleton(SuperMono { exps, odd: m.odd }, Scalar::from(e))
        } else {
            let j = var - alg.evens;
            if m.odd & (1 << j) == 0 {
                return Element::zero();
            }
            // Left derivative: sign counts the odd generators before th_j.
            let before = (m.odd & ((1 << j) - 1)).count_ones();
            let sign = if before % 2 == 0 { Scalar::one() } else { -Scalar::one() };
            Element::singleton(SuperMono { exps: m.exps.clone(), odd: m.odd & !(1 << j) }, sign)
        }
    }

    pub fn apply_mono(&self, m: &SuperMono) -> Element<SuperMono> {
        let mut out = Element::zero();
        for (var, coeff) in self.coeffs.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let d = Self::partial(&self.alg, var, m);
            if !d.is_zero() {
                out = &out + &self.alg.mul(coeff, &d);
            }
        }
        out
    }

    pub fn apply(&self, e: &Element<SuperMono>) -> Element<SuperMono> {
        let mut out = Element::zero();
        for (m, c) in e.iter() {
            out.add_assign_scaled(&self.apply_mono(m), c);
        }
        out
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    /// As a linear operator for the derivation checker.
    pub fn as_linop(&self) -> LinOp<SuperMono> {
        let d = self.clone();
        LinOp::new(self.name.clone(), self.parity, Arc::new(move |m: &SuperMono| d.apply_mono(m)))
    }

    /// Super-commutator `[d1, d2]` evaluated on one monomial.
    pub fn commutator_on(&self, other: &Derivation, m: &SuperMono) -> Element<SuperMono> {
        let sign = self.parity.koszul(other.parity);
        let fwd = self.apply(&other.apply_mono(m));
        let bwd = other.apply(&self.apply_mono(m));
        &fwd - &bwd.scale(&sign)
    }

    /// First generator on which the super-commutator of the two derivations
    /// is nonzero. A derivation is determined by its values on the
    /// generators (inverse even variables included), so `None` means the
    /// derivations commute everywhere.
    pub fn noncommuting_generator(
        &self,
        other: &Derivation,
    ) -> Option<(SuperMono, Element<SuperMono>)> {
        let alg = self.alg;
        let mut gens: Vec<SuperMono> = (0..alg.evens).map(|i| alg.var(i)).collect();
        for i in 0..alg.evens {
            let mut exps = vec![0; alg.evens];
            exps[i] = -1;
            gens.push(SuperMono { exps, odd: 0 });
        }
        gens.extend((0..alg.odds).map(|j| alg.odd_var(j)));
        for g in gens {
            let r = self.commutator_on(other, &g);
            if !r.is_zero() {
                return Some((g, r));
            }
        }
        None
    }
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Derivation({})", self.name)
    }
}

/// A Lie bracket on a super-commutative algebra compatible with the product
/// through the Leibniz law (validated by the checkers, not by construction).
#[derive(Clone)]
pub struct PoissonStructure {
    pub alg: SuperCommAlg,
    pub bracket: BilinearRule<SuperMono>,
}

impl PoissonStructure {
    /// Canonical bracket `{f, g} = f_x g_y - f_y g_x` in the first two even
    /// variables of a commutative algebra.
    pub fn canonical(alg: SuperCommAlg) -> Result<Self, String> {
        if alg.evens < 2 {
            return Err("canonical bracket needs two even variables".into());
        }
        if alg.odds != 0 {
            return Err("canonical bracket is defined on a commutative algebra".into());
        }
        let bracket = BilinearRule::new(
            "poisson",
            Arc::new(move |a: &SuperMono, b: &SuperMono| {
                let fx_gy = alg.mul(
                    &Derivation::partial(&alg, 0, a),
                    &Derivation::partial(&alg, 1, b),
                );
                let fy_gx = alg.mul(
                    &Derivation::partial(&alg, 1, a),
                    &Derivation::partial(&alg, 0, b),
                );
                &fx_gy - &fy_gx
            }),
        );
        Ok(PoissonStructure { alg, bracket })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{
        check_derivation, check_lie_super, check_poisson_leibniz, check_supercomm_assoc,
    };

    #[test]
    fn grassmann_signs() {
        let alg = SuperCommAlg::new(0, 2);
        let th1 = alg.odd_var(0);
        let th2 = alg.odd_var(1);
        let (s12, m12) = alg.mul_mono(&th1, &th2).unwrap();
        assert_eq!(s12, Scalar::one());
        assert_eq!(m12.odd, 0b11);
        let (s21, _) = alg.mul_mono(&th2, &th1).unwrap();
        assert_eq!(s21, -Scalar::one());
        assert!(alg.mul_mono(&th1, &th1).is_none());
    }

    #[test]
    fn product_is_supercommutative_associative() {
        let alg = SuperCommAlg::new(1, 2);
        let sample = alg.monomials(-1, 1, true);
        let report = check_supercomm_assoc(&alg.product(), &sample, "box(-1,1) with odds");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn partial_derivatives() {
        let alg = SuperCommAlg::new(1, 2);
        // d/dt of t^-2 = -2 t^-3
        let m = SuperMono { exps: vec![-2], odd: 0 };
        let d = Derivation::partial(&alg, 0, &m);
        assert_eq!(
            d,
            Element::singleton(SuperMono { exps: vec![-3], odd: 0 }, Scalar::from(-2))
        );
        // d/dth2 of th1*th2 = -th1 (one odd generator to pass).
        let m = SuperMono { exps: vec![0], odd: 0b11 };
        let d = Derivation::partial(&alg, 2, &m);
        assert_eq!(
            d,
            Element::singleton(SuperMono { exps: vec![0], odd: 0b01 }, -Scalar::one())
        );
    }

    #[test]
    fn derivations_satisfy_leibniz() {
        let alg = SuperCommAlg::new(1, 1);
        let sample = alg.monomials(-2, 2, true);
        let mult = alg.product();
        for d in [
            Derivation::euler(alg),
            Derivation::coordinate(alg, 0),
            Derivation::coordinate(alg, 1),
            Derivation::odd_field(alg, 0, Element::basis(alg.var(0))),
        ] {
            let report = check_derivation(&d.as_linop(), &mult, &sample, "box(-2,2)");
            assert!(report.passed(), "derivation {}: {}", d.name, report.summary());
        }
    }

    #[test]
    fn euler_commutes_with_scalings() {
        let alg = SuperCommAlg::new(2, 0);
        let e = Derivation::euler(alg);
        let d1 = Derivation::even_field(alg, 0, Element::basis(alg.var(0)));
        assert!(e.noncommuting_generator(&d1).is_none());
        // [t1 d/dt1, d/dt1] = -d/dt1 is nonzero.
        let d2 = Derivation::coordinate(alg, 0);
        assert!(d1.noncommuting_generator(&d2).is_some());
    }

    #[test]
    fn canonical_poisson_laws() {
        let alg = SuperCommAlg::new(2, 0);
        let p = PoissonStructure::canonical(alg).unwrap();
        let sample = alg.monomials(0, 2, false);
        let lie = check_lie_super(&p.bracket, &sample, "box(0,2)");
        assert!(lie.passed(), "{}", lie.summary());
        let leib = check_poisson_leibniz(&p.bracket, &alg.product(), &sample, "box(0,2)");
        assert!(leib.passed(), "{}", leib.summary());
    }
}
