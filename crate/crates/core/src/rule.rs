//! Rule-based bilinear products and Gel'fand-Dorfman structures.
//!
//! A [`BilinearRule`] is a total, pure kernel on basis index pairs together
//! with its bilinear extension to sparse elements. Out-of-range results are
//! simply absent from the kernel output (treated as zero).

use crate::basis::{BasisId, BasisSpec};
use crate::element::Element;
use crate::scalar::Scalar;
use std::fmt;
use std::sync::Arc;

pub type Kernel<I> = Arc<dyn Fn(&I, &I) -> Element<I> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
}

/// A bilinear product on a graded basis, given by its kernel on index pairs.
#[derive(Clone)]
pub struct BilinearRule<I: BasisId> {
    pub name: String,
    kernel: Kernel<I>,
    /// Basis family the rule is defined over, when it is one of the graded
    /// lattice families. Structures combining rules check these for agreement.
    pub spec: Option<BasisSpec>,
}

impl<I: BasisId> BilinearRule<I> {
    pub fn new(name: impl Into<String>, kernel: Kernel<I>) -> Self {
        BilinearRule { name: name.into(), kernel, spec: None }
    }

    pub fn with_spec(mut self, spec: BasisSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn zero(name: impl Into<String>) -> Self {
        BilinearRule::new(name, Arc::new(|_: &I, _: &I| Element::zero()))
    }

    /// Kernel evaluation on a basis pair.
    pub fn apply(&self, a: &I, b: &I) -> Element<I> {
        (self.kernel)(a, b)
    }

    /// Bilinear extension to sparse elements.
    pub fn evaluate(&self, a: &Element<I>, b: &Element<I>) -> Element<I> {
        let mut out = Element::zero();
        for (ia, ca) in a.iter() {
            for (ib, cb) in b.iter() {
                out.add_assign_scaled(&self.apply(ia, ib), &(ca * cb));
            }
        }
        out
    }

    /// Extension with an element on the left and a basis index on the right.
    pub fn evaluate_ei(&self, a: &Element<I>, b: &I) -> Element<I> {
        let mut out = Element::zero();
        for (ia, ca) in a.iter() {
            out.add_assign_scaled(&self.apply(ia, b), ca);
        }
        out
    }

    /// Extension with a basis index on the left and an element on the right.
    pub fn evaluate_ie(&self, a: &I, b: &Element<I>) -> Element<I> {
        let mut out = Element::zero();
        for (ib, cb) in b.iter() {
            out.add_assign_scaled(&self.apply(a, ib), cb);
        }
        out
    }

    /// Pointwise sum of two rules.
    pub fn sum(name: impl Into<String>, r1: &BilinearRule<I>, r2: &BilinearRule<I>) -> Self
    where
        I: 'static,
    {
        let (a, b) = (r1.clone(), r2.clone());
        BilinearRule {
            name: name.into(),
            kernel: Arc::new(move |u: &I, v: &I| &a.apply(u, v) + &b.apply(u, v)),
            spec: r1.spec.clone().or_else(|| r2.spec.clone()),
        }
    }

    /// Pointwise scalar multiple of a rule.
    pub fn scaled(name: impl Into<String>, r: &BilinearRule<I>, c: Scalar) -> Self
    where
        I: 'static,
    {
        let inner = r.clone();
        BilinearRule {
            name: name.into(),
            kernel: Arc::new(move |u: &I, v: &I| inner.apply(u, v).scale(&c)),
            spec: r.spec.clone(),
        }
    }
}

impl<I: BasisId> fmt::Debug for BilinearRule<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BilinearRule({})", self.name)
    }
}

/// Super-commutator of a product: `u . v - (-1)^{|u||v|} v . u`.
pub fn commutator_rule<I: BasisId + 'static>(circ: &BilinearRule<I>) -> BilinearRule<I> {
    let inner = circ.clone();
    BilinearRule {
        name: format!("[{}]", circ.name),
        kernel: Arc::new(move |u: &I, v: &I| {
            let forward = inner.apply(u, v);
            let backward = inner.apply(v, u);
            let sign = u.parity().koszul(v.parity());
            &forward - &backward.scale(&sign)
        }),
        spec: circ.spec.clone(),
    }
}

/// A Lie bracket and a Novikov product sharing one basis.
#[derive(Clone, Debug)]
pub struct GdStructure<I: BasisId> {
    pub bracket: BilinearRule<I>,
    pub circ: BilinearRule<I>,
}

impl<I: BasisId> GdStructure<I> {
    pub fn new(bracket: BilinearRule<I>, circ: BilinearRule<I>) -> Result<Self, RuleError> {
        if let (Some(a), Some(b)) = (&bracket.spec, &circ.spec) {
            if a != b {
                return Err(RuleError::BasisMismatch(format!(
                    "bracket over m={} levels={} but circ over m={} levels={}",
                    a.m, a.levels, b.m, b.levels
                )));
            }
        }
        Ok(GdStructure { bracket, circ })
    }

    /// Structure whose bracket is the super-commutator of `circ`.
    pub fn from_commutator(circ: BilinearRule<I>) -> Self
    where
        I: 'static,
    {
        GdStructure { bracket: commutator_rule(&circ), circ }
    }
}

/// Pointwise equality of two rules on the given index pairs.
pub fn rules_agree_on<I: BasisId>(
    r1: &BilinearRule<I>,
    r2: &BilinearRule<I>,
    indices: &[I],
) -> bool {
    indices
        .iter()
        .all(|a| indices.iter().all(|b| r1.apply(a, b) == r2.apply(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisIndex, BasisSpec};

    fn mult_rule(spec: &BasisSpec) -> BilinearRule<BasisIndex> {
        let s = spec.clone();
        BilinearRule::new(
            "mult",
            Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
                Element::basis(s.index(a.deg + b.deg, a.level + b.level))
            }),
        )
        .with_spec(spec.clone())
    }

    #[test]
    fn evaluate_extends_bilinearly() {
        let spec = BasisSpec::new(1, false);
        let rule = mult_rule(&spec);
        let a = Element::from_terms([
            (spec.index(1, 0), Scalar::from(2)),
            (spec.index(2, 0), Scalar::one()),
        ]);
        let b = Element::from_terms([(spec.index(3, 0), Scalar::from(-1))]);
        let got = rule.evaluate(&a, &b);
        let want = Element::from_terms([
            (spec.index(4, 0), Scalar::from(-2)),
            (spec.index(5, 0), Scalar::from(-1)),
        ]);
        assert_eq!(got, want);
        assert!(rule.evaluate(&Element::zero(), &b).is_zero());
    }

    #[test]
    fn commutator_of_commutative_rule_vanishes() {
        let spec = BasisSpec::new(1, false);
        let comm = commutator_rule(&mult_rule(&spec));
        for a in spec.window(2, 0) {
            for b in spec.window(2, 0) {
                assert!(comm.apply(&a, &b).is_zero());
            }
        }
    }

    #[test]
    fn structure_rejects_mismatched_specs() {
        let r1 = mult_rule(&BasisSpec::new(1, false));
        let r2 = mult_rule(&BasisSpec::new(2, false));
        assert!(GdStructure::new(r1, r2).is_err());
    }
}
