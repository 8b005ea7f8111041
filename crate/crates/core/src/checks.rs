//! Exact residual checkers for the graded algebra laws.
//!
//! Every law is checked by evaluating its defining identity on sampled basis
//! triples (or pairs) and recording nonzero residuals. Residuals are exact
//! elements; a law passes iff every sampled residual is the zero element.

use crate::basis::{BasisId, Parity};
use crate::element::Element;
use crate::rule::BilinearRule;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::sync::Arc;

/// Cap on stored failures; the total count is always exact.
pub const MAX_STORED_FAILURES: usize = 32;

/// One failed sample: the inputs and the nonzero residual element.
#[derive(Clone, Debug)]
pub struct CheckFailure<I: BasisId> {
    pub inputs: Vec<I>,
    pub residual: Element<I>,
}

/// Outcome of checking one law over one sample set.
#[derive(Clone, Debug)]
pub struct Report<F> {
    pub law: String,
    /// Description of the sample the check ran on, for reproducibility.
    pub sample: String,
    pub samples: usize,
    pub failure_count: usize,
    pub failures: Vec<F>,
}

pub type CheckReport<I> = Report<CheckFailure<I>>;

impl<F> Report<F> {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!("{}: PASS ({} samples, {})", self.law, self.samples, self.sample)
        } else {
            format!(
                "{}: FAIL ({} of {} samples, {})",
                self.law, self.failure_count, self.samples, self.sample
            )
        }
    }

    pub(crate) fn collect(law: &str, sample: &str, samples: usize, mut failures: Vec<F>) -> Self {
        let failure_count = failures.len();
        failures.truncate(MAX_STORED_FAILURES);
        Report {
            law: law.to_string(),
            sample: sample.to_string(),
            samples,
            failure_count,
            failures,
        }
    }
}

/// Linear operator on elements, with a declared parity.
#[derive(Clone)]
pub struct LinOp<I: BasisId> {
    pub name: String,
    pub parity: Parity,
    action: Arc<dyn Fn(&I) -> Element<I> + Send + Sync>,
}

impl<I: BasisId> LinOp<I> {
    pub fn new(
        name: impl Into<String>,
        parity: Parity,
        action: Arc<dyn Fn(&I) -> Element<I> + Send + Sync>,
    ) -> Self {
        LinOp { name: name.into(), parity, action }
    }

    pub fn apply(&self, i: &I) -> Element<I> {
        (self.action)(i)
    }

    pub fn apply_elem(&self, e: &Element<I>) -> Element<I> {
        let mut out = Element::zero();
        for (i, c) in e.iter() {
            out.add_assign_scaled(&self.apply(i), c);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Residuals on basis indices.
// ---------------------------------------------------------------------------

/// `[u,v] + (-1)^{|u||v|}[v,u]`.
pub fn lie_skew_residual<I: BasisId>(bracket: &BilinearRule<I>, u: &I, v: &I) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    &bracket.apply(u, v) + &bracket.apply(v, u).scale(&sign)
}

/// `[w,[v,u]] - [[w,v],u] + (-1)^{|u||v|}[[w,u],v]`.
pub fn lie_jacobi_residual<I: BasisId>(
    bracket: &BilinearRule<I>,
    u: &I,
    v: &I,
    w: &I,
) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    let wvu = bracket.evaluate_ie(w, &bracket.apply(v, u));
    let wv_u = bracket.evaluate_ei(&bracket.apply(w, v), u);
    let wu_v = bracket.evaluate_ei(&bracket.apply(w, u), v);
    &(&wvu - &wv_u) + &wu_v.scale(&sign)
}

/// `(u o v) o w - (-1)^{|v||w|}(u o w) o v`.
pub fn novikov_right_sym_residual<I: BasisId>(
    circ: &BilinearRule<I>,
    u: &I,
    v: &I,
    w: &I,
) -> Element<I> {
    let sign = v.parity().koszul(w.parity());
    let uvw = circ.evaluate_ei(&circ.apply(u, v), w);
    let uwv = circ.evaluate_ei(&circ.apply(u, w), v);
    &uvw - &uwv.scale(&sign)
}

fn associator<I: BasisId>(circ: &BilinearRule<I>, u: &I, v: &I, w: &I) -> Element<I> {
    let left = circ.evaluate_ei(&circ.apply(u, v), w);
    let right = circ.evaluate_ie(u, &circ.apply(v, w));
    &left - &right
}

/// `(u,v,w) - (-1)^{|u||v|}(v,u,w)` with `(u,v,w)` the associator.
pub fn novikov_assoc_sym_residual<I: BasisId>(
    circ: &BilinearRule<I>,
    u: &I,
    v: &I,
    w: &I,
) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    &associator(circ, u, v, w) - &associator(circ, v, u, w).scale(&sign)
}

/// Five-term super compatibility residual
/// `[w o u,v] - (-1)^{|u||v|}[w o v,u] + [w,u] o v - (-1)^{|u||v|}[w,v] o u - w o [u,v]`.
pub fn gd_compat_residual<I: BasisId>(
    bracket: &BilinearRule<I>,
    circ: &BilinearRule<I>,
    u: &I,
    v: &I,
    w: &I,
) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    let t1 = bracket.evaluate_ei(&circ.apply(w, u), v);
    let t2 = bracket.evaluate_ei(&circ.apply(w, v), u);
    let t3 = circ.evaluate_ei(&bracket.apply(w, u), v);
    let t4 = circ.evaluate_ei(&bracket.apply(w, v), u);
    let t5 = circ.evaluate_ie(w, &bracket.apply(u, v));
    let mut out = t1;
    out.add_assign_scaled(&t2, &-&sign);
    out.add_assign_scaled(&t3, &Scalar::one());
    out.add_assign_scaled(&t4, &-&sign);
    out.add_assign_scaled(&t5, &-Scalar::one());
    out
}

/// `u.v - (-1)^{|u||v|} v.u`.
pub fn supercomm_residual<I: BasisId>(mult: &BilinearRule<I>, u: &I, v: &I) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    &mult.apply(u, v) - &mult.apply(v, u).scale(&sign)
}

/// `(u.v).w - u.(v.w)`.
pub fn assoc_residual<I: BasisId>(mult: &BilinearRule<I>, u: &I, v: &I, w: &I) -> Element<I> {
    associator(mult, u, v, w)
}

/// Leibniz residual `[u, v.w] - [u,v].w - (-1)^{|u||v|} v.[u,w]`.
pub fn leibniz_residual<I: BasisId>(
    bracket: &BilinearRule<I>,
    mult: &BilinearRule<I>,
    u: &I,
    v: &I,
    w: &I,
) -> Element<I> {
    let sign = u.parity().koszul(v.parity());
    let lhs = bracket.evaluate_ie(u, &mult.apply(v, w));
    let r1 = mult.evaluate_ei(&bracket.apply(u, v), w);
    let r2 = mult.evaluate_ie(v, &bracket.apply(u, w)).scale(&sign);
    &(&lhs - &r1) - &r2
}

/// Super-Leibniz residual `d(u.v) - d(u).v - (-1)^{|d||u|} u.d(v)`.
pub fn derivation_residual<I: BasisId>(
    d: &LinOp<I>,
    mult: &BilinearRule<I>,
    u: &I,
    v: &I,
) -> Element<I> {
    let sign = d.parity.koszul(u.parity());
    let lhs = d.apply_elem(&mult.apply(u, v));
    let r1 = mult.evaluate(&d.apply(u), &Element::basis(v.clone()));
    let r2 = mult.evaluate_ie(u, &d.apply(v)).scale(&sign);
    &(&lhs - &r1) - &r2
}

// ---------------------------------------------------------------------------
// Residuals on homogeneous elements (explicit parities).
// ---------------------------------------------------------------------------

/// Homogeneous element with its declared parity.
pub type Homog<'a, I> = (&'a Element<I>, Parity);

/// Element-level version of [`gd_compat_residual`].
pub fn gd_compat_residual_elems<I: BasisId>(
    bracket: &BilinearRule<I>,
    circ: &BilinearRule<I>,
    (u, pu): Homog<'_, I>,
    (v, pv): Homog<'_, I>,
    (w, _): Homog<'_, I>,
) -> Element<I> {
    let sign = pu.koszul(pv);
    let t1 = bracket.evaluate(&circ.evaluate(w, u), v);
    let t2 = bracket.evaluate(&circ.evaluate(w, v), u);
    let t3 = circ.evaluate(&bracket.evaluate(w, u), v);
    let t4 = circ.evaluate(&bracket.evaluate(w, v), u);
    let t5 = circ.evaluate(w, &bracket.evaluate(u, v));
    let mut out = t1;
    out.add_assign_scaled(&t2, &-&sign);
    out.add_assign_scaled(&t3, &Scalar::one());
    out.add_assign_scaled(&t4, &-&sign);
    out.add_assign_scaled(&t5, &-Scalar::one());
    out
}

/// Element-level skew residual.
pub fn lie_skew_residual_elems<I: BasisId>(
    bracket: &BilinearRule<I>,
    (u, pu): Homog<'_, I>,
    (v, pv): Homog<'_, I>,
) -> Element<I> {
    let sign = pu.koszul(pv);
    &bracket.evaluate(u, v) + &bracket.evaluate(v, u).scale(&sign)
}

/// Element-level Jacobi residual.
pub fn lie_jacobi_residual_elems<I: BasisId>(
    bracket: &BilinearRule<I>,
    (u, pu): Homog<'_, I>,
    (v, pv): Homog<'_, I>,
    (w, _): Homog<'_, I>,
) -> Element<I> {
    let sign = pu.koszul(pv);
    let wvu = bracket.evaluate(w, &bracket.evaluate(v, u));
    let wv_u = bracket.evaluate(&bracket.evaluate(w, v), u);
    let wu_v = bracket.evaluate(&bracket.evaluate(w, u), v);
    &(&wvu - &wv_u) + &wu_v.scale(&sign)
}

/// Element-level Novikov residuals (right symmetry, associator symmetry).
pub fn novikov_residuals_elems<I: BasisId>(
    circ: &BilinearRule<I>,
    (u, pu): Homog<'_, I>,
    (v, pv): Homog<'_, I>,
    (w, pw): Homog<'_, I>,
) -> (Element<I>, Element<I>) {
    let assoc = |a: &Element<I>, b: &Element<I>, c: &Element<I>| {
        &circ.evaluate(&circ.evaluate(a, b), c) - &circ.evaluate(a, &circ.evaluate(b, c))
    };
    let right = {
        let sign = pv.koszul(pw);
        &circ.evaluate(&circ.evaluate(u, v), w) - &circ.evaluate(&circ.evaluate(u, w), v).scale(&sign)
    };
    let sym = {
        let sign = pu.koszul(pv);
        &assoc(u, v, w) - &assoc(v, u, w).scale(&sign)
    };
    (right, sym)
}

// ---------------------------------------------------------------------------
// Checkers over sampled index sets.
// ---------------------------------------------------------------------------

fn run_triples<I: BasisId, R>(residuals: R, indices: &[I]) -> (usize, Vec<CheckFailure<I>>)
where
    R: Fn(&I, &I, &I) -> Vec<Element<I>> + Sync,
{
    let n = indices.len();
    let total = n * n * n;
    let failures: Vec<CheckFailure<I>> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let (u, rest) = (&indices[flat / (n * n)], flat % (n * n));
            let (v, w) = (&indices[rest / n], &indices[rest % n]);
            let mut residual = Element::zero();
            for r in residuals(u, v, w) {
                if !r.is_zero() {
                    residual = r;
                    break;
                }
            }
            if residual.is_zero() {
                None
            } else {
                Some(CheckFailure { inputs: vec![u.clone(), v.clone(), w.clone()], residual })
            }
        })
        .collect();
    (total, failures)
}

fn run_pairs<I: BasisId, R>(residual: R, indices: &[I]) -> (usize, Vec<CheckFailure<I>>)
where
    R: Fn(&I, &I) -> Element<I> + Sync,
{
    let n = indices.len();
    let total = n * n;
    let failures: Vec<CheckFailure<I>> = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let (u, v) = (&indices[flat / n], &indices[flat % n]);
            let r = residual(u, v);
            if r.is_zero() {
                None
            } else {
                Some(CheckFailure { inputs: vec![u.clone(), v.clone()], residual: r })
            }
        })
        .collect();
    (total, failures)
}

/// Checks super skew-symmetry and the super Jacobi identity on all triples
/// from `indices`.
pub fn check_lie_super<I: BasisId>(
    bracket: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (skew_total, mut failures) =
        run_pairs(|u, v| lie_skew_residual(bracket, u, v), indices);
    let (jac_total, jac_failures) = run_triples(
        |u, v, w| vec![lie_jacobi_residual(bracket, u, v, w)],
        indices,
    );
    failures.extend(jac_failures);
    Report::collect("lie-super", sample, skew_total + jac_total, failures)
}

/// Checks the two Novikov superalgebra identities on all triples.
pub fn check_novikov_super<I: BasisId>(
    circ: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (total, failures) = run_triples(
        |u, v, w| {
            vec![
                novikov_right_sym_residual(circ, u, v, w),
                novikov_assoc_sym_residual(circ, u, v, w),
            ]
        },
        indices,
    );
    Report::collect("novikov-super", sample, total, failures)
}

/// Checks the bracket/product compatibility identity on all triples.
pub fn check_gd_compat<I: BasisId>(
    bracket: &BilinearRule<I>,
    circ: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (total, failures) = run_triples(
        |u, v, w| vec![gd_compat_residual(bracket, circ, u, v, w)],
        indices,
    );
    Report::collect("gd-compat", sample, total, failures)
}

/// Checks super-commutativity (pairs) and associativity (triples).
pub fn check_supercomm_assoc<I: BasisId>(
    mult: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (pair_total, mut failures) =
        run_pairs(|u, v| supercomm_residual(mult, u, v), indices);
    let (tri_total, tri_failures) =
        run_triples(|u, v, w| vec![assoc_residual(mult, u, v, w)], indices);
    failures.extend(tri_failures);
    Report::collect("supercomm-assoc", sample, pair_total + tri_total, failures)
}

/// Checks the super-Leibniz law of `d` against `mult` on all pairs.
pub fn check_derivation<I: BasisId>(
    d: &LinOp<I>,
    mult: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (total, failures) = run_pairs(|u, v| derivation_residual(d, mult, u, v), indices);
    Report::collect("derivation", sample, total, failures)
}

/// Checks the bracket-versus-product Leibniz compatibility on all triples.
pub fn check_poisson_leibniz<I: BasisId>(
    bracket: &BilinearRule<I>,
    mult: &BilinearRule<I>,
    indices: &[I],
    sample: &str,
) -> CheckReport<I> {
    let (total, failures) = run_triples(
        |u, v, w| vec![leibniz_residual(bracket, mult, u, v, w)],
        indices,
    );
    Report::collect("poisson-leibniz", sample, total, failures)
}

/// Jacobi-only check on explicit triples (used by the classification filter).
pub fn check_jacobi_on_triples<I: BasisId>(
    bracket: &BilinearRule<I>,
    triples: &[(I, I, I)],
    sample: &str,
) -> CheckReport<I> {
    let failures: Vec<CheckFailure<I>> = triples
        .par_iter()
        .filter_map(|(u, v, w)| {
            let r = lie_jacobi_residual(bracket, u, v, w);
            if r.is_zero() {
                None
            } else {
                Some(CheckFailure { inputs: vec![u.clone(), v.clone(), w.clone()], residual: r })
            }
        })
        .collect();
    Report::collect("lie-jacobi", sample, triples.len(), failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisIndex, BasisSpec};
    use std::sync::Arc;

    /// Bracket `(b.deg - a.deg) x[a+b]` on the unit lattice.
    fn witt_like(spec: &BasisSpec) -> BilinearRule<BasisIndex> {
        let s = spec.clone();
        BilinearRule::new(
            "witt-like",
            Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
                Element::singleton(s.index(a.deg + b.deg, 0), Scalar::from(b.deg - a.deg))
            }),
        )
        .with_spec(spec.clone())
    }

    #[test]
    fn witt_like_bracket_is_lie() {
        let spec = BasisSpec::new(1, false);
        let report = check_lie_super(&witt_like(&spec), &spec.window(3, 0), "window(3,0)");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn zero_bracket_passes_everything() {
        let spec = BasisSpec::new(1, true);
        let zero = BilinearRule::zero("zero");
        let idx = spec.window(2, 1);
        assert!(check_lie_super(&zero, &idx, "w").passed());
        assert!(check_gd_compat(&zero, &witt_like(&BasisSpec::new(1, false)), &idx, "w").passed());
    }

    #[test]
    fn skew_violation_is_reported_with_inputs() {
        let spec = BasisSpec::new(1, false);
        let s = spec.clone();
        let bad = BilinearRule::new(
            "bad",
            Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
                Element::basis(s.index(a.deg + b.deg, 0))
            }),
        );
        let report = check_lie_super(&bad, &spec.window(1, 0), "window(1,0)");
        assert!(!report.passed());
        let f = &report.failures[0];
        assert_eq!(f.inputs.len(), 2);
        assert!(!f.residual.is_zero());
    }
}
