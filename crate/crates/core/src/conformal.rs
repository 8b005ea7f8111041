//! Formal-distribution layer: quadratic conformal structures built from a
//! bracket/product pair, and exact residue-calculus checkers for the
//! translation, skew-symmetry and Jacobi-type axioms.
//!
//! All series here are finitely supported Laurent polynomials whose
//! coefficients are polynomials in the translation operator applied to
//! sparse elements, so residues and products are exact finite sums.

use crate::basis::BasisId;
use crate::element::Element;
use crate::rule::{BilinearRule, GdStructure};
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::checks::Report;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConformalError {
    #[error("structure is not quadratic: products up to order {0} are present")]
    NotQuadratic(usize),
}

/// Polynomial in the translation operator with element coefficients:
/// `sum_k del^k * coeff_k`.
#[derive(Clone, PartialEq, Eq)]
pub struct DPoly<I: BasisId> {
    coeffs: BTreeMap<u32, Element<I>>,
}

impl<I: BasisId> DPoly<I> {
    pub fn zero() -> Self {
        DPoly { coeffs: BTreeMap::new() }
    }

    pub fn from_element(e: Element<I>) -> Self {
        let mut coeffs = BTreeMap::new();
        if !e.is_zero() {
            coeffs.insert(0, e);
        }
        DPoly { coeffs }
    }

    pub fn term(power: u32, e: Element<I>) -> Self {
        let mut coeffs = BTreeMap::new();
        if !e.is_zero() {
            coeffs.insert(power, e);
        }
        DPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u32, &Element<I>)> {
        self.coeffs.iter()
    }

    /// Coefficient of `del^k` (zero element if absent).
    pub fn coeff(&self, k: u32) -> Element<I> {
        self.coeffs.get(&k).cloned().unwrap_or_else(Element::zero)
    }

    pub fn max_power(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn add(&self, other: &DPoly<I>) -> DPoly<I> {
        let mut coeffs = self.coeffs.clone();
        for (k, e) in &other.coeffs {
            let entry = coeffs.entry(*k).or_insert_with(Element::zero);
            *entry = &*entry + e;
        }
        coeffs.retain(|_, e| !e.is_zero());
        DPoly { coeffs }
    }

    pub fn scale(&self, c: &Scalar) -> DPoly<I> {
        if c.is_zero() {
            return DPoly::zero();
        }
        DPoly { coeffs: self.coeffs.iter().map(|(k, e)| (*k, e.scale(c))).collect() }
    }

    pub fn neg(&self) -> DPoly<I> {
        self.scale(&-Scalar::one())
    }

    pub fn sub(&self, other: &DPoly<I>) -> DPoly<I> {
        self.add(&other.neg())
    }

    /// Multiplication by `del^k`.
    pub fn shift(&self, k: u32) -> DPoly<I> {
        DPoly { coeffs: self.coeffs.iter().map(|(p, e)| (p + k, e.clone())).collect() }
    }
}

impl<I: BasisId> fmt::Display for DPoly<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, e)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "({e})")?,
                1 => write!(f, "del({e})")?,
                _ => write!(f, "del^{k}({e})")?,
            }
        }
        Ok(())
    }
}

impl<I: BasisId> fmt::Debug for DPoly<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Formal variable tag for univariate series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormalVar {
    Z,
    Z1,
    Z2,
    X,
}

impl fmt::Display for FormalVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormalVar::Z => write!(f, "z"),
            FormalVar::Z1 => write!(f, "z1"),
            FormalVar::Z2 => write!(f, "z2"),
            FormalVar::X => write!(f, "x"),
        }
    }
}

/// Finitely supported Laurent polynomial in one formal variable with
/// `DPoly` coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct ZSeries<I: BasisId> {
    pub var: FormalVar,
    coeffs: BTreeMap<i32, DPoly<I>>,
}

impl<I: BasisId> ZSeries<I> {
    pub fn zero(var: FormalVar) -> Self {
        ZSeries { var, coeffs: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i32, &DPoly<I>)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, e: i32) -> DPoly<I> {
        self.coeffs.get(&e).cloned().unwrap_or_else(DPoly::zero)
    }

    pub fn add_term(&mut self, e: i32, d: DPoly<I>) {
        if d.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(DPoly::zero);
        *entry = entry.add(&d);
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn add(&self, other: &ZSeries<I>) -> ZSeries<I> {
        debug_assert_eq!(self.var, other.var, "mixed formal variables");
        let mut out = self.clone();
        for (e, d) in &other.coeffs {
            out.add_term(*e, d.clone());
        }
        out
    }

    pub fn sub(&self, other: &ZSeries<I>) -> ZSeries<I> {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> ZSeries<I> {
        if c.is_zero() {
            return ZSeries::zero(self.var);
        }
        ZSeries {
            var: self.var,
            coeffs: self.coeffs.iter().map(|(e, d)| (*e, d.scale(c))).collect(),
        }
    }

    /// Derivative in the formal variable.
    pub fn dz(&self) -> ZSeries<I> {
        let mut out = ZSeries::zero(self.var);
        for (e, d) in &self.coeffs {
            if *e != 0 {
                out.add_term(e - 1, d.scale(&Scalar::from(*e as i64)));
            }
        }
        out
    }

    /// Applies the translation operator to every coefficient.
    pub fn del(&self) -> ZSeries<I> {
        ZSeries {
            var: self.var,
            coeffs: self.coeffs.iter().map(|(e, d)| (*e, d.shift(1))).collect(),
        }
    }

    /// `(del - d/dz)^m`, the right-argument extension operator.
    pub fn del_minus_dz_pow(&self, m: u32) -> ZSeries<I> {
        let mut out = self.clone();
        for _ in 0..m {
            out = out.del().sub(&out.dz());
        }
        out
    }

    /// `(d/dz)^m`, the left-argument extension operator.
    pub fn dz_pow(&self, m: u32) -> ZSeries<I> {
        let mut out = self.clone();
        for _ in 0..m {
            out = out.dz();
        }
        out
    }

    pub fn rename(&self, var: FormalVar) -> ZSeries<I> {
        ZSeries { var, coeffs: self.coeffs.clone() }
    }

    /// Projection onto strictly negative powers.
    pub fn proj_negative(&self) -> ZSeries<I> {
        ZSeries {
            var: self.var,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| **e < 0)
                .map(|(e, d)| (*e, d.clone()))
                .collect(),
        }
    }
}

impl<I: BasisId> fmt::Display for ZSeries<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, d)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{d}]*{}^{e}", self.var)?;
        }
        Ok(())
    }
}

impl<I: BasisId> fmt::Debug for ZSeries<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Finitely supported bivariate Laurent polynomial in `z1, z2`.
#[derive(Clone, PartialEq, Eq)]
pub struct ZzSeries<I: BasisId> {
    coeffs: BTreeMap<(i32, i32), DPoly<I>>,
}

impl<I: BasisId> ZzSeries<I> {
    pub fn zero() -> Self {
        ZzSeries { coeffs: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32), &DPoly<I>)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, e1: i32, e2: i32) -> DPoly<I> {
        self.coeffs.get(&(e1, e2)).cloned().unwrap_or_else(DPoly::zero)
    }

    pub fn add_term(&mut self, key: (i32, i32), d: DPoly<I>) {
        if d.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(key).or_insert_with(DPoly::zero);
        *entry = entry.add(&d);
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    pub fn add(&self, other: &ZzSeries<I>) -> ZzSeries<I> {
        let mut out = self.clone();
        for (k, d) in &other.coeffs {
            out.add_term(*k, d.clone());
        }
        out
    }

    pub fn sub(&self, other: &ZzSeries<I>) -> ZzSeries<I> {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> ZzSeries<I> {
        if c.is_zero() {
            return ZzSeries::zero();
        }
        ZzSeries { coeffs: self.coeffs.iter().map(|(k, d)| (*k, d.scale(c))).collect() }
    }
}

impl<I: BasisId> fmt::Display for ZzSeries<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, ((e1, e2), d)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{d}]*z1^{e1}*z2^{e2}")?;
        }
        Ok(())
    }
}

impl<I: BasisId> fmt::Debug for ZzSeries<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Conformal structure given by its family of n-th products on basis pairs.
#[derive(Clone)]
pub struct ConformalStructure<I: BasisId> {
    pub name: String,
    products: Arc<dyn Fn(&I, &I) -> Vec<DPoly<I>> + Send + Sync>,
    /// Products vanish from this order on (2 for quadratic structures).
    pub max_products: usize,
}

impl<I: BasisId> ConformalStructure<I> {
    pub fn new(
        name: impl Into<String>,
        max_products: usize,
        products: Arc<dyn Fn(&I, &I) -> Vec<DPoly<I>> + Send + Sync>,
    ) -> Self {
        ConformalStructure { name: name.into(), products, max_products }
    }

    /// The n-th products of a basis pair, as a vector indexed by n.
    pub fn products(&self, u: &I, v: &I) -> Vec<DPoly<I>> {
        (self.products)(u, v)
    }

    /// The series `sum_n (u_(n) v) z^{-n-1}`.
    pub fn base_series(&self, u: &I, v: &I, var: FormalVar) -> ZSeries<I> {
        let mut out = ZSeries::zero(var);
        for (n, d) in self.products(u, v).into_iter().enumerate() {
            out.add_term(-(n as i32) - 1, d);
        }
        out
    }

    pub fn is_quadratic(&self) -> bool {
        self.max_products <= 2
    }
}

impl<I: BasisId> fmt::Debug for ConformalStructure<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConformalStructure({})", self.name)
    }
}

/// Quadratic conformal structure of a bracket/product pair: the 0-th product
/// of `(u, v)` is `del(v o u) + [v, u]` and the 1-st is
/// `v o u + (-1)^{|u||v|} u o v`; higher products vanish.
pub fn from_gd<I: BasisId + 'static>(gd: &GdStructure<I>) -> ConformalStructure<I> {
    let bracket = gd.bracket.clone();
    let circ = gd.circ.clone();
    let name = format!("conformal({}, {})", bracket.name, circ.name);
    ConformalStructure::new(
        name,
        2,
        Arc::new(move |u: &I, v: &I| {
            let vu = circ.apply(v, u);
            let n0 = DPoly::term(1, vu.clone()).add(&DPoly::from_element(bracket.apply(v, u)));
            let sign = u.parity().koszul(v.parity());
            let n1 = DPoly::from_element(&vu + &circ.apply(u, v).scale(&sign));
            vec![n0, n1]
        }),
    )
}

/// Reads the bracket and product back out of a quadratic structure: `[p, q]`
/// is the constant part and `p o q` the linear-in-translation part of the
/// 0-th product of `(q, p)`.
pub fn extract_gd<I: BasisId + 'static>(y: &ConformalStructure<I>) -> GdStructure<I> {
    let y1 = y.clone();
    let y2 = y.clone();
    let bracket = BilinearRule::new(
        format!("bracket<{}>", y.name),
        Arc::new(move |p: &I, q: &I| {
            y1.products(q, p).first().map(|d| d.coeff(0)).unwrap_or_else(Element::zero)
        }),
    );
    let circ = BilinearRule::new(
        format!("circ<{}>", y.name),
        Arc::new(move |p: &I, q: &I| {
            y2.products(q, p).first().map(|d| d.coeff(1)).unwrap_or_else(Element::zero)
        }),
    );
    GdStructure { bracket, circ }
}

/// Full action on pairs of translation polynomials over the basis: the left
/// argument acts through differentiation in the formal variable, the right
/// one through the translation-extension operator.
pub fn yplus<I: BasisId>(y: &ConformalStructure<I>, zeta: &DPoly<I>, eta: &DPoly<I>) -> ZSeries<I> {
    let mut out = ZSeries::zero(FormalVar::Z);
    for (mu, cu) in zeta.iter() {
        for (mv, cv) in eta.iter() {
            for (bu, ku) in cu.iter() {
                for (bv, kv) in cv.iter() {
                    let base = y.base_series(bu, bv, FormalVar::Z);
                    let t = base.dz_pow(*mu).del_minus_dz_pow(*mv);
                    out = out.add(&t.scale(&(ku * kv)));
                }
            }
        }
    }
    out
}

/// Skew check failure: the residual series in `z`.
#[derive(Clone, Debug)]
pub struct SkewFailure<I: BasisId> {
    pub inputs: (I, I),
    pub residual: ZSeries<I>,
}

/// Bivariate check failure: the residual series in `z1, z2`.
#[derive(Clone, Debug)]
pub struct JacobiFailure<I: BasisId> {
    pub inputs: (I, I, I),
    pub residual: ZzSeries<I>,
}

pub type SkewReport<I> = Report<SkewFailure<I>>;
pub type JacobiReport<I> = Report<JacobiFailure<I>>;

/// Right-hand side of the skew-symmetry axiom:
/// `(-1)^{|u||v|} Res_x e^{x del} Y(v, -x)u / (z - x)`, with the quotient
/// expanded in nonnegative powers of `x`.
fn skew_rhs<I: BasisId>(y: &ConformalStructure<I>, u: &I, v: &I) -> ZSeries<I> {
    // Y(v, -x)u: substituting -x scales the x^e coefficient by (-1)^e.
    let mut s = ZSeries::zero(FormalVar::X);
    for (e, d) in y.base_series(v, u, FormalVar::X).iter() {
        let sign = if e.rem_euclid(2) == 0 { Scalar::one() } else { -Scalar::one() };
        s.add_term(*e, d.scale(&sign));
    }
    // e^{x del}, truncated at the powers that can still reach x^{-1}: a term
    // at exponent e contributes for p <= -1 - e.
    let mut t = ZSeries::zero(FormalVar::X);
    for (e, d) in s.iter() {
        let mut p: u32 = 0;
        let mut factorial = Scalar::one();
        while *e + (p as i32) <= -1 {
            t.add_term(e + p as i32, d.shift(p).scale(&factorial.recip()));
            p += 1;
            factorial *= Scalar::from(p);
        }
    }
    // Res_x of T(x)/(z - x) keeps the negative part of T with x renamed to z.
    let projected = t.proj_negative().rename(FormalVar::Z);
    projected.scale(&u.parity().koszul(v.parity()))
}

/// Checks the skew-symmetry axiom on all ordered pairs from `indices`.
pub fn check_skew<I: BasisId>(
    y: &ConformalStructure<I>,
    indices: &[I],
    sample: &str,
) -> SkewReport<I> {
    let n = indices.len();
    let failures: Vec<SkewFailure<I>> = (0..n * n)
        .into_par_iter()
        .filter_map(|flat| {
            let (u, v) = (&indices[flat / n], &indices[flat % n]);
            let lhs = y.base_series(u, v, FormalVar::Z);
            let residual = lhs.sub(&skew_rhs(y, u, v));
            if residual.is_zero() {
                None
            } else {
                Some(SkewFailure { inputs: (u.clone(), v.clone()), residual })
            }
        })
        .collect();
    Report::collect("conformal-skew", sample, n * n, failures)
}

/// `Yo(a, z_outer) [Yi(b, z_inner) w]` as a bivariate series; `outer_is_z1`
/// says which formal variable carries the outer action.
fn compose<I: BasisId>(
    yo: &ConformalStructure<I>,
    yi: &ConformalStructure<I>,
    a: &I,
    b: &I,
    w: &I,
    outer_is_z1: bool,
) -> ZzSeries<I> {
    let inner = yi.base_series(b, w, FormalVar::X);
    let mut out = ZzSeries::zero();
    for (e_in, d) in inner.iter() {
        for (m, c) in d.iter() {
            for (bc, kc) in c.iter() {
                let t = yo.base_series(a, bc, FormalVar::X).del_minus_dz_pow(*m);
                for (e_out, dp) in t.iter() {
                    let key = if outer_is_z1 { (*e_out, *e_in) } else { (*e_in, *e_out) };
                    out.add_term(key, dp.scale(kc));
                }
            }
        }
    }
    out
}

/// `Res_x Yo(Yi(u, z1 - x)v, x)w / (z2 - x)` with `(z1 - x)^{-n-1}` expanded
/// in nonnegative powers of `x`.
fn res_compose<I: BasisId>(
    yo: &ConformalStructure<I>,
    yi: &ConformalStructure<I>,
    u: &I,
    v: &I,
    w: &I,
) -> ZzSeries<I> {
    let mut out = ZzSeries::zero();
    for (n, dn) in yi.products(u, v).into_iter().enumerate() {
        for (m, c) in dn.iter() {
            for (bc, kc) in c.iter() {
                for (q, dq) in yo.products(bc, w).into_iter().enumerate() {
                    if dq.is_zero() {
                        continue;
                    }
                    // (d/dx)^m x^{-q-1} = (-1)^m (q+1)...(q+m) x^{-q-1-m}.
                    let mut rising = Scalar::one();
                    for t in 1..=*m {
                        rising *= Scalar::from(q as i64 + t as i64);
                    }
                    let sign = if m % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                    // x^k from the expansion of (z1 - x)^{-n-1}; the residue
                    // keeps k <= q + m.
                    for k in 0..=(q as u32 + m) {
                        let coeff = &(&Scalar::binomial(n as u64 + k as u64, k as u64) * &sign)
                            * &(&rising * kc);
                        let e1 = -(n as i32) - 1 - k as i32;
                        let e2 = k as i32 - q as i32 - 1 - *m as i32;
                        out.add_term((e1, e2), dq.scale(&coeff));
                    }
                }
            }
        }
    }
    out
}

/// Jacobi residual for one basis triple: the graded commutator of the two
/// actions minus the residue composition.
pub fn jacobi_residual<I: BasisId>(
    y: &ConformalStructure<I>,
    u: &I,
    v: &I,
    w: &I,
) -> ZzSeries<I> {
    let sign = u.parity().koszul(v.parity());
    let term1 = compose(y, y, u, v, w, true);
    let term2 = compose(y, y, v, u, w, false);
    let lhs = term1.sub(&term2.scale(&sign));
    lhs.sub(&res_compose(y, y, u, v, w))
}

/// Checks the Jacobi-type axiom on all triples from `indices`.
pub fn check_jacobi<I: BasisId>(
    y: &ConformalStructure<I>,
    indices: &[I],
    sample: &str,
) -> JacobiReport<I> {
    let n = indices.len();
    let failures: Vec<JacobiFailure<I>> = (0..n * n * n)
        .into_par_iter()
        .filter_map(|flat| {
            let (u, rest) = (&indices[flat / (n * n)], flat % (n * n));
            let (v, w) = (&indices[rest / n], &indices[rest % n]);
            let residual = jacobi_residual(y, u, v, w);
            if residual.is_zero() {
                None
            } else {
                Some(JacobiFailure { inputs: (u.clone(), v.clone(), w.clone()), residual })
            }
        })
        .collect();
    Report::collect("conformal-jacobi", sample, n * n * n, failures)
}

/// Splits a quadratic structure into homogeneous parts: the degree-1 part
/// keeps the constant term of the 0-th product, the degree-2 part the
/// translation terms plus the whole 1-st product.
pub fn degree_split<I: BasisId + 'static>(
    y: &ConformalStructure<I>,
) -> Result<(ConformalStructure<I>, ConformalStructure<I>), ConformalError> {
    if !y.is_quadratic() {
        return Err(ConformalError::NotQuadratic(y.max_products));
    }
    let ya = y.clone();
    let y1 = ConformalStructure::new(
        format!("{}#1", y.name),
        1,
        Arc::new(move |u: &I, v: &I| {
            let n0 = ya.products(u, v).into_iter().next().unwrap_or_else(DPoly::zero);
            vec![DPoly::from_element(n0.coeff(0))]
        }),
    );
    let yb = y.clone();
    let y2 = ConformalStructure::new(
        format!("{}#2", y.name),
        2,
        Arc::new(move |u: &I, v: &I| {
            let mut prods = yb.products(u, v).into_iter();
            let n0 = prods.next().unwrap_or_else(DPoly::zero);
            let n1 = prods.next().unwrap_or_else(DPoly::zero);
            let mut high = DPoly::zero();
            for (k, e) in n0.iter() {
                if *k >= 1 {
                    high = high.add(&DPoly::term(*k, e.clone()));
                }
            }
            vec![high, n1]
        }),
    );
    Ok((y1, y2))
}

/// Cross-term residual of the two homogeneous parts on one triple.
pub fn cross_term_residual<I: BasisId>(
    y1: &ConformalStructure<I>,
    y2: &ConformalStructure<I>,
    u: &I,
    v: &I,
    w: &I,
) -> ZzSeries<I> {
    let sign = u.parity().koszul(v.parity());
    let lhs = compose(y1, y2, u, v, w, true)
        .add(&compose(y2, y1, u, v, w, true))
        .sub(
            &compose(y1, y2, v, u, w, false)
                .add(&compose(y2, y1, v, u, w, false))
                .scale(&sign),
        );
    let rhs = res_compose(y1, y2, u, v, w).add(&res_compose(y2, y1, u, v, w));
    lhs.sub(&rhs)
}

/// Checks the mixed-degree coupling identity on all triples from `indices`.
pub fn check_cross_term<I: BasisId>(
    y1: &ConformalStructure<I>,
    y2: &ConformalStructure<I>,
    indices: &[I],
    sample: &str,
) -> JacobiReport<I> {
    let n = indices.len();
    let failures: Vec<JacobiFailure<I>> = (0..n * n * n)
        .into_par_iter()
        .filter_map(|flat| {
            let (u, rest) = (&indices[flat / (n * n)], flat % (n * n));
            let (v, w) = (&indices[rest / n], &indices[rest % n]);
            let residual = cross_term_residual(y1, y2, u, v, w);
            if residual.is_zero() {
                None
            } else {
                Some(JacobiFailure { inputs: (u.clone(), v.clone(), w.clone()), residual })
            }
        })
        .collect();
    Report::collect("conformal-cross", sample, n * n * n, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisIndex, BasisSpec};
    use crate::families::{novikov_rule, witt_rule};
    use crate::rule::GdStructure;

    fn structure(b: i64, levels: bool) -> (BasisSpec, ConformalStructure<BasisIndex>) {
        let spec = BasisSpec::new(1, levels);
        let gd = GdStructure {
            bracket: witt_rule(&spec),
            circ: novikov_rule(&Scalar::from(b), &spec),
        };
        (spec, from_gd(&gd))
    }

    #[test]
    fn zeroth_product_example() {
        // For shift 1: Y(x0, z)x0 = del(x0) z^-1 + 2 x0 z^-2.
        let (spec, y) = structure(1, false);
        let x0 = spec.index(0, 0);
        let prods = y.products(&x0, &x0);
        assert_eq!(prods[0], DPoly::term(1, Element::basis(x0)));
        assert_eq!(prods[1], DPoly::from_element(Element::singleton(x0, Scalar::from(2))));
    }

    #[test]
    fn general_product_shape() {
        // For shift 0: Y(xa, z)xb = (a del(x) + (a-b) x) z^-1 + (a+b) x z^-2.
        let (spec, y) = structure(0, false);
        let (a, b) = (2i64, -1i64);
        let (xa, xb, xab) = (spec.index(a, 0), spec.index(b, 0), spec.index(a + b, 0));
        let prods = y.products(&xa, &xb);
        let want0 = DPoly::term(1, Element::singleton(xab, Scalar::from(a)))
            .add(&DPoly::from_element(Element::singleton(xab, Scalar::from(a - b))));
        assert_eq!(prods[0], want0);
        assert_eq!(prods[1], DPoly::from_element(Element::singleton(xab, Scalar::from(a + b))));
    }

    #[test]
    fn translation_property() {
        // Y(del u, z) = d/dz Y(u, z) for translation-polynomial arguments.
        let (spec, y) = structure(1, true);
        let zeta = DPoly::term(
            0,
            Element::from_terms([
                (spec.index(1, 1), Scalar::from(2)),
                (spec.index(-2, 0), Scalar::ratio(1, 3)),
            ]),
        );
        let eta = DPoly::term(2, Element::basis(spec.index(0, 1)))
            .add(&DPoly::from_element(Element::basis(spec.index(2, 0))));
        let lhs = yplus(&y, &zeta.shift(1), &eta);
        let rhs = yplus(&y, &zeta, &eta).dz();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn yplus_on_translated_right_argument() {
        let (spec, y) = structure(1, false);
        let x0 = spec.index(0, 0);
        let zeta = DPoly::from_element(Element::basis(x0));
        let eta = DPoly::term(1, Element::basis(x0));
        // Matches (del - d/dz) applied to the base series.
        let base = yplus(&y, &zeta, &DPoly::from_element(Element::basis(x0)));
        let want = base.del().sub(&base.dz());
        assert_eq!(yplus(&y, &zeta, &eta), want);
    }

    #[test]
    fn skew_holds_for_commutator_structures() {
        let (spec, y) = structure(1, false);
        let report = check_skew(&y, &spec.window(3, 0), "window(3,0)");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn skew_hand_example() {
        // Pair (x0, x0) at shift 1: rhs = del(x0) z^-1 + 2 x0 z^-2 = lhs.
        let (spec, y) = structure(1, false);
        let x0 = spec.index(0, 0);
        let rhs = skew_rhs(&y, &x0, &x0);
        let mut want = ZSeries::zero(FormalVar::Z);
        want.add_term(-1, DPoly::term(1, Element::basis(x0)));
        want.add_term(-2, DPoly::from_element(Element::singleton(x0, Scalar::from(2))));
        assert_eq!(rhs, want);
    }

    #[test]
    fn jacobi_holds_for_commutator_structures() {
        let (spec, y) = structure(0, true);
        let report = check_jacobi(&y, &spec.window(2, 1), "window(2,1)");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn split_recombines_and_passes_cross_term() {
        let (spec, y) = structure(0, false);
        let (y1, y2) = degree_split(&y).unwrap();
        let idx = spec.window(2, 0);
        for u in &idx {
            for v in &idx {
                let full = y.base_series(u, v, FormalVar::Z);
                let sum =
                    y1.base_series(u, v, FormalVar::Z).add(&y2.base_series(u, v, FormalVar::Z));
                assert_eq!(full, sum);
            }
        }
        let report = check_cross_term(&y1, &y2, &idx, "window(2,0)");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn pure_bracket_structure_has_trivial_second_part() {
        let spec = BasisSpec::new(1, false);
        let gd = GdStructure {
            bracket: witt_rule(&spec),
            circ: crate::rule::BilinearRule::zero("0"),
        };
        let (y1, y2) = degree_split(&from_gd(&gd)).unwrap();
        for u in spec.window(2, 0) {
            for v in spec.window(2, 0) {
                assert!(y2.base_series(&u, &v, FormalVar::Z).is_zero());
                let d1 = y1.products(&u, &v);
                assert_eq!(d1[0], DPoly::from_element(gd.bracket.apply(&v, &u)));
            }
        }
    }

    #[test]
    fn round_trip_recovers_rules() {
        let spec = BasisSpec::new(2, true);
        let gd = GdStructure {
            bracket: witt_rule(&spec),
            circ: novikov_rule(&Scalar::ratio(1, 2), &spec),
        };
        let back = extract_gd(&from_gd(&gd));
        for u in spec.window(3, 2) {
            for v in spec.window(3, 2) {
                assert_eq!(back.bracket.apply(&u, &v), gd.bracket.apply(&u, &v));
                assert_eq!(back.circ.apply(&u, &v), gd.circ.apply(&u, &v));
            }
        }
    }

    #[test]
    fn violating_pair_fails_jacobi_at_the_expected_coefficient() {
        use crate::checks::{check_lie_super, check_novikov_super, gd_compat_residual};
        use crate::rule::BilinearRule;
        use std::sync::Arc;
        // The level-lowering half of the Witt bracket is still a Lie bracket
        // but is not compatible with the shift-0 Novikov product.
        let spec = BasisSpec::new(1, true);
        let s = spec.clone();
        let bracket = BilinearRule::new(
            "level-witt",
            Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
                if a.level + b.level == 0 {
                    return Element::zero();
                }
                Element::singleton(
                    s.index(a.deg + b.deg, a.level + b.level - 1),
                    Scalar::from(b.level as i64 - a.level as i64),
                )
            }),
        );
        let circ = novikov_rule(&Scalar::zero(), &spec);
        let idx = spec.window(2, 1);
        assert!(check_lie_super(&bracket, &idx, "w").passed());
        assert!(check_novikov_super(&circ, &idx, "w").passed());

        let y = from_gd(&GdStructure { bracket: bracket.clone(), circ: circ.clone() });
        let mut nonzero = 0;
        for u in &idx {
            for v in &idx {
                for w in &idx {
                    let residual = jacobi_residual(&y, u, v, w);
                    let coeff = residual.coeff(-1, -1);
                    // The z1^-1 z2^-1 coefficient is the translation of the
                    // compatibility residual at (v, u, w).
                    let compat = gd_compat_residual(&bracket, &circ, v, u, w);
                    assert_eq!(coeff, DPoly::term(1, compat.clone()));
                    if !compat.is_zero() {
                        nonzero += 1;
                    }
                }
            }
        }
        assert!(nonzero > 0, "expected some violating triples");
    }

    #[test]
    fn split_rejects_higher_structures() {
        let (_, y) = structure(0, false);
        let y_inner = y.clone();
        let bad =
            ConformalStructure::new("cubic", 3, Arc::new(move |u, v| y_inner.products(u, v)));
        assert!(matches!(degree_split(&bad), Err(ConformalError::NotQuadratic(3))));
    }
}
