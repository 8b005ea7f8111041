//! Closed-form catalog of the named products and brackets on the graded
//! lattice family: the shifted Novikov products, the associated commutative
//! product, the diamond products, the Witt-type bracket, the star product and
//! every classified Lie bracket, each emitted as a [`BilinearRule`].

use crate::basis::{BasisIndex, BasisSpec};
use crate::element::Element;
use crate::rule::BilinearRule;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("levels not supported: {0}")]
    LevelsNotSupported(String),
    #[error("levels required: {0}")]
    LevelsRequired(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
}

/// Additive map on the degree lattice, determined by its value on the
/// generator `1/m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupHom {
    pub gen: Scalar,
}

impl GroupHom {
    pub fn new(gen: Scalar) -> Self {
        GroupHom { gen }
    }

    pub fn zero() -> Self {
        GroupHom { gen: Scalar::zero() }
    }

    /// The inclusion of the lattice into the scalars.
    pub fn identity(m: u32) -> Self {
        GroupHom { gen: Scalar::ratio(1, m as i64) }
    }

    /// Value on the lattice multiple `k`, i.e. on the degree `k/m`.
    pub fn eval(&self, k: i64) -> Scalar {
        &Scalar::from(k) * &self.gen
    }

    pub fn is_zero(&self) -> bool {
        self.gen.is_zero()
    }
}

/// Skew-symmetric biadditive-style form on degree pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkewForm {
    /// Explicit values on degree-multiple pairs. Skewness is structural:
    /// the value at `(b, a)` is minus the value stored for `(a, b)` and the
    /// diagonal is zero. Unlisted pairs read as zero.
    Table { entries: Vec<(i64, i64, Scalar)> },
    /// `phi1(x) phi2(y) - phi1(y) phi2(x)` for two homomorphisms.
    HomProduct { phi1: GroupHom, phi2: GroupHom },
}

impl SkewForm {
    pub fn zero() -> Self {
        SkewForm::Table { entries: Vec::new() }
    }

    pub fn table(entries: Vec<(i64, i64, Scalar)>) -> Self {
        SkewForm::Table { entries }
    }

    /// Canonical lookup map with keys `(a, b)`, `a < b`.
    fn normalized(&self) -> BTreeMap<(i64, i64), Scalar> {
        let mut map = BTreeMap::new();
        if let SkewForm::Table { entries } = self {
            for (a, b, v) in entries {
                if a == b || v.is_zero() {
                    continue;
                }
                let (key, value) = if a < b { ((*a, *b), v.clone()) } else { ((*b, *a), -v) };
                *map.entry(key).or_insert_with(Scalar::zero) += &value;
            }
            map.retain(|_, v| !v.is_zero());
        }
        map
    }

    /// Value on the degree-multiple pair `(a, b)`.
    pub fn eval(&self, _m: u32, a: i64, b: i64) -> Scalar {
        match self {
            SkewForm::Table { .. } => {
                if a == b {
                    return Scalar::zero();
                }
                let map = self.normalized();
                if a < b {
                    map.get(&(a, b)).cloned().unwrap_or_else(Scalar::zero)
                } else {
                    map.get(&(b, a)).map(|v| -v).unwrap_or_else(Scalar::zero)
                }
            }
            SkewForm::HomProduct { phi1, phi2 } => {
                &(&phi1.eval(a) * &phi2.eval(b)) - &(&phi1.eval(b) * &phi2.eval(a))
            }
        }
    }

    /// Whether the form vanishes identically.
    pub fn is_zero_form(&self) -> bool {
        match self {
            SkewForm::Table { .. } => self.normalized().is_empty(),
            // On a rank-1 lattice both homomorphisms are multiples of the
            // inclusion, so their skew product always cancels.
            SkewForm::HomProduct { .. } => true,
        }
    }
}

/// Symmetric defect data measuring how far a skew form is from biadditivity
/// in its first argument: `form(b+c, a) = form(c, a) + form(b, a) + a * S(a,b,c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearityWitness {
    pub values: BTreeMap<(i64, i64, i64), Scalar>,
}

impl NonlinearityWitness {
    /// Computes the defect of `form` on all degree-multiple triples in
    /// `[-n, n]` whose sums stay inside `[-n, n]`. Triples with a zero first
    /// argument get the value zero by convention.
    pub fn from_form(form: &SkewForm, m: u32, n: i64) -> Self {
        let mut values = BTreeMap::new();
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    if (b + c).abs() > n {
                        continue;
                    }
                    let s = if a == 0 {
                        Scalar::zero()
                    } else {
                        let defect = &(&form.eval(m, b + c, a) - &form.eval(m, c, a))
                            - &form.eval(m, b, a);
                        // First argument is the degree a/m.
                        &defect / &Scalar::ratio(a, m as i64)
                    };
                    values.insert((a, b, c), s);
                }
            }
        }
        NonlinearityWitness { values }
    }

    /// Symmetric in all arguments wherever both orderings are present.
    pub fn is_symmetric(&self) -> bool {
        self.values.iter().all(|(&(a, b, c), v)| {
            [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
                .iter()
                .all(|key| self.values.get(key).map_or(true, |w| w == v))
        })
    }
}

/// Element term of the graded lattice family used in serialized parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiTerm {
    pub deg: i64,
    #[serde(default)]
    pub level: u32,
    pub coeff: Scalar,
}

/// Named rule family with its parameters. `build` emits the closed-form
/// kernel over a concrete basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Family {
    /// Novikov product `(beta + b) x[a+b, i+j] + j x[a+b, i+j-1]`.
    #[serde(rename = "novikov-a")]
    NovikovA { b: Scalar },
    /// Commutative product `x[a,i] . x[b,j] = x[a+b, i+j]`.
    #[serde(rename = "assoc-a")]
    AssocA,
    /// Diamond product `(beta + xi) x[a+b, i+j] + j x[a+b, i+j-1]` with the
    /// `xi` factor acting through the commutative product.
    #[serde(rename = "diamond")]
    Diamond { xi: Vec<XiTerm> },
    /// Witt-type bracket `(beta - alpha) x[a+b, i+j] + (j - i) x[a+b, i+j-1]`.
    #[serde(rename = "witt")]
    Witt,
    /// Star product `beta x[a+b]`, level-free.
    #[serde(rename = "star")]
    Star,
    /// Classified bracket for shift zero:
    /// `(phi(alpha, beta) + a (beta - alpha)) x[a+b]`.
    #[serde(rename = "b0")]
    B0 { a: Scalar, phi: SkewForm },
    /// Classified bracket for a shift outside the lattice:
    /// `(phi(beta) alpha - phi(alpha) beta + b (phi(beta) - phi(alpha))) / b`.
    #[serde(rename = "b-notin")]
    BOutside { b: Scalar, phi: GroupHom },
    /// Classified bracket for a nonzero shift inside the lattice:
    /// `theta(alpha, beta) x[a+b+s] + ((alpha+b) phi(beta) - (beta+b) phi(alpha))/b x[a+b]`.
    #[serde(rename = "b-in")]
    BInside { b: Scalar, phi: GroupHom, theta: SkewForm },
    /// Block-type bracket
    /// `(phi1(alpha) phi(b, beta) - phi1(beta) phi(b, alpha)) x[a+b+s] + phi(alpha, beta) x[a+b]`.
    #[serde(rename = "block-like")]
    BlockLike { b: Scalar, phi: SkewForm, phi1: GroupHom },
    /// Level analogue of the outside-shift bracket, with level-lowering term
    /// `[i (phi(beta) - lambda(beta+b)) + j (lambda(alpha+b) - phi(alpha))]/b`.
    #[serde(rename = "levels-b-notin")]
    LevelsBOutside { b: Scalar, phi: GroupHom, lambda: Scalar },
    /// Skew form on degrees plus homomorphism on levels:
    /// `phi(alpha,beta) x[.., i+j] + (i varphi(beta) - j varphi(alpha)) x[.., i+j-1]`.
    #[serde(rename = "levels-skew")]
    LevelsSkew { phi: SkewForm, varphi: GroupHom },
    /// `(alpha varphi(beta) - beta varphi(alpha)) x[.., i+j]
    ///  + [i (varphi(beta) - lambda beta) + j (lambda alpha - varphi(alpha))] x[.., i+j-1]`.
    #[serde(rename = "levels-hom-lambda")]
    LevelsHomLambda { varphi: GroupHom, lambda: Scalar },
    /// `(alpha varphi(beta) - beta varphi(alpha) + beta - alpha) x[.., i+j]
    ///  + (i varphi(beta) - j varphi(alpha) + j - i) x[.., i+j-1]`.
    #[serde(rename = "levels-hom-witt")]
    LevelsHomWitt { varphi: GroupHom },
    /// Level analogue of the inside-shift bracket with a hom-product top term.
    #[serde(rename = "levels-b-in")]
    LevelsBInside { b: Scalar, phi: GroupHom, phi1: GroupHom, phi2: GroupHom, lambda: Scalar },
    /// Level analogue of the block-type bracket.
    #[serde(rename = "levels-block-like")]
    LevelsBlockLike { b: Scalar, phi: SkewForm, phi1: GroupHom, varphi: GroupHom },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::NovikovA { .. } => "novikov-a",
            Family::AssocA => "assoc-a",
            Family::Diamond { .. } => "diamond",
            Family::Witt => "witt",
            Family::Star => "star",
            Family::B0 { .. } => "b0",
            Family::BOutside { .. } => "b-notin",
            Family::BInside { .. } => "b-in",
            Family::BlockLike { .. } => "block-like",
            Family::LevelsBOutside { .. } => "levels-b-notin",
            Family::LevelsSkew { .. } => "levels-skew",
            Family::LevelsHomLambda { .. } => "levels-hom-lambda",
            Family::LevelsHomWitt { .. } => "levels-hom-witt",
            Family::LevelsBInside { .. } => "levels-b-in",
            Family::LevelsBlockLike { .. } => "levels-block-like",
        }
    }

    pub fn build(&self, spec: &BasisSpec) -> Result<BilinearRule<BasisIndex>, FamilyError> {
        match self {
            Family::NovikovA { b } => Ok(novikov_rule(b, spec)),
            Family::AssocA => Ok(assoc_rule(spec)),
            Family::Diamond { xi } => {
                let elem = Element::from_terms(
                    xi.iter().map(|t| (spec.index(t.deg, t.level), t.coeff.clone())),
                );
                diamond_rule(&elem, spec)
            }
            Family::Witt => Ok(witt_rule(spec)),
            Family::Star => star_rule(spec),
            Family::B0 { a, phi } => {
                require_level_free(spec, "b0")?;
                let (m, spec, a, phi) = (spec.m, spec.clone(), a.clone(), phi.clone());
                Ok(named_rule("b0", spec.clone(), move |ka, kb, i, j| {
                    let diff = &spec.degree_of(kb) - &spec.degree_of(ka);
                    let c = &phi.eval(m, ka, kb) + &(&a * &diff);
                    vec![(ka + kb, i + j, c)]
                }))
            }
            Family::BOutside { b, phi } => {
                require_level_free(spec, "b-notin")?;
                if spec.contains(b) {
                    return Err(FamilyError::ConstraintViolated(
                        "case b-notin requires b outside the degree lattice".into(),
                    ));
                }
                let (spec_c, b, phi) = (spec.clone(), b.clone(), phi.clone());
                Ok(named_rule("b-notin", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (phi.eval(ka), phi.eval(kb));
                    let num = &(&(&pb * &alpha) - &(&pa * &beta)) + &(&b * &(&pb - &pa));
                    vec![(ka + kb, i + j, &num / &b)]
                }))
            }
            Family::BInside { b, phi, theta } => {
                require_level_free(spec, "b-in")?;
                let kb_b = require_inside(spec, b, "b-in")?;
                let phi_b = phi.eval(kb_b);
                if !phi_b.is_zero() && !theta.is_zero_form() {
                    return Err(FamilyError::ConstraintViolated(
                        "case b-in: nonzero theta requires phi(b) = 0".into(),
                    ));
                }
                if let SkewForm::HomProduct { phi1, phi2 } = theta {
                    if !phi1.eval(kb_b).is_zero() {
                        return Err(FamilyError::ConstraintViolated(
                            "case b-in: hom-product theta requires phi1(b) = 0".into(),
                        ));
                    }
                    if phi2.eval(kb_b) != -Scalar::one() {
                        return Err(FamilyError::ConstraintViolated(
                            "case b-in: hom-product theta requires phi2(b) = -1".into(),
                        ));
                    }
                }
                let (m, spec_c, b, phi, theta) =
                    (spec.m, spec.clone(), b.clone(), phi.clone(), theta.clone());
                Ok(named_rule("b-in", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (phi.eval(ka), phi.eval(kb));
                    let main = &(&(&alpha + &b) * &pb) - &(&(&beta + &b) * &pa);
                    vec![
                        (ka + kb + kb_b, i + j, theta.eval(m, ka, kb)),
                        (ka + kb, i + j, &main / &b),
                    ]
                }))
            }
            Family::BlockLike { b, phi, phi1 } => {
                require_level_free(spec, "block-like")?;
                let kb_b = require_inside(spec, b, "block-like")?;
                let (m, spec_c, phi, phi1) = (spec.m, spec.clone(), phi.clone(), phi1.clone());
                let _ = spec_c;
                Ok(named_rule("block-like", spec.clone(), move |ka, kb, i, j| {
                    let top = &(&phi1.eval(ka) * &phi.eval(m, kb_b, kb))
                        - &(&phi1.eval(kb) * &phi.eval(m, kb_b, ka));
                    vec![
                        (ka + kb + kb_b, i + j, top),
                        (ka + kb, i + j, phi.eval(m, ka, kb)),
                    ]
                }))
            }
            Family::LevelsBOutside { b, phi, lambda } => {
                require_levels(spec, "levels-b-notin")?;
                if spec.contains(b) {
                    return Err(FamilyError::ConstraintViolated(
                        "case levels-b-notin requires b outside the degree lattice".into(),
                    ));
                }
                let (spec_c, b, phi, lambda) =
                    (spec.clone(), b.clone(), phi.clone(), lambda.clone());
                Ok(named_rule("levels-b-notin", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (phi.eval(ka), phi.eval(kb));
                    let main = &(&(&alpha + &b) * &pb) - &(&(&beta + &b) * &pa);
                    let lower = &(&Scalar::from(i) * &(&pb - &(&lambda * &(&beta + &b))))
                        + &(&Scalar::from(j) * &(&(&lambda * &(&alpha + &b)) - &pa));
                    let mut terms = vec![(ka + kb, i + j, &main / &b)];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, &lower / &b));
                    }
                    terms
                }))
            }
            Family::LevelsSkew { phi, varphi } => {
                require_levels(spec, "levels-skew")?;
                let (m, phi, varphi) = (spec.m, phi.clone(), varphi.clone());
                Ok(named_rule("levels-skew", spec.clone(), move |ka, kb, i, j| {
                    let lower = &(&Scalar::from(i) * &varphi.eval(kb))
                        - &(&Scalar::from(j) * &varphi.eval(ka));
                    let mut terms = vec![(ka + kb, i + j, phi.eval(m, ka, kb))];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, lower));
                    }
                    terms
                }))
            }
            Family::LevelsHomLambda { varphi, lambda } => {
                require_levels(spec, "levels-hom-lambda")?;
                let (spec_c, varphi, lambda) = (spec.clone(), varphi.clone(), lambda.clone());
                Ok(named_rule("levels-hom-lambda", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (varphi.eval(ka), varphi.eval(kb));
                    let main = &(&alpha * &pb) - &(&beta * &pa);
                    let lower = &(&Scalar::from(i) * &(&pb - &(&lambda * &beta)))
                        + &(&Scalar::from(j) * &(&(&lambda * &alpha) - &pa));
                    let mut terms = vec![(ka + kb, i + j, main)];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, lower));
                    }
                    terms
                }))
            }
            Family::LevelsHomWitt { varphi } => {
                require_levels(spec, "levels-hom-witt")?;
                let (spec_c, varphi) = (spec.clone(), varphi.clone());
                Ok(named_rule("levels-hom-witt", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (varphi.eval(ka), varphi.eval(kb));
                    let main = &(&(&alpha * &pb) - &(&beta * &pa)) + &(&beta - &alpha);
                    let lower = &(&(&Scalar::from(i) * &pb) - &(&Scalar::from(j) * &pa))
                        + &Scalar::from(j as i64 - i as i64);
                    let mut terms = vec![(ka + kb, i + j, main)];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, lower));
                    }
                    terms
                }))
            }
            Family::LevelsBInside { b, phi, phi1, phi2, lambda } => {
                require_levels(spec, "levels-b-in")?;
                let kb_b = require_inside(spec, b, "levels-b-in")?;
                if !phi.eval(kb_b).is_zero() {
                    return Err(FamilyError::ConstraintViolated(
                        "case levels-b-in requires phi(b) = 0".into(),
                    ));
                }
                if !phi1.eval(kb_b).is_zero() {
                    return Err(FamilyError::ConstraintViolated(
                        "case levels-b-in requires phi1(b) = 0".into(),
                    ));
                }
                let (spec_c, b, phi, phi1, phi2, lambda) = (
                    spec.clone(),
                    b.clone(),
                    phi.clone(),
                    phi1.clone(),
                    phi2.clone(),
                    lambda.clone(),
                );
                Ok(named_rule("levels-b-in", spec.clone(), move |ka, kb, i, j| {
                    let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kb));
                    let (pa, pb) = (phi.eval(ka), phi.eval(kb));
                    let top = &(&phi1.eval(ka) * &phi2.eval(kb)) - &(&phi1.eval(kb) * &phi2.eval(ka));
                    let main = &(&(&alpha + &b) * &pb) - &(&(&beta + &b) * &pa);
                    let lower = &(&Scalar::from(i) * &(&pb - &(&lambda * &(&beta + &b))))
                        + &(&Scalar::from(j) * &(&(&lambda * &(&alpha + &b)) - &pa));
                    let mut terms = vec![
                        (ka + kb + kb_b, i + j, top),
                        (ka + kb, i + j, main),
                    ];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, lower));
                    }
                    terms
                }))
            }
            Family::LevelsBlockLike { b, phi, phi1, varphi } => {
                require_levels(spec, "levels-block-like")?;
                let kb_b = require_inside(spec, b, "levels-block-like")?;
                if !varphi.eval(kb_b).is_zero() {
                    return Err(FamilyError::ConstraintViolated(
                        "case levels-block-like requires varphi(b) = 0".into(),
                    ));
                }
                let (m, phi, phi1, varphi) = (spec.m, phi.clone(), phi1.clone(), varphi.clone());
                Ok(named_rule("levels-block-like", spec.clone(), move |ka, kb, i, j| {
                    let top = &(&phi1.eval(ka) * &phi.eval(m, kb_b, kb))
                        - &(&phi1.eval(kb) * &phi.eval(m, kb_b, ka));
                    let lower = &(&Scalar::from(i) * &varphi.eval(kb))
                        - &(&Scalar::from(j) * &varphi.eval(ka));
                    let mut terms = vec![
                        (ka + kb + kb_b, i + j, top),
                        (ka + kb, i + j, phi.eval(m, ka, kb)),
                    ];
                    if i + j > 0 {
                        terms.push((ka + kb, i + j - 1, lower));
                    }
                    terms
                }))
            }
        }
    }
}

fn require_levels(spec: &BasisSpec, case: &str) -> Result<(), FamilyError> {
    if spec.levels {
        Ok(())
    } else {
        Err(FamilyError::LevelsRequired(format!("family {case} needs a basis with levels")))
    }
}

fn require_level_free(spec: &BasisSpec, case: &str) -> Result<(), FamilyError> {
    if spec.levels {
        Err(FamilyError::LevelsNotSupported(format!("family {case} is a level-free family")))
    } else {
        Ok(())
    }
}

fn require_inside(spec: &BasisSpec, b: &Scalar, case: &str) -> Result<i64, FamilyError> {
    match spec.degree_multiple(b) {
        Some(k) if k != 0 => Ok(k),
        Some(_) => Err(FamilyError::ConstraintViolated(format!(
            "case {case} requires a nonzero shift b"
        ))),
        None => Err(FamilyError::ConstraintViolated(format!(
            "case {case} requires b inside the degree lattice"
        ))),
    }
}

/// Wraps a degree/level coefficient function into a rule.
fn named_rule(
    name: &str,
    spec: BasisSpec,
    coeffs: impl Fn(i64, i64, u32, u32) -> Vec<(i64, u32, Scalar)> + Send + Sync + 'static,
) -> BilinearRule<BasisIndex> {
    let spec_for_kernel = spec.clone();
    BilinearRule::new(
        name,
        Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
            Element::from_terms(
                coeffs(a.deg, b.deg, a.level, b.level)
                    .into_iter()
                    .filter(|(_, _, c)| !c.is_zero())
                    .map(|(deg, level, c)| (spec_for_kernel.index(deg, level), c)),
            )
        }),
    )
    .with_spec(spec)
}

/// Novikov product `(beta + b) x[a+b, i+j] + j x[a+b, i+j-1]`.
pub fn novikov_rule(b: &Scalar, spec: &BasisSpec) -> BilinearRule<BasisIndex> {
    let (spec_c, b) = (spec.clone(), b.clone());
    named_rule("novikov-a", spec.clone(), move |ka, kb, i, j| {
        let coeff = &spec_c.degree_of(kb) + &b;
        let mut terms = vec![(ka + kb, i + j, coeff)];
        if j > 0 {
            terms.push((ka + kb, i + j - 1, Scalar::from(j)));
        }
        terms
    })
}

/// Commutative associative product `x[a,i] . x[b,j] = x[a+b, i+j]`.
pub fn assoc_rule(spec: &BasisSpec) -> BilinearRule<BasisIndex> {
    named_rule("assoc-a", spec.clone(), |ka, kb, i, j| {
        vec![(ka + kb, i + j, Scalar::one())]
    })
}

/// Diamond product `(beta + xi) x[a+b, i+j] + j x[a+b, i+j-1]`.
pub fn diamond_rule(
    xi: &Element<BasisIndex>,
    spec: &BasisSpec,
) -> Result<BilinearRule<BasisIndex>, FamilyError> {
    if !spec.levels {
        if let Some((bad, _)) = xi.iter().find(|(i, _)| i.level > 0) {
            return Err(FamilyError::BasisMismatch(format!(
                "xi term {bad} uses levels but the basis has none"
            )));
        }
    }
    let xi_terms: Vec<(i64, u32, Scalar)> =
        xi.iter().map(|(i, c)| (i.deg, i.level, c.clone())).collect();
    let spec_c = spec.clone();
    Ok(named_rule("diamond", spec.clone(), move |ka, kb, i, j| {
        let mut terms = vec![(ka + kb, i + j, spec_c.degree_of(kb))];
        for (xd, xl, xc) in &xi_terms {
            terms.push((ka + kb + xd, i + j + xl, xc.clone()));
        }
        if j > 0 {
            terms.push((ka + kb, i + j - 1, Scalar::from(j)));
        }
        terms
    }))
}

/// Witt-type bracket `(beta - alpha) x[a+b, i+j] + (j-i) x[a+b, i+j-1]`.
pub fn witt_rule(spec: &BasisSpec) -> BilinearRule<BasisIndex> {
    let spec_c = spec.clone();
    named_rule("witt", spec.clone(), move |ka, kb, i, j| {
        let mut terms = vec![(ka + kb, i + j, &spec_c.degree_of(kb) - &spec_c.degree_of(ka))];
        if i + j > 0 {
            terms.push((ka + kb, i + j - 1, Scalar::from(j as i64 - i as i64)));
        }
        terms
    })
}

/// Star product `beta x[a+b]` on a level-free basis.
pub fn star_rule(spec: &BasisSpec) -> Result<BilinearRule<BasisIndex>, FamilyError> {
    if spec.levels {
        return Err(FamilyError::LevelsNotSupported(
            "the star product is defined on the level-free basis only".into(),
        ));
    }
    let spec_c = spec.clone();
    Ok(named_rule("star", spec.clone(), move |ka, kb, i, j| {
        vec![(ka + kb, i + j, spec_c.degree_of(kb))]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{commutator_rule, rules_agree_on};

    fn lvl_spec() -> BasisSpec {
        BasisSpec::new(1, true)
    }

    fn flat_spec() -> BasisSpec {
        BasisSpec::new(1, false)
    }

    #[test]
    fn novikov_product_values() {
        let spec = flat_spec();
        let rule = novikov_rule(&Scalar::one(), &spec);
        // x[2] o x[3] = (3+1) x[5]
        let got = rule.apply(&spec.index(2, 0), &spec.index(3, 0));
        assert_eq!(got, Element::singleton(spec.index(5, 0), Scalar::from(4)));
        // Second factor at degree -b kills the product.
        let zero = rule.apply(&spec.index(2, 0), &spec.index(-1, 0));
        assert!(zero.is_zero());
    }

    #[test]
    fn novikov_level_lowering() {
        let spec = lvl_spec();
        let rule = novikov_rule(&Scalar::zero(), &spec);
        // x[0,2] o x[0,3] = 0*x[0,5] + 3 x[0,4]
        let got = rule.apply(&spec.index(0, 2), &spec.index(0, 3));
        assert_eq!(got, Element::singleton(spec.index(0, 4), Scalar::from(3)));
        // x[1,1] o x[2,1] = 2 x[3,2] + x[3,1]
        let got = rule.apply(&spec.index(1, 1), &spec.index(2, 1));
        let want = Element::from_terms([
            (spec.index(3, 2), Scalar::from(2)),
            (spec.index(3, 1), Scalar::one()),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn assoc_identity_element() {
        let spec = lvl_spec();
        let rule = assoc_rule(&spec);
        assert_eq!(
            rule.apply(&spec.index(1, 0), &spec.index(2, 0)),
            Element::basis(spec.index(3, 0))
        );
        for v in spec.window(2, 1) {
            assert_eq!(rule.apply(&spec.index(0, 0), &v), Element::basis(v));
        }
    }

    #[test]
    fn diamond_constant_xi_is_shifted_novikov() {
        let spec = lvl_spec();
        let b = Scalar::ratio(-3, 2);
        let xi = Element::singleton(spec.index(0, 0), b.clone());
        let diamond = diamond_rule(&xi, &spec).unwrap();
        let novikov = novikov_rule(&b, &spec);
        assert!(rules_agree_on(&diamond, &novikov, &spec.window(3, 2)));
    }

    #[test]
    fn diamond_example_value() {
        let spec = flat_spec();
        let xi = Element::basis(spec.index(1, 0));
        let rule = diamond_rule(&xi, &spec).unwrap();
        let got = rule.apply(&spec.index(0, 0), &spec.index(2, 0));
        let want = Element::from_terms([
            (spec.index(2, 0), Scalar::from(2)),
            (spec.index(3, 0), Scalar::one()),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn diamond_commutator_is_xi_independent() {
        let spec = lvl_spec();
        let window = spec.window(3, 2);
        let witt = witt_rule(&spec);
        let xis = [
            Element::zero(),
            Element::basis(spec.index(1, 0)),
            Element::from_terms([
                (spec.index(-1, 1), Scalar::from(2)),
                (spec.index(2, 0), Scalar::ratio(1, 3)),
            ]),
        ];
        for xi in &xis {
            let rule = diamond_rule(xi, &spec).unwrap();
            assert!(rules_agree_on(&commutator_rule(&rule), &witt, &window));
        }
    }

    #[test]
    fn witt_values_and_skewness() {
        let spec = flat_spec();
        let rule = witt_rule(&spec);
        assert_eq!(
            rule.apply(&spec.index(1, 0), &spec.index(2, 0)),
            Element::basis(spec.index(3, 0))
        );
        for v in spec.window(3, 0) {
            assert!(rule.apply(&v, &v).is_zero());
        }
    }

    #[test]
    fn star_values_and_level_rejection() {
        let spec = flat_spec();
        let rule = star_rule(&spec).unwrap();
        assert_eq!(
            rule.apply(&spec.index(2, 0), &spec.index(3, 0)),
            Element::singleton(spec.index(5, 0), Scalar::from(3))
        );
        assert!(rule.apply(&spec.index(2, 0), &spec.index(0, 0)).is_zero());
        assert!(matches!(star_rule(&lvl_spec()), Err(FamilyError::LevelsNotSupported(_))));
    }

    #[test]
    fn b_outside_bracket_example() {
        let spec = flat_spec();
        let fam = Family::BOutside {
            b: Scalar::ratio(1, 2),
            phi: GroupHom::new(Scalar::one()),
        };
        let rule = fam.build(&spec).unwrap();
        // [x1, x2] = (phi(2)*1 - phi(1)*2 + (1/2)(phi(2)-phi(1))) / (1/2) x3 = x3
        assert_eq!(
            rule.apply(&spec.index(1, 0), &spec.index(2, 0)),
            Element::basis(spec.index(3, 0))
        );
    }

    #[test]
    fn b_outside_rejects_lattice_b() {
        let fam = Family::BOutside { b: Scalar::one(), phi: GroupHom::zero() };
        assert!(matches!(fam.build(&flat_spec()), Err(FamilyError::ConstraintViolated(_))));
    }

    #[test]
    fn levels_b_outside_example() {
        let spec = lvl_spec();
        let fam = Family::LevelsBOutside {
            b: Scalar::ratio(1, 2),
            phi: GroupHom::zero(),
            lambda: Scalar::one(),
        };
        let rule = fam.build(&spec).unwrap();
        // [x[0,1], x[0,2]] = (1/b)[1*(-lambda b) + 2*(lambda b)] x[0,2] = x[0,2]
        assert_eq!(
            rule.apply(&spec.index(0, 1), &spec.index(0, 2)),
            Element::basis(spec.index(0, 2))
        );
    }

    #[test]
    fn b_inside_constraints() {
        let spec = flat_spec();
        let bad = Family::BInside {
            b: Scalar::one(),
            phi: GroupHom::new(Scalar::one()),
            theta: SkewForm::table(vec![(1, 2, Scalar::one())]),
        };
        let err = bad.build(&spec).unwrap_err();
        assert!(matches!(err, FamilyError::ConstraintViolated(msg) if msg.contains("phi(b) = 0")));

        let bad2 = Family::BInside {
            b: Scalar::from(2),
            phi: GroupHom::zero(),
            theta: SkewForm::HomProduct {
                phi1: GroupHom::zero(),
                phi2: GroupHom::new(Scalar::one()),
            },
        };
        let err = bad2.build(&spec).unwrap_err();
        assert!(matches!(err, FamilyError::ConstraintViolated(msg) if msg.contains("phi2(b) = -1")));

        let ok = Family::BInside {
            b: Scalar::from(2),
            phi: GroupHom::zero(),
            theta: SkewForm::HomProduct {
                phi1: GroupHom::zero(),
                phi2: GroupHom::new(Scalar::ratio(-1, 2)),
            },
        };
        assert!(ok.build(&spec).is_ok());
    }

    #[test]
    fn classified_brackets_are_skew() {
        let flat = flat_spec();
        let lvl = lvl_spec();
        let families: Vec<(Family, &BasisSpec)> = vec![
            (
                Family::B0 { a: Scalar::from(2), phi: SkewForm::zero() },
                &flat,
            ),
            (
                Family::BOutside { b: Scalar::ratio(1, 2), phi: GroupHom::new(Scalar::from(3)) },
                &flat,
            ),
            (
                Family::BInside { b: Scalar::from(2), phi: GroupHom::zero(), theta: SkewForm::zero() },
                &flat,
            ),
            (
                Family::LevelsBOutside {
                    b: Scalar::ratio(-3, 2),
                    phi: GroupHom::new(Scalar::one()),
                    lambda: Scalar::ratio(2, 3),
                },
                &lvl,
            ),
            (
                Family::LevelsHomWitt { varphi: GroupHom::new(Scalar::from(2)) },
                &lvl,
            ),
        ];
        for (fam, spec) in families {
            let rule = fam.build(spec).unwrap();
            for v in spec.window(2, 1) {
                assert!(rule.apply(&v, &v).is_zero(), "family {} not skew at {v}", fam.name());
            }
        }
    }

    #[test]
    fn witness_from_hom_product_is_flat() {
        let phi = SkewForm::HomProduct {
            phi1: GroupHom::identity(1),
            phi2: GroupHom::new(Scalar::from(5)),
        };
        // Rank-1 hom products vanish, so the defect does too.
        let w = NonlinearityWitness::from_form(&phi, 1, 3);
        assert!(w.is_symmetric());
        assert!(w.values.values().all(|v| v.is_zero()));
    }

    #[test]
    fn star_plus_scaled_mult_recovers_novikov() {
        let spec = flat_spec();
        let b = Scalar::ratio(-3, 2);
        // xi = x0 o x0 = b x0, so circ0 = b * mult.
        let star = star_rule(&spec).unwrap();
        let circ0 = BilinearRule::scaled("circ0", &assoc_rule(&spec), b.clone());
        let recomposed = BilinearRule::sum("star+circ0", &star, &circ0);
        assert!(rules_agree_on(&recomposed, &novikov_rule(&b, &spec), &spec.window(3, 0)));
    }
}
