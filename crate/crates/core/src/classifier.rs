//! Windowed brute-force verification of the classification statements:
//! compatibility constraints on structure constants become exact sparse
//! linear systems over a finite index window, and the solution spaces are
//! compared, on an interior margin, against the closed-form families.
//!
//! Windowed systems are necessary-condition systems: an equation instance is
//! kept only when every structure constant it references lies in the window,
//! so the windowed solution space is a superset of the truth and all
//! comparisons are done after projecting to the interior.

use crate::basis::{BasisIndex, BasisSpec};
use crate::checks::{check_jacobi_on_triples, CheckReport};
use crate::element::Element;
use crate::families::{Family, GroupHom, SkewForm};
use crate::linear::{Assignment, LinearSystem, SolutionSet};
use crate::rule::BilinearRule;
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifierError {
    #[error("case/parameter mismatch: {0}")]
    CaseParameterMismatch(String),
}

/// Finite truncation of the index lattice with an interior margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    /// Degree bound: lattice multiples with `|d| <= n`.
    pub n: i64,
    /// Level bound (ignored for level-free cases).
    pub l: u32,
    /// Interior margin: interior means `|d| <= n - k` and level `<= l - k`.
    pub k: i64,
}

impl Window {
    pub fn new(n: i64, l: u32, k: i64) -> Result<Self, ClassifierError> {
        if k <= 0 || k >= n {
            return Err(ClassifierError::CaseParameterMismatch(format!(
                "interior margin must satisfy 0 < k < n, got n={n}, k={k}"
            )));
        }
        Ok(Window { n, l, k })
    }

    fn holds_deg(&self, d: i64) -> bool {
        d.abs() <= self.n
    }

    fn holds(&self, d: i64, level: i64, levels: bool) -> bool {
        self.holds_deg(d) && level >= 0 && (levels || level == 0) && level <= self.l as i64
    }

    pub fn interior_deg(&self, d: i64) -> bool {
        d.abs() <= self.n - self.k
    }

    pub fn interior_slot(&self, s: (i64, u32), levels: bool) -> bool {
        let level_ok = if levels {
            (s.1 as i64) <= (self.l as i64 - self.k).max(0)
        } else {
            s.1 == 0
        };
        self.interior_deg(s.0) && level_ok
    }
}

/// Classification case: which constraint template and which side conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassCase {
    /// Lie brackets over the shift-0 Novikov product, level-free.
    B0,
    /// Lie brackets over a shift outside the lattice, level-free.
    BOutside,
    /// Lie brackets over a nonzero shift inside the lattice, level-free.
    BInside,
    /// Lie brackets over a shift outside the lattice, with levels.
    LevelsBOutside,
    /// Exploratory: shift inside the lattice, with levels.
    LevelsBInside,
    /// Novikov products over the fixed Witt-type bracket, level-free.
    NovikovOverLie,
}

impl ClassCase {
    pub fn name(&self) -> &'static str {
        match self {
            ClassCase::B0 => "b0",
            ClassCase::BOutside => "b-notin",
            ClassCase::BInside => "b-in",
            ClassCase::LevelsBOutside => "levels-b-notin",
            ClassCase::LevelsBInside => "levels-b-in",
            ClassCase::NovikovOverLie => "novikov-over-lie",
        }
    }

    pub fn levels(&self) -> bool {
        matches!(self, ClassCase::LevelsBOutside | ClassCase::LevelsBInside)
    }
}

impl std::str::FromStr for ClassCase {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "b0" => Ok(ClassCase::B0),
            "b-notin" => Ok(ClassCase::BOutside),
            "b-in" => Ok(ClassCase::BInside),
            "levels-b-notin" => Ok(ClassCase::LevelsBOutside),
            "levels-b-in" => Ok(ClassCase::LevelsBInside),
            "novikov-over-lie" => Ok(ClassCase::NovikovOverLie),
            other => Err(ClassifierError::CaseParameterMismatch(format!(
                "unknown case {other:?}"
            ))),
        }
    }
}

/// Structure-constant variable: the coefficient of the output slot in the
/// product of the two input slots. Slots are (degree multiple, level).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstKey {
    pub left: (i64, u32),
    pub right: (i64, u32),
    pub out: (i64, u32),
}

impl fmt::Display for ConstKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c[{},{};{},{}|{},{}]",
            self.left.0, self.left.1, self.right.0, self.right.1, self.out.0, self.out.1
        )
    }
}

impl ConstKey {
    pub fn interior(&self, w: &Window, levels: bool) -> bool {
        w.interior_slot(self.left, levels)
            && w.interior_slot(self.right, levels)
            && w.interior_slot(self.out, levels)
    }
}

/// A windowed constraint system for one classification case.
pub struct ConstraintSystem {
    pub case: ClassCase,
    pub b: Scalar,
    pub m: u32,
    pub window: Window,
    pub system: LinearSystem<ConstKey>,
}

fn window_slots(w: &Window, levels: bool) -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    for d in -w.n..=w.n {
        if levels {
            for lv in 0..=w.l {
                out.push((d, lv));
            }
        } else {
            out.push((d, 0));
        }
    }
    out
}

/// Builds the windowed system for the requested case. Only equation
/// instances all of whose referenced variables are in-window are emitted.
pub fn build_system(
    case: ClassCase,
    b: &Scalar,
    m: u32,
    window: &Window,
) -> Result<ConstraintSystem, ClassifierError> {
    let spec = BasisSpec::new(m, case.levels());
    let kb = spec.degree_multiple(b);
    match case {
        ClassCase::B0 => {
            if !b.is_zero() {
                return Err(ClassifierError::CaseParameterMismatch(
                    "case b0 requires b = 0".into(),
                ));
            }
        }
        ClassCase::BOutside | ClassCase::LevelsBOutside => {
            if kb.is_some() {
                return Err(ClassifierError::CaseParameterMismatch(format!(
                    "case {} requires b outside the degree lattice, got b = {b}",
                    case.name()
                )));
            }
        }
        ClassCase::BInside => match kb {
            Some(0) | None => {
                return Err(ClassifierError::CaseParameterMismatch(format!(
                    "case b-in requires a nonzero lattice b, got b = {b}"
                )))
            }
            Some(_) => {}
        },
        ClassCase::LevelsBInside => {
            if kb.is_none() {
                return Err(ClassifierError::CaseParameterMismatch(format!(
                    "case levels-b-in requires a lattice b, got b = {b}"
                )));
            }
        }
        ClassCase::NovikovOverLie => {
            if !b.is_zero() {
                return Err(ClassifierError::CaseParameterMismatch(
                    "case novikov-over-lie takes no shift parameter".into(),
                ));
            }
        }
    }

    let system = match case {
        ClassCase::NovikovOverLie => build_star_rows(&spec, window, false),
        _ => build_compat_rows(&spec, b, window, case.levels()),
    };
    Ok(ConstraintSystem { case, b: b.clone(), m, window: *window, system })
}

fn declare_variables(sys: &mut LinearSystem<ConstKey>, w: &Window, levels: bool) {
    let slots = window_slots(w, levels);
    let mut keys = Vec::with_capacity(slots.len().pow(3));
    for &left in &slots {
        for &right in &slots {
            for &out in &slots {
                keys.push(ConstKey { left, right, out });
            }
        }
    }
    // Every constraint template conserves the degree momentum
    // out - left - right and couples only adjacent level-momentum layers,
    // so grouping variables by both keeps elimination fill-in inside small
    // blocks.
    keys.sort_by_key(|k| {
        let deg_mom = k.out.0 - k.left.0 - k.right.0;
        let lvl_mom = k.out.1 as i64 - k.left.1 as i64 - k.right.1 as i64;
        (deg_mom, lvl_mom, *k)
    });
    for k in keys {
        sys.ensure_var(k);
    }
}

/// Rows of the bracket-over-product compatibility template plus the
/// skew-symmetry rows.
fn build_compat_rows(
    spec: &BasisSpec,
    b: &Scalar,
    w: &Window,
    levels: bool,
) -> LinearSystem<ConstKey> {
    let mut sys = LinearSystem::new();
    declare_variables(&mut sys, w, levels);
    let slots = window_slots(w, levels);

    // Skew-symmetry rows.
    for &a in &slots {
        for &c in &slots {
            if a > c {
                continue;
            }
            for &s in &slots {
                sys.add_row(
                    vec![
                        (ConstKey { left: a, right: c, out: s }, Scalar::one()),
                        (ConstKey { left: c, right: a, out: s }, Scalar::one()),
                    ],
                    Scalar::zero(),
                );
            }
        }
    }

    // Compatibility instances: one per (alpha,i), (beta,j), (gamma,l),
    // (sigma,k) with every referenced slot in the window. Swapping the two
    // left slots negates the instance modulo skew rows (and the diagonal is
    // a pure skew consequence), so only strictly ordered pairs are emitted.
    let deg = |k: i64| spec.degree_of(k);
    for &(al, i) in &slots {
        for &(be, j) in &slots {
            if (al, i) >= (be, j) {
                continue;
            }
            for &(ga, l) in &slots {
                for &(si, k) in &slots {
                    let ca = &deg(al) + b;
                    let cb = &deg(be) + b;
                    let ci = Scalar::from(i);
                    let cj = Scalar::from(j);
                    let c9 = -(&(&deg(si) - &deg(ga)) + b);
                    let c10 = Scalar::from(l as i64 - k as i64 - 1);
                    let (ii, jj, ll, kk) = (i as i64, j as i64, l as i64, k as i64);
                    let candidates: [(Scalar, (i64, i64), (i64, i64), (i64, i64)); 10] = [
                        (ca.clone(), (al + ga, ii + ll), (be, jj), (si, kk)),
                        (-&ca, (ga, ll), (be, jj), (si - al, kk - ii)),
                        (cb.clone(), (al, ii), (be + ga, jj + ll), (si, kk)),
                        (cb.clone(), (ga, ll), (al, ii), (si - be, kk - jj)),
                        (ci.clone(), (al + ga, ii + ll - 1), (be, jj), (si, kk)),
                        (-&ci, (ga, ll), (be, jj), (si - al, kk + 1 - ii)),
                        (cj.clone(), (al, ii), (be + ga, jj + ll - 1), (si, kk)),
                        (cj.clone(), (ga, ll), (al, ii), (si - be, kk + 1 - jj)),
                        (c9.clone(), (al, ii), (be, jj), (si - ga, kk - ll)),
                        (c10.clone(), (al, ii), (be, jj), (si - ga, kk + 1 - ll)),
                    ];
                    let mut terms = Vec::new();
                    let mut usable = true;
                    for (coeff, left, right, out) in candidates {
                        if coeff.is_zero() {
                            continue;
                        }
                        let slots3 = [left, right, out];
                        // Negative levels (and any positive level on a
                        // level-free basis) are structural zeros: the basis
                        // vector does not exist, so the term drops out.
                        if slots3.iter().any(|s| s.1 < 0 || (!levels && s.1 > 0)) {
                            continue;
                        }
                        // Levels above the window bound and degrees outside
                        // it are unknowns the window cannot see.
                        if !slots3.iter().all(|s| w.holds(s.0, s.1, levels)) {
                            usable = false;
                            break;
                        }
                        terms.push((
                            ConstKey {
                                left: (left.0, left.1 as u32),
                                right: (right.0, right.1 as u32),
                                out: (out.0, out.1 as u32),
                            },
                            coeff,
                        ));
                    }
                    if usable && !terms.is_empty() {
                        sys.add_row(terms, Scalar::zero());
                    }
                }
            }
        }
    }
    sys
}

/// Rows of the star-product system over the fixed Witt-type bracket. When
/// `homogeneous` is set the inhomogeneous commutator rows get zero
/// right-hand sides (used to study the kernel of the same matrix).
pub fn build_star_rows(
    spec: &BasisSpec,
    w: &Window,
    homogeneous: bool,
) -> LinearSystem<ConstKey> {
    let mut sys = LinearSystem::new();
    declare_variables(&mut sys, w, false);
    let degs: Vec<i64> = (-w.n..=w.n).collect();
    let deg = |k: i64| spec.degree_of(k);
    let key = |l: i64, r: i64, o: i64| ConstKey { left: (l, 0), right: (r, 0), out: (o, 0) };

    // Commutator rows: c(a,b|s) - c(b,a|s) = delta_{s,a+b} (beta - alpha).
    for &a in &degs {
        for &c in &degs {
            if a >= c {
                continue;
            }
            for &s in &degs {
                let rhs = if s == a + c && !homogeneous {
                    &deg(c) - &deg(a)
                } else {
                    Scalar::zero()
                };
                sys.add_row(
                    vec![(key(a, c, s), Scalar::one()), (key(c, a, s), -Scalar::one())],
                    rhs,
                );
            }
        }
    }
    // The zero-degree self-product vanishes as an element, so its
    // coefficients are zero at every output degree: rows for the in-window
    // ones, structural zeros during instantiation for all of them.
    for &s in &degs {
        sys.add_row(vec![(key(0, 0, s), Scalar::one())], Scalar::zero());
    }
    // Compatibility instances; swapped left pairs give the exact negation,
    // so only strictly ordered pairs are emitted.
    for &al in &degs {
        for &be in &degs {
            if al >= be {
                continue;
            }
            for &ga in &degs {
                for &si in &degs {
                    let candidates: [(Scalar, i64, i64, i64); 5] = [
                        (&(&deg(be) * &Scalar::from(2)) - &deg(si), ga, al, si - be),
                        (&deg(si) - &(&deg(al) * &Scalar::from(2)), ga, be, si - al),
                        (&deg(al) - &deg(ga), ga + al, be, si),
                        (&deg(ga) - &deg(be), ga + be, al, si),
                        (&deg(al) - &deg(be), ga, al + be, si),
                    ];
                    let mut terms = Vec::new();
                    let mut usable = true;
                    for (coeff, l, r, o) in candidates {
                        if coeff.is_zero() {
                            continue;
                        }
                        if l == 0 && r == 0 {
                            // Zero-degree self-product: known zero at any
                            // output degree, in-window or not.
                            continue;
                        }
                        if !(w.holds_deg(l) && w.holds_deg(r) && w.holds_deg(o)) {
                            usable = false;
                            break;
                        }
                        terms.push((key(l, r, o), coeff));
                    }
                    if usable && !terms.is_empty() {
                        sys.add_row(terms, Scalar::zero());
                    }
                }
            }
        }
    }
    sys
}

/// Solution of a windowed system together with its interior projection.
pub struct Projected {
    pub solution: SolutionSet<ConstKey>,
    pub interior_particular: Option<Assignment<ConstKey>>,
    /// Interior projections of the nullspace basis (possibly dependent).
    pub interior_dirs: Vec<Assignment<ConstKey>>,
    /// Dimension of the interior-projected solution space.
    pub interior_dim: usize,
}

fn project_interior(
    asg: &Assignment<ConstKey>,
    w: &Window,
    levels: bool,
) -> Assignment<ConstKey> {
    asg.iter()
        .filter(|(k, _)| k.interior(w, levels))
        .map(|(k, v)| (*k, v.clone()))
        .collect()
}

/// Rank of a family of sparse vectors, computed by exact elimination.
pub fn assignment_rank(vectors: &[Assignment<ConstKey>]) -> usize {
    let mut sys: LinearSystem<ConstKey> = LinearSystem::new();
    for v in vectors {
        sys.add_row(v.iter().map(|(k, c)| (*k, c.clone())).collect(), Scalar::zero());
    }
    sys.rank()
}

/// Solves the windowed system and projects everything to the interior.
pub fn solve_and_project(cs: &ConstraintSystem) -> Projected {
    let solution = cs.system.solve_affine();
    let levels = cs.case.levels();
    let interior_particular =
        solution.particular.as_ref().map(|p| project_interior(p, &cs.window, levels));
    let interior_dirs: Vec<Assignment<ConstKey>> = solution
        .nullspace
        .iter()
        .map(|v| project_interior(v, &cs.window, levels))
        .filter(|v| !v.is_empty())
        .collect();
    let interior_dim = assignment_rank(&interior_dirs);
    Projected { solution, interior_particular, interior_dirs, interior_dim }
}

/// A parametric family restricted to the window, as an affine subspace of
/// structure-constant assignments.
pub struct FamilyGen {
    pub name: String,
    pub param_names: Vec<String>,
    pub base: Assignment<ConstKey>,
    pub dirs: Vec<Assignment<ConstKey>>,
}

/// Window assignment of a bilinear rule: every in-window product coefficient
/// landing on an in-window output slot.
pub fn assignment_of_rule(
    rule: &BilinearRule<BasisIndex>,
    spec: &BasisSpec,
    w: &Window,
) -> Assignment<ConstKey> {
    let mut out = Assignment::new();
    for left in spec.window(w.n, w.l) {
        for right in spec.window(w.n, w.l) {
            for (idx, coeff) in rule.apply(&left, &right).iter() {
                if w.holds(idx.deg, idx.level as i64, spec.levels) {
                    out.insert(
                        ConstKey {
                            left: (left.deg, left.level),
                            right: (right.deg, right.level),
                            out: (idx.deg, idx.level),
                        },
                        coeff.clone(),
                    );
                }
            }
        }
    }
    out
}

fn diff_assignments(
    a: &Assignment<ConstKey>,
    b: &Assignment<ConstKey>,
) -> Assignment<ConstKey> {
    let mut out = a.clone();
    for (k, v) in b {
        let entry = out.entry(*k).or_insert_with(Scalar::zero);
        *entry -= v;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn sum_assignments(a: &Assignment<ConstKey>, b: &Assignment<ConstKey>) -> Assignment<ConstKey> {
    let mut out = a.clone();
    for (k, v) in b {
        let entry = out.entry(*k).or_insert_with(Scalar::zero);
        *entry += v;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// The predicted family for a case, with unit-parameter directions.
pub fn family_generators(
    case: ClassCase,
    b: &Scalar,
    m: u32,
    w: &Window,
) -> Result<FamilyGen, ClassifierError> {
    let spec = BasisSpec::new(m, case.levels());
    let bad = |e: crate::families::FamilyError| {
        ClassifierError::CaseParameterMismatch(e.to_string())
    };
    let build = |fam: Family| fam.build(&spec).map_err(bad);
    match case {
        ClassCase::BOutside => {
            let unit = build(Family::BOutside {
                b: b.clone(),
                phi: GroupHom::new(Scalar::one()),
            })?;
            Ok(FamilyGen {
                name: "b-notin".into(),
                param_names: vec!["phi_gen".into()],
                base: Assignment::new(),
                dirs: vec![assignment_of_rule(&unit, &spec, w)],
            })
        }
        ClassCase::BInside => {
            let unit = build(Family::BInside {
                b: b.clone(),
                phi: GroupHom::new(Scalar::one()),
                theta: SkewForm::zero(),
            })?;
            Ok(FamilyGen {
                name: "b-in".into(),
                param_names: vec!["phi_gen".into()],
                base: Assignment::new(),
                dirs: vec![assignment_of_rule(&unit, &spec, w)],
            })
        }
        ClassCase::LevelsBOutside => {
            let phi_unit = build(Family::LevelsBOutside {
                b: b.clone(),
                phi: GroupHom::new(Scalar::one()),
                lambda: Scalar::zero(),
            })?;
            let lambda_unit = build(Family::LevelsBOutside {
                b: b.clone(),
                phi: GroupHom::zero(),
                lambda: Scalar::one(),
            })?;
            Ok(FamilyGen {
                name: "levels-b-notin".into(),
                param_names: vec!["phi_gen".into(), "lambda".into()],
                base: Assignment::new(),
                dirs: vec![
                    assignment_of_rule(&phi_unit, &spec, w),
                    assignment_of_rule(&lambda_unit, &spec, w),
                ],
            })
        }
        ClassCase::NovikovOverLie => {
            let star = build(Family::Star)?;
            Ok(FamilyGen {
                name: "star".into(),
                param_names: Vec::new(),
                base: assignment_of_rule(&star, &spec, w),
                dirs: Vec::new(),
            })
        }
        other => Err(ClassifierError::CaseParameterMismatch(format!(
            "case {} has no closed-form family generator",
            other.name()
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    BothContainments,
    Mismatch(String),
}

/// Outcome of matching a windowed solution space against a family.
#[derive(Clone, Debug)]
pub struct FamilyMatch {
    pub verdict: Verdict,
    pub interior_dim: usize,
    pub family_dim: usize,
    /// Family parameters matching the particular solution, when recovered.
    pub recovered: Option<Vec<(String, Scalar)>>,
}

impl FamilyMatch {
    pub fn matched(&self) -> bool {
        self.verdict == Verdict::BothContainments
    }
}

/// Solves an interior membership problem: is `target` in the affine span
/// `offset + span(dirs)` over the interior keys? Returns the parameters.
fn solve_membership(
    dirs: &[Assignment<ConstKey>],
    target: &Assignment<ConstKey>,
) -> Option<Vec<Scalar>> {
    let mut sys: LinearSystem<usize> = LinearSystem::new();
    for t in 0..dirs.len() {
        sys.ensure_var(t);
    }
    let mut keys: Vec<ConstKey> = target.keys().copied().collect();
    for d in dirs {
        keys.extend(d.keys().copied());
    }
    keys.sort();
    keys.dedup();
    for key in keys {
        let terms: Vec<(usize, Scalar)> = dirs
            .iter()
            .enumerate()
            .filter_map(|(t, d)| d.get(&key).map(|c| (t, c.clone())))
            .collect();
        let rhs = target.get(&key).cloned().unwrap_or_else(Scalar::zero);
        sys.add_row(terms, rhs);
    }
    let sol = sys.solve_affine();
    sol.particular.map(|p| {
        (0..dirs.len()).map(|t| p.get(&t).cloned().unwrap_or_else(Scalar::zero)).collect()
    })
}

/// Matches the solved window against a family: (i) every family instance
/// satisfies the windowed system and (ii) every windowed solution agrees
/// with a family instance on the interior.
pub fn match_family(proj: &Projected, fam: &FamilyGen, cs: &ConstraintSystem) -> FamilyMatch {
    let levels = cs.case.levels();
    let interior_base = project_interior(&fam.base, &cs.window, levels);
    let interior_dirs: Vec<Assignment<ConstKey>> =
        fam.dirs.iter().map(|d| project_interior(d, &cs.window, levels)).collect();
    let family_dim = assignment_rank(&interior_dirs);

    // (i) soundness: the base instance and every unit-parameter instance
    // solve the windowed system.
    if !cs.system.satisfies(&fam.base) {
        return FamilyMatch {
            verdict: Verdict::Mismatch("family base violates the windowed system".into()),
            interior_dim: proj.interior_dim,
            family_dim,
            recovered: None,
        };
    }
    for (t, dir) in fam.dirs.iter().enumerate() {
        let inst = sum_assignments(&fam.base, dir);
        if !cs.system.satisfies(&inst) {
            return FamilyMatch {
                verdict: Verdict::Mismatch(format!(
                    "family instance for parameter {} violates the windowed system",
                    fam.param_names.get(t).cloned().unwrap_or_else(|| t.to_string())
                )),
                interior_dim: proj.interior_dim,
                family_dim,
                recovered: None,
            };
        }
    }

    // (ii) completeness on the interior: particular and nullspace
    // projections all lie in the family's interior span.
    let Some(p) = &proj.interior_particular else {
        return FamilyMatch {
            verdict: Verdict::Mismatch("windowed system is inconsistent".into()),
            interior_dim: proj.interior_dim,
            family_dim,
            recovered: None,
        };
    };
    let offset = diff_assignments(p, &interior_base);
    let Some(params) = solve_membership(&interior_dirs, &offset) else {
        return FamilyMatch {
            verdict: Verdict::Mismatch(
                "particular solution leaves the family on the interior".into(),
            ),
            interior_dim: proj.interior_dim,
            family_dim,
            recovered: None,
        };
    };
    for dir in &proj.interior_dirs {
        if solve_membership(&interior_dirs, dir).is_none() {
            return FamilyMatch {
                verdict: Verdict::Mismatch(
                    "a nullspace direction leaves the family on the interior".into(),
                ),
                interior_dim: proj.interior_dim,
                family_dim,
                recovered: None,
            };
        }
    }
    let recovered = fam
        .param_names
        .iter()
        .cloned()
        .zip(params)
        .collect::<Vec<_>>();
    FamilyMatch {
        verdict: Verdict::BothContainments,
        interior_dim: proj.interior_dim,
        family_dim,
        recovered: Some(recovered),
    }
}

/// Builds a windowed table rule from a structure-constant assignment
/// (missing pairs read as zero).
pub fn assignment_rule(
    asg: &Assignment<ConstKey>,
    spec: &BasisSpec,
    name: impl Into<String>,
) -> BilinearRule<BasisIndex> {
    let mut table: BTreeMap<((i64, u32), (i64, u32)), Vec<((i64, u32), Scalar)>> = BTreeMap::new();
    for (k, v) in asg {
        table.entry((k.left, k.right)).or_default().push((k.out, v.clone()));
    }
    let spec_c = spec.clone();
    BilinearRule::new(
        name,
        Arc::new(move |a: &BasisIndex, b: &BasisIndex| {
            match table.get(&((a.deg, a.level), (b.deg, b.level))) {
                Some(terms) => Element::from_terms(
                    terms.iter().map(|(o, c)| (spec_c.index(o.0, o.1), c.clone())),
                ),
                None => Element::zero(),
            }
        }),
    )
    .with_spec(spec.clone())
}

/// Jacobi residuals per candidate bracket: the compatibility constraints are
/// linear, the Jacobi identity is quadratic, so candidates from the linear
/// solution space are filtered by this check.
pub fn jacobi_filter(
    candidates: &[BilinearRule<BasisIndex>],
    triples: &[(BasisIndex, BasisIndex, BasisIndex)],
    sample: &str,
) -> Vec<CheckReport<BasisIndex>> {
    candidates
        .iter()
        .map(|rule| check_jacobi_on_triples(rule, triples, sample))
        .collect()
}

/// Summary of the exploratory shift-inside-with-levels mode: solution-space
/// dimensions plus derived-constant relation checks on sampled solutions.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub variables: usize,
    pub equations: usize,
    pub rank: usize,
    pub solution_dim: usize,
    pub interior_dim: usize,
    pub relations_checked: usize,
    pub relation_failures: Vec<String>,
}

/// Runs the exploratory analysis: solve, report dimensions, and check the
/// derived linear relations between structure constants on the particular
/// solution and every nullspace direction (restricted to interior slots).
pub fn explore_levels_b_inside(cs: &ConstraintSystem) -> Exploration {
    assert_eq!(cs.case, ClassCase::LevelsBInside);
    let proj = solve_and_project(cs);
    let spec = BasisSpec::new(cs.m, true);
    let kb = spec.degree_multiple(&cs.b).expect("validated at build time");

    let mut vectors: Vec<&Assignment<ConstKey>> = Vec::new();
    if let Some(p) = &cs_particular(&proj) {
        vectors.push(p);
    }
    for v in &proj.solution.nullspace {
        vectors.push(v);
    }

    let mut checked = 0usize;
    let mut failures: Vec<String> = Vec::new();
    let levels = true;
    let w = &cs.window;
    let get = |v: &Assignment<ConstKey>, left: (i64, i64), right: (i64, i64), out: (i64, i64)| {
        if left.1 < 0 || right.1 < 0 || out.1 < 0 {
            return Scalar::zero();
        }
        let key = ConstKey {
            left: (left.0, left.1 as u32),
            right: (right.0, right.1 as u32),
            out: (out.0, out.1 as u32),
        };
        v.get(&key).cloned().unwrap_or_else(Scalar::zero)
    };

    for (vi, v) in vectors.iter().enumerate() {
        if kb != 0 {
            // Level-recursion reconstruction for the shifted output slot.
            for al in -w.n..=w.n {
                for be in -w.n..=w.n {
                    let si = al + be + kb;
                    if !w.interior_deg(al) || !w.interior_deg(be) || !w.interior_deg(si) {
                        continue;
                    }
                    let lmax = (w.l as i64 - w.k).max(0);
                    for i in 0..=lmax {
                        for j in 0..=lmax {
                            for k in 1..=lmax {
                                let lhs = get(v, (al, i), (be, j), (si, k));
                                let mut rhs = Scalar::zero();
                                for p in 0..=k {
                                    let c = &Scalar::binomial(i as u64, p as u64)
                                        * &Scalar::binomial(j as u64, (k - p) as u64);
                                    if c.is_zero() {
                                        continue;
                                    }
                                    rhs += &(&c * &get(v, (al, i - p), (be, j + p - k), (si, 0)));
                                }
                                checked += 1;
                                if lhs != rhs {
                                    failures.push(format!(
                                        "vector {vi}: level recursion fails at a[{al},{i};{be},{j}|{si},{k}]"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            // Fixed ratios of the shifted constants at degree zero.
            let two_b = &cs.b * &Scalar::from(2);
            let base12 = get(v, (0, 1), (0, 2), (kb, 0));
            let lmax = (w.l as i64 - w.k).max(0);
            if w.interior_deg(0) && w.interior_deg(kb) {
                for j in 2..=lmax {
                    let expect = {
                        let sign = if j % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                        let num = &sign * &Scalar::factorial(j as u64 + 1);
                        let den = &Scalar::from(6) * &two_b.pow(j as i32 - 2);
                        &(&num / &den) * &base12
                    };
                    let got = get(v, (0, 1), (0, j), (kb, 0));
                    checked += 1;
                    if got != expect {
                        failures.push(format!(
                            "vector {vi}: shifted-constant ratio fails at a[0,1;0,{j}|{kb},0]"
                        ));
                    }
                }
                let base21 = get(v, (0, 2), (0, 1), (kb, 0));
                for i in 2..=lmax {
                    for j in 2..=lmax {
                        let expect = {
                            let sign = if (i + j) % 2 == 0 { Scalar::one() } else { -Scalar::one() };
                            let num = &(&sign * &Scalar::from(j - i))
                                * &Scalar::factorial((i + j - 1) as u64);
                            let den = &Scalar::from(6) * &two_b.pow((i + j) as i32 - 2);
                            &(&num / &den) * &base21
                        };
                        let got = get(v, (0, i), (0, j), (kb, 0));
                        checked += 1;
                        if got != expect {
                            failures.push(format!(
                                "vector {vi}: shifted-constant ratio fails at a[0,{i};0,{j}|{kb},0]"
                            ));
                        }
                    }
                }
            }
        } else {
            // Shift zero: support bounds and the recovered hom/constant.
            let lmax = (w.l as i64 - w.k).max(0);
            let phi = |d: i64| get(v, (0, 0), (d, 0), (d, 0));
            let lambda = get(v, (0, 0), (0, 1), (0, 0));
            for al in -(w.n - w.k)..=(w.n - w.k) {
                for be in -(w.n - w.k)..=(w.n - w.k) {
                    let si = al + be;
                    if !w.interior_deg(si) {
                        continue;
                    }
                    for i in 0..=lmax {
                        for j in 0..=lmax {
                            // Top coefficient one level above the sum.
                            if i + j + 1 <= lmax {
                                let alpha = spec.degree_of(al);
                                let beta = spec.degree_of(be);
                                let want = &(&phi(al) * &beta) - &(&phi(be) * &alpha);
                                let got = get(v, (al, i), (be, j), (si, i + j + 1));
                                checked += 1;
                                if got != want {
                                    failures.push(format!(
                                        "vector {vi}: top-level coefficient fails at a[{al},{i};{be},{j}|{si},{}]",
                                        i + j + 1
                                    ));
                                }
                            }
                            // Everything above that vanishes.
                            for k in (i + j + 2)..=lmax {
                                let got = get(v, (al, i), (be, j), (si, k));
                                checked += 1;
                                if !got.is_zero() {
                                    failures.push(format!(
                                        "vector {vi}: support bound fails at a[{al},{i};{be},{j}|{si},{k}]"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            // Degree-zero column: [x_{0,i}, x_{0,j}] = lambda (j - i) at one
            // level down, and nothing else.
            for i in 0..=lmax {
                for j in 0..=lmax {
                    for k in 0..=lmax {
                        let got = get(v, (0, i), (0, j), (0, k));
                        let want = if k + 1 == i + j && i + j >= 1 {
                            &lambda * &Scalar::from(j - i)
                        } else if k == i + j + 1 || k == i + j {
                            // covered by the general checks above
                            continue;
                        } else {
                            Scalar::zero()
                        };
                        checked += 1;
                        if got != want {
                            failures.push(format!(
                                "vector {vi}: degree-zero column fails at a[0,{i};0,{j}|0,{k}]"
                            ));
                        }
                    }
                }
            }
        }
        let _ = levels;
    }

    Exploration {
        variables: cs.system.var_count(),
        equations: cs.system.row_count(),
        rank: proj.solution.rank,
        solution_dim: proj.solution.dimension(),
        interior_dim: proj.interior_dim,
        relations_checked: checked,
        relation_failures: failures,
    }
}

fn cs_particular(proj: &Projected) -> Option<&Assignment<ConstKey>> {
    proj.solution.particular.as_ref()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        assert!(Window::new(4, 0, 2).is_ok());
        assert!(Window::new(4, 0, 0).is_err());
        assert!(Window::new(4, 0, 4).is_err());
    }

    #[test]
    fn case_parameter_validation() {
        let w = Window::new(3, 0, 1).unwrap();
        assert!(build_system(ClassCase::BOutside, &Scalar::one(), 1, &w).is_err());
        assert!(build_system(ClassCase::BOutside, &Scalar::ratio(1, 2), 1, &w).is_ok());
        assert!(build_system(ClassCase::BInside, &Scalar::ratio(1, 2), 1, &w).is_err());
        assert!(build_system(ClassCase::BInside, &Scalar::zero(), 1, &w).is_err());
        assert!(build_system(ClassCase::B0, &Scalar::one(), 1, &w).is_err());
        // m = 2 puts 1/2 on the lattice.
        assert!(build_system(ClassCase::BOutside, &Scalar::ratio(1, 2), 2, &w).is_err());
    }

    #[test]
    fn star_system_is_affine() {
        let w = Window::new(4, 0, 2).unwrap();
        let cs = build_system(ClassCase::NovikovOverLie, &Scalar::zero(), 1, &w).unwrap();
        // The commutator rows carry nonzero right-hand sides.
        let sol = cs.system.solve_affine();
        let p = sol.particular.expect("consistent");
        assert!(!p.is_empty());
    }

    #[test]
    fn b_outside_matches_family_at_margin() {
        let w = Window::new(4, 0, 2).unwrap();
        let b = Scalar::ratio(1, 2);
        let cs = build_system(ClassCase::BOutside, &b, 1, &w).unwrap();
        let proj = solve_and_project(&cs);
        let fam = family_generators(ClassCase::BOutside, &b, 1, &w).unwrap();
        let m = match_family(&proj, &fam, &cs);
        assert!(m.matched(), "{:?}", m.verdict);
        assert_eq!(m.interior_dim, 1);
        assert_eq!(m.family_dim, 1);
    }

    #[test]
    fn thin_margin_reports_mismatch() {
        // With margin 1 the boundary freedom still reaches the interior, so
        // the honest verdict is a mismatch.
        let w = Window::new(3, 0, 1).unwrap();
        let b = Scalar::ratio(1, 2);
        let cs = build_system(ClassCase::BOutside, &b, 1, &w).unwrap();
        let proj = solve_and_project(&cs);
        let fam = family_generators(ClassCase::BOutside, &b, 1, &w).unwrap();
        let m = match_family(&proj, &fam, &cs);
        assert!(!m.matched());
    }

    #[test]
    fn jacobi_filter_separates_candidates() {
        let spec = BasisSpec::new(1, false);
        let b = Scalar::from(1);
        let good = Family::BInside {
            b: b.clone(),
            phi: GroupHom::new(Scalar::one()),
            theta: SkewForm::zero(),
        }
        .build(&spec)
        .unwrap();
        // A nonzero skew table as the shifted coefficient with phi(b) != 0
        // must fail the Jacobi filter.
        let theta = SkewForm::table(vec![(1, 2, Scalar::one())]);
        let spec_c = spec.clone();
        let phi = GroupHom::new(Scalar::one());
        let bad = BilinearRule::new(
            "bad-theta",
            Arc::new(move |a: &BasisIndex, c: &BasisIndex| {
                let (ka, kc) = (a.deg, c.deg);
                let (alpha, beta) = (spec_c.degree_of(ka), spec_c.degree_of(kc));
                let main = &(&(&alpha + &Scalar::one()) * &phi.eval(kc))
                    - &(&(&beta + &Scalar::one()) * &phi.eval(ka));
                Element::from_terms([
                    (spec_c.index(ka + kc + 1, 0), theta.eval(1, ka, kc)),
                    (spec_c.index(ka + kc, 0), main),
                ])
            }),
        );
        let idx = spec.window(2, 0);
        let mut triples = Vec::new();
        for u in &idx {
            for v in &idx {
                for w in &idx {
                    triples.push((*u, *v, *w));
                }
            }
        }
        let reports = jacobi_filter(&[good, bad], &triples, "window(2,0) cube");
        assert!(reports[0].passed());
        assert!(!reports[1].passed());
    }
}
