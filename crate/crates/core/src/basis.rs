//! Graded basis indices and the sampling windows used by the exact checkers.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Z2 grading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Koszul sign for swapping factors of these parities: -1 iff both odd.
    pub fn koszul(self, other: Parity) -> Scalar {
        if self == Parity::Odd && other == Parity::Odd {
            -Scalar::one()
        } else {
            Scalar::one()
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn add(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Anything usable as a basis label: ordered, printable, graded.
pub trait BasisId: Clone + Ord + Eq + fmt::Debug + fmt::Display + Send + Sync {
    fn parity(&self) -> Parity;
}

/// Parity assignment over the degree/level lattice.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ParityRule {
    #[default]
    AllEven,
    /// Explicit exceptions; anything absent is even.
    Table(BTreeMap<(i64, u32), Parity>),
}

/// Basis family of vectors `x[d, i]` with degree `d/m` and level `i`.
///
/// Degrees live in the rank-1 lattice `(1/m)Z` and are stored as integer
/// multiples of `1/m`. Levels are natural numbers when enabled, and pinned to
/// zero otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Lattice spacing denominator: degrees are multiples of `1/m`.
    pub m: u32,
    /// Whether levels (second index) are enabled.
    pub levels: bool,
    #[serde(default)]
    pub parity: ParityRule,
}

impl BasisSpec {
    pub fn new(m: u32, levels: bool) -> Self {
        assert!(m > 0, "lattice spacing must be positive");
        BasisSpec { m, levels, parity: ParityRule::AllEven }
    }

    /// Converts a scalar degree to its lattice multiple, if it lies on the lattice.
    pub fn degree_multiple(&self, s: &Scalar) -> Option<i64> {
        (s * &Scalar::from(self.m)).to_i64()
    }

    /// Membership test for the degree lattice.
    pub fn contains(&self, s: &Scalar) -> bool {
        self.degree_multiple(s).is_some()
    }

    /// The scalar degree of lattice multiple `k`.
    pub fn degree_of(&self, k: i64) -> Scalar {
        Scalar::ratio(k, self.m as i64)
    }

    pub fn parity_of(&self, deg: i64, level: u32) -> Parity {
        match &self.parity {
            ParityRule::AllEven => Parity::Even,
            ParityRule::Table(t) => t.get(&(deg, level)).copied().unwrap_or(Parity::Even),
        }
    }

    /// Basis vector at lattice multiple `deg` and level `level`.
    pub fn index(&self, deg: i64, level: u32) -> BasisIndex {
        debug_assert!(self.levels || level == 0, "levels disabled");
        BasisIndex { deg, level, parity: self.parity_of(deg, level) }
    }

    /// All indices with `|deg| <= n` and level `<= l` (level ignored when
    /// levels are disabled), in (degree, level) order.
    pub fn window(&self, n: i64, l: u32) -> Vec<BasisIndex> {
        let levels: Vec<u32> = if self.levels { (0..=l).collect() } else { vec![0] };
        let mut out = Vec::new();
        for deg in -n..=n {
            for &level in &levels {
                out.push(self.index(deg, level));
            }
        }
        out
    }
}

/// Index of one basis vector of a [`BasisSpec`] family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex {
    /// Degree as an integer multiple of `1/m`.
    pub deg: i64,
    pub level: u32,
    pub parity: Parity,
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tick = if self.parity == Parity::Odd { "~" } else { "" };
        if self.level == 0 {
            write!(f, "x{tick}[{}]", self.deg)
        } else {
            write!(f, "x{tick}[{},{}]", self.deg, self.level)
        }
    }
}

impl BasisId for BasisIndex {
    fn parity(&self) -> Parity {
        self.parity
    }
}

/// Free-form basis label with an explicit parity; used for structures read
/// back from explicit structure-constant tables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelIndex {
    pub label: String,
    pub parity: Parity,
}

impl LabelIndex {
    pub fn even(label: impl Into<String>) -> Self {
        LabelIndex { label: label.into(), parity: Parity::Even }
    }

    pub fn odd(label: impl Into<String>) -> Self {
        LabelIndex { label: label.into(), parity: Parity::Odd }
    }
}

impl fmt::Display for LabelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

impl BasisId for LabelIndex {
    fn parity(&self) -> Parity {
        self.parity
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_membership() {
        let spec = BasisSpec::new(2, false);
        assert_eq!(spec.degree_multiple(&Scalar::ratio(3, 2)), Some(3));
        assert_eq!(spec.degree_multiple(&Scalar::ratio(1, 3)), None);
        assert!(spec.contains(&Scalar::from(-4)));
    }

    #[test]
    fn window_enumeration_is_sorted() {
        let spec = BasisSpec::new(1, true);
        let w = spec.window(1, 1);
        let labels: Vec<String> = w.iter().map(|i| i.to_string()).collect();
        assert_eq!(labels, ["x[-1]", "x[-1,1]", "x[0]", "x[0,1]", "x[1]", "x[1,1]"]);
        let mut sorted = w.clone();
        sorted.sort();
        assert_eq!(w, sorted);
    }

    #[test]
    fn parity_table() {
        let mut table = BTreeMap::new();
        table.insert((1, 0), Parity::Odd);
        let spec = BasisSpec { m: 1, levels: false, parity: ParityRule::Table(table) };
        assert_eq!(spec.index(1, 0).parity, Parity::Odd);
        assert_eq!(spec.index(2, 0).parity, Parity::Even);
        assert_eq!(Parity::Odd.koszul(Parity::Odd), -Scalar::one());
        assert_eq!(Parity::Odd.koszul(Parity::Even), Scalar::one());
    }
}
