//! Exact sparse linear systems and deterministic row reduction.
//!
//! Systems are built row by row over opaque variable keys; variable order is
//! the insertion order of keys and pivoting always selects the lowest variable
//! index with a nonzero coefficient, so two runs over the same input produce
//! identical reduced forms, particular solutions and nullspace bases.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;

/// Sparse assignment of variables to scalars; absent keys read as zero.
pub type Assignment<K> = BTreeMap<K, Scalar>;

/// Key requirements for linear-system variables.
pub trait VarKey: Clone + Ord + fmt::Debug + fmt::Display {}
impl<T: Clone + Ord + fmt::Debug + fmt::Display> VarKey for T {}

/// Sparse row: (column, coefficient) pairs sorted by column, no zeros.
type Row = Vec<(usize, Scalar)>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinearError {
    #[error("nullspace requested for a non-homogeneous system (row {row} has rhs {rhs})")]
    NonHomogeneous { row: usize, rhs: Scalar },
}

/// A system of exact linear equations over `Scalar`.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem<K: VarKey> {
    vars: Vec<K>,
    index: BTreeMap<K, usize>,
    rows: Vec<Row>,
    rhs: Vec<Scalar>,
}

impl<K: VarKey> LinearSystem<K> {
    pub fn new() -> Self {
        LinearSystem {
            vars: Vec::new(),
            index: BTreeMap::new(),
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Registers a variable (idempotent) and returns its column index.
    pub fn ensure_var(&mut self, key: K) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.vars.len();
        self.vars.push(key.clone());
        self.index.insert(key, i);
        i
    }

    /// Adds the equation `sum coeff * var = rhs`. Repeated keys accumulate.
    pub fn add_row(&mut self, terms: Vec<(K, Scalar)>, rhs: Scalar) {
        let mut row: Row = Vec::with_capacity(terms.len());
        for (key, coeff) in terms {
            if coeff.is_zero() {
                continue;
            }
            let col = self.ensure_var(key);
            row.push((col, coeff));
        }
        row.sort_by_key(|(c, _)| *c);
        let mut packed: Row = Vec::with_capacity(row.len());
        for (col, coeff) in row {
            match packed.last_mut() {
                Some((last, acc)) if *last == col => *acc += &coeff,
                _ => packed.push((col, coeff)),
            }
        }
        packed.retain(|(_, c)| !c.is_zero());
        self.rows.push(packed);
        self.rhs.push(rhs);
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn variables(&self) -> &[K] {
        &self.vars
    }

    /// Evaluates every row at `assignment` (missing vars read as zero).
    pub fn satisfies(&self, assignment: &Assignment<K>) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, rhs)| {
            let mut acc = Scalar::zero();
            for (col, coeff) in row {
                if let Some(v) = assignment.get(&self.vars[*col]) {
                    acc += &(coeff * v);
                }
            }
            acc == *rhs
        })
    }

    /// Exact reduced row echelon solve. Inconsistency is reported by an
    /// absent particular solution, not an error.
    pub fn solve_affine(&self) -> SolutionSet<K> {
        let red = Reduction::run(self);
        let nullspace = red.nullspace_assignments(self);
        let particular = red.particular_assignment(self);
        SolutionSet {
            particular,
            nullspace,
            rank: red.pivots.len(),
            var_count: self.vars.len(),
        }
    }

    /// Basis of the solution space of a homogeneous system.
    pub fn nullspace(&self) -> Result<Vec<Assignment<K>>, LinearError> {
        if let Some((row, rhs)) = self.rhs.iter().enumerate().find(|(_, r)| !r.is_zero()) {
            return Err(LinearError::NonHomogeneous { row, rhs: rhs.clone() });
        }
        Ok(self.solve_affine().nullspace)
    }

    /// Exact rank of the coefficient matrix.
    pub fn rank(&self) -> usize {
        Reduction::run(self).pivots.len()
    }
}

/// Result of an exact solve.
#[derive(Clone, Debug)]
pub struct SolutionSet<K: VarKey> {
    /// A solution with every free variable set to zero; `None` if inconsistent.
    pub particular: Option<Assignment<K>>,
    /// Basis of the homogeneous solution space, first nonzero entry scaled to 1.
    pub nullspace: Vec<Assignment<K>>,
    /// Rank of the coefficient matrix.
    pub rank: usize,
    var_count: usize,
}

impl<K: VarKey> SolutionSet<K> {
    pub fn dimension(&self) -> usize {
        self.nullspace.len()
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }
}

/// Row echelon state: pivot column -> reduced row (leading coefficient 1).
struct Reduction {
    pivots: BTreeMap<usize, (Row, Scalar)>,
    inconsistent: bool,
}

impl Reduction {
    fn run<K: VarKey>(sys: &LinearSystem<K>) -> Self {
        let mut red = Reduction { pivots: BTreeMap::new(), inconsistent: false };
        for (row, rhs) in sys.rows.iter().zip(&sys.rhs) {
            red.absorb(row.clone(), rhs.clone());
        }
        red.back_substitute();
        red
    }

    /// Reduces `row` against current pivots; installs it as a new pivot row
    /// if anything survives.
    fn absorb(&mut self, mut row: Row, mut rhs: Scalar) {
        loop {
            let Some(&(lead, ref coeff)) = row.first() else {
                if !rhs.is_zero() {
                    self.inconsistent = true;
                }
                return;
            };
            match self.pivots.get(&lead) {
                Some((prow, prhs)) => {
                    let factor = coeff.clone();
                    row = row_sub_scaled(&row, prow, &factor);
                    rhs -= &(&factor * prhs);
                }
                None => {
                    let inv = coeff.recip();
                    let norm: Row = row.iter().map(|(c, v)| (*c, v * &inv)).collect();
                    let nrhs = &rhs * &inv;
                    self.pivots.insert(lead, (norm, nrhs));
                    return;
                }
            }
        }
    }

    /// Eliminates every pivot column from all rows above it (full RREF).
    /// Pivot columns are processed in descending order, so each row is only
    /// ever reduced against already fully-reduced rows.
    fn back_substitute(&mut self) {
        let cols: Vec<usize> = self.pivots.keys().copied().collect();
        for &col in cols.iter().rev() {
            let (mut row, mut rhs) = self.pivots.remove(&col).unwrap();
            loop {
                // First entry past the pivot that is itself a pivot column.
                let hit = row
                    .iter()
                    .find(|(c, _)| *c > col && self.pivots.contains_key(c))
                    .map(|(c, v)| (*c, v.clone()));
                let Some((c, factor)) = hit else { break };
                let (prow, prhs) = &self.pivots[&c];
                row = row_sub_scaled(&row, prow, &factor);
                rhs -= &(&factor * prhs);
            }
            self.pivots.insert(col, (row, rhs));
        }
    }

    fn particular_assignment<K: VarKey>(&self, sys: &LinearSystem<K>) -> Option<Assignment<K>> {
        if self.inconsistent {
            return None;
        }
        let mut out = Assignment::new();
        for (col, (_, rhs)) in &self.pivots {
            if !rhs.is_zero() {
                out.insert(sys.vars[*col].clone(), rhs.clone());
            }
        }
        Some(out)
    }

    fn nullspace_assignments<K: VarKey>(&self, sys: &LinearSystem<K>) -> Vec<Assignment<K>> {
        // Gather, per free column, its coefficients across the reduced rows.
        let mut by_free: BTreeMap<usize, Vec<(usize, Scalar)>> = BTreeMap::new();
        for (col, (row, _)) in &self.pivots {
            for (c, v) in row {
                if c != col {
                    by_free.entry(*c).or_default().push((*col, -v));
                }
            }
        }
        let mut basis = Vec::new();
        for free in 0..sys.vars.len() {
            if self.pivots.contains_key(&free) {
                continue;
            }
            let mut entries: Vec<(usize, Scalar)> = vec![(free, Scalar::one())];
            if let Some(cols) = by_free.get(&free) {
                entries.extend(cols.iter().cloned());
            }
            entries.sort_by_key(|(c, _)| *c);
            // Normalize so the first nonzero entry in variable order is 1.
            let inv = entries[0].1.recip();
            let mut out = Assignment::new();
            for (col, value) in entries {
                let v = &value * &inv;
                if !v.is_zero() {
                    out.insert(sys.vars[col].clone(), v);
                }
            }
            basis.push(out);
        }
        basis
    }
}

fn row_sub_scaled(row: &Row, pivot: &Row, factor: &Scalar) -> Row {
    // row - factor * pivot, merging the two sorted supports.
    let mut out = Row::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        match (row.get(i), pivot.get(j)) {
            (Some((c1, v1)), Some((c2, v2))) if c1 == c2 => {
                let v = v1 - &(factor * v2);
                if !v.is_zero() {
                    out.push((*c1, v));
                }
                i += 1;
                j += 1;
            }
            (Some((c1, v1)), Some((c2, _))) if c1 < c2 => {
                out.push((*c1, v1.clone()));
                i += 1;
            }
            (Some(_), Some((c2, v2))) => {
                out.push((*c2, -(factor * v2)));
                j += 1;
            }
            (Some((c1, v1)), None) => {
                out.push((*c1, v1.clone()));
                i += 1;
            }
            (None, Some((c2, v2))) => {
                out.push((*c2, -(factor * v2)));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[(&[(&'static str, i64)], i64)]) -> LinearSystem<&'static str> {
        let mut s = LinearSystem::new();
        for (terms, rhs) in rows {
            s.add_row(
                terms.iter().map(|(k, c)| (*k, Scalar::from(*c))).collect(),
                Scalar::from(*rhs),
            );
        }
        s
    }

    #[test]
    fn symmetric_two_by_two() {
        let s = sys(&[(&[("x", 1), ("y", 1)], 1), (&[("x", 1), ("y", -1)], 0)]);
        let sol = s.solve_affine();
        let p = sol.particular.unwrap();
        assert_eq!(p["x"], Scalar::ratio(1, 2));
        assert_eq!(p["y"], Scalar::ratio(1, 2));
        assert_eq!(sol.nullspace.len(), 0);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn one_row_homogeneous() {
        let s = sys(&[(&[("x", 1), ("y", 1)], 0)]);
        let sol = s.solve_affine();
        assert_eq!(sol.rank, 1);
        assert_eq!(sol.nullspace.len(), 1);
        let v = &sol.nullspace[0];
        assert_eq!(v["x"], Scalar::one());
        assert_eq!(v["y"], -Scalar::one());
    }

    #[test]
    fn zero_matrix_nullspace_is_identity() {
        let mut s: LinearSystem<&'static str> = LinearSystem::new();
        for k in ["a", "b", "c"] {
            s.ensure_var(k);
        }
        let basis = s.nullspace().unwrap();
        assert_eq!(basis.len(), 3);
        for (i, v) in basis.iter().enumerate() {
            assert_eq!(v.len(), 1);
            assert_eq!(v[s.variables()[i]], Scalar::one());
        }
    }

    #[test]
    fn chain_of_equalities() {
        let s = sys(&[(&[("x", 1), ("y", -1)], 0), (&[("y", 1), ("z", -1)], 0)]);
        let basis = s.nullspace().unwrap();
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        assert_eq!(v["x"], Scalar::one());
        assert_eq!(v["y"], Scalar::one());
        assert_eq!(v["z"], Scalar::one());
    }

    #[test]
    fn dependent_rows_rank() {
        let empty: LinearSystem<&'static str> = LinearSystem::new();
        assert_eq!(empty.rank(), 0);
        let s = sys(&[(&[("x", 1), ("y", 1)], 0), (&[("x", 2), ("y", 2)], 0)]);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn inconsistent_is_a_value() {
        let s = sys(&[(&[("x", 1)], 1), (&[("x", 1)], 2)]);
        let sol = s.solve_affine();
        assert!(sol.particular.is_none());
        assert_eq!(sol.rank, 1);
    }

    #[test]
    fn nullspace_rejects_inhomogeneous() {
        let s = sys(&[(&[("x", 1)], 3)]);
        assert!(matches!(s.nullspace(), Err(LinearError::NonHomogeneous { .. })));
    }

    #[test]
    fn rank_plus_nullity_is_var_count() {
        let s = sys(&[
            (&[("x", 1), ("y", 2), ("z", -1)], 0),
            (&[("x", 2), ("y", 4), ("z", -2)], 0),
            (&[("y", 1), ("w", 1)], 0),
        ]);
        let sol = s.solve_affine();
        assert_eq!(sol.rank + sol.nullspace.len(), s.var_count());
    }
}
