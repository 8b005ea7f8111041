//! Finite sparse linear combinations of basis vectors.

use crate::basis::{BasisId, Parity};
use crate::scalar::Scalar;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Sparse element: sorted `(index, coefficient)` pairs, no zero coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Element<I: BasisId> {
    terms: Vec<(I, Scalar)>,
}

impl<I: BasisId> Element<I> {
    pub fn zero() -> Self {
        Element { terms: Vec::new() }
    }

    pub fn singleton(index: I, coeff: Scalar) -> Self {
        if coeff.is_zero() {
            Element::zero()
        } else {
            Element { terms: vec![(index, coeff)] }
        }
    }

    pub fn basis(index: I) -> Self {
        Element::singleton(index, Scalar::one())
    }

    /// Builds from arbitrary terms, combining duplicates and dropping zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (I, Scalar)>) -> Self {
        let mut v: Vec<(I, Scalar)> = terms.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut packed: Vec<(I, Scalar)> = Vec::with_capacity(v.len());
        for (i, c) in v {
            match packed.last_mut() {
                Some((last, acc)) if *last == i => *acc += &c,
                _ => packed.push((i, c)),
            }
        }
        packed.retain(|(_, c)| !c.is_zero());
        Element { terms: packed }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(I, Scalar)> {
        self.terms.iter()
    }

    /// Coefficient of `index` (zero if absent).
    pub fn coeff(&self, index: &I) -> Scalar {
        match self.terms.binary_search_by(|(i, _)| i.cmp(index)) {
            Ok(pos) => self.terms[pos].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Element::zero();
        }
        Element { terms: self.terms.iter().map(|(i, v)| (i.clone(), v * c)).collect() }
    }

    pub fn add_assign_scaled(&mut self, other: &Element<I>, c: &Scalar) {
        if c.is_zero() || other.is_zero() {
            return;
        }
        *self = merge(self, other, c);
    }

    /// Common parity of all terms; `None` if mixed. Zero counts as even.
    pub fn parity(&self) -> Option<Parity> {
        let mut it = self.terms.iter().map(|(i, _)| i.parity());
        let first = match it.next() {
            Some(p) => p,
            None => return Some(Parity::Even),
        };
        if it.all(|p| p == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn map_indices<J: BasisId>(&self, f: impl Fn(&I) -> J) -> Element<J> {
        Element::from_terms(self.terms.iter().map(|(i, c)| (f(i), c.clone())))
    }
}

fn merge<I: BasisId>(a: &Element<I>, b: &Element<I>, factor: &Scalar) -> Element<I> {
    let mut out: Vec<(I, Scalar)> = Vec::with_capacity(a.terms.len() + b.terms.len());
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() || j < b.terms.len() {
        let take_a = match (a.terms.get(i), b.terms.get(j)) {
            (Some((ia, _)), Some((ib, _))) => {
                if ia == ib {
                    let v = &a.terms[i].1 + &(factor * &b.terms[j].1);
                    if !v.is_zero() {
                        out.push((ia.clone(), v));
                    }
                    i += 1;
                    j += 1;
                    continue;
                }
                ia < ib
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!(),
        };
        if take_a {
            out.push(a.terms[i].clone());
            i += 1;
        } else {
            let (ib, vb) = &b.terms[j];
            let v = factor * vb;
            if !v.is_zero() {
                out.push((ib.clone(), v));
            }
            j += 1;
        }
    }
    Element { terms: out }
}

impl<I: BasisId> Add for &Element<I> {
    type Output = Element<I>;
    fn add(self, rhs: &Element<I>) -> Element<I> {
        merge(self, rhs, &Scalar::one())
    }
}

impl<I: BasisId> Sub for &Element<I> {
    type Output = Element<I>;
    fn sub(self, rhs: &Element<I>) -> Element<I> {
        merge(self, rhs, &-Scalar::one())
    }
}

impl<I: BasisId> Neg for &Element<I> {
    type Output = Element<I>;
    fn neg(self) -> Element<I> {
        self.scale(&-Scalar::one())
    }
}

impl<I: BasisId> Mul<&Scalar> for &Element<I> {
    type Output = Element<I>;
    fn mul(self, rhs: &Scalar) -> Element<I> {
        self.scale(rhs)
    }
}

impl<I: BasisId> fmt::Display for Element<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "{i}")?;
            } else {
                write!(f, "{c}*{i}")?;
            }
        }
        Ok(())
    }
}

impl<I: BasisId> fmt::Debug for Element<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
