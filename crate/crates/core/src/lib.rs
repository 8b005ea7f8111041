//! Exact computer algebra for Novikov superalgebras, Gel'fand-Dorfman
//! bialgebras and the quadratic conformal superalgebras they generate.
//!
//! Everything is computed over exact rationals: products are rule kernels on
//! graded bases, algebra laws are checked by evaluating their residuals on
//! finite sample windows, the formal-distribution layer manipulates exact
//! Laurent polynomials with polynomial-in-`∂` coefficients, and the windowed
//! classifier turns compatibility constraints into sparse linear systems and
//! matches their solution spaces against the closed-form families.

pub mod basis;
pub mod checks;
pub mod classifier;
pub mod conformal;
pub mod constructions;
pub mod element;
pub mod families;
pub mod linear;
pub mod rule;
pub mod scalar;
pub mod superalg;

pub use basis::{BasisId, BasisIndex, BasisSpec, LabelIndex, Parity, ParityRule};
pub use element::Element;
pub use rule::{commutator_rule, BilinearRule, GdStructure, RuleError};
pub use scalar::Scalar;
