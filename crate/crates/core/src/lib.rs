//! Exact arithmetic and decision procedures for henselian valued fields.
//!
//! The crate is organized around a tower model of valued fields: a base field
//! (prime field, small finite field, or the rationals) extended by series and
//! completion layers, each layer contributing one factor to the value group.
//! On top of that sit decision procedures for membership in formula-defined
//! subsets (Kummer and Artin-Schreier solvability, the R_a sets and the
//! explicit existential-universal valuation-ring formula), a small first-order
//! formula language with power predicates, and an executable form of the
//! power-series counterexample to existential definability.

pub mod construction;
pub mod decision;
pub mod formula_lang;
pub mod ordered_groups;
pub mod residue_fields;
pub mod solvers;
pub mod suite;
pub mod valued_fields;

pub use decision::{Decision, DecisionResult};
