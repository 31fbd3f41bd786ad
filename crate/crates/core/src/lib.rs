//! Numerical toolkit for analytic families of S-unimodal maps on `[-1, 1]`.
//!
//! The crate computes the mean of an observable against the absolutely
//! continuous invariant (SRB) measure along a parameter family in two
//! independent ways:
//!
//! * from periodic orbits, through the truncated inverse dynamical zeta
//!   function and the `s`-derivative of its leading zero ([`zeta`]);
//! * from an Ulam discretisation of the transfer operator ([`ulam`]).
//!
//! For families conjugated to a base map by an explicit motion the exact
//! answer is also available ([`response::exact_conjugacy_oracle`]).
//! Hyperbolicity of each map is measured by [`diagnostics`].

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod family;
pub mod kn;
pub mod orbits;
pub mod poly;
pub mod quadrature;
pub mod response;
mod roots;
pub mod selftest;
pub mod ulam;
pub mod zeta;

pub use error::{Error, ErrorClass, Result};
pub use family::{AnalyticMotion, MapAt, MapDescriptor, Observable, Side, Window};
