//! Desk-scale computation in spaces with implicitly defined norms.
//!
//! This crate makes the classical constructions around Schlumprecht's space
//! and its hereditarily indecomposable relatives computable at toy scale:
//!
//! * exact sparse rational vectors and interval projections ([`vec`]),
//! * the function class calculus: submultiplicative hulls, concave
//!   envelopes and the derived function chain ([`funclass`], [`hull`]),
//! * norm engines: an exact dynamic program for the Schlumprecht norm,
//!   bracketed evaluation of the layered norm with special functionals,
//!   and the renormed norm driven by sigma-chained special functionals
//!   ([`engines`]),
//! * certificate-carrying constructions: `l1+` averages, rapidly
//!   increasing sequences, `(M,g)`-forms, the sigma registry, special
//!   sequences and asymptotic biorthogonal systems ([`constructions`]),
//! * quantitative lemma verifiers and the two witness experiments
//!   ([`harness`]).
//!
//! Everything numeric is either an exact rational, an exact element of the
//! value field generated by `log2` of integers (see [`value`]), or an
//! explicitly precision-tagged approximation. Faithful-scale parameters are
//! never silently approximated: operations that would need them refuse with
//! a symbolic threshold.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bigfloat;
pub mod constructions;
pub mod engines;
pub mod funclass;
pub mod harness;
pub mod hull;
pub mod rat;
pub mod value;
pub mod vec;

pub use engines::{EngineError, NormEval, NormResult};
pub use rat::Rat;
pub use value::Val;
pub use vec::{FinVec, Interval};
