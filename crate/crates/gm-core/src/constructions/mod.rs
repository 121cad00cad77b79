//! Certificate-carrying constructions: `l1+` averages, rapidly increasing
//! sequences, `(M,g)`-forms, the sigma registry with special sequences, and
//! asymptotic biorthogonal systems.
//!
//! Every constructor returns a certificate that re-validates from scratch
//! against an engine: the quantities each lemma ranges over are carried
//! explicitly, and growth conditions record both the required and the
//! achieved value, so toy relaxations are visible, never silent.

mod averages;
mod biorth;
mod mgform;
mod ris;
mod sigma;

pub use averages::{
    find_l1plus_average, lemma2_bound, BlockSource, Ell1PlusCertificate, ExplicitBlocks,
    SeededSingletonBlocks, UnitBlocks,
};
pub use biorth::{
    biorth_build, biorth_materialize, biorth_validate, BiorthReport, BiorthSystem,
    MaterializedLevel, MaterializedSystem,
};
pub use mgform::MgForm;
pub use ris::{lambda_length, ris_build, RISCertificate};
pub use sigma::{
    special_functional, special_sequence_build, AStarMember, AStarSource, CoordinateAStar,
    SigmaCodomain, SigmaError, SigmaRegistry, SpecialSequence,
};

use alloc::string::String;

/// One recorded growth condition: what the faithful construction requires,
/// what the toy construction achieved, and whether the faithful requirement
/// itself is met.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ConditionSlack {
    pub name: String,
    pub required: String,
    pub achieved: String,
    pub satisfied_faithfully: bool,
}
