//! The three reductions played on the preimage game: parity blinding,
//! factoring from square roots, and collision extraction from a
//! deterministic solver.
//!
//! Solvers that do the "impossible" part of each game (computing parity,
//! choosing square roots, picking preimages) are test doubles. The ones that
//! need secret data hold it in private fields that never reach a transcript.

use thiserror::Error;

use crate::bitparity::BitError;
use crate::numtheory::{Nat, NumError};
use crate::protocol::{ProtocolError, Transcript};

pub mod factoring;
pub mod parity;
pub mod wphp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Bits(#[from] BitError),
    #[error(transparent)]
    Number(#[from] NumError),
    #[error("parameter space too large for exhaustive audit: about {estimate} inputs (limit {limit})")]
    TooLarge { estimate: String, limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutcomeKind {
    ParityDecision(bool),
    ParityAbort,
    /// The run ended without abort but also without an accepted answer,
    /// e.g. an unsound solver ran out of budget.
    ParityFail,
    Factor(Nat),
    FactorFail,
    Collision(Nat, Nat),
    CollisionFail,
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ParityDecision(_) => "parity_decision",
            Self::ParityAbort => "parity_abort",
            Self::ParityFail => "parity_fail",
            Self::Factor(_) => "factor",
            Self::FactorFail => "factor_fail",
            Self::Collision(..) => "collision",
            Self::CollisionFail => "collision_fail",
        }
    }
}

/// How many indices the solver never asked about, and at how many of them
/// its witness split the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexTally {
    pub unused: usize,
    pub factoring: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutcome<V> {
    pub kind: OutcomeKind,
    /// Absent when the reduction finished before any game was played.
    pub transcript: Option<Transcript<V>>,
    pub tally: Option<IndexTally>,
}
