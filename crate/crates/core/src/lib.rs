//! Simulation of budgeted witnessing games: a solver that asks a teacher for
//! a few preimages and must then produce preimages for a whole sequence, and
//! the reductions that turn such a solver into a parity decider, a factoring
//! algorithm, or a collision finder.

pub mod bitparity;
pub mod experiments;
pub mod numtheory;
pub mod protocol;
pub mod reductions;
pub mod seeding;
