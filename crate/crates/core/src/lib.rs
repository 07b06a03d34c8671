//! Weak-selection fixation of a binary opinion on weighted networks.
//!
//! The crate computes the fixation probability of opinion A under
//! pairwise-comparison (Fermi) dynamics to first order in the selection
//! intensity, using expected coalescence times of two and three random
//! walkers on the lazy neutral walk. It also derives the critical
//! positive-feedback ratio `(a/d)*` and negative-feedback ratio `(b/c)*`
//! above which opinion A is favored, and validates everything against a
//! Monte Carlo simulator and an exact absorbing-chain solver on small
//! graphs.

pub mod arbitration;
pub mod coalescence;
pub mod dynamics;
pub mod graph;
mod solver;
pub mod theory;

pub use coalescence::{pair_times, triple_times, Convention, PairTimes, TripleTimes};
pub use dynamics::{
    estimate_fixation, exact_fixation, weak_slope_oracle, OpinionState, SimEstimate,
};
pub use graph::{GraphError, WeightedGraph};
pub use theory::{
    critical_ratio_ad, critical_ratio_bc, dprime_expectation, GameScores, WeakSelectionReport,
};
