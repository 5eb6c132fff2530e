//! Computational engine for an overlapping-generations verifiable-disclosure
//! game: steady states, equilibrium cutoffs and verification, information
//! measures, Monte Carlo simulation, and one-shot benchmark comparisons.

pub mod cli;
pub mod equilibrium;
pub mod histories;
pub mod information;
pub mod model;
pub mod oneshot;
pub mod simulate;
pub mod steady_state;
pub mod strategy;
