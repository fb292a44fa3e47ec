//! f-divergence constrained policy improvement.

pub mod bandit;
pub mod cli;
pub mod distribution;
pub mod divergence;
pub mod env;
pub mod harness;
pub mod mdp;
pub mod schedule;
pub mod solver;
pub mod table;
