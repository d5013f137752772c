//! Numerical laboratory for collective experimentation with correlated payoffs.
//!
//! Agents vote continuously between a safe flow `s` and a risky action that
//! pays good types Poisson lump sums. Types are correlated through a hidden
//! state, and unsure voters learn about it by conditioning on being pivotal.
//!
//! * [`model`]: parameters, standing assumptions, belief updates
//! * [`equilibrium`]: finite-population cut-off
//! * [`asymptotics`]: large-population limits and the aggregation threshold
//! * [`simulator`]: seeded Monte Carlo with exact binomial oracles

pub mod asymptotics;
pub mod equilibrium;
pub mod model;
pub mod simulator;
pub mod stats;

pub use asymptotics::{Aggregation, AsymptoticProfile, Branch};
pub use equilibrium::{solve_cutoff, CutoffSolution, QuorumRule};
pub use model::{ModelParams, RawParams, State};
