//! Simulation and analysis toolkit for the repeated, asymmetric game between
//! AI users and AI creators, where user trust is modelled as reduced
//! monitoring.
//!
//! The crate is organised by analysis route:
//!
//! * [`game`] holds the payoff table, population fitness and the closed-form
//!   fitness differences every other module builds on.
//! * [`finite`] covers stochastic dynamics in two finite populations: Fermi
//!   imitation, fixation probabilities and the small-mutation Markov chain.
//! * [`replicator`] integrates the multi-population replicator equations and
//!   classifies their equilibria.
//! * [`qlearn`] runs two co-adapting populations of stateless Q-learners.
//! * [`io`] reads and writes the CSV artifacts produced by the CLI.

pub mod config;
pub mod error;
pub mod finite;
pub mod game;
pub mod io;
pub mod linalg;
pub mod params;
pub mod qlearn;
pub mod replicator;

pub use error::{Error, Result};
pub use game::{PayoffTable, PopulationMix};
pub use params::{CreatorStrategy, GameParams, UserStrategy};
