//! Nash and Wardrop equilibria of aggregative games with linear coupling
//! constraints: game model, projections, game operators, decentralized
//! solvers, equilibrium analysis, and two applications (EV charging and
//! route choice).

pub mod algorithms;
pub mod analysis;
pub mod applications;
pub mod cli;
pub mod error;
pub mod game;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod projection;
pub mod rng;

pub use error::{Error, Result};
