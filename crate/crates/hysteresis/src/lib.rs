//! Path-dependent stochastic policy problems: functional derivatives of path
//! functionals, semimartingale decompositions of conditional-expectation
//! processes, the stochastic hysteresis elasticity, optimal policy dynamics
//! and a Pigouvian-tax application, with exact oracles to check them against.

pub mod condexp;
pub mod dupire;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod malliavin;
pub mod nodes;
pub mod oracles;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{BrownianEnsemble, PathMatrix, SamplePath, TimeGrid};
