//! Random-quench unitary designs and randomized-measurement estimation of
//! Rényi entropies in lattice models.

pub mod chaos;
pub mod cli;
pub mod config;
pub mod error;
pub mod hilbert;
pub mod imperfect;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod protocol;
pub mod renyi;
pub mod rng;
pub mod states;
pub mod unitaries;

pub use error::{Error, Result};
