//! Lamplighter random walks on graphs, their return probabilities, and the
//! percolation mixture that describes their spectrum.
//!
//! The switch-walk-switch lamplighter walk with `m` lamp states returns to
//! its starting state with the same probability as the absorbing walk on a
//! Bernoulli(`1/m`) site-percolation cluster of the base point, averaged over
//! the cluster. The modules here compute both sides exactly on small graphs,
//! decompose the mixture into lattice-animal contributions, and build explicit
//! finitely supported eigenfunctions of the lamplighter operator.

pub mod animal;
pub mod eigenbasis;
pub mod error;
pub mod exact;
pub mod graph;
pub mod matrix;
pub mod percolation;
pub mod spectral;
pub mod walk;

pub use animal::{enumerate_animals, Animal};
pub use error::{Error, Result};
pub use exact::{Arithmetic, Probability, Value};
pub use graph::{kernel, FiniteKernel, Graph, GraphSpec, Label, WalkKernel};
pub use walk::{Configuration, LampVector, LamplighterOperator};
