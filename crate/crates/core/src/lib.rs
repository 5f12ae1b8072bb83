//! Elastic graphs and the energies of maps between them.
//!
//! The crate is organised bottom-up: [`graph`] holds the combinatorial
//! multigraph and its decorations, [`curves`] the weighted closed curves,
//! [`maps`] piecewise-linear graph maps and their energies, [`harmonic`]
//! the Dirichlet minimiser, [`covers`] covering maps and virtual
//! endomorphism iteration, [`emb`] the embedding-energy iteration and
//! brackets, and [`obstruction`] the annular obstruction check.

pub mod covers;
pub mod curves;
pub mod emb;
pub mod error;
pub mod graph;
pub mod harmonic;
pub mod io;
pub mod maps;
pub mod obstruction;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{Dir, End, Graph, HalfEdge};
pub use scalar::Scalar;
