//! Numerical laboratory for walks on finite windows of infinite transient
//! weighted graphs.
//!
//! The crate realizes an infinite graph as a finite window together with an
//! exhaustion by nested connected levels. On top of that it provides
//!
//! * [`graph`] — weighted graphs, exhaustions, wired quotients and the
//!   built-in example families,
//! * [`potential`] — harmonic extension under free and wired boundary
//!   conditions, Green matrices, equilibrium measures, currents and
//!   effective resistances,
//! * [`samplers`] — random-walk Monte Carlo: conditioned walks, the windowed
//!   interlacement point process and the truncated reflected walk,
//! * [`forests`] — Wilson's algorithm, first-entry (Aldous–Broder) forest
//!   extraction, exact edge marginals and a brute-force tree enumerator,
//! * [`compare`] — total-variation and path-metric diagnostics plus the
//!   headline equivalence report.
//!
//! Every limit "as the graph grows" is reported as a sequence over exhaustion
//! levels with convergence diagnostics; nothing pretends to compute on the
//! infinite graph itself.

pub mod compare;
pub mod error;
pub mod forests;
pub mod graph;
pub mod potential;
pub mod samplers;

pub use error::{Error, Result};
