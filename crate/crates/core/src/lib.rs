//! Graphical and numerical tools for time-dependent mediation analysis with
//! survival outcomes.
//!
//! * [`graph_core`], [`transform`], [`separation`]: rolled and unrolled graphs,
//!   d-separation and δ-separation.
//! * [`mediation`]: graphical checks of the mediation assumptions.
//! * [`discrete_scm`]: exact discrete structural models and the mediational g-formula.
//! * [`survival`]: Cox-based estimation of direct and indirect survival effects.
//! * [`hawkes`]: linear Hawkes processes and covariance-based identification.
//! * [`random`], [`selftest`]: seeded generators and the property suites built on them.

pub mod catalog;
pub mod discrete_scm;
pub mod graph_core;
pub mod hawkes;
pub mod mediation;
pub mod random;
pub mod selftest;
pub mod separation;
pub mod survival;
pub mod transform;
