//! One module per subcommand family.

pub mod estimate;
pub mod graph;
pub mod hawkes;
pub mod scm;
pub mod selftest;
