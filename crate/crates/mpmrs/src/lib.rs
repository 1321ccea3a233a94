//! Maximally parallel multiset rewriting systems: execution semantics,
//! compilation of register machines with rule-minimization passes, the
//! embedded 23-rule universal system, co-simulation against a
//! register-machine oracle, and a flow-graph notation.

pub mod antiport;
pub mod compiler;
pub mod engine;
pub mod error;
pub mod machine;
pub mod multiset;
pub mod notation;
pub mod system;
pub mod universal;

pub use error::{Error, Result};
pub use multiset::{Multiset, Symbol};
pub use system::{FsMpmrsSystem, MpmrsSystem, RewriteRule};
