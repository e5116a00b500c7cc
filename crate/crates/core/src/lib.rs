//! Stabilization of constrained switched linear systems by pruning the
//! edges of the automaton that constrains the switching, while keeping the
//! entropy of the remaining switching language as large as possible.

pub mod automaton;
pub mod budget;
pub mod css;
pub mod io;
pub mod linalg;
pub mod models;
pub mod nodenorm;
pub mod oracle;
pub mod stabilizer;

pub use automaton::{Automaton, AutomatonError, Cycle, Edge, NodeId, Symbol, Word};
pub use css::{Certificate, Css, CssError, MatrixNorm};
pub use budget::{Budget, BudgetExceeded, DEFAULT_BUDGET};
pub use oracle::{oracle, OracleConfig, OracleVerdict};
pub use linalg::{LinalgError, Matrix};
pub use stabilizer::{optimal_stabilize, stabilize, stabilize_impl, OptimalResult, StabilizationTrace, StabilizeError};
