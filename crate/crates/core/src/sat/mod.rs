//! Formula construction, CNF lowering, solving and the `verify` pipeline.

pub mod cardinality;
pub mod cnf;
pub mod encode;
pub mod formula;
pub mod solver;
pub mod verify;

pub use cardinality::{at_most_k, Lit};
pub use cnf::{emit_dimacs, parse_dimacs, tseitin_cnf, Cnf};
pub use encode::{build_fr_formula, FrFormula};
pub use formula::{Formula, NodeId, VarRole};
pub use solver::{solve_cnf, SatResult, SolverError};
