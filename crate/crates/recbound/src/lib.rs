//! Synthesis of worst-case resource bounds for recursive integer programs.
//!
//! The pipeline parses a small imperative language with recursion and
//! nondeterministic branching, builds per-function control-flow graphs,
//! and synthesizes measure functions (upper bounds on the worst-case
//! number of execution steps) over templates that may contain logarithmic
//! or fractional-power terms. Candidate templates are turned into linear
//! constraints by abstracting logarithms, powers and floors with fresh
//! variables bounded by sound linear inequalities, and the resulting
//! positivity obligations are discharged with Handelman-style certificates
//! found by an exact rational LP solver.

pub mod abstraction;
pub mod cfg;
pub mod constraints;
pub mod expansion;
pub mod frontend;
pub mod invariant;
pub mod lpsolve;
pub mod poly;
pub mod positivstellensatz;
pub mod semantics;
pub mod template;
pub mod rat;
