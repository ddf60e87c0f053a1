//! Forge and scoring harness for perturbed multi-step rule-reasoning
//! benchmarks.
//!
//! - [`logic`]: formulas, rules, facts, theories, truth-table semantics.
//! - [`inference`]: exact entailment, conservative answers, chaining traces.
//! - [`rewrite`]: equivalence-law rewriting and multi-law stacking.
//! - [`text`]: templated English rendering and parsing.
//! - [`vocab`]: attribute and entity word pools.
//! - [`genset`]: seeded base groups, variants, and dataset files.
//! - [`eval`]: scoring, baselines, and the accuracy/Δ report.
//! - [`remote`]: predictions from an HTTP model endpoint.

pub mod eval;
pub mod genset;
pub mod inference;
pub mod logic;
pub mod remote;
pub mod rewrite;
pub mod text;
pub mod vocab;
