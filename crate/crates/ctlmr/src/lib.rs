//! Explicit-state CTL model checking over partitioned state spaces.
//!
//! A state space is stored as a set of hash-partitioned text files in which
//! every state record carries the list of its *predecessor* identifiers, so
//! the counterimage `R⁻(W)` of a set of states is computable without any
//! global adjacency structure. CTL formulas are normalized to the
//! `{atomic, ¬, ∨, EX, EG, EU}` basis and evaluated bottom-up by an embedded
//! map/shuffle/reduce engine: `EX` is a single job, `EG` and `EU` are
//! fixed-point iterations of jobs that stop when two consecutive jobs emit
//! the same number of records (or the empty set).
//!
//! The [`oracle`] module is an independent sequential checker used as ground
//! truth in tests and via `--oracle-verify`; it shares no evaluation code
//! with the distributed path.

pub mod ctl;
pub mod engine;
mod error;
pub mod fixpoint;
pub mod hash;
pub mod kripke;
pub mod models;
pub mod oracle;
pub mod statespace;

pub use error::{Error, Result};
