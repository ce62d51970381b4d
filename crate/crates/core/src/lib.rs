//! Temporal Datalog over data streams.
//!
//! The crate provides a program model and text format, a bottom-up
//! evaluation engine, decision procedures for definitive answers and for
//! forgetting, delay and window analysis for offline streaming, and the
//! streaming drivers built on top of them.

pub mod engine;
pub mod bruteforce;
pub mod containment;
pub mod dtp;
pub mod error;
pub mod forget;
pub mod model;
pub mod offline;
pub mod stream;
pub mod textio;

pub use error::{DecisionError, EngineError, ParseError, StreamError};
pub use model::{Atom, Dataset, Fact, Program, Query, Rule, Symbol, Term, TimeTerm, Tuple};
