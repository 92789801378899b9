//! Refuters for deterministic algorithms that claim to decide hard languages.

pub mod bits;
pub mod circuit;
pub mod compile;
pub mod counting;
pub mod decider;
pub mod dimacs;
pub mod dsr;
pub mod error;
pub mod harness;
pub mod instance;
pub mod list;
pub mod mcsp;
pub mod oracle;
pub mod prefix;

pub use bits::BitString;
pub use circuit::{BooleanCircuit, Gate, GateOp, Wire};
pub use error::{Error, ParseError, Result};
pub use instance::{
    Codec, Decoded, Formula3CNF, Instance, Layout, Lit, QBFormula, Quantifier, ThresholdInstance, TruthTable,
};
