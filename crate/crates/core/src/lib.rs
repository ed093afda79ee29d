//! Transfinite-machine realizability lab.
//!
//! The crate stacks up from exact ordinal arithmetic through bit-tape set
//! codings, membership-graph set codes, an infinitary formula language with
//! two independent truth evaluators, a transfinite machine simulator, and a
//! realizer engine with verified inference rules, axiom realizers, and an
//! oracle-backed verification mode.

pub mod axioms;
pub mod code;
pub mod corpus;
pub mod formula;
pub mod glued;
pub mod hfset;
pub mod ordinal;
pub mod otm;
pub mod realizer;
pub mod rsyntax;
pub mod rules;
pub mod suite;
pub mod tape;
pub mod truth;

pub use hfset::{parse_hfset, HFSet};
pub use ordinal::{godel_pair, godel_unpair, parse_ordinal, Ordinal, OrdinalBound, OrdinalError};
pub use tape::{BitTape, LowPair, OrdSet, TapeError};
