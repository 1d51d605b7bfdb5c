//! Core library of `lampi`, a proof checker for the lambda-Pi-calculus
//! modulo rewriting.
//!
//! Signature files declare typed symbols and rewrite rules; terms are then
//! checked with a conversion relation generated by beta-reduction together
//! with the declared rules. The pieces:
//!
//! * [`term`] — terms, binding, substitution, alpha-equivalence;
//! * [`parser`] — concrete syntax to scoped declarations;
//! * [`signature`] — the global context of static/definable symbols;
//! * [`reduction`] — pattern matching, normalization, conversion;
//! * [`typing`] — the bidirectional checker;
//! * [`ruletyping`] — validation of rewrite rules, most general typing
//!   substitutions, guards;
//! * [`driver`] — file checking and directives;
//! * [`tpdb`] — export of the rewrite rules to the old TPDB format;
//! * [`corpus`] — the shipped example library with expected outcomes.

pub mod error;
pub mod loc;
pub mod term;
pub mod pretty;
pub mod parser;
pub mod signature;
pub mod reduction;
pub mod typing;
pub mod ruletyping;
pub mod driver;
pub mod tpdb;
pub mod corpus;

pub use error::{Error, ErrorCode, Result};
pub use loc::Location;
pub use pretty::print_term;
pub use reduction::{CheckedRule, Engine, Limits, Pattern};
pub use signature::{Entry, Signature, Sort, SymbolKind};
pub use term::{alpha_equal, instantiate, substitute, Name, RTerm, Substitution, Term, TypingContext};
