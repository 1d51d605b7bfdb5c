//! The error type shared by every checking stage.
//!
//! Each error carries a stable machine-readable code (what kind of failure),
//! a rendered message with the offending terms printed, and the source
//! location when one is known. The driver fills in the declaration location
//! for errors raised on location-free terms.

use crate::loc::Location;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCode {
    // lexing / parsing / scoping
    Lexical,
    Syntax,
    UnknownIdentifier,
    ShadowedRuleVariable,
    UnusedRuleVariable,
    MisplacedWildcard,
    MisplacedGuard,
    // signature
    DuplicateName,
    StaticHead,
    UnknownHead,
    RedefinedSymbol,
    // typing
    SortError,
    Mismatch,
    UnannotatedLambda,
    NotAProduct,
    UnboundVariable,
    KindMisuse,
    // rule typing
    NotAPattern,
    ArityOverflow,
    UnificationClash,
    OccursCheck,
    UnsolvableWithoutGuard,
    UntypableVariable,
    // reduction
    GuardViolation,
    StepBudgetExceeded,
    // driver
    ConvFailed,
    MissingModule,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        use ErrorCode::*;
        match self {
            Lexical => "lexical",
            Syntax => "syntax",
            UnknownIdentifier => "unknown-identifier",
            ShadowedRuleVariable => "shadowed-rule-variable",
            UnusedRuleVariable => "unused-rule-variable",
            MisplacedWildcard => "misplaced-wildcard",
            MisplacedGuard => "misplaced-guard",
            DuplicateName => "duplicate-name",
            StaticHead => "static-head",
            UnknownHead => "unknown-head",
            RedefinedSymbol => "redefined-symbol",
            SortError => "sort-error",
            Mismatch => "mismatch",
            UnannotatedLambda => "unannotated-lambda",
            NotAProduct => "not-a-product",
            UnboundVariable => "unbound-variable",
            KindMisuse => "kind-misuse",
            NotAPattern => "not-a-pattern",
            ArityOverflow => "arity-overflow",
            UnificationClash => "unification-clash",
            OccursCheck => "occurs-check",
            UnsolvableWithoutGuard => "unsolvable-without-guard",
            UntypableVariable => "untypable-variable",
            GuardViolation => "guard-violation",
            StepBudgetExceeded => "step-budget-exceeded",
            ConvFailed => "conv-failed",
            MissingModule => "missing-module",
            Io => "io",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Error {
    pub code: ErrorCode,
    pub msg: String,
    pub loc: Option<Location>,
}

impl Error {
    pub fn new(code: ErrorCode, msg: impl Into<String>) -> Self {
        Error { code, msg: msg.into(), loc: None }
    }

    pub fn at(mut self, loc: Location) -> Self {
        self.loc = Some(loc);
        self
    }

    /// Attaches `loc` only when the error does not already carry one.
    pub fn locate(mut self, loc: &Location) -> Self {
        if self.loc.is_none() {
            self.loc = Some(loc.clone());
        }
        self
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.loc {
            Some(loc) => write!(f, "{}: error[{}]: {}", loc, self.code, self.msg),
            None => write!(f, "error[{}]: {}", self.code, self.msg),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
