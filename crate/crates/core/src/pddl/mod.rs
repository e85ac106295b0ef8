//! Typed-STRIPS subset of the PDDL planning language.
//!
//! Accepted: `:strips`/`:typing` requirements, flat type lists, typed
//! predicate signatures, and actions whose precondition is a conjunction of
//! positive atoms and whose effect is a conjunction of atoms and negated
//! atoms. Everything else (disjunction, quantifiers, conditional effects,
//! equality, numeric fluents, constants, durative actions) is rejected with
//! the line and column of the offending token. Identifiers are
//! case-insensitive and normalized to lower case.

mod parse;
mod sexp;
mod write;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::symbolic::{Goal, GroundAtom, LiftedOperator, Object, PredicateSig};

pub use parse::{parse_domain, parse_problem};
pub use sexp::{Pos, MAX_DEPTH};
pub use write::{serialize_domain, serialize_problem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(String),
    Syntax(String),
    UnknownSection,
    Unsupported(String),
    UnknownType,
    UndeclaredObject,
    UndeclaredPredicate,
    UndeclaredVariable,
    Duplicate(String),
    Arity { expected: usize, found: usize },
    TypeMismatch { expected: String, found: String },
    DomainMismatch { expected: String },
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lexical(m) => write!(f, "lexical error: {m}"),
            Self::Syntax(m) => write!(f, "syntax error: {m}"),
            Self::UnknownSection => f.write_str("unknown section"),
            Self::Unsupported(what) => write!(f, "unsupported construct: {what}"),
            Self::UnknownType => f.write_str("unknown type"),
            Self::UndeclaredObject => f.write_str("undeclared object"),
            Self::UndeclaredPredicate => f.write_str("undeclared predicate"),
            Self::UndeclaredVariable => f.write_str("undeclared variable"),
            Self::Duplicate(what) => write!(f, "duplicate {what}"),
            Self::Arity { expected, found } => {
                write!(
                    f,
                    "arity mismatch: expected {expected} argument(s), found {found}"
                )
            }
            Self::TypeMismatch { expected, found } => {
                write!(f, "type mismatch: expected `{expected}`, found `{found}`")
            }
            Self::DomainMismatch { expected } => {
                write!(f, "problem refers to a domain other than `{expected}`")
            }
            Self::Invalid(m) => f.write_str(m),
        }
    }
}

/// Parse failure with the 1-based position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, token: impl Into<String>, kind: ParseErrorKind) -> Self {
        Self {
            line: pos.line,
            column: pos.column,
            token: token.into(),
            kind,
        }
    }
}

/// A parsed domain file. Feature dimensions and classifiers are bound later
/// against an environment registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpec {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateSig>,
    pub operators: Vec<LiftedOperator>,
}

impl DomainSpec {
    pub fn operator(&self, name: &str) -> Option<&LiftedOperator> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateSig> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Object>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: Goal,
}
