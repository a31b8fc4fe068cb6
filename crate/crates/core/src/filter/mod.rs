//! Property filter expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := or
//! or      := and { "or" and }
//! and     := not { "and" not }
//! not     := "not" not | cmp
//! cmp     := add [ ("==" | "!=" | "<" | "<=" | ">" | ">=") add
//!                | "in" "(" literal { "," literal } ")" ]
//! add     := mul { ("+" | "-") mul }
//! mul     := unary { ("*" | "/") unary }
//! unary   := "-" unary | primary
//! primary := number | string | "true" | "false" | "null" | identifier
//!          | "props" "[" string "]" | "(" expr ")"
//! ```
//!
//! Comparisons do not chain. Evaluation uses three-valued logic: missing
//! keys, type mismatches and division by zero give `undefined`, which a
//! top-level filter treats as false.

mod eval;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use eval::{evaluate, evaluate_filter, EvalValue};
pub use lexer::{is_identifier, tokenize, Token, TokenKind};
pub use parser::parse_filter;

/// Syntax error with the character offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message} (expected {expected})")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub expected: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>, expected: impl Into<String>) -> Self {
        ParseError { offset, message: message.into(), expected: expected.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "or",
            BinaryOp::And => "and",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

/// Parsed filter. Number literals produced by the parser are non-negative
/// except inside `in` lists; negation is a [`UnaryOp::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterExpr {
    Literal(Literal),
    Property(String),
    Unary { op: UnaryOp, operand: Box<FilterExpr> },
    Binary { op: BinaryOp, lhs: Box<FilterExpr>, rhs: Box<FilterExpr> },
    In { operand: Box<FilterExpr>, members: Vec<Literal> },
}

impl FilterExpr {
    pub fn unary(op: UnaryOp, operand: FilterExpr) -> Self {
        FilterExpr::Unary { op, operand: Box::new(operand) }
    }

    pub fn binary(op: BinaryOp, lhs: FilterExpr, rhs: FilterExpr) -> Self {
        FilterExpr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn property(name: &str) -> Self {
        FilterExpr::Property(name.to_string())
    }

    pub fn number(v: f64) -> Self {
        FilterExpr::Literal(Literal::Number(v))
    }

    pub fn text(s: &str) -> Self {
        FilterExpr::Literal(Literal::Text(s.to_string()))
    }
}

fn write_string(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\'' => f.write_str("\\'")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            '\0' => f.write_str("\\0")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest decimal that round-trips, never in exponent form.
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write_string(f, s),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Null => f.write_str("null"),
        }
    }
}

/// Canonical, fully parenthesized text; [`parse_filter`] reads it back to an
/// identical tree.
impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Literal(Literal::Number(n)) if n.is_sign_negative() => {
                write!(f, "(-{})", -n)
            }
            FilterExpr::Literal(l) => write!(f, "{l}"),
            FilterExpr::Property(name) if is_identifier(name) => f.write_str(name),
            FilterExpr::Property(name) => {
                f.write_str("props[")?;
                write_string(f, name)?;
                f.write_str("]")
            }
            FilterExpr::Unary { op: UnaryOp::Neg, operand } => write!(f, "(-{operand})"),
            FilterExpr::Unary { op: UnaryOp::Not, operand } => write!(f, "(not {operand})"),
            FilterExpr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            FilterExpr::In { operand, members } => {
                write!(f, "({operand} in (")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("))")
            }
        }
    }
}

pub fn unparse(expr: &FilterExpr) -> String {
    expr.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{Properties, PropertyValue};

    fn props(pairs: &[(&str, PropertyValue)]) -> Properties {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn and_of_comparisons() {
        let e = parse_filter("prob > 0.5 and type == 'gland'").unwrap();
        let expected = FilterExpr::binary(
            BinaryOp::And,
            FilterExpr::binary(BinaryOp::Gt, FilterExpr::property("prob"), FilterExpr::number(0.5)),
            FilterExpr::binary(BinaryOp::Eq, FilterExpr::property("type"), FilterExpr::text("gland")),
        );
        assert_eq!(e, expected);
        assert_eq!(unparse(&e), "((prob > 0.5) and (type == 'gland'))");
    }

    #[test]
    fn arithmetic_precedence() {
        let e = parse_filter("1 + 2 * 3 == 7").unwrap();
        assert_eq!(unparse(&e), "((1 + (2 * 3)) == 7)");
        assert!(evaluate_filter(&e, &Properties::new()));
    }

    #[test]
    fn chained_comparison_rejected() {
        let err = parse_filter("a < b < c").unwrap_err();
        assert_eq!(err.offset, 6);
    }

    #[test]
    fn simple_unparse() {
        assert_eq!(unparse(&FilterExpr::Literal(Literal::Bool(true))), "true");
        assert_eq!(unparse(&FilterExpr::unary(UnaryOp::Neg, FilterExpr::property("x"))), "(-x)");
    }

    #[test]
    fn evaluation_examples() {
        let f = |src: &str, p: &Properties| evaluate_filter(&parse_filter(src).unwrap(), p);
        assert!(f("prob > 0.5", &props(&[("prob", 0.7.into())])));
        assert!(!f("missing > 0", &Properties::new()));
        assert!(f(
            "type in ('cell','gland') or score > 1/0",
            &props(&[("type", "cell".into())])
        ));
    }

    #[test]
    fn props_index_syntax() {
        let e = parse_filter("props['cell count'] >= 3").unwrap();
        assert_eq!(unparse(&e), "(props['cell count'] >= 3)");
        assert!(evaluate_filter(&e, &props(&[("cell count", 3.0.into())])));
    }
}
