use std::cmp::Ordering;

use super::{BinaryOp, FilterExpr, Literal, UnaryOp};
use crate::store::{Properties, PropertyValue};

/// Runtime value. `Undefined` comes from missing keys and propagates through
/// type mismatches.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalValue {
    Number(f64),
    Text(String),
    Bool(bool),
    Null,
    Undefined,
}

impl From<&Literal> for EvalValue {
    fn from(l: &Literal) -> Self {
        match l {
            Literal::Number(n) => EvalValue::Number(*n),
            Literal::Text(s) => EvalValue::Text(s.clone()),
            Literal::Bool(b) => EvalValue::Bool(*b),
            Literal::Null => EvalValue::Null,
        }
    }
}

impl From<&PropertyValue> for EvalValue {
    fn from(v: &PropertyValue) -> Self {
        match v {
            PropertyValue::Number(n) => EvalValue::Number(*n),
            PropertyValue::Text(s) => EvalValue::Text(s.clone()),
            PropertyValue::Bool(b) => EvalValue::Bool(*b),
            PropertyValue::Null => EvalValue::Null,
        }
    }
}

/// Kleene truth value of an operand of `and`/`or`/`not`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

fn truth(v: &EvalValue) -> Truth {
    match v {
        EvalValue::Bool(true) => Truth::True,
        EvalValue::Bool(false) => Truth::False,
        _ => Truth::Unknown,
    }
}

fn from_truth(t: Truth) -> EvalValue {
    match t {
        Truth::True => EvalValue::Bool(true),
        Truth::False => EvalValue::Bool(false),
        Truth::Unknown => EvalValue::Undefined,
    }
}

/// Ordering between two values of the same comparable type.
fn compare(a: &EvalValue, b: &EvalValue) -> Option<Ordering> {
    match (a, b) {
        (EvalValue::Number(x), EvalValue::Number(y)) => x.partial_cmp(y),
        (EvalValue::Text(x), EvalValue::Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// Equality between two values of the same type; `None` on mismatch.
fn equal(a: &EvalValue, b: &EvalValue) -> Option<bool> {
    match (a, b) {
        (EvalValue::Number(x), EvalValue::Number(y)) => Some(x == y),
        (EvalValue::Text(x), EvalValue::Text(y)) => Some(x == y),
        (EvalValue::Bool(x), EvalValue::Bool(y)) => Some(x == y),
        (EvalValue::Null, EvalValue::Null) => Some(true),
        _ => None,
    }
}

fn arithmetic(op: BinaryOp, a: &EvalValue, b: &EvalValue) -> EvalValue {
    let (EvalValue::Number(x), EvalValue::Number(y)) = (a, b) else {
        return EvalValue::Undefined;
    };
    let r = match op {
        BinaryOp::Add => x + y,
        BinaryOp::Sub => x - y,
        BinaryOp::Mul => x * y,
        BinaryOp::Div if *y == 0.0 => return EvalValue::Undefined,
        BinaryOp::Div => x / y,
        _ => unreachable!("not an arithmetic operator"),
    };
    if r.is_finite() {
        EvalValue::Number(r)
    } else {
        EvalValue::Undefined
    }
}

/// Evaluates `expr` to a value. Never fails.
pub fn evaluate(expr: &FilterExpr, props: &Properties) -> EvalValue {
    match expr {
        FilterExpr::Literal(l) => l.into(),
        FilterExpr::Property(key) => props.get(key).map_or(EvalValue::Undefined, Into::into),
        FilterExpr::Unary { op: UnaryOp::Neg, operand } => match evaluate(operand, props) {
            EvalValue::Number(n) => EvalValue::Number(-n),
            _ => EvalValue::Undefined,
        },
        FilterExpr::Unary { op: UnaryOp::Not, operand } => {
            from_truth(match truth(&evaluate(operand, props)) {
                Truth::True => Truth::False,
                Truth::False => Truth::True,
                Truth::Unknown => Truth::Unknown,
            })
        }
        FilterExpr::Binary { op: BinaryOp::Or, lhs, rhs } => {
            let l = truth(&evaluate(lhs, props));
            if l == Truth::True {
                return EvalValue::Bool(true);
            }
            from_truth(match (l, truth(&evaluate(rhs, props))) {
                (_, Truth::True) => Truth::True,
                (Truth::False, Truth::False) => Truth::False,
                _ => Truth::Unknown,
            })
        }
        FilterExpr::Binary { op: BinaryOp::And, lhs, rhs } => {
            let l = truth(&evaluate(lhs, props));
            if l == Truth::False {
                return EvalValue::Bool(false);
            }
            from_truth(match (l, truth(&evaluate(rhs, props))) {
                (_, Truth::False) => Truth::False,
                (Truth::True, Truth::True) => Truth::True,
                _ => Truth::Unknown,
            })
        }
        FilterExpr::Binary { op, lhs, rhs } => {
            let a = evaluate(lhs, props);
            let b = evaluate(rhs, props);
            match op {
                BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                    arithmetic(*op, &a, &b)
                }
                BinaryOp::Eq => equal(&a, &b).map_or(EvalValue::Undefined, EvalValue::Bool),
                BinaryOp::Ne => equal(&a, &b).map_or(EvalValue::Undefined, |e| EvalValue::Bool(!e)),
                BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => match compare(&a, &b) {
                    Some(ord) => EvalValue::Bool(match op {
                        BinaryOp::Lt => ord == Ordering::Less,
                        BinaryOp::Le => ord != Ordering::Greater,
                        BinaryOp::Gt => ord == Ordering::Greater,
                        _ => ord != Ordering::Less,
                    }),
                    None => EvalValue::Undefined,
                },
                BinaryOp::And | BinaryOp::Or => unreachable!("handled above"),
            }
        }
        FilterExpr::In { operand, members } => {
            let v = evaluate(operand, props);
            let mut comparable = false;
            for m in members {
                match equal(&v, &m.into()) {
                    Some(true) => return EvalValue::Bool(true),
                    Some(false) => comparable = true,
                    None => {}
                }
            }
            if comparable {
                EvalValue::Bool(false)
            } else {
                EvalValue::Undefined
            }
        }
    }
}

/// Evaluates a filter against an annotation's properties. Anything other
/// than `true` (including undefined) rejects the annotation.
pub fn evaluate_filter(expr: &FilterExpr, props: &Properties) -> bool {
    evaluate(expr, props) == EvalValue::Bool(true)
}
