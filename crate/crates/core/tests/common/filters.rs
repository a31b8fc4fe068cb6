//! Golden filter expressions and generators for parser-producible trees.

use proptest::prelude::*;
use tileviz_core::filter::{BinaryOp, EvalValue, FilterExpr, Literal, UnaryOp};
use tileviz_core::store::{Properties, PropertyValue};

pub fn fixture() -> Properties {
    let mut p = Properties::new();
    p.insert("prob".into(), PropertyValue::Number(0.7));
    p.insert("type".into(), PropertyValue::Text("gland".into()));
    p.insert("area".into(), PropertyValue::Number(120.0));
    p.insert("flag".into(), PropertyValue::Bool(true));
    p.insert("note".into(), PropertyValue::Null);
    p.insert("cell id".into(), PropertyValue::Number(5.0));
    p
}

/// (source, canonical form)
pub const CANONICAL: &[(&str, &str)] = &[
    ("a or b and c", "(a or (b and c))"),
    ("a and b or c", "((a and b) or c)"),
    ("not a and b", "((not a) and b)"),
    ("not not a", "(not (not a))"),
    ("1 + 2 * 3", "(1 + (2 * 3))"),
    ("(1 + 2) * 3", "((1 + 2) * 3)"),
    ("a - b - c", "((a - b) - c)"),
    ("a / b / c", "((a / b) / c)"),
    ("-a * b", "((-a) * b)"),
    ("- - 3", "(-(-3))"),
    ("a + 1 > b * 2 and c", "(((a + 1) > (b * 2)) and c)"),
    ("a == b or not c != d", "((a == b) or (not (c != d)))"),
    ("x in (1, -2, 'a', true, null)", "(x in (1, -2, 'a', true, null))"),
    ("props['cell id'] > 3", "(props['cell id'] > 3)"),
    ("\"it's\" == 'x'", "('it\\'s' == 'x')"),
    ("1.50 + 2e3", "(1.5 + 2000)"),
    ("not a in (1)", "(not (a in (1)))"),
];

/// (source, value under `fixture()`)
pub fn evaluations() -> Vec<(&'static str, EvalValue)> {
    use EvalValue::*;
    vec![
        ("prob > 0.5", Bool(true)),
        ("prob > 0.5 and missing > 1", Undefined),
        ("prob < 0.5 and missing > 1", Bool(false)),
        ("prob > 0.5 or missing > 1", Bool(true)),
        ("prob < 0.5 or missing > 1", Undefined),
        ("not missing", Undefined),
        ("type == 'gland'", Bool(true)),
        ("type == 1", Undefined),
        ("type != 'gland'", Bool(false)),
        ("type in ('gland', 'tumor')", Bool(true)),
        ("type in ('tumor', 1)", Bool(false)),
        ("type in (1, 2)", Undefined),
        ("missing in (1)", Undefined),
        ("area / 0 > 1", Undefined),
        ("area / 2 == 60", Bool(true)),
        ("note == null", Bool(true)),
        ("flag and prob >= 0.7", Bool(true)),
        ("-area < 0", Bool(true)),
        ("props['cell id'] * 2 == 10", Bool(true)),
        ("type < 'h'", Bool(true)),
        ("flag > true", Undefined),
        ("area - 20 * 2 + 1", Number(81.0)),
        ("type + 1", Undefined),
        ("area in (-120, 120)", Bool(true)),
    ]
}

/// (source, error offset in characters)
pub const ERRORS: &[(&str, usize)] = &[
    ("a < b < c", 6),
    ("prob >", 6),
    ("(a", 2),
    ("a and", 5),
    ("'abc", 0),
    ("a # b", 2),
    ("x in ()", 6),
    ("x in (y)", 6),
    ("1 2", 2),
    ("", 0),
];

pub fn name() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => prop::sample::select(vec!["prob", "type", "area", "grade", "x", "_y2", "props", "andy", "notes"])
            .prop_map(str::to_string),
        1 => "[ -~]{0,8}",
        1 => "\\PC{0,4}",
    ]
}

pub fn text() -> impl Strategy<Value = String> {
    prop_oneof!["[a-z]{0,6}", "[ -~]{0,8}", "\\PC{0,5}"]
}

pub fn non_negative() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..1000).prop_map(f64::from),
        (0.0..1e6f64),
        prop::sample::select(vec![0.1, 0.5, 1e-9, 1e21, 123456789.125, f64::MAX, f64::MIN_POSITIVE]),
    ]
}

/// Literals the parser can produce outside `in` lists.
pub fn plain_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        non_negative().prop_map(Literal::Number),
        text().prop_map(Literal::Text),
        any::<bool>().prop_map(Literal::Bool),
        Just(Literal::Null),
    ]
}

pub fn member() -> impl Strategy<Value = Literal> {
    prop_oneof![
        3 => plain_literal(),
        1 => non_negative().prop_filter("nonzero", |v| *v != 0.0).prop_map(|v| Literal::Number(-v)),
    ]
}

pub fn binary_op() -> impl Strategy<Value = BinaryOp> {
    prop::sample::select(vec![
        BinaryOp::Or,
        BinaryOp::And,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
    ])
}

/// Random trees of depth ≤ 8 in the image of the parser.
pub fn expr() -> impl Strategy<Value = FilterExpr> {
    let leaf = prop_oneof![plain_literal().prop_map(FilterExpr::Literal), name().prop_map(FilterExpr::Property)];
    leaf.prop_recursive(8, 128, 4, |inner| {
        prop_oneof![
            (prop::sample::select(vec![UnaryOp::Not, UnaryOp::Neg]), inner.clone())
                .prop_map(|(op, e)| FilterExpr::unary(op, e)),
            (binary_op(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| FilterExpr::binary(op, l, r)),
            (inner, prop::collection::vec(member(), 1..5))
                .prop_map(|(e, members)| FilterExpr::In { operand: Box::new(e), members }),
        ]
    })
}

pub fn props_strategy() -> impl Strategy<Value = Properties> {
    let value = prop_oneof![
        (-10.0..10.0f64).prop_map(PropertyValue::Number),
        prop::sample::select(vec!["gland", "lumen", "", "x"]).prop_map(|s| PropertyValue::Text(s.into())),
        any::<bool>().prop_map(PropertyValue::Bool),
        Just(PropertyValue::Null),
    ];
    prop::collection::btree_map(name(), value, 0..6)
}
