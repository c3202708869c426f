use std::collections::HashMap;

use calabi_core::exprlang::{bump, BinOp, ExprError, Expression, Func, Node};
use proptest::prelude::*;

/// Source text and its fully parenthesised tree, covering every pair of
/// binary operators plus unary minus and calls.
const CORPUS: [(&str, &str); 22] = [
    ("1+2*3", "(1.0 + (2.0 * 3.0))"),
    ("1*2+3", "((1.0 * 2.0) + 3.0)"),
    ("1-2-3", "((1.0 - 2.0) - 3.0)"),
    ("8/4/2", "((8.0 / 4.0) / 2.0)"),
    ("2^3^2", "(2.0 ^ (3.0 ^ 2.0))"),
    ("-2^2", "(-(2.0 ^ 2.0))"),
    ("-q1*p1", "((-q1) * p1)"),
    ("a-b+c", "((a - b) + c)"),
    ("a+b-c", "((a + b) - c)"),
    ("a*b/c", "((a * b) / c)"),
    ("a/b*c", "((a / b) * c)"),
    ("a+b^2", "(a + (b ^ 2.0))"),
    ("a*b^2", "(a * (b ^ 2.0))"),
    ("a^2/b", "((a ^ 2.0) / b)"),
    ("a^-b", "(a ^ (-b))"),
    ("(a+b)*c", "((a + b) * c)"),
    ("a-(b-c)", "(a - (b - c))"),
    ("--a", "(-(-a))"),
    ("sin(q1)^2+cos(q1)^2", "((sin(q1) ^ 2.0) + (cos(q1) ^ 2.0))"),
    ("max(0, 1-r^2)^3", "(max(0.0, (1.0 - (r ^ 2.0))) ^ 3.0)"),
    (
        "exp(t)*q1 - bump(sqrt(x1^2+eta1^2))/2",
        "((exp(t) * q1) - (bump(sqrt(((x1 ^ 2.0) + (eta1 ^ 2.0)))) / 2.0))",
    ),
    ("pow(a, b) - a/b/c*d", "(pow(a, b) - (((a / b) / c) * d))"),
];

fn bindings() -> HashMap<String, f64> {
    [
        ("a", 1.7),
        ("b", 0.6),
        ("c", -2.3),
        ("d", 0.9),
        ("q1", 0.4),
        ("p1", -1.1),
        ("r", 0.3),
        ("t", 0.2),
        ("x1", 0.25),
        ("eta1", -0.35),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[test]
fn corpus_parses_to_documented_trees() {
    for (src, tree) in CORPUS {
        let e = Expression::parse(src).unwrap();
        assert_eq!(e.print(), tree, "{src}");
    }
}

#[test]
fn corpus_round_trips_exactly() {
    let env = bindings();
    for (src, _) in CORPUS {
        let e = Expression::parse(src).unwrap();
        let again = Expression::parse(&e.print()).unwrap();
        assert_eq!(again.ast(), e.ast(), "{src}");
        let (v, w) = (e.evaluate(&env).unwrap(), again.evaluate(&env).unwrap());
        assert_eq!(v.to_bits(), w.to_bits(), "{src}");
    }
}

#[test]
fn documented_values() {
    let at = |src: &str, pairs: &[(&str, f64)]| {
        let env: HashMap<String, f64> = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Expression::parse(src).unwrap().evaluate(&env).unwrap()
    };
    assert_eq!(at("q1^2+p1^2", &[("q1", 3.0), ("p1", 4.0)]), 25.0);
    assert_eq!(at("-2^2", &[]), -4.0);
    assert_eq!(at("bump(0)", &[]), 1.0);
    assert_eq!(at("bump(1)", &[]), 0.0);
    assert_eq!(at("bump(2)", &[]), 0.0);
    assert!((at("exp(t)*q1", &[("t", 0.2), ("q1", 2.0)]) - 2.442805).abs() < 1e-6);
}

#[test]
fn syntax_error_reports_offset() {
    match Expression::parse("sin(") {
        Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
        other => panic!("{other:?}"),
    }
    assert!(matches!(Expression::parse("foo(1)"), Err(ExprError::UnknownFunction { .. })));
}

#[test]
fn missing_and_domain_errors_are_reported() {
    let e = Expression::parse("log(q1) + p1").unwrap();
    let mut env = HashMap::new();
    env.insert("q1".to_string(), 1.0);
    assert!(matches!(e.evaluate(&env), Err(ExprError::MissingBinding(_))));
    env.insert("p1".to_string(), 0.0);
    env.insert("q1".to_string(), -1.0);
    assert!(matches!(e.evaluate(&env), Err(ExprError::Domain(_))));
    let div = Expression::parse("1/q1").unwrap();
    env.insert("q1".to_string(), 0.0);
    assert!(matches!(div.evaluate(&env), Err(ExprError::Domain(_))));
}

fn arb_node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|k| Node::Number(k as f64 / 8.0)),
        prop::sample::select(vec!["a", "b", "q1", "eta1"]).prop_map(|s| Node::Var(s.to_string())),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|n| Node::Neg(Box::new(n))),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
            (prop::sample::select(vec![Func::Sin, Func::Cos, Func::Abs, Func::Bump]), inner.clone())
                .prop_map(|(f, a)| Node::Call(f, vec![a])),
            (prop::sample::select(vec![Func::Min, Func::Max]), inner.clone(), inner)
                .prop_map(|(f, a, b)| Node::Call(f, vec![a, b])),
        ]
    })
}

proptest! {
    #[test]
    fn printed_trees_reparse_identically(node in arb_node()) {
        let printed = node.to_string();
        let e = Expression::parse(&printed).unwrap();
        prop_assert_eq!(e.ast(), &node);
        let env: HashMap<String, f64> =
            [("a", 0.7), ("b", -1.3), ("q1", 2.1), ("eta1", 0.05)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let again = Expression::parse(&e.print()).unwrap();
        match (e.evaluate(&env), again.evaluate(&env)) {
            (Ok(v), Ok(w)) => prop_assert_eq!(v.to_bits(), w.to_bits()),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn bump_is_supported_in_unit_interval(s in -3.0f64..3.0) {
        let b = bump(s);
        prop_assert!((0.0..=1.0).contains(&b));
        if s.abs() >= 1.0 {
            prop_assert_eq!(b, 0.0);
        } else if s.abs() < 0.9 {
            prop_assert!(b > 0.0);
        }
    }
}
