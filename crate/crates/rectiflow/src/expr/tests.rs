use super::*;
use crate::Error;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p(src: &str, dim: usize) -> Expression {
    Expression::parse(src, dim).expect("parse")
}

// independent derivative oracle: central difference with Richardson sanity
// check. Returns None when the difference quotient itself has not converged
// at this point (near kinks or in violently curved regions).
fn central_diff(e: &Expression, var: DiffVar, t: f64, x: &[f64]) -> Option<f64> {
    let base = match var {
        DiffVar::Time => t.abs(),
        DiffVar::Spatial(i) => x[i].abs(),
    };
    let h = 6.0e-6 * (1.0 + base);
    let fd = |step: f64| -> Option<f64> {
        let eval = |delta: f64| -> Option<f64> {
            let mut xt = x.to_vec();
            let mut tt = t;
            match var {
                DiffVar::Time => tt += delta,
                DiffVar::Spatial(i) => xt[i] += delta,
            }
            e.eval(tt, &xt).ok()
        };
        Some((eval(step)? - eval(-step)?) / (2.0 * step))
    };
    let d1 = fd(h)?;
    let d2 = fd(h / 2.0)?;
    if (d1 - d2).abs() > 2.5e-6 * (1.0 + d2.abs()) {
        return None;
    }
    Some(d2)
}

#[test]
fn parses_power_structure() {
    let e = p("x1^2", 1);
    assert_eq!(
        e.node(),
        &Node::Pow(Box::new(Node::Var(0)), Box::new(Node::Num(2.0)))
    );
}

#[test]
fn parses_nested_calls() {
    let e = p("2*sqrt(abs(x1))", 1);
    assert_eq!(
        e.node(),
        &Node::Mul(
            Box::new(Node::Num(2.0)),
            Box::new(Node::Call(
                Func::Sqrt,
                Box::new(Node::Call(Func::Abs, Box::new(Node::Var(0))))
            ))
        )
    );
}

#[test]
fn rejects_out_of_range_variable() {
    match Expression::parse("x3", 2) {
        Err(Error::Dimension { index: 3, dim: 2 }) => {}
        other => panic!("expected dimension error, got {other:?}"),
    }
    assert!(matches!(Expression::parse("x0", 2), Err(Error::Dimension { .. })));
}

#[test]
fn reports_syntax_positions() {
    match Expression::parse("1+", 1) {
        Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
        other => panic!("expected syntax error, got {other:?}"),
    }
    assert!(matches!(Expression::parse("", 1), Err(Error::Syntax { .. })));
    assert!(matches!(Expression::parse("sin x1", 1), Err(Error::Syntax { .. })));
    assert!(matches!(Expression::parse("(x1", 1), Err(Error::Syntax { .. })));
    assert!(matches!(Expression::parse("x1)", 1), Err(Error::Syntax { .. })));
    assert!(matches!(Expression::parse("foo(x1)", 1), Err(Error::Syntax { .. })));
}

#[test]
fn parses_constants_and_whitespace() {
    assert_eq!(p("pi", 1).eval(0.0, &[0.0]).unwrap(), std::f64::consts::PI);
    assert_eq!(p(" 2 * e ", 1).eval(0.0, &[0.0]).unwrap(), 2.0 * std::f64::consts::E);
    assert_eq!(p("1e-3", 1).eval(0.0, &[0.0]).unwrap(), 1.0e-3);
    assert_eq!(p(".5+2.", 1).eval(0.0, &[0.0]).unwrap(), 2.5);
}

#[test]
fn precedence_and_associativity() {
    let ev = |s: &str| p(s, 1).eval(0.0, &[3.0]).unwrap();
    assert_eq!(ev("1+2*3"), 7.0);
    assert_eq!(ev("2^3^2"), 512.0); // right-associative
    assert_eq!(ev("6/3/2"), 1.0); // left-associative
    assert_eq!(ev("1-2-3"), -4.0);
    // unary minus binds tighter than ^ in this grammar
    assert_eq!(ev("-x1^2"), 9.0);
    assert_eq!(ev("2*-3"), -6.0);
}

#[test]
fn parse_does_not_rewrite() {
    let e = p("2*3", 1);
    assert_eq!(
        e.node(),
        &Node::Mul(Box::new(Node::Num(2.0)), Box::new(Node::Num(3.0)))
    );
}

#[test]
fn evaluates_examples() {
    assert_eq!(p("x1^2", 1).eval(0.0, &[3.0]).unwrap(), 9.0);
    assert_eq!(p("2*sqrt(abs(x1))", 1).eval(0.0, &[-4.0]).unwrap(), 4.0);
    assert_eq!(p("t", 1).eval(2.5, &[0.0]).unwrap(), 2.5);
    assert!(matches!(p("1/x1", 1).eval(0.0, &[0.0]), Err(Error::Eval(_))));
    assert!(matches!(p("log(x1)", 1).eval(0.0, &[-1.0]), Err(Error::Eval(_))));
    assert!(matches!(p("log(x1)", 1).eval(0.0, &[0.0]), Err(Error::Eval(_))));
    assert!(matches!(p("exp(x1)", 1).eval(0.0, &[1000.0]), Err(Error::Eval(_))));
}

#[test]
fn evaluate_checks_dimension() {
    let e = p("x1+x2", 2);
    assert!(e.evaluate(&EvalPoint::new(0.0, vec![1.0, 2.0])).is_ok());
    assert!(matches!(e.eval(0.0, &[1.0]), Err(Error::InvalidInput(_))));
}

#[test]
fn sign_convention_at_zero() {
    assert_eq!(p("sign(x1)", 1).eval(0.0, &[0.0]).unwrap(), 0.0);
    assert_eq!(p("sign(x1)", 1).eval(0.0, &[-3.0]).unwrap(), -1.0);
    assert_eq!(p("sign(x1)", 1).eval(0.0, &[0.5]).unwrap(), 1.0);
}

#[test]
fn derivative_shapes() {
    assert_eq!(p("x1^2", 1).differentiate(DiffVar::Spatial(0)).to_string(), "2*x1");
    assert_eq!(p("x1^2", 1).differentiate(DiffVar::Time).to_string(), "0");
    assert_eq!(p("sin(t)*x1", 1).differentiate(DiffVar::Spatial(0)).to_string(), "sin(t)");
    assert_eq!(p("abs(x1)", 1).differentiate(DiffVar::Spatial(0)).to_string(), "sign(x1)");
}

#[test]
fn derivatives_match_central_differences_on_examples() {
    let cases = [
        ("x1^2", DiffVar::Spatial(0)),
        ("sin(t)*x1", DiffVar::Spatial(0)),
        ("sin(t)*x1", DiffVar::Time),
        ("exp(x1)*cos(t)", DiffVar::Spatial(0)),
        ("tanh(x1)+t^3", DiffVar::Time),
        ("x1/(1+x1^2)", DiffVar::Spatial(0)),
        ("log(2+abs(x1))", DiffVar::Spatial(0)),
        ("sqrt(1+x1^2)", DiffVar::Spatial(0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (src, var) in cases {
        let e = p(src, 1);
        let d = e.differentiate(var);
        let mut checked = 0;
        while checked < 20 {
            let t = rng.random_range(-2.0..2.0);
            let x = [rng.random_range(-2.0..2.0f64)];
            let Some(fd) = central_diff(&e, var, t, &x) else { continue };
            let sym = d.eval(t, &x).expect("derivative evaluates");
            assert!(
                (sym - fd).abs() <= 1.0e-5 * (1.0 + sym.abs()),
                "{src} d={var:?} at t={t}, x={x:?}: sym {sym} vs fd {fd}"
            );
            checked += 1;
        }
    }
}

#[test]
fn general_power_rule() {
    // non-constant exponent goes through the exp/log form
    let e = p("x1^t", 1);
    let d = e.differentiate(DiffVar::Spatial(0));
    let t = 1.7;
    let x = [2.3];
    let fd = central_diff(&e, DiffVar::Spatial(0), t, &x).unwrap();
    let sym = d.eval(t, &x).unwrap();
    assert!((sym - fd).abs() <= 1.0e-6 * (1.0 + sym.abs()));
}

#[test]
fn substitute_replaces_simultaneously() {
    // swap x1 and x2 through substitution: both replacements see the originals
    let e = p("x1-x2", 2);
    let r = e
        .substitute(None, &[p("x2", 2), p("x1", 2)])
        .unwrap();
    assert_eq!(r.eval(0.0, &[5.0, 3.0]).unwrap(), -2.0);

    let f = p("t+x1", 1);
    let g = f.substitute(Some(&p("t^2", 1)), &[p("2*x1", 1)]).unwrap();
    assert_eq!(g.eval(3.0, &[1.0]).unwrap(), 11.0);
}

#[test]
fn substitute_validates_dimensions() {
    let e = p("x1", 1);
    assert!(e.substitute(None, &[]).is_err());
    assert!(e
        .substitute(Some(&p("t", 2)), &[p("x1", 1)])
        .is_err());
    // substitution may change the ambient dimension
    let widened = e.substitute(None, &[p("x1+x2", 2)]).unwrap();
    assert_eq!(widened.dim(), 2);
    assert_eq!(widened.eval(0.0, &[1.0, 2.0]).unwrap(), 3.0);
}

#[test]
fn time_reference_detection() {
    assert!(p("sin(t)+x1", 1).references_time());
    assert!(!p("2*x1+1", 1).references_time());
    assert!(!p("pi", 1).references_time());
}

#[test]
fn negative_literals_round_trip() {
    let e = p("x1^2", 1).differentiate(DiffVar::Spatial(0)); // 2*x1
    let d2 = e.differentiate(DiffVar::Spatial(0)); // 2
    assert_eq!(d2.to_string(), "2");
    let neg = p("t", 1).differentiate(DiffVar::Spatial(0)); // 0
    assert_eq!(neg.to_string(), "0");
    for src in ["-2.5", "3*-1.5", "2^-3", "t--2"] {
        let e = p(src, 1);
        let rt = p(&e.to_string(), 1);
        assert_eq!(e.node(), rt.node(), "round trip of {src}");
    }
}

// --- property tests ---

fn leaf_strategy(dim: usize) -> BoxedStrategy<Node> {
    prop_oneof![
        (0.0..4.0f64).prop_map(Node::Num),
        Just(Node::Time),
        (0..dim).prop_map(Node::Var),
    ]
    .boxed()
}

fn ast_strategy(dim: usize) -> BoxedStrategy<Node> {
    leaf_strategy(dim)
        .prop_recursive(4, 24, 2, move |inner| {
            let bin = |l: BoxedStrategy<Node>, r: BoxedStrategy<Node>| (l, r);
            prop_oneof![
                bin(inner.clone().boxed(), inner.clone().boxed())
                    .prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
                bin(inner.clone().boxed(), inner.clone().boxed())
                    .prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
                bin(inner.clone().boxed(), inner.clone().boxed())
                    .prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
                bin(inner.clone().boxed(), inner.clone().boxed())
                    .prop_map(|(a, b)| Node::Div(Box::new(a), Box::new(b))),
                bin(inner.clone().boxed(), inner.clone().boxed())
                    .prop_map(|(a, b)| Node::Pow(Box::new(a), Box::new(b))),
                // the parser folds "-literal" into the literal, so generated
                // trees never place Neg directly around a number
                inner.clone().prop_map(|a| {
                    if matches!(a, Node::Num(_)) {
                        Node::Neg(Box::new(Node::Add(Box::new(a), Box::new(Node::Time))))
                    } else {
                        Node::Neg(Box::new(a))
                    }
                }),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Tan),
                        Just(Func::Exp),
                        Just(Func::Log),
                        Just(Func::Sqrt),
                        Just(Func::Abs),
                        Just(Func::Tanh),
                        Just(Func::Sign),
                    ],
                    inner
                )
                    .prop_map(|(f, a)| Node::Call(f, Box::new(a))),
            ]
        })
        .boxed()
}

// smooth subset for derivative checks: no kinks, no poles, tame growth
fn smooth_strategy(dim: usize) -> BoxedStrategy<Node> {
    let leaf = prop_oneof![
        (0.1..2.0f64).prop_map(Node::Num),
        Just(Node::Time),
        (0..dim).prop_map(Node::Var),
    ]
    .boxed();
    leaf.prop_recursive(3, 12, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 2..4u32)
                .prop_map(|(a, k)| Node::Pow(Box::new(a), Box::new(Node::Num(k as f64)))),
            (
                prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Tanh)],
                inner
            )
                .prop_map(|(f, a)| Node::Call(f, Box::new(a))),
        ]
    })
    .boxed()
}

proptest! {
    #[test]
    fn print_parse_round_trip(node in ast_strategy(3)) {
        let e = Expression::from_node(node, 3).unwrap();
        let text = e.to_string();
        let back = Expression::parse(&text, 3)
            .unwrap_or_else(|err| panic!("re-parse of '{text}' failed: {err}"));
        prop_assert_eq!(e.node(), back.node(), "printed form: {}", text);
    }

    #[test]
    fn smooth_derivatives_match_difference_quotients(
        node in smooth_strategy(2),
        t in -1.0..1.0f64,
        x0 in -1.0..1.0f64,
        x1 in -1.0..1.0f64,
    ) {
        let e = Expression::from_node(node, 2).unwrap();
        let x = [x0, x1];
        // keep the scale sane so the quotient oracle is trustworthy
        prop_assume!(matches!(e.eval(t, &x), Ok(v) if v.abs() < 1.0e4));
        for var in [DiffVar::Time, DiffVar::Spatial(0), DiffVar::Spatial(1)] {
            let d = e.differentiate(var);
            let Ok(sym) = d.eval(t, &x) else { continue };
            prop_assume!(sym.abs() < 1.0e4);
            let Some(fd) = central_diff(&e, var, t, &x) else { continue };
            prop_assert!(
                (sym - fd).abs() <= 1.0e-5 * (1.0 + sym.abs().max(fd.abs())),
                "{} d{:?}: sym {} vs fd {}", e, var, sym, fd
            );
        }
    }

    #[test]
    fn folded_derivative_agrees_with_unfolded_rules(node in ast_strategy(2)) {
        // folding must never change values where both sides evaluate
        let e = Expression::from_node(node.clone(), 2).unwrap();
        let d = e.differentiate(DiffVar::Spatial(0));
        let raw = Expression::from_node(diff_node(&node, DiffVar::Spatial(0)), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let t = rng.random_range(-2.0..2.0);
            let x = [rng.random_range(-2.0..2.0f64), rng.random_range(-2.0..2.0f64)];
            if let (Ok(a), Ok(b)) = (raw.eval(t, &x), d.eval(t, &x)) {
                prop_assert!(
                    (a - b).abs() <= 1.0e-9 * (1.0 + a.abs()),
                    "fold changed value: {a} vs {b}"
                );
            }
        }
    }
}
